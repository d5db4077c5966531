//! Energy-momentum tensor of a spinor field, Killing and Codazzi residuals.

use std::sync::Arc;

use crate::clifford::GammaRep;
use crate::error::{Error, Result};
use crate::geometry::deriv::partial;
use crate::geometry::jet::{GeometryJet, JetLevel};
use crate::linalg::{c, CVec, RMat};
use crate::spinc::{connection_jet, covariant_derivatives_with, SpinChart, SpinorField};

/// Endomorphism field as a coordinate matrix `F^a_b`.
pub type EndoFn = Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>;

/// Default norm floor below which `ℓ = T/|ψ|²` is not formed.
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EmTensorValue {
    /// Frame components `T(e_i, e_j)`.
    pub t: RMat,
    /// `Re⟨ψ, ψ⟩`.
    pub norm_sq: f64,
    /// `T / |ψ|²`, absent where `|ψ|²` is below the floor.
    pub ell: Option<RMat>,
}

/// `T_ij = ½ Re⟨e_i·∇_jψ + e_j·∇_iψ, ψ⟩`.
pub fn em_from_derivatives(rep: &GammaRep, psi: &CVec, derivs: &[CVec]) -> RMat {
    let n = derivs.len();
    let clif: Vec<CVec> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| &rep.gammas[i] * &derivs[j])
        .collect();
    RMat::from_fn(n, n, |i, j| {
        let s = &clif[i * n + j] + &clif[j * n + i];
        0.5 * rep.pairing(&s, psi).re
    })
}

pub fn em_value(rep: &GammaRep, psi: &CVec, derivs: &[CVec], floor: f64) -> EmTensorValue {
    let t = em_from_derivatives(rep, psi, derivs);
    let norm_sq = rep.pairing(psi, psi).re;
    let ell = if norm_sq.abs() > floor { Some(&t / norm_sq) } else { None };
    EmTensorValue { t, norm_sq, ell }
}

pub fn em_tensor(field: &dyn SpinorField, chart: &SpinChart, x: &[f64], floor: f64) -> Result<EmTensorValue> {
    let jet = connection_jet(chart, x, JetLevel::Connection)?;
    let derivs = covariant_derivatives_with(&jet, field)?;
    let psi = field.eval(x)?;
    Ok(em_value(&chart.rep, &psi, &derivs, floor))
}

/// Frame components of the vector `F(e_k)`.
pub fn endo_on_frame(jet: &GeometryJet, f: &RMat, k: usize) -> Vec<f64> {
    let v: Vec<f64> = (f * jet.frame.column(k)).iter().copied().collect();
    jet.to_frame(&v)
}

/// Checks `g F` is symmetric.
pub fn check_symmetric(jet: &GeometryJet, f: &RMat) -> Result<()> {
    let gf = &jet.g * f;
    let defect = (&gf - gf.transpose()).abs().max();
    if defect > 1e-9 * gf.abs().max().max(1.0) {
        return Err(Error::Precondition(format!("endomorphism is not self-adjoint ({defect:e})")));
    }
    Ok(())
}

/// `∇_{e_k}ψ - ½ F(e_k)·ψ` for every frame index.
pub fn killing_residuals(field: &dyn SpinorField, chart: &SpinChart, x: &[f64], f: &EndoFn) -> Result<Vec<CVec>> {
    let jet = connection_jet(chart, x, JetLevel::Connection)?;
    let fx = f(x);
    check_symmetric(&jet.geometry, &fx)?;
    let derivs = covariant_derivatives_with(&jet, field)?;
    let psi = field.eval(x)?;
    (0..chart.dim())
        .map(|k| {
            let v = endo_on_frame(&jet.geometry, &fx, k);
            Ok(&derivs[k] - chart.rep.clifford_action(&v, &psi)? * c(0.5, 0.0))
        })
        .collect()
}

pub fn killing_residual(field: &dyn SpinorField, chart: &SpinChart, x: &[f64], f: &EndoFn, k: usize) -> Result<CVec> {
    Ok(killing_residuals(field, chart, x, f)?.swap_remove(k))
}

/// Coordinate components `(∇_c F)^a_b`.
pub fn covariant_derivative_endo(jet: &GeometryJet, f: &EndoFn) -> Result<Vec<RMat>> {
    let n = jet.n();
    let x = &jet.point;
    let fx = f(x);
    let ff = |y: &[f64]| -> Result<RMat> { Ok(f(y)) };
    let df: Vec<RMat> = (0..n).map(|mu| partial(&ff, x, mu)).collect::<Result<_>>()?;
    let gam = &jet.christoffel;
    Ok((0..n)
        .map(|cc| {
            RMat::from_fn(n, n, |a, b| {
                let mut s = df[cc][(a, b)];
                for d in 0..n {
                    s += gam[a][(cc, d)] * fx[(d, b)] - gam[d][(cc, b)] * fx[(a, d)];
                }
                s
            })
        })
        .collect())
}

/// `(∇_{e_i}F)(e_j) - (∇_{e_j}F)(e_i)` in frame components.
pub fn codazzi_residual(f: &EndoFn, chart: &SpinChart, x: &[f64], i: usize, j: usize) -> Result<Vec<f64>> {
    let jet = crate::geometry::geometry_jet(&chart.scenario, x, JetLevel::Connection)?;
    codazzi_with(&jet, f, i, j)
}

pub fn codazzi_with(jet: &GeometryJet, f: &EndoFn, i: usize, j: usize) -> Result<Vec<f64>> {
    let n = jet.n();
    let nf = covariant_derivative_endo(jet, f)?;
    let apply = |x: usize, y: usize| -> nalgebra::DVector<f64> {
        let mut m = RMat::zeros(n, n);
        for cc in 0..n {
            m += &nf[cc] * jet.frame[(cc, x)];
        }
        m * jet.frame.column(y)
    };
    let v = apply(i, j) - apply(j, i);
    Ok(jet.to_frame(v.as_slice()))
}

/// Largest Euclidean norm among a list of spinors.
pub fn max_norm(vs: &[CVec]) -> f64 {
    vs.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// CSV dump `x0..,t_ij (i ≤ j)..,norm_sq` of the tensor at `points`.
pub fn em_field_csv(field: &dyn SpinorField, chart: &SpinChart, points: &[Vec<f64>], floor: f64) -> Result<String> {
    let n = chart.dim();
    let mut out = String::new();
    let head: Vec<String> = (0..n)
        .map(|a| format!("x{a}"))
        .chain((0..n).flat_map(|i| (i..n).map(move |j| format!("t{i}{j}"))))
        .chain(std::iter::once("norm_sq".to_string()))
        .collect();
    out.push_str(&head.join(","));
    out.push('\n');
    for x in points {
        let v = em_tensor(field, chart, x, floor)?;
        let row: Vec<String> = x
            .iter()
            .copied()
            .chain((0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| v.t[(i, j)]))
            .chain(std::iter::once(v.norm_sq))
            .map(|f| format!("{f:.16e}"))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}
