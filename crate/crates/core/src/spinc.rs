//! Spin^c connection, Dirac operator and spinor curvature on a chart.
//!
//! Spinor fields are expressed in the trivialization induced by the
//! Gram–Schmidt frame of the chart.

use std::sync::Arc;

use crate::clifford::{build_gamma_rep, GammaRep};
use crate::error::{Error, Result};
use crate::geometry::deriv::{partial, FdValue};
use crate::geometry::jet::{geometry_jet, jet_reach, GeometryJet, JetLevel};
use crate::geometry::Scenario;
use crate::linalg::{c, i_pow, CMat, CVec, RMat, I};

/// A smooth spinor field in frame-trivialized components.
pub trait SpinorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<CVec>;
}

pub type SmoothSpinorField = Arc<dyn SpinorField>;

type FieldFn = dyn Fn(&[f64]) -> Result<CVec> + Send + Sync;

pub struct FnField {
    dim: usize,
    f: Box<FieldFn>,
}

impl SpinorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> Result<CVec> {
        let v = (self.f)(x)?;
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(v)
    }
}

pub fn field_fn(dim: usize, f: impl Fn(&[f64]) -> Result<CVec> + Send + Sync + 'static) -> SmoothSpinorField {
    Arc::new(FnField { dim, f: Box::new(f) })
}

pub fn constant_field(sigma: CVec) -> SmoothSpinorField {
    let d = sigma.len();
    field_fn(d, move |_| Ok(sigma.clone()))
}

/// `e^{i p·x} σ`.
pub fn plane_wave(p: Vec<f64>, sigma: CVec) -> SmoothSpinorField {
    let d = sigma.len();
    field_fn(d, move |x| {
        let phase: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
        Ok(&sigma * c(phase.cos(), phase.sin()))
    })
}

/// Chart plus its spinor representation.
#[derive(Clone, Debug)]
pub struct SpinChart {
    pub scenario: Arc<Scenario>,
    pub rep: Arc<GammaRep>,
}

impl SpinChart {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.require_pointwise()?;
        let sig = scenario.signature;
        let rep = build_gamma_rep(sig.r, sig.s, false)?;
        Ok(SpinChart { scenario: Arc::new(scenario), rep: Arc::new(rep) })
    }

    pub fn dim(&self) -> usize {
        self.scenario.dim()
    }

    pub fn spinor_dim(&self) -> usize {
        self.rep.dim()
    }
}

/// Connection data at one point: `∇_{e_k} = e_k + S_k`.
#[derive(Clone, Debug)]
pub struct SpincConnectionJet {
    pub geometry: GeometryJet,
    /// `a(e_k)`.
    pub a_frame: Vec<f64>,
    pub spin: Vec<CMat>,
    /// `Ω(e_i, e_j)` with `Ω = da`.
    pub omega_form: RMat,
}

pub fn spin_matrices(rep: &GammaRep, jet: &GeometryJet, a_frame: &[f64]) -> Vec<CMat> {
    spin_matrices_with(&rep.gammas, jet, a_frame)
}

/// Spin matrices with `gens[j]` standing in for `e_j·`; any family with the
/// Clifford relations of the frame (e.g. `ν·e_j·` on an ambient space) works.
pub fn spin_matrices_with(gens: &[CMat], jet: &GeometryJet, a_frame: &[f64]) -> Vec<CMat> {
    let n = jet.n();
    let d = gens[0].nrows();
    let eps = &jet.eps;
    (0..n)
        .map(|k| {
            let mut s = CMat::zeros(d, d);
            for j in 0..n {
                for l in 0..n {
                    let w = 0.25 * eps[j] * eps[l] * jet.omega[k][(j, l)];
                    if w != 0.0 {
                        s += &gens[j] * &gens[l] * c(w, 0.0);
                    }
                }
            }
            s + CMat::identity(d, d) * (I * (0.5 * a_frame[k]))
        })
        .collect()
}

/// Frame components of `da` at `x`.
pub fn curvature_two_form(sc: &Scenario, jet: &GeometryJet) -> Result<RMat> {
    let n = jet.n();
    if sc.connection.is_none() {
        return Ok(RMat::zeros(n, n));
    }
    let a = |y: &[f64]| -> Result<Vec<f64>> { Ok(sc.connection_at(y)) };
    let da: Vec<Vec<f64>> = (0..n).map(|mu| partial(&a, &jet.point, mu)).collect::<Result<_>>()?;
    // F_{μν} = ∂_μ a_ν - ∂_ν a_μ
    let f = RMat::from_fn(n, n, |mu, nu| da[mu][nu] - da[nu][mu]);
    let out = jet.tensor_on_frame(&f);
    Ok((&out - out.transpose()) * 0.5)
}

pub fn connection_jet(chart: &SpinChart, x: &[f64], level: JetLevel) -> Result<SpincConnectionJet> {
    let sc = &chart.scenario;
    let geometry = geometry_jet(sc, x, level)?;
    let a_frame = geometry.covector_on_frame(&sc.connection_at(x));
    let spin = spin_matrices(&chart.rep, &geometry, &a_frame);
    let omega_form = curvature_two_form(sc, &geometry)?;
    Ok(SpincConnectionJet { geometry, a_frame, spin, omega_form })
}

/// `∇_{e_k} ψ` for every frame index, with a precomputed jet.
pub fn covariant_derivatives_with(jet: &SpincConnectionJet, field: &dyn SpinorField) -> Result<Vec<CVec>> {
    let x = &jet.geometry.point;
    let n = x.len();
    let f = |y: &[f64]| field.eval(y);
    let psi = field.eval(x)?;
    let dpsi: Vec<CVec> = (0..n).map(|mu| partial(&f, x, mu)).collect::<Result<_>>()?;
    let e = &jet.geometry.frame;
    Ok((0..n)
        .map(|k| {
            let mut v = &jet.spin[k] * &psi;
            for (mu, d) in dpsi.iter().enumerate() {
                v.add_scaled(e[(mu, k)], d);
            }
            v
        })
        .collect())
}

pub fn covariant_derivatives(field: &dyn SpinorField, chart: &SpinChart, x: &[f64]) -> Result<Vec<CVec>> {
    check_field(field, chart)?;
    let jet = connection_jet(chart, x, JetLevel::Connection)?;
    covariant_derivatives_with(&jet, field)
}

pub fn covariant_derivative(field: &dyn SpinorField, chart: &SpinChart, x: &[f64], k: usize) -> Result<CVec> {
    if k >= chart.dim() {
        return Err(Error::DimensionMismatch { expected: chart.dim(), got: k });
    }
    Ok(covariant_derivatives(field, chart, x)?.swap_remove(k))
}

/// Derivative along an arbitrary tangent vector given in frame components.
pub fn covariant_derivative_along(field: &dyn SpinorField, chart: &SpinChart, x: &[f64], v: &[f64]) -> Result<CVec> {
    let all = covariant_derivatives(field, chart, x)?;
    let mut out = CVec::zeros(chart.spinor_dim());
    for (vk, d) in v.iter().zip(&all) {
        out.add_scaled(*vk, d);
    }
    Ok(out)
}

/// `i^s Σ_j ε_j γ_j ∇_{e_j}`, given all covariant derivatives.
pub fn dirac_from_derivatives(rep: &GammaRep, derivs: &[CVec]) -> CVec {
    let sig = rep.signature;
    let mut out = CVec::zeros(rep.dim());
    for (j, d) in derivs.iter().enumerate() {
        out += &rep.gammas[j] * d * c(sig.eps(j), 0.0);
    }
    out * i_pow(sig.s as i64)
}

pub fn dirac_pointwise(field: &dyn SpinorField, chart: &SpinChart, x: &[f64]) -> Result<CVec> {
    let derivs = covariant_derivatives(field, chart, x)?;
    Ok(dirac_from_derivatives(&chart.rep, &derivs))
}

fn check_field(field: &dyn SpinorField, chart: &SpinChart) -> Result<()> {
    if field.dim() != chart.spinor_dim() {
        return Err(Error::DimensionMismatch { expected: chart.spinor_dim(), got: field.dim() });
    }
    Ok(())
}

/// `R^Σ(e_i, e_j)` as a matrix, from a curvature-level jet.
pub fn spinor_curvature_matrix(rep: &GammaRep, jet: &SpincConnectionJet, i: usize, j: usize) -> CMat {
    let g = &jet.geometry;
    let curv = g.curvature();
    let n = g.n();
    let d = rep.dim();
    let mut m = CMat::zeros(d, d);
    for k in 0..n {
        for l in 0..n {
            let w = 0.25 * g.eps[k] * g.eps[l] * curv.r(i, j, k, l);
            if w != 0.0 {
                m += &rep.gammas[k] * &rep.gammas[l] * c(w, 0.0);
            }
        }
    }
    m + CMat::identity(d, d) * (I * (0.5 * jet.omega_form[(i, j)]))
}

pub fn spinor_curvature(chart: &SpinChart, x: &[f64], i: usize, j: usize, sigma: &CVec) -> Result<CVec> {
    chart.rep.check_spinor(sigma)?;
    let jet = connection_jet(chart, x, JetLevel::Curvature)?;
    Ok(spinor_curvature_matrix(&chart.rep, &jet, i, j) * sigma)
}

struct DerivedField {
    inner: SmoothSpinorField,
    chart: SpinChart,
    k: usize,
}

impl SpinorField for DerivedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<CVec> {
        let jet = connection_jet(&self.chart, x, JetLevel::Connection)?;
        let x0 = &jet.geometry.point;
        let f = |y: &[f64]| self.inner.eval(y);
        let mut v = &jet.spin[self.k] * self.inner.eval(x0)?;
        for mu in 0..x0.len() {
            let w = jet.geometry.frame[(mu, self.k)];
            if w != 0.0 {
                v.add_scaled(w, &partial(&f, x0, mu)?);
            }
        }
        Ok(v)
    }
}

/// The field `y ↦ ∇_{e_k} ψ(y)`.
pub fn derived_field(field: SmoothSpinorField, chart: &SpinChart, k: usize) -> SmoothSpinorField {
    Arc::new(DerivedField { inner: field, chart: chart.clone(), k })
}

/// `∇_{e_i}∇_{e_j}ψ - ∇_{e_j}∇_{e_i}ψ - ∇_{[e_i,e_j]}ψ` by nested differentiation.
pub fn curvature_commutator(field: SmoothSpinorField, chart: &SpinChart, x: &[f64], i: usize, j: usize) -> Result<CVec> {
    check_field(field.as_ref(), chart)?;
    chart.scenario.domain.require_interior(x, 2.0 * jet_reach(JetLevel::Connection))?;
    let jet = connection_jet(chart, x, JetLevel::Connection)?;
    let yj = derived_field(field.clone(), chart, j);
    let yi = derived_field(field.clone(), chart, i);
    let dij = covariant_derivatives_with(&jet, yj.as_ref())?.swap_remove(i);
    let dji = covariant_derivatives_with(&jet, yi.as_ref())?.swap_remove(j);
    let first = covariant_derivatives_with(&jet, field.as_ref())?;
    let br = jet.geometry.bracket(i, j);
    let mut out = dij - dji;
    for (l, cl) in br.iter().enumerate() {
        out.add_scaled(-cl, &first[l]);
    }
    Ok(out)
}

/// `Σ_k ε_k e_k·R^Σ(e_k,X)σ - ½ Ric(X)·σ + (i/2)(X⌟Ω)·σ`; zero by the Ricci identity.
pub fn ricci_identity_residual(chart: &SpinChart, x: &[f64], v: &[f64], sigma: &CVec) -> Result<CVec> {
    let rep = &chart.rep;
    rep.check_spinor(sigma)?;
    let jet = connection_jet(chart, x, JetLevel::Curvature)?;
    let g = &jet.geometry;
    let n = g.n();
    let d = rep.dim();
    let mut lhs = CMat::zeros(d, d);
    for k in 0..n {
        let mut rk = CMat::zeros(d, d);
        for (j, vj) in v.iter().enumerate() {
            if *vj != 0.0 {
                rk += spinor_curvature_matrix(rep, &jet, k, j) * c(*vj, 0.0);
            }
        }
        lhs += &rep.gammas[k] * rk * c(g.eps[k], 0.0);
    }
    let ric = &g.curvature().ricci;
    let ricv: Vec<f64> = (0..n).map(|l| g.eps[l] * (0..n).map(|j| v[j] * ric[(j, l)]).sum::<f64>()).collect();
    let contr: Vec<f64> =
        (0..n).map(|l| g.eps[l] * (0..n).map(|j| v[j] * jet.omega_form[(j, l)]).sum::<f64>()).collect();
    let rhs = rep.clifford_matrix(&ricv)? * c(0.5, 0.0) - rep.clifford_matrix(&contr)? * (I * 0.5);
    Ok((lhs - rhs) * sigma)
}
