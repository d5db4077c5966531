//! Restriction of ambient spinors to a hypersurface and the spinorial Gauss
//! formulas.
//!
//! Ambient spinors at `x(u)` are re-expressed in the adapted frame
//! `(ν, x_* e_1, …, x_* e_n)` through the spin lift `Λ(u)` of the frame change
//! from the ambient Gram–Schmidt frame; `σ' = Λ^{-1} ψ`.

use std::sync::Arc;

use crate::clifford::{alpha_embed, spin_lift, AlphaEmbedding};
use crate::emtensor::{em_value, NORM_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::deriv::{partial, second_partial};
use crate::geometry::jet::{geometry_jet, GeometryJet, JetLevel};
use crate::geometry::{orthonormal_frame, Scenario};
use crate::linalg::{c, i_pow, inverse, CMat, CVec, RMat};
use crate::spinc::{
    connection_jet, covariant_derivatives_with, dirac_from_derivatives, field_fn, SmoothSpinorField, SpinChart,
    SpincConnectionJet, SpinorField,
};

pub type PointMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Largest parameter step between consecutive spin lifts along a continuation path.
const LIFT_STEP: f64 = 0.05;

#[derive(Clone)]
pub struct Immersion {
    pub name: String,
    /// Hypersurface chart; its connection is the pullback of the ambient one.
    pub base: SpinChart,
    pub ambient: SpinChart,
    pub embedding: PointMap,
    /// Ambient coordinate components of the unit normal at `x(u)`.
    pub normal: PointMap,
    /// Start of the spin-lift continuation.
    pub anchor: Vec<f64>,
    pub alpha: Arc<AlphaEmbedding>,
    anchor_lift: CMat,
}

impl std::fmt::Debug for Immersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Immersion").field("name", &self.name).finish()
    }
}

/// Adapted-frame data at one hypersurface point.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub x: Vec<f64>,
    /// `∂x/∂u`, ambient × base.
    pub jacobian: RMat,
    pub normal: Vec<f64>,
    /// Columns: ambient-frame components of `ν, x_* e_1, …`.
    pub q: RMat,
}

fn pullback_connection(ambient: &Scenario, embedding: PointMap, nb: usize) -> crate::geometry::CovectorFn {
    let amb = ambient.clone();
    Arc::new(move |u: &[f64]| {
        let x = embedding(u);
        let a = amb.connection_at(&x);
        let f = |v: &[f64]| -> Result<Vec<f64>> { Ok(embedding(v)) };
        (0..nb)
            .map(|mu| {
                let col = partial(&f, u, mu).expect("embedding is total");
                col.iter().zip(&a).map(|(j, ai)| j * ai).sum()
            })
            .collect()
    })
}

impl Immersion {
    pub fn new(
        name: &str,
        base: Scenario,
        ambient: Scenario,
        embedding: PointMap,
        normal: PointMap,
        anchor: Vec<f64>,
    ) -> Result<Self> {
        let nb = base.dim();
        if ambient.dim() != nb + 1 || ambient.signature.r != base.signature.r + 1 {
            return Err(Error::Construction("ambient must have one more positive direction".into()));
        }
        let mut base = base;
        if ambient.connection.is_some() {
            base.connection = Some(pullback_connection(&ambient, embedding.clone(), nb));
        }
        let base = SpinChart::new(base)?;
        let ambient = SpinChart::new(ambient)?;
        let alpha = Arc::new(alpha_embed(&base.rep, &ambient.rep)?);
        let mut imm = Immersion {
            name: name.to_string(),
            base,
            ambient,
            embedding,
            normal,
            anchor: anchor.clone(),
            alpha,
            anchor_lift: CMat::zeros(0, 0),
        };
        let fr = imm.adapted_frame(&anchor)?;
        let induced = fr.jacobian.transpose() * imm.ambient.scenario.metric_at(&fr.x)? * &fr.jacobian;
        let mismatch = (induced - imm.base.scenario.metric_at(&anchor)?).abs().max();
        if mismatch > 1e-8 {
            return Err(Error::Construction(format!("induced metric differs from the base metric ({mismatch:e})")));
        }
        imm.anchor_lift = spin_lift(&imm.ambient.rep, &fr.q, None)?;
        Ok(imm)
    }

    pub fn jacobian(&self, u: &[f64]) -> Result<RMat> {
        let f = |v: &[f64]| -> Result<Vec<f64>> { Ok((self.embedding)(v)) };
        let cols: Vec<Vec<f64>> = (0..u.len()).map(|mu| partial(&f, u, mu)).collect::<Result<_>>()?;
        let na = self.ambient.dim();
        Ok(RMat::from_fn(na, u.len(), |i, j| cols[j][i]))
    }

    pub fn adapted_frame(&self, u: &[f64]) -> Result<AdaptedFrame> {
        let x = (self.embedding)(u);
        let gz = self.ambient.scenario.metric_at(&x)?;
        let ez = orthonormal_frame(&gz, self.ambient.scenario.signature)?;
        let gm = self.base.scenario.metric_at(u)?;
        let em = orthonormal_frame(&gm, self.base.scenario.signature)?;
        let jac = self.jacobian(u)?;
        let mut nu = nalgebra::DVector::from_vec((self.normal)(u));
        let nn = (nu.transpose() * &gz * &nu)[(0, 0)];
        if nn <= 0.0 {
            return Err(Error::Precondition("normal is not spacelike".into()));
        }
        nu /= nn.sqrt();
        let orth = (jac.transpose() * &gz * &nu).abs().max();
        if orth > 1e-8 {
            return Err(Error::Precondition(format!("normal is not orthogonal to the hypersurface ({orth:e})")));
        }
        let na = self.ambient.dim();
        let eps = self.ambient.scenario.signature.eps_vec();
        let comps = |v: &nalgebra::DVector<f64>| -> Vec<f64> {
            let gv = &gz * v;
            (0..na).map(|b| eps[b] * ez.column(b).dot(&gv)).collect()
        };
        let mut cols = vec![comps(&nu)];
        for j in 0..self.base.dim() {
            cols.push(comps(&(&jac * em.column(j))));
        }
        let q = RMat::from_fn(na, na, |b, a| cols[a][b]);
        if q.determinant() <= 0.0 {
            return Err(Error::Precondition("adapted frame has the wrong orientation".into()));
        }
        Ok(AdaptedFrame { x, jacobian: jac, normal: nu.iter().copied().collect(), q })
    }

    /// Spin lift `Λ(u)`, continued along the straight segment from the anchor.
    pub fn lift(&self, u: &[f64]) -> Result<CMat> {
        let dist = u.iter().zip(&self.anchor).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let steps = (dist / LIFT_STEP).ceil().max(1.0) as usize;
        let mut lam = self.anchor_lift.clone();
        for k in 1..=steps {
            let s = k as f64 / steps as f64;
            let v: Vec<f64> = self.anchor.iter().zip(u).map(|(a, b)| a + s * (b - a)).collect();
            let fr = self.adapted_frame(&v)?;
            lam = spin_lift(&self.ambient.rep, &fr.q, Some(&lam))?;
        }
        Ok(lam)
    }

    /// `σ'(u) = Λ(u)^{-1} ψ(x(u))`.
    pub fn adapted_components(&self, psi: &dyn SpinorField, u: &[f64]) -> Result<CVec> {
        let lam = self.lift(u)?;
        Ok(inverse(&lam)? * psi.eval(&(self.embedding)(u))?)
    }

    /// Restricted hypersurface spinor field (the `P+` half for odd `n`).
    pub fn restrict(&self, psi: SmoothSpinorField) -> SmoothSpinorField {
        self.restrict_block(psi, false)
    }

    /// `minus = true` selects the `P-` half for odd `n`.
    pub fn restrict_block(&self, psi: SmoothSpinorField, minus: bool) -> SmoothSpinorField {
        let me = self.clone();
        let block = if minus { self.alpha.minus.clone().expect("odd dimension") } else { self.alpha.plus.clone() };
        field_fn(self.base.spinor_dim(), move |u| Ok(&block.restrict * me.adapted_components(psi.as_ref(), u)?))
    }

    fn ambient_jet_at(&self, x: &[f64], level: JetLevel) -> Result<SpincConnectionJet> {
        connection_jet(&self.ambient, x, level)
    }

    /// `W_jk = ⟨∇^Z_{e_j} e_k, ν⟩` in the hypersurface frame.
    pub fn weingarten(&self, u: &[f64]) -> Result<RMat> {
        let fr = self.adapted_frame(u)?;
        let zj = geometry_jet(&self.ambient.scenario, &fr.x, JetLevel::Connection)?;
        let mj = geometry_jet(&self.base.scenario, u, JetLevel::Connection)?;
        self.weingarten_with(u, &fr, &zj, &mj)
    }

    fn weingarten_with(&self, u: &[f64], fr: &AdaptedFrame, zj: &GeometryJet, mj: &GeometryJet) -> Result<RMat> {
        let nb = self.base.dim();
        let na = self.ambient.dim();
        let f = |v: &[f64]| -> Result<Vec<f64>> { Ok((self.embedding)(v)) };
        // ∂_μ ∂_ν x
        let mut hess = vec![vec![vec![0.0; na]; nb]; nb];
        for mu in 0..nb {
            for nu in mu..nb {
                let h = second_partial(&f, u, mu, nu)?;
                hess[mu][nu] = h.clone();
                hess[nu][mu] = h;
            }
        }
        let nuv = nalgebra::DVector::from_column_slice(&fr.normal);
        let gn = &zj.g * &nuv;
        let em = &mj.frame;
        let dem = &mj.dframe;
        let w = RMat::from_fn(nb, nb, |j, k| {
            // X = x_* e_j, Y = x_* e_k along the hypersurface
            let xv: Vec<f64> = (0..na).map(|a| (0..nb).map(|mu| fr.jacobian[(a, mu)] * em[(mu, j)]).sum()).collect();
            let yv: Vec<f64> = (0..na).map(|a| (0..nb).map(|mu| fr.jacobian[(a, mu)] * em[(mu, k)]).sum()).collect();
            let mut dy = vec![0.0; na];
            for mu in 0..nb {
                let ej = em[(mu, j)];
                if ej == 0.0 {
                    continue;
                }
                for a in 0..na {
                    let mut s = 0.0;
                    for nu in 0..nb {
                        s += hess[mu][nu][a] * em[(nu, k)] + fr.jacobian[(a, nu)] * dem[mu][(nu, k)];
                    }
                    dy[a] += ej * s;
                }
            }
            for a in 0..na {
                for b in 0..na {
                    for cc in 0..na {
                        dy[a] += zj.christoffel[a][(b, cc)] * xv[b] * yv[cc];
                    }
                }
            }
            (0..na).map(|a| dy[a] * gn[a]).sum()
        });
        let asym = (&w - w.transpose()).abs().max();
        if asym > 1e-6 * w.abs().max().max(1.0) {
            return Err(Error::Construction(format!("Weingarten map is not symmetric ({asym:e})")));
        }
        Ok(w)
    }

    /// `H = tr(W)/n`.
    pub fn mean_curvature(&self, u: &[f64]) -> Result<f64> {
        let w = self.weingarten(u)?;
        let eps = self.base.scenario.signature.eps_vec();
        Ok((0..w.nrows()).map(|k| eps[k] * w[(k, k)]).sum::<f64>() / w.nrows() as f64)
    }

    fn all_blocks(&self) -> Vec<&crate::clifford::EmbedBlock> {
        std::iter::once(&self.alpha.plus).chain(self.alpha.minus.as_ref()).collect()
    }

    /// `∇^M_{e_j}` applied blockwise to the adapted components, returned in ambient space.
    fn base_derivatives(&self, psi: &SmoothSpinorField, u: &[f64]) -> Result<Vec<CVec>> {
        let mjet = connection_jet(&self.base, u, JetLevel::Connection)?;
        let dd = self.ambient.spinor_dim();
        let mut out = vec![CVec::zeros(dd); self.base.dim()];
        for (k, blk) in self.all_blocks().into_iter().enumerate() {
            let field = self.restrict_block(psi.clone(), k == 1);
            let d = covariant_derivatives_with(&mjet, field.as_ref())?;
            for (o, dj) in out.iter_mut().zip(d) {
                *o += &blk.lift * dj;
            }
        }
        Ok(out)
    }

    fn tangent_bullet(&self, v: &[f64]) -> CMat {
        self.alpha.bullet_matrix(v)
    }

    /// Ambient-space residual of `∇^Z_X ψ = ∇^M_X φ - ½ W(X)•φ` for `X = e_j`.
    pub fn gauss_residual(&self, psi: SmoothSpinorField, u: &[f64], j: usize) -> Result<CVec> {
        Ok(self.gauss_residuals(psi, u)?.swap_remove(j))
    }

    pub fn gauss_residuals(&self, psi: SmoothSpinorField, u: &[f64]) -> Result<Vec<CVec>> {
        let fr = self.adapted_frame(u)?;
        let lam_inv = inverse(&self.lift(u)?)?;
        let zjet = self.ambient_jet_at(&fr.x, JetLevel::Connection)?;
        let dz = covariant_derivatives_with(&zjet, psi.as_ref())?;
        let w = self.weingarten(u)?;
        let sigma = &lam_inv * psi.eval(&fr.x)?;
        let dm = self.base_derivatives(&psi, u)?;
        let nb = self.base.dim();
        let eps = self.base.scenario.signature.eps_vec();
        (0..nb)
            .map(|j| {
                // ∇^Z along x_* e_j: ambient-frame components are column j+1 of q
                let mut zx = CVec::zeros(sigma.len());
                for (b, db) in dz.iter().enumerate() {
                    zx += db * c(fr.q[(b, j + 1)], 0.0);
                }
                let wx: Vec<f64> = (0..nb).map(|k| eps[k] * w[(j, k)]).collect();
                Ok(&lam_inv * zx - &dm[j] + self.tangent_bullet(&wx) * &sigma * c(0.5, 0.0))
            })
            .collect()
    }

    /// Ambient-space residual of
    /// `ν·D^Z ψ = D̃φ + (i^s n/2) H φ - i^s ∇^Z_ν ψ`.
    pub fn dirac_gauss_residual(&self, psi: SmoothSpinorField, u: &[f64]) -> Result<CVec> {
        let fr = self.adapted_frame(u)?;
        let lam_inv = inverse(&self.lift(u)?)?;
        let zjet = self.ambient_jet_at(&fr.x, JetLevel::Connection)?;
        let dz = covariant_derivatives_with(&zjet, psi.as_ref())?;
        let dirac_z = dirac_from_derivatives(&self.ambient.rep, &dz);
        let nu_frame: Vec<f64> = (0..self.ambient.dim()).map(|b| fr.q[(b, 0)]).collect();
        let nu_cl = self.ambient.rep.clifford_matrix(&nu_frame)?;
        let lhs = &lam_inv * (nu_cl * dirac_z);
        let sig = self.base.scenario.signature;
        let n = sig.n();
        let is = i_pow(sig.s as i64);
        let dm = self.base_derivatives(&psi, u)?;
        let mut dtilde = CVec::zeros(lhs.len());
        for (j, dj) in dm.iter().enumerate() {
            dtilde += &self.alpha.images[j] * dj * c(sig.eps(j), 0.0);
        }
        dtilde *= is;
        let h = self.mean_curvature(u)?;
        let sigma = &lam_inv * psi.eval(&fr.x)?;
        let mut dnu = CVec::zeros(lhs.len());
        for (b, db) in dz.iter().enumerate() {
            dnu += db * c(nu_frame[b], 0.0);
        }
        let rhs = dtilde + &sigma * (is * (0.5 * n as f64 * h)) - &lam_inv * dnu * is;
        Ok(lhs - rhs)
    }

    /// For a parallel ambient `ψ`: `(H, ‖D̃φ + (n/2)Hφ‖, ‖D̃φ - (n/2)Hφ‖)`,
    /// relative to `‖φ‖`. Exactly one of the two defects should vanish.
    pub fn leafwise_eigen(&self, psi: SmoothSpinorField, u: &[f64]) -> Result<(f64, f64, f64)> {
        let fr = self.adapted_frame(u)?;
        let lam_inv = inverse(&self.lift(u)?)?;
        let sig = self.base.scenario.signature;
        let dm = self.base_derivatives(&psi, u)?;
        let mut dtilde = CVec::zeros(lam_inv.nrows());
        for (j, dj) in dm.iter().enumerate() {
            dtilde += &self.alpha.images[j] * dj * c(sig.eps(j), 0.0);
        }
        dtilde *= i_pow(sig.s as i64);
        let h = self.mean_curvature(u)?;
        let sigma = &lam_inv * psi.eval(&fr.x)?;
        let shift = &sigma * c(0.5 * sig.n() as f64 * h, 0.0);
        let scale = sigma.norm().max(f64::MIN_POSITIVE);
        Ok((h, (&dtilde + &shift).norm() / scale, (&dtilde - &shift).norm() / scale))
    }

    /// Returns `(scalar residual, spinor residual)` for the splitting of the
    /// auxiliary curvature along the hypersurface.
    pub fn omega_split(&self, psi: Option<SmoothSpinorField>, u: &[f64]) -> Result<(f64, Option<CVec>)> {
        let fr = self.adapted_frame(u)?;
        let zjet = self.ambient_jet_at(&fr.x, JetLevel::Connection)?;
        let mjet = connection_jet(&self.base, u, JetLevel::Connection)?;
        let oz = &zjet.omega_form;
        let adapted = fr.q.transpose() * oz * &fr.q;
        let om = &mjet.omega_form;
        let ez = self.ambient.scenario.signature.eps_vec();
        let em = self.base.scenario.signature.eps_vec();
        let norm2 = |o: &RMat, e: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..o.nrows() {
                for j in i + 1..o.ncols() {
                    s += e[i] * e[j] * o[(i, j)].powi(2);
                }
            }
            s
        };
        let nb = self.base.dim();
        let contr: Vec<f64> = (0..nb).map(|j| adapted[(0, j + 1)]).collect();
        let contr_sq: f64 = (0..nb).map(|j| em[j] * contr[j].powi(2)).sum();
        let scalar = norm2(oz, &ez) - norm2(om, &em) - contr_sq;
        let spinor = match psi {
            None => None,
            Some(psi) => {
                let lam_inv = inverse(&self.lift(u)?)?;
                let lhs = &lam_inv * self.ambient.rep.two_form_matrix(oz)? * psi.eval(&fr.x)?;
                let sigma = &lam_inv * psi.eval(&fr.x)?;
                let dd = sigma.len();
                let mut rhs = CMat::zeros(dd, dd);
                for i in 0..nb {
                    for j in i + 1..nb {
                        rhs += &self.alpha.images[i] * &self.alpha.images[j] * c(em[i] * em[j] * om[(i, j)], 0.0);
                    }
                }
                let v: Vec<f64> = (0..nb).map(|j| em[j] * contr[j]).collect();
                rhs += self.tangent_bullet(&v);
                Some(lhs - rhs * sigma)
            }
        };
        Ok((scalar, spinor))
    }

    /// Quantities of the parallel-spinor comparison at `u`.
    pub fn morel(&self, psi: SmoothSpinorField, u: &[f64]) -> Result<MorelReport> {
        let fr = self.adapted_frame(u)?;
        let zjet = self.ambient_jet_at(&fr.x, JetLevel::Curvature)?;
        let dz = covariant_derivatives_with(&zjet, psi.as_ref())?;
        let parallel_defect = dz.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if parallel_defect > 1e-8 {
            return Err(Error::Precondition(format!("ambient spinor is not parallel ({parallel_defect:e})")));
        }
        let phi = self.restrict(psi);
        let mjet = connection_jet(&self.base, u, JetLevel::Connection)?;
        let derivs = covariant_derivatives_with(&mjet, phi.as_ref())?;
        let val = em_value(&self.base.rep, &phi.eval(u)?, &derivs, NORM_FLOOR);
        let ell = val.ell.ok_or_else(|| Error::Precondition("restricted spinor vanishes".into()))?;
        let w = self.weingarten(u)?;
        let ell_plus_w = (&ell * 2.0 + &w).norm();
        let curv = zjet.geometry.curvature();
        let nu: Vec<f64> = (0..self.ambient.dim()).map(|b| fr.q[(b, 0)]).collect();
        let ric_nn: f64 = (0..nu.len()).map(|a| (0..nu.len()).map(|b| nu[a] * curv.ricci[(a, b)] * nu[b]).sum::<f64>()).sum();
        let n = self.base.dim();
        let cn = 2.0 * ((n / 2) as f64).sqrt();
        let om = &mjet.omega_form;
        let em = self.base.scenario.signature.eps_vec();
        let mut on = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                on += em[i] * em[j] * om[(i, j)].powi(2);
            }
        }
        let eq6 = curv.scalar - 2.0 * ric_nn - cn * on.abs().sqrt();
        Ok(MorelReport { ell, weingarten: w, ell_plus_w, eq6, parallel_defect })
    }
}

#[derive(Clone, Debug)]
pub struct MorelReport {
    pub ell: RMat,
    pub weingarten: RMat,
    /// `‖2ℓ + W‖` (Frobenius, frame components).
    pub ell_plus_w: f64,
    /// `Scal^Z - 2 ric^Z(ν,ν) - c_n |Ω^M|`.
    pub eq6: f64,
    pub parallel_defect: f64,
}

/// Constant ambient spinor in the Gram–Schmidt trivialization.
pub fn constant_ambient(imm: &Immersion, sigma: CVec) -> Result<SmoothSpinorField> {
    imm.ambient.rep.check_spinor(&sigma)?;
    Ok(crate::spinc::constant_field(sigma))
}

pub const IMMERSION_NAMES: &[&str] = &[
    "sphere2-in-r3",
    "sphere2-in-r3-inward",
    "circle-in-r2",
    "torus2-slice-warped",
    "torus3-slice-warped",
    "torus2-slice-fourier",
];

fn round_sphere(inward: bool) -> Result<Immersion> {
    use crate::catalog::{chart_scenario, ScenarioParams};
    let p = ScenarioParams::default();
    let ambient = chart_scenario("r3-euclidean", &p)?;
    if inward {
        // chart (φ, θ) keeps (−r̂, ∂_φ, ∂_θ) positively oriented
        let base = chart_scenario("sphere2-swapped", &p)?;
        let emb: PointMap = Arc::new(|u: &[f64]| {
            let (ph, th) = (u[0], u[1]);
            vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
        });
        let e2 = emb.clone();
        let normal: PointMap = Arc::new(move |u: &[f64]| e2(u).iter().map(|v| -v).collect());
        Immersion::new("sphere2-in-r3-inward", base, ambient, emb, normal, vec![0.5, 1.0])
    } else {
        let base = chart_scenario("sphere2-unit", &p)?;
        let emb: PointMap = Arc::new(|u: &[f64]| {
            let (th, ph) = (u[0], u[1]);
            vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
        });
        let normal = emb.clone();
        Immersion::new("sphere2-in-r3", base, ambient, emb, normal, vec![1.0, 0.5])
    }
}

pub fn immersion(name: &str) -> Result<Immersion> {
    use crate::catalog::{chart_scenario, ScenarioParams};
    use crate::cylinder::cylinder;
    match name {
        "sphere2-in-r3" => round_sphere(false),
        "sphere2-in-r3-inward" => round_sphere(true),
        "circle-in-r2" => {
            let p = ScenarioParams::default();
            let base = chart_scenario("torus1-flat", &p)?;
            let ambient = chart_scenario("r2-euclidean", &p)?;
            let emb: PointMap = Arc::new(|u: &[f64]| vec![u[0].cos(), u[0].sin()]);
            Immersion::new(name, base, ambient, emb.clone(), emb, vec![1.0])
        }
        "torus2-slice-warped" => cylinder("cylinder-torus-conformal")?.slice_immersion(name, 0.3),
        "torus3-slice-warped" => cylinder("cylinder-torus3-warped")?.slice_immersion(name, 0.3),
        "torus2-slice-fourier" => cylinder("cylinder-torus-fourier")?.slice_immersion(name, 0.1),
        other => Err(Error::Unknown { kind: "immersion", name: other.to_string() }),
    }
}
