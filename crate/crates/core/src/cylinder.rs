//! Generalized cylinders `Z = I × M` with metric `dt² + g_t`.
//!
//! Ambient coordinates are `(t, x)`. The Gram–Schmidt frame of the ambient
//! metric is `(∂_t, E_t)` with `E_t` the Gram–Schmidt frame of `g_t`, so ambient
//! spinor components need no frame change between slice and cylinder.

use std::sync::Arc;

use crate::clifford::{AlphaEmbedding, EmbedBlock, GammaRep};
use crate::emtensor::{codazzi_with, covariant_derivative_endo, killing_residuals, EndoFn};
use crate::error::{Error, Result};
use crate::geometry::deriv::{differentiate, differentiate2, h_first, h_second, partial, scaled_step};
use crate::geometry::jet::{frame_gradient, geometry_jet, GeometryJet, JetLevel};
use crate::geometry::{orthonormal_frame, Axis, Domain, Scenario};
use crate::hypersurface::{Immersion, PointMap};
use crate::linalg::{c, i_pow, CMat, CVec, RMat, I};
use crate::spinc::{
    connection_jet, covariant_derivatives_with, field_fn, spin_matrices_with, SmoothSpinorField, SpinChart,
    SpinorField,
};

pub type FamilyFn = Arc<dyn Fn(f64, &[f64]) -> RMat + Send + Sync>;
/// Spatial components of a `t`-dependent connection; `a(∂_t) = 0`.
pub type TimeConnection = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    Static,
    /// `g_t = g((I - tF)², ·)` for a `g`-self-adjoint `F`.
    Endomorphism(EndoFn),
    Explicit(FamilyFn),
}

#[derive(Clone)]
pub struct CylinderScenario {
    pub name: String,
    pub description: String,
    pub base: Scenario,
    pub family: Family,
    pub t_range: (f64, f64),
    /// Defaults to the base connection, constant in `t`.
    pub connection: Option<TimeConnection>,
    ambient: Option<SpinChart>,
}

impl std::fmt::Debug for CylinderScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CylinderScenario").field("name", &self.name).field("t_range", &self.t_range).finish()
    }
}

/// Fixed-step classical RK4 for `σ' = M(t) σ` on matrices.
pub(crate) fn rk4(m: &dyn Fn(f64) -> Result<CMat>, y0: CMat, t0: f64, t1: f64, steps: usize) -> Result<CMat> {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for k in 0..steps {
        let t = t0 + h * k as f64;
        let mid = m(t + 0.5 * h)?;
        let k1 = m(t)? * &y;
        let k2 = &mid * (&y + &k1 * c(0.5 * h, 0.0));
        let k3 = &mid * (&y + &k2 * c(0.5 * h, 0.0));
        let k4 = m(t + h)? * (&y + &k3 * c(h, 0.0));
        y += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
    }
    Ok(y)
}

#[derive(Clone, Debug)]
pub struct TransportResult {
    pub initial: CVec,
    pub final_spinor: CVec,
    pub x: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub unitarity_defect: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CurvatureResiduals {
    pub weingarten: f64,
    pub gauss: f64,
    pub codazzi: f64,
    pub normal: f64,
}

impl CurvatureResiduals {
    pub fn max(&self) -> f64 {
        self.weingarten.max(self.gauss).max(self.codazzi).max(self.normal)
    }
}

impl CylinderScenario {
    pub fn new(
        name: &str,
        base: Scenario,
        family: Family,
        t_range: (f64, f64),
        connection: Option<TimeConnection>,
    ) -> Result<Self> {
        if !(t_range.0 < t_range.1) {
            return Err(Error::Config("empty t interval".into()));
        }
        let connection = connection.or_else(|| {
            base.connection.clone().map(|a| -> TimeConnection { Arc::new(move |_t: f64, x: &[f64]| a(x)) })
        });
        let mut cyl = CylinderScenario {
            name: name.to_string(),
            description: String::new(),
            base,
            family,
            t_range,
            connection,
            ambient: None,
        };
        cyl.ambient = Some(SpinChart::new(cyl.ambient_scenario())?);
        Ok(cyl)
    }

    pub fn with_description(mut self, d: &str) -> Self {
        self.description = d.to_string();
        self
    }

    pub fn n(&self) -> usize {
        self.base.dim()
    }

    pub fn ambient_chart(&self) -> &SpinChart {
        self.ambient.as_ref().expect("built in new")
    }

    fn endo(&self) -> Option<&EndoFn> {
        match &self.family {
            Family::Endomorphism(f) => Some(f),
            _ => None,
        }
    }

    pub fn metric_t(&self, t: f64, x: &[f64]) -> Result<RMat> {
        let g = self.base.metric_at(x)?;
        match &self.family {
            Family::Static => Ok(g),
            Family::Endomorphism(f) => {
                let n = g.nrows();
                let a = RMat::identity(n, n) - f(x) * t;
                Ok(&g * &a * &a)
            }
            Family::Explicit(m) => Ok(m(t, x)),
        }
    }

    /// `ġ_t` in coordinates.
    pub fn gdot(&self, t: f64, x: &[f64]) -> Result<RMat> {
        match &self.family {
            Family::Static => Ok(RMat::zeros(self.n(), self.n())),
            Family::Endomorphism(f) => {
                let g = self.base.metric_at(x)?;
                let fx = f(x);
                let n = g.nrows();
                Ok(&g * &fx * (RMat::identity(n, n) - &fx * t) * -2.0)
            }
            Family::Explicit(_) => differentiate(|s: f64| self.metric_t(s, x), t, scaled_step(h_first(), t)),
        }
    }

    /// `g̈_t` in coordinates.
    pub fn gddot(&self, t: f64, x: &[f64]) -> Result<RMat> {
        match &self.family {
            Family::Static => Ok(RMat::zeros(self.n(), self.n())),
            Family::Endomorphism(f) => {
                let fx = f(x);
                Ok(self.base.metric_at(x)? * &fx * &fx * 2.0)
            }
            Family::Explicit(_) => differentiate2(|s: f64| self.metric_t(s, x), t, scaled_step(h_second(), t)),
        }
    }

    pub fn connection_t(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.connection {
            Some(a) => a(t, x),
            None => vec![0.0; self.n()],
        }
    }

    pub fn slice_scenario(&self, t: f64) -> Scenario {
        let mut sc = self.base.clone();
        sc.name = format!("{}@t={t}", self.name);
        let me = self.clone();
        sc.metric = Arc::new(move |x: &[f64]| me.metric_t(t, x).expect("slice metric"));
        sc.connection = self.connection.clone().map(|a| -> crate::geometry::CovectorFn {
            Arc::new(move |x: &[f64]| a(t, x))
        });
        sc
    }

    pub fn slice_chart(&self, t: f64) -> Result<SpinChart> {
        SpinChart::new(self.slice_scenario(t))
    }

    pub fn ambient_scenario(&self) -> Scenario {
        let n = self.n();
        let mut axes = vec![Axis { lo: self.t_range.0, hi: self.t_range.1, periodic: false }];
        axes.extend(self.base.domain.axes.iter().cloned());
        let sig = crate::clifford::Signature { r: self.base.signature.r + 1, s: self.base.signature.s };
        let me = self.clone();
        let metric: crate::geometry::MetricFn = Arc::new(move |z: &[f64]| {
            let g = me.metric_t(z[0], &z[1..]).expect("family metric");
            let mut m = RMat::zeros(n + 1, n + 1);
            m[(0, 0)] = 1.0;
            m.view_mut((1, 1), (n, n)).copy_from(&g);
            m
        });
        let mut sc = Scenario::new(&self.name, sig, Domain { axes }, metric).with_description(&self.description);
        if let Some(a) = self.connection.clone() {
            sc.connection = Some(Arc::new(move |z: &[f64]| {
                let mut v = vec![0.0];
                v.extend(a(z[0], &z[1..]));
                v
            }));
        }
        sc
    }

    /// The slice `{t0} × M` as an immersion into the cylinder.
    pub fn slice_immersion(&self, name: &str, t0: f64) -> Result<Immersion> {
        let emb: PointMap = Arc::new(move |u: &[f64]| {
            let mut z = vec![t0];
            z.extend_from_slice(u);
            z
        });
        let n = self.n();
        let normal: PointMap = Arc::new(move |_u: &[f64]| {
            let mut v = vec![0.0; n + 1];
            v[0] = 1.0;
            v
        });
        let anchor = self.base.domain.axes.iter().map(|a| 0.5 * (a.lo + a.hi)).collect();
        let mut base = self.slice_scenario(t0);
        base.name = name.to_string();
        Immersion::new(name, base, self.ambient_scenario(), emb, normal, anchor)
    }

    fn slice_frame(&self, t: f64, x: &[f64]) -> Result<RMat> {
        orthonormal_frame(&self.metric_t(t, x)?, self.base.signature)
    }

    /// Frame components of `ġ_t`.
    pub fn gdot_frame(&self, t: f64, x: &[f64]) -> Result<RMat> {
        let e = self.slice_frame(t, x)?;
        Ok(e.transpose() * self.gdot(t, x)? * e)
    }

    /// `⟨W e_j, e_k⟩ = -½ ġ_t(e_j, e_k)`.
    pub fn weingarten(&self, t: f64, x: &[f64]) -> Result<RMat> {
        Ok(self.gdot_frame(t, x)? * -0.5)
    }

    /// Coordinate endomorphism `W = -½ g_t^{-1} ġ_t`.
    pub fn weingarten_endo(&self, t: f64, x: &[f64]) -> Result<RMat> {
        let g = self.metric_t(t, x)?;
        let ginv = g.try_inverse().ok_or_else(|| Error::DegenerateMetric { point: x.to_vec(), reason: "g_t".into() })?;
        Ok(ginv * self.gdot(t, x)? * -0.5)
    }

    pub fn mean_curvature(&self, t: f64, x: &[f64]) -> Result<f64> {
        let w = self.weingarten(t, x)?;
        let eps = self.base.signature.eps_vec();
        Ok((0..self.n()).map(|k| eps[k] * w[(k, k)]).sum::<f64>() / self.n() as f64)
    }

    fn point(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut z = vec![t];
        z.extend_from_slice(x);
        z
    }

    fn ambient_jet(&self, t: f64, x: &[f64], level: JetLevel) -> Result<GeometryJet> {
        let jz = geometry_jet(&self.ambient_chart().scenario, &self.point(t, x), level)?;
        let e = self.slice_frame(t, x)?;
        let n = self.n();
        let mut defect = (jz.frame[(0, 0)] - 1.0).abs();
        for a in 0..n {
            defect = defect.max(jz.frame[(0, a + 1)].abs()).max(jz.frame[(a + 1, 0)].abs());
            for b in 0..n {
                defect = defect.max((jz.frame[(a + 1, b + 1)] - e[(a, b)]).abs());
            }
        }
        if defect > 1e-9 {
            return Err(Error::Construction(format!("ambient frame is not adapted to the slices ({defect:e})")));
        }
        Ok(jz)
    }

    /// `|∇_ν ν|`; zero because `t`-lines are geodesics.
    pub fn normal_geodesic_defect(&self, t: f64, x: &[f64]) -> Result<f64> {
        let jz = self.ambient_jet(t, x, JetLevel::Connection)?;
        Ok((1..=self.n()).fold(0.0f64, |m, k| m.max(jz.omega[0][(0, k)].abs())))
    }

    /// Frame components `(∇_{e_a} ġ)(e_b, e_c)` on the slice.
    fn nabla_gdot(&self, t: f64, jm: &GeometryJet) -> Result<Vec<RMat>> {
        let n = self.n();
        let x = &jm.point;
        let f = |y: &[f64]| self.gdot(t, y);
        let d: Vec<RMat> = (0..n).map(|mu| partial(&f, x, mu)).collect::<Result<_>>()?;
        let gd = self.gdot(t, x)?;
        let gam = &jm.christoffel;
        let coord: Vec<RMat> = (0..n)
            .map(|cc| {
                RMat::from_fn(n, n, |a, b| {
                    let mut s = d[cc][(a, b)];
                    for dd in 0..n {
                        s -= gam[dd][(cc, a)] * gd[(dd, b)] + gam[dd][(cc, b)] * gd[(a, dd)];
                    }
                    s
                })
            })
            .collect();
        let e = &jm.frame;
        Ok((0..n)
            .map(|a| {
                let mut m = RMat::zeros(n, n);
                for cc in 0..n {
                    m += &coord[cc] * e[(cc, a)];
                }
                e.transpose() * m * e
            })
            .collect())
    }

    /// Residuals of the four structure equations of the cylinder at `(t, x)`.
    pub fn curvature_residuals(&self, t: f64, x: &[f64]) -> Result<CurvatureResiduals> {
        let n = self.n();
        let jz = self.ambient_jet(t, x, JetLevel::Curvature)?;
        let slice = self.slice_scenario(t);
        let jm = geometry_jet(&slice, x, JetLevel::Curvature)?;
        let rz = jz.curvature();
        let rm = jm.curvature();
        let eps = &jm.eps;
        let gd = jm.tensor_on_frame(&self.gdot(t, x)?);
        let gdd = jm.tensor_on_frame(&self.gddot(t, x)?);
        let ngd = self.nabla_gdot(t, &jm)?;
        let w = &gd * -0.5;
        let mut out = CurvatureResiduals::default();
        for j in 0..n {
            for k in 0..n {
                out.weingarten = out.weingarten.max((jz.omega[j + 1][(k + 1, 0)] - w[(j, k)]).abs());
                for l in 0..n {
                    let rhs = 0.5 * (ngd[k][(j, l)] - ngd[j][(k, l)]);
                    out.codazzi = out.codazzi.max((rz.r(j + 1, k + 1, l + 1, 0) - rhs).abs());
                    for m in 0..n {
                        let rhs = rm.r(j, k, l, m) + 0.25 * (gd[(j, l)] * gd[(k, m)] - gd[(j, m)] * gd[(k, l)]);
                        out.gauss = out.gauss.max((rz.r(j + 1, k + 1, l + 1, m + 1) - rhs).abs());
                    }
                }
                let gw: f64 = (0..n).map(|m| eps[m] * w[(j, m)] * gd[(m, k)]).sum();
                let rhs = -0.5 * (gdd[(j, k)] + gw);
                out.normal = out.normal.max((rz.r(j + 1, 0, 0, k + 1) - rhs).abs());
            }
        }
        Ok(out)
    }

    /// `(max |⟨R(U,ν)ν,V⟩|, max |⟨R(U,V)X,ν⟩|)` from ambient jets.
    pub fn bala_residuals(&self, t: f64, x: &[f64]) -> Result<(f64, f64)> {
        if self.endo().is_none() {
            return Err(Error::Precondition("family is not given by an endomorphism".into()));
        }
        let n = self.n();
        let jz = self.ambient_jet(t, x, JetLevel::Curvature)?;
        let rz = jz.curvature();
        let (mut first, mut second) = (0.0f64, 0.0f64);
        for u in 1..=n {
            for v in 1..=n {
                first = first.max(rz.r(u, 0, 0, v).abs());
                for w in 1..=n {
                    second = second.max(rz.r(u, v, w, 0).abs());
                }
            }
        }
        Ok((first, second))
    }

    /// Largest Codazzi defect of `F` on the base at `x`.
    pub fn codazzi_defect(&self, x: &[f64]) -> Result<f64> {
        let f = self.endo().ok_or_else(|| Error::Precondition("family is not given by an endomorphism".into()))?;
        let jm = geometry_jet(&self.base, x, JetLevel::Connection)?;
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                worst = codazzi_with(&jm, f, i, j)?.iter().fold(worst, |m, v| m.max(v.abs()));
            }
        }
        Ok(worst)
    }

    /// `S_ν(t, x)`: ambient spin matrix in the `∂_t` direction, assembled from
    /// the family (`ω_jl(ν) = ⟨Ė_j, E_l⟩_{g_t} + ½ ġ(E_j, E_l)`).
    pub fn spin_nu(&self, t: f64, x: &[f64]) -> Result<CMat> {
        let n = self.n();
        let rep = &self.ambient_chart().rep;
        let g = self.metric_t(t, x)?;
        let e = self.slice_frame(t, x)?;
        let edot = differentiate(|s: f64| self.slice_frame(s, x), t, scaled_step(h_first(), t))?;
        let gd = self.gdot(t, x)?;
        let om = e.transpose() * &g * &edot + e.transpose() * &gd * &e * 0.5;
        let eps = self.base.signature.eps_vec();
        let d = rep.dim();
        let mut s = CMat::zeros(d, d);
        for j in 0..n {
            for l in 0..n {
                // ω_jl = ⟨∇_ν E_j, E_l⟩ is the (l, j) entry of `om`
                let w = 0.25 * eps[j] * eps[l] * om[(l, j)];
                if w != 0.0 {
                    s += &rep.gammas[j + 1] * &rep.gammas[l + 1] * c(w, 0.0);
                }
            }
        }
        // a(∂_t) = 0 for every catalog connection
        Ok(s)
    }

    /// Transport operator `τ_{t0}^{t1}` at `x` with a fixed number of RK4 steps.
    pub fn transport_matrix(&self, x: &[f64], t0: f64, t1: f64, steps: usize) -> Result<CMat> {
        let d = self.ambient_chart().spinor_dim();
        if t0 == t1 {
            return Ok(CMat::identity(d, d));
        }
        let m = |t: f64| -> Result<CMat> { Ok(-self.spin_nu(t, x)?) };
        rk4(&m, CMat::identity(d, d), t0, t1, steps.max(1))
    }

    /// Transport with step doubling until successive refinements agree within `tol`.
    pub fn parallel_transport(&self, x: &[f64], sigma: &CVec, t0: f64, t1: f64, tol: f64) -> Result<TransportResult> {
        self.ambient_chart().rep.check_spinor(sigma)?;
        for t in [t0, t1] {
            if t < self.t_range.0 || t > self.t_range.1 {
                return Err(Error::Precondition(format!("t = {t} outside the family interval")));
            }
        }
        let mut steps = 4;
        let mut prev = self.transport_matrix(x, t0, t1, steps)? * sigma;
        loop {
            steps *= 2;
            if steps > 1 << 16 {
                return Err(Error::StepUnderflow { tol });
            }
            let next = self.transport_matrix(x, t0, t1, steps)? * sigma;
            let diff = (&next - &prev).norm();
            prev = next;
            if diff <= tol {
                break;
            }
        }
        let rep = &self.ambient_chart().rep;
        let unitarity_defect = (rep.pairing(&prev, &prev) - rep.pairing(sigma, sigma)).norm();
        Ok(TransportResult {
            initial: sigma.clone(),
            final_spinor: prev,
            x: x.to_vec(),
            t0,
            t1,
            steps,
            unitarity_defect,
        })
    }

    /// `ψ(t, x) = τ_0^t(x) σ(x)` with `steps` RK4 steps per line; `σ` is an ambient field on `M`.
    pub fn transported_field(&self, sigma: SmoothSpinorField, steps: usize) -> SmoothSpinorField {
        let me = self.clone();
        field_fn(self.ambient_chart().spinor_dim(), move |z: &[f64]| {
            let s = sigma.eval(&z[1..])?;
            if z[0] == 0.0 {
                return Ok(s);
            }
            Ok(me.transport_matrix(&z[1..], 0.0, z[0], steps)? * s)
        })
    }

    /// The identification block on which `X•` acts as `+γ(X)`.
    pub fn positive_block(&self, alpha: &AlphaEmbedding) -> EmbedBlock {
        if alpha.plus.sign > 0.0 {
            alpha.plus.clone()
        } else {
            alpha.minus.clone().expect("odd dimension carries both halves")
        }
    }

    pub fn alpha(&self) -> Result<AlphaEmbedding> {
        let base_rep: GammaRep = crate::clifford::build_gamma_rep(self.base.signature.r, self.base.signature.s, false)?;
        crate::clifford::alpha_embed(&base_rep, &self.ambient_chart().rep)
    }

    /// `ψ(t, x) = τ_0^t φ(x)` for a generalized Killing spinor `φ` of `F`.
    ///
    /// Hypotheses are checked at `samples` base points before building.
    pub fn build_parallel_from_killing(
        &self,
        phi: SmoothSpinorField,
        samples: &[Vec<f64>],
        steps: usize,
    ) -> Result<SmoothSpinorField> {
        let f = self.endo().ok_or_else(|| Error::Precondition("family is not given by an endomorphism".into()))?;
        let chart = SpinChart::new(self.base.clone())?;
        for x in samples {
            let k = killing_residuals(phi.as_ref(), &chart, x, f)?.iter().fold(0.0f64, |m, v| m.max(v.norm()));
            if k > 1e-7 {
                return Err(Error::Precondition(format!("not a Killing spinor at {x:?} (residual {k:e})")));
            }
            let cz = self.codazzi_defect(x)?;
            if cz > 1e-7 {
                return Err(Error::Precondition(format!("F is not Codazzi at {x:?} (residual {cz:e})")));
            }
        }
        let block = self.positive_block(&self.alpha()?);
        let lifted = field_fn(self.ambient_chart().spinor_dim(), move |x: &[f64]| Ok(&block.lift * phi.eval(x)?));
        Ok(self.transported_field(lifted, steps))
    }

    /// Max of `|∇^Z_X ψ|` over tangent frame directions and `|∇^Z_ν ψ|` at `(t, x)`.
    pub fn parallel_defect(&self, psi: &dyn SpinorField, t: f64, x: &[f64]) -> Result<(f64, f64)> {
        let jet = connection_jet(self.ambient_chart(), &self.point(t, x), JetLevel::Connection)?;
        let d = covariant_derivatives_with(&jet, psi)?;
        let tangent = d[1..].iter().fold(0.0f64, |m, v| m.max(v.norm()));
        Ok((tangent, d[0].norm()))
    }

    /// Leafwise derivatives `∇^{M_t}_{e_j}` on ambient spinors, with `ν·e_j·` as generators.
    fn leaf_derivatives(&self, psi: &dyn SpinorField, t: f64, x: &[f64]) -> Result<(GeometryJet, Vec<CVec>)> {
        let slice = self.slice_scenario(t);
        let jm = geometry_jet(&slice, x, JetLevel::Connection)?;
        let a_frame = jm.covector_on_frame(&self.connection_t(t, x));
        let gens = self.leaf_generators();
        let spin = spin_matrices_with(&gens, &jm, &a_frame);
        let f = |y: &[f64]| psi.eval(&self.point(t, y));
        let s0 = f(x)?;
        let dpsi: Vec<CVec> = (0..self.n()).map(|mu| partial(&f, x, mu)).collect::<Result<_>>()?;
        let out = (0..self.n())
            .map(|k| {
                let mut v = &spin[k] * &s0;
                for (mu, dm) in dpsi.iter().enumerate() {
                    v += dm * c(jm.frame[(mu, k)], 0.0);
                }
                v
            })
            .collect();
        Ok((jm, out))
    }

    fn leaf_generators(&self) -> Vec<CMat> {
        let g = &self.ambient_chart().rep.gammas;
        (0..self.n()).map(|j| &g[0] * &g[j + 1]).collect()
    }

    fn bullet(&self, v: &[f64]) -> CMat {
        let d = self.ambient_chart().spinor_dim();
        let mut m = CMat::zeros(d, d);
        for (vj, a) in v.iter().zip(self.leaf_generators()) {
            m += a * c(*vj, 0.0);
        }
        m
    }

    /// `D̃ψ = i^s Σ_j ε_j ν·e_j·∇^{M_t}_{e_j} ψ` at `(t, x)`.
    pub fn leaf_dirac(&self, psi: &dyn SpinorField, t: f64, x: &[f64]) -> Result<CVec> {
        let (jm, d) = self.leaf_derivatives(psi, t, x)?;
        let gens = self.leaf_generators();
        let mut out = CVec::zeros(self.ambient_chart().spinor_dim());
        for (j, dj) in d.iter().enumerate() {
            out += &gens[j] * dj * c(jm.eps[j], 0.0);
        }
        Ok(out * i_pow(self.base.signature.s as i64))
    }

    /// Both sides of the commutator identity for `[∇_ν, D̃]` at `(t, x)`.
    ///
    /// `nu_step` overrides the finite-difference step of the outer `∂_t`;
    /// `assume_transported` drops `D̃∇_νψ`, valid for transported fields.
    pub fn commutator_sides(
        &self,
        psi: SmoothSpinorField,
        t: f64,
        x: &[f64],
        assume_transported: bool,
        nu_step: Option<f64>,
    ) -> Result<(CVec, CVec)> {
        let n = self.n();
        let s = self.base.signature.s as i64;
        let z = self.point(t, x);
        let jz = connection_jet(self.ambient_chart(), &z, JetLevel::Connection)?;
        let h = nu_step.unwrap_or_else(|| scaled_step(h_first(), t));
        self.ambient_chart().scenario.domain.require_interior(&z, 2.0 * h)?;
        let dt = differentiate(|s: f64| self.leaf_dirac(psi.as_ref(), s, x), t, h)?;
        let mut lhs = dt + &jz.spin[0] * self.leaf_dirac(psi.as_ref(), t, x)?;
        if !assume_transported {
            let me = self.clone();
            let p3 = psi.clone();
            let nabla_nu = field_fn(self.ambient_chart().spinor_dim(), move |z: &[f64]| {
                let j = connection_jet(me.ambient_chart(), z, JetLevel::Connection)?;
                Ok(covariant_derivatives_with(&j, p3.as_ref())?.swap_remove(0))
            });
            lhs -= self.leaf_dirac(nabla_nu.as_ref(), t, x)?;
        }
        lhs *= i_pow(-s);

        let (jm, d) = self.leaf_derivatives(psi.as_ref(), t, x)?;
        let eps = &jm.eps;
        let w = self.weingarten(t, x)?;
        let gens = self.leaf_generators();
        let phi = psi.eval(&z)?;
        let mut rhs = CVec::zeros(phi.len());
        for i in 0..n {
            // ∇_{W(e_i)} with W(e_i) = Σ_k ε_k W_ik e_k
            let mut dw = CVec::zeros(phi.len());
            for k in 0..n {
                dw += &d[k] * c(eps[k] * w[(i, k)], 0.0);
            }
            rhs += &gens[i] * dw * c(eps[i], 0.0);
        }
        let hfn = |y: &[f64]| self.mean_curvature(t, y);
        let dh = frame_gradient(&jm, &hfn)?;
        let grad_h: Vec<f64> = (0..n).map(|k| eps[k] * dh[k]).collect();
        let wfn: EndoFn = {
            let me = self.clone();
            Arc::new(move |y: &[f64]| me.weingarten_endo(t, y).expect("weingarten"))
        };
        let nw = covariant_derivative_endo(&jm, &wfn)?;
        let mut div = vec![0.0; n];
        for i in 0..n {
            let mut m = RMat::zeros(n, n);
            for cc in 0..n {
                m += &nw[cc] * jm.frame[(cc, i)];
            }
            let v = m * jm.frame.column(i);
            for (a, va) in v.iter().enumerate() {
                div[a] += eps[i] * va;
            }
        }
        let div_frame = jm.to_frame(&div);
        let contr: Vec<f64> = (0..n).map(|k| eps[k] * jz.omega_form[(0, k + 1)]).collect();
        rhs -= self.bullet(&grad_h) * &phi * c(0.5 * n as f64, 0.0);
        rhs += self.bullet(&div_frame) * &phi * c(0.5, 0.0);
        rhs += self.bullet(&contr) * &phi * (I * 0.5);
        Ok((lhs, rhs))
    }

    pub fn commutator_residual(
        &self,
        psi: SmoothSpinorField,
        t: f64,
        x: &[f64],
        assume_transported: bool,
        nu_step: Option<f64>,
    ) -> Result<CVec> {
        let (l, r) = self.commutator_sides(psi, t, x, assume_transported, nu_step)?;
        Ok(l - r)
    }

    /// Sample points `(t, x)` keeping the stencil margin.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<(f64, Vec<f64>)> {
        self.ambient_chart()
            .scenario
            .domain
            .sample(seed, count, self.base.sample_margin)
            .into_iter()
            .map(|z| (z[0], z[1..].to_vec()))
            .collect()
    }
}

pub const CYLINDER_NAMES: &[&str] = &[
    "cylinder-torus-static",
    "cylinder-torus-conformal",
    "cylinder-torus-fourier",
    "cylinder-sphere-cone",
    "cylinder-sphere-cone-inward",
    "cylinder-torus-killing",
    "cylinder-torus-diagF",
    "cylinder-torus-noncodazzi",
    "cylinder-torus3-warped",
];

fn const_endo(diag: Vec<f64>) -> EndoFn {
    let m = RMat::from_diagonal(&nalgebra::DVector::from_vec(diag));
    Arc::new(move |_x: &[f64]| m.clone())
}

pub fn cylinder(name: &str) -> Result<CylinderScenario> {
    use crate::catalog::{chart_scenario, ScenarioParams};
    let p = ScenarioParams::default();
    let t2 = || chart_scenario("torus2-flat", &p);
    let cyl = match name {
        "cylinder-torus-static" => {
            CylinderScenario::new(name, chart_scenario("torus2-perturbed", &p)?, Family::Static, (-0.5, 0.5), None)?
                .with_description("product cylinder over a perturbed 2-torus")
        }
        "cylinder-torus-conformal" => CylinderScenario::new(name, t2()?, Family::Endomorphism(const_endo(vec![-1.0, -1.0])), (-0.5, 1.0), None)?
            .with_description("warped cylinder dt² + (1+t)² g over the flat 2-torus"),
        "cylinder-torus-fourier" => {
            let fam: FamilyFn = Arc::new(|t: f64, x: &[f64]| {
                let k1 = RMat::from_row_slice(2, 2, &[x[1].sin(), 0.3 * x[0].cos(), 0.3 * x[0].cos(), 0.5 * (x[0] + x[1]).sin()]);
                let k2 = RMat::from_row_slice(2, 2, &[0.2 * x[0].cos(), 0.1 * x[1].sin(), 0.1 * x[1].sin(), 0.3 * x[1].sin()]);
                RMat::identity(2, 2) + k1 * (0.3 * t) + k2 * (t * t)
            });
            let a: TimeConnection = Arc::new(|t: f64, x: &[f64]| vec![0.3 * x[1].sin() + 0.5 * t, 0.2 * t * x[0].cos()]);
            CylinderScenario::new(name, t2()?, Family::Explicit(fam), (-0.4, 0.4), Some(a))?
                .with_description("Fourier metric family with a t-dependent auxiliary connection")
        }
        "cylinder-sphere-cone" => CylinderScenario::new(
            name,
            chart_scenario("sphere2-unit", &p)?,
            Family::Endomorphism(const_endo(vec![-1.0, -1.0])),
            (-0.5, 1.0),
            None,
        )?
        .with_description("cone dt² + (1+t)² g over the unit sphere (flat)"),
        "cylinder-sphere-cone-inward" => CylinderScenario::new(
            name,
            chart_scenario("sphere2-swapped", &p)?,
            Family::Endomorphism(const_endo(vec![1.0, 1.0])),
            (-1.0, 0.5),
            None,
        )?
        .with_description("cone dt² + (1-t)² g over the unit sphere (flat)"),
        "cylinder-torus-killing" => CylinderScenario::new(name, t2()?, Family::Endomorphism(const_endo(vec![2.0, 0.0])), (-0.4, 0.4), None)?
            .with_description("F = diag(2, 0) on the flat 2-torus"),
        "cylinder-torus-diagF" => CylinderScenario::new(name, t2()?, Family::Endomorphism(const_endo(vec![0.3, 0.7])), (-0.5, 0.5), None)?
            .with_description("constant non-scalar Codazzi F on the flat 2-torus"),
        "cylinder-torus-noncodazzi" => {
            let f: EndoFn = Arc::new(|x: &[f64]| RMat::from_row_slice(2, 2, &[0.3 * x[1].sin(), 0.0, 0.0, 0.0]));
            CylinderScenario::new(name, t2()?, Family::Endomorphism(f), (-0.5, 0.5), None)?
                .with_description("F = diag(0.3 sin x₂, 0), not Codazzi")
        }
        "cylinder-torus3-warped" => CylinderScenario::new(
            name,
            chart_scenario("torus3-flat", &p)?,
            Family::Endomorphism(const_endo(vec![-1.0, -1.0, -1.0])),
            (-0.5, 1.0),
            None,
        )?
        .with_description("warped cylinder dt² + (1+t)² g over the flat 3-torus"),
        other => return Err(Error::Unknown { kind: "cylinder", name: other.to_string() }),
    };
    Ok(cyl)
}
