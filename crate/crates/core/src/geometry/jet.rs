use crate::error::Result;
use crate::geometry::deriv::{gradient, partial, second_partial};
use crate::geometry::frame::orthonormal_frame;
use crate::geometry::scenario::Scenario;
use crate::linalg::{rinverse, RMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetLevel {
    /// Metric, Christoffel symbols, frame and frame connection.
    Connection,
    /// Additionally Riemann, Ricci and scalar curvature.
    Curvature,
}

/// Curvature in frame components.
#[derive(Clone, Debug)]
pub struct Curvature {
    n: usize,
    /// `⟨R(e_a,e_b)e_c, e_d⟩`, row-major over `(a,b,c,d)`.
    pub riemann: Vec<f64>,
    pub ricci: RMat,
    pub scalar: f64,
}

impl Curvature {
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.n;
        self.riemann[((a * n + b) * n + c) * n + d]
    }
}

/// Pointwise geometric data at one chart point.
///
/// Conventions: `R(X,Y) = [∇_X,∇_Y] - ∇_{[X,Y]}`, `Ric(Y,Z) = Σ ε_j ⟨R(e_j,Y)Z, e_j⟩`.
#[derive(Clone, Debug)]
pub struct GeometryJet {
    pub point: Vec<f64>,
    pub eps: Vec<f64>,
    pub g: RMat,
    pub ginv: RMat,
    pub dg: Vec<RMat>,
    /// `christoffel[a][(b,c)] = Γ^a_{bc}`.
    pub christoffel: Vec<RMat>,
    /// Columns are the frame vectors in coordinates.
    pub frame: RMat,
    pub dframe: Vec<RMat>,
    /// `omega[i][(j,k)] = ⟨∇_{e_i} e_j, e_k⟩`.
    pub omega: Vec<RMat>,
    pub curvature: Option<Curvature>,
}

fn christoffel(ginv: &RMat, dg: &[RMat]) -> Vec<RMat> {
    let n = ginv.nrows();
    (0..n)
        .map(|a| {
            RMat::from_fn(n, n, |b, c| {
                0.5 * (0..n).map(|d| ginv[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)])).sum::<f64>()
            })
        })
        .collect()
}

/// Stencil reach required around a point for a jet at the given level.
pub fn jet_reach(level: JetLevel) -> f64 {
    match level {
        JetLevel::Connection => 0.01,
        JetLevel::Curvature => 0.02,
    }
}

pub fn geometry_jet(sc: &Scenario, x: &[f64], level: JetLevel) -> Result<GeometryJet> {
    sc.domain.require_interior(x, jet_reach(level))?;
    let n = sc.dim();
    let sig = sc.signature;
    let metric = |y: &[f64]| sc.metric_at(y);
    let g = metric(x)?;
    let frame = orthonormal_frame(&g, sig).map_err(|e| with_point(e, x))?;
    let ginv = rinverse(&g).ok_or_else(|| crate::error::Error::DegenerateMetric {
        point: x.to_vec(),
        reason: "singular metric".into(),
    })?;
    let dg = gradient(&metric, x)?;
    let gam = christoffel(&ginv, &dg);
    let frame_fn = |y: &[f64]| orthonormal_frame(&sc.metric_at(y)?, sig);
    let dframe = gradient(&frame_fn, x)?;
    let eps = sig.eps_vec();

    // ∇_{e_i} e_j in coordinates
    let nabla = |i: usize, j: usize| -> nalgebra::DVector<f64> {
        let mut v = nalgebra::DVector::zeros(n);
        for c in 0..n {
            let ec = frame[(c, i)];
            if ec == 0.0 {
                continue;
            }
            for a in 0..n {
                let mut s = dframe[c][(a, j)];
                for b in 0..n {
                    s += gam[a][(c, b)] * frame[(b, j)];
                }
                v[a] += ec * s;
            }
        }
        v
    };
    let omega: Vec<RMat> = (0..n)
        .map(|i| {
            let cols: Vec<_> = (0..n).map(|j| nabla(i, j)).collect();
            RMat::from_fn(n, n, |j, k| (cols[j].transpose() * &g * frame.column(k))[(0, 0)])
        })
        .collect();

    let curvature = if level == JetLevel::Curvature {
        Some(curvature(sc, x, &g, &ginv, &dg, &gam, &frame, &eps)?)
    } else {
        None
    };
    Ok(GeometryJet { point: x.to_vec(), eps, g, ginv, dg, christoffel: gam, frame, dframe, omega, curvature })
}

fn with_point(e: crate::error::Error, x: &[f64]) -> crate::error::Error {
    match e {
        crate::error::Error::DegenerateMetric { reason, .. } => {
            crate::error::Error::DegenerateMetric { point: x.to_vec(), reason }
        }
        other => other,
    }
}

#[allow(clippy::too_many_arguments)]
fn curvature(
    sc: &Scenario,
    x: &[f64],
    g: &RMat,
    ginv: &RMat,
    dg: &[RMat],
    gam: &[RMat],
    frame: &RMat,
    eps: &[f64],
) -> Result<Curvature> {
    let n = g.nrows();
    let metric = |y: &[f64]| sc.metric_at(y);
    // ddg[e][f] = ∂_e ∂_f g
    let mut ddg = vec![vec![RMat::zeros(n, n); n]; n];
    for e in 0..n {
        for f in e..n {
            let m = second_partial(&metric, x, e, f)?;
            ddg[f][e] = m.clone();
            ddg[e][f] = m;
        }
    }
    // ∂_e Γ^a_{bc}
    let dginv: Vec<RMat> = dg.iter().map(|d| -(ginv * d * ginv)).collect();
    let dgam: Vec<Vec<RMat>> = (0..n)
        .map(|e| {
            (0..n)
                .map(|a| {
                    RMat::from_fn(n, n, |b, c| {
                        let mut s = 0.0;
                        for d in 0..n {
                            s += dginv[e][(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                            s += ginv[(a, d)] * (ddg[e][b][(d, c)] + ddg[e][c][(d, b)] - ddg[e][d][(b, c)]);
                        }
                        0.5 * s
                    })
                })
                .collect()
        })
        .collect();
    // coordinate R^a_{bcd}: R(∂_c,∂_d)∂_b = R^a_{bcd} ∂_a
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    let mut rup = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = dgam[c][a][(d, b)] - dgam[d][a][(c, b)];
                    for e in 0..n {
                        s += gam[a][(c, e)] * gam[e][(d, b)] - gam[a][(d, e)] * gam[e][(c, b)];
                    }
                    rup[idx(a, b, c, d)] = s;
                }
            }
        }
    }
    // lowered: L[c,d,b,f] = ⟨R(∂_c,∂_d)∂_b, ∂_f⟩
    let mut low = vec![0.0; n * n * n * n];
    for c in 0..n {
        for d in 0..n {
            for b in 0..n {
                for f in 0..n {
                    low[idx(c, d, b, f)] = (0..n).map(|a| g[(f, a)] * rup[idx(a, b, c, d)]).sum();
                }
            }
        }
    }
    // successive contraction with the frame on each slot
    let mut cur = low;
    for slot in 0..4 {
        let mut next = vec![0.0; n * n * n * n];
        for p in 0..n * n * n * n {
            let mut digits = [p / (n * n * n), (p / (n * n)) % n, (p / n) % n, p % n];
            let target = digits[slot];
            let mut s = 0.0;
            for q in 0..n {
                digits[slot] = q;
                s += frame[(q, target)] * cur[idx(digits[0], digits[1], digits[2], digits[3])];
            }
            next[p] = s;
        }
        cur = next;
    }
    let riemann = cur;
    let ricci = RMat::from_fn(n, n, |b, c| (0..n).map(|a| eps[a] * riemann[idx(a, b, c, a)]).sum());
    let scalar = (0..n).map(|b| eps[b] * ricci[(b, b)]).sum();
    Ok(Curvature { n, riemann, ricci, scalar })
}

impl GeometryJet {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// Frame components `c_k = ε_k ⟨v, e_k⟩` of a coordinate vector.
    pub fn to_frame(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let gv = &self.g * nalgebra::DVector::from_column_slice(v);
        (0..n).map(|k| self.eps[k] * self.frame.column(k).dot(&gv)).collect()
    }

    pub fn to_coords(&self, c: &[f64]) -> Vec<f64> {
        (&self.frame * nalgebra::DVector::from_column_slice(c)).iter().copied().collect()
    }

    /// Frame components of a covector: `α(e_k)`.
    pub fn covector_on_frame(&self, a: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|k| (0..self.n()).map(|mu| self.frame[(mu, k)] * a[mu]).sum()).collect()
    }

    /// Frame components of a (0,2)-tensor given in coordinates.
    pub fn tensor_on_frame(&self, t: &RMat) -> RMat {
        self.frame.transpose() * t * &self.frame
    }

    /// Coefficients of `[e_i, e_j] = Σ_l c_l e_l`.
    pub fn bracket(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.n()).map(|l| self.eps[l] * (self.omega[i][(j, l)] - self.omega[j][(i, l)])).collect()
    }

    pub fn curvature(&self) -> &Curvature {
        self.curvature.as_ref().expect("jet computed without curvature")
    }
}

/// Frame components of `∂_μ` derivatives of a scalar-valued coordinate function.
pub fn frame_gradient(jet: &GeometryJet, f: &impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let n = jet.n();
    let d: Vec<f64> = (0..n).map(|mu| partial(f, &jet.point, mu)).collect::<Result<_>>()?;
    Ok((0..n).map(|k| (0..n).map(|mu| jet.frame[(mu, k)] * d[mu]).sum()).collect())
}
