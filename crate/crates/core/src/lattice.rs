//! Periodic lattice discretization of the Dirac operator on flat or perturbed
//! tori with U(1) link phases.
//!
//! Sites are stored in raster order with the first axis slowest; a spinor
//! field is the concatenation of per-site component vectors, so component
//! `a` at site `s` has index `s * d + a`.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::clifford::{build_gamma_rep, GammaRep};
use crate::error::{Error, Result};
use crate::geometry::{geometry_jet, JetLevel, Scenario};
use crate::linalg::{c, hermitian_eigen, CMat, CVec, RMat, C64, I, ONE, ZERO};
use crate::spinc::{curvature_two_form, spin_matrices_with, SpinorField};

/// Smallest resolution accepted for user-facing assembly.
pub const MIN_GRID: usize = 8;
/// Dense eigensolves are used up to this operator dimension.
pub const DENSE_LIMIT: usize = 4096;

/// Rejects flux values that are not integers.
pub fn quantized_flux(f: f64) -> Result<i64> {
    if !f.is_finite() || (f - f.round()).abs() > 1e-12 {
        return Err(Error::Config(format!("flux must be an integer, got {f}")));
    }
    Ok(f.round() as i64)
}

/// Per-site geometric samples.
#[derive(Clone, Debug)]
pub struct SiteData {
    pub x: Vec<f64>,
    pub metric: RMat,
    /// Columns are the orthonormal frame in coordinates.
    pub frame: RMat,
    /// Spin-connection matrices along `e_k`; the U(1) part lives in the links.
    pub spin: Vec<CMat>,
    /// `√det g` times the cell volume.
    pub weight: f64,
}

#[derive(Clone)]
pub struct LatticeGrid {
    pub scenario: Arc<Scenario>,
    pub rep: Arc<GammaRep>,
    pub dims: Vec<usize>,
    pub periods: Vec<f64>,
    pub spacing: Vec<f64>,
    pub flux: i64,
    pub sites: Vec<SiteData>,
    /// `links[μ][s]` transports from `s + μ̂` back to `s`.
    pub links: Vec<Vec<C64>>,
}

impl std::fmt::Debug for LatticeGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeGrid")
            .field("scenario", &self.scenario.name)
            .field("dims", &self.dims)
            .field("flux", &self.flux)
            .finish()
    }
}

impl LatticeGrid {
    pub fn new(scenario: &Scenario, dims: &[usize]) -> Result<Self> {
        if dims.iter().any(|&d| d < MIN_GRID) {
            return Err(Error::Precondition(format!("grid resolution must be at least {MIN_GRID} per axis, got {dims:?}")));
        }
        Self::build(scenario, dims)
    }

    /// Same as [`LatticeGrid::new`] but accepts coarse grids (half-grid estimates).
    pub fn coarse(scenario: &Scenario, dims: &[usize]) -> Result<Self> {
        if dims.iter().any(|&d| d < 3) {
            return Err(Error::Precondition(format!("grid too coarse: {dims:?}")));
        }
        Self::build(scenario, dims)
    }

    fn build(scenario: &Scenario, dims: &[usize]) -> Result<Self> {
        scenario.require_lattice()?;
        let sig = scenario.signature;
        if !sig.is_riemannian() {
            return Err(Error::UnsupportedSignature { r: sig.r, s: sig.s, reason: "lattice needs signature (n,0)".into() });
        }
        let n = scenario.dim();
        if dims.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: dims.len() });
        }
        if !scenario.domain.axes.iter().all(|a| a.periodic) {
            return Err(Error::Unsupported(format!("`{}` is not a torus", scenario.name)));
        }
        if scenario.flux != 0 && n < 2 {
            return Err(Error::Precondition("flux needs at least two axes".into()));
        }
        let rep = Arc::new(build_gamma_rep(n, 0, false)?);
        let d = rep.dim();
        if (&rep.form - CMat::identity(d, d)).norm() > 1e-14 {
            return Err(Error::Construction("expected the identity spinor form in Riemannian signature".into()));
        }
        let periods: Vec<f64> = scenario.domain.axes.iter().map(|a| a.hi - a.lo).collect();
        let lo: Vec<f64> = scenario.domain.axes.iter().map(|a| a.lo).collect();
        let spacing: Vec<f64> = periods.iter().zip(dims).map(|(p, &m)| p / m as f64).collect();
        let cell: f64 = spacing.iter().product();
        let count: usize = dims.iter().product();
        let zeros = vec![0.0; n];
        let sites: Vec<SiteData> = (0..count)
            .into_par_iter()
            .map(|s| {
                let idx = unravel(dims, s);
                let x: Vec<f64> = (0..n).map(|mu| lo[mu] + idx[mu] as f64 * spacing[mu]).collect();
                let jet = geometry_jet(scenario, &x, JetLevel::Connection)?;
                let det = jet.g.determinant();
                if det <= 0.0 {
                    return Err(Error::DegenerateMetric { point: x, reason: "metric sample not positive definite".into() });
                }
                let spin = spin_matrices_with(&rep.gammas, &jet, &zeros);
                Ok(SiteData { weight: det.sqrt() * cell, metric: jet.g.clone(), frame: jet.frame.clone(), spin, x })
            })
            .collect::<Result<_>>()?;
        let links = build_links(scenario, dims, &lo, &spacing);
        let grid = LatticeGrid {
            scenario: Arc::new(scenario.clone()),
            rep,
            dims: dims.to_vec(),
            periods,
            spacing,
            flux: scenario.flux,
            sites,
            links,
        };
        let total = grid.total_flux_phase();
        let target = 2.0 * PI * grid.flux as f64;
        if (total - target).abs() > 1e-8 * (1.0 + target.abs()) {
            return Err(Error::Construction(format!("plaquette phases sum to {total}, expected {target}")));
        }
        Ok(grid)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn spinor_dim(&self) -> usize {
        self.rep.dim()
    }

    /// Length of a lattice spinor vector.
    pub fn field_len(&self) -> usize {
        self.site_count() * self.spinor_dim()
    }

    pub fn h_max(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.weight).collect()
    }

    pub fn neighbor(&self, s: usize, mu: usize, step: isize) -> usize {
        let mut idx = unravel(&self.dims, s);
        let m = self.dims[mu] as isize;
        idx[mu] = ((idx[mu] as isize + step).rem_euclid(m)) as usize;
        ravel(&self.dims, &idx)
    }

    /// Field strength felt by spinors from the quantized flux, `2πq / area`.
    pub fn field_strength(&self) -> f64 {
        if self.n() < 2 {
            return 0.0;
        }
        2.0 * PI * self.flux as f64 / (self.periods[0] * self.periods[1])
    }

    /// Sum of plaquette phases in the (0,1) planes, averaged over the other axes.
    pub fn total_flux_phase(&self) -> f64 {
        if self.n() < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for s in 0..self.site_count() {
            let s1 = self.neighbor(s, 0, 1);
            let s2 = self.neighbor(s, 1, 1);
            let p = self.links[0][s] * self.links[1][s1] * self.links[0][s2].conj() * self.links[1][s].conj();
            total += p.arg();
        }
        let planes: usize = self.dims[2..].iter().product();
        total / planes as f64
    }

    /// `U_μ(x) → e^{iθ(x)} U_μ(x) e^{-iθ(x+μ)}`.
    pub fn gauge_transform(&self, theta: &[f64]) -> Result<LatticeGrid> {
        if theta.len() != self.site_count() {
            return Err(Error::DimensionMismatch { expected: self.site_count(), got: theta.len() });
        }
        let mut out = self.clone();
        for mu in 0..self.n() {
            for s in 0..self.site_count() {
                let t = self.neighbor(s, mu, 1);
                out.links[mu][s] = self.links[mu][s] * C64::from_polar(1.0, theta[s] - theta[t]);
            }
        }
        Ok(out)
    }

    /// Samples a smooth spinor field at the sites.
    pub fn sample_field(&self, field: &dyn SpinorField) -> Result<CVec> {
        let d = self.spinor_dim();
        if field.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: field.dim() });
        }
        let parts: Vec<CVec> = self.sites.par_iter().map(|s| field.eval(&s.x)).collect::<Result<_>>()?;
        Ok(concat(&parts))
    }

    /// Lattice covariant derivatives `∇_{e_k}ψ` from central differences with
    /// link phases; this is the stencil behind [`assemble_dirac`].
    pub fn covariant_differences(&self, psi: &CVec) -> Result<Vec<Vec<CVec>>> {
        self.check_field(psi)?;
        let n = self.n();
        let d = self.spinor_dim();
        Ok((0..self.site_count())
            .into_par_iter()
            .map(|s| {
                let site = &self.sites[s];
                let here = psi.rows(s * d, d).into_owned();
                let diffs: Vec<CVec> = (0..n)
                    .map(|mu| {
                        let f = self.neighbor(s, mu, 1);
                        let b = self.neighbor(s, mu, -1);
                        let fwd = psi.rows(f * d, d) * self.links[mu][s];
                        let bwd = psi.rows(b * d, d) * self.links[mu][b].conj();
                        (fwd - bwd) / c(2.0 * self.spacing[mu], 0.0)
                    })
                    .collect();
                (0..n)
                    .map(|k| {
                        let mut v = &site.spin[k] * &here;
                        for (mu, dm) in diffs.iter().enumerate() {
                            v += dm * c(site.frame[(mu, k)], 0.0);
                        }
                        v
                    })
                    .collect()
            })
            .collect())
    }

    fn check_field(&self, psi: &CVec) -> Result<()> {
        if psi.len() != self.field_len() {
            return Err(Error::DimensionMismatch { expected: self.field_len(), got: psi.len() });
        }
        Ok(())
    }
}

fn unravel(dims: &[usize], mut s: usize) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for mu in (0..dims.len()).rev() {
        idx[mu] = s % dims[mu];
        s /= dims[mu];
    }
    idx
}

fn ravel(dims: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &m)| acc * m + i)
}

fn concat(parts: &[CVec]) -> CVec {
    let d = parts.first().map_or(0, |p| p.len());
    CVec::from_fn(parts.len() * d, |k, _| parts[k / d][k % d])
}

/// Landau gauge on axes (0,1) with a single seam at the last column of axis 0,
/// times midpoint phases of the smooth connection. Spinors see `½a`.
fn build_links(sc: &Scenario, dims: &[usize], lo: &[f64], h: &[f64]) -> Vec<Vec<C64>> {
    let n = dims.len();
    let count: usize = dims.iter().product();
    let q = sc.flux as f64;
    (0..n)
        .map(|mu| {
            (0..count)
                .map(|s| {
                    let idx = unravel(dims, s);
                    let mut phase = 0.0;
                    if sc.flux != 0 {
                        let (n0, n1) = (dims[0] as f64, dims[1] as f64);
                        if mu == 1 {
                            phase += 2.0 * PI * q * idx[0] as f64 / (n0 * n1);
                        } else if mu == 0 && idx[0] == dims[0] - 1 {
                            phase -= 2.0 * PI * q * idx[1] as f64 / n1;
                        }
                    }
                    if sc.connection.is_some() {
                        let mid: Vec<f64> = (0..n)
                            .map(|nu| lo[nu] + (idx[nu] as f64 + if nu == mu { 0.5 } else { 0.0 }) * h[nu])
                            .collect();
                        phase += 0.5 * sc.connection_at(&mid)[mu] * h[mu];
                    }
                    C64::from_polar(1.0, phase)
                })
                .collect()
        })
        .collect()
}

/// Sparse operator on lattice spinor fields.
#[derive(Clone, Debug)]
pub struct DiracMatrix {
    pub dim: usize,
    pub spinor_dim: usize,
    /// Per-site weights `w(x)`.
    pub weights: Vec<f64>,
    /// Row-wise `(column, value)` lists sorted by column.
    pub rows: Vec<Vec<(usize, C64)>>,
    pub wilson: f64,
}

impl DiracMatrix {
    fn from_triplets(dim: usize, spinor_dim: usize, weights: Vec<f64>, mut trip: Vec<(usize, usize, C64)>, wilson: f64) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, col, v) in trip {
            let row = &mut rows[r];
            match row.last_mut() {
                Some(last) if last.0 == col => last.1 += v,
                _ => row.push((col, v)),
            }
        }
        DiracMatrix { dim, spinor_dim, weights, rows, wilson }
    }

    fn weight(&self, row: usize) -> f64 {
        self.weights[row / self.spinor_dim]
    }

    pub fn apply(&self, psi: &CVec) -> Result<CVec> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: psi.len() });
        }
        let out: Vec<C64> = self.rows.par_iter().map(|row| row.iter().map(|(j, v)| v * psi[*j]).sum()).collect();
        Ok(CVec::from_vec(out))
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                m[(r, *j)] = *v;
            }
        }
        m
    }

    /// `W^{1/2} D W^{-1/2}`, Hermitian when `D` is w-self-adjoint.
    pub fn normalized_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            let wr = self.weight(r).sqrt();
            for (j, v) in row {
                m[(r, *j)] = v * (wr / self.weight(*j).sqrt());
            }
        }
        m
    }

    /// `max |(WD) - (WD)†|` relative to `max |WD|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut scale = 0.0f64;
        let mut worst = 0.0f64;
        for (r, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                let a = v * self.weight(r);
                let b = self.entry(*j, r) * self.weight(*j);
                scale = scale.max(a.norm());
                worst = worst.max((a - b.conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn entry(&self, r: usize, col: usize) -> C64 {
        match self.rows[r].binary_search_by(|(j, _)| j.cmp(&col)) {
            Ok(k) => self.rows[r][k].1,
            Err(_) => ZERO,
        }
    }

    /// `⟨ψ, φ⟩_w = Σ w ψ^* φ`.
    pub fn inner(&self, psi: &CVec, phi: &CVec) -> C64 {
        (0..self.dim).map(|k| psi[k].conj() * phi[k] * self.weight(k)).sum()
    }

    /// Raw little-endian f64 dump of the dense matrix, row-major, re/im interleaved.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(self.dim * self.dim * 16);
        let dense = self.to_dense();
        for r in 0..self.dim {
            for col in 0..self.dim {
                let z = dense[(r, col)];
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        write_atomic(path, &buf)
    }
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeOptions {
    /// Wilson coefficient ρ; the term is `ρ h_max / 2 · Γ W⁻¹D_f†W D_f`.
    /// Ignored in odd dimension, where every mode comes with `2^n - 1` doublers.
    pub wilson: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions { wilson: 1.0 }
    }
}

fn central_triplets(grid: &LatticeGrid) -> Vec<(usize, usize, C64)> {
    let n = grid.n();
    let d = grid.spinor_dim();
    let gam = &grid.rep.gammas;
    (0..grid.site_count())
        .into_par_iter()
        .flat_map_iter(|s| {
            let site = &grid.sites[s];
            let mut out = Vec::new();
            let mut local = CMat::zeros(d, d);
            for k in 0..n {
                local += &gam[k] * &site.spin[k];
            }
            push_block(&mut out, s, s, d, &local, ONE);
            for mu in 0..n {
                // Σ_k γ_k E^μ_k / 2h
                let mut g = CMat::zeros(d, d);
                for k in 0..n {
                    g += &gam[k] * c(site.frame[(mu, k)], 0.0);
                }
                let f = grid.neighbor(s, mu, 1);
                let b = grid.neighbor(s, mu, -1);
                let inv = 1.0 / (2.0 * grid.spacing[mu]);
                push_block(&mut out, s, f, d, &g, grid.links[mu][s] * inv);
                push_block(&mut out, s, b, d, &g, -grid.links[mu][b].conj() * inv);
            }
            out
        })
        .collect()
}

fn push_block(out: &mut Vec<(usize, usize, C64)>, s: usize, t: usize, d: usize, m: &CMat, scale: C64) {
    for a in 0..d {
        for b in 0..d {
            let v = m[(a, b)] * scale;
            if v != ZERO {
                out.push((s * d + a, t * d + b, v));
            }
        }
    }
}

/// Unsymmetrized central-difference operator `D_c`.
pub fn assemble_central(grid: &LatticeGrid) -> DiracMatrix {
    DiracMatrix::from_triplets(grid.field_len(), grid.spinor_dim(), grid.weights(), central_triplets(grid), 0.0)
}

/// `½(D_c + W⁻¹ D_c† W)` plus the Wilson term.
pub fn assemble_dirac(grid: &LatticeGrid, opts: LatticeOptions) -> Result<DiracMatrix> {
    let d = grid.spinor_dim();
    let w = grid.weights();
    let central = central_triplets(grid);
    let mut trip = Vec::with_capacity(2 * central.len());
    for &(r, col, v) in &central {
        trip.push((r, col, v * 0.5));
        trip.push((col, r, v.conj() * (0.5 * w[r / d] / w[col / d])));
    }
    // odd n has no chirality to pair with, and a scalar term only moves the
    // doubler zeros; the naive operator is used there.
    let rho = if grid.n() % 2 == 0 { opts.wilson } else { 0.0 };
    if rho != 0.0 {
        trip.extend(wilson_triplets(grid, 0.5 * rho * grid.h_max()));
    }
    let m = DiracMatrix::from_triplets(grid.field_len(), d, w, trip, rho);
    let defect = m.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::Construction(format!("assembled operator is not w-Hermitian (defect {defect:e})")));
    }
    Ok(m)
}

/// One-sided operator `Σ_k γ_k (Σ_μ E^μ_k ∂^±_μ + S_k)`; `forward` picks the side.
fn one_sided_triplets(grid: &LatticeGrid, forward: bool) -> Vec<(usize, usize, C64)> {
    let n = grid.n();
    let d = grid.spinor_dim();
    let gam = &grid.rep.gammas;
    (0..grid.site_count())
        .into_par_iter()
        .flat_map_iter(|s| {
            let site = &grid.sites[s];
            let mut out = Vec::new();
            let mut local = CMat::zeros(d, d);
            for k in 0..n {
                local += &gam[k] * &site.spin[k];
            }
            for mu in 0..n {
                let mut g = CMat::zeros(d, d);
                for k in 0..n {
                    g += &gam[k] * c(site.frame[(mu, k)], 0.0);
                }
                let inv = 1.0 / grid.spacing[mu];
                if forward {
                    local -= &g * c(inv, 0.0);
                    push_block(&mut out, s, grid.neighbor(s, mu, 1), d, &g, grid.links[mu][s] * inv);
                } else {
                    local += &g * c(inv, 0.0);
                    let b = grid.neighbor(s, mu, -1);
                    push_block(&mut out, s, b, d, &g, -grid.links[mu][b].conj() * inv);
                }
            }
            push_block(&mut out, s, s, d, &local, ONE);
            out
        })
        .collect()
}

/// `coef · Γ K` with `K = ½ Σ_± W⁻¹ D_±† W D_±` and `Γ` the chirality. The
/// one-sided operators anticommute with `Γ`, so the term commutes with it and
/// stays w-Hermitian. On smooth fields `K ≈ D²`, so harmonic spinors are kept;
/// averaging the two sides cancels the `γ_iγ_j` cross terms of the flat symbol,
/// leaving `Σ 4 sin²(θ/2)/h²`, which lifts every doubler.
fn wilson_triplets(grid: &LatticeGrid, coef: f64) -> Vec<(usize, usize, C64)> {
    let d = grid.spinor_dim();
    let w = grid.weights();
    let mut k_trip: Vec<(usize, usize, C64)> = Vec::new();
    for forward in [true, false] {
        let side = DiracMatrix::from_triplets(grid.field_len(), d, w.clone(), one_sided_triplets(grid, forward), 0.0);
        // ½ K(r,c) += ½ Σ_m (w_m / w_r) conj(D(m,r)) D(m,c)
        k_trip.par_extend(side.rows.par_iter().enumerate().flat_map_iter(|(m, row)| {
            let wm = w[m / d];
            let mut out = Vec::with_capacity(row.len() * row.len());
            for (r, a) in row {
                for (col, b) in row {
                    out.push((*r, *col, a.conj() * b * (0.5 * wm / w[r / d])));
                }
            }
            out
        }));
    }
    let k = DiracMatrix::from_triplets(grid.field_len(), d, w, k_trip, 0.0);
    let gamma = &grid.rep.volume;
    let mut out = Vec::new();
    for (r, row) in k.rows.iter().enumerate() {
        let (s, b) = (r / d, r % d);
        for a in 0..d {
            let g = gamma[(a, b)];
            if g != ZERO {
                for (col, v) in row {
                    out.push((s * d + a, *col, g * v * coef));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// w-normalized, phase fixed; aligned with `eigenvalues`.
    pub eigenvectors: Option<Vec<CVec>>,
    pub dims: Vec<usize>,
    pub flux: i64,
    pub wilson: f64,
    /// Richardson estimate `|λ_N - λ_{N/2}| / 3` per eigenvalue.
    pub convergence: Option<Vec<f64>>,
    pub method: &'static str,
    /// Set when the operator is known to anticommute with chirality.
    pub symmetric: bool,
    /// Multiplicity of each continuum mode in the lattice spectrum.
    pub doubling: usize,
}

/// Largest-magnitude component made real positive.
pub fn fix_phase(v: &mut CVec) {
    let mut best = 0;
    for k in 1..v.len() {
        if v[k].norm() > v[best].norm() * (1.0 + 1e-12) {
            best = k;
        }
    }
    if v.is_empty() || v[best].norm() == 0.0 {
        return;
    }
    let ph = v[best].conj() / v[best].norm();
    for z in v.iter_mut() {
        *z *= ph;
    }
    v[best] = c(v[best].re, 0.0);
}

/// Eigenpairs of the w-Hermitian problem. With `count`, the `count` values
/// closest to zero are kept, reported ascending.
pub fn spectrum(dm: &DiracMatrix, count: Option<usize>, vectors: bool) -> Result<SpectrumResult> {
    spectrum_with_limit(dm, count, vectors, DENSE_LIMIT)
}

pub fn spectrum_with_limit(dm: &DiracMatrix, count: Option<usize>, vectors: bool, dense_limit: usize) -> Result<SpectrumResult> {
    let want = count.unwrap_or(dm.dim).min(dm.dim);
    let (pairs, method) = if dm.dim <= dense_limit {
        let m = dm.normalized_dense();
        let e = hermitian_eigen(&m, vectors)?;
        let idx = closest_to_zero(&e.values, want);
        let pairs: Vec<(f64, Option<CVec>)> = idx
            .into_iter()
            .map(|k| (e.values[k], e.vectors.as_ref().map(|v| v.column(k).into_owned())))
            .collect();
        (pairs, "dense")
    } else {
        if count.is_none() {
            return Err(Error::Precondition(format!("dimension {} exceeds the dense limit; request a count", dm.dim)));
        }
        let pairs = lanczos_near_zero(dm, want)?;
        (pairs.into_iter().map(|(l, v)| (l, if vectors { Some(v) } else { None })).collect(), "lanczos")
    };
    let mut pairs = pairs;
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = if vectors {
        Some(
            pairs
                .into_iter()
                .map(|(_, v)| {
                    let v = v.expect("vectors requested");
                    let mut psi = CVec::from_fn(v.len(), |k, _| v[k] / dm.weight(k).sqrt());
                    fix_phase(&mut psi);
                    psi
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        dims: Vec::new(),
        flux: 0,
        wilson: dm.wilson,
        convergence: None,
        method,
        symmetric: false,
        doubling: 1,
    })
}

fn closest_to_zero(values: &[f64], want: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()).then(a.cmp(&b)));
    idx.truncate(want);
    idx
}

/// Lanczos with full reorthogonalization on `σ - M²`, followed by a
/// Rayleigh–Ritz step with `M` on the converged subspace.
fn lanczos_near_zero(dm: &DiracMatrix, want: usize) -> Result<Vec<(f64, CVec)>> {
    let n = dm.dim;
    let sw: Vec<f64> = (0..n).map(|k| dm.weight(k).sqrt()).collect();
    let apply_m = |v: &CVec| -> Result<CVec> {
        let u = CVec::from_fn(n, |k, _| v[k] / sw[k]);
        let du = dm.apply(&u)?;
        Ok(CVec::from_fn(n, |k, _| du[k] * sw[k]))
    };
    let gersh = dm
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| row.iter().map(|(j, v)| v.norm() * sw[r] / sw[*j]).sum::<f64>())
        .fold(0.0, f64::max);
    let sigma = gersh * gersh;
    let mut rng_state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut start = CVec::from_fn(n, |_, _| {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        c((rng_state % 10_000) as f64 / 10_000.0 - 0.5, ((rng_state / 10_000) % 10_000) as f64 / 10_000.0 - 0.5)
    });
    start /= c(start.norm(), 0.0);
    let mut basis: Vec<CVec> = vec![start];
    let mut m = (4 * want + 40).max(120);
    let cap = 1200.min(n);
    loop {
        let m_eff = m.min(cap);
        while basis.len() < m_eff {
            let last = basis.last().unwrap().clone();
            let mut w = apply_m(&apply_m(&last)?)?;
            w = &last * c(sigma, 0.0) - w;
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&w);
                    w -= b * proj;
                }
            }
            let nrm = w.norm();
            if nrm < 1e-12 {
                break;
            }
            basis.push(w / c(nrm, 0.0));
        }
        let k = basis.len();
        let mb: Vec<CVec> = basis.iter().map(&apply_m).collect::<Result<_>>()?;
        let h = CMat::from_fn(k, k, |i, j| basis[i].dotc(&mb[j]));
        let e = hermitian_eigen(&((&h + h.adjoint()) * c(0.5, 0.0)), true)?;
        let ev = e.vectors.unwrap();
        let idx = closest_to_zero(&e.values, want);
        let mut out = Vec::new();
        let mut worst = 0.0f64;
        for &j in &idx {
            let mut v = CVec::zeros(n);
            for (i, b) in basis.iter().enumerate() {
                v += b * ev[(i, j)];
            }
            let r = apply_m(&v)? - &v * c(e.values[j], 0.0);
            worst = worst.max(r.norm());
            out.push((e.values[j], v));
        }
        if worst <= 1e-8 * gersh.max(1.0) {
            return Ok(out);
        }
        if m_eff >= cap || k < m_eff {
            return Err(Error::Eigensolver(format!(
                "Lanczos did not converge: residual {worst:e} with {k} vectors (dimension {n}, spectral radius bound {gersh:e})"
            )));
        }
        m *= 2;
    }
}

/// Assembles and solves, optionally with a half-resolution convergence estimate.
pub fn lattice_spectrum(
    scenario: &Scenario,
    dims: &[usize],
    opts: LatticeOptions,
    count: Option<usize>,
    vectors: bool,
    half_grid: bool,
) -> Result<(LatticeGrid, SpectrumResult)> {
    let grid = LatticeGrid::new(scenario, dims)?;
    let dm = assemble_dirac(&grid, opts)?;
    let mut res = spectrum(&dm, count, vectors)?;
    res.dims = dims.to_vec();
    res.flux = grid.flux;
    res.symmetric = opts.wilson == 0.0 && grid.n() % 2 == 0;
    res.doubling = if grid.n() % 2 == 1 || opts.wilson == 0.0 { 1 << grid.n() } else { 1 };
    if half_grid {
        let half: Vec<usize> = dims.iter().map(|d| d / 2).collect();
        let coarse = LatticeGrid::coarse(scenario, &half)?;
        let cres = spectrum(&assemble_dirac(&coarse, opts)?, Some(res.eigenvalues.len()), false)?;
        res.convergence = Some(
            res.eigenvalues
                .iter()
                .enumerate()
                .map(|(k, l)| cres.eigenvalues.get(k).map_or(f64::NAN, |c| (l - c).abs() / 3.0))
                .collect(),
        );
    }
    Ok((grid, res))
}

/// Continuum spectrum on a flat torus: for each integer `p`, the eigenvalues
/// of the symbol `i Σ_k γ_k p(e_k)`. Returns the `count` values closest to zero.
pub fn flat_torus_oracle(grid: &LatticeGrid, count: usize, pmax: i64) -> Result<Vec<f64>> {
    let n = grid.n();
    let site = &grid.sites[0];
    let mut vals = Vec::new();
    let mut p = vec![-pmax; n];
    loop {
        let kvec: Vec<f64> = (0..n).map(|mu| 2.0 * PI * p[mu] as f64 / grid.periods[mu]).collect();
        vals.extend(symbol_eigen(grid, site, &kvec, |k| k)?.0);
        let mut axis = 0;
        loop {
            if axis == n {
                vals.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
                vals.truncate(count);
                vals.sort_by(f64::total_cmp);
                return Ok(vals);
            }
            p[axis] += 1;
            if p[axis] <= pmax {
                break;
            }
            p[axis] = -pmax;
            axis += 1;
        }
    }
}

/// Eigen-decomposition of `i Σ_{k,μ} γ_k E^μ_k f(p_μ)`.
fn symbol_eigen(grid: &LatticeGrid, site: &SiteData, p: &[f64], f: impl Fn(f64) -> f64) -> Result<(Vec<f64>, CMat)> {
    let d = grid.spinor_dim();
    let mut m = CMat::zeros(d, d);
    for k in 0..grid.n() {
        let pk: f64 = (0..grid.n()).map(|mu| site.frame[(mu, k)] * f(p[mu])).sum();
        m += &grid.rep.gammas[k] * (I * pk);
    }
    let e = hermitian_eigen(&m, true)?;
    Ok((e.values, e.vectors.unwrap()))
}

/// Exact eigenvector `e^{ip·x}σ` of the central operator on a flat grid with
/// constant metric and no flux. `p` holds integer wave numbers; `branch`
/// selects the symbol eigenvector (ascending). Returns `(ψ, λ)` with
/// `⟨ψ,ψ⟩_w = 1`.
pub fn lattice_plane_wave(grid: &LatticeGrid, p: &[i64], branch: usize) -> Result<(CVec, f64)> {
    if grid.flux != 0 || grid.scenario.connection.is_some() {
        return Err(Error::Precondition("plane waves need a flux-free grid without a connection".into()));
    }
    let n = grid.n();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    let kvec: Vec<f64> = (0..n).map(|mu| 2.0 * PI * p[mu] as f64 / grid.periods[mu]).collect();
    let h = grid.spacing.clone();
    let site = &grid.sites[0];
    let mut m = CMat::zeros(grid.spinor_dim(), grid.spinor_dim());
    for k in 0..n {
        let pk: f64 = (0..n).map(|mu| site.frame[(mu, k)] * (kvec[mu] * h[mu]).sin() / h[mu]).sum();
        m += &grid.rep.gammas[k] * (I * pk);
    }
    let e = hermitian_eigen(&m, true)?;
    if branch >= e.values.len() {
        return Err(Error::Precondition(format!("branch {branch} out of range")));
    }
    let sigma = e.vectors.unwrap().column(branch).into_owned();
    let parts: Vec<CVec> = grid
        .sites
        .iter()
        .map(|s| {
            let ph: f64 = (0..n).map(|mu| kvec[mu] * (s.x[mu] - grid.scenario.domain.axes[mu].lo)).sum();
            &sigma * C64::from_polar(1.0, ph)
        })
        .collect();
    let mut psi = concat(&parts);
    let nrm = inner_product(&psi, &psi, grid)?.sqrt();
    psi /= c(nrm, 0.0);
    Ok((psi, e.values[branch]))
}

/// `Σ w(x) f(x)`.
pub fn integrate(samples: &[f64], grid: &LatticeGrid) -> Result<f64> {
    if samples.len() != grid.site_count() {
        return Err(Error::DimensionMismatch { expected: grid.site_count(), got: samples.len() });
    }
    Ok(samples.iter().zip(&grid.sites).map(|(f, s)| f * s.weight).sum())
}

/// `∫ Re⟨ψ, φ⟩ dv`.
pub fn inner_product(psi: &CVec, phi: &CVec, grid: &LatticeGrid) -> Result<f64> {
    grid.check_field(psi)?;
    grid.check_field(phi)?;
    let d = grid.spinor_dim();
    let pointwise: Vec<f64> = (0..grid.site_count())
        .map(|s| (0..d).map(|a| (psi[s * d + a].conj() * phi[s * d + a]).re).sum())
        .collect();
    integrate(&pointwise, grid)
}

/// Per-site energy-momentum values from the lattice stencil.
pub fn lattice_em_tensor(psi: &CVec, grid: &LatticeGrid, floor: f64) -> Result<Vec<crate::emtensor::EmTensorValue>> {
    let derivs = grid.covariant_differences(psi)?;
    let d = grid.spinor_dim();
    Ok(derivs
        .iter()
        .enumerate()
        .map(|(s, ds)| {
            let here = psi.rows(s * d, d).into_owned();
            crate::emtensor::em_value(&grid.rep, &here, ds, floor)
        })
        .collect())
}

/// Frame components of the full curvature form (flux plus smooth part) per site.
pub fn curvature_forms(grid: &LatticeGrid) -> Result<Vec<RMat>> {
    let n = grid.n();
    let b = grid.field_strength();
    grid.sites
        .par_iter()
        .map(|s| {
            let jet = geometry_jet(&grid.scenario, &s.x, JetLevel::Connection)?;
            let mut om = curvature_two_form(&grid.scenario, &jet)?;
            if b != 0.0 {
                // spinors feel ½Ω, so the uniform part of Ω is 2B dx⁰∧dx¹
                let mut coord = RMat::zeros(n, n);
                coord[(0, 1)] = 2.0 * b;
                coord[(1, 0)] = -2.0 * b;
                om += jet.tensor_on_frame(&coord);
            }
            Ok(om)
        })
        .collect()
}

/// CSV with columns `index,lambda,convergence`.
pub fn eigen_csv(res: &SpectrumResult) -> String {
    let mut out = String::from("index,lambda,convergence\n");
    for (k, l) in res.eigenvalues.iter().enumerate() {
        let conv = res.convergence.as_ref().and_then(|c| c.get(k)).map_or(String::new(), |v| format!("{v:.16e}"));
        out.push_str(&format!("{k},{l:.16e},{conv}\n"));
    }
    out
}

/// CSV with columns `mode,site,x_0..x_{n-1},component,re,im`.
pub fn eigenvector_csv(res: &SpectrumResult, grid: &LatticeGrid) -> Result<String> {
    let vecs = res.eigenvectors.as_ref().ok_or_else(|| Error::Precondition("spectrum computed without eigenvectors".into()))?;
    let n = grid.n();
    let d = grid.spinor_dim();
    let mut out = String::from("mode,site");
    for mu in 0..n {
        out.push_str(&format!(",x{mu}"));
    }
    out.push_str(",component,re,im\n");
    for (m, v) in vecs.iter().enumerate() {
        for (s, site) in grid.sites.iter().enumerate() {
            for a in 0..d {
                out.push_str(&format!("{m},{s}"));
                for x in &site.x {
                    out.push_str(&format!(",{x:.16e}"));
                }
                let z = v[s * d + a];
                out.push_str(&format!(",{a},{:.16e},{:.16e}\n", z.re, z.im));
            }
        }
    }
    Ok(out)
}
