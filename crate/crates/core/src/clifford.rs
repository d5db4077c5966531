//! Complex spinor representations of real Clifford algebras `Cl_{r,s}`.
//!
//! Generators satisfy `γ_j γ_k + γ_k γ_j = -2 ε_j δ_jk`, with `ε_j = +1` for the
//! first `r` (positive) directions and `-1` for the last `s`.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{i_pow, inverse, kron, max_abs, c, CMat, CVec, RMat, C64, I, ONE, ZERO};

pub const MAX_DIM: usize = 10;
const CHECK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub r: usize,
    pub s: usize,
}

impl Signature {
    pub fn new(r: usize, s: usize) -> Result<Self> {
        let n = r + s;
        if n == 0 || n > MAX_DIM {
            return Err(Error::UnsupportedSignature { r, s, reason: format!("need 1 <= r+s <= {MAX_DIM}") });
        }
        Ok(Signature { r, s })
    }

    pub fn riemannian(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn n(&self) -> usize {
        self.r + self.s
    }

    pub fn eps(&self, j: usize) -> f64 {
        if j < self.r {
            1.0
        } else {
            -1.0
        }
    }

    pub fn eps_vec(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.eps(j)).collect()
    }

    pub fn eta(&self) -> RMat {
        RMat::from_diagonal(&nalgebra::DVector::from_vec(self.eps_vec()))
    }

    pub fn spinor_dim(&self) -> usize {
        1 << (self.n() / 2)
    }

    pub fn is_riemannian(&self) -> bool {
        self.s == 0
    }
}

fn pauli() -> [CMat; 4] {
    let id = CMat::identity(2, 2);
    let s1 = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let s2 = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let s3 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [id, s1, s2, s3]
}

/// Hermitian generators squaring to `+1`, built as Jordan–Wigner Pauli strings.
fn euclidean_generators(n: usize) -> Vec<CMat> {
    let m = n / 2;
    let [id, s1, s2, s3] = pauli();
    let string = |factors: Vec<&CMat>| -> CMat {
        factors.into_iter().fold(CMat::identity(1, 1), |acc, f| kron(&acc, f))
    };
    let mut out = Vec::with_capacity(n);
    for k in 0..2 * m {
        let p = k / 2;
        let mut f: Vec<&CMat> = Vec::with_capacity(m);
        for _ in 0..p {
            f.push(&s3);
        }
        f.push(if k % 2 == 0 { &s1 } else { &s2 });
        for _ in p + 1..m {
            f.push(&id);
        }
        out.push(string(f));
    }
    if n % 2 == 1 {
        out.push(string(vec![&s3; m]));
    }
    out
}

/// Product `γ_{j1} γ_{j2} ...` over the set bits of `mask`, in increasing order.
pub fn monomial(gens: &[CMat], mask: u32) -> CMat {
    let d = gens[0].nrows();
    let mut out = CMat::identity(d, d);
    for (j, g) in gens.iter().enumerate() {
        if mask & (1 << j) != 0 {
            out = out * g;
        }
    }
    out
}

/// Inverse of [`monomial`], given `squares[j]` with `γ_j² = squares[j]·1`.
pub fn monomial_inverse(gens: &[CMat], squares: &[f64], mask: u32) -> CMat {
    let d = gens[0].nrows();
    let mut out = CMat::identity(d, d);
    for j in (0..gens.len()).rev() {
        if mask & (1 << j) != 0 {
            out = out * (&gens[j] * c(1.0 / squares[j], 0.0));
        }
    }
    out
}

fn anticommutator_defect(gens: &[CMat], squares: &[f64]) -> f64 {
    let d = gens[0].nrows();
    let id = CMat::identity(d, d);
    let mut worst: f64 = 0.0;
    for j in 0..gens.len() {
        for k in j..gens.len() {
            let ac = &gens[j] * &gens[k] + &gens[k] * &gens[j];
            let target = if j == k { &id * c(2.0 * squares[j], 0.0) } else { CMat::zeros(d, d) };
            worst = worst.max(max_abs(&(ac - target)));
        }
    }
    worst
}

/// A concrete irreducible complex representation with its volume element and
/// invariant Hermitian form.
#[derive(Clone, Debug)]
pub struct GammaRep {
    pub signature: Signature,
    pub gammas: Vec<CMat>,
    pub volume: CMat,
    /// Hermitian `B` with `γ_j^* B = (-1)^{s+1} B γ_j`; the spinor pairing is `σ^* B τ`.
    pub form: CMat,
    /// Odd `n` only: the representation with all generators negated.
    pub negated: bool,
}

impl GammaRep {
    pub fn n(&self) -> usize {
        self.signature.n()
    }

    pub fn dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    pub fn squares(&self) -> Vec<f64> {
        self.signature.eps_vec().into_iter().map(|e| -e).collect()
    }

    pub fn monomial(&self, mask: u32) -> CMat {
        monomial(&self.gammas, mask)
    }

    pub fn monomial_inverse(&self, mask: u32) -> CMat {
        monomial_inverse(&self.gammas, &self.squares(), mask)
    }

    /// `Σ_j v_j γ_j` for frame components `v`.
    pub fn clifford_matrix(&self, v: &[f64]) -> Result<CMat> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: v.len() });
        }
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for (vj, g) in v.iter().zip(&self.gammas) {
            if *vj != 0.0 {
                m += g * c(*vj, 0.0);
            }
        }
        Ok(m)
    }

    pub fn clifford_action(&self, v: &[f64], sigma: &CVec) -> Result<CVec> {
        self.check_spinor(sigma)?;
        Ok(self.clifford_matrix(v)? * sigma)
    }

    /// Clifford action of a two-form given by antisymmetric frame components:
    /// `Σ_{i<j} ε_i ε_j Ω_ij γ_i γ_j`.
    pub fn two_form_matrix(&self, omega: &RMat) -> Result<CMat> {
        let n = self.n();
        if omega.nrows() != n || omega.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: omega.nrows() });
        }
        let defect = (omega + omega.transpose()).abs().max();
        let scale = omega.abs().max().max(1.0);
        if defect > 1e-12 * scale {
            return Err(Error::NotTwoForm(defect));
        }
        let d = self.dim();
        let eps = self.signature.eps_vec();
        let mut m = CMat::zeros(d, d);
        for i in 0..n {
            for j in i + 1..n {
                let w = omega[(i, j)] * eps[i] * eps[j];
                if w != 0.0 {
                    m += &self.gammas[i] * &self.gammas[j] * c(w, 0.0);
                }
            }
        }
        Ok(m)
    }

    pub fn two_form_action(&self, omega: &RMat, sigma: &CVec) -> Result<CVec> {
        self.check_spinor(sigma)?;
        Ok(self.two_form_matrix(omega)? * sigma)
    }

    /// `σ^* B τ`.
    pub fn pairing(&self, sigma: &CVec, tau: &CVec) -> C64 {
        (sigma.adjoint() * &self.form * tau)[(0, 0)]
    }

    /// Chirality projectors `(P+, P-)` for even `n`.
    pub fn chirality(&self) -> Option<(CMat, CMat)> {
        if self.n() % 2 == 1 {
            return None;
        }
        let d = self.dim();
        let id = CMat::identity(d, d);
        let half = c(0.5, 0.0);
        Some(((&id + &self.volume) * half, (&id - &self.volume) * half))
    }

    pub fn check_spinor(&self, sigma: &CVec) -> Result<()> {
        if sigma.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: sigma.len() });
        }
        Ok(())
    }

    /// Largest defect of the Clifford relations.
    pub fn relation_defect(&self) -> f64 {
        anticommutator_defect(&self.gammas, &self.squares())
    }

    /// Largest defect of the adjoint rule for the invariant form.
    pub fn form_defect(&self) -> f64 {
        let sign = if self.signature.s % 2 == 0 { -1.0 } else { 1.0 };
        let mut worst = max_abs(&(&self.form - self.form.adjoint()));
        for g in &self.gammas {
            let lhs = g.adjoint() * &self.form;
            let rhs = &self.form * g * c(sign, 0.0);
            worst = worst.max(max_abs(&(lhs - rhs)));
        }
        worst
    }

    /// Debug dump with complex entries as `[re, im]` pairs.
    pub fn to_json(&self) -> Value {
        let mat = |m: &CMat| -> Value {
            Value::Array(
                (0..m.nrows())
                    .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
                    .collect(),
            )
        };
        json!({
            "r": self.signature.r,
            "s": self.signature.s,
            "dim": self.dim(),
            "negated": self.negated,
            "gammas": self.gammas.iter().map(mat).collect::<Vec<_>>(),
            "volume": mat(&self.volume),
            "form": mat(&self.form),
        })
    }
}

/// Volume element `i^{m-s} γ_1⋯γ_n` (even `n`) or `i^{m-1+s} γ_1⋯γ_n` (odd `n`).
pub fn volume_element(gammas: &[CMat], sig: Signature) -> CMat {
    let n = sig.n() as i64;
    let m = n / 2;
    let s = sig.s as i64;
    let phase = if n % 2 == 0 { i_pow(m - s) } else { i_pow(m - 1 + s) };
    monomial(gammas, (1u32 << n) - 1) * phase
}

/// Solves the adjoint constraints for `B` over the monomial basis.
///
/// The first admissible monomial in (size, lexicographic) order is taken, made
/// Hermitian, and fixed up to sign by the first nonzero entry in row-major order.
pub fn invariant_form(gammas: &[CMat], sig: Signature) -> Result<CMat> {
    let n = sig.n();
    let target = if sig.s % 2 == 0 { -1.0 } else { 1.0 };
    // γ_j^* = adj[j] γ_j
    let adj: Vec<f64> = (0..n).map(|j| if j < sig.r { -1.0 } else { 1.0 }).collect();
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let size = mask.count_ones() as i32;
        let ok = (0..n).all(|j| {
            let inside = (mask >> j) & 1;
            let parity = size - inside as i32;
            adj[j] * if parity % 2 == 0 { 1.0 } else { -1.0 } == target
        });
        if !ok {
            continue;
        }
        let mut b = monomial(gammas, mask);
        if max_abs(&(&b - b.adjoint())) > CHECK_TOL {
            b *= I;
        }
        if let Some(z) = b.transpose().iter().find(|z| z.norm() > 1e-9).copied() {
            let flip = if z.re.abs() > 1e-9 { z.re < 0.0 } else { z.im < 0.0 };
            if flip {
                b = -b;
            }
        }
        return Ok(b);
    }
    Err(Error::Construction(format!("no invariant form for signature ({}, {})", sig.r, sig.s)))
}

/// Builds the representation of `Cl_{r,s}`; `negated` selects the inequivalent
/// odd-dimensional representation with all generators negated.
pub fn build_gamma_rep(r: usize, s: usize, negated: bool) -> Result<GammaRep> {
    let sig = Signature::new(r, s)?;
    let n = sig.n();
    let mut gammas: Vec<CMat> = euclidean_generators(n)
        .into_iter()
        .enumerate()
        .map(|(j, h)| if j < r { h * I } else { -h })
        .collect();
    let d = gammas[0].nrows();
    let id = CMat::identity(d, d);
    let mut volume = volume_element(&gammas, sig);
    if n % 2 == 1 && max_abs(&(&volume + &id)) < CHECK_TOL {
        gammas[n - 1] = -gammas[n - 1].clone();
        volume = volume_element(&gammas, sig);
    }
    if negated && n % 2 == 1 {
        for g in gammas.iter_mut() {
            *g = -g.clone();
        }
        volume = volume_element(&gammas, sig);
    }
    let form = invariant_form(&gammas, sig)?;
    let rep = GammaRep { signature: sig, gammas, volume, form, negated: negated && n % 2 == 1 };
    let defect = rep.relation_defect();
    if defect > CHECK_TOL {
        return Err(Error::Construction(format!("Clifford relations violated by {defect:e}")));
    }
    if max_abs(&(&rep.volume * &rep.volume - &id)) > CHECK_TOL {
        return Err(Error::Construction("volume element does not square to one".into()));
    }
    if rep.form_defect() > CHECK_TOL {
        return Err(Error::Construction("invariant form check failed".into()));
    }
    Ok(rep)
}

/// Solves `S src_j S^{-1} = dst_j` by averaging over the monomial group.
pub fn intertwiner(dst: &[CMat], src: &[CMat], squares: &[f64]) -> Result<CMat> {
    let d = dst[0].nrows();
    if src[0].nrows() != d || dst.len() != src.len() {
        return Err(Error::DimensionMismatch { expected: d, got: src[0].nrows() });
    }
    let n = dst.len();
    let pairs: Vec<(CMat, CMat)> = (0..1u32 << n)
        .map(|mask| (monomial(dst, mask), monomial_inverse(src, squares, mask)))
        .collect();
    for seed in 0..d * d {
        let mut x = CMat::zeros(d, d);
        x[(seed / d, seed % d)] = ONE;
        let mut s = CMat::zeros(d, d);
        for (a, b) in &pairs {
            s += a * &x * b;
        }
        let norm = s.norm();
        if norm < 1e-8 {
            continue;
        }
        // unit determinant magnitude, leading entry real positive
        let det = s.determinant();
        s /= c(det.norm().powf(1.0 / d as f64), 0.0);
        if let Some(z) = s.transpose().iter().find(|z| z.norm() > 1e-9).copied() {
            s *= z.conj() / z.norm();
        }
        let mut worst: f64 = 0.0;
        for (a, b) in dst.iter().zip(src) {
            worst = worst.max(max_abs(&(&s * b - a * &s)));
        }
        if worst > 1e-10 {
            return Err(Error::Construction(format!("intertwiner defect {worst:e}")));
        }
        return Ok(s);
    }
    Err(Error::Construction("representations are not equivalent".into()))
}

/// One block of the identification `Σ_M ≅` (part of) `Σ_Z|_M`.
#[derive(Clone, Debug)]
pub struct EmbedBlock {
    /// `d × D`: ambient spinor to hypersurface spinor.
    pub restrict: CMat,
    /// `D × d`: right inverse of `restrict`.
    pub lift: CMat,
    /// `restrict · ν·X · lift = sign · γ(X)`.
    pub sign: f64,
}

/// Identification of `Cl_{r,s}` spinors with ambient `Cl_{r+1,s}` spinors via
/// `α(e_j) = ν·e_j` with `ν = Γ_0`.
#[derive(Clone, Debug)]
pub struct AlphaEmbedding {
    /// `A_j = Γ_0 Γ_{j+1}`.
    pub images: Vec<CMat>,
    /// Image of `P+` (all of `Σ_Z` for even `n`).
    pub plus: EmbedBlock,
    /// Odd `n`: the `P-` half. The two halves carry opposite signs.
    pub minus: Option<EmbedBlock>,
}

impl AlphaEmbedding {
    pub fn restrict(&self, psi: &CVec) -> CVec {
        &self.plus.restrict * psi
    }

    pub fn lift(&self, phi: &CVec) -> CVec {
        &self.plus.lift * phi
    }

    /// Ambient-side matrix of the hypersurface Clifford action `X•`.
    pub fn bullet_matrix(&self, v: &[f64]) -> CMat {
        let dd = self.images[0].nrows();
        let mut m = CMat::zeros(dd, dd);
        for (vj, a) in v.iter().zip(&self.images) {
            m += a * c(*vj, 0.0);
        }
        m
    }
}

fn coordinate_basis(d: usize, idx: &[usize]) -> CMat {
    let mut v = CMat::zeros(d, idx.len());
    for (col, &i) in idx.iter().enumerate() {
        v[(i, col)] = ONE;
    }
    v
}

/// Orthonormal basis of the `±1` eigenspace of a diagonal-or-general involution.
fn eigenspace_basis(p: &CMat) -> Result<CMat> {
    let d = p.nrows();
    let diag = (0..d).all(|i| (0..d).all(|j| i == j || p[(i, j)].norm() < CHECK_TOL));
    if diag {
        let idx: Vec<usize> = (0..d).filter(|&i| (p[(i, i)] - ONE).norm() < CHECK_TOL).collect();
        return Ok(coordinate_basis(d, &idx));
    }
    let eig = crate::linalg::hermitian_eigen(p, true)?;
    let vecs = eig.vectors.expect("vectors requested");
    let cols: Vec<usize> = (0..d).filter(|&k| (eig.values[k] - 1.0).abs() < 1e-9).collect();
    Ok(CMat::from_fn(d, cols.len(), |i, j| vecs[(i, cols[j])]))
}

pub fn alpha_embed(base: &GammaRep, ambient: &GammaRep) -> Result<AlphaEmbedding> {
    let sig = base.signature;
    if ambient.signature.r != sig.r + 1 || ambient.signature.s != sig.s {
        return Err(Error::UnsupportedSignature {
            r: ambient.signature.r,
            s: ambient.signature.s,
            reason: format!("ambient must be ({}, {})", sig.r + 1, sig.s),
        });
    }
    let n = sig.n();
    let nu = &ambient.gammas[0];
    let images: Vec<CMat> = (0..n).map(|j| nu * &ambient.gammas[j + 1]).collect();
    let squares = base.squares();
    let check = anticommutator_defect(&images, &squares);
    if check > 1e-10 {
        return Err(Error::Construction(format!("alpha images violate Clifford relations by {check:e}")));
    }
    if n % 2 == 0 {
        let s = intertwiner(&base.gammas, &images, &squares)?;
        let lift = inverse(&s)?;
        return Ok(AlphaEmbedding { images, plus: EmbedBlock { restrict: s, lift, sign: 1.0 }, minus: None });
    }
    let (pp, pm) = ambient.chirality().expect("ambient dimension is even");
    // each half carries one of the two odd representations; the sign on `ν·X`
    // is the one matching the volume element of `base`
    let block = |proj: &CMat| -> Result<EmbedBlock> {
        let v = eigenspace_basis(&(proj * c(2.0, 0.0) - CMat::identity(proj.nrows(), proj.nrows())))?;
        for sign in [1.0, -1.0] {
            let reduced: Vec<CMat> = images.iter().map(|a| v.adjoint() * a * &v * c(sign, 0.0)).collect();
            let vol = volume_element(&reduced, sig);
            if max_abs(&(&vol - &base.volume)) > 1e-10 {
                continue;
            }
            let s = intertwiner(&base.gammas, &reduced, &squares)?;
            let sinv = inverse(&s)?;
            return Ok(EmbedBlock { restrict: &s * v.adjoint(), lift: &v * sinv, sign });
        }
        Err(Error::Construction("restricted half matches neither odd representation".into()))
    };
    let plus = block(&pp)?;
    let minus = block(&pm)?;
    if plus.sign == minus.sign {
        return Err(Error::Construction("both halves carry the same representation".into()));
    }
    Ok(AlphaEmbedding { images, plus, minus: Some(minus) })
}

/// Worst defects of the algebraic identities for one signature.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SuiteResiduals {
    pub r: usize,
    pub s: usize,
    pub relations: f64,
    pub volume_square: f64,
    /// Even `n`: `ωγ + γω`. Odd `n`: `ωγ - γω` together with `ω - I`.
    pub volume_parity: f64,
    pub adjoint_rule: f64,
    /// Even `n`: `γ P± - P∓ γ`; zero for odd `n`.
    pub chirality_interchange: f64,
    /// Relations of `α(e_j) = ν·e_j` inside `Cl_{r+1,s}`; `None` at the size cap.
    pub alpha_relations: Option<f64>,
}

impl SuiteResiduals {
    pub fn worst(&self) -> f64 {
        [self.relations, self.volume_square, self.volume_parity, self.adjoint_rule, self.chirality_interchange, self.alpha_relations.unwrap_or(0.0)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn suite_residuals(r: usize, s: usize) -> Result<SuiteResiduals> {
    let rep = build_gamma_rep(r, s, false)?;
    let d = rep.dim();
    let id = CMat::identity(d, d);
    let w = &rep.volume;
    let volume_square = max_abs(&(w * w - &id));
    let even = rep.n() % 2 == 0;
    let mut volume_parity: f64 = if even { 0.0 } else { max_abs(&(w - &id)) };
    let mut chirality_interchange: f64 = 0.0;
    let proj = rep.chirality();
    for g in &rep.gammas {
        let x = if even { w * g + g * w } else { w * g - g * w };
        volume_parity = volume_parity.max(max_abs(&x));
        if let Some((pp, pm)) = &proj {
            chirality_interchange = chirality_interchange.max(max_abs(&(g * pp - pm * g))).max(max_abs(&(g * pm - pp * g)));
        }
    }
    let alpha_relations = if rep.n() < MAX_DIM {
        let amb = build_gamma_rep(r + 1, s, false)?;
        let images: Vec<CMat> = (0..rep.n()).map(|j| &amb.gammas[0] * &amb.gammas[j + 1]).collect();
        Some(anticommutator_defect(&images, &rep.squares()))
    } else {
        None
    };
    Ok(SuiteResiduals {
        r,
        s,
        relations: rep.relation_defect(),
        volume_square,
        volume_parity,
        adjoint_rule: rep.form_defect(),
        chirality_interchange,
        alpha_relations,
    })
}

/// Spin lift of an `ε`-orthogonal frame change `q`, with `Λ γ_a Λ^{-1} = Σ_b q_ba γ_b`.
///
/// The sign is chosen so that `Re tr(anchor^{-1} Λ) > 0`; passing the lift at a
/// nearby point keeps the result continuous.
pub fn spin_lift(rep: &GammaRep, q: &RMat, anchor: Option<&CMat>) -> Result<CMat> {
    let n = rep.n();
    let d = rep.dim();
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: q.nrows() });
    }
    let eta = rep.signature.eta();
    let defect = (q.transpose() * &eta * q - &eta).abs().max();
    if defect > 1e-8 {
        return Err(Error::NotSpin(format!("frame change is not orthogonal (defect {defect:e})")));
    }
    if q.determinant() < 0.0 {
        return Err(Error::NotSpin("frame change reverses orientation".into()));
    }
    let rotated: Vec<CMat> = (0..n)
        .map(|a| {
            let mut m = CMat::zeros(d, d);
            for b in 0..n {
                m += &rep.gammas[b] * c(q[(b, a)], 0.0);
            }
            m
        })
        .collect();
    let id = CMat::identity(d, d);
    let m = anchor.cloned().unwrap_or_else(|| id.clone());
    let squares = rep.squares();
    let mut p = CMat::zeros(d, d);
    for mask in 0..1u32 << n {
        p += monomial(&rotated, mask) * &m * monomial_inverse(&rep.gammas, &squares, mask);
    }
    if p.norm() < 1e-8 * (1u64 << n) as f64 {
        return Err(Error::NotSpin("lift degenerates for this anchor".into()));
    }
    // remove the complex scale: real coefficients on even monomials
    let mut best = (0.0, ONE);
    for mask in (0..1u32 << n).filter(|m| m.count_ones() % 2 == 0) {
        let coef = (monomial_inverse(&rep.gammas, &squares, mask) * &p).trace();
        if coef.norm() > best.0 + 1e-12 {
            best = (coef.norm(), coef);
        }
    }
    p *= best.1.conj() / best.0;
    let det = p.determinant().norm();
    p /= c(det.powf(1.0 / d as f64), 0.0);
    let minv = inverse(&m)?;
    if (&minv * &p).trace().re < 0.0 {
        p = -p;
    }
    let pinv = inverse(&p)?;
    let mut worst: f64 = 0.0;
    for a in 0..n {
        worst = worst.max(max_abs(&(&p * &rep.gammas[a] * &pinv - &rotated[a])));
    }
    if worst > 1e-8 {
        return Err(Error::NotSpin(format!("lift check failed ({worst:e})")));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_rejects_empty() {
        assert!(Signature::new(0, 0).is_err());
        assert!(build_gamma_rep(11, 0, false).is_err());
    }

    #[test]
    fn riemannian_form_is_identity() {
        for n in 1..=6 {
            let rep = build_gamma_rep(n, 0, false).unwrap();
            let id = CMat::identity(rep.dim(), rep.dim());
            assert!(max_abs(&(&rep.form - id)) < 1e-14, "n={n}");
        }
    }

    #[test]
    fn odd_volume_is_plus_identity() {
        for (r, s) in [(1, 0), (3, 0), (2, 1), (1, 2), (0, 3), (4, 1)] {
            for neg in [false, true] {
                let rep = build_gamma_rep(r, s, neg).unwrap();
                let id = CMat::identity(rep.dim(), rep.dim());
                let sign = if neg { -1.0 } else { 1.0 };
                assert!(max_abs(&(&rep.volume - &id * c(sign, 0.0))) < 1e-13, "({r},{s}) neg={neg}");
            }
        }
    }

    #[test]
    fn two_form_rejects_symmetric() {
        let rep = build_gamma_rep(2, 0, false).unwrap();
        let om = RMat::identity(2, 2);
        assert!(matches!(rep.two_form_matrix(&om), Err(Error::NotTwoForm(_))));
    }

    #[test]
    fn alpha_embedding_intertwines() {
        for (r, s) in [(1, 0), (2, 0), (3, 0), (1, 1), (2, 1)] {
            let base = build_gamma_rep(r, s, false).unwrap();
            let amb = build_gamma_rep(r + 1, s, false).unwrap();
            let a = alpha_embed(&base, &amb).map_err(|e| format!("({r},{s}): {e}")).unwrap();
            let d = base.dim();
            let id = CMat::identity(d, d);
            assert!(max_abs(&(&a.plus.restrict * &a.plus.lift - &id)) < 1e-12);
            for blk in std::iter::once(&a.plus).chain(a.minus.as_ref()) {
                for j in 0..base.n() {
                    let lhs = &blk.restrict * &a.images[j] * &blk.lift;
                    assert!(max_abs(&(lhs - &base.gammas[j] * c(blk.sign, 0.0))) < 1e-12, "({r},{s}) j={j}");
                }
            }
            if let Some(m) = &a.minus {
                let total = &a.plus.lift * &a.plus.restrict + &m.lift * &m.restrict;
                assert!(max_abs(&(total - CMat::identity(amb.dim(), amb.dim()))) < 1e-12);
            }
        }
    }

    #[test]
    fn spin_lift_of_identity_is_identity() {
        let rep = build_gamma_rep(3, 0, false).unwrap();
        let l = spin_lift(&rep, &RMat::identity(3, 3), None).unwrap();
        assert!(max_abs(&(l - CMat::identity(2, 2))) < 1e-13);
    }

    #[test]
    fn spin_lift_rejects_reflection() {
        let rep = build_gamma_rep(2, 0, false).unwrap();
        let q = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(spin_lift(&rep, &q, None).is_err());
    }
}
