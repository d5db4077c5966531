//! Shared matrix aliases and small dense helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `i^k` for any integer `k`.
pub fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn vec_max_abs(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Inverse of a small complex matrix, failing on numerical singularity.
pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Construction("singular matrix".into()))
}

pub fn rinverse(m: &RMat) -> Option<RMat> {
    m.clone().try_inverse()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are eigenvectors; `None` when only values were requested.
    pub vectors: Option<CMat>,
}

/// Dense Hermitian eigensolve backed by faer.
///
/// Only the lower triangle of `m` is read.
pub fn hermitian_eigen(m: &CMat, vectors: bool) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    // faer's blocked kernels split work by thread count; sequential keeps
    // the spectrum bitwise independent of the worker pool
    faer::set_global_parallelism(faer::Par::Seq);
    let fm = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    if vectors {
        let ev = fm
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let s = ev.S().column_vector();
        let u = ev.U();
        let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
        let vecs = CMat::from_fn(n, n, |i, j| {
            let z = u[(i, j)];
            C64::new(z.re, z.im)
        });
        Ok(HermitianEigen { values, vectors: Some(vecs) })
    } else {
        let vals = fm
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        Ok(HermitianEigen { values: vals, vectors: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_shape_and_entries() {
        let a = CMat::from_row_slice(2, 2, &[ONE, I, ZERO, -ONE]);
        let b = CMat::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(0, 2)], I);
        assert_eq!(k[(3, 3)], -ONE);
        assert_eq!(k[(1, 0)], ZERO);
    }

    #[test]
    fn i_pow_cycles() {
        assert_eq!(i_pow(-1), -I);
        assert_eq!(i_pow(6), -ONE);
    }

    #[test]
    fn eigen_matches_known_spectrum() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(2.0, 0.0)]);
        let e = hermitian_eigen(&m, true).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let v = e.vectors.unwrap();
        let r = &m * v.column(1) - v.column(1) * c(3.0, 0.0);
        assert!(r.norm() < 1e-13);
    }
}
