use crate::clifford::Signature;
use crate::error::{Error, Result};
use crate::linalg::RMat;

/// Gram–Schmidt on the coordinate basis, then a stable reorder putting
/// positive-norm vectors first. Columns of the result are the frame vectors,
/// so `Eᵀ g E = diag(ε)`.
pub fn orthonormal_frame(g: &RMat, sig: Signature) -> Result<RMat> {
    let n = sig.n();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.nrows() });
    }
    let scale = g.abs().max().max(1e-300);
    let asym = (g - g.transpose()).abs().max();
    if asym > 1e-10 * scale {
        return Err(Error::DegenerateMetric { point: vec![], reason: format!("metric not symmetric ({asym:e})") });
    }
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for k in 0..n {
        let mut w = nalgebra::DVector::zeros(n);
        w[k] = 1.0;
        for (u, e) in cols.iter().zip(&signs) {
            let proj = (w.transpose() * g * u)[(0, 0)] * e;
            w -= u * proj;
        }
        let nn = (w.transpose() * g * &w)[(0, 0)];
        if nn.abs() < 1e-12 * scale * w.norm_squared() {
            return Err(Error::DegenerateMetric { point: vec![], reason: format!("null vector in Gram-Schmidt step {k}") });
        }
        signs.push(nn.signum());
        cols.push(w / nn.abs().sqrt());
    }
    let positives = signs.iter().filter(|e| **e > 0.0).count();
    if positives != sig.r {
        return Err(Error::DegenerateMetric {
            point: vec![],
            reason: format!("metric has {positives} positive directions, signature expects {}", sig.r),
        });
    }
    let order: Vec<usize> = (0..n).filter(|&k| signs[k] > 0.0).chain((0..n).filter(|&k| signs[k] < 0.0)).collect();
    Ok(RMat::from_fn(n, n, |i, j| cols[order[j]][i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_reorders_positive_first() {
        let g = RMat::from_row_slice(2, 2, &[-1.0, 0.3, 0.3, 1.0]);
        let sig = Signature::new(1, 1).unwrap();
        let e = orthonormal_frame(&g, sig).unwrap();
        let eta = e.transpose() * &g * &e;
        assert!((eta - sig.eta()).abs().max() < 1e-14);
    }

    #[test]
    fn wrong_signature_is_rejected() {
        let g = RMat::identity(2, 2);
        assert!(orthonormal_frame(&g, Signature::new(1, 1).unwrap()).is_err());
    }
}
