//! Fourth-order central finite differences on opaque evaluators.

use crate::error::Result;
use crate::linalg::{CMat, CVec, RMat, RVec, C64};

/// Base step for first derivatives, `ε^{1/5}`.
pub fn h_first() -> f64 {
    f64::EPSILON.powf(0.2)
}

/// Base step for second derivatives, `ε^{1/6}`.
pub fn h_second() -> f64 {
    f64::EPSILON.powf(1.0 / 6.0)
}

/// Step along an axis, relative to the coordinate magnitude.
pub fn scaled_step(base: f64, x: f64) -> f64 {
    base * x.abs().max(1.0)
}

/// Values that can be linearly combined by a stencil.
pub trait FdValue: Clone {
    fn scaled(&self, a: f64) -> Self;
    fn add_scaled(&mut self, a: f64, other: &Self);
    fn magnitude(&self) -> f64;
}

impl FdValue for f64 {
    fn scaled(&self, a: f64) -> Self {
        a * self
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl FdValue for C64 {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += other * a;
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl FdValue for Vec<f64> {
    fn scaled(&self, a: f64) -> Self {
        self.iter().map(|x| a * x).collect()
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        for (x, y) in self.iter_mut().zip(other) {
            *x += a * y;
        }
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

macro_rules! fd_matrix {
    ($t:ty, $scalar:expr) => {
        impl FdValue for $t {
            fn scaled(&self, a: f64) -> Self {
                self * $scalar(a)
            }
            fn add_scaled(&mut self, a: f64, other: &Self) {
                *self += other * $scalar(a);
            }
            fn magnitude(&self) -> f64 {
                self.iter().fold(0.0, |m, x| m.max(x.abs()))
            }
        }
    };
}

fd_matrix!(RMat, |a: f64| a);
fd_matrix!(RVec, |a: f64| a);

impl FdValue for CMat {
    fn scaled(&self, a: f64) -> Self {
        self * C64::new(a, 0.0)
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += other * C64::new(a, 0.0);
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl FdValue for CVec {
    fn scaled(&self, a: f64) -> Self {
        self * C64::new(a, 0.0)
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += other * C64::new(a, 0.0);
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl FdValue for Vec<CVec> {
    fn scaled(&self, a: f64) -> Self {
        self.iter().map(|v| v.scaled(a)).collect()
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        for (x, y) in self.iter_mut().zip(other) {
            x.add_scaled(a, y);
        }
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.magnitude()))
    }
}

fn shifted(x: &[f64], axis: usize, dx: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += dx;
    y
}

/// `(f(t-2h) - 8f(t-h) + 8f(t+h) - f(t+2h)) / 12h`.
pub fn differentiate<V: FdValue>(f: impl Fn(f64) -> Result<V>, t: f64, h: f64) -> Result<V> {
    let mut acc = f(t + h)?.scaled(8.0);
    acc.add_scaled(-8.0, &f(t - h)?);
    acc.add_scaled(-1.0, &f(t + 2.0 * h)?);
    acc.add_scaled(1.0, &f(t - 2.0 * h)?);
    Ok(acc.scaled(1.0 / (12.0 * h)))
}

/// Five-point second derivative.
pub fn differentiate2<V: FdValue>(f: impl Fn(f64) -> Result<V>, t: f64, h: f64) -> Result<V> {
    let mut acc = f(t)?.scaled(-30.0);
    acc.add_scaled(16.0, &f(t + h)?);
    acc.add_scaled(16.0, &f(t - h)?);
    acc.add_scaled(-1.0, &f(t + 2.0 * h)?);
    acc.add_scaled(-1.0, &f(t - 2.0 * h)?);
    Ok(acc.scaled(1.0 / (12.0 * h * h)))
}

pub fn partial<V: FdValue>(f: &impl Fn(&[f64]) -> Result<V>, x: &[f64], axis: usize) -> Result<V> {
    let h = scaled_step(h_first(), x[axis]);
    differentiate(|t| f(&shifted(x, axis, t - x[axis])), x[axis], h)
}

pub fn gradient<V: FdValue>(f: &impl Fn(&[f64]) -> Result<V>, x: &[f64]) -> Result<Vec<V>> {
    (0..x.len()).map(|a| partial(f, x, a)).collect()
}

/// `∂_a ∂_b f`; mixed partials use nested first-derivative stencils.
pub fn second_partial<V: FdValue>(f: &impl Fn(&[f64]) -> Result<V>, x: &[f64], a: usize, b: usize) -> Result<V> {
    let ha = scaled_step(h_second(), x[a]);
    if a == b {
        return differentiate2(|t| f(&shifted(x, a, t - x[a])), x[a], ha);
    }
    let hb = scaled_step(h_second(), x[b]);
    differentiate(
        |s| {
            let y = shifted(x, a, s - x[a]);
            differentiate(|t| f(&shifted(&y, b, t - y[b])), y[b], hb)
        },
        x[a],
        ha,
    )
}

/// Richardson extrapolation of a first derivative from steps `h` and `h/2`.
/// Returns the extrapolated value and the magnitude of the correction.
pub fn richardson<V: FdValue>(f: impl Fn(f64) -> Result<V>, t: f64, h: f64) -> Result<(V, f64)> {
    let coarse = differentiate(&f, t, h)?;
    let fine = differentiate(&f, t, 0.5 * h)?;
    let mut diff = fine.clone();
    diff.add_scaled(-1.0, &coarse);
    let mut out = fine;
    out.add_scaled(1.0 / 15.0, &diff);
    Ok((out, diff.magnitude() / 15.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_derivative_of_sine() {
        for &t in &[0.0, 0.7, 3.0, -12.0] {
            let d: f64 = differentiate(|s| Ok(f64::sin(s)), t, scaled_step(h_first(), t)).unwrap();
            assert!((d - t.cos()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn mixed_partial_of_product() {
        let f = |x: &[f64]| -> Result<f64> { Ok(x[0].sin() * x[1].exp()) };
        let x = [0.4, -0.3];
        let d = second_partial(&f, &x, 0, 1).unwrap();
        assert!((d - x[0].cos() * x[1].exp()).abs() < 1e-9);
        let dd = second_partial(&f, &x, 0, 0).unwrap();
        assert!((dd + x[0].sin() * x[1].exp()).abs() < 1e-9);
    }

    #[test]
    fn richardson_improves_coarse_step() {
        let (v, err) = richardson(|s| Ok(f64::exp(s)), 0.5, 0.1).unwrap();
        assert!((v - 0.5f64.exp()).abs() < 1e-8);
        assert!(err < 1e-4);
    }
}
