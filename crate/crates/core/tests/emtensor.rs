use std::sync::Arc;

use proptest::prelude::*;
use spinc_core::catalog::{chart_scenario, ScenarioParams};
use spinc_core::emtensor::*;
use spinc_core::hypersurface::{constant_ambient, immersion};
use spinc_core::linalg::{c, hermitian_eigen, CVec, RMat};
use spinc_core::spinc::{constant_field, dirac_pointwise, field_fn, plane_wave, SmoothSpinorField, SpinChart};

fn chart(name: &str) -> SpinChart {
    SpinChart::new(chart_scenario(name, &ScenarioParams::default()).unwrap()).unwrap()
}

fn spinor(a: f64, b: f64) -> CVec {
    CVec::from_vec(vec![c(a, 0.2), c(-0.4, b)])
}

fn endo(f: impl Fn(&[f64]) -> RMat + Send + Sync + 'static) -> EndoFn {
    Arc::new(f)
}

/// Killing spinor of the unit sphere: restriction of a constant spinor of ℝ³.
fn sphere_killing() -> SmoothSpinorField {
    let imm = immersion("sphere2-in-r3").unwrap();
    imm.restrict(constant_ambient(&imm, spinor(0.8, 0.5)).unwrap())
}

#[test]
fn parallel_spinor_has_no_tensor_and_no_killing_defect() {
    let t2 = chart("torus2-flat");
    let psi = constant_field(spinor(1.0, 0.3));
    for x in [[0.3, 1.2], [4.0, 2.5]] {
        let v = em_tensor(psi.as_ref(), &t2, &x, NORM_FLOOR).unwrap();
        assert!(v.t.abs().max() < 1e-12);
        let zero = endo(|_| RMat::zeros(2, 2));
        assert!(max_norm(&killing_residuals(psi.as_ref(), &t2, &x, &zero).unwrap()) < 1e-12);
    }
}

#[test]
fn sphere_killing_spinor_matches_exactly_one_sign() {
    let s2 = chart("sphere2-unit");
    let phi = sphere_killing();
    for x in [[1.0, 0.5], [2.0, 4.0], [0.7, 2.2]] {
        let minus = max_norm(&killing_residuals(phi.as_ref(), &s2, &x, &endo(|_| -RMat::identity(2, 2))).unwrap());
        let plus = max_norm(&killing_residuals(phi.as_ref(), &s2, &x, &endo(|_| RMat::identity(2, 2))).unwrap());
        assert!(minus <= 1e-6 && plus > 0.1, "{minus:e} {plus:e}");
        // 2T^φ = -⟨F·,·⟩ with F = -id
        let v = em_tensor(phi.as_ref(), &s2, &x, NORM_FLOOR).unwrap();
        let ell = v.ell.unwrap();
        assert!((ell * 2.0 - RMat::identity(2, 2)).abs().max() <= 1e-6);
    }
}

#[test]
fn plane_wave_eigenspinor_trace_is_the_eigenvalue() {
    let t2 = chart("torus2-flat");
    let p = [1.0, 2.0];
    // symbol of D on e^{ip·x}σ
    let sym = (&t2.rep.gammas[0] * c(p[0], 0.0) + &t2.rep.gammas[1] * c(p[1], 0.0)) * c(0.0, 1.0);
    let eig = hermitian_eigen(&sym, true).unwrap();
    for k in 0..2 {
        let lambda = eig.values[k];
        let sigma: CVec = eig.vectors.as_ref().unwrap().column(k).into_owned();
        let psi = plane_wave(p.to_vec(), sigma);
        let x = [0.9, 1.7];
        let dpsi = dirac_pointwise(psi.as_ref(), &t2, &x).unwrap();
        assert!((dpsi - psi.eval(&x).unwrap() * c(lambda, 0.0)).norm() < 1e-8);
        let v = em_tensor(psi.as_ref(), &t2, &x, NORM_FLOOR).unwrap();
        assert!((v.ell.unwrap().trace() - lambda).abs() < 1e-8, "{lambda}");
    }
    assert!((eig.values[1] - 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn codazzi_examples() {
    let t2 = chart("torus2-flat");
    let s2 = chart("sphere2-unit");
    let x = [0.8, 1.3];
    let constant = endo(|_| RMat::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.7]));
    assert!(codazzi_residual(&constant, &t2, &x, 0, 1).unwrap().iter().all(|v| v.abs() < 1e-10));
    let scalar = endo(|_| RMat::identity(2, 2) * 1.7);
    assert!(codazzi_residual(&scalar, &s2, &x, 0, 1).unwrap().iter().all(|v| v.abs() < 1e-8));
    // a coefficient varying along the other axis breaks the condition by f′
    let along_other = endo(|x: &[f64]| RMat::from_row_slice(2, 2, &[x[1].sin(), 0.0, 0.0, 0.0]));
    let r = codazzi_residual(&along_other, &t2, &x, 0, 1).unwrap();
    assert!((r[0] + x[1].cos()).abs() < 1e-8 && r[1].abs() < 1e-10, "{r:?}");
    // varying along its own axis it is still Codazzi on the flat torus
    let along_own = endo(|x: &[f64]| RMat::from_row_slice(2, 2, &[x[0].sin(), 0.0, 0.0, 0.0]));
    assert!(codazzi_residual(&along_own, &t2, &x, 0, 1).unwrap().iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn non_symmetric_endomorphism_is_rejected() {
    let t2 = chart("torus2-flat");
    let psi = constant_field(spinor(1.0, 0.0));
    let skew = endo(|_| RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    assert!(killing_residuals(psi.as_ref(), &t2, &[1.0, 1.0], &skew).is_err());
}

#[test]
fn norm_floor_drops_ell() {
    let t2 = chart("torus2-flat");
    let zero = constant_field(CVec::zeros(2));
    let v = em_tensor(zero.as_ref(), &t2, &[1.0, 2.0], NORM_FLOOR).unwrap();
    assert!(v.ell.is_none() && v.t.iter().all(|x| x.is_finite()));
}

#[test]
fn csv_dump_has_one_row_per_point() {
    let s2 = chart("sphere2-unit");
    let csv = em_field_csv(sphere_killing().as_ref(), &s2, &[vec![1.0, 0.5], vec![2.0, 1.0]], NORM_FLOOR).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x0,x1,t00,t01,t11,norm_sq");
    assert_eq!(lines.len(), 3);
}

fn generic(a: f64, b: f64) -> SmoothSpinorField {
    field_fn(2, move |x: &[f64]| Ok(CVec::from_vec(vec![c((a * x[0]).sin() + 1.5, x[1].cos()), c(b * x[0] * x[1], 0.3)])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tensor_is_symmetric_and_scales_quadratically(a in -2.0f64..2.0, b in -1.0f64..1.0, re in 0.2f64..3.0, im in -2.0f64..2.0) {
        let ch = chart("torus2-perturbed");
        let f = generic(a, b);
        let k = c(re, im);
        let scaled: SmoothSpinorField = {
            let f = f.clone();
            field_fn(2, move |x: &[f64]| Ok(f.eval(x)? * k))
        };
        let x = [1.1, 2.3];
        let v = em_tensor(f.as_ref(), &ch, &x, NORM_FLOOR).unwrap();
        let w = em_tensor(scaled.as_ref(), &ch, &x, NORM_FLOOR).unwrap();
        prop_assert!((&v.t - v.t.transpose()).abs().max() < 1e-13);
        prop_assert!((&w.t - &v.t * k.norm_sqr()).abs().max() <= 1e-8 * (1.0 + w.t.abs().max()));
        prop_assert!((w.ell.unwrap() - v.ell.unwrap()).abs().max() <= 1e-10 * (1.0 + v.t.abs().max()));
    }
}

#[test]
fn killing_spinors_satisfy_the_tensor_identity() {
    // wherever the Killing residual is tiny, 2T^ψ + ⟨F·,·⟩ vanishes
    let s2 = chart("sphere2-unit");
    let phi = sphere_killing();
    let f = endo(|_| -RMat::identity(2, 2));
    let mut checked = 0;
    for x in s2.scenario.sample(9, 12) {
        let k = max_norm(&killing_residuals(phi.as_ref(), &s2, &x, &f).unwrap());
        if k <= 1e-8 {
            checked += 1;
            let ell = em_tensor(phi.as_ref(), &s2, &x, NORM_FLOOR).unwrap().ell.unwrap();
            assert!((ell * 2.0 - RMat::identity(2, 2)).abs().max() <= 1e-6);
        }
    }
    assert!(checked >= 6, "{checked}");
}
