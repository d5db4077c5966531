use spinc_core::cylinder::{cylinder, CYLINDER_NAMES};
use spinc_core::hypersurface::{constant_ambient, immersion};
use spinc_core::linalg::{c, CMat, CVec};
use spinc_core::spinc::{field_fn, plane_wave, SmoothSpinorField};

fn spinor(dim: usize) -> CVec {
    CVec::from_fn(dim, |k, _| c(1.0 / (k + 1) as f64, 0.3 * k as f64))
}

#[test]
fn structure_equations_hold() {
    for name in CYLINDER_NAMES {
        let cyl = cylinder(name).unwrap();
        let mut worst = 0.0f64;
        for (t, x) in cyl.sample(4, 8) {
            let r = cyl.curvature_residuals(t, &x).unwrap();
            worst = worst.max(r.max());
            assert!(cyl.normal_geodesic_defect(t, &x).unwrap() < 1e-8);
        }
        eprintln!("{name}: {worst:.2e}");
        assert!(worst < 1e-5, "{name}: {worst:e}");
    }
}

#[test]
fn conformal_weingarten_is_scalar() {
    let cyl = cylinder("cylinder-torus-conformal").unwrap();
    let imm = cyl.slice_immersion("slice", 0.4).unwrap();
    let x = [1.0, 2.0];
    let w = cyl.weingarten(0.4, &x).unwrap();
    assert!((w[(0, 0)] + 1.0 / 1.4).abs() < 1e-12 && w[(0, 1)].abs() < 1e-12);
    assert!((imm.weingarten(&x).unwrap() - w).abs().max() < 1e-6);
}

#[test]
fn endomorphism_family_curvature_vanishes() {
    for (name, codazzi) in [("cylinder-torus-diagF", true), ("cylinder-torus-conformal", true), ("cylinder-torus-noncodazzi", false)] {
        let cyl = cylinder(name).unwrap();
        let mut worst = (0.0f64, 0.0f64);
        for (t, x) in cyl.sample(9, 8) {
            let (a, b) = cyl.bala_residuals(t, &x).unwrap();
            worst = (worst.0.max(a), worst.1.max(b));
        }
        eprintln!("{name}: {worst:?}");
        assert!(worst.0 < 1e-5);
        if codazzi {
            assert!(worst.1 < 1e-5);
        } else {
            assert!(worst.1 > 1e-2);
        }
    }
}

#[test]
fn transport_is_unitary_and_reversible() {
    let cyl = cylinder("cylinder-torus-fourier").unwrap();
    let s = spinor(2);
    let x = [0.7, 2.1];
    let fwd = cyl.parallel_transport(&x, &s, 0.0, 0.35, 1e-9).unwrap();
    assert!(fwd.unitarity_defect < 1e-9, "{}", fwd.unitarity_defect);
    let back = cyl.parallel_transport(&x, &fwd.final_spinor, 0.35, 0.0, 1e-9).unwrap();
    assert!((back.final_spinor - &s).norm() < 1e-8);
    // linearity
    let m = cyl.transport_matrix(&x, 0.0, 0.35, 64).unwrap();
    let s2 = CVec::from_fn(2, |k, _| c(0.0, 1.0 + k as f64));
    let lin = &m * (&s * c(2.0, 0.0) + &s2) - (&m * &s * c(2.0, 0.0) + &m * &s2);
    assert!(lin.norm() < 1e-12);
    // static family: transport is the identity
    let st = cylinder("cylinder-torus-static").unwrap();
    let id = st.transport_matrix(&x, 0.0, 0.3, 16).unwrap();
    assert!((id - CMat::identity(2, 2)).norm() < 1e-12);
}

#[test]
fn conformal_transport_keeps_frame_components() {
    let cyl = cylinder("cylinder-torus-conformal").unwrap();
    let m = cyl.transport_matrix(&[1.0, 1.0], 0.0, 0.8, 32).unwrap();
    assert!((m - CMat::identity(2, 2)).norm() < 1e-10);
}

#[test]
fn killing_spinors_become_parallel() {
    for (cname, iname) in [("cylinder-sphere-cone", "sphere2-in-r3"), ("cylinder-sphere-cone-inward", "sphere2-in-r3-inward")] {
        let cyl = cylinder(cname).unwrap();
        let imm = immersion(iname).unwrap();
        let phi = imm.restrict(constant_ambient(&imm, spinor(2)).unwrap());
        let base_pts = cyl.base.sample(1, 6);
        let psi = cyl.build_parallel_from_killing(phi.clone(), &base_pts, 24).unwrap();
        let mut worst = (0.0f64, 0.0f64);
        for (t, x) in cyl.sample(2, 10) {
            let (a, b) = cyl.parallel_defect(psi.as_ref(), t, &x).unwrap();
            worst = (worst.0.max(a), worst.1.max(b));
        }
        eprintln!("{cname}: {worst:?}");
        assert!(worst.0 < 1e-4 && worst.1 < 1e-4);
        let x = &base_pts[0];
        let mut z = vec![0.0];
        z.extend_from_slice(x);
        let block = cyl.positive_block(&cyl.alpha().unwrap());
        assert_eq!(psi.eval(&z).unwrap(), &block.lift * phi.eval(x).unwrap());
    }
}

#[test]
fn torus_killing_spinor_becomes_parallel() {
    let cyl = cylinder("cylinder-torus-killing").unwrap();
    let rep = spinc_core::clifford::build_gamma_rep(2, 0, false).unwrap();
    let g1 = rep.gammas[0].clone();
    let s0 = spinor(2);
    // exp(x₁ γ₁) σ₀ solves ∇_X φ = ½ F(X)·φ for F = diag(2, 0)
    let phi: SmoothSpinorField = field_fn(2, move |x: &[f64]| {
        let m = CMat::identity(2, 2) * c(x[0].cos(), 0.0) + &g1 * c(x[0].sin(), 0.0);
        Ok(m * &s0)
    });
    let pts = cyl.base.sample(1, 6);
    let psi = cyl.build_parallel_from_killing(phi, &pts, 24).unwrap();
    for (t, x) in cyl.sample(3, 8) {
        let (a, b) = cyl.parallel_defect(psi.as_ref(), t, &x).unwrap();
        assert!(a < 1e-4 && b < 1e-4, "{a:e} {b:e}");
    }
    let bad = spinc_core::spinc::constant_field(spinor(2));
    assert!(cyl.build_parallel_from_killing(bad, &pts, 8).is_err());
}

#[test]
fn commutator_identity() {
    for name in ["cylinder-torus-conformal", "cylinder-torus-fourier", "cylinder-torus-static"] {
        let cyl = cylinder(name).unwrap();
        let f = plane_wave(vec![0.7, 1.0, 2.0], spinor(2));
        let mut worst = 0.0f64;
        for (t, x) in cyl.sample(6, 4) {
            worst = worst.max(cyl.commutator_residual(f.clone(), t, &x, false, None).unwrap().norm());
        }
        eprintln!("{name}: {worst:.2e}");
        assert!(worst < 1e-4);
    }
}

#[test]
fn commutator_converges_under_step_refinement() {
    let cyl = cylinder("cylinder-torus-conformal").unwrap();
    let f = cyl.transported_field(plane_wave(vec![1.0, 2.0], spinor(2)), 8);
    let res: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| cyl.commutator_residual(f.clone(), 0.3, &[1.0, 2.0], true, Some(h)).unwrap().norm())
        .collect();
    eprintln!("{res:?}");
    assert!(res[0] / res[1] >= 2.0 && res[1] / res[2] >= 2.0 && res[2] <= 1e-4);
}
