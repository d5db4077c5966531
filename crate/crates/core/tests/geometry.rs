use spinc_core::catalog::{chart_scenario, ScenarioParams};
use spinc_core::geometry::{geometry_jet, JetLevel};

fn sc(name: &str) -> spinc_core::geometry::Scenario {
    chart_scenario(name, &ScenarioParams::default()).unwrap()
}

#[test]
fn sphere_christoffels_match_closed_form() {
    let s = sc("sphere2-unit");
    for x in s.sample(3, 20) {
        let jet = geometry_jet(&s, &x, JetLevel::Connection).unwrap();
        let (th, _) = (x[0], x[1]);
        // Γ^θ_{φφ} = -sinθ cosθ, Γ^φ_{θφ} = cotθ
        assert!((jet.christoffel[0][(1, 1)] + th.sin() * th.cos()).abs() < 1e-9);
        assert!((jet.christoffel[1][(0, 1)] - th.cos() / th.sin()).abs() < 1e-8);
        assert!(jet.christoffel[0][(0, 0)].abs() < 1e-9);
    }
}

#[test]
fn sphere_and_stereographic_curvature() {
    for name in ["sphere2-unit", "sphere2-swapped", "sphere2-stereo-north"] {
        let s = sc(name);
        for x in s.sample(5, 10) {
            let jet = geometry_jet(&s, &x, JetLevel::Curvature).unwrap();
            let c = jet.curvature();
            assert!((c.scalar - 2.0).abs() < 1e-6, "{name} scal={}", c.scalar);
            assert!((c.ricci[(0, 0)] - 1.0).abs() < 1e-6);
            assert!((c.r(0, 1, 1, 0) - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn frames_are_orthonormal_and_flat_curvature_vanishes() {
    for name in ["torus3-perturbed", "lorentz2-warped", "lorentz2-tilted", "lorentz3-flat"] {
        let s = sc(name);
        for x in s.sample(7, 10) {
            let jet = geometry_jet(&s, &x, JetLevel::Curvature).unwrap();
            let eta = jet.frame.transpose() * &jet.g * &jet.frame;
            assert!((eta - s.signature.eta()).abs().max() < 1e-12);
            // metric compatibility: ω_jk(e_i) = -ω_kj(e_i) with our sign convention on indefinite frames
            for i in 0..s.dim() {
                let w = &jet.omega[i];
                assert!((w + w.transpose()).abs().max() < 1e-9, "{name}");
            }
            if name == "lorentz2-tilted" || name == "lorentz3-flat" {
                assert!(jet.curvature().scalar.abs() < 1e-8);
            }
        }
    }
}

#[test]
fn warped_lorentzian_scalar_curvature() {
    // two-dimensional de Sitter space, scalar curvature 2
    let s = sc("lorentz2-warped");
    for x in s.sample(2, 5) {
        let jet = geometry_jet(&s, &x, JetLevel::Curvature).unwrap();
        assert!((jet.curvature().scalar - 2.0).abs() < 1e-7);
    }
}

#[test]
fn boundary_points_are_rejected() {
    let s = sc("sphere2-unit");
    assert!(geometry_jet(&s, &[1e-3, 1.0], JetLevel::Connection).is_err());
    // periodic axis is fine anywhere
    assert!(geometry_jet(&s, &[1.0, 0.0], JetLevel::Connection).is_ok());
}
