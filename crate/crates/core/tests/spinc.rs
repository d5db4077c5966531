
use spinc_core::catalog::{chart_scenario, ScenarioParams};
use spinc_core::linalg::{c, CVec};
use spinc_core::spinc::{
    curvature_commutator, field_fn, ricci_identity_residual, spinor_curvature, SpinChart, SmoothSpinorField,
};

fn chart(name: &str) -> SpinChart {
    SpinChart::new(chart_scenario(name, &ScenarioParams::default()).unwrap()).unwrap()
}

/// Generic smooth test field built from trigonometric factors.
fn wobbly(d: usize) -> SmoothSpinorField {
    field_fn(d, move |x| {
        Ok(CVec::from_fn(d, |k, _| {
            let a = (k + 1) as f64;
            let s: f64 = x.iter().enumerate().map(|(i, v)| (i as f64 + 0.5) * v).sum();
            c((a * s).sin() + 0.3 * x[0].cos(), (s / a).cos() * 0.7)
        }))
    })
}

#[test]
fn curvature_matches_commutator() {
    for name in ["torus2-perturbed", "sphere2-unit", "lorentz2-warped", "torus3-perturbed"] {
        let ch = chart(name);
        let f = wobbly(ch.spinor_dim());
        let mut worst: f64 = 0.0;
        for x in ch.scenario.sample(11, 6) {
            let n = ch.dim();
            for i in 0..n {
                for j in i + 1..n {
                    let lhs = curvature_commutator(f.clone(), &ch, &x, i, j).unwrap();
                    let rhs = spinor_curvature(&ch, &x, i, j, &f.eval(&x).unwrap()).unwrap();
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        println!("{name}: {worst:e}");
        assert!(worst < 1e-5, "{name}: {worst:e}");
    }
}

#[test]
fn ricci_identity_holds() {
    for name in ["torus2-perturbed", "sphere2-unit", "lorentz2-warped", "torus3-perturbed", "lorentz3-flat"] {
        let ch = chart(name);
        let mut worst: f64 = 0.0;
        for x in ch.scenario.sample(12, 5) {
            let d = ch.spinor_dim();
            let sigma = CVec::from_fn(d, |k, _| c(1.0 + k as f64, 0.5 - k as f64));
            let v: Vec<f64> = (0..ch.dim()).map(|k| 0.3 + k as f64).collect();
            let r = ricci_identity_residual(&ch, &x, &v, &sigma).unwrap();
            worst = worst.max(r.norm());
        }
        println!("{name}: {worst:e}");
        assert!(worst < 1e-5, "{name}: {worst:e}");
    }
    
}
