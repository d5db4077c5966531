use std::f64::consts::PI;

use spinc_core::catalog::{chart_scenario, ScenarioParams};
use spinc_core::lattice::*;
use spinc_core::linalg::{c, CVec};

fn magnetic(q: f64) -> spinc_core::geometry::Scenario {
    chart_scenario("torus-magnetic", &ScenarioParams { flux: Some(q), ..Default::default() }).unwrap()
}

fn flat() -> spinc_core::geometry::Scenario {
    chart_scenario("torus2-flat", &ScenarioParams::default()).unwrap()
}

#[test]
fn flux_is_quantized() {
    assert!(chart_scenario("torus-magnetic", &ScenarioParams { flux: Some(1.5), ..Default::default() }).is_err());
    let g = LatticeGrid::new(&magnetic(3.0), &[12, 12]).unwrap();
    assert!((g.total_flux_phase() - 6.0 * PI).abs() < 1e-9);
    assert!(LatticeGrid::new(&flat(), &[6, 8]).is_err());
}

#[test]
fn operators_are_w_hermitian() {
    for name in ["torus2-flat", "torus2-perturbed", "torus3-perturbed", "torus1-flat"] {
        let sc = chart_scenario(name, &ScenarioParams::default()).unwrap();
        let dims = vec![8; sc.dim()];
        let g = LatticeGrid::new(&sc, &dims).unwrap();
        let d = assemble_dirac(&g, LatticeOptions::default()).unwrap();
        assert!(d.hermiticity_defect() < 1e-12, "{name}");
    }
}

#[test]
fn flat_torus_matches_fourier_oracle() {
    let (grid, res) = lattice_spectrum(&flat(), &[16, 16], LatticeOptions::default(), Some(10), false, false).unwrap();
    let oracle = flat_torus_oracle(&grid, 10, 3).unwrap();
    let err: f64 = res.eigenvalues.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    eprintln!("{:?}\n{:?}\n{err:e}", res.eigenvalues, oracle);
    assert!(err <= 0.02);
}

#[test]
fn one_dimensional_torus_has_integer_spectrum() {
    let sc = chart_scenario("torus1-flat", &ScenarioParams::default()).unwrap();
    let (grid, res) = lattice_spectrum(&sc, &[64], LatticeOptions::default(), Some(14), false, false).unwrap();
    assert_eq!(res.doubling, 2);
    // each continuum mode appears once per doubler
    let oracle: Vec<f64> = flat_torus_oracle(&grid, 7, 5).unwrap().into_iter().flat_map(|l| [l, l]).collect();
    eprintln!("{:?} {:?}", res.eigenvalues, oracle);
    for (a, b) in res.eigenvalues.iter().zip(&oracle) {
        // sin(ph)/h truncation is below p³h²/6 ≈ 0.044 at p = 3
        assert!((a - b).abs() < 0.05);
    }
}

#[test]
fn magnetic_spectrum_and_mirror() {
    let q = 3.0;
    let (grid, res) = lattice_spectrum(&magnetic(q), &[24, 24], LatticeOptions::default(), Some(12), false, false).unwrap();
    let b = grid.field_strength();
    let mut abs: Vec<f64> = res.eigenvalues.iter().map(|l| l.abs()).collect();
    abs.sort_by(f64::total_cmp);
    eprintln!("B={b} {abs:?}");
    assert!(abs[..3].iter().all(|&l| l <= 0.05) && abs[3] > 0.05);
    assert!((abs[3] * abs[3] / (2.0 * b) - 1.0).abs() <= 0.05);
    let (_, mirror) = lattice_spectrum(&magnetic(-q), &[24, 24], LatticeOptions::default(), Some(12), false, false).unwrap();
    let mut mabs: Vec<f64> = mirror.eigenvalues.iter().map(|l| l.abs()).collect();
    mabs.sort_by(f64::total_cmp);
    for (a, b) in abs.iter().zip(&mabs) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn gauge_transformation_leaves_spectrum() {
    let grid = LatticeGrid::new(&magnetic(1.0), &[10, 10]).unwrap();
    let theta: Vec<f64> = grid.sites.iter().map(|s| (s.x[0] * 3.0).sin() + 0.7 * (s.x[1] * 2.0).cos() + s.x[0]).collect();
    let other = grid.gauge_transform(&theta).unwrap();
    let a = spectrum(&assemble_dirac(&grid, LatticeOptions::default()).unwrap(), None, false).unwrap();
    let b = spectrum(&assemble_dirac(&other, LatticeOptions::default()).unwrap(), None, false).unwrap();
    let worst = a.eigenvalues.iter().zip(&b.eigenvalues).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn quadrature_and_normalization() {
    let g = LatticeGrid::new(&flat(), &[16, 16]).unwrap();
    let ones = vec![1.0; g.site_count()];
    assert!((integrate(&ones, &g).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
    let s2: Vec<f64> = g.sites.iter().map(|s| s.x[0].sin().powi(2)).collect();
    assert!((integrate(&s2, &g).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
    let (_, res) = lattice_spectrum(&flat(), &[8, 8], LatticeOptions::default(), Some(4), true, false).unwrap();
    let g8 = LatticeGrid::new(&flat(), &[8, 8]).unwrap();
    for v in res.eigenvectors.unwrap() {
        assert!((inner_product(&v, &v, &g8).unwrap() - 1.0).abs() < 1e-12);
        let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lead = v.iter().find(|z| z.norm() >= big * (1.0 - 1e-12)).unwrap();
        assert!(lead.im == 0.0 && lead.re > 0.0);
    }
}

#[test]
fn em_trace_reproduces_the_quadratic_form() {
    let sc = chart_scenario("torus2-perturbed", &ScenarioParams::default()).unwrap();
    let g = LatticeGrid::new(&sc, &[12, 12]).unwrap();
    let psi = CVec::from_fn(g.field_len(), |k, _| c((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()));
    let em = lattice_em_tensor(&psi, &g, 1e-12).unwrap();
    let tr: Vec<f64> = em.iter().map(|e| e.t.trace()).collect();
    let lhs = integrate(&tr, &g).unwrap();
    let d = assemble_dirac(&g, LatticeOptions { wilson: 0.0 }).unwrap();
    let rhs = d.inner(&d.apply(&psi).unwrap(), &psi).re;
    assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "{lhs} {rhs}");
    // plane wave: weighted trace equals its eigenvalue
    let gf = LatticeGrid::new(&flat(), &[16, 16]).unwrap();
    let (pw, lam) = lattice_plane_wave(&gf, &[1, 0], 1).unwrap();
    let em = lattice_em_tensor(&pw, &gf, 1e-12).unwrap();
    let tr: Vec<f64> = em.iter().map(|e| e.t.trace()).collect();
    assert!((integrate(&tr, &gf).unwrap() - lam).abs() < 1e-12);
    // constant spinor on the flat torus is parallel
    let (zero, _) = lattice_plane_wave(&gf, &[0, 0], 0).unwrap();
    assert!(lattice_em_tensor(&zero, &gf, 1e-12).unwrap().iter().all(|e| e.t.abs().max() < 1e-14));
}

#[test]
fn iterative_path_agrees_with_dense() {
    let g = LatticeGrid::new(&magnetic(2.0), &[10, 10]).unwrap();
    let d = assemble_dirac(&g, LatticeOptions::default()).unwrap();
    let dense = spectrum(&d, Some(6), false).unwrap();
    let it = spectrum_with_limit(&d, Some(6), true, 10).unwrap();
    assert_eq!(it.method, "lanczos");
    for (a, b) in dense.eigenvalues.iter().zip(&it.eigenvalues) {
        assert!((a - b).abs() < 1e-7, "{a} {b}");
    }
}

#[test]
fn zero_operator_has_zero_spectrum() {
    let g = LatticeGrid::new(&flat(), &[8, 8]).unwrap();
    let mut d = assemble_dirac(&g, LatticeOptions::default()).unwrap();
    for row in d.rows.iter_mut() {
        row.clear();
    }
    assert!(spectrum(&d, None, false).unwrap().eigenvalues.iter().all(|&l| l == 0.0));
}

fn lowest(sc: &spinc_core::geometry::Scenario, n: usize, count: usize) -> (LatticeGrid, Vec<f64>) {
    let (g, r) = lattice_spectrum(sc, &[n, n], LatticeOptions::default(), Some(count), false, false).unwrap();
    (g, r.eigenvalues)
}

#[test]
fn flat_errors_shrink_fourfold_under_doubling() {
    let (g16, a) = lowest(&flat(), 16, 10);
    let (_, b) = lowest(&flat(), 32, 10);
    let oracle = flat_torus_oracle(&g16, 10, 3).unwrap();
    for k in 0..10 {
        if oracle[k] == 0.0 {
            continue;
        }
        let ratio = (a[k] - oracle[k]).abs() / (b[k] - oracle[k]).abs();
        assert!((3.5..=4.5).contains(&ratio), "{k}: {ratio}");
    }
}

#[test]
fn perturbed_metric_self_converges() {
    let base = flat();
    let k: spinc_core::geometry::TensorFn =
        std::sync::Arc::new(|x: &[f64]| spinc_core::linalg::RMat::from_row_slice(2, 2, &[x[1].sin(), 0.0, 0.0, 0.0]));
    let sc = base.perturbed(&k, 0.1);
    let l: Vec<Vec<f64>> = [10, 20, 40].iter().map(|&n| lowest(&sc, n, 6).1).collect();
    eprintln!("{l:?}");
    for j in 0..6 {
        let d1 = (l[0][j] - l[1][j]).abs();
        let d2 = (l[1][j] - l[2][j]).abs();
        if l[2][j].abs() < 1e-3 {
            // harmonic spinors: the Wilson shift vanishes with them
            assert!(l[2][j].abs() < l[1][j].abs() && l[1][j].abs() < l[0][j].abs());
        } else {
            assert!(d1 / d2 > 3.0 && d1 / d2 < 5.0, "{j}: {}", d1 / d2);
        }
    }
}
