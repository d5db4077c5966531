use proptest::prelude::*;
use spinc_core::clifford::*;
use spinc_core::linalg::{c, max_abs, CMat, CVec, RMat};

#[test]
fn identity_suite_up_to_dimension_eight() {
    let start = std::time::Instant::now();
    for n in 1..=8 {
        for s in 0..=n {
            let res = suite_residuals(n - s, s).unwrap();
            assert!(res.worst() <= 1e-13, "{res:?}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn small_signatures() {
    let e = build_gamma_rep(2, 0, false).unwrap();
    let id = CMat::identity(2, 2);
    for g in &e.gammas {
        assert!(max_abs(&(g * g + &id)) < 1e-15);
    }
    assert_eq!(e.form, id);
    let l = build_gamma_rep(1, 1, false).unwrap();
    assert!(max_abs(&(&l.gammas[0] * &l.gammas[0] + &id)) < 1e-15);
    assert!(max_abs(&(&l.gammas[1] * &l.gammas[1] - &id)) < 1e-15);
    // B is proportional to the generator squaring to +1
    let ratio = l.form[(0, 1)] / l.gammas[1][(0, 1)];
    assert!(max_abs(&(&l.form - &l.gammas[1] * ratio)) < 1e-14);
    assert!(max_abs(&(&l.volume - &l.gammas[0] * &l.gammas[1])) < 1e-15);
    let t = build_gamma_rep(3, 0, false).unwrap();
    assert!(max_abs(&(&t.volume - &id)) < 1e-15);
    let f = build_gamma_rep(4, 0, false).unwrap();
    let prod = &f.gammas[0] * &f.gammas[1] * &f.gammas[2] * &f.gammas[3];
    assert!(max_abs(&(&f.volume + prod)) < 1e-15);
}

#[test]
fn construction_is_deterministic() {
    for (r, s) in [(2, 0), (3, 1), (2, 3), (5, 0)] {
        let a = build_gamma_rep(r, s, false).unwrap();
        let b = build_gamma_rep(r, s, false).unwrap();
        assert_eq!(a.to_json().to_string(), b.to_json().to_string());
    }
    assert!(build_gamma_rep(0, 0, false).is_err());
    assert!(build_gamma_rep(MAX_DIM + 1, 0, false).is_err());
}

#[test]
fn alpha_images_intertwine_in_even_dimension() {
    let base = build_gamma_rep(2, 0, false).unwrap();
    let amb = build_gamma_rep(3, 0, false).unwrap();
    let a = alpha_embed(&base, &amb).unwrap();
    let s = &a.plus.restrict;
    let sinv = &a.plus.lift;
    for (img, g) in a.images.iter().zip(&base.gammas) {
        assert!(max_abs(&(s * img * sinv - g)) <= 1e-10);
    }
    let base3 = build_gamma_rep(3, 0, false).unwrap();
    let amb4 = build_gamma_rep(4, 0, false).unwrap();
    let a3 = alpha_embed(&base3, &amb4).unwrap();
    let v = [0.3, -1.2, 0.5];
    let m = &a3.plus.restrict * a3.bullet_matrix(&v) * &a3.plus.lift * c(a3.plus.sign, 0.0);
    assert!(max_abs(&(m - base3.clifford_matrix(&v).unwrap())) < 1e-10);
}

fn signature() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=6).prop_flat_map(|n| (0..=n).prop_map(move |s| (n - s, s)))
}

fn spinor(d: usize) -> impl Strategy<Value = CVec> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d).prop_map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|(a, b)| c(a, b))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clifford_action_is_bilinear(((r, s), seed) in (signature(), any::<u64>())) {
        let rep = build_gamma_rep(r, s, false).unwrap();
        let n = rep.n();
        let v: Vec<f64> = (0..n).map(|k| ((seed >> (k % 60)) & 7) as f64 - 3.5).collect();
        let w: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin()).collect();
        let sigma = CVec::from_fn(rep.dim(), |k, _| c(1.0 + k as f64, (seed % 5) as f64));
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| 2.0 * a + b).collect();
        let lhs = rep.clifford_action(&sum, &sigma).unwrap();
        let rhs = rep.clifford_action(&v, &sigma).unwrap() * c(2.0, 0.0) + rep.clifford_action(&w, &sigma).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
        // v·v·σ = -|v|² σ with the signature norm
        let q: f64 = v.iter().enumerate().map(|(j, x)| rep.signature.eps(j) * x * x).sum();
        let twice = rep.clifford_action(&v, &rep.clifford_action(&v, &sigma).unwrap()).unwrap();
        prop_assert!((twice + &sigma * c(q, 0.0)).norm() < 1e-10 * (1.0 + q.abs()) * sigma.norm());
    }

    #[test]
    fn two_form_is_half_the_contraction_sum((r, s) in signature(), entries in prop::collection::vec(-2.0f64..2.0, 36)) {
        let rep = build_gamma_rep(r, s, false).unwrap();
        let n = rep.n();
        let mut om = RMat::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                om[(i, j)] = entries[i * 6 + j];
                om[(j, i)] = -entries[i * 6 + j];
            }
        }
        let eps = rep.signature.eps_vec();
        let d = rep.dim();
        // Σ_j ε_j e_j · (e_j ⌟ Ω)^♯
        let mut sum = CMat::zeros(d, d);
        for j in 0..n {
            let contr: Vec<f64> = (0..n).map(|k| eps[k] * om[(j, k)]).collect();
            sum += &rep.gammas[j] * rep.clifford_matrix(&contr).unwrap() * c(eps[j], 0.0);
        }
        let two = rep.two_form_matrix(&om).unwrap() * c(2.0, 0.0);
        prop_assert!(max_abs(&(two - sum)) <= 1e-13 * 16.0);
    }

    #[test]
    fn even_clifford_action_swaps_chirality(n in 1usize..=4, sigma in spinor(4)) {
        let rep = build_gamma_rep(2 * n.min(2), 0, false).unwrap();
        let d = rep.dim();
        let sigma = CVec::from_fn(d, |k, _| sigma[k % 4]);
        let (pp, pm) = rep.chirality().unwrap();
        let plus = &pp * &sigma;
        for g in &rep.gammas {
            let img = g * &plus;
            prop_assert!((&pp * &img).norm() < 1e-13 && (&pm * &img - &img).norm() < 1e-13);
        }
    }
}
