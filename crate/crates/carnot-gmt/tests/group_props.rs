//! Group-law properties of the built-in algebras: exact product on the first
//! Heisenberg group, associativity, dilations, inverses, the homothety field,
//! and structural validation.

use carnot_gmt::catalog;
use carnot_gmt::group::{antisymmetric_entries, StratifiedAlgebra};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn heisenberg_product_matches_the_closed_form_on_seeded_pairs() {
    let alg = catalog::group("heisenberg1").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let a = sample(&mut rng, 3, 2.0);
        let b = sample(&mut rng, 3, 2.0);
        let closed = [
            a[0] + b[0],
            a[1] + b[1],
            a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0]),
        ];
        worst = worst.max(max_abs_diff(&alg.bch(&a, &b), &closed));
    }
    assert!(worst <= 1e-12, "worst closed-form residual {worst:.3e}");
}

#[test]
fn product_is_associative_on_all_builtin_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for name in catalog::GROUPS {
        let alg = catalog::group(name).unwrap();
        let n = alg.dim();
        let mut worst = 0.0_f64;
        for _ in 0..1000 {
            let a = sample(&mut rng, n, 1.5);
            let b = sample(&mut rng, n, 1.5);
            let c = sample(&mut rng, n, 1.5);
            let left = alg.bch(&alg.bch(&a, &b), &c);
            let right = alg.bch(&a, &alg.bch(&b, &c));
            worst = worst.max(max_abs_diff(&left, &right));
        }
        assert!(worst <= 1e-12, "{name}: associativity residual {worst:.3e}");
    }
}

#[test]
fn dilations_are_group_homomorphisms() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for name in catalog::GROUPS {
        let alg = catalog::group(name).unwrap();
        let n = alg.dim();
        let mut worst = 0.0_f64;
        for _ in 0..200 {
            let a = sample(&mut rng, n, 1.5);
            let b = sample(&mut rng, n, 1.5);
            let t = rng.gen_range(0.1..2.0);
            let lhs = alg.dilate(t, &alg.bch(&a, &b));
            let rhs = alg.bch(&alg.dilate(t, &a), &alg.dilate(t, &b));
            worst = worst.max(max_abs_diff(&lhs, &rhs));
        }
        assert!(worst <= 1e-12, "{name}: dilation residual {worst:.3e}");
    }
}

#[test]
fn negation_is_the_group_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for name in catalog::GROUPS {
        let alg = catalog::group(name).unwrap();
        let n = alg.dim();
        for _ in 0..200 {
            let a = sample(&mut rng, n, 2.0);
            let inv = alg.inverse(&a);
            for (x, y) in a.iter().zip(&inv) {
                assert_eq!(*y, -*x);
            }
            let prod = alg.bch(&a, &inv);
            let residual = prod.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(residual <= 1e-12, "{name}: a * a^-1 residual {residual:.3e}");
        }
    }
}

#[test]
fn homothety_vector_matches_a_finite_difference_of_the_dilation_curve() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for name in ["heisenberg1", "engel"] {
        let alg = catalog::group(name).unwrap();
        let n = alg.dim();
        for _ in 0..50 {
            let x = sample(&mut rng, n, 1.0);
            let y = sample(&mut rng, n, 1.0);
            let hv = alg.homothety_vector(&x, &y);
            // central difference of t -> x * dilate(t, x^{-1} * y) at t = 1
            let z = alg.bch(&alg.inverse(&x), &y);
            let h = 1e-5;
            let plus = alg.bch(&x, &alg.dilate(1.0 + h, &z));
            let minus = alg.bch(&x, &alg.dilate(1.0 - h, &z));
            let fd: Vec<f64> = plus
                .iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect();
            let diff = max_abs_diff(&hv.coords, &fd);
            assert!(diff <= 1e-6, "{name}: coordinate velocity off by {diff:.3e}");
            // the frame components must reassemble to the same coordinates
            let back = alg.frame_matrix(&y).matvec(&hv.frame);
            let frame_diff = max_abs_diff(&back, &hv.coords);
            assert!(
                frame_diff <= 1e-9,
                "{name}: frame decomposition off by {frame_diff:.3e}"
            );
        }
    }
}

#[test]
fn homothety_vector_at_the_origin_is_the_layer_weighted_point() {
    let alg = catalog::group("heisenberg1").unwrap();
    let zero = [0.0; 3];
    let y = [0.3, -0.7, 0.25];
    let hv = alg.homothety_vector(&zero, &y);
    let expected = [y[0], y[1], 2.0 * y[2]];
    assert!(max_abs_diff(&hv.coords, &expected) <= 1e-15);
}

#[test]
fn structural_validation_is_exact_for_the_builtin_groups() {
    for name in catalog::GROUPS {
        let alg = catalog::group(name).unwrap();
        let report = alg.validate();
        assert!(report.passed(), "{name}: {}", report.describe());
        assert_eq!(report.residual(), 0.0, "{name}: nonzero residual");
        assert!(report.exact, "{name}: validation fell back to floats");
    }
}

#[test]
fn layer_bookkeeping_matches_the_construction() {
    let alg = catalog::group("engel").unwrap();
    assert_eq!(alg.dim(), 4);
    assert_eq!(alg.step(), 3);
    assert_eq!(alg.horizontal_dim(), 2);
    assert_eq!(alg.homogeneous_dim(), 7.0);
    assert_eq!(alg.layer_of(3), 3);
    let h2 = catalog::group("heisenberg2").unwrap();
    assert_eq!(h2.dim(), 5);
    assert_eq!(h2.homogeneous_dim(), 6.0);
}

#[test]
fn step_five_layer_lists_are_rejected() {
    let err = StratifiedAlgebra::new(
        vec![2, 1, 1, 1, 1],
        &antisymmetric_entries(&[(0, 1, 2, 1.0)]),
    );
    assert!(err.is_err(), "a five-step algebra must be refused");
}

#[test]
fn tensors_missing_their_mirror_entries_fail_validation() {
    // literal entries, deliberately not antisymmetrized
    let alg = StratifiedAlgebra::new(vec![2, 1], &[(0, 1, 2, 1.0)]).unwrap();
    assert!(!alg.validate().passed());
}
