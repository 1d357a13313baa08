//! Properties of the homogeneous gauges: homogeneity, symmetry, gradient
//! consistency, ball-box radii and the closed-form layer constants.

use carnot_gmt::catalog;
use carnot_gmt::density;
use carnot_gmt::norm::{HomogeneousNorm, NormSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn koranyi() -> HomogeneousNorm {
    let alg = catalog::group("heisenberg1").unwrap();
    HomogeneousNorm::new(alg, &NormSpec::Koranyi).unwrap()
}

fn sample(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

#[test]
fn gauge_is_homogeneous_and_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let engel_alg = catalog::group("engel").unwrap();
    let norms = [
        koranyi(),
        HomogeneousNorm::new(
            engel_alg,
            &NormSpec::Power {
                lambda: 12.0,
                c: vec![1.0, 1.0],
            },
        )
        .unwrap(),
    ];
    for norm in &norms {
        let alg = norm.algebra().clone();
        let n = alg.dim();
        for _ in 0..1000 {
            let x = sample(&mut rng, n, 2.0);
            let t = rng.gen_range(0.1..3.0);
            let rho = norm.value(&x);
            for s in [t, -t] {
                let scaled = norm.value(&alg.dilate(s, &x));
                assert!(
                    (scaled - s.abs() * rho).abs() <= 1e-12 * rho.max(1.0),
                    "homogeneity residual {:.3e} at t = {s}",
                    (scaled - s.abs() * rho).abs()
                );
            }
            let sym = norm.value(&alg.inverse(&x));
            assert!((sym - rho).abs() <= 1e-12 * rho.max(1.0));
        }
    }
}

#[test]
fn left_invariant_distance_is_symmetric() {
    let norm = koranyi();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..300 {
        let x = sample(&mut rng, 3, 2.0);
        let y = sample(&mut rng, 3, 2.0);
        let d = norm.distance(&x, &y);
        assert!((d - norm.distance(&y, &x)).abs() <= 1e-12 * d.max(1.0));
    }
}

#[test]
fn frame_gradient_matches_finite_differences() {
    let norm = koranyi();
    let alg = norm.algebra().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let h = 1e-5;
    let mut checked = 0;
    while checked < 100 {
        let x = sample(&mut rng, 3, 2.0);
        if norm.value(&x) < 0.3 {
            continue;
        }
        checked += 1;
        let grad = norm.frame_gradient(&x).unwrap();
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = h;
            let plus = norm.value(&alg.bch(&x, &e));
            e[i] = -h;
            let minus = norm.value(&alg.bch(&x, &e));
            let fd = (plus - minus) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() <= 1e-6,
                "component {i}: gradient {:.6e} vs difference {fd:.6e}",
                grad[i]
            );
        }
    }
}

#[test]
fn distance_gradient_matches_finite_differences() {
    let norm = koranyi();
    let alg = norm.algebra().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let h = 1e-5;
    let mut checked = 0;
    while checked < 20 {
        let x = sample(&mut rng, 3, 1.5);
        let y = sample(&mut rng, 3, 1.5);
        if norm.distance(&x, &y) < 0.3 {
            continue;
        }
        checked += 1;
        let grad = norm.dist_frame_gradient(&x, &y).unwrap();
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = h;
            let plus = norm.distance(&x, &alg.bch(&y, &e));
            e[i] = -h;
            let minus = norm.distance(&x, &alg.bch(&y, &e));
            let fd = (plus - minus) / (2.0 * h);
            assert!((grad[i] - fd).abs() <= 1e-5);
        }
    }
}

#[test]
fn horizontal_gradient_norm_never_exceeds_one() {
    let norm = koranyi();
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    let mut seen_near_one = false;
    for _ in 0..1000 {
        let x = sample(&mut rng, 3, 2.0);
        if norm.value(&x) < 1e-3 {
            continue;
        }
        let g = norm.horizontal_gradient_norm(&x).unwrap();
        assert!(g <= 1.0 + 1e-8, "|grad_H rho| = {g} above the unit bound");
        if g > 0.999 {
            seen_near_one = true;
        }
    }
    assert!(seen_near_one, "the unit bound should be nearly attained");
}

#[test]
fn radial_identity_holds_along_homothety_curves() {
    let norm = koranyi();
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    let mut checked = 0;
    while checked < 100 {
        let x = sample(&mut rng, 3, 1.5);
        let y = sample(&mut rng, 3, 1.5);
        if norm.distance(&x, &y) < 0.2 {
            continue;
        }
        checked += 1;
        let res = norm.radial_identity_residual(&x, &y).unwrap();
        assert!(res <= 1e-6, "radial identity residual {res:.3e}");
    }
}

#[test]
fn ballbox_radii_match_the_closed_forms_and_the_numeric_probe() {
    let norm = koranyi();
    let (r1, r2) = norm.ballbox_radii();
    let r1_exact = 20.0_f64.powf(-0.25);
    assert!((r1 - r1_exact).abs() <= 1e-12, "inner radius {r1}");
    assert!((r2 - 1.0).abs() <= 1e-12, "outer radius {r2}");
    let numeric = norm.ballbox_inner_numeric();
    assert!(
        (numeric - r1_exact).abs() <= 1e-9,
        "numeric inner radius {numeric} vs {r1_exact}"
    );
}

#[test]
fn layer_constants_match_their_sampled_suprema() {
    let norm = koranyi();
    let lc = norm.layer_constants();
    assert!((lc[0] - 1.0).abs() <= 1e-15);
    assert!((lc[1] - 0.25).abs() <= 1e-15);
    for layer in 1..=2 {
        let numeric = norm.layer_constant_numeric(layer, 1000 + layer as u64, 4000);
        assert!(
            (numeric - lc[layer - 1]).abs() <= 5e-4,
            "layer {layer}: sampled supremum {numeric} vs {}",
            lc[layer - 1]
        );
    }
}

#[test]
fn unit_sphere_points_respect_the_layer_boxes() {
    // membership in the unit ball forces |x_{H_i}| <= c_i exactly
    let norm = koranyi();
    let alg = norm.algebra().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    for _ in 0..1000 {
        let raw = sample(&mut rng, 3, 1.0);
        let rho = norm.value(&raw);
        if rho < 1e-6 {
            continue;
        }
        let x = alg.dilate(1.0 / rho, &raw);
        let first = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!(first <= 1.0 + 1e-12);
        assert!(x[2].abs() <= 0.25 + 1e-12);
    }
}

#[test]
fn metric_factor_bounds_have_closed_forms() {
    let norm = koranyi();
    let (k1, k2) = density::metric_factor_bounds(&norm);
    let k1_exact = 8.0 * 20.0_f64.powf(-0.75);
    let k2_exact = 8.0 * 2.0_f64.sqrt();
    assert!((k1 - k1_exact).abs() <= 1e-12, "lower factor {k1}");
    assert!((k2 - k2_exact).abs() <= 1e-12, "upper factor {k2}");
}

#[test]
fn unsmooth_power_exponents_are_rejected() {
    let alg = catalog::group("heisenberg1").unwrap();
    assert!(HomogeneousNorm::new(
        alg.clone(),
        &NormSpec::Power {
            lambda: 6.0,
            c: vec![1.0],
        }
    )
    .is_err());
    let engel = catalog::group("engel").unwrap();
    assert!(HomogeneousNorm::new(
        engel,
        &NormSpec::Power {
            lambda: 4.0,
            c: vec![1.0, 1.0],
        }
    )
    .is_err());
    // the canonical exponent is accepted
    assert!(HomogeneousNorm::new(
        alg,
        &NormSpec::Power {
            lambda: 4.0,
            c: vec![16.0],
        }
    )
    .is_ok());
}
