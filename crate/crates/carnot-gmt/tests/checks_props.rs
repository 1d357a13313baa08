//! The inequality and identity checks against independent closed forms:
//! coarea slices, divergence, ball-derivative terms, isoperimetric constants
//! of flat patches, and the trace inequality for weights with closed-form
//! norms.

use carnot_gmt::catalog::{self, SurfaceOptions};
use carnot_gmt::checks::{self, CheckEnv};
use carnot_gmt::norm::{HomogeneousNorm, NormSpec};
use carnot_gmt::surface::ScalarField;
use std::f64::consts::PI;

fn vplane(domain: Option<Vec<(f64, f64)>>, with_boundary: bool) -> carnot_gmt::surface::Hypersurface {
    let alg = catalog::group("heisenberg1").unwrap();
    let opts = SurfaceOptions {
        domain,
        with_boundary,
    };
    catalog::surface(alg, "vplane", &opts).unwrap()
}

fn koranyi() -> HomogeneousNorm {
    let alg = catalog::group("heisenberg1").unwrap();
    HomogeneousNorm::new(alg, &NormSpec::Koranyi).unwrap()
}

#[test]
fn coarea_slices_reassemble_the_surface_measure() {
    let s = vplane(Some(vec![(0.0, 1.0), (0.0, 1.0)]), false);
    let weight = catalog::weight("one").unwrap();
    let level = catalog::level_function(s.algebra(), "x2").unwrap();
    let r = checks::coarea_check(&s, &weight, &level, &CheckEnv::default()).unwrap();
    let scale = r.lhs.abs().max(1.0);
    assert!(
        r.residual <= 1e-3 * scale,
        "coarea residual {:.3e} (lhs {}, rhs {})",
        r.residual,
        r.lhs,
        r.rhs
    );
}

#[test]
fn divergence_identity_balances_the_boundary_flux() {
    let s = vplane(Some(vec![(0.0, 1.0), (0.0, 1.0)]), true);
    let field = catalog::field(s.algebra(), "x2X2").unwrap();
    let r = checks::divergence_check(&s, &field, &CheckEnv::default()).unwrap();
    let scale = r.lhs.abs().max(1.0);
    assert!(
        r.residual <= 1e-3 * scale,
        "divergence residual {:.3e} (lhs {}, rhs {})",
        r.residual,
        r.lhs,
        r.rhs
    );
}

#[test]
fn ball_derivative_term_tracks_the_measure_increment() {
    // the level-curve term is the radial derivative of the ball measure, so
    // its midpoint value times the step must match the measured increment
    let s = vplane(None, false);
    let norm = koranyi();
    let env = CheckEnv::default();
    let center = [0.0; 3];
    for (t, h) in [(0.3_f64, 0.1_f64), (0.5, 0.2), (0.7, 0.15)] {
        let lo = carnot_gmt::density::sigma_ball(&s, &norm, &center, t, &env.quad, env.tol_char);
        let hi =
            carnot_gmt::density::sigma_ball(&s, &norm, &center, t + h, &env.quad, env.tol_char);
        let (b1, b1_err, _) = checks::b1_term(&s, &norm, &center, t + 0.5 * h, &env).unwrap();
        let increment = hi.value - lo.value;
        let predicted = b1 * h;
        let budget = 2.0 * (lo.error + hi.error + b1_err * h) + 0.5 * h.powi(3) + 2e-3;
        assert!(
            (predicted - increment).abs() <= budget,
            "t = {t}, h = {h}: derivative term predicts {predicted:.6e}, measured {increment:.6e}"
        );
    }
}

#[test]
fn flat_square_isoperimetric_ratio_is_one_half() {
    let s = vplane(Some(vec![(0.0, 1.0), (0.0, 1.0)]), true);
    let norm = koranyi();
    let r = checks::isoperimetric_check(&s, &norm, &CheckEnv::default()).unwrap();
    assert!((r.sigma - 1.0).abs() <= 1e-6, "sigma {}", r.sigma);
    assert!(r.curvature_integral.abs() <= 1e-6);
    assert!((r.boundary_measure - 2.0).abs() <= 1e-6);
    assert!((r.c_emp - 0.5).abs() <= 5e-3, "c_emp {}", r.c_emp);
    assert!(r.margin > 0.0, "flat square should satisfy the inequality");
}

#[test]
fn thin_rectangles_scale_like_the_two_thirds_power() {
    // sigma = L, boundary = 2, so the empirical ratio grows like L^(2/3)/2:
    // the ratio admits no uniform bound over stretched patches
    let norm = koranyi();
    let mut prev = 0.0;
    for length in [1.0_f64, 10.0, 100.0] {
        let s = vplane(Some(vec![(0.0, length), (0.0, 1.0)]), true);
        let r = checks::isoperimetric_check(&s, &norm, &CheckEnv::default()).unwrap();
        let expected = 0.5 * length.powf(2.0 / 3.0);
        let rel = (r.c_emp - expected).abs() / expected;
        assert!(
            rel <= 2e-2,
            "length {length}: c_emp {} vs {expected} (relative {rel:.3e})",
            r.c_emp
        );
        assert!(r.c_emp > prev, "ratio must grow with the stretch");
        prev = r.c_emp;
    }
}

#[test]
fn trace_inequality_matches_closed_form_norms_for_p_equal_one() {
    let s = vplane(None, true);
    let norm = koranyi();
    let psi = catalog::weight("bump").unwrap();
    let r = checks::sobolev_check(&s, &norm, &psi, 1.0, &CheckEnv::default()).unwrap();
    // left norm: (integral of psi^(3/2))^(2/3) = (pi/4)^(2/3)
    let lhs_exact = (PI / 4.0).powf(2.0 / 3.0);
    assert!(
        (r.lhs - lhs_exact).abs() <= 1e-4 * lhs_exact,
        "lhs {} vs {lhs_exact}",
        r.lhs
    );
    // right norm: C * integral of |grad psi| = C * 32/15 on the flat patch
    let c_isop = 16.0 * 20.0_f64.powf(0.25);
    let rhs_exact = c_isop * 32.0 / 15.0;
    assert!(
        (r.rhs - rhs_exact).abs() <= 1e-3 * rhs_exact,
        "rhs {} vs {rhs_exact}",
        r.rhs
    );
    assert!(r.margin > 0.0);
    assert!((r.p_left - 1.5).abs() <= 1e-12);
}

#[test]
fn trace_inequality_is_invariant_under_weight_scaling() {
    let s = vplane(None, true);
    let norm = koranyi();
    let psi = catalog::weight("bump").unwrap();
    let doubled = ScalarField::new("bump-doubled", |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let s = (1.0 - r2).max(0.0);
        2.0 * s * s
    });
    let env = CheckEnv::default();
    let a = checks::sobolev_check(&s, &norm, &psi, 1.0, &env).unwrap();
    let b = checks::sobolev_check(&s, &norm, &doubled, 1.0, &env).unwrap();
    assert!(
        (b.c_emp - a.c_emp).abs() <= 1e-10 * a.c_emp,
        "empirical constants {} vs {}",
        a.c_emp,
        b.c_emp
    );
    assert!((b.lhs - 2.0 * a.lhs).abs() <= 1e-10 * a.lhs);
    assert!((b.rhs - 2.0 * a.rhs).abs() <= 1e-10 * a.rhs);
}

#[test]
fn trace_inequality_covers_the_exponent_range() {
    let s = vplane(None, true);
    let norm = koranyi();
    let psi = catalog::weight("bump").unwrap();
    let env = CheckEnv::default();
    for p in [2.0, 3.0] {
        let r = checks::sobolev_check(&s, &norm, &psi, p, &env).unwrap();
        assert!(r.lhs.is_finite() && r.lhs > 0.0);
        assert!(r.rhs.is_finite() && r.rhs > 0.0);
        assert!(r.error.is_finite());
    }
    // outside the admissible range
    assert!(checks::sobolev_check(&s, &norm, &psi, 0.5, &env).is_err());
    assert!(checks::sobolev_check(&s, &norm, &psi, 4.0, &env).is_err());
}

#[test]
fn flat_plane_monotonicity_profile_is_constant() {
    let s = vplane(None, false);
    let norm = koranyi();
    let env = CheckEnv::default();
    let radii = [0.4, 0.6, 0.8, 1.0];
    let r = checks::monotonicity_profile(&s, &norm, &[0.0; 3], &radii, &env).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert!(r.h0.abs() <= 1e-6, "flat plane mean curvature bound {}", r.h0);
    assert!((r.c_dim - 0.5).abs() <= 1e-12);
    assert!(!r.characteristic_center);
    let m0 = r.rows[0].m;
    for row in &r.rows {
        assert!(
            (row.m - m0).abs() <= 1e-2 * m0,
            "profile drifts: {} vs {m0}",
            row.m
        );
    }
    // exponential-form increments may only dip within the error band
    for (t, margin, err) in &r.exp_margins {
        assert!(margin >= &(-err - 1e-4), "interval ending {t}: {margin} vs {err}");
    }
}

#[test]
fn flat_plane_ratio_limit_is_exactly_one() {
    // through the identity the vertical coordinate vanishes on the plane, so
    // numerator and denominator integrate the same function
    let s = vplane(None, false);
    let norm = koranyi();
    let env = CheckEnv::default();
    let r = checks::mu_ratio(&s, &norm, &[0.0; 3], &[1.0, 0.5, 0.25], &env).unwrap();
    assert_eq!(r.rows.len(), 3);
    for (t, ratio, _, _) in &r.rows {
        assert!(
            (ratio - 1.0).abs() <= 1e-12,
            "radius {t}: ratio {ratio} should be exactly one"
        );
    }
    assert!((r.limit - 1.0).abs() <= 1e-10);
}

#[test]
fn ratio_limit_requires_a_nondegenerate_center() {
    let alg = catalog::group("heisenberg1").unwrap();
    let s = catalog::surface(alg, "cplane", &SurfaceOptions::default()).unwrap();
    let norm = koranyi();
    let env = CheckEnv::default();
    let err = checks::mu_ratio(&s, &norm, &[0.0; 3], &[1.0, 0.5], &env);
    assert!(matches!(err, Err(carnot_gmt::Error::Precondition(_))));
}
