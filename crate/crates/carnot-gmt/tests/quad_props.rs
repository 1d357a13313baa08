//! Behavior of the adaptive quadrature: polynomial exactness, honest error
//! reporting on discontinuous integrands, determinism across execution
//! modes, and the metric profile of vertical hyperplane sections.

use carnot_gmt::catalog;
use carnot_gmt::density;
use carnot_gmt::exec::ExecMode;
use carnot_gmt::norm::{HomogeneousNorm, NormSpec};
use carnot_gmt::quad::{integrate_box, integrate_box_mc, FocusRegion, QuadConfig};
use std::f64::consts::PI;

fn koranyi() -> HomogeneousNorm {
    let alg = catalog::group("heisenberg1").unwrap();
    HomogeneousNorm::new(alg, &NormSpec::Koranyi).unwrap()
}

/// Composite Simpson rule, used as an independent one-dimensional oracle.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn smooth_polynomials_integrate_to_machine_precision() {
    let cfg = QuadConfig::default();
    let est = integrate_box(
        &[(0.0, 1.0), (-1.0, 2.0)],
        |u: &[f64]| u[0].powi(3) * u[1] * u[1] + 2.0 * u[0],
        &cfg,
        None,
    );
    // exact: 1/4 * 3 + 1 * 3 = 15/4
    assert!((est.value - 3.75).abs() <= 1e-12, "value {}", est.value);
    assert!(est.error <= 1e-12);
}

#[test]
fn disc_indicator_error_estimates_are_honest() {
    let exact = PI / 4.0;
    let mut prev_err = f64::INFINITY;
    for tol in [1e-4, 1e-6] {
        let cfg = QuadConfig::default().with_tol(tol);
        let est = integrate_box(
            &[(0.0, 1.0), (0.0, 1.0)],
            |u: &[f64]| {
                if u[0] * u[0] + u[1] * u[1] <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            },
            &cfg,
            None,
        );
        let actual = (est.value - exact).abs();
        assert!(
            actual <= 10.0 * est.error + 1e-12,
            "tol {tol}: actual error {actual:.3e} vs reported {:.3e}",
            est.error
        );
        assert!(est.error < prev_err, "tightening tol should tighten error");
        prev_err = est.error;
    }
}

#[test]
fn execution_modes_agree_bit_for_bit() {
    let norm = koranyi();
    let domain = [(-1.0, 1.0), (-1.0, 1.0)];
    let integrand = |u: &[f64]| {
        let x = [0.0, u[0], u[1]];
        if norm.value(&x) < 1.0 {
            1.0 + 0.25 * u[0]
        } else {
            0.0
        }
    };
    let focus = FocusRegion::isotropic(vec![0.0, 0.0], 0.4);
    for focus in [None, Some(&focus)] {
        let par = integrate_box(
            &domain,
            integrand,
            &QuadConfig::default().with_exec(ExecMode::Parallel),
            focus,
        );
        let seq = integrate_box(
            &domain,
            integrand,
            &QuadConfig::default().with_exec(ExecMode::Sequential),
            focus,
        );
        assert_eq!(par.value.to_bits(), seq.value.to_bits());
        assert_eq!(par.error.to_bits(), seq.error.to_bits());
        assert_eq!(par.evaluations, seq.evaluations);
    }
    let par = integrate_box_mc(&domain, integrand, 42, 100_000, ExecMode::Parallel);
    let seq = integrate_box_mc(&domain, integrand, 42, 100_000, ExecMode::Sequential);
    assert_eq!(par.value.to_bits(), seq.value.to_bits());
}

#[test]
fn monte_carlo_agrees_with_the_adaptive_engine() {
    let domain = [(0.0, 1.0), (0.0, 1.0)];
    let f = |u: &[f64]| (u[0] * u[1]).sin();
    let adaptive = integrate_box(&domain, f, &QuadConfig::default(), None);
    let mc = integrate_box_mc(&domain, f, 7, 400_000, ExecMode::Parallel);
    assert!(
        (adaptive.value - mc.value).abs() <= 4.0 * mc.error.max(1e-4),
        "adaptive {} vs monte-carlo {} +- {}",
        adaptive.value,
        mc.value,
        mc.error
    );
}

#[test]
fn metric_profile_of_the_x1_section_matches_the_one_dimensional_oracle() {
    // The unit-ball slice of the plane with horizontal normal X1 reduces to
    // the profile integral of sqrt(1 - y^4) over [0, 1].
    let norm = koranyi();
    let est =
        density::integrate_vertical_hyperplane(&norm, &[1.0, 0.0], &QuadConfig::default(), 1e-8)
            .unwrap();
    let oracle = simpson(|y| (1.0 - y.powi(4)).max(0.0).sqrt(), 0.0, 1.0, 40_000);
    let rel = (est.value - oracle).abs() / oracle;
    assert!(
        rel <= 5e-3,
        "section measure {} vs oracle {oracle} (relative {rel:.3e})",
        est.value
    );
}

#[test]
fn vertical_sections_are_rotation_invariant() {
    let norm = koranyi();
    let cfg = QuadConfig::default();
    let base = density::integrate_vertical_hyperplane(&norm, &[1.0, 0.0], &cfg, 1e-8).unwrap();
    for theta in [0.4_f64, 1.1, 2.7] {
        let dir = [theta.cos(), theta.sin()];
        let est = density::integrate_vertical_hyperplane(&norm, &dir, &cfg, 1e-8).unwrap();
        let rel = (est.value - base.value).abs() / base.value;
        assert!(
            rel <= 2e-3,
            "direction at angle {theta}: {} vs {} (relative {rel:.3e})",
            est.value,
            base.value
        );
    }
}

#[test]
fn engel_sections_match_the_separable_oracle() {
    // On the step-3 group the x1 = 0 slice of the unit ball of the
    // twelfth-power gauge carries unit density, so its measure factors into
    // one-dimensional profile integrals:
    //   vol{ |a|^12 + |b|^6 + |c|^4 <= 1 }
    //     = 4 * int_0^1 (1 - a^6)^(1/4) da  *  2 * int_0^1 (1 - y^12)^(5/12) dy.
    let alg = catalog::group("engel").unwrap();
    let norm = HomogeneousNorm::new(
        alg,
        &NormSpec::Power {
            lambda: 12.0,
            c: vec![1.0, 1.0],
        },
    )
    .unwrap();
    let cfg = QuadConfig::for_dimension(3).with_tol(1e-5);
    let est = density::integrate_vertical_hyperplane(&norm, &[1.0, 0.0], &cfg, 1e-8).unwrap();
    let inner = 4.0 * simpson(|a| (1.0 - a.powi(6)).max(0.0).powf(0.25), 0.0, 1.0, 40_000);
    let oracle =
        inner * 2.0 * simpson(|y| (1.0 - y.powi(12)).max(0.0).powf(5.0 / 12.0), 0.0, 1.0, 40_000);
    let rel = (est.value - oracle).abs() / oracle;
    assert!(
        rel <= 5e-3,
        "section measure {} vs oracle {oracle} (relative {rel:.3e})",
        est.value
    );
    // inner-box section below, outer-box constant above
    let (r1, _) = norm.ballbox_radii();
    let crude_lower = 8.0 * r1.powi(6);
    let (_, k2) = density::metric_factor_bounds(&norm);
    assert!(
        est.value > crude_lower && est.value < k2,
        "{} outside ({crude_lower}, {k2})",
        est.value
    );
}
