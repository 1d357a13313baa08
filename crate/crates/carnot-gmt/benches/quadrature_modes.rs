//! Compares the parallel and sequential execution modes of the quadrature
//! engine on integrands representative of the surface-measure workloads.

use carnot_gmt::exec::ExecMode;
use carnot_gmt::group::{antisymmetric_entries, StratifiedAlgebra};
use carnot_gmt::norm::{HomogeneousNorm, NormSpec};
use carnot_gmt::quad::{integrate_box, integrate_box_mc, QuadConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use std::sync::Arc;

fn heisenberg() -> (Arc<StratifiedAlgebra>, HomogeneousNorm) {
    let alg = Arc::new(
        StratifiedAlgebra::new(vec![2, 1], &antisymmetric_entries(&[(0, 1, 2, 1.0)])).unwrap(),
    );
    let norm = HomogeneousNorm::new(alg.clone(), &NormSpec::Koranyi).unwrap();
    (alg, norm)
}

fn bench_modes(c: &mut Criterion) {
    let (_alg, norm) = heisenberg();
    let norm = Arc::new(norm);
    let domain = [(-1.0, 1.0), (-1.0, 1.0)];

    // gauge-ball indicator on a plane: the shape of every density integral
    let mut group = c.benchmark_group("ball_indicator");
    for (label, mode) in [
        ("parallel", ExecMode::Parallel),
        ("sequential", ExecMode::Sequential),
    ] {
        let norm = norm.clone();
        group.bench_function(label, |b| {
            let cfg = QuadConfig::default().with_exec(mode);
            b.iter(|| {
                let est = integrate_box(
                    black_box(&domain),
                    |u: &[f64]| {
                        let x = [u[0], u[1], 0.0];
                        if norm.value(&x) < 1.0 {
                            0.5 * (u[0] * u[0] + u[1] * u[1]).sqrt()
                        } else {
                            0.0
                        }
                    },
                    &cfg,
                    None,
                );
                black_box(est.value)
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("monte_carlo");
    for (label, mode) in [
        ("parallel", ExecMode::Parallel),
        ("sequential", ExecMode::Sequential),
    ] {
        let norm = norm.clone();
        group.bench_function(label, |b| {
            b.iter(|| {
                let est = integrate_box_mc(
                    black_box(&domain),
                    |u: &[f64]| {
                        let x = [u[0], u[1], 0.0];
                        if norm.value(&x) < 1.0 {
                            1.0
                        } else {
                            0.0
                        }
                    },
                    7,
                    400_000,
                    mode,
                );
                black_box(est.value)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);
