//! Deterministic quadrature over box domains.
//!
//! The main engine is an adaptive two-level tensor Gauss rule: each cell is
//! compared against the sum over its dyadic children and refined where the
//! defect exceeds a per-cell threshold. Top-level tiles are processed
//! independently (optionally in parallel) and reduced in index order, so the
//! result is bit-identical regardless of thread count. A stream-seeded Monte
//! Carlo mode with the same determinism guarantee is provided for
//! cross-checks.

use crate::exec::{self, ExecMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Order-4 Gauss-Legendre nodes and weights on `[-1, 1]`.
const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_86,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_86,
];

#[derive(Debug, Clone)]
pub struct QuadConfig {
    /// Per-cell refinement threshold on the two-level defect.
    pub tol_cell: f64,
    /// Maximum subdivision depth below a tile.
    pub depth_cap: usize,
    /// Depth to which cells subdivide unconditionally.
    pub min_depth: usize,
    /// Dyadic splits per axis when forming top-level tiles.
    pub tile_depth: usize,
    pub exec: ExecMode,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            tol_cell: 1e-6,
            depth_cap: 18,
            min_depth: 3,
            tile_depth: 2,
            exec: ExecMode::Parallel,
        }
    }
}

impl QuadConfig {
    /// Defaults scaled back for higher-dimensional domains, where the cost
    /// of a dyadic split grows like `2^d` and forced depth is unaffordable.
    pub fn for_dimension(d: usize) -> Self {
        let mut cfg = QuadConfig::default();
        match d {
            0 | 1 | 2 => {}
            3 => {
                cfg.min_depth = 2;
                cfg.tile_depth = 1;
                cfg.depth_cap = 12;
            }
            _ => {
                cfg.min_depth = 1;
                cfg.tile_depth = 1;
                cfg.depth_cap = 9;
            }
        }
        cfg
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_cell = tol;
        self
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Sum of the accepted per-cell defects; a pessimistic error gauge, not
    /// a rigorous bound.
    pub error: f64,
    pub evaluations: u64,
    pub method: String,
}

impl QuadratureEstimate {
    pub fn zero(method: &str) -> Self {
        QuadratureEstimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            method: method.to_string(),
        }
    }

    pub fn combined(parts: &[QuadratureEstimate], method: &str) -> Self {
        QuadratureEstimate {
            value: parts.iter().map(|p| p.value).sum(),
            error: parts.iter().map(|p| p.error).sum(),
            evaluations: parts.iter().map(|p| p.evaluations).sum(),
            method: method.to_string(),
        }
    }
}

/// Region of chart space that must stay resolved even when every coarse
/// sample misses it: cells meeting the box `center ± radii` keep subdividing
/// until, axis by axis, their side drops below the matching entry of
/// `scales`. Radii and scales are separate because a thin feature can sit
/// anywhere inside its footprint: `radii` bounds where it can be, `scales`
/// how thin it is, and both are per-axis because features are often far
/// thinner in some chart directions than others (anisotropic scaling). Pair
/// this with a `tol_cell` scaled to the expected measure of the feature;
/// the focus rule only guarantees detection, not relative accuracy.
#[derive(Debug, Clone)]
pub struct FocusRegion {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub scales: Vec<f64>,
}

impl FocusRegion {
    pub fn isotropic(center: Vec<f64>, radius: f64) -> Self {
        let d = center.len();
        FocusRegion {
            center,
            radii: vec![radius; d],
            scales: vec![0.5 * radius; d],
        }
    }
}

#[derive(Clone)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Cell {
    fn gauss<F: Fn(&[f64]) -> f64>(&self, f: &F, point: &mut Vec<f64>) -> f64 {
        let d = self.lo.len();
        let mut total = 0.0;
        let mut idx = vec![0usize; d];
        let mut weight_scale = 1.0;
        for j in 0..d {
            weight_scale *= 0.5 * (self.hi[j] - self.lo[j]);
        }
        loop {
            let mut w = weight_scale;
            for j in 0..d {
                let mid = 0.5 * (self.lo[j] + self.hi[j]);
                let half = 0.5 * (self.hi[j] - self.lo[j]);
                point[j] = mid + half * GAUSS_NODES[idx[j]];
                w *= GAUSS_WEIGHTS[idx[j]];
            }
            total += w * f(point);
            // odometer over the tensor grid
            let mut j = 0;
            loop {
                if j == d {
                    return total;
                }
                idx[j] += 1;
                if idx[j] < GAUSS_NODES.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    fn children(&self) -> Vec<Cell> {
        let d = self.lo.len();
        let count = 1usize << d;
        let mut out = Vec::with_capacity(count);
        for mask in 0..count {
            let mut lo = self.lo.clone();
            let mut hi = self.hi.clone();
            for j in 0..d {
                let mid = 0.5 * (self.lo[j] + self.hi[j]);
                if mask >> j & 1 == 0 {
                    hi[j] = mid;
                } else {
                    lo[j] = mid;
                }
            }
            out.push(Cell { lo, hi });
        }
        out
    }

    fn meets_focus(&self, focus: &FocusRegion) -> bool {
        self.lo
            .iter()
            .zip(self.hi.iter())
            .zip(focus.center.iter().zip(&focus.radii))
            .all(|((lo, hi), (c, r))| c + r >= *lo && c - r <= *hi)
    }

    fn coarser_than_focus(&self, focus: &FocusRegion) -> bool {
        self.lo
            .iter()
            .zip(self.hi.iter())
            .zip(&focus.scales)
            .any(|((lo, hi), s)| hi - lo > *s)
    }
}

fn refine_cell<F: Fn(&[f64]) -> f64>(
    f: &F,
    cell: &Cell,
    cell_value: f64,
    depth: usize,
    cfg: &QuadConfig,
    focus: Option<&FocusRegion>,
    point: &mut Vec<f64>,
) -> (f64, f64, u64) {
    if depth >= cfg.depth_cap {
        return (cell_value, 0.0, 0);
    }
    let children = cell.children();
    let child_values: Vec<f64> = children.iter().map(|c| c.gauss(f, point)).collect();
    let mut evals = (children.len() * GAUSS_NODES.len().pow(cell.lo.len() as u32)) as u64;
    let fine: f64 = child_values.iter().sum();
    let defect = (cell_value - fine).abs();
    let focus_active =
        focus.is_some_and(|fr| cell.meets_focus(fr) && cell.coarser_than_focus(fr));
    let accept = depth >= cfg.min_depth && defect <= cfg.tol_cell && !focus_active;
    if accept || depth + 1 >= cfg.depth_cap {
        return (fine, defect, evals);
    }
    let mut value = 0.0;
    let mut error = 0.0;
    for (child, cv) in children.iter().zip(child_values.iter()) {
        let (v, e, k) = refine_cell(f, child, *cv, depth + 1, cfg, focus, point);
        value += v;
        error += e;
        evals += k;
    }
    (value, error, evals)
}

/// Adaptive integral of `f` over the box `domain`.
pub fn integrate_box<F: Fn(&[f64]) -> f64 + Sync>(
    domain: &[(f64, f64)],
    f: F,
    cfg: &QuadConfig,
    focus: Option<&FocusRegion>,
) -> QuadratureEstimate {
    let d = domain.len();
    assert!(d > 0, "integration domain must have at least one axis");
    let per_axis = 1usize << cfg.tile_depth;
    let n_tiles = per_axis.pow(d as u32);
    let tiles: Vec<(f64, f64, u64)> = exec::map_indexed(n_tiles, cfg.exec, |flat| {
        let mut rem = flat;
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for j in 0..d {
            let i = rem % per_axis;
            rem /= per_axis;
            let width = (domain[j].1 - domain[j].0) / per_axis as f64;
            lo[j] = domain[j].0 + width * i as f64;
            hi[j] = lo[j] + width;
        }
        let cell = Cell { lo, hi };
        let mut point = vec![0.0; d];
        let base = cell.gauss(&f, &mut point);
        let evals0 = GAUSS_NODES.len().pow(d as u32) as u64;
        let (v, e, k) = refine_cell(&f, &cell, base, 0, cfg, focus, &mut point);
        (v, e, k + evals0)
    });
    let mut est = QuadratureEstimate::zero("adaptive-gauss4");
    for (v, e, k) in tiles {
        est.value += v;
        est.error += e;
        est.evaluations += k;
    }
    est
}

/// Deterministic Monte Carlo integral of `f` over `domain`: batches draw
/// from independent counter-mode streams of one seed and are reduced in
/// batch order, so the estimate does not depend on thread count. The error
/// field is the one-sigma standard error.
pub fn integrate_box_mc<F: Fn(&[f64]) -> f64 + Sync>(
    domain: &[(f64, f64)],
    f: F,
    seed: u64,
    samples: u64,
    exec: ExecMode,
) -> QuadratureEstimate {
    const BATCH: u64 = 8192;
    let d = domain.len();
    let volume: f64 = domain.iter().map(|(lo, hi)| hi - lo).product();
    let batches = samples.div_ceil(BATCH);
    let partials: Vec<(f64, f64, u64)> = exec::map_indexed(batches as usize, exec, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let count = BATCH.min(samples - b as u64 * BATCH);
        let mut point = vec![0.0; d];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..count {
            for j in 0..d {
                point[j] = rng.gen_range(domain[j].0..domain[j].1);
            }
            let v = f(&point);
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq, count)
    });
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0u64;
    for (s, q, c) in partials {
        sum += s;
        sum_sq += q;
        n += c;
    }
    let mean = sum / n as f64;
    let var = ((sum_sq - sum * mean) / (n.saturating_sub(1).max(1)) as f64).max(0.0);
    QuadratureEstimate {
        value: volume * mean,
        error: volume * (var / n as f64).sqrt(),
        evaluations: n,
        method: "monte-carlo".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        // order-4 Gauss integrates degree-7 polynomials exactly per axis
        let est = integrate_box(
            &[(0.0, 1.0), (0.0, 1.0)],
            |u: &[f64]| u[0].powi(5) * u[1].powi(3),
            &QuadConfig::default(),
            None,
        );
        assert!((est.value - 1.0 / 24.0).abs() < 1e-14, "{}", est.value);
    }

    #[test]
    fn disc_area_with_indicator() {
        let est = integrate_box(
            &[(-1.0, 1.0), (-1.0, 1.0)],
            |u: &[f64]| {
                if u[0] * u[0] + u[1] * u[1] < 1.0 {
                    1.0
                } else {
                    0.0
                }
            },
            &QuadConfig::default(),
            None,
        );
        let err = (est.value - std::f64::consts::PI).abs();
        assert!(err < 1e-3, "value {} error gauge {}", est.value, est.error);
        assert!(
            err <= 2.0 * est.error,
            "true error {} exceeds twice the gauge {}",
            err,
            est.error
        );
    }

    #[test]
    fn focus_region_rescues_tiny_feature() {
        let r = 2e-3;
        let disc = |u: &[f64]| {
            if u[0] * u[0] + u[1] * u[1] < r * r {
                1.0
            } else {
                0.0
            }
        };
        let dom = [(-1.0, 1.0), (-1.0, 1.0)];
        let without = integrate_box(&dom, disc, &QuadConfig::default(), None);
        assert_eq!(without.value, 0.0, "coarse sampling should miss the disc");
        // tolerance scaled to the feature's measure, as callers are expected to do
        let with = integrate_box(
            &dom,
            disc,
            &QuadConfig::default().with_tol(1e-11),
            Some(&FocusRegion::isotropic(vec![0.0, 0.0], r)),
        );
        let expect = std::f64::consts::PI * r * r;
        assert!(
            (with.value - expect).abs() < 0.02 * expect,
            "value {} expect {}",
            with.value,
            expect
        );
    }

    #[test]
    fn mc_matches_adaptive_and_is_mode_independent() {
        let f = |u: &[f64]| (u[0] * 3.0).sin() * u[1] + 1.0;
        let dom = [(0.0, 1.0), (0.0, 2.0)];
        let a = integrate_box(&dom, f, &QuadConfig::default(), None);
        let m1 = integrate_box_mc(&dom, f, 7, 200_000, ExecMode::Parallel);
        let m2 = integrate_box_mc(&dom, f, 7, 200_000, ExecMode::Sequential);
        assert_eq!(m1.value.to_bits(), m2.value.to_bits());
        assert!(
            (m1.value - a.value).abs() < 4.0 * m1.error,
            "mc {} vs adaptive {} (sigma {})",
            m1.value,
            a.value,
            m1.error
        );
    }
}
