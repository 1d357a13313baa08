//! Densities of the degenerate surface measure: ball measures, per-radius
//! density profiles with extrapolated limits, the limit factors at generic
//! and degenerate points, blow-up surfaces, and the derived constants bundle.

use crate::error::{Error, Result};
use crate::group::StratifiedAlgebra;
use crate::linalg::{self, Mat};
use crate::norm::HomogeneousNorm;
use crate::quad::{integrate_box, FocusRegion, QuadConfig, QuadratureEstimate};
use crate::surface::{Chart, Hypersurface, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Layer of the dominant ambient coordinate of each chart axis at `u0`;
/// the anisotropic scaling weight of that axis under dilations. Non-finite
/// Jacobian entries (possible at the rim of a graph chart) count as
/// dominant, so a folding axis inherits the layer of the folding coordinate.
fn chart_axis_weights(alg: &StratifiedAlgebra, chart: &Chart, u0: &[f64]) -> Vec<usize> {
    let jac = chart.jacobian(u0);
    let d = chart.dim();
    let mag = |r: usize, c: usize| {
        let a = jac.get(r, c).abs();
        if a.is_finite() {
            a
        } else {
            f64::MAX
        }
    };
    let mut weights = vec![1usize; d];
    for c in 0..d {
        let mut best = 0usize;
        for row in 0..jac.rows {
            if mag(row, c) > mag(best, c) {
                best = row;
            }
        }
        weights[c] = alg.layer_of(best);
    }
    weights
}

/// Chart-space integration data for the part of a gauge ball visible in one
/// chart: a bounding box (clipped to the chart domain) that contains the
/// ball's footprint, and a focus region keeping its thin directions
/// resolved inside that box.
#[derive(Debug, Clone)]
pub struct BallWindow {
    pub window: Vec<(f64, f64)>,
    pub focus: FocusRegion,
}

/// Per-axis extent of the polytope `{v : -b <= M v <= b}` (one axis per
/// column of `M`), read off its vertices, each of which activates `cols`
/// constraints. `None` when no nondegenerate feasible vertex exists.
fn polytope_axis_extents(m: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = m.rows;
    let d = m.cols;
    if n < d || d == 0 {
        return None;
    }
    let mut ext = vec![0.0_f64; d];
    let mut any = false;
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        for signs in 0..(1u32 << d) {
            let mut a = Mat::zeros(d, d);
            let mut rhs = vec![0.0; d];
            for (k, &row) in subset.iter().enumerate() {
                for c in 0..d {
                    a.set(k, c, m.get(row, c));
                }
                rhs[k] = if signs >> k & 1 == 0 { b[row] } else { -b[row] };
            }
            let Some(v) = a.solve(&rhs) else {
                continue;
            };
            let feasible = (0..n).all(|i| {
                let w: f64 = (0..d).map(|c| m.get(i, c) * v[c]).sum();
                w.abs() <= b[i] * (1.0 + 1e-9) + 1e-14
            });
            if feasible {
                any = true;
                for j in 0..d {
                    ext[j] = ext[j].max(v[j].abs());
                }
            }
        }
        // next d-subset of rows, lexicographic
        let mut k = d;
        loop {
            if k == 0 {
                return if any { Some(ext) } else { None };
            }
            k -= 1;
            if subset[k] + 1 < n - (d - 1 - k) {
                subset[k] += 1;
                for t in k + 1..d {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Integration window for the gauge ball `B(center, radius)` in a chart, or
/// `None` when the chart cannot locate the center (callers then integrate
/// the whole chart domain unfocused).
///
/// At a center where the chart map is differentiable, the footprint comes
/// from the linearization `M` of `u -> center^{-1} . point(u)`: every power
/// norm confines the ball to the box `|z_i| <= c_w radius^w` (layer
/// constants `c_w`), so the footprint lies in the polytope
/// `{-b <= M du <= b}`, whose per-axis extents and slab thicknesses give
/// the window and the focus scales. Where one-sided slopes disagree (a
/// graph chart folding at its rim) the linearization is meaningless and a
/// conservative dominant-layer bound `radius^w` plus translation cross
/// terms is used instead.
pub fn ball_focus(
    alg: &StratifiedAlgebra,
    norm: &HomogeneousNorm,
    chart: &Chart,
    center: &[f64],
    radius: f64,
) -> Option<BallWindow> {
    let u0 = chart.locate(center)?;
    let d = chart.dim();
    let n = alg.dim();
    let cinv = alg.inverse(center);
    let z_at = |u: &[f64]| alg.bch(&cinv, &chart.point(u));
    let z0 = z_at(&u0);
    let h = 1e-6 * (1.0 + linalg::norm(&u0));
    let mut m = Mat::zeros(n, d);
    let mut regular = z0.iter().all(|v| v.is_finite());
    for j in 0..d {
        let mut up = u0.clone();
        let mut um = u0.clone();
        up[j] += h;
        um[j] -= h;
        let zp = z_at(&up);
        let zm = z_at(&um);
        let mut worst = 0.0_f64;
        let mut mag = 1.0_f64;
        for i in 0..n {
            let fwd = (zp[i] - z0[i]) / h;
            let bwd = (z0[i] - zm[i]) / h;
            worst = worst.max((fwd - bwd).abs());
            mag = mag.max(fwd.abs()).max(bwd.abs());
            m.set(i, j, 0.5 * (fwd + bwd));
        }
        if !worst.is_finite() || worst > 0.3 * mag {
            regular = false;
        }
    }
    let lc = norm.layer_constants();
    let b: Vec<f64> = (0..n)
        .map(|i| {
            let w = alg.layer_of(i);
            lc[w - 1] * radius.powi(w as i32)
        })
        .collect();
    let mut slab = vec![f64::INFINITY; d];
    if regular {
        for j in 0..d {
            for i in 0..n {
                let a = m.get(i, j).abs();
                if a > 1e-9 {
                    slab[j] = slab[j].min(b[i] / a);
                }
            }
        }
    }
    let sharp = if regular && slab.iter().all(|s| s.is_finite()) {
        polytope_axis_extents(&m, &b)
    } else {
        None
    };
    let (half, radii, scales) = match sharp {
        Some(ext) => {
            let radii: Vec<f64> = ext.iter().zip(&slab).map(|(e, s)| 2.0 * e.max(*s)).collect();
            (radii.clone(), radii, slab)
        }
        None => {
            let weights = chart_axis_weights(alg, chart, &u0);
            let cmax = center.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let heur: Vec<f64> = weights
                .iter()
                .map(|&w| {
                    let wi = w as i32;
                    2.0 * (radius.powi(wi) + radius * ((1.0 + cmax).powi(wi - 1) - 1.0))
                })
                .collect();
            let half = heur.iter().map(|r| 1.5 * r).collect();
            let scales = heur.iter().map(|r| 0.5 * r).collect();
            (half, heur, scales)
        }
    };
    let window: Vec<(f64, f64)> = chart
        .domain
        .iter()
        .zip(u0.iter().zip(&half))
        .map(|(&(lo, hi), (c, r))| (lo.max(c - r), hi.min(c + r)))
        .collect();
    Some(BallWindow {
        window,
        focus: FocusRegion {
            center: u0,
            radii,
            scales,
        },
    })
}

/// Measure of `S` inside the gauge ball `B(center, radius)`, summed over the
/// atlas. The per-cell tolerance is scaled by `min(1, radius^(Q-1))` so small
/// balls resolve to the same relative accuracy as large ones, and every chart
/// that can locate the center integrates over the ball's window so tiny
/// balls are never missed by coarse sampling.
pub fn sigma_ball(
    s: &Hypersurface,
    norm: &HomogeneousNorm,
    center: &[f64],
    radius: f64,
    cfg: &QuadConfig,
    tol_char: f64,
) -> QuadratureEstimate {
    let alg = s.algebra().clone();
    let q = alg.homogeneous_dim();
    let inv = alg.inverse(center);
    let scaled = cfg
        .clone()
        .with_tol(cfg.tol_cell * radius.powf(q - 1.0).min(1.0));
    let mut parts = Vec::new();
    for (ci, chart) in s.atlas.iter().enumerate() {
        let integrand = |u: &[f64]| {
            let x = chart.point(u);
            let z = alg.bch(&inv, &x);
            if norm.value(&z) >= radius {
                return 0.0;
            }
            s.sigma_density(ci, u, tol_char).unwrap_or(0.0)
        };
        let est = match ball_focus(&alg, norm, chart, center, radius) {
            Some(bw) => integrate_box(&bw.window, integrand, &scaled, Some(&bw.focus)),
            None => integrate_box(&chart.domain, integrand, &scaled, None),
        };
        parts.push(est);
    }
    QuadratureEstimate::combined(&parts, "adaptive-gauss4")
}

/// Total measure of `S` over its atlas, with an optional scalar weight.
pub fn sigma_total(
    s: &Hypersurface,
    weight: Option<&ScalarField>,
    cfg: &QuadConfig,
    tol_char: f64,
) -> QuadratureEstimate {
    let mut parts = Vec::new();
    for (ci, chart) in s.atlas.iter().enumerate() {
        let est = integrate_box(
            &chart.domain,
            |u: &[f64]| {
                let d = s.sigma_density(ci, u, tol_char).unwrap_or(0.0);
                match weight {
                    Some(w) => d * w.eval(&chart.point(u)),
                    None => d,
                }
            },
            cfg,
            None,
        );
        parts.push(est);
    }
    QuadratureEstimate::combined(&parts, "adaptive-gauss4")
}

#[derive(Debug, Clone)]
pub struct RadiusSample {
    pub radius: f64,
    /// Ball measure at this radius.
    pub measure: f64,
    /// Measure divided by `radius^(Q-1)`.
    pub m: f64,
    /// Quadrature error gauge, scaled like `m`.
    pub error: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone)]
pub struct DensityProfile {
    /// Samples sorted by decreasing radius.
    pub samples: Vec<RadiusSample>,
    /// Limit of `m` extrapolated linearly in the radius from the two finest
    /// samples.
    pub kappa: f64,
    /// Disagreement between the two available extrapolation pairs plus the
    /// propagated quadrature errors; a coarse uncertainty gauge.
    pub kappa_spread: f64,
}

/// Default radius grid: geometric halvings from the chart half-extent
/// (capped at one) down six octaves.
pub fn default_radii(s: &Hypersurface) -> Vec<f64> {
    let mut scale: f64 = 1.0;
    for chart in &s.atlas {
        for (lo, hi) in &chart.domain {
            scale = scale.min(0.5 * (hi - lo));
        }
    }
    (0..=6).map(|j| scale * 0.5_f64.powi(j)).collect()
}

fn extrapolate_pair(a: &RadiusSample, b: &RadiusSample) -> (f64, f64) {
    // linear model in the radius through (r_a, m_a), (r_b, m_b), at r = 0
    let denom = a.radius - b.radius;
    let kappa = (a.radius * b.m - b.radius * a.m) / denom;
    let err = (a.radius * b.error + b.radius * a.error) / denom.abs();
    (kappa, err)
}

/// Per-radius density profile of `S` around a point of `S`.
pub fn density_profile(
    s: &Hypersurface,
    norm: &HomogeneousNorm,
    center: &[f64],
    radii: &[f64],
    cfg: &QuadConfig,
    tol_char: f64,
) -> Result<DensityProfile> {
    let on_level = s.level_field().eval(center).abs();
    if on_level > 1e-6 {
        return Err(Error::Precondition(format!(
            "profile center is not on the surface (level residual {on_level:.3e})"
        )));
    }
    if !s.atlas.iter().any(|c| c.locate(center).is_some()) {
        return Err(Error::Precondition(
            "profile center is outside every chart of the atlas".into(),
        ));
    }
    let mut radii: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.0).collect();
    if radii.is_empty() {
        return Err(Error::Input("no positive radii requested".into()));
    }
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    radii.dedup();
    let q = s.algebra().homogeneous_dim();
    let samples: Vec<RadiusSample> = radii
        .iter()
        .map(|&r| {
            let est = sigma_ball(s, norm, center, r, cfg, tol_char);
            let scale = r.powf(q - 1.0);
            RadiusSample {
                radius: r,
                measure: est.value,
                m: est.value / scale,
                error: est.error / scale,
                evaluations: est.evaluations,
            }
        })
        .collect();
    let (kappa, kappa_spread) = match samples.len() {
        0 => unreachable!(),
        1 => (samples[0].m, samples[0].error),
        2 => extrapolate_pair(&samples[0], &samples[1]),
        _ => {
            let k = samples.len();
            let (fine, fine_err) = extrapolate_pair(&samples[k - 2], &samples[k - 1]);
            let (coarse, _) = extrapolate_pair(&samples[k - 3], &samples[k - 2]);
            (fine, (fine - coarse).abs() + fine_err)
        }
    };
    Ok(DensityProfile {
        samples,
        kappa,
        kappa_spread,
    })
}

/// The vertical hyperplane through the identity orthogonal to a horizontal
/// direction, as a boundary-less surface chartered by the tangential
/// horizontal directions and the vertical coordinates. The chart box bounds
/// layer-one coordinates by `bound1` and coordinates of layer `i >= 2` by
/// `boundv[i-2]`.
pub fn vertical_hyperplane_surface(
    norm: &HomogeneousNorm,
    dir: &[f64],
    enlarge: f64,
) -> Result<Hypersurface> {
    let alg = norm.algebra().clone();
    let n = alg.dim();
    let h = alg.horizontal_dim();
    if dir.len() != h {
        return Err(Error::Input(format!(
            "direction must have {h} horizontal components, got {}",
            dir.len()
        )));
    }
    let len = linalg::norm(dir);
    if len <= 1e-12 {
        return Err(Error::Input("direction must be nonzero".into()));
    }
    let unit: Vec<f64> = dir.iter().map(|v| v / len).collect();
    let tangential = linalg::orthogonal_complement(&unit);
    let lc = norm.layer_constants().to_vec();
    let mut domain: Vec<(f64, f64)> = vec![(-enlarge, enlarge); h - 1];
    for j in h..n {
        let c = enlarge * lc[alg.layer_of(j) - 1];
        domain.push((-c, c));
    }
    let tang_map = tangential.clone();
    let chart = Chart::new(domain, move |zeta: &[f64]| {
        let mut x = vec![0.0; n];
        for (m, w) in tang_map.iter().enumerate() {
            for (i, wi) in w.iter().enumerate() {
                x[i] += zeta[m] * wi;
            }
        }
        for j in h..n {
            x[j] = zeta[h - 1 + j - h];
        }
        x
    })
    .with_locator({
        let tang = tangential.clone();
        move |x: &[f64]| {
            let mut zeta = Vec::with_capacity(n - 1);
            for w in &tang {
                zeta.push(linalg::dot(&x[..h], w));
            }
            zeta.extend_from_slice(&x[h..]);
            zeta
        }
    });
    let grad_unit = unit.clone();
    let level = ScalarField::new("plane-level", {
        let u = unit.clone();
        move |x: &[f64]| linalg::dot(&x[..h], &u)
    })
    .with_gradient(move |x: &[f64]| {
        let mut g = vec![0.0; x.len()];
        g[..h].copy_from_slice(&grad_unit);
        g
    });
    Ok(Hypersurface::new(
        alg,
        "vertical-hyperplane",
        level,
        vec![chart],
        Vec::new(),
    ))
}

/// Measure of the unit gauge ball slice of the vertical hyperplane
/// orthogonal to `dir`: the density limit of any surface whose horizontal
/// normal at the center points along `dir`.
pub fn integrate_vertical_hyperplane(
    norm: &HomogeneousNorm,
    dir: &[f64],
    cfg: &QuadConfig,
    tol_char: f64,
) -> Result<QuadratureEstimate> {
    let plane = vertical_hyperplane_surface(norm, dir, 1.0)?;
    let origin = vec![0.0; norm.algebra().dim()];
    Ok(sigma_ball(&plane, norm, &origin, 1.0, cfg, tol_char))
}

/// Closed-form bracket for the hyperplane slice measure:
/// `K1 <= kappa <= K2` for every direction, from the ball-box radii.
pub fn metric_factor_bounds(norm: &HomogeneousNorm) -> (f64, f64) {
    let alg = norm.algebra();
    let q = alg.homogeneous_dim();
    let n = alg.dim() as f64;
    let (r1, r2) = norm.ballbox_radii();
    let k1 = (2.0 * r1).powf(q - 1.0);
    let k2 = (n - 1.0).sqrt() * (2.0 * r2).powf(q - 1.0);
    (k1, k2)
}

/// Polynomial in the non-graph coordinates, stored as exponent rows.
#[derive(Debug, Clone)]
pub struct WeightedPoly {
    /// Ambient coordinate index backing each variable.
    pub vars: Vec<usize>,
    /// `(exponents, coefficient)` pairs; exponents align with `vars`.
    pub terms: Vec<(Vec<usize>, f64)>,
}

impl WeightedPoly {
    pub fn eval(&self, zeta: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(zeta)
                    .map(|(&p, z)| z.powi(p as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Local structure of a surface at a point where the horizontal normal
/// degenerates, represented as a graph over one vertical coordinate.
#[derive(Debug, Clone)]
pub struct GraphOrder {
    /// Ambient index of the graph coordinate.
    pub alpha: usize,
    /// Weight of the graph coordinate: the homogeneity order of the surface
    /// at the point.
    pub order: usize,
    /// Degenerate-point order `Q - order`.
    pub point_order: f64,
    /// Weighted-homogeneous limit profile (weight exactly `order`); `None`
    /// when Taylor terms of lower weight survive, in which case the localized
    /// limit is empty and the density factor is zero.
    pub profile: Option<WeightedPoly>,
    /// Taylor terms of weight below `order` that failed to vanish.
    pub violating_terms: Vec<(Vec<usize>, f64)>,
}

fn enumerate_multi_indices(nvars: usize, max_total: usize) -> Vec<Vec<usize>> {
    fn walk(nvars: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == nvars {
            if cur.iter().sum::<usize>() > 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..=left {
            cur.push(v);
            walk(nvars, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(nvars, max_total, &mut Vec::new(), &mut out);
    out
}

fn nested_central<F: Fn(&[f64]) -> Result<f64>>(
    f: &F,
    z: &mut Vec<f64>,
    beta: &[usize],
    var: usize,
    h: f64,
) -> Result<f64> {
    if var == beta.len() {
        return f(z);
    }
    if beta[var] == 0 {
        return nested_central(f, z, beta, var + 1, h);
    }
    let mut reduced = beta.to_vec();
    reduced[var] -= 1;
    let keep = z[var];
    z[var] = keep + h;
    let p = nested_central(f, z, &reduced, var, h)?;
    z[var] = keep - h;
    let m = nested_central(f, z, &reduced, var, h)?;
    z[var] = keep;
    Ok((p - m) / (2.0 * h))
}

/// Analyze a surface at a point with degenerate horizontal normal as a graph
/// over its dominant vertical direction: solve the graph function locally,
/// read its weighted Taylor expansion, and keep the terms of weight equal to
/// the graph coordinate's weight as the limit profile. Terms of strictly
/// lower weight disqualify the profile (empty limit).
pub fn graph_order(s: &Hypersurface, x: &[f64], tol: f64) -> Result<GraphOrder> {
    let alg = s.algebra().clone();
    let n = alg.dim();
    let h = alg.horizontal_dim();
    let phi = s.level_field();
    let lv = phi.eval(x).abs();
    if lv > 1e-7 {
        return Err(Error::Precondition(format!(
            "point is not on the surface (level residual {lv:.3e})"
        )));
    }
    let g = phi.frame_gradient(&alg, x);
    let gmax = g[h..].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if gmax <= 1e-10 {
        return Err(Error::Singular(
            "no vertical direction graphs the surface at this point".into(),
        ));
    }
    // dominant vertical graph coordinate; near-ties resolve to the deepest layer
    let mut alpha = h;
    let mut alpha_key = (0usize, 0usize);
    for j in h..n {
        if g[j].abs() >= 0.5 * gmax {
            let key = (alg.layer_of(j), j);
            if key >= alpha_key {
                alpha_key = key;
                alpha = j;
            }
        }
    }
    let horiz = g[..h].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if horiz > tol.max(1e-8) * gmax.max(1.0) {
        return Err(Error::Precondition(format!(
            "horizontal normal does not vanish at the point (|grad_H| = {horiz:.3e}); \
             the graph analysis applies to degenerate points only"
        )));
    }
    let order = alg.layer_of(alpha);
    let vars: Vec<usize> = (0..n).filter(|j| *j != alpha).collect();
    let psi = |zeta: &[f64]| -> Result<f64> {
        let mut z = vec![0.0; n];
        for (m, &j) in vars.iter().enumerate() {
            z[j] = zeta[m];
        }
        let mut a = 0.0;
        for _ in 0..50 {
            z[alpha] = a;
            let f0 = phi.eval(&alg.bch(x, &z));
            if f0.abs() < 1e-14 * (1.0 + a.abs()) {
                return Ok(a);
            }
            let hstep = 1e-6 * (1.0 + a.abs());
            z[alpha] = a + hstep;
            let fp = phi.eval(&alg.bch(x, &z));
            z[alpha] = a - hstep;
            let fm = phi.eval(&alg.bch(x, &z));
            let d = (fp - fm) / (2.0 * hstep);
            if d.abs() < 1e-14 {
                break;
            }
            let step = f0 / d;
            a -= step;
            if step.abs() < 1e-14 * (1.0 + a.abs()) {
                return Ok(a);
            }
        }
        z[alpha] = a;
        if phi.eval(&alg.bch(x, &z)).abs() < 1e-8 {
            Ok(a)
        } else {
            Err(Error::Singular(
                "graph solve for the vertical coordinate did not converge".into(),
            ))
        }
    };
    let mut violating: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut profile_terms: Vec<(Vec<usize>, f64)> = Vec::new();
    for beta in enumerate_multi_indices(n - 1, 4) {
        let weight: usize = beta
            .iter()
            .enumerate()
            .map(|(m, b)| b * alg.layer_of(vars[m]))
            .sum();
        if weight == 0 || weight > order {
            continue;
        }
        let base = 5e-2;
        let mut z = vec![0.0; n - 1];
        let d1 = nested_central(&psi, &mut z, &beta, 0, base)?;
        let d2 = nested_central(&psi, &mut z, &beta, 0, 0.5 * base)?;
        let deriv = (4.0 * d2 - d1) / 3.0;
        let factorial: f64 = beta
            .iter()
            .map(|&b| (1..=b.max(1)).product::<usize>() as f64)
            .product();
        let coef = deriv / factorial;
        if coef.abs() <= tol {
            continue;
        }
        if weight < order {
            violating.push((beta, coef));
        } else {
            profile_terms.push((beta, coef));
        }
    }
    let profile = if violating.is_empty() {
        Some(WeightedPoly {
            vars: vars.clone(),
            terms: profile_terms,
        })
    } else {
        None
    };
    Ok(GraphOrder {
        alpha,
        order,
        point_order: alg.homogeneous_dim() - order as f64,
        profile,
        violating_terms: violating,
    })
}

/// Density limit factor at a degenerate point: the ball slice measure of the
/// weighted-homogeneous profile graph, or zero when the localized limit is
/// empty.
pub fn metric_factor_characteristic(
    norm: &HomogeneousNorm,
    go: &GraphOrder,
    cfg: &QuadConfig,
    tol_char: f64,
) -> QuadratureEstimate {
    let Some(profile) = &go.profile else {
        return QuadratureEstimate::zero("empty-limit");
    };
    let alg = norm.algebra().clone();
    let n = alg.dim();
    let alpha = go.alpha;
    let lc = norm.layer_constants().to_vec();
    let domain: Vec<(f64, f64)> = profile
        .vars
        .iter()
        .map(|&j| {
            let c = lc[alg.layer_of(j) - 1];
            (-c, c)
        })
        .collect();
    let vars = profile.vars.clone();
    let p = profile.clone();
    let chart = Chart::new(domain, move |zeta: &[f64]| {
        let mut z = vec![0.0; n];
        for (m, &j) in vars.iter().enumerate() {
            z[j] = zeta[m];
        }
        z[alpha] = p.eval(zeta);
        z
    })
    .with_locator({
        let vars = profile.vars.clone();
        move |z: &[f64]| vars.iter().map(|&j| z[j]).collect()
    });
    let p2 = profile.clone();
    let vars2 = profile.vars.clone();
    let level = ScalarField::new("profile-graph", move |z: &[f64]| {
        let zeta: Vec<f64> = vars2.iter().map(|&j| z[j]).collect();
        z[alpha] - p2.eval(&zeta)
    });
    let graph = Hypersurface::new(alg.clone(), "profile-graph", level, vec![chart], Vec::new());
    let origin = vec![0.0; n];
    sigma_ball(&graph, norm, &origin, 1.0, cfg, tol_char)
}

/// The surface `z -> x * dilate(r, z)` reparametrized around `x`: charts of
/// the original atlas that contain `x` are pulled back with per-axis steps
/// `r^w`, where `w` is the weight of the ambient coordinate dominating that
/// axis. Chart boxes extend up to two units per axis (enough to cover the
/// unit gauge ball for gauges whose layer constants stay below two), clipped
/// to the original domain.
pub fn blowup_surface(s: &Hypersurface, x: &[f64], r: f64) -> Result<Hypersurface> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Input("blow-up scale must be positive".into()));
    }
    let alg = s.algebra().clone();
    let phi = s.level_field().clone();
    let xc = x.to_vec();
    let alg_level = alg.clone();
    let level = ScalarField::new(format!("{}-blowup", s.label()), move |z: &[f64]| {
        phi.eval(&alg_level.bch(&xc, &alg_level.dilate(r, z)))
    });
    let inv = alg.inverse(x);
    let mut atlas = Vec::new();
    for chart in &s.atlas {
        let Some(u0) = chart.locate(x) else { continue };
        let d = chart.dim();
        let weights = chart_axis_weights(&alg, chart, &u0);
        let mut domain = Vec::with_capacity(d);
        let mut ok = true;
        for j in 0..d {
            let step = r.powi(weights[j] as i32);
            let lo = (-2.0_f64).max((chart.domain[j].0 - u0[j]) / step);
            let hi = 2.0_f64.min((chart.domain[j].1 - u0[j]) / step);
            if lo >= hi {
                ok = false;
            }
            domain.push((lo, hi));
        }
        if !ok {
            continue;
        }
        let inner = chart.clone();
        let alg_map = alg.clone();
        let inv_map = inv.clone();
        let u0_map = u0.clone();
        let w_map = weights.clone();
        atlas.push(Chart::new(domain, move |v: &[f64]| {
            let u: Vec<f64> = u0_map
                .iter()
                .zip(v.iter())
                .zip(w_map.iter())
                .map(|((u0j, vj), w)| u0j + r.powi(*w as i32) * vj)
                .collect();
            let y = inner.point(&u);
            alg_map.dilate(1.0 / r, &alg_map.bch(&inv_map, &y))
        }));
    }
    if atlas.is_empty() {
        return Err(Error::Precondition(
            "blow-up center is outside every chart of the atlas".into(),
        ));
    }
    Ok(Hypersurface::new(
        alg,
        format!("{}-blowup", s.label()),
        level,
        atlas,
        Vec::new(),
    ))
}

/// Derived constants of a gauge on a group.
#[derive(Debug, Clone)]
pub struct ConstantsBundle {
    pub q: f64,
    /// Lower hyperplane-slice bound `(2 r_1)^(Q-1)`.
    pub k1: f64,
    /// Upper hyperplane-slice bound `sqrt(n-1) (2 r_2)^(Q-1)`.
    pub k2: f64,
    /// Largest sampled hyperplane slice measure.
    pub b1: f64,
    pub b1_error: f64,
    /// Direction attaining `b1`.
    pub b1_direction: Vec<f64>,
    /// Working value of the slice supremum; equals `b1` here (the
    /// polynomial-profile part of the supremum is not scanned, so this is a
    /// lower estimate).
    pub b_rho: f64,
    /// `sum_{i>=2} i c_i h_i b_rho`.
    pub d_rho: f64,
    /// `2 sum_{i>=2} c_i`.
    pub c_dim: f64,
    /// `2^Q / K1^(1/(Q-1))`.
    pub c1_isop: f64,
    /// Twice `c1_isop`: the isoperimetric constant used by the checks.
    pub c_isop: f64,
    pub directions_sampled: usize,
    pub notes: Vec<String>,
}

/// Sampled horizontal directions: the axes followed by seeded unit vectors.
pub fn sample_directions(h: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(h + extra);
    for i in 0..h {
        let mut v = vec![0.0; h];
        v[i] = 1.0;
        dirs.push(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < h + extra {
        let v: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = linalg::norm(&v);
        if len > 1e-3 {
            dirs.push(v.iter().map(|x| x / len).collect());
        }
    }
    dirs
}

/// Compute the constants bundle by scanning hyperplane slices over sampled
/// directions.
pub fn constants_bundle(
    norm: &HomogeneousNorm,
    seed: u64,
    extra_directions: usize,
    cfg: &QuadConfig,
    tol_char: f64,
) -> Result<ConstantsBundle> {
    let alg = norm.algebra().clone();
    let q = alg.homogeneous_dim();
    let h = alg.horizontal_dim();
    let (k1, k2) = metric_factor_bounds(norm);
    let dirs = sample_directions(h, extra_directions, seed);
    let mut b1 = f64::NEG_INFINITY;
    let mut b1_error = 0.0;
    let mut b1_direction = dirs[0].clone();
    for dir in &dirs {
        let est = integrate_vertical_hyperplane(norm, dir, cfg, tol_char)?;
        if est.value > b1 {
            b1 = est.value;
            b1_error = est.error;
            b1_direction = dir.clone();
        }
    }
    let b_rho = b1;
    let lc = norm.layer_constants();
    let dims = alg.layer_dims();
    let mut d_rho = 0.0;
    let mut c_dim = 0.0;
    for i in 2..=alg.step() {
        let ci = lc[i - 1];
        d_rho += i as f64 * ci * dims[i - 1] as f64 * b_rho;
        c_dim += 2.0 * ci;
    }
    let c1_isop = 2.0_f64.powf(q) / k1.powf(1.0 / (q - 1.0));
    let c_isop = 2.0 * c1_isop;
    let notes = vec![
        format!(
            "b1 is the maximum over {} sampled directions; the supremum over \
             polynomial limit profiles is not scanned, so b is a lower estimate",
            dirs.len()
        ),
        "layer constants are the sharp closed-form ball-box bounds of the gauge".into(),
    ];
    Ok(ConstantsBundle {
        q,
        k1,
        k2,
        b1,
        b1_error,
        b1_direction,
        b_rho,
        d_rho,
        c_dim,
        c1_isop,
        c_isop,
        directions_sampled: dirs.len(),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::norm::NormSpec;

    fn h1_norm() -> HomogeneousNorm {
        let alg = catalog::group("heisenberg1").unwrap();
        HomogeneousNorm::new(alg, &NormSpec::Koranyi).unwrap()
    }

    #[test]
    fn hyperplane_slice_matches_reference_value() {
        // one-dimensional reduction: the slice measure equals the integral
        // of sqrt(1 - y^4) for y in [0, 1]
        let norm = h1_norm();
        let est =
            integrate_vertical_hyperplane(&norm, &[1.0, 0.0], &QuadConfig::default(), 1e-9)
                .unwrap();
        let reference = 0.874_019_184_764_022_7;
        assert!(
            (est.value - reference).abs() < 0.005 * reference,
            "value {} vs {}",
            est.value,
            reference
        );
    }

    #[test]
    fn bounds_bracket_the_slice_measure() {
        let norm = h1_norm();
        let (k1, k2) = metric_factor_bounds(&norm);
        assert!((k1 - 8.0 * 20.0_f64.powf(-0.75)).abs() < 1e-12, "k1 {k1}");
        assert!((k2 - 11.313_708_498).abs() < 1e-6, "k2 {k2}");
        let est =
            integrate_vertical_hyperplane(&norm, &[0.6, 0.8], &QuadConfig::default(), 1e-9)
                .unwrap();
        assert!(k1 <= est.value && est.value <= k2);
    }

    #[test]
    fn vplane_profile_is_flat() {
        let alg = catalog::group("heisenberg1").unwrap();
        let s = catalog::surface(alg, "vplane", &catalog::SurfaceOptions::default()).unwrap();
        let norm = h1_norm();
        let radii = [0.5, 0.25, 0.125];
        let profile =
            density_profile(&s, &norm, &[0.0; 3], &radii, &QuadConfig::default(), 1e-9).unwrap();
        let m0 = profile.samples[0].m;
        for s in &profile.samples {
            assert!((s.m - m0).abs() < 0.01 * m0, "m {} vs {}", s.m, m0);
        }
        assert!((profile.kappa - m0).abs() < 0.01 * m0);
    }

    #[test]
    fn graph_order_examples() {
        let alg = catalog::group("heisenberg1").unwrap();
        let cplane =
            catalog::surface(alg.clone(), "cplane", &catalog::SurfaceOptions::default()).unwrap();
        let go = graph_order(&cplane, &[0.0; 3], 1e-5).unwrap();
        assert_eq!(go.alpha, 2);
        assert_eq!(go.order, 2);
        assert!((go.point_order - 2.0).abs() < 1e-12);
        assert!(go.profile.as_ref().unwrap().is_zero());

        let parab =
            catalog::surface(alg, "graph:t_x1sq", &catalog::SurfaceOptions::default()).unwrap();
        let go = graph_order(&parab, &[0.0; 3], 1e-5).unwrap();
        assert_eq!(go.order, 2);
        let p = go.profile.unwrap();
        assert_eq!(p.terms.len(), 1);
        let (exps, coef) = &p.terms[0];
        assert_eq!(p.vars[0], 0);
        assert_eq!(exps[0], 2);
        assert!((coef - 1.0).abs() < 1e-6, "{coef}");

        let engel = catalog::group("engel").unwrap();
        let graph = catalog::surface(
            engel,
            "graph:engel_x4_x3",
            &catalog::SurfaceOptions::default(),
        )
        .unwrap();
        let go = graph_order(&graph, &[0.0; 4], 1e-5).unwrap();
        assert_eq!(go.alpha, 3);
        assert_eq!(go.order, 3);
        assert!(go.profile.is_none(), "{:?}", go.profile);
        assert!(!go.violating_terms.is_empty());
    }

    #[test]
    fn degenerate_factor_of_flat_plane() {
        let alg = catalog::group("heisenberg1").unwrap();
        let cplane =
            catalog::surface(alg, "cplane", &catalog::SurfaceOptions::default()).unwrap();
        let norm = h1_norm();
        let go = graph_order(&cplane, &[0.0; 3], 1e-5).unwrap();
        let est = metric_factor_characteristic(&norm, &go, &QuadConfig::default(), 1e-9);
        let reference = std::f64::consts::PI / 3.0;
        assert!(
            (est.value - reference).abs() < 0.005 * reference,
            "value {} vs {}",
            est.value,
            reference
        );
    }
}
