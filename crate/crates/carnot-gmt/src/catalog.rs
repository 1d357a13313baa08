//! Built-in groups, gauges, surfaces, vector fields, and test functions,
//! addressable by name from scenario files and tests.

use crate::error::{Error, Result};
use crate::group::{antisymmetric_entries, StratifiedAlgebra};
use crate::linalg::Mat;
use crate::norm::{HomogeneousNorm, NormSpec};
use crate::surface::{BoundaryPiece, Chart, HorizontalField, Hypersurface, ScalarField};
use std::sync::Arc;

pub const GROUPS: &[&str] = &["heisenberg1", "heisenberg2", "engel"];
pub const SURFACES: &[&str] = &[
    "vplane",
    "cplane",
    "koranyi_sphere(R)",
    "koranyi_cap",
    "graph:t_x1sq",
    "graph:engel_x4_x3",
];
pub const FIELDS: &[&str] = &["X1", "X2", "x2X1", "x2X2"];
pub const LEVEL_FUNCTIONS: &[&str] = &["x2", "x3"];
pub const WEIGHTS: &[&str] = &["one", "bump"];

/// Built-in group by name.
pub fn group(name: &str) -> Result<Arc<StratifiedAlgebra>> {
    let alg = match name {
        "heisenberg1" => {
            StratifiedAlgebra::new(vec![2, 1], &antisymmetric_entries(&[(0, 1, 2, 1.0)]))?
        }
        "heisenberg2" => StratifiedAlgebra::new(
            vec![4, 1],
            &antisymmetric_entries(&[(0, 1, 4, 1.0), (2, 3, 4, 1.0)]),
        )?,
        "engel" => StratifiedAlgebra::new(
            vec![2, 1, 1],
            &antisymmetric_entries(&[(0, 1, 2, 1.0), (0, 2, 3, 1.0)]),
        )?,
        other => {
            return Err(Error::Input(format!(
                "unknown group '{other}' (built-ins: {})",
                GROUPS.join(", ")
            )))
        }
    };
    Ok(Arc::new(alg))
}

/// Default gauge for a group: the fourth-power gauge on Heisenberg-type
/// groups (step two, one-dimensional center), otherwise a power gauge with
/// the smallest smooth exponent and layer constants 1/2.
pub fn default_norm_spec(alg: &StratifiedAlgebra) -> NormSpec {
    if alg.step() == 2 && alg.layer_dims()[1] == 1 {
        NormSpec::Koranyi
    } else {
        NormSpec::Power {
            lambda: HomogeneousNorm::default_lambda(alg.step()),
            c: vec![0.5; alg.step() - 1],
        }
    }
}

/// Options shared by the named surface constructors.
#[derive(Debug, Clone, Default)]
pub struct SurfaceOptions {
    /// Override the default chart domain. Only honored by single-chart
    /// surfaces (coordinate planes and graphs).
    pub domain: Option<Vec<(f64, f64)>>,
    /// Attach the edges of each chart box as boundary pieces.
    pub with_boundary: bool,
}

fn insert_axis(s: &[f64], j: usize, v: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(s.len() + 1);
    u.extend_from_slice(&s[..j]);
    u.push(v);
    u.extend_from_slice(&s[j..]);
    u
}

/// Boundary pieces for every face of a chart's box domain, with outward
/// hints taken from the chart's tangent columns.
pub fn box_boundary_pieces(chart: &Chart) -> Vec<BoundaryPiece> {
    let d = chart.dim();
    let mut pieces = Vec::new();
    for j in 0..d {
        for (side, sign) in [(chart.domain[j].0, -1.0), (chart.domain[j].1, 1.0)] {
            let sub: Vec<(f64, f64)> = chart
                .domain
                .iter()
                .enumerate()
                .filter(|(a, _)| *a != j)
                .map(|(_, b)| *b)
                .collect();
            let map_chart = chart.clone();
            let hint_chart = chart.clone();
            let piece = BoundaryPiece::new(
                sub,
                move |s: &[f64]| map_chart.point(&insert_axis(s, j, side)),
                move |s: &[f64]| {
                    let u = insert_axis(s, j, side);
                    let jac = hint_chart.jacobian(&u);
                    let mut out = jac.col(j).to_vec();
                    for v in &mut out {
                        *v *= sign;
                    }
                    out
                },
            );
            let jac_chart = chart.clone();
            let piece = piece.with_jacobian(move |s: &[f64]| {
                let u = insert_axis(s, j, side);
                let full = jac_chart.jacobian(&u);
                let mut m = Mat::zeros(full.rows, d - 1);
                let mut c_out = 0;
                for c in 0..d {
                    if c == j {
                        continue;
                    }
                    for r in 0..full.rows {
                        m.set(r, c_out, full.get(r, c));
                    }
                    c_out += 1;
                }
                m
            });
            pieces.push(piece);
        }
    }
    pieces
}

fn default_square(dim: usize) -> Vec<(f64, f64)> {
    vec![(-1.0, 1.0); dim]
}

/// The vertical coordinate hyperplane `{x_1 = 0}`.
fn vplane(alg: Arc<StratifiedAlgebra>, opts: &SurfaceOptions) -> Hypersurface {
    let n = alg.dim();
    let level = ScalarField::new("x1", |x: &[f64]| x[0]).with_gradient(move |x: &[f64]| {
        let mut g = vec![0.0; x.len()];
        g[0] = 1.0;
        g
    });
    let domain = opts.domain.clone().unwrap_or_else(|| default_square(n - 1));
    let chart = Chart::new(domain, |u: &[f64]| insert_axis(u, 0, 0.0))
        .with_jacobian(move |_u: &[f64]| {
            let mut m = Mat::zeros(n, n - 1);
            for c in 0..n - 1 {
                m.set(c + 1, c, 1.0);
            }
            m
        })
        .with_locator(|x: &[f64]| x[1..].to_vec());
    let boundary = if opts.with_boundary {
        box_boundary_pieces(&chart)
    } else {
        Vec::new()
    };
    Hypersurface::new(alg, "vplane", level, vec![chart], boundary)
}

/// The horizontal coordinate hyperplane `{x_n = 0}` through the identity
/// (vanishing of the top-layer coordinate).
fn cplane(alg: Arc<StratifiedAlgebra>, opts: &SurfaceOptions) -> Hypersurface {
    let n = alg.dim();
    let level = ScalarField::new("xn", move |x: &[f64]| x[n - 1]).with_gradient(
        move |x: &[f64]| {
            let mut g = vec![0.0; x.len()];
            g[x.len() - 1] = 1.0;
            g
        },
    );
    let domain = opts.domain.clone().unwrap_or_else(|| default_square(n - 1));
    let chart = Chart::new(domain, move |u: &[f64]| insert_axis(u, n - 1, 0.0))
        .with_jacobian(move |_u: &[f64]| {
            let mut m = Mat::zeros(n, n - 1);
            for c in 0..n - 1 {
                m.set(c, c, 1.0);
            }
            m
        })
        .with_locator(move |x: &[f64]| x[..n - 1].to_vec());
    let boundary = if opts.with_boundary {
        box_boundary_pieces(&chart)
    } else {
        Vec::new()
    };
    Hypersurface::new(alg, "cplane", level, vec![chart], boundary)
}

fn require_heisenberg1(alg: &StratifiedAlgebra, what: &str) -> Result<()> {
    if alg.dim() == 3 && alg.step() == 2 {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "surface '{what}' is defined on the first Heisenberg group only"
        )))
    }
}

/// Level of the fourth-power gauge in the first Heisenberg group, radius
/// `r`: two polar graph caps over the horizontal disc plus an equatorial
/// band, meeting along two circles.
fn koranyi_sphere(alg: Arc<StratifiedAlgebra>, r: f64, opts: &SurfaceOptions) -> Result<Hypersurface> {
    require_heisenberg1(&alg, "koranyi_sphere")?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Input(format!("sphere radius must be positive, got {r}")));
    }
    let r4 = r.powi(4);
    let level = ScalarField::new("gauge4-level", move |x: &[f64]| {
        let h2 = x[0] * x[0] + x[1] * x[1];
        h2 * h2 + 16.0 * x[2] * x[2] - r4
    })
    .with_gradient(move |x: &[f64]| {
        let h2 = x[0] * x[0] + x[1] * x[1];
        vec![4.0 * h2 * x[0], 4.0 * h2 * x[1], 32.0 * x[2]]
    });
    // the band covers |t| <= t0; the caps cover the rest, a polar disc
    let t0 = 0.22 * r * r;
    let a = (r4 - 16.0 * t0 * t0).powf(0.25);
    let pi = std::f64::consts::PI;
    let mut atlas = Vec::new();
    for sign in [1.0f64, -1.0] {
        let cap_q = move |rad: f64| sign * 0.25 * (r4 - rad.powi(4)).max(0.0).sqrt();
        atlas.push(
            Chart::new(vec![(0.0, a), (-pi, pi)], move |u: &[f64]| {
                vec![u[0] * u[1].cos(), u[0] * u[1].sin(), cap_q(u[0])]
            })
            .with_jacobian(move |u: &[f64]| {
                let (rad, th) = (u[0], u[1]);
                let mut m = Mat::zeros(3, 2);
                m.set(0, 0, th.cos());
                m.set(1, 0, th.sin());
                let root = (r4 - rad.powi(4)).max(1e-300).sqrt();
                m.set(2, 0, -sign * rad.powi(3) / (2.0 * root));
                m.set(0, 1, -rad * th.sin());
                m.set(1, 1, rad * th.cos());
                m
            })
            .with_locator(move |x: &[f64]| {
                if x[2] * sign < 0.0 {
                    // wrong hemisphere: report a point far outside the domain
                    return vec![f64::INFINITY, 0.0];
                }
                vec![(x[0] * x[0] + x[1] * x[1]).sqrt(), x[1].atan2(x[0])]
            }),
        );
    }
    atlas.push(band_chart(r, (-pi, pi), (-t0, t0)));
    if opts.domain.is_some() {
        return Err(Error::Input(
            "koranyi_sphere does not accept a domain override; use koranyi_cap".into(),
        ));
    }
    let boundary = if opts.with_boundary {
        return Err(Error::Input(
            "koranyi_sphere is closed; it has no boundary to attach".into(),
        ));
    } else {
        Vec::new()
    };
    Ok(Hypersurface::new(alg, "koranyi_sphere", level, atlas, boundary))
}

fn band_chart(r: f64, th_range: (f64, f64), t_range: (f64, f64)) -> Chart {
    let r4 = r.powi(4);
    Chart::new(vec![th_range, t_range], move |u: &[f64]| {
        let s = (r4 - 16.0 * u[1] * u[1]).max(0.0).powf(0.25);
        vec![s * u[0].cos(), s * u[0].sin(), u[1]]
    })
    .with_jacobian(move |u: &[f64]| {
        let (th, t) = (u[0], u[1]);
        let s = (r4 - 16.0 * t * t).max(1e-300).powf(0.25);
        let sp = -8.0 * t / s.powi(3);
        let mut m = Mat::zeros(3, 2);
        m.set(0, 0, -s * th.sin());
        m.set(1, 0, s * th.cos());
        m.set(0, 1, sp * th.cos());
        m.set(1, 1, sp * th.sin());
        m.set(2, 1, 1.0);
        m
    })
    .with_locator(|x: &[f64]| vec![x[1].atan2(x[0]), x[2]])
}

/// Equatorial patch of the unit fourth-power gauge sphere, with its four
/// edges attached as boundary pieces: compact, boundary-carrying, and free
/// of characteristic points.
fn koranyi_cap(alg: Arc<StratifiedAlgebra>, opts: &SurfaceOptions) -> Result<Hypersurface> {
    require_heisenberg1(&alg, "koranyi_cap")?;
    let level = ScalarField::new("gauge4-level", |x: &[f64]| {
        let h2 = x[0] * x[0] + x[1] * x[1];
        h2 * h2 + 16.0 * x[2] * x[2] - 1.0
    })
    .with_gradient(|x: &[f64]| {
        let h2 = x[0] * x[0] + x[1] * x[1];
        vec![4.0 * h2 * x[0], 4.0 * h2 * x[1], 32.0 * x[2]]
    });
    let (th_range, t_range) = match &opts.domain {
        Some(d) if d.len() == 2 => (d[0], d[1]),
        Some(_) => {
            return Err(Error::Input(
                "koranyi_cap domain override must have two axes (angle, height)".into(),
            ))
        }
        None => ((-0.8, 0.8), (-0.22, 0.22)),
    };
    if t_range.0 <= -0.25 || t_range.1 >= 0.25 {
        return Err(Error::Input(
            "koranyi_cap height range must stay inside (-1/4, 1/4)".into(),
        ));
    }
    let chart = band_chart(1.0, th_range, t_range);
    let boundary = box_boundary_pieces(&chart);
    Ok(Hypersurface::new(
        alg,
        "koranyi_cap",
        level,
        vec![chart],
        boundary,
    ))
}

/// Graph `{x_3 = x_1^2}` in the first Heisenberg group.
fn graph_t_x1sq(alg: Arc<StratifiedAlgebra>, opts: &SurfaceOptions) -> Result<Hypersurface> {
    require_heisenberg1(&alg, "graph:t_x1sq")?;
    let level = ScalarField::new("x3-x1sq", |x: &[f64]| x[2] - x[0] * x[0])
        .with_gradient(|x: &[f64]| vec![-2.0 * x[0], 0.0, 1.0]);
    let domain = opts.domain.clone().unwrap_or_else(|| default_square(2));
    let chart = Chart::new(domain, |u: &[f64]| vec![u[0], u[1], u[0] * u[0]])
        .with_jacobian(|u: &[f64]| {
            let mut m = Mat::zeros(3, 2);
            m.set(0, 0, 1.0);
            m.set(1, 1, 1.0);
            m.set(2, 0, 2.0 * u[0]);
            m
        })
        .with_locator(|x: &[f64]| vec![x[0], x[1]]);
    let boundary = if opts.with_boundary {
        box_boundary_pieces(&chart)
    } else {
        Vec::new()
    };
    Ok(Hypersurface::new(alg, "graph:t_x1sq", level, vec![chart], boundary))
}

/// Graph `{x_4 = x_3}` in the Engel group.
fn graph_engel_x4_x3(alg: Arc<StratifiedAlgebra>, opts: &SurfaceOptions) -> Result<Hypersurface> {
    if alg.dim() != 4 || alg.step() != 3 {
        return Err(Error::Input(
            "surface 'graph:engel_x4_x3' is defined on the Engel group only".into(),
        ));
    }
    let level = ScalarField::new("x4-x3", |x: &[f64]| x[3] - x[2])
        .with_gradient(|_x: &[f64]| vec![0.0, 0.0, -1.0, 1.0]);
    let domain = opts.domain.clone().unwrap_or_else(|| default_square(3));
    let chart = Chart::new(domain, |u: &[f64]| vec![u[0], u[1], u[2], u[2]])
        .with_jacobian(|_u: &[f64]| {
            let mut m = Mat::zeros(4, 3);
            m.set(0, 0, 1.0);
            m.set(1, 1, 1.0);
            m.set(2, 2, 1.0);
            m.set(3, 2, 1.0);
            m
        })
        .with_locator(|x: &[f64]| vec![x[0], x[1], x[2]]);
    let boundary = if opts.with_boundary {
        box_boundary_pieces(&chart)
    } else {
        Vec::new()
    };
    Ok(Hypersurface::new(
        alg,
        "graph:engel_x4_x3",
        level,
        vec![chart],
        boundary,
    ))
}

/// Parse a surface name of the form `base` or `base(arg)`.
fn parse_name(name: &str) -> (String, Option<f64>) {
    if let Some(open) = name.find('(') {
        if let Some(close) = name.rfind(')') {
            if close > open {
                let arg = name[open + 1..close].trim().parse::<f64>().ok();
                if arg.is_some() {
                    return (name[..open].to_string(), arg);
                }
            }
        }
    }
    (name.to_string(), None)
}

/// Named surface on a group.
pub fn surface(
    alg: Arc<StratifiedAlgebra>,
    name: &str,
    opts: &SurfaceOptions,
) -> Result<Hypersurface> {
    let (base, arg) = parse_name(name);
    match base.as_str() {
        "vplane" => Ok(vplane(alg, opts)),
        "cplane" => Ok(cplane(alg, opts)),
        "koranyi_sphere" => koranyi_sphere(alg, arg.unwrap_or(1.0), opts),
        "koranyi_cap" => koranyi_cap(alg, opts),
        "graph:t_x1sq" => graph_t_x1sq(alg, opts),
        "graph:engel_x4_x3" => graph_engel_x4_x3(alg, opts),
        other => Err(Error::Input(format!(
            "unknown surface '{other}' (built-ins: {})",
            SURFACES.join(", ")
        ))),
    }
}

/// Named horizontal field (frame components).
pub fn field(alg: &StratifiedAlgebra, name: &str) -> Result<HorizontalField> {
    let h = alg.horizontal_dim();
    if h < 2 {
        return Err(Error::Input(
            "built-in fields need at least two horizontal directions".into(),
        ));
    }
    let unit = move |i: usize| {
        move |_x: &[f64]| {
            let mut v = vec![0.0; h];
            v[i] = 1.0;
            v
        }
    };
    match name {
        "X1" => Ok(HorizontalField::new("X1", unit(0))),
        "X2" => Ok(HorizontalField::new("X2", unit(1))),
        "x2X1" => Ok(HorizontalField::new("x2X1", move |x: &[f64]| {
            let mut v = vec![0.0; h];
            v[0] = x[1];
            v
        })),
        "x2X2" => Ok(HorizontalField::new("x2X2", move |x: &[f64]| {
            let mut v = vec![0.0; h];
            v[1] = x[1];
            v
        })),
        other => Err(Error::Input(format!(
            "unknown field '{other}' (built-ins: {})",
            FIELDS.join(", ")
        ))),
    }
}

/// Named slicing function for the coarea check.
pub fn level_function(alg: &StratifiedAlgebra, name: &str) -> Result<ScalarField> {
    let n = alg.dim();
    match name {
        "x2" if n >= 2 => Ok(ScalarField::new("x2", |x: &[f64]| x[1]).with_gradient(
            move |_x: &[f64]| {
                let mut g = vec![0.0; n];
                g[1] = 1.0;
                g
            },
        )),
        "x3" if n >= 3 => Ok(ScalarField::new("x3", |x: &[f64]| x[2]).with_gradient(
            move |_x: &[f64]| {
                let mut g = vec![0.0; n];
                g[2] = 1.0;
                g
            },
        )),
        other => Err(Error::Input(format!(
            "unknown level function '{other}' (built-ins: {})",
            LEVEL_FUNCTIONS.join(", ")
        ))),
    }
}

/// Named weight / test function.
pub fn weight(name: &str) -> Result<ScalarField> {
    match name {
        "one" => Ok(ScalarField::new("one", |_x: &[f64]| 1.0)),
        // compactly supported radial bump in the full coordinate ball
        "bump" => Ok(ScalarField::new("bump", |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let s = (1.0 - r2).max(0.0);
            s * s
        })),
        other => Err(Error::Input(format!(
            "unknown weight '{other}' (built-ins: {})",
            WEIGHTS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_build_and_validate() {
        for name in GROUPS {
            let alg = group(name).unwrap();
            let report = alg.validate();
            assert!(report.passed(), "{name}: {report:?}");
        }
    }

    #[test]
    fn vplane_density_is_one_everywhere() {
        for name in GROUPS {
            let alg = group(name).unwrap();
            let s = vplane(alg, &SurfaceOptions::default());
            let d = s.atlas[0].dim();
            let u = vec![0.31; d];
            let density = s.sigma_density(0, &u, 1e-9).unwrap();
            assert!(
                (density - 1.0).abs() < 1e-12,
                "{name}: vplane density {density}"
            );
        }
    }

    #[test]
    fn sphere_charts_sit_on_the_level_set() {
        let alg = group("heisenberg1").unwrap();
        let s = surface(alg, "koranyi_sphere(0.8)", &SurfaceOptions::default()).unwrap();
        for (ci, chart) in s.atlas.iter().enumerate() {
            for frac in [[0.1, 0.3], [0.5, 0.5], [0.9, 0.8]] {
                let u: Vec<f64> = chart
                    .domain
                    .iter()
                    .zip(frac.iter())
                    .map(|((lo, hi), f)| lo + (hi - lo) * f)
                    .collect();
                let x = chart.point(&u);
                let v = s.level_field().eval(&x);
                assert!(v.abs() < 1e-12, "chart {ci}: level residual {v}");
                if let Some(back) = chart.locate(&x) {
                    let y = chart.point(&back);
                    let dist: f64 = y
                        .iter()
                        .zip(x.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    assert!(dist < 1e-9);
                } else {
                    panic!("chart {ci} failed to locate its own point");
                }
            }
        }
    }

    #[test]
    fn cap_has_four_boundary_pieces_and_no_characteristic_points() {
        let alg = group("heisenberg1").unwrap();
        let s = surface(alg, "koranyi_cap", &SurfaceOptions::default()).unwrap();
        assert_eq!(s.boundary.len(), 4);
        let clusters = s.characteristic_scan(41, 0.2, 1e-9).unwrap();
        assert!(clusters.is_empty(), "{clusters:?}");
    }
}
