//! Level-curve extraction on two-dimensional chart domains by marching
//! squares, used for curve integrals over level sets of a scalar function
//! restricted to a surface patch.

/// Straight segment in chart coordinates approximating a piece of a level
/// curve. Segments are unoriented.
#[derive(Debug, Clone)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

fn interp(p: [f64; 2], q: [f64; 2], vp: f64, vq: f64) -> [f64; 2] {
    let denom = vp - vq;
    let t = if denom.abs() < 1e-300 {
        0.5
    } else {
        (vp / denom).clamp(0.0, 1.0)
    };
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Extract the level set `{g = level}` inside a box as straight segments on
/// a `per_axis` x `per_axis` cell grid. Saddle cells are disambiguated by
/// the cell-center average.
pub fn level_segments<F: Fn(&[f64]) -> f64>(
    domain: &[(f64, f64)],
    g: F,
    per_axis: usize,
    level: f64,
) -> Vec<Segment> {
    assert_eq!(domain.len(), 2, "marching squares needs a 2-d domain");
    let n = per_axis.max(2);
    let (u0, u1) = domain[0];
    let (v0, v1) = domain[1];
    let du = (u1 - u0) / n as f64;
    let dv = (v1 - v0) / n as f64;
    let mut vals = vec![0.0; (n + 1) * (n + 1)];
    for j in 0..=n {
        for i in 0..=n {
            let u = [u0 + du * i as f64, v0 + dv * j as f64];
            vals[j * (n + 1) + i] = g(&u) - level;
        }
    }
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let p00 = [u0 + du * i as f64, v0 + dv * j as f64];
            let p10 = [p00[0] + du, p00[1]];
            let p11 = [p00[0] + du, p00[1] + dv];
            let p01 = [p00[0], p00[1] + dv];
            let v00 = vals[j * (n + 1) + i];
            let v10 = vals[j * (n + 1) + i + 1];
            let v11 = vals[(j + 1) * (n + 1) + i + 1];
            let v01 = vals[(j + 1) * (n + 1) + i];
            let mask = (v00 > 0.0) as usize
                | ((v10 > 0.0) as usize) << 1
                | ((v11 > 0.0) as usize) << 2
                | ((v01 > 0.0) as usize) << 3;
            let bottom = || interp(p00, p10, v00, v10);
            let right = || interp(p10, p11, v10, v11);
            let top = || interp(p01, p11, v01, v11);
            let left = || interp(p00, p01, v00, v01);
            match mask {
                0 | 15 => {}
                1 | 14 => out.push(Segment {
                    a: left(),
                    b: bottom(),
                }),
                2 | 13 => out.push(Segment {
                    a: bottom(),
                    b: right(),
                }),
                4 | 11 => out.push(Segment {
                    a: right(),
                    b: top(),
                }),
                8 | 7 => out.push(Segment {
                    a: top(),
                    b: left(),
                }),
                3 | 12 => out.push(Segment {
                    a: left(),
                    b: right(),
                }),
                6 | 9 => out.push(Segment {
                    a: bottom(),
                    b: top(),
                }),
                5 | 10 => {
                    let center = 0.25 * (v00 + v10 + v11 + v01);
                    let diag_connected = (center > 0.0) == (mask == 5);
                    if diag_connected {
                        out.push(Segment {
                            a: bottom(),
                            b: right(),
                        });
                        out.push(Segment {
                            a: top(),
                            b: left(),
                        });
                    } else {
                        out.push(Segment {
                            a: left(),
                            b: bottom(),
                        });
                        out.push(Segment {
                            a: right(),
                            b: top(),
                        });
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    out
}

/// Integrate `f(point, segment_direction)` over the segments with a
/// two-point Gauss rule per segment; `segment_direction` is the un-normalized
/// chart-coordinate direction `b - a`, so `f` should be linear in its length
/// (e.g. include the metric length of the pushed-forward tangent).
pub fn integrate_segments<F: FnMut(&[f64], &[f64]) -> f64>(segs: &[Segment], mut f: F) -> f64 {
    const S: [f64; 2] = [
        0.5 - 0.288_675_134_594_812_9,
        0.5 + 0.288_675_134_594_812_9,
    ];
    let mut total = 0.0;
    for seg in segs {
        let dir = [seg.b[0] - seg.a[0], seg.b[1] - seg.a[1]];
        for s in S {
            let p = [seg.a[0] + s * dir[0], seg.a[1] + s * dir[1]];
            total += 0.5 * f(&p, &dir);
        }
    }
    total
}
