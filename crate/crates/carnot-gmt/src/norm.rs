//! Homogeneous norms and the gauge distance they induce.
//!
//! Both supported kinds raise each layer's Euclidean norm to a power that
//! makes the total expression a polynomial under the radical, so the norm is
//! smooth away from the origin and 1-homogeneous under dilations by
//! construction.

use crate::error::{Error, Result};
use crate::group::StratifiedAlgebra;
use crate::linalg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::sync::Arc;

/// Requested norm shape.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NormSpec {
    /// Fourth root of `|x_H|^4 + 16 t^2`; only valid on groups with a
    /// one-dimensional second layer and step 2.
    Koranyi,
    /// `(sum_i C_i |x_{H_i}|^{lambda/i})^{1/lambda}` with `C_1 = 1`.
    Power {
        lambda: f64,
        /// Constants `C_2 .. C_k`; missing entries default to 1.
        #[serde(default, alias = "C")]
        c: Vec<f64>,
    },
}

/// A smooth homogeneous norm on a stratified group, with the derived
/// constants used throughout the estimate machinery cached at construction.
#[derive(Clone)]
pub struct HomogeneousNorm {
    alg: Arc<StratifiedAlgebra>,
    label: String,
    lambda: f64,
    /// Per-layer coefficients, index 0 = layer 1 (always 1.0).
    coeffs: Vec<f64>,
    /// `c_i = sup { |x_{H_i}| : norm(x) = 1 }`, index 0 = layer 1.
    layer_constants: Vec<f64>,
    ballbox: (f64, f64),
}

impl HomogeneousNorm {
    pub fn new(alg: Arc<StratifiedAlgebra>, spec: &NormSpec) -> Result<Self> {
        let k = alg.step();
        let (label, lambda, coeffs) = match spec {
            NormSpec::Koranyi => {
                if k != 2 || alg.layer_dims()[1] != 1 {
                    return Err(Error::Input(
                        "koranyi norm requires step 2 with a one-dimensional center".into(),
                    ));
                }
                ("koranyi".to_string(), 4.0, vec![1.0, 16.0])
            }
            NormSpec::Power { lambda, c } => {
                let lam = *lambda;
                if !(lam.is_finite() && lam > 0.0) {
                    return Err(Error::Input("power norm exponent must be positive".into()));
                }
                // Smoothness of the powered form needs each layer term to be
                // a polynomial in the coordinates: lambda / (2i) must be a
                // positive integer for every layer index i.
                for i in 1..=k {
                    let q = lam / (2.0 * i as f64);
                    if (q - q.round()).abs() > 1e-9 || q < 1.0 - 1e-9 {
                        return Err(Error::Input(format!(
                            "power norm exponent {lam} is not a positive multiple of 2*{i}; \
                             use at least {} for a step-{k} group",
                            Self::default_lambda(k)
                        )));
                    }
                }
                if c.len() + 1 > k {
                    return Err(Error::Input(format!(
                        "power norm got {} layer constants for a step-{} group",
                        c.len(),
                        k
                    )));
                }
                let mut coeffs = vec![1.0];
                for i in 2..=k {
                    let ci = c.get(i - 2).copied().unwrap_or(1.0);
                    if !(ci.is_finite() && ci > 0.0) {
                        return Err(Error::Input("power norm constants must be positive".into()));
                    }
                    coeffs.push(ci);
                }
                ("power".to_string(), lam, coeffs)
            }
        };
        // c_i: on the unit sphere C_i |x_{H_i}|^{lambda/i} <= 1 with equality
        // when every other layer vanishes, so the supremum is attained in
        // closed form.
        let layer_constants: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(idx, ci)| ci.powf(-((idx + 1) as f64) / lambda))
            .collect();
        let mut norm = HomogeneousNorm {
            alg,
            label,
            lambda,
            coeffs,
            layer_constants,
            ballbox: (0.0, 0.0),
        };
        norm.ballbox = norm.compute_ballbox();
        Ok(norm)
    }

    /// Default power-norm exponent for a given step: twice the least common
    /// multiple of `1..=k`.
    pub fn default_lambda(step: usize) -> f64 {
        let lcm = (1..=step as u64).fold(1u64, |acc, v| acc / gcd(acc, v) * v);
        (2 * lcm) as f64
    }

    pub fn algebra(&self) -> &Arc<StratifiedAlgebra> {
        &self.alg
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Norm value at a point.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for l in 1..=self.alg.step() {
            let r = self.alg.layer_range(l);
            let sq: f64 = x[r].iter().map(|v| v * v).sum();
            if sq > 0.0 {
                acc += self.coeffs[l - 1] * sq.powf(self.lambda / (2.0 * l as f64));
            }
        }
        acc.powf(1.0 / self.lambda)
    }

    /// Left-invariant distance `norm(x^{-1} * y)`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value(&self.alg.bch(&self.alg.inverse(x), y))
    }

    /// Euclidean gradient of the norm, defined away from the origin.
    pub fn euclid_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rho = self.value(x);
        if rho <= 0.0 {
            return Err(Error::Singular("norm gradient at the origin".into()));
        }
        let mut g = vec![0.0; x.len()];
        for l in 1..=self.alg.step() {
            let range = self.alg.layer_range(l);
            let sq: f64 = x[range.clone()].iter().map(|v| v * v).sum();
            let q = self.lambda / l as f64;
            // d/dx_j of C_l (x_{H_l} . x_{H_l})^{q/2} = C_l q |x|^{q-2} x_j
            let factor = if sq == 0.0 {
                if q == 2.0 {
                    self.coeffs[l - 1] * q
                } else {
                    0.0
                }
            } else {
                self.coeffs[l - 1] * q * sq.powf(q / 2.0 - 1.0)
            };
            for j in range {
                g[j] = factor * x[j] / (self.lambda * rho.powf(self.lambda - 1.0));
            }
        }
        Ok(g)
    }

    /// Gradient in frame components at `x`: entry `i` is the derivative of
    /// the norm along the `i`-th left-invariant frame vector.
    pub fn frame_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.euclid_gradient(x)?;
        Ok(self.alg.frame_matrix(x).tr_matvec(&g))
    }

    /// Euclidean length of the horizontal part of the frame gradient.
    pub fn horizontal_gradient_norm(&self, x: &[f64]) -> Result<f64> {
        let fg = self.frame_gradient(x)?;
        Ok(linalg::norm(&fg[..self.alg.horizontal_dim()]))
    }

    /// Per-layer sharp constants `c_i` with `|x_{H_i}| <= c_i * norm(x)^i`.
    pub fn layer_constants(&self) -> &[f64] {
        &self.layer_constants
    }

    /// Numeric supremum of `|x_{H_i}|` over the unit sphere for one layer,
    /// by dilation-normalized random sampling with a shrinking local polish.
    /// Serves as an independent cross-check of [`Self::layer_constants`].
    pub fn layer_constant_numeric(&self, layer: usize, seed: u64, samples: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.alg.dim();
        let range = self.alg.layer_range(layer);
        let project = |x: &[f64]| -> (Vec<f64>, f64) {
            let rho = self.value(x);
            let unit = self.alg.dilate(1.0 / rho, x);
            let sq: f64 = unit[range.clone()].iter().map(|v| v * v).sum();
            (unit, sq.sqrt())
        };
        let mut best = vec![0.0; n];
        let mut best_val = -1.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if self.value(&x) < 1e-9 {
                continue;
            }
            let (unit, v) = project(&x);
            if v > best_val {
                best_val = v;
                best = unit;
            }
        }
        let mut step = 0.1;
        for _ in 0..4000 {
            if step <= 1e-8 {
                break;
            }
            let mut improved = false;
            for _ in 0..64 {
                let cand: Vec<f64> = best
                    .iter()
                    .map(|v| v + rng.gen_range(-step..step))
                    .collect();
                if self.value(&cand) < 1e-9 {
                    continue;
                }
                let (unit, v) = project(&cand);
                if v > best_val {
                    best_val = v;
                    best = unit;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best_val
    }

    /// `(r1, r2)` with `Box(0, r1) ⊆ {norm <= 1} ⊆ Box(0, r2)`, where
    /// `Box(0, r)` constrains layer `i` by `|x_{H_i}|_inf <= r^i`.
    ///
    /// Both radii are closed-form: the norm is increasing in every `|x_j|`,
    /// so its supremum over a box sits at the all-ones corner, giving
    /// `r1 = (sum_i C_i h_i^{lambda/(2i)})^{-1/lambda}`; the outer radius is
    /// the largest `c_i^{1/i}` from the sharp layer constants.
    pub fn ballbox_radii(&self) -> (f64, f64) {
        self.ballbox
    }

    fn compute_ballbox(&self) -> (f64, f64) {
        let r1 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, ci)| {
                let i = idx + 1;
                let hi = self.alg.layer_dims()[idx] as f64;
                ci * hi.powf(self.lambda / (2.0 * i as f64))
            })
            .sum::<f64>()
            .powf(-1.0 / self.lambda);
        let r2 = self
            .layer_constants
            .iter()
            .enumerate()
            .map(|(idx, c)| c.powf(1.0 / (idx + 1) as f64))
            .fold(0.0, f64::max);
        (r1, r2)
    }

    /// Inner ball-box radius by bisection on the sampled box supremum of the
    /// norm; independent cross-check of the closed form in
    /// [`Self::ballbox_radii`].
    pub fn ballbox_inner_numeric(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x626f78);
        let n = self.alg.dim();
        let probes: Vec<Vec<f64>> = (0..64)
            .map(|i| {
                if i == 0 {
                    vec![1.0; n]
                } else {
                    (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
                }
            })
            .collect();
        let box_sup = |r: f64| -> f64 {
            probes
                .iter()
                .map(|p| {
                    let x: Vec<f64> = p
                        .iter()
                        .enumerate()
                        .map(|(j, f)| f * r.powi(self.alg.layer_of(j) as i32))
                        .collect();
                    self.value(&x)
                })
                .fold(0.0, f64::max)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while box_sup(hi) < 1.0 {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if box_sup(mid) <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Residual of the radial derivative identity: the homothety field
    /// centered at `x`, paired with the frame gradient of the distance from
    /// `x`, reproduces that distance exactly. Returns
    /// `|<Z_x, grad dist_x>(y) / dist_x(y) - 1|`.
    pub fn radial_identity_residual(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let z = self.alg.bch(&self.alg.inverse(x), y);
        let rho = self.value(&z);
        if rho <= 1e-12 {
            return Err(Error::Singular(
                "radial identity undefined at the center point".into(),
            ));
        }
        let grad = self.dist_frame_gradient(x, y)?;
        let hv = self.alg.homothety_vector(x, y);
        Ok((linalg::dot(&hv.frame, &grad) / rho - 1.0).abs())
    }

    /// Frame gradient at `y` of the function `dist(x, .)`. By left
    /// invariance this is the frame gradient of the norm at `x^{-1} * y`.
    pub fn dist_frame_gradient(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let z = self.alg.bch(&self.alg.inverse(x), y);
        self.frame_gradient(&z)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
