//! Stratified nilpotent Lie algebras and their group structure.
//!
//! A group element is identified with its exponential coordinates, stored as
//! a flat `Vec<f64>` ordered layer by layer. The group product is the
//! truncated Baker-Campbell-Hausdorff series, which is exact for nilpotency
//! step up to 4 (the degree-5 terms vanish identically there), so the group
//! operations below are polynomial and carry no truncation error.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use serde::Deserialize;
use std::fmt::Write as _;

/// Bracket structure tensor plus grading data for a stratified algebra.
///
/// `tensor[r][i][j]` holds the `e_r`-component of `[e_i, e_j]`. An exact
/// integer representation (entries scaled by a common denominator) is kept
/// alongside when one exists, so structural validation can run without
/// rounding.
#[derive(Debug, Clone)]
pub struct StratifiedAlgebra {
    layer_dims: Vec<usize>,
    dim: usize,
    layer_of: Vec<usize>,
    tensor: Vec<f64>,
    exact: Option<ExactTensor>,
}

#[derive(Debug, Clone)]
pub struct ExactTensor {
    /// Common denominator: `tensor = entries / scale`.
    pub scale: i64,
    pub entries: Vec<i64>,
}

/// Outcome of structural validation. Residuals are exact zeros whenever the
/// tensor admits an integer representation.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Largest `|C(r,i,j) + C(r,j,i)|`.
    pub antisymmetry_residual: f64,
    /// Largest Jacobi-identity component over all index triples.
    pub jacobi_residual: f64,
    /// Entries `(r, i, j)` whose layers violate `layer(r) = layer(i) + layer(j)`.
    pub grading_violations: Vec<(usize, usize, usize)>,
    /// Per layer `i >= 2`: rank of `[H_1, H_{i-1}]` projected to the layer,
    /// together with the required rank (the layer dimension).
    pub layer_spans: Vec<(usize, usize, usize)>,
    /// Whether residuals were computed in exact integer arithmetic.
    pub exact: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.antisymmetry_residual == 0.0
            && self.jacobi_residual == 0.0
            && self.grading_violations.is_empty()
            && self.layer_spans.iter().all(|&(_, rank, need)| rank == need)
    }

    /// Total numeric residual, for report rows.
    pub fn residual(&self) -> f64 {
        self.antisymmetry_residual
            + self.jacobi_residual
            + self.grading_violations.len() as f64
            + self
                .layer_spans
                .iter()
                .map(|&(_, rank, need)| (need.saturating_sub(rank)) as f64)
                .sum::<f64>()
    }

    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "antisymmetry {:.3e}, jacobi {:.3e}, grading violations {}, exact {}",
            self.antisymmetry_residual,
            self.jacobi_residual,
            self.grading_violations.len(),
            self.exact
        );
        for &(layer, rank, need) in &self.layer_spans {
            let _ = write!(s, ", layer {layer} span {rank}/{need}");
        }
        s
    }
}

impl StratifiedAlgebra {
    /// Build an algebra from layer dimensions and an explicit structure
    /// tensor given as `(i, j, r, value)` entries with zero-based indices.
    /// Entries are taken literally; nothing is symmetrized, so a tensor
    /// missing the mirror of some bracket will fail validation.
    ///
    /// Steps above 4 are rejected: the truncated group product would silently
    /// stop being a group law there.
    pub fn new(layer_dims: Vec<usize>, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        if layer_dims.is_empty() || layer_dims.iter().any(|&h| h == 0) {
            return Err(Error::Input("layer dimensions must be positive".into()));
        }
        if layer_dims.len() > 4 {
            return Err(Error::Unsupported(format!(
                "step {} exceeds 4; the group product is only exact up to step 4",
                layer_dims.len()
            )));
        }
        let dim: usize = layer_dims.iter().sum();
        let mut layer_of = Vec::with_capacity(dim);
        for (l, &h) in layer_dims.iter().enumerate() {
            layer_of.extend(std::iter::repeat(l + 1).take(h));
        }
        let mut tensor = vec![0.0; dim * dim * dim];
        for &(i, j, r, v) in entries {
            if i >= dim || j >= dim || r >= dim {
                return Err(Error::Input(format!(
                    "bracket entry ({i},{j},{r}) out of range for dimension {dim}"
                )));
            }
            tensor[(r * dim + i) * dim + j] = v;
        }
        let exact = detect_exact(&tensor);
        Ok(StratifiedAlgebra { layer_dims, dim, layer_of, tensor, exact })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Dimension of the first (horizontal) layer.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Homogeneous dimension `Q = sum_i i * dim(H_i)`.
    pub fn homogeneous_dim(&self) -> f64 {
        self.layer_dims
            .iter()
            .enumerate()
            .map(|(l, &h)| ((l + 1) * h) as f64)
            .sum()
    }

    /// Layer (1-based) of coordinate `idx`.
    #[inline]
    pub fn layer_of(&self, idx: usize) -> usize {
        self.layer_of[idx]
    }

    /// Coordinate range of layer `l` (1-based).
    pub fn layer_range(&self, l: usize) -> std::ops::Range<usize> {
        let start: usize = self.layer_dims[..l - 1].iter().sum();
        start..start + self.layer_dims[l - 1]
    }

    #[inline]
    pub fn tensor_entry(&self, r: usize, i: usize, j: usize) -> f64 {
        self.tensor[(r * self.dim + i) * self.dim + j]
    }

    /// Lie bracket of two algebra elements in coordinates.
    pub fn bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let ai = a[i];
            if ai == 0.0 {
                continue;
            }
            for j in 0..n {
                let bj = b[j];
                if bj == 0.0 {
                    continue;
                }
                for r in 0..n {
                    let c = self.tensor_entry(r, i, j);
                    if c != 0.0 {
                        out[r] += c * ai * bj;
                    }
                }
            }
        }
        out
    }

    /// Matrix of `ad_x = [x, .]` acting on coordinates.
    pub fn ad_matrix(&self, x: &[f64]) -> Mat {
        let n = self.dim;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                for r in 0..n {
                    let c = self.tensor_entry(r, i, j);
                    if c != 0.0 {
                        m.add_to(r, j, c * xi);
                    }
                }
            }
        }
        m
    }

    /// Group product in exponential coordinates: the Baker-Campbell-Hausdorff
    /// series through bracket length 4, which is the full series for the
    /// steps this type admits.
    pub fn bch(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let xy = self.bracket(x, y);
        for (zi, v) in z.iter_mut().zip(&xy) {
            *zi += 0.5 * v;
        }
        if self.step() >= 3 {
            let xxy = self.bracket(x, &xy);
            let yxy = self.bracket(y, &xy);
            for i in 0..self.dim {
                z[i] += (xxy[i] - yxy[i]) / 12.0;
            }
            if self.step() >= 4 {
                let yxxy = self.bracket(y, &xxy);
                for i in 0..self.dim {
                    z[i] -= yxxy[i] / 24.0;
                }
            }
        }
        z
    }

    /// Group inverse: negation in exponential coordinates.
    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| -v).collect()
    }

    /// Anisotropic dilation: coordinate `i` scales by `t^layer(i)`.
    pub fn dilate(&self, t: f64, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| t.powi(self.layer_of[i] as i32) * v)
            .collect()
    }

    /// Matrix whose columns are the left-invariant frame vectors at `x`,
    /// expressed in coordinates. Equals `I + ad_x/2 + ad_x^2/12`, a unit
    /// lower-triangular matrix under the layer ordering.
    pub fn frame_matrix(&self, x: &[f64]) -> Mat {
        let m = self.ad_matrix(x);
        let mut a = Mat::identity(self.dim);
        let mut half = m.clone();
        half.scale(0.5);
        a.add(&half);
        if self.step() >= 3 {
            let mut m2 = m.matmul(&m);
            m2.scale(1.0 / 12.0);
            a.add(&m2);
        }
        a
    }

    /// Express a coordinate tangent vector at `x` in frame components.
    pub fn frame_components(&self, x: &[f64], coord_vec: &[f64]) -> Vec<f64> {
        self.frame_matrix(x).solve_unit_lower(coord_vec)
    }

    /// Jacobian of `y -> bch(x, y)` evaluated at `y = w`.
    pub fn bch_jacobian_second(&self, x: &[f64], w: &[f64]) -> Mat {
        let n = self.dim;
        let mx = self.ad_matrix(x);
        let mut j = Mat::identity(n);
        let mut t = mx.clone();
        t.scale(0.5);
        j.add(&t);
        if self.step() >= 3 {
            let mx2 = mx.matmul(&mx);
            let mut t = mx2.clone();
            t.scale(1.0 / 12.0);
            j.add(&t);
            let mw = self.ad_matrix(w);
            let xw = self.bracket(x, w);
            let mut t = self.ad_matrix(&xw);
            t.scale(1.0 / 12.0);
            j.add(&t);
            let mut t = mw.matmul(&mx);
            t.scale(-1.0 / 12.0);
            j.add(&t);
            if self.step() >= 4 {
                let xxw = self.bracket(x, &xw);
                let mut t = self.ad_matrix(&xxw);
                t.scale(1.0 / 24.0);
                j.add(&t);
                let mut t = mw.matmul(&mx2);
                t.scale(-1.0 / 24.0);
                j.add(&t);
            }
        }
        j
    }

    /// Velocity at `t = 1` of the curve `t -> x * dilate(t, x^{-1} * y)`,
    /// the group homothety centered at `x` through `y`.
    ///
    /// Returns the vector both in coordinates and in frame components at `y`.
    pub fn homothety_vector(&self, x: &[f64], y: &[f64]) -> HomothetyVector {
        let z = self.bch(&self.inverse(x), y);
        let zdot: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(i, v)| self.layer_of[i] as f64 * v)
            .collect();
        let coords = if x.iter().all(|&v| v == 0.0) {
            zdot
        } else {
            self.bch_jacobian_second(x, &z).matvec(&zdot)
        };
        let frame = self.frame_components(y, &coords);
        HomothetyVector { coords, frame }
    }

    /// Structural validation: antisymmetry, the Jacobi identity, compatibility
    /// of the bracket with the grading, and the generation of each layer
    /// `H_i` by brackets of `H_1` with `H_{i-1}`.
    pub fn validate(&self) -> ValidationReport {
        match &self.exact {
            Some(ex) => self.validate_exact(ex),
            None => self.validate_float(),
        }
    }

    fn validate_exact(&self, ex: &ExactTensor) -> ValidationReport {
        let n = self.dim;
        let e = |r: usize, i: usize, j: usize| -> i128 { ex.entries[(r * n + i) * n + j] as i128 };
        let scale = ex.scale as f64;
        let mut anti: i128 = 0;
        for r in 0..n {
            for i in 0..n {
                for j in 0..n {
                    anti = anti.max((e(r, i, j) + e(r, j, i)).abs());
                }
            }
        }
        let mut jac: i128 = 0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in 0..n {
                        let mut s: i128 = 0;
                        for m in 0..n {
                            s += e(m, b, c) * e(d, a, m)
                                + e(m, c, a) * e(d, b, m)
                                + e(m, a, b) * e(d, c, m);
                        }
                        jac = jac.max(s.abs());
                    }
                }
            }
        }
        ValidationReport {
            antisymmetry_residual: anti as f64 / scale,
            jacobi_residual: jac as f64 / (scale * scale),
            grading_violations: self.grading_violations(),
            layer_spans: self.layer_spans(),
            exact: true,
        }
    }

    fn validate_float(&self) -> ValidationReport {
        let n = self.dim;
        let e = |r: usize, i: usize, j: usize| self.tensor_entry(r, i, j);
        let mut anti = 0.0f64;
        for r in 0..n {
            for i in 0..n {
                for j in 0..n {
                    anti = anti.max((e(r, i, j) + e(r, j, i)).abs());
                }
            }
        }
        let mut jac = 0.0f64;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += e(m, b, c) * e(d, a, m)
                                + e(m, c, a) * e(d, b, m)
                                + e(m, a, b) * e(d, c, m);
                        }
                        jac = jac.max(s.abs());
                    }
                }
            }
        }
        ValidationReport {
            antisymmetry_residual: anti,
            jacobi_residual: jac,
            grading_violations: self.grading_violations(),
            layer_spans: self.layer_spans(),
            exact: false,
        }
    }

    fn grading_violations(&self) -> Vec<(usize, usize, usize)> {
        let n = self.dim;
        let mut out = Vec::new();
        for r in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if self.tensor_entry(r, i, j) != 0.0
                        && self.layer_of[r] != self.layer_of[i] + self.layer_of[j]
                    {
                        out.push((r, i, j));
                    }
                }
            }
        }
        out
    }

    fn layer_spans(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for l in 2..=self.step() {
            let range = self.layer_range(l);
            let lower = self.layer_range(l - 1);
            let horiz = self.layer_range(1);
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for i in horiz.clone() {
                for j in lower.clone() {
                    let mut e = vec![0.0; self.dim];
                    e[i] = 1.0;
                    let mut f = vec![0.0; self.dim];
                    f[j] = 1.0;
                    let br = self.bracket(&e, &f);
                    rows.push(range.clone().map(|r| br[r]).collect());
                }
            }
            out.push((l, rank(rows), self.layer_dims[l - 1]));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct HomothetyVector {
    pub coords: Vec<f64>,
    pub frame: Vec<f64>,
}

/// Numeric rank via row echelon with a fixed tolerance. The inputs here are
/// small integer-valued matrices, so no scaling subtleties arise.
fn rank(mut rows: Vec<Vec<f64>>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).max_by(|&a, &b| {
            rows[a][c].abs().partial_cmp(&rows[b][c].abs()).unwrap()
        }) else {
            break;
        };
        if rows[piv][c].abs() < 1e-9 {
            continue;
        }
        rows.swap(rank, piv);
        let pv = rows[rank][c];
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0.0 {
                let f = rows[r][c] / pv;
                for k in c..cols {
                    let upd = rows[rank][k] * f;
                    rows[r][k] -= upd;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Try to express the tensor as integers over a small common denominator.
fn detect_exact(tensor: &[f64]) -> Option<ExactTensor> {
    const DENOMS: [i64; 12] = [1, 2, 3, 4, 6, 8, 12, 16, 24, 48, 120, 720];
    'outer: for &d in &DENOMS {
        let mut entries = Vec::with_capacity(tensor.len());
        for &v in tensor {
            let scaled = v * d as f64;
            let rounded = scaled.round();
            if (scaled - rounded).abs() > 1e-9 || rounded.abs() > 1e15 {
                continue 'outer;
            }
            entries.push(rounded as i64);
        }
        return Some(ExactTensor { scale: d, entries });
    }
    None
}

/// Helper for building tensors: for each `(i, j, r, v)` insert both the entry
/// and its antisymmetric mirror `(j, i, r, -v)`.
pub fn antisymmetric_entries(
    pairs: &[(usize, usize, usize, f64)],
) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for &(i, j, r, v) in pairs {
        out.push((i, j, r, v));
        out.push((j, i, r, -v));
    }
    out
}

/// JSON description of a group: layer dimensions plus bracket entries
/// `[i, j, r, value]` with one-based indices. Mirror entries are filled in
/// automatically unless given explicitly; conflicting duplicates are errors.
#[derive(Debug, Clone, Deserialize)]
pub struct GroupJson {
    pub layer_dims: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<(usize, usize, usize, f64)>,
}

impl GroupJson {
    pub fn build(&self) -> Result<StratifiedAlgebra> {
        let dim: usize = self.layer_dims.iter().sum();
        let mut seen: Vec<Option<f64>> = vec![None; dim * dim * dim];
        let idx = |i: usize, j: usize, r: usize| (r * dim + i) * dim + j;
        for &(i1, j1, r1, v) in &self.brackets {
            if i1 == 0 || j1 == 0 || r1 == 0 || i1 > dim || j1 > dim || r1 > dim {
                return Err(Error::Input(format!(
                    "bracket [{i1},{j1},{r1}] out of range (one-based, dimension {dim})"
                )));
            }
            let (i, j, r) = (i1 - 1, j1 - 1, r1 - 1);
            for (a, b, val) in [(i, j, v), (j, i, -v)] {
                match seen[idx(a, b, r)] {
                    None => seen[idx(a, b, r)] = Some(val),
                    Some(prev) if prev == val => {}
                    Some(prev) => {
                        return Err(Error::Input(format!(
                            "conflicting bracket entries for ({},{},{}): {} vs {}",
                            a + 1,
                            b + 1,
                            r + 1,
                            prev,
                            val
                        )))
                    }
                }
            }
        }
        let entries: Vec<(usize, usize, usize, f64)> = seen
            .iter()
            .enumerate()
            .filter_map(|(flat, v)| {
                v.map(|val| {
                    let r = flat / (dim * dim);
                    let i = (flat / dim) % dim;
                    let j = flat % dim;
                    (i, j, r, val)
                })
            })
            .collect();
        StratifiedAlgebra::new(self.layer_dims.clone(), &entries)
    }
}
