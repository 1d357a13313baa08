//! Hypersurfaces in a stratified group: normals, curvatures, and the
//! degenerate surface measures built from the horizontal part of the normal.
//!
//! Every vector-valued quantity here is expressed in components with respect
//! to the left-invariant moving frame, and inner products are taken in those
//! components; that is the metric in which the frame is orthonormal. The
//! conversion from coordinate vectors is a triangular solve against the frame
//! matrix of the group.

use crate::error::{Error, Result};
use crate::group::StratifiedAlgebra;
use crate::linalg::{self, Mat};
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;

/// Ambient scalar function with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    f: ScalarFn,
    grad: Option<VectorFn>,
}

impl ScalarField {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            label: label.into(),
            f: Arc::new(f),
            grad: None,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Euclidean gradient: analytic when supplied, otherwise fourth-order
    /// central differences.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let n = x.len();
        let mut g = vec![0.0; n];
        let mut xp = x.to_vec();
        for j in 0..n {
            let h = 1e-4 * (1.0 + x[j].abs());
            let mut cd = |step: f64| {
                xp[j] = x[j] + step;
                let fp = (self.f)(&xp);
                xp[j] = x[j] - step;
                let fm = (self.f)(&xp);
                xp[j] = x[j];
                (fp - fm) / (2.0 * step)
            };
            let d1 = cd(h);
            let d2 = cd(0.5 * h);
            g[j] = (4.0 * d2 - d1) / 3.0;
        }
        g
    }

    /// Gradient in frame components at `x`.
    pub fn frame_gradient(&self, alg: &StratifiedAlgebra, x: &[f64]) -> Vec<f64> {
        alg.frame_matrix(x).tr_matvec(&self.gradient(x))
    }
}

/// Horizontal vector field given by its frame components (length = dimension
/// of the first layer).
#[derive(Clone)]
pub struct HorizontalField {
    label: String,
    f: VectorFn,
}

impl HorizontalField {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        HorizontalField {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

/// Parametrized patch of a hypersurface: a box domain in `R^{n-1}` and a map
/// into the group, with an optional analytic Jacobian (columns are the
/// partial derivatives of the map) and an optional locator inverting the map.
#[derive(Clone)]
pub struct Chart {
    pub domain: Vec<(f64, f64)>,
    map: VectorFn,
    jac: Option<MatrixFn>,
    locator: Option<VectorFn>,
}

impl Chart {
    pub fn new(
        domain: Vec<(f64, f64)>,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Chart {
            domain,
            map: Arc::new(map),
            jac: None,
            locator: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_locator(
        mut self,
        locator: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.locator = Some(Arc::new(locator));
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        (self.map)(u)
    }

    /// Chart coordinates of an ambient point, when a locator was supplied,
    /// the candidate lies in the (slightly fattened) domain box, and the map
    /// sends it back to the queried point.
    pub fn locate(&self, x: &[f64]) -> Option<Vec<f64>> {
        let loc = self.locator.as_ref()?;
        let mut u = loc(x);
        for (v, (lo, hi)) in u.iter_mut().zip(self.domain.iter()) {
            let eps = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
            if *v < lo - eps || *v > hi + eps {
                return None;
            }
            *v = v.clamp(*lo, *hi);
        }
        let back = self.point(&u);
        let dist = back
            .iter()
            .zip(x.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist > 1e-7 * (1.0 + linalg::norm(x)) {
            return None;
        }
        Some(u)
    }

    /// Jacobian of the chart map (ambient coordinates), `n x d`.
    pub fn jacobian(&self, u: &[f64]) -> Mat {
        if let Some(j) = &self.jac {
            return j(u);
        }
        let d = self.dim();
        let probe = self.point(u);
        let n = probe.len();
        let mut m = Mat::zeros(n, d);
        let mut up = u.to_vec();
        for c in 0..d {
            let h = 1e-5 * (1.0 + u[c].abs());
            let mut cd = |step: f64| -> Vec<f64> {
                up[c] = u[c] + step;
                let p = self.point(&up);
                up[c] = u[c] - step;
                let q = self.point(&up);
                up[c] = u[c];
                p.iter()
                    .zip(q.iter())
                    .map(|(a, b)| (a - b) / (2.0 * step))
                    .collect()
            };
            let d1 = cd(h);
            let d2 = cd(0.5 * h);
            for r in 0..n {
                m.set(r, c, (4.0 * d2[r] - d1[r]) / 3.0);
            }
        }
        m
    }
}

/// Piece of the boundary of a surface patch: a box domain in `R^{n-2}`, a
/// map into the group, and an outward hint — an ambient-coordinate vector
/// with positive pairing against the outward conormal of the surface.
#[derive(Clone)]
pub struct BoundaryPiece {
    pub domain: Vec<(f64, f64)>,
    map: VectorFn,
    jac: Option<MatrixFn>,
    outward: VectorFn,
}

impl BoundaryPiece {
    pub fn new(
        domain: Vec<(f64, f64)>,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        outward: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        BoundaryPiece {
            domain,
            map: Arc::new(map),
            jac: None,
            outward: Arc::new(outward),
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> Mat + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn point(&self, s: &[f64]) -> Vec<f64> {
        (self.map)(s)
    }

    pub fn outward_hint(&self, s: &[f64]) -> Vec<f64> {
        (self.outward)(s)
    }

    pub fn jacobian(&self, s: &[f64]) -> Mat {
        if let Some(j) = &self.jac {
            return j(s);
        }
        let d = self.dim();
        let probe = self.point(s);
        let n = probe.len();
        let mut m = Mat::zeros(n, d);
        let mut sp = s.to_vec();
        for c in 0..d {
            let h = 1e-5 * (1.0 + s[c].abs());
            let mut cd = |step: f64| -> Vec<f64> {
                sp[c] = s[c] + step;
                let p = self.point(&sp);
                sp[c] = s[c] - step;
                let q = self.point(&sp);
                sp[c] = s[c];
                p.iter()
                    .zip(q.iter())
                    .map(|(a, b)| (a - b) / (2.0 * step))
                    .collect()
            };
            let d1 = cd(h);
            let d2 = cd(0.5 * h);
            for r in 0..n {
                m.set(r, c, (4.0 * d2[r] - d1[r]) / 3.0);
            }
        }
        m
    }
}

/// Normal-direction data at one surface point, in frame components.
#[derive(Debug, Clone)]
pub struct PointData {
    pub x: Vec<f64>,
    /// Unit normal (frame components, full dimension).
    pub nu: Vec<f64>,
    /// Length of the horizontal part of `nu`.
    pub p_h_norm: f64,
    /// Unit horizontal normal; `None` at characteristic points.
    pub nu_h: Option<Vec<f64>>,
    /// Vertical components of `nu` divided by `p_h_norm` (length `n - h`);
    /// `None` at characteristic points.
    pub varpi: Option<Vec<f64>>,
    pub characteristic: bool,
}

/// Boundary-point data: the surface normal data plus the outward unit
/// conormal inside the tangent space and its horizontal-tangential part.
#[derive(Debug, Clone)]
pub struct BoundaryPointData {
    pub pd: PointData,
    /// Area element of the boundary parametrization (frame metric).
    pub measure: f64,
    /// Outward unit conormal in frame components (tangent to the surface,
    /// normal to the boundary).
    pub eta: Vec<f64>,
    /// Horizontal part of `eta` projected onto the horizontal tangent space
    /// (unnormalized); `None` at characteristic surface points.
    pub p_hs_eta: Option<Vec<f64>>,
}

impl BoundaryPointData {
    /// Degenerate boundary measure density with the convention that
    /// characteristic portions (of the surface or of the boundary) carry
    /// zero density.
    pub fn sigma_boundary_density(&self, tol_char: f64) -> f64 {
        match &self.p_hs_eta {
            Some(p) => {
                let l = linalg::norm(p);
                if self.pd.p_h_norm <= tol_char || l <= tol_char {
                    0.0
                } else {
                    self.pd.p_h_norm * l * self.measure
                }
            }
            None => 0.0,
        }
    }
}

/// Cluster of grid points where the horizontal part of the normal drops
/// below a threshold, with a locally refined minimizer.
#[derive(Debug, Clone)]
pub struct CharCluster {
    pub chart: usize,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub value: f64,
    pub grid_points: usize,
}

/// Embedded hypersurface: an ambient defining function together with an
/// atlas of parametrized patches and (optionally) parametrized boundary
/// pieces. The patches are assumed pairwise non-overlapping up to measure
/// zero; integrals sum over the atlas.
#[derive(Clone)]
pub struct Hypersurface {
    alg: Arc<StratifiedAlgebra>,
    label: String,
    level: ScalarField,
    pub atlas: Vec<Chart>,
    pub boundary: Vec<BoundaryPiece>,
}

impl Hypersurface {
    pub fn new(
        alg: Arc<StratifiedAlgebra>,
        label: impl Into<String>,
        level: ScalarField,
        atlas: Vec<Chart>,
        boundary: Vec<BoundaryPiece>,
    ) -> Self {
        Hypersurface {
            alg,
            label: label.into(),
            level,
            atlas,
            boundary,
        }
    }

    pub fn algebra(&self) -> &Arc<StratifiedAlgebra> {
        &self.alg
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level_field(&self) -> &ScalarField {
        &self.level
    }

    /// Unit normal and derived quantities at an ambient point (the defining
    /// function must not be critical there).
    pub fn normal_data(&self, x: &[f64], tol_char: f64) -> Result<PointData> {
        let g = self.level.frame_gradient(&self.alg, x);
        let len = linalg::norm(&g);
        if len <= 1e-12 {
            return Err(Error::Singular(format!(
                "defining function of '{}' is critical at the requested point",
                self.label
            )));
        }
        let nu: Vec<f64> = g.iter().map(|v| v / len).collect();
        let h = self.alg.horizontal_dim();
        let p_h_norm = linalg::norm(&nu[..h]);
        let characteristic = p_h_norm <= tol_char;
        let (nu_h, varpi) = if characteristic {
            (None, None)
        } else {
            (
                Some(nu[..h].iter().map(|v| v / p_h_norm).collect()),
                Some(nu[h..].iter().map(|v| v / p_h_norm).collect()),
            )
        };
        Ok(PointData {
            x: x.to_vec(),
            nu,
            p_h_norm,
            nu_h,
            varpi,
            characteristic,
        })
    }

    /// Frame components of the chart tangent vectors at `u` (`n x d`), with
    /// the ambient point.
    pub fn chart_frame_tangents(&self, chart_idx: usize, u: &[f64]) -> (Vec<f64>, Mat) {
        let chart = &self.atlas[chart_idx];
        let x = chart.point(u);
        let jac = chart.jacobian(u);
        let frame = self.alg.frame_matrix(&x);
        let d = jac.cols;
        let n = jac.rows;
        let mut t = Mat::zeros(n, d);
        for c in 0..d {
            let col = self.alg_frame_solve(&frame, &jac.col(c));
            for r in 0..n {
                t.set(r, c, col[r]);
            }
        }
        (x, t)
    }

    fn alg_frame_solve(&self, frame: &Mat, v: &[f64]) -> Vec<f64> {
        frame.solve_unit_lower(v)
    }

    /// Density of the degenerate surface measure with respect to the chart
    /// coordinates: horizontal normal length times the frame-metric area
    /// element of the parametrization.
    pub fn sigma_density(&self, chart_idx: usize, u: &[f64], tol_char: f64) -> Result<f64> {
        let (x, t) = self.chart_frame_tangents(chart_idx, u);
        let pd = self.normal_data(&x, tol_char)?;
        let cols: Vec<Vec<f64>> = (0..t.cols).map(|c| t.col(c).to_vec()).collect();
        let gram = linalg::gram_det_vecs(&cols);
        Ok(pd.p_h_norm * gram.max(0.0).sqrt())
    }

    /// Frame-metric area element of the chart parametrization alone.
    pub fn riemannian_density(&self, chart_idx: usize, u: &[f64]) -> f64 {
        let (_, t) = self.chart_frame_tangents(chart_idx, u);
        let cols: Vec<Vec<f64>> = (0..t.cols).map(|c| t.col(c).to_vec()).collect();
        linalg::gram_det_vecs(&cols).max(0.0).sqrt()
    }

    /// Unit horizontal normal at an ambient point near the surface.
    fn unit_horizontal_normal(&self, y: &[f64], tol_char: f64) -> Result<Vec<f64>> {
        let pd = self.normal_data(y, tol_char)?;
        pd.nu_h.ok_or_else(|| {
            Error::CharacteristicPoint(format!(
                "horizontal normal of '{}' degenerates near the evaluation point",
                self.label
            ))
        })
    }

    /// Horizontal mean curvature: minus the sum of frame derivatives of the
    /// unit horizontal normal components, by second-order central
    /// differences along the frame curves with one extrapolation step.
    pub fn mean_curvature(&self, x: &[f64], tol_char: f64) -> Result<f64> {
        let h0 = 1e-5 * (1.0 + linalg::norm(x));
        let d1 = self.horizontal_normal_divergence(x, h0, tol_char)?;
        let d2 = self.horizontal_normal_divergence(x, 0.5 * h0, tol_char)?;
        Ok(-(4.0 * d2 - d1) / 3.0)
    }

    /// Same quantity from the single-step scheme, for cross-checking the
    /// extrapolated value.
    pub fn mean_curvature_plain(&self, x: &[f64], step: f64, tol_char: f64) -> Result<f64> {
        Ok(-self.horizontal_normal_divergence(x, step, tol_char)?)
    }

    fn horizontal_normal_divergence(&self, x: &[f64], step: f64, tol_char: f64) -> Result<f64> {
        let n = self.alg.dim();
        let h = self.alg.horizontal_dim();
        let mut acc = 0.0;
        let mut dir = vec![0.0; n];
        for i in 0..h {
            dir[i] = step;
            let yp = self.alg.bch(x, &dir);
            dir[i] = -step;
            let ym = self.alg.bch(x, &dir);
            dir[i] = 0.0;
            let np = self.unit_horizontal_normal(&yp, tol_char)?;
            let nm = self.unit_horizontal_normal(&ym, tol_char)?;
            acc += (np[i] - nm[i]) / (2.0 * step);
        }
        Ok(acc)
    }

    /// Divergence of a horizontal field along the horizontal tangent
    /// directions of the surface.
    pub fn hs_divergence(
        &self,
        field: &HorizontalField,
        x: &[f64],
        tol_char: f64,
    ) -> Result<f64> {
        let pd = self.normal_data(x, tol_char)?;
        let nu_h = pd.nu_h.ok_or_else(|| {
            Error::CharacteristicPoint(format!(
                "horizontal tangent space of '{}' undefined at a characteristic point",
                self.label
            ))
        })?;
        let taus = linalg::orthogonal_complement(&nu_h);
        let n = self.alg.dim();
        let h0 = 1e-5 * (1.0 + linalg::norm(x));
        let mut acc = 0.0;
        for tau in &taus {
            let deriv = |step: f64| -> Vec<f64> {
                let mut d = vec![0.0; n];
                for (j, t) in tau.iter().enumerate() {
                    d[j] = step * t;
                }
                let yp = self.alg.bch(x, &d);
                for (j, t) in tau.iter().enumerate() {
                    d[j] = -step * t;
                }
                let ym = self.alg.bch(x, &d);
                let fp = field.eval(&yp);
                let fm = field.eval(&ym);
                fp.iter()
                    .zip(fm.iter())
                    .map(|(a, b)| (a - b) / (2.0 * step))
                    .collect()
            };
            let d1 = deriv(h0);
            let d2 = deriv(0.5 * h0);
            for j in 0..tau.len() {
                acc += (4.0 * d2[j] - d1[j]) / 3.0 * tau[j];
            }
        }
        Ok(acc)
    }

    /// Antisymmetric horizontal matrix pairing the vertical inclination
    /// against the layer-two structure constants: entry `(i, j)` is the sum
    /// over second-layer indices `a` of `varpi_a` times the `e_a` component
    /// of the bracket of the `i`-th and `j`-th horizontal frame vectors.
    pub fn vertical_structure_matrix(&self, pd: &PointData) -> Result<Mat> {
        let varpi = pd.varpi.as_ref().ok_or_else(|| {
            Error::CharacteristicPoint(
                "vertical inclination undefined at a characteristic point".into(),
            )
        })?;
        let h = self.alg.horizontal_dim();
        let mut m = Mat::zeros(h, h);
        if self.alg.step() >= 2 {
            for a in self.alg.layer_range(2) {
                let w = varpi[a - h];
                if w == 0.0 {
                    continue;
                }
                for i in 0..h {
                    for j in 0..h {
                        let e = self.alg.tensor_entry(a, i, j);
                        if e != 0.0 {
                            m.add_to(i, j, w * e);
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    /// Boundary-point data for one boundary piece.
    pub fn boundary_data(
        &self,
        piece_idx: usize,
        s: &[f64],
        tol_char: f64,
    ) -> Result<BoundaryPointData> {
        let piece = &self.boundary[piece_idx];
        let x = piece.point(s);
        let pd = self.normal_data(&x, tol_char)?;
        let frame = self.alg.frame_matrix(&x);
        let jac = piece.jacobian(s);
        let d = jac.cols;
        let tans: Vec<Vec<f64>> = (0..d).map(|c| frame.solve_unit_lower(&jac.col(c))).collect();
        let measure = linalg::gram_det_vecs(&tans).max(0.0).sqrt();
        // Orthonormalize the boundary tangents, then strip tangent and
        // normal components off the outward hint to land on the conormal.
        let mut onb: Vec<Vec<f64>> = Vec::with_capacity(d);
        for t in &tans {
            let mut v = t.clone();
            let vnu = linalg::dot(&v, &pd.nu);
            linalg::axpy(&mut v, -vnu, &pd.nu);
            for b in &onb {
                let c = linalg::dot(&v, b);
                linalg::axpy(&mut v, -c, b);
            }
            let l = linalg::norm(&v);
            if l > 1e-12 {
                linalg::rescale(&mut v, 1.0 / l);
                onb.push(v);
            }
        }
        let hint = piece.outward_hint(s);
        let mut eta = frame.solve_unit_lower(&hint);
        let enu = linalg::dot(&eta, &pd.nu);
        linalg::axpy(&mut eta, -enu, &pd.nu);
        for b in &onb {
            let c = linalg::dot(&eta, b);
            linalg::axpy(&mut eta, -c, b);
        }
        let l = linalg::norm(&eta);
        if l <= 1e-10 {
            return Err(Error::Input(format!(
                "outward hint on boundary piece {piece_idx} of '{}' is tangent to the boundary",
                self.label
            )));
        }
        linalg::rescale(&mut eta, 1.0 / l);
        let h = self.alg.horizontal_dim();
        let p_hs_eta = pd.nu_h.as_ref().map(|nu_h| {
            let mut p: Vec<f64> = eta[..h].to_vec();
            let c = linalg::dot(&p, nu_h);
            linalg::axpy(&mut p, -c, nu_h);
            p
        });
        Ok(BoundaryPointData {
            pd,
            measure,
            eta,
            p_hs_eta,
        })
    }

    /// Scan the atlas on a regular grid for points where the horizontal part
    /// of the normal drops below `threshold`, cluster adjacent hits, and
    /// polish each cluster minimum by coordinate descent.
    pub fn characteristic_scan(
        &self,
        per_axis: usize,
        threshold: f64,
        tol_char: f64,
    ) -> Result<Vec<CharCluster>> {
        let per_axis = per_axis.max(2);
        let mut out = Vec::new();
        for (ci, chart) in self.atlas.iter().enumerate() {
            let d = chart.dim();
            let steps: Vec<f64> = chart
                .domain
                .iter()
                .map(|(lo, hi)| (hi - lo) / (per_axis - 1) as f64)
                .collect();
            let total = per_axis.pow(d as u32);
            let idx_to_u = |mut flat: usize| -> Vec<f64> {
                let mut u = vec![0.0; d];
                for j in 0..d {
                    let i = flat % per_axis;
                    flat /= per_axis;
                    u[j] = chart.domain[j].0 + steps[j] * i as f64;
                }
                u
            };
            let mut hit = vec![false; total];
            for flat in 0..total {
                let u = idx_to_u(flat);
                let x = chart.point(&u);
                if let Ok(pd) = self.normal_data(&x, tol_char) {
                    if pd.p_h_norm < threshold {
                        hit[flat] = true;
                    }
                }
            }
            let mut seen = vec![false; total];
            for start in 0..total {
                if !hit[start] || seen[start] {
                    continue;
                }
                // flood fill over axis-adjacent grid neighbours
                let mut stack = vec![start];
                seen[start] = true;
                let mut members = Vec::new();
                while let Some(flat) = stack.pop() {
                    members.push(flat);
                    let mut rem = flat;
                    let mut coords = vec![0usize; d];
                    for c in coords.iter_mut() {
                        *c = rem % per_axis;
                        rem /= per_axis;
                    }
                    for j in 0..d {
                        let stride = per_axis.pow(j as u32);
                        if coords[j] > 0 {
                            let nb = flat - stride;
                            if hit[nb] && !seen[nb] {
                                seen[nb] = true;
                                stack.push(nb);
                            }
                        }
                        if coords[j] + 1 < per_axis {
                            let nb = flat + stride;
                            if hit[nb] && !seen[nb] {
                                seen[nb] = true;
                                stack.push(nb);
                            }
                        }
                    }
                }
                let value_at = |u: &[f64]| -> f64 {
                    let x = chart.point(u);
                    match self.normal_data(&x, tol_char) {
                        Ok(pd) => pd.p_h_norm,
                        Err(_) => f64::INFINITY,
                    }
                };
                let mut best_u = idx_to_u(members[0]);
                let mut best_v = value_at(&best_u);
                for &m in &members[1..] {
                    let u = idx_to_u(m);
                    let v = value_at(&u);
                    if v < best_v {
                        best_v = v;
                        best_u = u;
                    }
                }
                // coordinate descent with shrinking step, clamped to the box
                let mut step_scale = 1.0;
                let mut rounds = 0;
                while step_scale > 1e-9 && rounds < 4000 {
                    rounds += 1;
                    let mut improved = false;
                    for j in 0..d {
                        for sgn in [-1.0, 1.0] {
                            let mut cand = best_u.clone();
                            cand[j] = (cand[j] + sgn * step_scale * steps[j])
                                .clamp(chart.domain[j].0, chart.domain[j].1);
                            let v = value_at(&cand);
                            if v < best_v {
                                best_v = v;
                                best_u = cand;
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        step_scale *= 0.5;
                    }
                }
                out.push(CharCluster {
                    chart: ci,
                    u: best_u.clone(),
                    x: chart.point(&best_u),
                    value: best_v,
                    grid_points: members.len(),
                });
            }
        }
        out.sort_by(|a, b| {
            a.chart.cmp(&b.chart).then(
                a.u.partial_cmp(&b.u)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
        });
        Ok(out)
    }
}

/// Density of the codimension-two degenerate measure for the intersection of
/// two hypersurfaces, per unit frame-metric length of the intersection:
/// norm of the wedge of the two horizontal normal parts divided by the norm
/// of the wedge of the two full unit normals.
pub fn intersection_sigma_factor(pd_a: &PointData, pd_b: &PointData, h: usize) -> f64 {
    let wedge_sq = |a: &[f64], b: &[f64]| -> f64 {
        let aa = linalg::dot(a, a);
        let bb = linalg::dot(b, b);
        let ab = linalg::dot(a, b);
        (aa * bb - ab * ab).max(0.0)
    };
    let num = wedge_sq(&pd_a.nu[..h], &pd_b.nu[..h]).sqrt();
    let den = wedge_sq(&pd_a.nu, &pd_b.nu).sqrt();
    if den <= 1e-12 {
        0.0
    } else {
        num / den
    }
}

/// Smallest weighted order of a nonvanishing coordinate derivative of the
/// left-translated function `z -> f(x * z)` at `z = 0`, where coordinate `j`
/// carries its layer index as weight. Mixed partial derivatives up to total
/// degree four are estimated by nested central differences with one
/// extrapolation step; coefficients below `tol` count as zero.
pub fn point_order(
    alg: &StratifiedAlgebra,
    f: &ScalarField,
    x: &[f64],
    tol: f64,
) -> Result<usize> {
    let n = alg.dim();
    let zeta = |z: &[f64]| f.eval(&alg.bch(x, z));
    // nested central differences for the multi-index beta
    fn central(
        zeta: &dyn Fn(&[f64]) -> f64,
        z: &mut Vec<f64>,
        beta: &[usize],
        var: usize,
        h: f64,
    ) -> f64 {
        if var == beta.len() {
            return zeta(z);
        }
        if beta[var] == 0 {
            return central(zeta, z, beta, var + 1, h);
        }
        let mut reduced = beta.to_vec();
        reduced[var] -= 1;
        let keep = z[var];
        z[var] = keep + h;
        let p = central(zeta, z, &reduced, var, h);
        z[var] = keep - h;
        let m = central(zeta, z, &reduced, var, h);
        z[var] = keep;
        (p - m) / (2.0 * h)
    }
    let mut betas: Vec<Vec<usize>> = Vec::new();
    fn enumerate(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            if cur.iter().sum::<usize>() > 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..=left {
            cur.push(v);
            enumerate(n, left - v, cur, out);
            cur.pop();
        }
    }
    enumerate(n, 4, &mut Vec::new(), &mut betas);
    let mut best: Option<usize> = None;
    for beta in &betas {
        let weighted: usize = beta
            .iter()
            .enumerate()
            .map(|(j, b)| b * alg.layer_of(j))
            .sum();
        if let Some(b) = best {
            if weighted >= b {
                continue;
            }
        }
        let h = 5e-2;
        let mut z = vec![0.0; n];
        let d1 = central(&zeta, &mut z, beta, 0, h);
        let d2 = central(&zeta, &mut z, beta, 0, 0.5 * h);
        let deriv = (4.0 * d2 - d1) / 3.0;
        let factorial: f64 = beta
            .iter()
            .map(|&b| (1..=b.max(1)).product::<usize>() as f64)
            .product();
        if (deriv / factorial).abs() > tol {
            best = Some(weighted);
        }
    }
    best.ok_or_else(|| {
        Error::Unsupported(
            "no nonvanishing derivative up to total degree four; weighted order out of range"
                .into(),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::antisymmetric_entries;

    fn h1() -> Arc<StratifiedAlgebra> {
        Arc::new(
            StratifiedAlgebra::new(vec![2, 1], &antisymmetric_entries(&[(0, 1, 2, 1.0)])).unwrap(),
        )
    }

    fn cplane(alg: Arc<StratifiedAlgebra>) -> Hypersurface {
        let level = ScalarField::new("x3", |x: &[f64]| x[2])
            .with_gradient(|_x: &[f64]| vec![0.0, 0.0, 1.0]);
        let chart = Chart::new(vec![(-1.0, 1.0), (-1.0, 1.0)], |u: &[f64]| {
            vec![u[0], u[1], 0.0]
        })
        .with_jacobian(|_u: &[f64]| {
            let mut j = Mat::zeros(3, 2);
            j.set(0, 0, 1.0);
            j.set(1, 1, 1.0);
            j
        });
        Hypersurface::new(alg, "cplane", level, vec![chart], Vec::new())
    }

    #[test]
    fn cplane_normal_data() {
        let s = cplane(h1());
        let pd = s.normal_data(&[1.0, 0.0, 0.0], 1e-6).unwrap();
        assert!((pd.p_h_norm - 1.0 / 5.0_f64.sqrt()).abs() < 1e-14);
        let varpi = pd.varpi.unwrap();
        assert!((varpi[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cplane_is_characteristic_at_origin() {
        let s = cplane(h1());
        let pd = s.normal_data(&[0.0, 0.0, 0.0], 1e-6).unwrap();
        assert!(pd.characteristic);
        assert!(pd.p_h_norm < 1e-12);
    }

    #[test]
    fn cplane_sigma_density_is_half_radius() {
        let s = cplane(h1());
        let d = s.sigma_density(0, &[0.6, -0.3], 1e-6).unwrap();
        let r = (0.6_f64 * 0.6 + 0.3 * 0.3).sqrt();
        assert!((d - r / 2.0).abs() < 1e-13, "density {d} vs {}", r / 2.0);
    }

    #[test]
    fn point_order_examples() {
        let alg = h1();
        let vertical = ScalarField::new("x3", |x: &[f64]| x[2]);
        assert_eq!(point_order(&alg, &vertical, &[0.0; 3], 1e-6).unwrap(), 2);
        let lateral = ScalarField::new("x1", |x: &[f64]| x[0]);
        assert_eq!(point_order(&alg, &lateral, &[0.0; 3], 1e-6).unwrap(), 1);
        let parabola = ScalarField::new("t-x1sq", |x: &[f64]| x[2] - x[0] * x[0]);
        assert_eq!(point_order(&alg, &parabola, &[0.0; 3], 1e-6).unwrap(), 2);
    }
}
