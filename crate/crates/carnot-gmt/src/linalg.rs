//! Small dense linear algebra helpers.
//!
//! Dimensions here are tiny (ambient dimension of the supported groups is at
//! most a handful), so everything is plain `Vec<f64>` with column-major
//! matrices and no attempt at blocking or pivot heuristics beyond partial
//! pivoting.

/// Column-major dense matrix.
#[derive(Debug, Clone)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] += v;
    }

    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let x = other.get(k, j);
                if x == 0.0 {
                    continue;
                }
                for i in 0..self.rows {
                    out.add_to(i, j, self.get(i, k) * x);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for j in 0..self.cols {
            let x = v[j];
            if x == 0.0 {
                continue;
            }
            for i in 0..self.rows {
                out[i] += self.get(i, j) * x;
            }
        }
        out
    }

    /// Transpose-vector product.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn add(&mut self, other: &Mat) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    /// Solve `self * x = b` assuming the matrix is unit lower triangular.
    pub fn solve_unit_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut x = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                let a = self.get(i, j);
                if a != 0.0 {
                    x[i] -= a * x[j];
                }
            }
        }
        x
    }

    /// Determinant by LU with partial pivoting. Intended for small Gram
    /// matrices; returns 0 for singular input.
    pub fn det(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a.get(i, k).abs() > a.get(piv, k).abs() {
                    piv = i;
                }
            }
            let pv = a.get(piv, k);
            if pv == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    let t = a.get(k, j);
                    a.set(k, j, a.get(piv, j));
                    a.set(piv, j, t);
                }
                det = -det;
            }
            det *= a.get(k, k);
            for i in k + 1..n {
                let f = a.get(i, k) / a.get(k, k);
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a.add_to(i, j, -f * a.get(k, j));
                }
            }
        }
        det
    }

    /// Solve a general square system by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a.get(i, k).abs() > a.get(piv, k).abs() {
                    piv = i;
                }
            }
            if a.get(piv, k) == 0.0 {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    let t = a.get(k, j);
                    a.set(k, j, a.get(piv, j));
                    a.set(piv, j, t);
                }
                x.swap(k, piv);
            }
            for i in k + 1..n {
                let f = a.get(i, k) / a.get(k, k);
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a.add_to(i, j, -f * a.get(k, j));
                }
                x[i] -= f * x[k];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= a.get(i, j) * x[j];
            }
            x[i] /= a.get(i, i);
        }
        Some(x)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn rescale(a: &mut [f64], s: f64) {
    for x in a {
        *x *= s;
    }
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Gram determinant of a set of vectors given as matrix columns.
pub fn gram_det(cols: &Mat) -> f64 {
    let m = cols.cols;
    let mut g = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g.set(i, j, dot(cols.col(i), cols.col(j)));
        }
    }
    g.det()
}

/// Gram determinant of a set of vectors given as slices.
pub fn gram_det_vecs(cols: &[Vec<f64>]) -> f64 {
    let m = cols.len();
    let mut g = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g.set(i, j, dot(&cols[i], &cols[j]));
        }
    }
    g.det()
}

/// Orthonormal basis of the orthogonal complement of `v` inside `R^dim`,
/// built deterministically by Gram-Schmidt over the standard basis.
pub fn orthogonal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let dim = v.len();
    let nv = norm(v);
    assert!(nv > 0.0);
    let unit: Vec<f64> = scaled(v, 1.0 / nv);
    let mut basis: Vec<Vec<f64>> = vec![unit.clone()];
    for j in 0..dim {
        let mut cand = vec![0.0; dim];
        cand[j] = 1.0;
        for b in &basis {
            let c = dot(&cand, b);
            axpy(&mut cand, -c, b);
        }
        let n = norm(&cand);
        if n > 1e-8 {
            basis.push(scaled(&cand, 1.0 / n));
        }
        if basis.len() == dim {
            break;
        }
    }
    basis.remove(0);
    basis
}
