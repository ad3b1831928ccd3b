use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symmetric matrix stored row-major in full. Writers go through
/// [`SymMatrix::set`] and the rank-one helpers so both triangles agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds from rows, symmetrizing by averaging the two triangles.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self += scale * v vᵀ`
    pub fn add_outer(&mut self, scale: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        for i in 0..self.dim {
            let s = scale * v[i];
            if s == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += s * vj;
            }
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, scale: f64, other: &SymMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            acc += vi * self.row(i).iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    /// Keeps only the diagonal.
    pub fn diagonal_part(&self) -> SymMatrix {
        SymMatrix::diagonal(&self.diag())
    }

    /// Appends one row/column that is zero except for `diag` on the diagonal.
    pub fn extend(&mut self, diag: f64) {
        let n = self.dim + 1;
        let mut data = vec![0.0; n * n];
        for i in 0..self.dim {
            data[i * n..i * n + self.dim].copy_from_slice(self.row(i));
        }
        data[n * n - 1] = diag;
        self.dim = n;
        self.data = data;
    }

    /// Drops row and column `k`.
    pub fn remove(&mut self, k: usize) {
        let n = self.dim - 1;
        let mut data = Vec::with_capacity(n * n);
        for i in (0..self.dim).filter(|&i| i != k) {
            for j in (0..self.dim).filter(|&j| j != k) {
                data.push(self.get(i, j));
            }
        }
        self.dim = n;
        self.data = data;
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Strict Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for p in 0..j {
                d -= l[j * n + p] * l[j * n + p];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for p in 0..j {
                    s -= l[i * n + p] * l[j * n + p];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { dim: n, l })
    }

    /// Cholesky factor of a positive semi-definite matrix. Pivots below
    /// `tol` times the largest diagonal entry zero out their column instead
    /// of failing. Used for drawing Gaussian samples from possibly
    /// degenerate covariances.
    pub fn cholesky_psd(&self, tol: f64) -> Result<Cholesky> {
        let n = self.dim;
        let scale = self.diag().into_iter().fold(0.0_f64, f64::max);
        let floor = tol * scale.max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for p in 0..j {
                d -= l[j * n + p] * l[j * n + p];
            }
            if !d.is_finite() || d < -floor {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            if d <= floor {
                continue;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for p in 0..j {
                    s -= l[i * n + p] * l[j * n + p];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { dim: n, l })
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    /// `L v`
    pub fn mul_lower(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..=i).map(|j| self.l(i, j) * v[j]).sum())
            .collect()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for p in 0..i {
                s -= self.l(i, p) * y[p];
            }
            y[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in i + 1..n {
                s -= self.l(p, i) * y[p];
            }
            y[i] = s / self.l(i, i);
        }
        y
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in j..n {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }
}

/// Solves `A x = b` for positive definite `A`.
pub fn chol_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    Ok(a.cholesky()?.solve(b))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
