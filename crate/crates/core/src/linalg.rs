//! Small dense linear algebra: a row-major matrix and LU with partial pivoting.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Result, VolterraError};

/// Pivots smaller than this (relative to the largest entry) are treated as singular.
pub const PIVOT_TOL: f64 = 1e-13;

/// Rows below this size are eliminated sequentially.
const PAR_THRESHOLD: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Factor with partial pivoting.
    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self.clone())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` stored compactly; `L` has a unit diagonal.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(mut a: Matrix) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let scale = a.max_abs().max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivot_max: f64 = 0.0;
        let mut pivot_min = f64::INFINITY;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[(i, k)]))
                .fold((k, 0.0f64), |best, (i, v)| if v.abs() > best.1.abs() { (i, v) } else { best });
            pivot_max = pivot_max.max(pivot.abs());
            pivot_min = pivot_min.min(pivot.abs());
            if pivot.abs() < PIVOT_TOL * scale {
                return Err(VolterraError::Singular {
                    row: k,
                    pivot,
                    condition: if pivot_min > 0.0 { pivot_max / pivot_min } else { f64::INFINITY },
                });
            }
            if p != k {
                perm.swap(p, k);
                let (head, tail) = a.data.split_at_mut(p * n);
                head[k * n..(k + 1) * n].swap_with_slice(&mut tail[..n]);
            }
            let (upper, lower) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..];
            let eliminate = |row: &mut [f64]| {
                let l = row[k] / pivot_row[k];
                row[k] = l;
                if l != 0.0 {
                    for (r, u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *r -= l * u;
                    }
                }
            };
            if n - k > PAR_THRESHOLD {
                lower.par_chunks_mut(n).for_each(eliminate);
            } else {
                lower.chunks_mut(n).for_each(eliminate);
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        let (lo, hi) = (0..self.dim()).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
            let d = self.lu[(i, i)].abs();
            (lo.min(d), hi.max(d))
        });
        hi / lo
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Orthonormal eigenvectors of the Dirichlet stencil `Tri(-1, 2, -1)` of
/// size `m - 1`: `Q[i][p] = sqrt(2/m) sin((i+1)(p+1)π/m)`.
pub fn dirichlet_sine_basis(m: usize) -> Matrix {
    let size = m - 1;
    let scale = (2.0 / m as f64).sqrt();
    Matrix::from_fn(size, size, |i, p| {
        scale * (((i + 1) * (p + 1)) as f64 * std::f64::consts::PI / m as f64).sin()
    })
}

/// Eigenvalues `2 - 2 cos(pπ/m)`, p = 1..m-1, matching [`dirichlet_sine_basis`].
pub fn dirichlet_stencil_eigenvalues(m: usize) -> Vec<f64> {
    (1..m)
        .map(|p| 2.0 - 2.0 * (p as f64 * std::f64::consts::PI / m as f64).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_small_system_requiring_pivoting() {
        let a = Matrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ]);
        let x_true = [1.0, -2.0, 0.5];
        let b = a.matvec(&x_true);
        let x = a.lu().unwrap().solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert_abs_diff_eq!(*u, v, epsilon = 1e-14);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        match a.lu() {
            Err(VolterraError::Singular { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn parallel_path_matches_residual() {
        let n = 400;
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else {
                1.0 / (1.0 + (i as f64 - j as f64).abs())
            }
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let lu = a.lu().unwrap();
        let x = lu.solve(&b);
        let r = a.matvec(&x);
        let res = r.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(res < 1e-12);
        assert!(lu.pivot_ratio() >= 1.0);
    }

    #[test]
    fn sine_basis_diagonalizes_stencil() {
        let m = 9;
        let q = dirichlet_sine_basis(m);
        let lam = dirichlet_stencil_eigenvalues(m);
        let size = m - 1;
        let tri = Matrix::from_fn(size, size, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        for p in 0..size {
            let v: Vec<f64> = (0..size).map(|i| q[(i, p)]).collect();
            let tv = tri.matvec(&v);
            for i in 0..size {
                assert_abs_diff_eq!(tv[i], lam[p] * v[i], epsilon = 1e-13);
            }
            let norm: f64 = v.iter().map(|x| x * x).sum();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-13);
        }
    }
}
