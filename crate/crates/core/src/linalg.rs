//! Small dense matrices (at most a few rows/columns) and a Cholesky solver
//! for the normal equations of the trajectory fits.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::types::{MAX_CONDITION, SYMMETRY_TOL};
use crate::{Error, Result};

/// Largest system handled by [`solve_small_spd`].
pub const MAX_SPD_DIM: usize = 4;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
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

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
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

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let tol = SYMMETRY_TOL * self.norm_inf();
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

/// Cholesky factor L (lower triangular, A = L Lᵀ) of a small SPD matrix,
/// together with the inverse and the 1-norm condition number of A.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: Matrix,
    inverse: Matrix,
    condition: f64,
}

impl SpdFactor {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if n == 0 || n != a.cols() || n > MAX_SPD_DIM {
            return Err(Error::invalid(format!(
                "expected a square matrix of size 1..={MAX_SPD_DIM}, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_symmetric() {
            return Err(Error::Asymmetric);
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        let mut inverse = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[col] = 1.0;
            let x = cholesky_solve(&l, &e);
            for (row, v) in x.into_iter().enumerate() {
                inverse[(row, col)] = v;
            }
        }
        // Symmetrize; the two triangular solves leave rounding asymmetry.
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (inverse[(i, j)] + inverse[(j, i)]);
                inverse[(i, j)] = m;
                inverse[(j, i)] = m;
            }
        }
        let condition = a.norm_1() * inverse.norm_1();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::Singular { condition });
        }
        Ok(Self {
            lower: l,
            inverse,
            condition,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        cholesky_solve(&self.lower, b)
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n, "dimension mismatch");
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves A x = b for a symmetric positive definite A of size at most 4.
pub fn solve_small_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::invalid("right-hand side length does not match matrix"));
    }
    Ok(SpdFactor::new(a)?.solve(b))
}

/// Solves a 2×2 SPD system.
pub fn solve_2x2(a: [[f64; 2]; 2], b: [f64; 2]) -> Result<[f64; 2]> {
    let x = solve_small_spd(&Matrix::from_rows(&[a[0].to_vec(), a[1].to_vec()]), &b)?;
    Ok([x[0], x[1]])
}
