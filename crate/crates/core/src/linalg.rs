//! Minimal dense row-major matrix used for operational matrices.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
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
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `max |A_ij - A_ji|`; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Power-iteration estimate of the dominant eigenvalue magnitude.
    ///
    /// Intended for symmetric matrices, where it converges to the spectral
    /// radius from any start vector not orthogonal to the dominant
    /// eigenvector.
    pub fn spectral_radius_estimate(&self, iterations: usize) -> f64 {
        let n = self.rows;
        if n == 0 || n != self.cols {
            return 0.0;
        }
        // Deterministic, generic start vector.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin())
            .collect();
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let mut w = self.matvec(&v).expect("square");
            let norm = norm2(&w);
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            w.iter_mut().for_each(|x| *x /= norm);
            v = w;
        }
        lambda
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_matmul_agree() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let x = [1.0, -2.0, 0.5];
        let ax = a.matvec(&x).unwrap();
        let aa = a.matmul(&a).unwrap();
        let lhs = a.matvec(&ax).unwrap();
        let rhs = aa.matvec(&x).unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).abs() < 1e-13);
        }
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        assert_eq!(
            a.matvec(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let mut a = DenseMatrix::identity(4);
        a[(0, 0)] = 0.2;
        a[(2, 2)] = -0.9;
        a[(3, 3)] = 0.5;
        a[(1, 1)] = 0.1;
        assert!((a.spectral_radius_estimate(500) - 0.9).abs() < 1e-10);
    }

    #[test]
    fn asymmetry() {
        let mut a = DenseMatrix::identity(3);
        a[(0, 2)] = 1.0;
        a[(2, 0)] = 0.75;
        assert_eq!(a.max_asymmetry(), 0.25);
        assert_eq!(a.transpose().max_asymmetry(), 0.25);
    }
}
