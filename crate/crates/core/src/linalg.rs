//! Small dense linear algebra: LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::domain("matrix must be square"));
        }
        Ok(Matrix { n, data: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `PA = LU` with unit lower-triangular `L`.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    norm_1: f64,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Lu> {
        let n = a.dim();
        let norm_1 = a.norm_1();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap();
            let pivot = lu[(p, k)];
            if pivot.abs() <= f64::EPSILON * norm_1.max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical {
                    message: format!("singular matrix at column {k}"),
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(p * n + j, k * n + j);
                }
                perm.swap(p, k);
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Lu { lu, perm, norm_1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// `‖A‖₁·‖A⁻¹‖₁`, computed exactly from the columns of the inverse.
    pub fn condition_1(&self) -> f64 {
        let n = self.dim();
        let mut inv_norm: f64 = 0.0;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
            e[j] = 0.0;
        }
        self.norm_1 * inv_norm
    }
}

/// Solves `Ax = b`, failing when the system is numerically singular.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_small_system() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]).unwrap();
        let x = solve(&a, &[5.0, 3.0, 6.0]).unwrap();
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip([5.0, 3.0, 6.0]) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(Error::Numerical { .. })));
    }

    #[test]
    fn condition_of_identity_is_one() {
        let lu = Lu::factor(&Matrix::identity(5)).unwrap();
        assert!((lu.condition_1() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn diagonally_dominant_round_trip(
            vals in proptest::collection::vec(-1.0f64..1.0, 36),
            b in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let mut a = Matrix::zeros(6);
            for i in 0..6 {
                for j in 0..6 {
                    a[(i, j)] = vals[i * 6 + j];
                }
                a[(i, i)] += 7.0;
            }
            let x = solve(&a, &b).unwrap();
            for (u, v) in a.mul_vec(&x).iter().zip(&b) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
