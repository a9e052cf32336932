use alloc::vec::Vec;

use super::Matrix;
use crate::{Error, Result};

/// LU factorization with partial pivoting, `P·A = L·U`.
///
/// `L` (unit lower) and `U` share the `lu` storage; `perm[i]` is the row of
/// `A` that ended up in row `i`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
    parity: f64,
}

impl LuFactors {
    /// Factors a square matrix.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension {
                what: "LU factorization",
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pmax == 0.0 || !pmax.is_finite() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                parity = -parity;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(LuFactors { lu, perm, parity })
    }

    /// Order of the factored matrix.
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Row permutation.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Unit lower-triangular factor.
    pub fn lower(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            core::cmp::Ordering::Greater => self.lu[(i, j)],
            core::cmp::Ordering::Equal => 1.0,
            core::cmp::Ordering::Less => 0.0,
        })
    }

    /// Upper-triangular factor.
    pub fn upper(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| if j >= i { self.lu[(i, j)] } else { 0.0 })
    }

    /// Determinant of the original matrix.
    pub fn determinant(&self) -> f64 {
        (0..self.dim()).fold(self.parity, |d, i| d * self.lu[(i, i)])
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Dimension {
                what: "LU solve",
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, y)| u * y)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        b.copy_from_slice(&x);
        Ok(())
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.dim() {
            return Err(Error::Dimension {
                what: "LU multi-column solve",
                expected: self.dim(),
                found: b.rows(),
            });
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = alloc::vec![0.0; b.rows()];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            self.solve_in_place(&mut col)?;
            for (i, c) in col.iter().enumerate() {
                out[(i, j)] = *c;
            }
        }
        Ok(out)
    }

    /// Cheap 1-norm condition estimate `‖A‖₁·‖A⁻¹‖₁` via the explicit inverse
    /// (only used on `s×s` matrices).
    pub fn condition_estimate(&self, a: &Matrix) -> Result<f64> {
        let inv = self.solve_matrix(&Matrix::identity(self.dim()))?;
        Ok(a.norm_one() * inv.norm_one())
    }
}
