//! Kronecker-structured operators on block vectors.
//!
//! A block vector of `r` blocks of length `m` is stored contiguously, block
//! `i` occupying `v[i*m..(i+1)*m]`.

use alloc::vec;
use alloc::vec::Vec;

use super::{LuFactors, Matrix};
use crate::{Error, Result};

/// An `m×m` linear operator acting on block components.
pub trait LinearMap {
    /// Block length `m`.
    fn dim(&self) -> usize;
    /// `out = self · x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

impl LinearMap for Matrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.mul_vec_into(x, out);
    }
}

/// Identity operator of a given dimension.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearMap for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

/// Computes `(B ⊗ H) v` blockwise, applying `H` once per input block.
pub fn kron_apply<H: LinearMap + ?Sized>(b: &Matrix, h: &H, v: &[f64]) -> Result<Vec<f64>> {
    let m = h.dim();
    if v.len() != b.cols() * m {
        return Err(Error::Dimension {
            what: "Kronecker product",
            expected: b.cols() * m,
            found: v.len(),
        });
    }
    let mut hv = vec![0.0; v.len()];
    for (src, dst) in v.chunks_exact(m).zip(hv.chunks_exact_mut(m)) {
        h.apply(src, dst);
    }
    let mut out = vec![0.0; b.rows() * m];
    for (i, oi) in out.chunks_exact_mut(m).enumerate() {
        for (j, hj) in hv.chunks_exact(m).enumerate() {
            let bij = b[(i, j)];
            if bij != 0.0 {
                for (o, x) in oi.iter_mut().zip(hj) {
                    *o += bij * x;
                }
            }
        }
    }
    Ok(out)
}

/// Solves `[I + h²·(L ⊗ H)] x = rhs` for lower-triangular `L` with constant
/// diagonal `d`, by block forward substitution.
///
/// `diag_factors` must factor `I + h²·d·H`; it is reused for every block.
pub fn block_lower_triangular_solve(
    lower: &Matrix,
    h: &Matrix,
    diag_factors: &LuFactors,
    h2: f64,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let s = lower.rows();
    let m = h.rows();
    if !lower.is_square() || !h.is_square() || diag_factors.dim() != m {
        return Err(Error::Dimension {
            what: "block triangular solve",
            expected: m,
            found: diag_factors.dim(),
        });
    }
    if rhs.len() != s * m {
        return Err(Error::Dimension {
            what: "block triangular solve rhs",
            expected: s * m,
            found: rhs.len(),
        });
    }
    let mut x = rhs.to_vec();
    // H·x_l for already solved blocks
    let mut hx = vec![0.0; s * m];
    for i in 0..s {
        let xi = &mut x[i * m..(i + 1) * m];
        for l in 0..i {
            let c = h2 * lower[(i, l)];
            if c != 0.0 {
                for (a, b) in xi.iter_mut().zip(&hx[l * m..(l + 1) * m]) {
                    *a -= c * b;
                }
            }
        }
        diag_factors.solve_in_place(xi)?;
        h.mul_vec_into(xi, &mut hx[i * m..(i + 1) * m]);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kron_dense(b: &Matrix, h: &Matrix) -> Matrix {
        let m = h.rows();
        Matrix::from_fn(b.rows() * m, b.cols() * m, |i, j| {
            b[(i / m, j / m)] * h[(i % m, j % m)]
        })
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
        let a = random(rng, m, m);
        a.add(&a.transpose()).scale(0.5)
    }

    #[test]
    fn identity_kron_identity() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            kron_apply(&Matrix::identity(2), &Identity(2), &v).unwrap(),
            v.to_vec()
        );
    }

    #[test]
    fn swap_blocks() {
        let b = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(
            kron_apply(&b, &Identity(3), &v).unwrap(),
            vec![4.0, 5.0, 6.0, 1.0, 2.0, 3.0]
        );
        assert!(kron_apply(&b, &Identity(2), &v).is_err());
    }

    #[test]
    fn matches_explicit_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random(&mut rng, 3, 3);
        let h = random(&mut rng, 5, 5);
        let v: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = kron_apply(&b, &h, &v).unwrap();
        let dense = kron_dense(&b, &h).mul_vec(&v).unwrap();
        for (a, c) in fast.iter().zip(&dense) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn rectangular_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random(&mut rng, 4, 2);
        let h = random(&mut rng, 3, 3);
        let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = kron_apply(&b, &h, &v).unwrap();
        let dense = kron_dense(&b, &h).mul_vec(&v).unwrap();
        assert_eq!(fast.len(), 12);
        for (a, c) in fast.iter().zip(&dense) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    fn lower_with_diag(rng: &mut ChaCha8Rng, s: usize, d: f64) -> Matrix {
        Matrix::from_fn(s, s, |i, j| match i.cmp(&j) {
            core::cmp::Ordering::Greater => rng.gen_range(-1.0..1.0),
            core::cmp::Ordering::Equal => d,
            core::cmp::Ordering::Less => 0.0,
        })
    }

    #[test]
    fn zero_stepsize_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = lower_with_diag(&mut rng, 3, 0.1);
        let h = random_symmetric(&mut rng, 2);
        let f = LuFactors::factor(&Matrix::identity(2)).unwrap();
        let rhs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(
            block_lower_triangular_solve(&l, &h, &f, 0.0, &rhs).unwrap(),
            rhs.to_vec()
        );
    }

    #[test]
    fn single_block_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 0.3;
        let h2 = 0.7;
        let h = random_symmetric(&mut rng, 4);
        let dmat = Matrix::identity(4).add(&h.scale(h2 * d));
        let f = LuFactors::factor(&dmat).unwrap();
        let rhs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = block_lower_triangular_solve(&Matrix::from_rows(&[[d]]), &h, &f, h2, &rhs).unwrap();
        let y = f.solve(&rhs).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn matches_dense_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in 1..=6 {
            for m in 1..=8 {
                let d = rng.gen_range(0.01..0.5);
                let h2 = rng.gen_range(0.0..2.0);
                let l = lower_with_diag(&mut rng, s, d);
                let h = random_symmetric(&mut rng, m);
                let f = LuFactors::factor(&Matrix::identity(m).add(&h.scale(h2 * d))).unwrap();
                let rhs: Vec<f64> = (0..s * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x = block_lower_triangular_solve(&l, &h, &f, h2, &rhs).unwrap();
                let full = Matrix::identity(s * m).add(&kron_dense(&l, &h).scale(h2));
                let y = LuFactors::factor(&full).unwrap().solve(&rhs).unwrap();
                let scale = 1.0 + crate::float::max_abs(&y);
                for (a, b) in x.iter().zip(&y) {
                    assert!((a - b).abs() < 1e-10 * scale, "s={s} m={m}");
                }
            }
        }
    }
}
