//! HBVM(k,s) coefficient matrices.
//!
//! With `c`, `b` the `k`-point Gauss rule and `Ω = diag(b)`:
//!
//! * `P_r = (P_{j-1}(c_i))`, `k×r`;
//! * `I_s = (∫₀^{c_i} P_{j-1})`, `k×s`, which equals `P_{s+1} X̂_s`;
//! * `X_s` tridiagonal with `(X_s)₁₁ = ½`, `(X_s)_{j,j+1} = −ξ_j`,
//!   `(X_s)_{j+1,j} = ξ_j`, and `X̂_s` is `X_s` with the row `(0,…,0,ξ_s)`
//!   appended;
//! * the Butcher matrix `I_s P_sᵀ Ω`.

use crate::legendre::{
    eval_legendre_all, gauss_rule, integrate_legendre, xi, QuadratureRule, MAX_NODES,
};
use crate::{Error, Matrix, Result};

/// All coefficient data for one HBVM(k,s) method.
#[derive(Debug, Clone)]
pub struct TableauSet {
    k: usize,
    s: usize,
    rule: QuadratureRule,
    p_s: Matrix,
    p_s1: Matrix,
    i_s: Matrix,
    x_s: Matrix,
    xhat_s: Matrix,
    butcher_a: Matrix,
}

/// Maximum absolute residual of each tableau identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `‖I_s − P_{s+1} X̂_s‖`.
    pub integrals: f64,
    /// `‖P_sᵀ Ω P_s − I‖`.
    pub orthonormality: f64,
    /// `‖P_sᵀ Ω I_s − X_s‖`.
    pub projection: f64,
    /// `‖I_s P_sᵀ Ω e − c‖`.
    pub row_sums: f64,
    /// Deviation of `X_s`/`X̂_s` from their tridiagonal definition.
    pub structure: f64,
}

impl IdentityReport {
    /// Largest of all residuals.
    pub fn max(&self) -> f64 {
        [
            self.integrals,
            self.orthonormality,
            self.projection,
            self.row_sums,
            self.structure,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `X_s` as defined above.
pub fn x_matrix(s: usize) -> Matrix {
    let mut x = Matrix::zeros(s, s);
    if s == 0 {
        return x;
    }
    x[(0, 0)] = 0.5;
    for j in 1..s {
        let v = xi(j).expect("j ≥ 1");
        x[(j - 1, j)] = -v;
        x[(j, j - 1)] = v;
    }
    x
}

fn xhat_matrix(s: usize) -> Matrix {
    let x = x_matrix(s);
    let mut xh = Matrix::zeros(s + 1, s);
    for i in 0..s {
        for j in 0..s {
            xh[(i, j)] = x[(i, j)];
        }
    }
    xh[(s, s - 1)] = xi(s).expect("s ≥ 1");
    xh
}

impl TableauSet {
    /// Builds HBVM(k,s), `1 ≤ s ≤ k ≤ 64`.
    pub fn new(k: usize, s: usize) -> Result<Self> {
        if s == 0 || k > MAX_NODES || s > k {
            return Err(Error::Config(alloc::format!(
                "HBVM(k,s) requires 1 ≤ s ≤ k ≤ {MAX_NODES}, got k={k}, s={s}"
            )));
        }
        let rule = gauss_rule(k)?;
        let mut p_s1 = Matrix::zeros(k, s + 1);
        let mut i_s = Matrix::zeros(k, s);
        for (i, &ci) in rule.c.iter().enumerate() {
            let row = eval_legendre_all(s + 1, ci)?;
            for (j, v) in row.into_iter().enumerate() {
                p_s1[(i, j)] = v;
            }
            for j in 0..s {
                i_s[(i, j)] = integrate_legendre(j, ci)?;
            }
        }
        let p_s = Matrix::from_fn(k, s, |i, j| p_s1[(i, j)]);
        let x_s = x_matrix(s);
        let xhat_s = xhat_matrix(s);
        let pt_omega = weighted_transpose(&p_s, &rule.b);
        let butcher_a = i_s.matmul(&pt_omega)?;
        Ok(TableauSet {
            k,
            s,
            rule,
            p_s,
            p_s1,
            i_s,
            x_s,
            xhat_s,
            butcher_a,
        })
    }

    /// Number of stages `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Degree `s`.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Gauss rule of order `k`.
    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Abscissae `c`.
    pub fn c(&self) -> &[f64] {
        &self.rule.c
    }

    /// Weights `b`.
    pub fn b(&self) -> &[f64] {
        &self.rule.b
    }

    /// `P_s`, `k×s`.
    pub fn p_s(&self) -> &Matrix {
        &self.p_s
    }

    /// `P_{s+1}`, `k×(s+1)`.
    pub fn p_s1(&self) -> &Matrix {
        &self.p_s1
    }

    /// `I_s`, `k×s`.
    pub fn i_s(&self) -> &Matrix {
        &self.i_s
    }

    /// `X_s`, `s×s`.
    pub fn x_s(&self) -> &Matrix {
        &self.x_s
    }

    /// `X̂_s`, `(s+1)×s`.
    pub fn xhat_s(&self) -> &Matrix {
        &self.xhat_s
    }

    /// Butcher matrix `I_s P_sᵀ Ω`, `k×k`.
    pub fn butcher_a(&self) -> &Matrix {
        &self.butcher_a
    }

    /// `P_sᵀ Ω`, `s×k`: maps stage values to Legendre coefficients.
    pub fn projection(&self) -> Matrix {
        weighted_transpose(&self.p_s, &self.rule.b)
    }

    /// `X_s²`.
    pub fn x_s_squared(&self) -> Matrix {
        self.x_s.matmul(&self.x_s).expect("square")
    }

    /// Residuals of the identities the stage solvers depend on.
    pub fn verify_identities(&self) -> IdentityReport {
        let s = self.s;
        let pt_omega = self.projection();
        let integrals = self
            .p_s1
            .matmul(&self.xhat_s)
            .map_or(f64::INFINITY, |m| m.max_abs_diff(&self.i_s));
        let orthonormality = pt_omega
            .matmul(&self.p_s)
            .map_or(f64::INFINITY, |m| m.max_abs_diff(&Matrix::identity(s)));
        let projection = pt_omega
            .matmul(&self.i_s)
            .map_or(f64::INFINITY, |m| m.max_abs_diff(&self.x_s));
        let row_sums = (0..self.k)
            .map(|i| (self.butcher_a.row(i).iter().sum::<f64>() - self.rule.c[i]).abs())
            .fold(0.0, f64::max);
        let reference = xhat_matrix(s);
        let mut structure = reference.max_abs_diff(&self.xhat_s);
        for i in 0..s {
            for j in 0..s {
                structure = structure.max((self.xhat_s[(i, j)] - self.x_s[(i, j)]).abs());
            }
        }
        IdentityReport {
            integrals,
            orthonormality,
            projection,
            row_sums,
            structure,
        }
    }
}

/// Convenience wrapper for [`TableauSet::new`].
pub fn build_tableau(k: usize, s: usize) -> Result<TableauSet> {
    TableauSet::new(k, s)
}

fn weighted_transpose(p: &Matrix, w: &[f64]) -> Matrix {
    Matrix::from_fn(p.cols(), p.rows(), |i, j| p[(j, i)] * w[j])
}

/// Determinant of `X_s` via its three-term continuant recurrence.
pub fn det_x(s: usize) -> f64 {
    // D_j = x_jj D_{j-1} + ξ_{j-1}² D_{j-2}; only x_11 = ½ is nonzero
    let mut prev = 1.0;
    let mut cur = 0.5;
    for j in 2..=s {
        let v = xi(j - 1).expect("j ≥ 1");
        let next = v * v * prev;
        prev = cur;
        cur = next;
    }
    if s == 0 {
        1.0
    } else {
        cur
    }
}

/// `(det X_s²)^{1/s}`, the constant Crout diagonal of the splitting.
pub fn crout_diagonal(s: usize) -> f64 {
    let d = det_x(s);
    crate::float::powf(d * d, 1.0 / s as f64)
}
