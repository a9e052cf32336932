//! Shifted Legendre polynomials orthonormal on `[0,1]` and Gauss–Legendre
//! rules.
//!
//! `P_j(x) = √(2j+1)·L_j(2x−1)` where `L_j` is the classical Legendre
//! polynomial, so that `∫₀¹ P_i P_j = δ_ij`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::float::{cos, sqrt};
use crate::{Error, Result};

/// Largest Gauss rule order supported by [`gauss_rule`].
pub const MAX_NODES: usize = 64;

/// Gauss–Legendre rule on `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Abscissae, strictly increasing in `(0,1)`.
    pub c: Vec<f64>,
    /// Positive weights summing to one.
    pub b: Vec<f64>,
}

impl QuadratureRule {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.c.len()
    }

    /// Always false for rules built by [`gauss_rule`].
    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// `Σ b_i f(c_i)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.c.iter().zip(&self.b).map(|(&c, &b)| b * f(c)).sum()
    }
}

fn check_unit(x: f64) -> Result<()> {
    // the closed interval, with a little slack for nodes computed as 1 - c
    if (-1e-14..=1.0 + 1e-14).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain("Legendre argument must lie in [0,1]"))
    }
}

/// `ξ_j = 1 / (2√(4j²−1))`, the off-diagonal coefficients of `X_s`.
pub fn xi(j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("xi is defined for j ≥ 1"));
    }
    let j = j as f64;
    Ok(1.0 / (2.0 * sqrt(4.0 * j * j - 1.0)))
}

#[inline]
fn xi_unchecked(j: usize) -> f64 {
    let j = j as f64;
    1.0 / (2.0 * sqrt(4.0 * j * j - 1.0))
}

/// Classical `L_0..=L_n` at `t ∈ [-1,1]` into `out`.
fn classical_upto(n: usize, t: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n == 0 {
        return;
    }
    out[1] = t;
    for j in 1..n {
        let jf = j as f64;
        out[j + 1] = ((2.0 * jf + 1.0) * t * out[j] - jf * out[j - 1]) / (jf + 1.0);
    }
}

/// `P_j(x)` by the three-term recurrence.
pub fn eval_legendre(j: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    let t = 2.0 * x - 1.0;
    let (mut prev, mut cur) = (1.0, t);
    if j == 0 {
        return Ok(1.0);
    }
    for n in 1..j {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(sqrt(2.0 * j as f64 + 1.0) * cur)
}

/// `P_0(x), …, P_{n-1}(x)`.
pub fn eval_legendre_all(n: usize, x: f64) -> Result<Vec<f64>> {
    check_unit(x)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut out = alloc::vec![0.0; n];
    classical_upto(n - 1, 2.0 * x - 1.0, &mut out);
    for (j, v) in out.iter_mut().enumerate() {
        *v *= sqrt(2.0 * j as f64 + 1.0);
    }
    Ok(out)
}

/// `∫₀^c P_j(x) dx`, closed form.
pub fn integrate_legendre(j: usize, c: f64) -> Result<f64> {
    check_unit(c)?;
    if j == 0 {
        return Ok(c);
    }
    let p = eval_legendre_all(j + 2, c)?;
    Ok(xi_unchecked(j + 1) * p[j + 1] - xi_unchecked(j) * p[j - 1])
}

/// `k`-point Gauss–Legendre rule on `[0,1]`, `1 ≤ k ≤ 64`.
///
/// Nodes are Newton-refined roots of `L_k` from Chebyshev-like initial
/// guesses; the rule is symmetrized about `1/2` by construction.
pub fn gauss_rule(k: usize) -> Result<QuadratureRule> {
    if k == 0 || k > MAX_NODES {
        return Err(Error::Config(alloc::format!(
            "Gauss rule order must be in 1..={MAX_NODES}, got {k}"
        )));
    }
    let kf = k as f64;
    let half = k.div_ceil(2);
    let mut c = alloc::vec![0.0; k];
    let mut b = alloc::vec![0.0; k];
    for i in 0..half {
        // roots of L_k in (-1,1), largest first
        let mut t = cos(PI * (i as f64 + 0.75) / (kf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = classical_with_derivative(k, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() <= 1e-16 * t.abs().max(1.0) {
                let (_, d) = classical_with_derivative(k, t);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        // t > 0 maps to the upper half of [0,1]
        c[k - 1 - i] = 0.5 * (1.0 + t);
        c[i] = 0.5 * (1.0 - t);
        b[k - 1 - i] = 0.5 * w;
        b[i] = 0.5 * w;
    }
    if k % 2 == 1 {
        c[k / 2] = 0.5;
    }
    Ok(QuadratureRule { c, b })
}

fn classical_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, t);
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * t * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    let d = nf * (t * cur - prev) / (t * t - 1.0);
    (cur, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_values() {
        assert_eq!(eval_legendre(0, 0.7).unwrap(), 1.0);
        assert!((eval_legendre(1, 1.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        // Gram–Schmidt on {1, x, x²} with exact integrals gives
        // P₂(x) = √5 (6x² − 6x + 1), so P₂(1/2) = −√5/2
        assert!((eval_legendre(2, 0.5).unwrap() + 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(eval_legendre(3, 1.5).is_err());
        assert!(eval_legendre(3, -0.1).is_err());
    }

    #[test]
    fn xi_values() {
        assert!((xi(1).unwrap() - 0.288675134594813).abs() < 1e-15);
        assert!((xi(2).unwrap() - 0.129099444873581).abs() < 1e-15);
        assert!((xi(3).unwrap() - 0.0845154254728517).abs() < 1e-15);
        assert!(xi(0).is_err());
    }

    #[test]
    fn integrals() {
        assert_eq!(integrate_legendre(0, 0.37).unwrap(), 0.37);
        assert!(integrate_legendre(1, 1.0).unwrap().abs() < 1e-15);
        for j in 1..20 {
            assert!(integrate_legendre(j, 1.0).unwrap().abs() < 1e-13, "j={j}");
        }
    }

    #[test]
    fn integral_against_composite_gauss() {
        // composite 10-point Gauss over 50 panels of [0, 0.3]
        let g = gauss_rule(10).unwrap();
        let panels = 50;
        let width = 0.3 / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = p as f64 * width;
            acc += width * g.integrate(|u| eval_legendre(2, a + width * u).unwrap());
        }
        assert!((integrate_legendre(2, 0.3).unwrap() - acc).abs() < 1e-12);
    }

    #[test]
    fn small_rules() {
        let g1 = gauss_rule(1).unwrap();
        assert_eq!((g1.c[0], g1.b[0]), (0.5, 1.0));
        let g2 = gauss_rule(2).unwrap();
        let r3 = 3f64.sqrt();
        assert!((g2.c[0] - (3.0 - r3) / 6.0).abs() < 1e-15);
        assert!((g2.c[1] - (3.0 + r3) / 6.0).abs() < 1e-15);
        assert!((g2.b[0] - 0.5).abs() < 1e-15 && (g2.b[1] - 0.5).abs() < 1e-15);
        let g4 = gauss_rule(4).unwrap();
        assert!((g4.integrate(|x| x.powi(7)) - 0.125).abs() < 1e-14);
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(65).is_err());
    }

    #[test]
    fn rule_invariants() {
        for k in 1..=MAX_NODES {
            let g = gauss_rule(k).unwrap();
            assert!(g.c.windows(2).all(|w| w[0] < w[1]), "k={k}");
            assert!(g.c[0] > 0.0 && g.c[k - 1] < 1.0);
            assert!(g.b.iter().all(|&w| w > 0.0));
            assert!((g.b.iter().sum::<f64>() - 1.0).abs() < 1e-14, "k={k}");
            for i in 0..k {
                assert!((g.c[i] + g.c[k - 1 - i] - 1.0).abs() < 1e-14);
                assert_eq!(g.b[i], g.b[k - 1 - i]);
            }
            for d in 0..2 * k {
                let exact = 1.0 / (d as f64 + 1.0);
                assert!(
                    (g.integrate(|x| x.powi(d as i32)) - exact).abs() < 1e-13,
                    "k={k} d={d}"
                );
            }
        }
    }

    #[test]
    fn orthonormality() {
        for r in 1..=10 {
            let g = gauss_rule(r + 1).unwrap();
            for i in 0..r {
                for j in 0..r {
                    let gij = g
                        .integrate(|x| eval_legendre(i, x).unwrap() * eval_legendre(j, x).unwrap());
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gij - want).abs() < 1e-12);
                }
            }
        }
    }
}
