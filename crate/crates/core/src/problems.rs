//! Separable Hamiltonian test problems `H(q, p) = ½pᵀp + U(q)`.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::float::{cos, max_abs, powi, sin};
use crate::{Error, Matrix, Result};

/// A potential `U` with analytic gradient and Hessian.
pub trait SeparableSystem: Send + Sync {
    /// Length of `q`.
    fn dim(&self) -> usize;

    /// `U(q)`.
    fn potential(&self, q: &[f64]) -> f64;

    /// Writes `∇U(q)` into `out`.
    fn grad(&self, q: &[f64], out: &mut [f64]);

    /// `∇²U(q)`.
    fn hessian(&self, q: &[f64]) -> Matrix;

    /// `H(q, p) = ½pᵀp + U(q)`.
    fn hamiltonian(&self, q: &[f64], p: &[f64]) -> f64 {
        0.5 * p.iter().map(|x| x * x).sum::<f64>() + self.potential(q)
    }
}

/// Fermi–Pasta–Ulam chain parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpuParams {
    /// Number of stiff springs; the state has `2·m_pairs` positions.
    pub m_pairs: usize,
    /// Stiff spring frequency.
    pub omega: f64,
    /// Exponent of the soft coupling springs, 2 or 4.
    pub coupling_exponent: u32,
    /// Factor multiplying `ω²` in front of the stiff springs.
    pub quadratic_prefactor: f64,
}

impl Default for FpuParams {
    fn default() -> Self {
        Self {
            m_pairs: 3,
            omega: 100.0,
            coupling_exponent: 4,
            quadratic_prefactor: 0.25,
        }
    }
}

impl FpuParams {
    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.m_pairs == 0 {
            return Err(Error::Config("FPU needs at least one pair".to_string()));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Config("FPU omega must be positive".to_string()));
        }
        if !matches!(self.coupling_exponent, 2 | 4) {
            return Err(Error::Config(
                "FPU coupling exponent must be 2 or 4".to_string(),
            ));
        }
        if !(self.quadratic_prefactor > 0.0 && self.quadratic_prefactor.is_finite()) {
            return Err(Error::Config(
                "FPU quadratic prefactor must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// The Fermi–Pasta–Ulam chain
///
/// `U = a·ω²·Σ_{i=1}^{m}(q_{2i} − q_{2i−1})² + Σ_{i=0}^{m}(q_{2i+1} − q_{2i})^E`
///
/// with `q_0 = q_{2m+1} = 0` and `a` the quadratic prefactor.
#[derive(Debug, Clone)]
pub struct Fpu {
    params: FpuParams,
}

impl Fpu {
    /// Checked constructor.
    pub fn new(params: FpuParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    /// The parameters.
    pub fn params(&self) -> &FpuParams {
        &self.params
    }

    fn stiffness(&self) -> f64 {
        self.params.quadratic_prefactor * self.params.omega * self.params.omega
    }

    // soft springs as (left index, right index, elongation), walls are None
    fn soft<'a>(
        &self,
        q: &'a [f64],
    ) -> impl Iterator<Item = (Option<usize>, Option<usize>, f64)> + 'a {
        let m = self.params.m_pairs;
        (0..=m).map(move |i| {
            let lo = if i == 0 { None } else { Some(2 * i - 1) };
            let hi = if i == m { None } else { Some(2 * i) };
            let d = hi.map_or(0.0, |j| q[j]) - lo.map_or(0.0, |j| q[j]);
            (lo, hi, d)
        })
    }
}

/// FPU system; panics on invalid parameters, see [`Fpu::new`].
pub fn fpu(params: FpuParams) -> Fpu {
    Fpu::new(params).expect("invalid FPU parameters")
}

impl SeparableSystem for Fpu {
    fn dim(&self) -> usize {
        2 * self.params.m_pairs
    }

    fn potential(&self, q: &[f64]) -> f64 {
        let e = self.params.coupling_exponent as i32;
        let stiff: f64 = q
            .chunks_exact(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum();
        let soft: f64 = self.soft(q).map(|(_, _, d)| powi(d, e)).sum();
        self.stiffness() * stiff + soft
    }

    fn grad(&self, q: &[f64], out: &mut [f64]) {
        let e = self.params.coupling_exponent as i32;
        let k = 2.0 * self.stiffness();
        for (w, g) in q.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
            let f = k * (w[1] - w[0]);
            g[0] = -f;
            g[1] = f;
        }
        for (lo, hi, d) in self.soft(q) {
            let f = e as f64 * powi(d, e - 1);
            if let Some(j) = hi {
                out[j] += f;
            }
            if let Some(j) = lo {
                out[j] -= f;
            }
        }
    }

    fn hessian(&self, q: &[f64]) -> Matrix {
        let e = self.params.coupling_exponent as i32;
        let k = 2.0 * self.stiffness();
        let mut h = Matrix::zeros(self.dim(), self.dim());
        for i in 0..self.params.m_pairs {
            let (a, b) = (2 * i, 2 * i + 1);
            h[(a, a)] += k;
            h[(b, b)] += k;
            h[(a, b)] -= k;
            h[(b, a)] -= k;
        }
        for (lo, hi, d) in self.soft(q) {
            let c = (e * (e - 1)) as f64 * powi(d, e - 2);
            if let Some(j) = hi {
                h[(j, j)] += c;
            }
            if let Some(j) = lo {
                h[(j, j)] += c;
            }
            if let (Some(a), Some(b)) = (lo, hi) {
                h[(a, b)] -= c;
                h[(b, a)] -= c;
            }
        }
        h
    }
}

/// `U(q) = ω²qᵀq/2`.
#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    omega: f64,
    m: usize,
}

impl Harmonic {
    /// Frequency.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Exact flow at time `t`.
    pub fn exact(&self, q0: &[f64], p0: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let w = self.omega;
        let (c, s) = (cos(w * t), sin(w * t));
        let q = q0.iter().zip(p0).map(|(q, p)| q * c + p / w * s).collect();
        let p = q0.iter().zip(p0).map(|(q, p)| -q * w * s + p * c).collect();
        (q, p)
    }
}

/// Harmonic oscillator of frequency `omega` in `m` dimensions.
pub fn harmonic(omega: f64, m: usize) -> Harmonic {
    Harmonic { omega, m }
}

impl SeparableSystem for Harmonic {
    fn dim(&self) -> usize {
        self.m
    }

    fn potential(&self, q: &[f64]) -> f64 {
        0.5 * self.omega * self.omega * q.iter().map(|x| x * x).sum::<f64>()
    }

    fn grad(&self, q: &[f64], out: &mut [f64]) {
        let w2 = self.omega * self.omega;
        for (g, x) in out.iter_mut().zip(q) {
            *g = w2 * x;
        }
    }

    fn hessian(&self, _q: &[f64]) -> Matrix {
        Matrix::identity(self.m).scale(self.omega * self.omega)
    }
}

/// `U(q) = −cos q`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pendulum;

/// The mathematical pendulum.
pub fn pendulum() -> Pendulum {
    Pendulum
}

impl SeparableSystem for Pendulum {
    fn dim(&self) -> usize {
        1
    }

    fn potential(&self, q: &[f64]) -> f64 {
        -cos(q[0])
    }

    fn grad(&self, q: &[f64], out: &mut [f64]) {
        out[0] = sin(q[0]);
    }

    fn hessian(&self, q: &[f64]) -> Matrix {
        Matrix::from_rows(&[[cos(q[0])]])
    }
}

/// `U ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct Free(pub usize);

impl SeparableSystem for Free {
    fn dim(&self) -> usize {
        self.0
    }

    fn potential(&self, _q: &[f64]) -> f64 {
        0.0
    }

    fn grad(&self, _q: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hessian(&self, _q: &[f64]) -> Matrix {
        Matrix::zeros(self.0, self.0)
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 3] = ["fpu-paper", "harmonic", "pendulum"];

/// A named system with its initial state.
pub struct Preset {
    /// The system.
    pub system: Box<dyn SeparableSystem>,
    /// Initial positions.
    pub q0: Vec<f64>,
    /// Initial momenta.
    pub p0: Vec<f64>,
}

impl core::fmt::Debug for Preset {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Preset")
            .field("dim", &self.system.dim())
            .field("q0", &self.q0)
            .field("p0", &self.p0)
            .finish()
    }
}

/// Looks up a preset: `fpu-paper` (default FPU, `q = (0..5)/10`, `p = 0`),
/// `harmonic` (`ω = 1`, `q = 1`, `p = 0`) or `pendulum` (`q = 1`, `p = 0`).
pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "fpu-paper" => fpu_preset(FpuParams::default()),
        "harmonic" => Ok(Preset {
            system: Box::new(harmonic(1.0, 1)),
            q0: vec![1.0],
            p0: vec![0.0],
        }),
        "pendulum" => Ok(Preset {
            system: Box::new(pendulum()),
            q0: vec![1.0],
            p0: vec![0.0],
        }),
        _ => Err(Error::Config(alloc::format!(
            "unknown problem preset '{name}'"
        ))),
    }
}

/// FPU with the given parameters and initial state `q_j = j/10`, `p = 0`.
pub fn fpu_preset(params: FpuParams) -> Result<Preset> {
    let sys = Fpu::new(params)?;
    let n = sys.dim();
    Ok(Preset {
        system: Box::new(sys),
        q0: (0..n).map(|j| j as f64 / 10.0).collect(),
        p0: vec![0.0; n],
    })
}

/// Finite-difference check of [`SeparableSystem::grad`] and
/// [`SeparableSystem::hessian`] at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    /// `‖∇U − δU‖∞ / max(1, ‖∇U‖∞)` with central differences of `U`.
    pub grad_rel: f64,
    /// `‖∇²U − δ∇U‖∞ / max(1, ‖∇²U‖∞)` with central differences of `∇U`.
    pub hess_rel: f64,
    /// `max |H_ij − H_ji|`.
    pub hess_asym: f64,
}

/// Central-difference audit with step `step`.
pub fn finite_difference_audit(sys: &dyn SeparableSystem, q: &[f64], step: f64) -> AuditReport {
    let m = sys.dim();
    let mut g = vec![0.0; m];
    sys.grad(q, &mut g);
    let hess = sys.hessian(q);
    let mut x = q.to_vec();
    let (mut gp, mut gm) = (vec![0.0; m], vec![0.0; m]);
    let (mut gerr, mut herr) = (0.0_f64, 0.0_f64);
    for j in 0..m {
        x[j] = q[j] + step;
        let up = sys.potential(&x);
        sys.grad(&x, &mut gp);
        x[j] = q[j] - step;
        let um = sys.potential(&x);
        sys.grad(&x, &mut gm);
        x[j] = q[j];
        gerr = gerr.max((g[j] - (up - um) / (2.0 * step)).abs());
        for i in 0..m {
            herr = herr.max((hess[(i, j)] - (gp[i] - gm[i]) / (2.0 * step)).abs());
        }
    }
    let mut asym = 0.0_f64;
    for i in 0..m {
        for j in 0..i {
            asym = asym.max((hess[(i, j)] - hess[(j, i)]).abs());
        }
    }
    AuditReport {
        grad_rel: gerr / max_abs(&g).max(1.0),
        hess_rel: herr / hess.max_abs().max(1.0),
        hess_asym: asym,
    }
}
