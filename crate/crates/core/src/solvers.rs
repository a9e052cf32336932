//! Nonlinear stage solvers for one HBVM(k,s) step.
//!
//! The unknown is `γ ∈ R^{s·m}`, the Legendre coefficients of the stage
//! gradients, defined by
//!
//! `F(γ) = γ − (P_sᵀΩ ⊗ I)∇U(Q(γ)) = 0`,
//! `Q(γ) = e⊗q₀ + h·c⊗p₀ − h²(C ⊗ I)γ`, `C = P_{s+1}X̂_sX_s`.
//!
//! Every solver counts an outer iteration each time it evaluates `F`, so a
//! step that is already solved by its starting guess costs one iteration.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::float::max_abs;
use crate::linalg::{block_lower_triangular_solve, kron_apply, Identity, LuFactors};
use crate::problems::SeparableSystem;
use crate::splitting::{builtin_scheme, SplittingScheme};
use crate::tableau::TableauSet;
use crate::{Error, Matrix, Result};

/// Consecutive residual increases that count as divergence.
pub const GROWTH_LIMIT: usize = 10;

/// Which iteration solves the stage equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverMode {
    /// `γ ← (P_sᵀΩ ⊗ I)∇U(Q(γ))`.
    FixedPoint,
    /// Simplified Newton with the full `sm×sm` matrix factored once per step.
    NewtonDirect,
    /// Simplified Newton with `ν` triangular-splitting sweeps per iteration.
    NewtonSplitting,
}

impl SolverMode {
    /// Name used in reports and CSV files.
    pub fn name(self) -> &'static str {
        match self {
            SolverMode::FixedPoint => "fixed-point",
            SolverMode::NewtonDirect => "newton-direct",
            SolverMode::NewtonSplitting => "splitting",
        }
    }
}

impl core::fmt::Display for SolverMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-point" | "fixed_point" | "fixedpoint" => Ok(SolverMode::FixedPoint),
            "newton-direct" | "newton_direct" | "newton" => Ok(SolverMode::NewtonDirect),
            "splitting" | "newton-splitting" | "newton_splitting" => {
                Ok(SolverMode::NewtonSplitting)
            }
            _ => Err(Error::Config(alloc::format!("unknown solver '{s}'"))),
        }
    }
}

/// Solver options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Iteration kind.
    pub mode: SolverMode,
    /// Stop when `‖F(γ)‖∞ ≤ tol`.
    pub tol: f64,
    /// Maximum number of outer iterations.
    pub max_outer: usize,
    /// Inner sweeps per outer iteration (splitting only).
    pub nu: usize,
    /// `‖γ‖∞` above this is divergence.
    pub divergence_bound: f64,
    /// Start each step from the previous step's `γ` instead of zero.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::NewtonSplitting,
            tol: 1e-12,
            max_outer: 100,
            nu: 2,
            divergence_bound: 1e8,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    /// Default options for `mode`.
    pub fn with_mode(mode: SolverMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    /// Checks the option ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(String::from(m)));
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1");
        }
        if self.nu == 0 {
            return bad("nu must be at least 1");
        }
        if !(self.divergence_bound > 0.0) {
            return bad("divergence bound must be positive");
        }
        Ok(())
    }
}

/// Work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostCounters {
    /// Single-point `∇U` evaluations.
    pub grad_evals: usize,
    /// `∇²U` evaluations.
    pub hess_evals: usize,
    /// LU factorizations (of size `factor_dim`).
    pub factorizations: usize,
    /// Order of the factored matrices: `m` for splitting, `s·m` for direct.
    pub factor_dim: usize,
    /// Triangular back-solves with a factored matrix.
    pub back_solves: usize,
}

impl CostCounters {
    /// Adds `other` into `self`.
    pub fn accumulate(&mut self, other: &CostCounters) {
        self.grad_evals += other.grad_evals;
        self.hess_evals += other.hess_evals;
        self.factorizations += other.factorizations;
        self.factor_dim = self.factor_dim.max(other.factor_dim);
        self.back_solves += other.back_solves;
    }
}

/// Outcome of one stage solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    /// Evaluations of `F`.
    pub outer_iters: usize,
    /// Inner sweeps (splitting only).
    pub inner_iters: usize,
    /// `‖F‖∞ ≤ tol` was reached.
    pub converged: bool,
    /// The iterates blew up.
    pub diverged: bool,
    /// Last `‖F‖∞`.
    pub final_residual: f64,
    /// `‖F(γ^j)‖∞` for every evaluation.
    pub residual_history: Vec<f64>,
    /// Work done.
    pub costs: CostCounters,
}

/// One completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// New positions.
    pub q1: Vec<f64>,
    /// New momenta.
    pub p1: Vec<f64>,
    /// Final `γ`.
    pub gamma: Vec<f64>,
    /// Evaluations of `F`.
    pub outer_iters: usize,
    /// Inner sweeps.
    pub inner_iters: usize,
    /// `‖F‖∞ ≤ tol` was reached.
    pub converged: bool,
    /// The iterates blew up.
    pub diverged: bool,
    /// Last `‖F‖∞`.
    pub final_residual: f64,
    /// Work done.
    pub costs: CostCounters,
}

/// Step-independent data of an HBVM(k,s) method.
#[derive(Debug, Clone)]
pub struct Method {
    tableau: TableauSet,
    scheme: Option<SplittingScheme>,
    c_mat: Matrix,
    proj: Matrix,
    x2: Matrix,
    phat_inv: Option<Matrix>,
    l_minus_a: Option<Matrix>,
}

impl Method {
    /// HBVM(k,s) with the builtin splitting scheme when one exists
    /// (`s = 1` uses the trivial one-point scheme).
    pub fn new(k: usize, s: usize) -> Result<Self> {
        let tableau = TableauSet::new(k, s)?;
        let scheme = match s {
            1 => Some(SplittingScheme::new(&[1.0])?),
            2..=6 => Some(builtin_scheme(s)?),
            _ => None,
        };
        Self::assemble(tableau, scheme)
    }

    /// HBVM(k,s) with an explicit splitting scheme.
    pub fn with_scheme(k: usize, scheme: SplittingScheme) -> Result<Self> {
        let tableau = TableauSet::new(k, scheme.s())?;
        Self::assemble(tableau, Some(scheme))
    }

    fn assemble(tableau: TableauSet, scheme: Option<SplittingScheme>) -> Result<Self> {
        let c_mat = tableau
            .p_s1()
            .matmul(tableau.xhat_s())?
            .matmul(tableau.x_s())?;
        let proj = tableau.projection();
        let x2 = tableau.x_s_squared();
        let (phat_inv, l_minus_a) = match &scheme {
            Some(sc) => {
                let inv = sc.phat_factors().solve_matrix(&Matrix::identity(sc.s()))?;
                (Some(inv), Some(sc.lower().sub(sc.a())))
            }
            None => (None, None),
        };
        Ok(Self {
            tableau,
            scheme,
            c_mat,
            proj,
            x2,
            phat_inv,
            l_minus_a,
        })
    }

    /// Coefficient matrices.
    pub fn tableau(&self) -> &TableauSet {
        &self.tableau
    }

    /// Splitting scheme, if any.
    pub fn scheme(&self) -> Option<&SplittingScheme> {
        self.scheme.as_ref()
    }

    /// `C = P_{s+1}X̂_sX_s`.
    pub fn c_matrix(&self) -> &Matrix {
        &self.c_mat
    }

    /// `k`.
    pub fn k(&self) -> usize {
        self.tableau.k()
    }

    /// `s`.
    pub fn s(&self) -> usize {
        self.tableau.s()
    }
}

/// The stage equation of one step.
#[derive(Clone, Copy)]
pub struct StageProblem<'a> {
    /// Method data.
    pub method: &'a Method,
    /// The potential.
    pub system: &'a dyn SeparableSystem,
    /// Positions at the start of the step.
    pub q0: &'a [f64],
    /// Momenta at the start of the step.
    pub p0: &'a [f64],
    /// Stepsize; negative values integrate backwards.
    pub h: f64,
}

impl core::fmt::Debug for StageProblem<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("StageProblem")
            .field("k", &self.method.k())
            .field("s", &self.method.s())
            .field("q0", &self.q0)
            .field("p0", &self.p0)
            .field("h", &self.h)
            .finish()
    }
}

impl<'a> StageProblem<'a> {
    /// Checked constructor.
    pub fn new(
        method: &'a Method,
        system: &'a dyn SeparableSystem,
        q0: &'a [f64],
        p0: &'a [f64],
        h: f64,
    ) -> Result<Self> {
        let m = system.dim();
        for (what, v) in [("q0", q0), ("p0", p0)] {
            if v.len() != m {
                return Err(Error::Dimension {
                    what,
                    expected: m,
                    found: v.len(),
                });
            }
        }
        if !h.is_finite() || h == 0.0 {
            return Err(Error::Config(String::from(
                "stepsize must be finite and nonzero",
            )));
        }
        Ok(Self {
            method,
            system,
            q0,
            p0,
            h,
        })
    }

    /// `m`.
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    fn check_gamma(&self, gamma: &[f64]) -> Result<()> {
        let n = self.method.s() * self.dim();
        if gamma.len() != n {
            return Err(Error::Dimension {
                what: "gamma",
                expected: n,
                found: gamma.len(),
            });
        }
        Ok(())
    }
}

/// `Q = e⊗q₀ + h·c⊗p₀ − h²(C⊗I)γ`.
pub fn reconstruct_stages(sp: &StageProblem<'_>, gamma: &[f64]) -> Result<Vec<f64>> {
    sp.check_gamma(gamma)?;
    let m = sp.dim();
    let h = sp.h;
    let mut q = kron_apply(sp.method.c_matrix(), &Identity(m), gamma)?;
    for (ci, qi) in sp.method.tableau.c().iter().zip(q.chunks_exact_mut(m)) {
        for ((x, a), b) in qi.iter_mut().zip(sp.q0).zip(sp.p0) {
            *x = a + h * ci * b - h * h * *x;
        }
    }
    Ok(q)
}

/// Residual `F(γ)` and the stage gradients `∇U(Q)`.
pub fn eval_f(sp: &StageProblem<'_>, gamma: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut costs = CostCounters::default();
    eval_f_counted(sp, gamma, &mut costs)
}

fn eval_f_counted(
    sp: &StageProblem<'_>,
    gamma: &[f64],
    costs: &mut CostCounters,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = sp.dim();
    let q = reconstruct_stages(sp, gamma)?;
    let mut grads = vec![0.0; q.len()];
    for (qi, gi) in q.chunks_exact(m).zip(grads.chunks_exact_mut(m)) {
        sp.system.grad(qi, gi);
    }
    costs.grad_evals += sp.method.k();
    if !grads.iter().all(|x| x.is_finite()) {
        return Err(Error::Evaluation);
    }
    let proj = kron_apply(&sp.method.proj, &Identity(m), &grads)?;
    let r = gamma.iter().zip(&proj).map(|(g, p)| g - p).collect();
    Ok((r, grads))
}

enum Correction<'a> {
    FixedPoint,
    Direct(LuFactors),
    Splitting(Splitter<'a>),
}

// inner iteration data for one step
struct Splitter<'a> {
    scheme: &'a SplittingScheme,
    phat_inv: &'a Matrix,
    l_minus_a: &'a Matrix,
    hess: Matrix,
    diag: LuFactors,
    h2: f64,
}

impl Splitter<'_> {
    // ν sweeps from Δ̂⁰ = 0 for the transformed right-hand side η
    fn sweeps(&self, eta: &[f64], nu: usize, costs: &mut CostCounters) -> Result<Vec<f64>> {
        let s = self.scheme.s();
        let mut dhat = block_lower_triangular_solve(
            self.scheme.lower(),
            &self.hess,
            &self.diag,
            self.h2,
            eta,
        )?;
        costs.back_solves += s;
        for _ in 1..nu {
            let mut rhs = kron_apply(self.l_minus_a, &self.hess, &dhat)?;
            for (r, e) in rhs.iter_mut().zip(eta) {
                *r = self.h2 * *r + e;
            }
            dhat = block_lower_triangular_solve(
                self.scheme.lower(),
                &self.hess,
                &self.diag,
                self.h2,
                &rhs,
            )?;
            costs.back_solves += s;
        }
        Ok(dhat)
    }
}

fn prepare<'a>(
    sp: &StageProblem<'a>,
    cfg: &SolverConfig,
    costs: &mut CostCounters,
) -> Result<Correction<'a>> {
    let m = sp.dim();
    let s = sp.method.s();
    let h2 = sp.h * sp.h;
    match cfg.mode {
        SolverMode::FixedPoint => Ok(Correction::FixedPoint),
        SolverMode::NewtonDirect => {
            let hess = sp.system.hessian(sp.q0);
            costs.hess_evals += 1;
            let x2 = &sp.method.x2;
            let jac = Matrix::from_fn(s * m, s * m, |r, c| {
                let v = h2 * x2[(r / m, c / m)] * hess[(r % m, c % m)];
                if r == c {
                    1.0 + v
                } else {
                    v
                }
            });
            let lu = LuFactors::factor(&jac)?;
            costs.factorizations += 1;
            costs.factor_dim = s * m;
            Ok(Correction::Direct(lu))
        }
        SolverMode::NewtonSplitting => {
            let method = sp.method;
            let (Some(scheme), Some(phat_inv), Some(l_minus_a)) = (
                method.scheme.as_ref(),
                method.phat_inv.as_ref(),
                method.l_minus_a.as_ref(),
            ) else {
                return Err(Error::Config(alloc::format!(
                    "no splitting scheme for s = {s}"
                )));
            };
            let hess = sp.system.hessian(sp.q0);
            costs.hess_evals += 1;
            let d = Matrix::identity(m).add(&hess.scale(h2 * scheme.d()));
            let diag = LuFactors::factor(&d)?;
            costs.factorizations += 1;
            costs.factor_dim = m;
            Ok(Correction::Splitting(Splitter {
                scheme,
                phat_inv,
                l_minus_a,
                hess,
                diag,
                h2,
            }))
        }
    }
}

// Δ for the residual r; returns the number of inner sweeps
fn correction(
    corr: &Correction<'_>,
    r: &[f64],
    m: usize,
    nu: usize,
    costs: &mut CostCounters,
) -> Result<(Vec<f64>, usize)> {
    match corr {
        Correction::FixedPoint => Ok((r.iter().map(|x| -x).collect(), 0)),
        Correction::Direct(lu) => {
            let mut d: Vec<f64> = r.iter().map(|x| -x).collect();
            lu.solve_in_place(&mut d)?;
            costs.back_solves += 1;
            Ok((d, 0))
        }
        Correction::Splitting(sp) => {
            let mut eta = kron_apply(sp.scheme.phat(), &Identity(m), r)?;
            eta.iter_mut().for_each(|x| *x = -*x);
            let dhat = sp.sweeps(&eta, nu, costs)?;
            Ok((kron_apply(sp.phat_inv, &Identity(m), &dhat)?, nu))
        }
    }
}

/// Runs the iteration selected by `cfg.mode` from `gamma0`.
///
/// Divergence (`‖γ‖∞ > cfg.divergence_bound`, non-finite values, or
/// [`GROWTH_LIMIT`] consecutive residual increases) and exhausting
/// `cfg.max_outer` are reported in the statistics. Dimension errors and
/// singular iteration matrices are returned as errors.
pub fn solve_from(
    sp: &StageProblem<'_>,
    cfg: &SolverConfig,
    gamma0: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
    cfg.validate()?;
    sp.check_gamma(gamma0)?;
    let m = sp.dim();
    let mut costs = CostCounters::default();
    let corr = prepare(sp, cfg, &mut costs)?;
    let mut gamma = gamma0.to_vec();
    let mut history = Vec::new();
    let mut inner = 0;
    let mut growth = 0;
    let mut grads = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    while history.len() < cfg.max_outer {
        let (r, g) = match eval_f_counted(sp, &gamma, &mut costs) {
            Ok(v) => v,
            Err(Error::Evaluation) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let norm = max_abs(&r);
        if !norm.is_finite() {
            diverged = true;
            break;
        }
        if let Some(&prev) = history.last() {
            growth = if norm > prev { growth + 1 } else { 0 };
        }
        history.push(norm);
        grads = g;
        if norm <= cfg.tol {
            converged = true;
            break;
        }
        if growth >= GROWTH_LIMIT {
            diverged = true;
            break;
        }
        let (delta, sweeps) = correction(&corr, &r, m, cfg.nu, &mut costs)?;
        inner += sweeps;
        for (g, d) in gamma.iter_mut().zip(&delta) {
            *g += d;
        }
        let size = max_abs(&gamma);
        if !(size <= cfg.divergence_bound) {
            diverged = true;
            break;
        }
    }
    let stats = SolveStats {
        outer_iters: history.len(),
        inner_iters: inner,
        converged,
        diverged,
        final_residual: history.last().copied().unwrap_or(f64::INFINITY),
        residual_history: history,
        costs,
    };
    Ok((gamma, grads, stats))
}

fn solve_mode(
    sp: &StageProblem<'_>,
    cfg: &SolverConfig,
    mode: SolverMode,
) -> Result<(Vec<f64>, SolveStats)> {
    if cfg.mode != mode {
        return Err(Error::Config(alloc::format!(
            "solver configured for {} but {} requested",
            cfg.mode,
            mode
        )));
    }
    let zero = vec![0.0; sp.method.s() * sp.dim()];
    let (gamma, _, stats) = solve_from(sp, cfg, &zero)?;
    Ok((gamma, stats))
}

/// Fixed-point iteration from `γ = 0`.
pub fn fixed_point_solve(
    sp: &StageProblem<'_>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    solve_mode(sp, cfg, SolverMode::FixedPoint)
}

/// Simplified Newton with `I + h²X_s² ⊗ ∇²U(q₀)` factored once, from `γ = 0`.
pub fn newton_direct_solve(
    sp: &StageProblem<'_>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    solve_mode(sp, cfg, SolverMode::NewtonDirect)
}

/// Simplified Newton whose linear systems are approximated by `cfg.nu`
/// triangular-splitting sweeps, from `γ = 0`. Only `I + h²d_s∇²U(q₀)` is
/// factored.
pub fn splitting_solve(
    sp: &StageProblem<'_>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    solve_mode(sp, cfg, SolverMode::NewtonSplitting)
}

/// Stage momenta `P = e⊗p₀ − h(I_s ⊗ I)γ`.
pub fn stage_momenta(sp: &StageProblem<'_>, gamma: &[f64]) -> Result<Vec<f64>> {
    sp.check_gamma(gamma)?;
    let m = sp.dim();
    let mut p = kron_apply(sp.method.tableau.i_s(), &Identity(m), gamma)?;
    for pi in p.chunks_exact_mut(m) {
        for (x, a) in pi.iter_mut().zip(sp.p0) {
            *x = a - sp.h * *x;
        }
    }
    Ok(p)
}

/// Stage momenta `P = e⊗p₀ − h(I_sP_sᵀΩ ⊗ I)∇U(Q)` from stage gradients.
pub fn stage_momenta_from_gradients(sp: &StageProblem<'_>, grads: &[f64]) -> Result<Vec<f64>> {
    let m = sp.dim();
    let mut p = kron_apply(sp.method.tableau.butcher_a(), &Identity(m), grads)?;
    for pi in p.chunks_exact_mut(m) {
        for (x, a) in pi.iter_mut().zip(sp.p0) {
            *x = a - sp.h * *x;
        }
    }
    Ok(p)
}

/// `q₁ = q₀ + h(bᵀ⊗I)P`, `p₁ = p₀ − h(bᵀ⊗I)∇U(Q)`, with `P` in its `γ` form.
pub fn finalize_step(
    sp: &StageProblem<'_>,
    gamma: &[f64],
    grads: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = sp.dim();
    let k = sp.method.k();
    if grads.len() != k * m {
        return Err(Error::Dimension {
            what: "stage gradients",
            expected: k * m,
            found: grads.len(),
        });
    }
    let p = stage_momenta(sp, gamma)?;
    let b = sp.method.tableau.b();
    let mut q1 = sp.q0.to_vec();
    let mut p1 = sp.p0.to_vec();
    for ((bi, pi), gi) in b.iter().zip(p.chunks_exact(m)).zip(grads.chunks_exact(m)) {
        for j in 0..m {
            q1[j] += sp.h * bi * pi[j];
            p1[j] -= sp.h * bi * gi[j];
        }
    }
    Ok((q1, p1))
}

/// Solves the stage equation from `guess` (zero if `None`) and advances the
/// state. On failure to converge `q1`, `p1` are computed from the last
/// iterate.
pub fn solve_step(
    sp: &StageProblem<'_>,
    cfg: &SolverConfig,
    guess: Option<&[f64]>,
) -> Result<StepResult> {
    let zero;
    let gamma0 = match guess {
        Some(g) => g,
        None => {
            zero = vec![0.0; sp.method.s() * sp.dim()];
            &zero
        }
    };
    let (gamma, grads, stats) = solve_from(sp, cfg, gamma0)?;
    let (q1, p1) = if stats.diverged || grads.is_empty() {
        (vec![f64::NAN; sp.dim()], vec![f64::NAN; sp.dim()])
    } else {
        finalize_step(sp, &gamma, &grads)?
    };
    Ok(StepResult {
        q1,
        p1,
        gamma,
        outer_iters: stats.outer_iters,
        inner_iters: stats.inner_iters,
        converged: stats.converged,
        diverged: stats.diverged,
        final_residual: stats.final_residual,
        costs: stats.costs,
    })
}

/// Errors `‖Δ̂^ℓ − Δ̂*‖∞`, `ℓ = 0..=sweeps`, of the inner splitting iteration
/// for the transformed right-hand side `eta`, where `Δ̂*` solves
/// `[I + h²A_s ⊗ ∇²U(q₀)]Δ̂ = η` densely.
pub fn inner_iteration_errors(
    sp: &StageProblem<'_>,
    eta: &[f64],
    sweeps: usize,
) -> Result<Vec<f64>> {
    sp.check_gamma(eta)?;
    let cfg = SolverConfig::with_mode(SolverMode::NewtonSplitting);
    let mut costs = CostCounters::default();
    let Correction::Splitting(split) = prepare(sp, &cfg, &mut costs)? else {
        unreachable!("splitting mode prepares a splitter")
    };
    let m = sp.dim();
    let s = sp.method.s();
    let a = split.scheme.a();
    let dense = Matrix::from_fn(s * m, s * m, |r, c| {
        let v = split.h2 * a[(r / m, c / m)] * split.hess[(r % m, c % m)];
        if r == c {
            1.0 + v
        } else {
            v
        }
    });
    let exact = LuFactors::factor(&dense)?.solve(eta)?;
    let err = |d: &[f64]| {
        d.iter()
            .zip(&exact)
            .fold(0.0_f64, |e, (x, y)| e.max((x - y).abs()))
    };
    let mut out = vec![max_abs(&exact)];
    for l in 1..=sweeps {
        out.push(err(&split.sweeps(eta, l, &mut costs)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{fpu, harmonic, pendulum, FpuParams, Free};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fpu_q0() -> Vec<f64> {
        (0..6).map(|j| j as f64 / 10.0).collect()
    }

    fn cfg(mode: SolverMode) -> SolverConfig {
        SolverConfig::with_mode(mode)
    }

    const MODES: [SolverMode; 3] = [
        SolverMode::FixedPoint,
        SolverMode::NewtonDirect,
        SolverMode::NewtonSplitting,
    ];

    #[test]
    fn c_matrix_product() {
        let me = Method::new(4, 2).unwrap();
        let t = me.tableau();
        let c = t
            .p_s1()
            .matmul(t.xhat_s())
            .unwrap()
            .matmul(t.x_s())
            .unwrap();
        assert!(me.c_matrix().max_abs_diff(&c) < 1e-13);
        assert_eq!((me.c_matrix().rows(), me.c_matrix().cols()), (4, 2));
    }

    #[test]
    fn stages_free_flight() {
        let me = Method::new(4, 2).unwrap();
        let sys = Free(2);
        let (q0, p0) = ([1.0, -1.0], [0.5, 2.0]);
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.1).unwrap();
        let q = reconstruct_stages(&sp, &[0.0; 4]).unwrap();
        for (i, ci) in me.tableau().c().iter().enumerate() {
            assert!((q[2 * i] - (1.0 + 0.1 * ci * 0.5)).abs() < 1e-15);
            assert!((q[2 * i + 1] - (-1.0 + 0.1 * ci * 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn stages_naive_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let me = Method::new(4, 2).unwrap();
        let sys = Free(3);
        let q0: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p0: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 0.37;
        let sp = StageProblem::new(&me, &sys, &q0, &p0, h).unwrap();
        let q = reconstruct_stages(&sp, &g).unwrap();
        let t = me.tableau();
        for i in 0..4 {
            for a in 0..3 {
                let mut acc = 0.0;
                for j in 0..2 {
                    let mut cij = 0.0;
                    for l in 0..3 {
                        for n in 0..2 {
                            cij += t.p_s1()[(i, l)] * t.xhat_s()[(l, n)] * t.x_s()[(n, j)];
                        }
                    }
                    acc += cij * g[j * 3 + a];
                }
                let naive = q0[a] + h * t.c()[i] * p0[a] - h * h * acc;
                assert!((q[i * 3 + a] - naive).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_potential_converges_at_once() {
        let me = Method::new(3, 2).unwrap();
        let sys = Free(2);
        let (q0, p0) = ([0.3, 0.1], [1.0, -2.0]);
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.25).unwrap();
        let g = [0.7, -0.1, 0.2, 0.4];
        assert_eq!(eval_f(&sp, &g).unwrap().0, g.to_vec());
        for mode in MODES {
            let r = solve_step(&sp, &cfg(mode), None).unwrap();
            assert!(r.converged && r.outer_iters == 1, "{mode}");
            assert!(r.gamma.iter().all(|x| *x == 0.0));
            assert!((r.q1[0] - 0.55).abs() < 1e-15 && (r.q1[1] + 0.4).abs() < 1e-15);
            assert_eq!(r.p1, p0.to_vec());
        }
    }

    #[test]
    fn midpoint_root_closed_form() {
        // k = s = 1 on q'' = -q: γ = Q = q0 + h p0 / 2 - h²γ / 4
        let me = Method::new(1, 1).unwrap();
        let sys = harmonic(1.0, 1);
        let (q0, p0, h) = ([0.8], [-0.3], 0.1);
        let sp = StageProblem::new(&me, &sys, &q0, &p0, h).unwrap();
        let (g, st) = newton_direct_solve(&sp, &cfg(SolverMode::NewtonDirect)).unwrap();
        let exact = (q0[0] + h * p0[0] / 2.0) / (1.0 + h * h / 4.0);
        assert!(st.converged);
        assert!((g[0] - exact).abs() < 1e-14);
        assert!(max_abs(&eval_f(&sp, &g).unwrap().0) <= 1e-12);
    }

    #[test]
    fn linear_newton_one_correction() {
        let me = Method::new(4, 2).unwrap();
        let sys = harmonic(3.0, 2);
        let (q0, p0) = ([1.0, 0.2], [0.0, -1.0]);
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.3).unwrap();
        let (_, st) = newton_direct_solve(&sp, &cfg(SolverMode::NewtonDirect)).unwrap();
        assert!(st.converged);
        assert_eq!(st.outer_iters, 2);
        assert!(st.residual_history[1] <= 1e-12);
    }

    #[test]
    fn first_residual_from_free_flight() {
        let me = Method::new(4, 2).unwrap();
        let sys = fpu(FpuParams::default());
        let q0 = fpu_q0();
        let p0 = [0.3, -0.2, 0.1, 0.0, 0.5, -0.4];
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.05).unwrap();
        let (_, st) = splitting_solve(&sp, &cfg(SolverMode::NewtonSplitting)).unwrap();
        let mut direct = 0.0_f64;
        for a in 0..2 {
            for j in 0..6 {
                let mut acc = 0.0;
                for (i, ci) in me.tableau().c().iter().enumerate() {
                    let qi: Vec<f64> = (0..6).map(|n| q0[n] + 0.05 * ci * p0[n]).collect();
                    let mut g = [0.0; 6];
                    sys.grad(&qi, &mut g);
                    acc += me.tableau().projection()[(a, i)] * g[j];
                }
                direct = direct.max(acc.abs());
            }
        }
        assert!((st.residual_history[0] - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn fpu_fixed_point_pattern() {
        let me = Method::new(4, 2).unwrap();
        let sys = fpu(FpuParams::default());
        let q0 = fpu_q0();
        let p0 = [0.0; 6];
        let fp = cfg(SolverMode::FixedPoint);
        for (h, ok) in [(0.1, false), (0.05, false), (0.025, true)] {
            let sp = StageProblem::new(&me, &sys, &q0, &p0, h).unwrap();
            let r = solve_step(&sp, &fp, None).unwrap();
            assert_eq!(r.converged, ok, "h = {h}");
            assert_eq!(r.diverged, !ok, "h = {h}");
        }
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.1).unwrap();
        for mode in [SolverMode::NewtonDirect, SolverMode::NewtonSplitting] {
            let r = solve_step(&sp, &cfg(mode), None).unwrap();
            assert!(r.converged && r.final_residual <= 1e-12, "{mode}");
        }
    }

    #[test]
    fn solvers_agree() {
        let me = Method::new(4, 2).unwrap();
        let sys = fpu(FpuParams::default());
        let q0 = fpu_q0();
        let p0 = [0.1, 0.0, -0.3, 0.2, 0.0, 0.1];
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.02).unwrap();
        let gs: Vec<Vec<f64>> = MODES
            .iter()
            .map(|&m| {
                let r = solve_step(&sp, &cfg(m), None).unwrap();
                assert!(r.converged, "{m}");
                r.gamma
            })
            .collect();
        for g in &gs[1..] {
            let d = g
                .iter()
                .zip(&gs[0])
                .fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
            assert!(d < 1e-9, "{d}");
        }
    }

    #[test]
    fn many_sweeps_reproduce_newton() {
        let me = Method::new(4, 3).unwrap();
        let sys = harmonic(7.0, 2);
        let (q0, p0) = ([1.0, -0.5], [0.3, 0.8]);
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.2).unwrap();
        let newton = solve_from(&sp, &cfg(SolverMode::NewtonDirect), &[0.0; 6]).unwrap();
        let split_cfg = SolverConfig {
            nu: 200,
            ..cfg(SolverMode::NewtonSplitting)
        };
        let split = solve_from(&sp, &split_cfg, &[0.0; 6]).unwrap();
        assert!(split.2.residual_history[1] <= 1e-10);
        let d = split
            .0
            .iter()
            .zip(&newton.0)
            .fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
        assert!(d <= 1e-10);
        assert_eq!(split.2.inner_iters, 200 * (split.2.outer_iters - 1));
    }

    #[test]
    fn momentum_forms_agree() {
        let me = Method::new(4, 2).unwrap();
        let sys = fpu(FpuParams::default());
        let q0 = fpu_q0();
        let p0 = [0.2, -0.1, 0.0, 0.4, -0.3, 0.1];
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.1).unwrap();
        let (g, _, st) = solve_from(&sp, &cfg(SolverMode::NewtonDirect), &[0.0; 12]).unwrap();
        assert!(st.converged);
        let (_, grads) = eval_f(&sp, &g).unwrap();
        let a = stage_momenta(&sp, &g).unwrap();
        let b = stage_momenta_from_gradients(&sp, &grads).unwrap();
        let d = a
            .iter()
            .zip(&b)
            .fold(0.0_f64, |e, (x, y)| e.max((x - y).abs()));
        assert!(d <= 1e-12, "{d}");
    }

    #[test]
    fn harmonic_step_local_error() {
        let me = Method::new(2, 2).unwrap();
        let sys = harmonic(1.0, 1);
        let h = 0.01;
        let sp = StageProblem::new(&me, &sys, &[1.0], &[0.0], h).unwrap();
        let r = solve_step(&sp, &cfg(SolverMode::NewtonDirect), None).unwrap();
        let (q, p) = sys.exact(&[1.0], &[0.0], h);
        assert!((r.q1[0] - q[0]).abs() < h.powi(5));
        assert!((r.p1[0] - p[0]).abs() < h.powi(5));
    }

    #[test]
    fn step_back_and_forth() {
        let me = Method::new(4, 2).unwrap();
        let sys = pendulum();
        let c = SolverConfig {
            tol: 1e-13,
            ..cfg(SolverMode::NewtonSplitting)
        };
        let (q0, p0) = ([1.0], [0.4]);
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.1).unwrap();
        let f = solve_step(&sp, &c, None).unwrap();
        let sp = StageProblem::new(&me, &sys, &f.q1, &f.p1, -0.1).unwrap();
        let b = solve_step(&sp, &c, None).unwrap();
        assert!((b.q1[0] - q0[0]).abs() < 1e-10 && (b.p1[0] - p0[0]).abs() < 1e-10);
    }

    #[test]
    fn inner_errors_contract() {
        let me = Method::new(2, 2).unwrap();
        let sys = harmonic(10.0, 1);
        let sp = StageProblem::new(&me, &sys, &[1.0], &[0.0], 0.1).unwrap();
        let e = inner_iteration_errors(&sp, &[1.0, -0.5], 6).unwrap();
        let rho = crate::splitting::amplification_factor(me.scheme().unwrap(), 1.0).unwrap();
        let ratio = e[4] / e[3];
        assert!((ratio - rho).abs() <= 0.1 * rho, "{ratio} vs {rho}");
    }

    #[test]
    fn costs_counted() {
        let me = Method::new(4, 2).unwrap();
        let sys = fpu(FpuParams::default());
        let q0 = fpu_q0();
        let sp = StageProblem::new(&me, &sys, &q0, &[0.0; 6], 0.1).unwrap();
        let r = solve_step(&sp, &cfg(SolverMode::NewtonSplitting), None).unwrap();
        let c = r.costs;
        assert_eq!(c.grad_evals, 4 * r.outer_iters);
        assert_eq!((c.hess_evals, c.factorizations, c.factor_dim), (1, 1, 6));
        assert_eq!(c.back_solves, 2 * r.inner_iters);
        let r = solve_step(&sp, &cfg(SolverMode::NewtonDirect), None).unwrap();
        assert_eq!(
            (r.costs.factor_dim, r.costs.back_solves),
            (12, r.outer_iters - 1)
        );
    }

    #[test]
    fn bad_inputs() {
        let me = Method::new(2, 2).unwrap();
        let sys = Free(2);
        assert!(StageProblem::new(&me, &sys, &[0.0], &[0.0, 0.0], 0.1).is_err());
        assert!(StageProblem::new(&me, &sys, &[0.0; 2], &[0.0; 2], 0.0).is_err());
        let sp = StageProblem::new(&me, &sys, &[0.0; 2], &[0.0; 2], 0.1).unwrap();
        assert!(reconstruct_stages(&sp, &[0.0; 3]).is_err());
        let bad = SolverConfig {
            nu: 0,
            ..SolverConfig::default()
        };
        assert!(solve_step(&sp, &bad, None).is_err());
        assert!(fixed_point_solve(&sp, &cfg(SolverMode::NewtonDirect)).is_err());
        assert!(Method::new(8, 7).unwrap().scheme().is_none());
        let me7 = Method::new(7, 7).unwrap();
        let sys1 = Free(1);
        let sp = StageProblem::new(&me7, &sys1, &[0.0], &[0.0], 0.1).unwrap();
        assert!(splitting_solve(&sp, &cfg(SolverMode::NewtonSplitting)).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in MODES {
            assert_eq!(m.name().parse::<SolverMode>().unwrap(), m);
        }
        assert!("blended".parse::<SolverMode>().is_err());
    }
}
