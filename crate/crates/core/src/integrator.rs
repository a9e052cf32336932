//! Fixed-step trajectories, energy diagnostics and order measurement.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use crate::float::{ln, round};
use crate::problems::SeparableSystem;
use crate::solvers::{solve_step, CostCounters, Method, SolverConfig, SolverMode, StageProblem};
use crate::{Error, Result};

/// Trajectory options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// Number of Gauss nodes.
    pub k: usize,
    /// Polynomial degree.
    pub s: usize,
    /// Final time; may be negative together with `h`.
    pub t_end: f64,
    /// Stepsize.
    pub h: f64,
    /// Stage solver.
    pub solver: SolverConfig,
    /// Keep every `record_every`-th state (the final state is always kept).
    pub record_every: usize,
}

impl RunConfig {
    /// Checks the options and returns the number of steps and whether
    /// `t_end` had to be moved down to a whole number of steps.
    pub fn steps(&self) -> Result<(usize, bool)> {
        self.solver.validate()?;
        if self.record_every == 0 {
            return Err(Error::Config(String::from(
                "record_every must be at least 1",
            )));
        }
        if !(self.h.is_finite() && self.t_end.is_finite()) || self.h == 0.0 {
            return Err(Error::Config(String::from(
                "h and t_end must be finite, h nonzero",
            )));
        }
        let r = self.t_end / self.h;
        if !(r > 0.0) {
            return Err(Error::Config(String::from(
                "t_end and h must have the same sign",
            )));
        }
        let n = round(r);
        if (r - n).abs() <= 4.0 * f64::EPSILON * r && n >= 1.0 {
            Ok((n as usize, false))
        } else if r >= 1.0 {
            Ok((r as usize, true))
        } else {
            Err(Error::Config(String::from(
                "t_end is shorter than one step",
            )))
        }
    }
}

/// A recorded state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Time.
    pub t: f64,
    /// Positions.
    pub q: Vec<f64>,
    /// Momenta.
    pub p: Vec<f64>,
}

/// Run statistics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunStats {
    /// Steps completed.
    pub steps: usize,
    /// Steps requested.
    pub planned_steps: usize,
    /// Sum of outer iterations.
    pub total_outer: usize,
    /// Sum of inner sweeps.
    pub total_inner: usize,
    /// Steps that hit `max_outer` without converging.
    pub failed_steps: usize,
    /// A step diverged and the run was aborted.
    pub diverged: bool,
    /// `max_n |H(q_n,p_n) − H₀| / max(1, |H₀|)`.
    pub energy_drift_max: f64,
    /// Filled in by callers that can read a clock.
    pub wall_time: Duration,
    /// Outer iterations of each step.
    pub per_step_outer: Vec<usize>,
    /// `t_end` was moved down to a whole number of steps.
    pub t_end_adjusted: bool,
    /// Work counters summed over steps.
    pub costs: CostCounters,
}

impl RunStats {
    /// Every step converged.
    pub fn converged(&self) -> bool {
        !self.diverged && self.failed_steps == 0 && self.steps == self.planned_steps
    }
}

/// Integrates with a freshly built HBVM(`cfg.k`, `cfg.s`).
pub fn integrate(
    system: &dyn SeparableSystem,
    q0: &[f64],
    p0: &[f64],
    cfg: &RunConfig,
) -> Result<(Vec<Snapshot>, RunStats)> {
    let method = Method::new(cfg.k, cfg.s)?;
    integrate_with(&method, system, q0, p0, cfg)
}

/// Integrates with prebuilt method data; `cfg.k`, `cfg.s` must match it.
///
/// A diverged step ends the run with `stats.diverged` set; the trajectory
/// then stops at the last good state.
pub fn integrate_with(
    method: &Method,
    system: &dyn SeparableSystem,
    q0: &[f64],
    p0: &[f64],
    cfg: &RunConfig,
) -> Result<(Vec<Snapshot>, RunStats)> {
    if (method.k(), method.s()) != (cfg.k, cfg.s) {
        return Err(Error::Config(String::from(
            "method does not match run configuration",
        )));
    }
    let (n, adjusted) = cfg.steps()?;
    let m = system.dim();
    // validates dimensions once
    StageProblem::new(method, system, q0, p0, cfg.h)?;
    let h0 = system.hamiltonian(q0, p0);
    let scale = h0.abs().max(1.0);
    let mut stats = RunStats {
        planned_steps: n,
        t_end_adjusted: adjusted,
        per_step_outer: Vec::with_capacity(n),
        ..RunStats::default()
    };
    let mut traj = vec![Snapshot {
        t: 0.0,
        q: q0.to_vec(),
        p: p0.to_vec(),
    }];
    let (mut q, mut p) = (q0.to_vec(), p0.to_vec());
    let mut guess: Option<Vec<f64>> = None;
    for step in 1..=n {
        let sp = StageProblem {
            method,
            system,
            q0: &q,
            p0: &p,
            h: cfg.h,
        };
        let r = solve_step(&sp, &cfg.solver, guess.as_deref())?;
        stats.total_outer += r.outer_iters;
        stats.total_inner += r.inner_iters;
        stats.per_step_outer.push(r.outer_iters);
        stats.costs.accumulate(&r.costs);
        if r.diverged {
            stats.diverged = true;
            break;
        }
        if !r.converged {
            stats.failed_steps += 1;
        }
        if !r.q1.iter().chain(&r.p1).all(|x| x.is_finite()) {
            return Err(Error::Evaluation);
        }
        q = r.q1;
        p = r.p1;
        debug_assert_eq!(q.len(), m);
        stats.steps = step;
        let drift = (system.hamiltonian(&q, &p) - h0).abs() / scale;
        stats.energy_drift_max = stats.energy_drift_max.max(drift);
        if cfg.solver.warm_start {
            guess = Some(r.gamma);
        }
        if step % cfg.record_every == 0 || step == n {
            traj.push(Snapshot {
                t: step as f64 * cfg.h,
                q: q.clone(),
                p: p.clone(),
            });
        }
    }
    Ok((traj, stats))
}

/// `H` along a trajectory.
pub fn energy_series(system: &dyn SeparableSystem, traj: &[Snapshot]) -> Vec<f64> {
    traj.iter()
        .map(|s| system.hamiltonian(&s.q, &s.p))
        .collect()
}

/// Reference solution by HBVM(8,4) with simplified Newton at `h = 1e−3`
/// (adjusted to a whole number of steps).
pub fn reference_solution(
    system: &dyn SeparableSystem,
    q0: &[f64],
    p0: &[f64],
    t_end: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = (t_end.abs() / 1e-3).max(1.0);
    let n = round(n).max(1.0);
    let cfg = RunConfig {
        k: 8,
        s: 4,
        t_end,
        h: t_end / n,
        solver: SolverConfig {
            tol: 1e-14,
            ..SolverConfig::with_mode(SolverMode::NewtonDirect)
        },
        record_every: usize::MAX,
    };
    let (traj, stats) = integrate(system, q0, p0, &cfg)?;
    if stats.diverged || stats.steps != stats.planned_steps {
        return Err(Error::Measurement("reference integration diverged"));
    }
    let last = traj.last().expect("initial state recorded");
    Ok((last.q.clone(), last.p.clone()))
}

/// Result of [`measure_order`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub order: f64,
    /// `(h, error)` for each stepsize; `None` marks an excluded run.
    pub errors: Vec<(f64, Option<f64>)>,
}

/// Global error at `t_end` for each `h`, and the fitted order. Runs that
/// diverge, fail a step or hit the reference exactly are excluded.
#[allow(clippy::too_many_arguments)]
pub fn measure_order(
    system: &dyn SeparableSystem,
    q0: &[f64],
    p0: &[f64],
    k: usize,
    s: usize,
    solver: &SolverConfig,
    h_list: &[f64],
    t_end: f64,
    reference: (&[f64], &[f64]),
) -> Result<OrderEstimate> {
    let method = Method::new(k, s)?;
    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let cfg = RunConfig {
            k,
            s,
            t_end,
            h,
            solver: *solver,
            record_every: usize::MAX,
        };
        let (traj, stats) = integrate_with(&method, system, q0, p0, &cfg)?;
        let last = traj.last().expect("initial state recorded");
        let err = (last.q.iter().chain(&last.p))
            .zip(reference.0.iter().chain(reference.1))
            .fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
        let ok = stats.converged() && !stats.t_end_adjusted && err > 0.0 && err.is_finite();
        errors.push((h, ok.then_some(err)));
    }
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .filter_map(|&(h, e)| e.map(|e| (ln(h.abs()), ln(e))))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Measurement("fewer than three usable stepsizes"));
    }
    Ok(OrderEstimate {
        order: least_squares_slope(&pts),
        errors,
    })
}

/// Slope of the least-squares line through `pts`.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
