//! The benchmark grid: every method × stepsize × solver column.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use hbvm_core::integrator::{integrate_with, RunConfig, RunStats};
use hbvm_core::problems::SeparableSystem;
use hbvm_core::solvers::{Method, SolverConfig};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::format::float17;
use crate::spec::{BenchmarkSpec, Column};

/// CSV header, one row per cell.
pub const CSV_HEADER: [&str; 12] = [
    "problem",
    "k",
    "s",
    "i",
    "h",
    "solver",
    "nu",
    "outer",
    "inner",
    "energy_drift",
    "converged",
    "wall_ms",
];

/// Marker of a diverged cell in text tables.
pub const DIVERGED: &str = "****";

/// One grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Problem preset.
    pub problem: String,
    /// Gauss nodes.
    pub k: usize,
    /// Degree.
    pub s: usize,
    /// Stepsize exponent.
    pub i: u32,
    /// Stepsize.
    pub h: f64,
    /// Index into the spec's solver list.
    pub column: usize,
    /// CSV solver name.
    pub solver: &'static str,
    /// Inner sweeps (chosen by the sweep for `splitting-sweep`).
    pub nu: Option<usize>,
    /// Total outer iterations.
    pub outer: usize,
    /// Total inner sweeps.
    pub inner: usize,
    /// Maximum relative energy error.
    pub energy_drift: f64,
    /// Every step converged.
    pub converged: bool,
    /// Wall time of the reported run.
    pub wall_ms: f64,
    /// Failure other than divergence, if any.
    pub error: Option<String>,
}

struct Job {
    pair: usize,
    i: u32,
    column: usize,
    cfg: SolverConfig,
}

struct Outcome {
    stats: Option<RunStats>,
    wall_ms: f64,
    error: Option<String>,
}

fn run_job(
    method: &Method,
    system: &dyn SeparableSystem,
    q0: &[f64],
    p0: &[f64],
    cfg: RunConfig,
) -> Outcome {
    let start = Instant::now();
    let res = integrate_with(method, system, q0, p0, &cfg);
    let wall = start.elapsed();
    match res {
        Ok((_, mut stats)) => {
            stats.wall_time = wall;
            Outcome {
                stats: Some(stats),
                wall_ms: wall.as_secs_f64() * 1e3,
                error: None,
            }
        }
        Err(e) => Outcome {
            stats: None,
            wall_ms: wall.as_secs_f64() * 1e3,
            error: Some(e.to_string()),
        },
    }
}

/// Runs the grid on the current rayon pool. Cells come back in grid order
/// (methods, then `i`, then solver columns) whatever the scheduling.
pub fn run_grid(spec: &BenchmarkSpec) -> Result<Vec<Cell>> {
    spec.validate()?;
    let preset = spec.preset()?;
    let columns = spec.columns()?;
    let methods = spec
        .k_s_pairs
        .iter()
        .map(|&[k, s]| Method::new(k, s).map_err(CliError::from))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for pair in 0..methods.len() {
        for &i in &spec.i_range {
            for (column, col) in columns.iter().enumerate() {
                match *col {
                    Column::Fixed(cfg) => jobs.push(Job {
                        pair,
                        i,
                        column,
                        cfg,
                    }),
                    Column::Sweep { base, nu_max } => {
                        for nu in 1..=nu_max {
                            jobs.push(Job {
                                pair,
                                i,
                                column,
                                cfg: SolverConfig { nu, ..base },
                            });
                        }
                    }
                }
            }
        }
    }
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|job| {
            let [k, s] = spec.k_s_pairs[job.pair];
            let cfg = RunConfig {
                k,
                s,
                t_end: spec.t_end,
                h: spec.stepsize(job.i),
                solver: job.cfg,
                record_every: usize::MAX,
            };
            run_job(
                &methods[job.pair],
                preset.system.as_ref(),
                &preset.q0,
                &preset.p0,
                cfg,
            )
        })
        .collect();

    let mut cells: Vec<Cell> = Vec::new();
    let mut idx = 0;
    while idx < jobs.len() {
        let job = &jobs[idx];
        let mut end = idx + 1;
        while end < jobs.len()
            && (jobs[end].pair, jobs[end].i, jobs[end].column) == (job.pair, job.i, job.column)
        {
            end += 1;
        }
        let col = &columns[job.column];
        // the sweep reports the least ν with the fewest outer iterations
        let best = (idx..end)
            .filter(|&j| outcomes[j].stats.as_ref().is_some_and(RunStats::converged))
            .min_by_key(|&j| {
                (
                    outcomes[j].stats.as_ref().unwrap().total_outer,
                    jobs[j].cfg.nu,
                )
            })
            .unwrap_or(idx);
        let out = &outcomes[best];
        let [k, s] = spec.k_s_pairs[job.pair];
        let stats = out.stats.clone().unwrap_or_default();
        let nu = match col {
            Column::Fixed(c) if c.mode == hbvm_core::solvers::SolverMode::NewtonSplitting => {
                Some(c.nu)
            }
            Column::Fixed(_) => None,
            Column::Sweep { .. } => Some(jobs[best].cfg.nu),
        };
        cells.push(Cell {
            problem: spec.problem.clone(),
            k,
            s,
            i: job.i,
            h: spec.stepsize(job.i),
            column: job.column,
            solver: col.csv_name(),
            nu,
            outer: stats.total_outer,
            inner: stats.total_inner,
            energy_drift: stats.energy_drift_max,
            converged: out.stats.as_ref().is_some_and(RunStats::converged),
            wall_ms: out.wall_ms,
            error: out.error.clone(),
        });
        idx = end;
    }
    Ok(cells)
}

/// Writes the cells as CSV.
pub fn write_csv<W: Write>(cells: &[Cell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in cells {
        w.write_record([
            c.problem.clone(),
            c.k.to_string(),
            c.s.to_string(),
            c.i.to_string(),
            float17(c.h),
            c.solver.to_string(),
            c.nu.map(|n| n.to_string()).unwrap_or_default(),
            c.outer.to_string(),
            c.inner.to_string(),
            float17(c.energy_drift),
            c.converged.to_string(),
            float17(c.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One table per method: rows `i`, one column per solver (plus the chosen
/// `ν` after a sweep), `****` for cells that did not converge.
pub fn render_table(spec: &BenchmarkSpec, cells: &[Cell]) -> Result<String> {
    let columns = spec.columns()?;
    let mut headers = vec!["i".to_string()];
    for col in &columns {
        headers.push(col.label());
        if matches!(col, Column::Sweep { .. }) {
            headers.push("ν".into());
        }
    }
    let mut out = String::new();
    for &[k, s] in &spec.k_s_pairs {
        let mut rows = vec![headers.clone()];
        for &i in &spec.i_range {
            let mut row = vec![i.to_string()];
            for (ci, col) in columns.iter().enumerate() {
                let cell = cells
                    .iter()
                    .find(|c| (c.k, c.s, c.i, c.column) == (k, s, i, ci))
                    .expect("cell for every grid point");
                row.push(if cell.converged {
                    cell.outer.to_string()
                } else {
                    DIVERGED.to_string()
                });
                if matches!(col, Column::Sweep { .. }) {
                    row.push(match (cell.converged, cell.nu) {
                        (true, Some(nu)) => nu.to_string(),
                        _ => "-".into(),
                    });
                }
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..headers.len())
            .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let _ = writeln!(out, "HBVM({k},{s}), {}, outer iterations", spec.problem);
        for (n, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(v, w)| format!("{v:>w$}", w = w))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if n == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out.push('\n');
    }
    Ok(out)
}
