//! Subcommands of the `hbvm` binary.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hbvm_core::integrator::{
    energy_series, integrate_with, measure_order, reference_solution, RunConfig,
};
use hbvm_core::problems::{fpu_preset, harmonic, preset, FpuParams, Preset, SeparableSystem};
use hbvm_core::solvers::{Method, SolverConfig, SolverMode};
use hbvm_core::splitting::{
    builtin_abscissae, builtin_scheme, convergence_profile, optimize_last_abscissa_with,
    regenerate_scheme, rho_star_at_one, OptimizeOptions,
};
use hbvm_core::tableau::TableauSet;

use crate::bench::{render_table, run_grid, write_csv};
use crate::error::{CliError, Result};
use crate::format::{float17, matrix, vector};
use crate::spec::{BenchmarkSpec, SolverSpec};

/// Largest residual accepted by `tableau`.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Energy-conserving HBVM(k,s) integrators and the triangular-splitting stage solver.
#[derive(Debug, Parser)]
#[command(name = "hbvm", version)]
pub struct Cli {
    /// Worker threads for `bench` (0 = all cores).
    #[arg(long, env = "HBVM_THREADS", global = true)]
    pub threads: Option<usize>,
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the HBVM(k,s) coefficient matrices and check their identities.
    Tableau(TableauArgs),
    /// Report a splitting scheme and its convergence parameters.
    Scheme(SchemeArgs),
    /// Search the last auxiliary abscissa minimizing ρ*.
    Optimize(OptimizeArgs),
    /// Integrate one problem.
    Run(RunArgs),
    /// Run a benchmark grid.
    Bench(BenchArgs),
    /// Measure the convergence order.
    Order(OrderArgs),
}

/// `tableau` options.
#[derive(Debug, Args)]
pub struct TableauArgs {
    /// Gauss nodes.
    #[arg(long)]
    pub k: usize,
    /// Polynomial degree.
    #[arg(long)]
    pub s: usize,
}

/// `scheme` options.
#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// Polynomial degree, 2 to 6.
    #[arg(long)]
    pub s: usize,
    /// Solve for the other abscissae with this last one.
    #[arg(long)]
    pub chat_last: Option<f64>,
    /// Recompute the abscissae by root finding instead of using the tabulated ones.
    #[arg(long)]
    pub regenerate: bool,
}

/// `optimize` options.
#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Polynomial degree, 2 to 6.
    #[arg(long)]
    pub s: usize,
    /// Grid spacing of the last abscissa.
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    /// Golden-section tolerance.
    #[arg(long, default_value_t = 1e-5)]
    pub refine_tol: f64,
}

/// Solver flags shared by `run` and `order`.
#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// fixed-point, newton-direct or splitting.
    #[arg(long, default_value = "splitting")]
    pub solver: String,
    /// Inner sweeps per outer iteration.
    #[arg(long, default_value_t = 2)]
    pub nu: usize,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Outer iteration cap per step.
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    /// Divergence threshold on the iterates.
    #[arg(long, default_value_t = 1e8)]
    pub divergence_bound: f64,
    /// Start each step from the previous solution.
    #[arg(long)]
    pub warm_start: bool,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let mode: SolverMode = self.solver.parse()?;
        let cfg = SolverConfig {
            mode,
            tol: self.tol,
            max_outer: self.max_outer,
            nu: self.nu,
            divergence_bound: self.divergence_bound,
            warm_start: self.warm_start,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// FPU parameter overrides.
#[derive(Debug, Args, Clone, Default)]
pub struct FpuArgs {
    /// Number of stiff springs.
    #[arg(long)]
    pub m_pairs: Option<usize>,
    /// Stiff frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Soft spring exponent, 2 or 4.
    #[arg(long)]
    pub coupling_exponent: Option<u32>,
    /// Factor in front of ω² in the stiff springs.
    #[arg(long)]
    pub quadratic_prefactor: Option<f64>,
}

impl FpuArgs {
    fn any(&self) -> bool {
        self.m_pairs.is_some()
            || self.omega.is_some()
            || self.coupling_exponent.is_some()
            || self.quadratic_prefactor.is_some()
    }

    fn section(&self) -> crate::spec::FpuSection {
        crate::spec::FpuSection {
            m_pairs: self.m_pairs,
            omega: self.omega,
            coupling_exponent: self.coupling_exponent,
            quadratic_prefactor: self.quadratic_prefactor,
        }
    }
}

fn load_problem(name: &str, fpu: &FpuArgs) -> Result<Preset> {
    if fpu.any() {
        if name != "fpu-paper" {
            return Err(CliError::Config(format!(
                "FPU options given for problem '{name}'"
            )));
        }
        let p: FpuParams = fpu.section().params();
        return Ok(fpu_preset(p)?);
    }
    Ok(preset(name)?)
}

/// `run` options.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// fpu-paper, harmonic or pendulum.
    #[arg(long, default_value = "fpu-paper")]
    pub problem: String,
    /// Gauss nodes.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Polynomial degree.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Stepsize.
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    /// Final time.
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    /// Keep every n-th state in the CSV.
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Trajectory CSV (t, q…, p…, H).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Solver flags.
    #[command(flatten)]
    pub solver: SolverArgs,
    /// FPU overrides.
    #[command(flatten)]
    pub fpu: FpuArgs,
}

/// `bench` options; each overrides the corresponding spec field.
#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON spec; the FPU grid of HBVM(4,2) and HBVM(2,2) if omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Problem preset.
    #[arg(long)]
    pub problem: Option<String>,
    /// Methods as k,s (repeatable).
    #[arg(long = "k-s")]
    pub k_s: Vec<String>,
    /// Stepsize exponents (comma separated or repeated).
    #[arg(long = "i", value_delimiter = ',')]
    pub i: Vec<u32>,
    /// Solver columns: fixed-point, splitting, splitting-sweep, newton-direct.
    #[arg(long = "solver", value_delimiter = ',')]
    pub solvers: Vec<String>,
    /// ν for `splitting` columns.
    #[arg(long)]
    pub nu: Option<usize>,
    /// Largest ν for `splitting-sweep` columns.
    #[arg(long)]
    pub nu_max: Option<usize>,
    /// Residual tolerance for every column.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Outer iteration cap for every column.
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Final time.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Base stepsize h0 in h = h0·2^-i.
    #[arg(long)]
    pub h0: Option<f64>,
    /// CSV output; written to stdout after the tables if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// FPU overrides.
    #[command(flatten)]
    pub fpu: FpuArgs,
}

/// `order` options.
#[derive(Debug, Args)]
pub struct OrderArgs {
    /// fpu-paper, harmonic or pendulum.
    #[arg(long, default_value = "pendulum")]
    pub problem: String,
    /// Gauss nodes.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Polynomial degree.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    /// Stepsizes (comma separated or repeated).
    #[arg(long = "h", value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025, 0.0125])]
    pub h: Vec<f64>,
    /// Final time.
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Solver flags.
    #[command(flatten)]
    pub solver: SolverArgs,
    /// FPU overrides.
    #[command(flatten)]
    pub fpu: FpuArgs,
}

fn check_s(s: usize) -> Result<()> {
    if (2..=6).contains(&s) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "splitting schemes exist for s = 2..6, got {s}"
        )))
    }
}

/// `tableau`.
pub fn cmd_tableau(a: &TableauArgs, out: &mut dyn Write) -> Result<()> {
    let t = TableauSet::new(a.k, a.s)?;
    writeln!(out, "HBVM({},{})", a.k, a.s)?;
    write!(out, "{}", vector("c", t.c()))?;
    write!(out, "{}", vector("b", t.b()))?;
    write!(out, "{}", matrix("X_s", t.x_s()))?;
    write!(out, "{}", matrix("I_s", t.i_s()))?;
    write!(out, "{}", matrix("A", t.butcher_a()))?;
    let r = t.verify_identities();
    writeln!(out, "identity residuals:")?;
    for (name, v) in [
        ("integrals", r.integrals),
        ("orthonormality", r.orthonormality),
        ("projection", r.projection),
        ("row_sums", r.row_sums),
        ("structure", r.structure),
    ] {
        writeln!(out, "  {name:<15} {v:.3e}")?;
    }
    if r.max() < IDENTITY_TOL {
        Ok(())
    } else {
        Err(CliError::Scheme(format!(
            "identity residual {:.3e}",
            r.max()
        )))
    }
}

/// `scheme`.
pub fn cmd_scheme(a: &SchemeArgs, out: &mut dyn Write) -> Result<()> {
    check_s(a.s)?;
    let table = builtin_abscissae(a.s)?;
    let (scheme, profile, deviation) = if a.regenerate || a.chat_last.is_some() {
        let last = a.chat_last.unwrap_or(table[a.s - 1]);
        if !(last > 0.0 && last <= 1.0) {
            return Err(CliError::Config("chat-last must lie in (0, 1]".into()));
        }
        let (sc, pr) = regenerate_scheme(a.s, last).map_err(CliError::from)?;
        let dev = (last == table[a.s - 1]).then(|| {
            sc.abscissae()
                .iter()
                .zip(table)
                .fold(0.0_f64, |e, (x, y)| e.max((x - y).abs()))
        });
        (sc, pr, dev)
    } else {
        let sc = builtin_scheme(a.s).map_err(CliError::from)?;
        let pr = convergence_profile(&sc).map_err(CliError::from)?;
        (sc, pr, None)
    };
    let rho1 = rho_star_at_one(a.s).map_err(CliError::from)?;
    writeln!(out, "s = {}", a.s)?;
    write!(out, "{}", vector("chat", scheme.abscissae()))?;
    if let Some(d) = deviation {
        writeln!(out, "max deviation from tabulated abscissae = {d:.3e}")?;
    }
    writeln!(out, "d_s = {}", float17(scheme.d()))?;
    writeln!(
        out,
        "max |L_ii - d_s| = {:.3e}",
        scheme.diagonal_deviation()
    )?;
    writeln!(
        out,
        "rho* = {:.6} (at x = {:.6})",
        profile.rho_star, profile.x_star
    )?;
    writeln!(out, "rho~ = {:.6}", profile.rho_tilde)?;
    writeln!(out, "rho~_inf = {:.6}", profile.rho_tilde_inf)?;
    writeln!(out, "rho1* = {rho1:.6}")?;
    Ok(())
}

/// `optimize`.
pub fn cmd_optimize(a: &OptimizeArgs, out: &mut dyn Write) -> Result<()> {
    check_s(a.s)?;
    if !(a.grid_step > 0.0 && a.grid_step < 1.0 && a.refine_tol > 0.0) {
        return Err(CliError::Config(
            "grid step must lie in (0,1), tolerance positive".into(),
        ));
    }
    let opts = OptimizeOptions {
        grid_step: a.grid_step,
        refine_tol: a.refine_tol,
    };
    let r = optimize_last_abscissa_with(a.s, opts).map_err(CliError::from)?;
    writeln!(out, "s = {}", a.s)?;
    writeln!(out, "chat_s = {:.8}", r.scheme.abscissae()[a.s - 1])?;
    write!(out, "{}", vector("chat", r.scheme.abscissae()))?;
    writeln!(out, "rho* = {:.6}", r.profile.rho_star)?;
    writeln!(
        out,
        "candidates evaluated = {}, skipped = {}",
        r.evaluated, r.skipped
    )?;
    Ok(())
}

fn write_trajectory(
    path: &PathBuf,
    system: &dyn SeparableSystem,
    traj: &[hbvm_core::integrator::Snapshot],
) -> Result<()> {
    let m = system.dim();
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|j| format!("q{j}")));
    header.extend((1..=m).map(|j| format!("p{j}")));
    header.push("H".into());
    w.write_record(&header)?;
    let energy = energy_series(system, traj);
    for (snap, e) in traj.iter().zip(energy) {
        let mut row = vec![float17(snap.t)];
        row.extend(snap.q.iter().chain(&snap.p).map(|x| float17(*x)));
        row.push(float17(e));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `run`.
pub fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let pr = load_problem(&a.problem, &a.fpu)?;
    let solver = a.solver.config()?;
    let cfg = RunConfig {
        k: a.k,
        s: a.s,
        t_end: a.t_end,
        h: a.h,
        solver,
        record_every: a.record_every,
    };
    cfg.steps()?;
    let method = Method::new(a.k, a.s)?;
    let start = Instant::now();
    let (traj, mut st) = integrate_with(&method, pr.system.as_ref(), &pr.q0, &pr.p0, &cfg)
        .map_err(CliError::from)?;
    st.wall_time = start.elapsed();
    writeln!(
        out,
        "{} HBVM({},{}) {} h = {} t_end = {}",
        a.problem, a.k, a.s, solver.mode, a.h, a.t_end
    )?;
    if st.t_end_adjusted {
        writeln!(
            out,
            "warning: t_end moved to {} (whole number of steps)",
            st.planned_steps as f64 * a.h
        )?;
    }
    writeln!(out, "steps = {}/{}", st.steps, st.planned_steps)?;
    writeln!(out, "outer iterations = {}", st.total_outer)?;
    writeln!(out, "inner iterations = {}", st.total_inner)?;
    writeln!(out, "failed steps = {}", st.failed_steps)?;
    writeln!(out, "energy drift = {:.3e}", st.energy_drift_max)?;
    writeln!(
        out,
        "costs: grad = {}, hess = {}, factorizations = {} (order {}), back-solves = {}",
        st.costs.grad_evals,
        st.costs.hess_evals,
        st.costs.factorizations,
        st.costs.factor_dim,
        st.costs.back_solves
    )?;
    writeln!(
        out,
        "wall time = {:.3} ms",
        st.wall_time.as_secs_f64() * 1e3
    )?;
    if let Some(last) = traj.last() {
        write!(out, "{}", vector("q", &last.q))?;
        write!(out, "{}", vector("p", &last.p))?;
    }
    if let Some(path) = &a.csv {
        write_trajectory(path, pr.system.as_ref(), &traj)?;
    }
    if st.diverged {
        return Err(CliError::Diverged(format!(
            "step {} did not converge",
            st.steps + 1
        )));
    }
    if st.failed_steps > 0 {
        writeln!(
            out,
            "warning: {} steps stopped at max_outer",
            st.failed_steps
        )?;
    }
    Ok(())
}

fn parse_pair(s: &str) -> Result<[usize; 2]> {
    let bad = || CliError::Config(format!("expected k,s but got '{s}'"));
    let (k, s2) = s.split_once(',').ok_or_else(bad)?;
    Ok([
        k.trim().parse().map_err(|_| bad())?,
        s2.trim().parse().map_err(|_| bad())?,
    ])
}

/// Applies the command-line overrides to a spec.
pub fn bench_spec(a: &BenchArgs) -> Result<BenchmarkSpec> {
    let mut spec = match &a.spec {
        Some(p) => BenchmarkSpec::load(p)?,
        None => BenchmarkSpec::fpu_grid(),
    };
    if let Some(p) = &a.problem {
        spec.problem = p.clone();
    }
    if a.fpu.any() {
        spec.fpu = Some(a.fpu.section());
    }
    if !a.k_s.is_empty() {
        spec.k_s_pairs = a.k_s.iter().map(|s| parse_pair(s)).collect::<Result<_>>()?;
    }
    if !a.i.is_empty() {
        spec.i_range = a.i.clone();
    }
    if !a.solvers.is_empty() {
        spec.solvers = a.solvers.iter().map(|m| SolverSpec::new(m)).collect();
    }
    for sv in &mut spec.solvers {
        if a.nu.is_some() && sv.mode != "splitting-sweep" {
            sv.nu = a.nu;
        }
        if a.nu_max.is_some() {
            sv.nu_max = a.nu_max;
        }
        if a.tol.is_some() {
            sv.tol = a.tol;
        }
        if a.max_outer.is_some() {
            sv.max_outer = a.max_outer;
        }
    }
    if let Some(t) = a.t_end {
        spec.t_end = t;
    }
    if let Some(h) = a.h0 {
        spec.h0 = h;
    }
    if let Some(o) = &a.output {
        spec.output = Some(o.clone());
    }
    spec.validate()?;
    Ok(spec)
}

/// `bench`.
pub fn cmd_bench(a: &BenchArgs, threads: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let spec = bench_spec(a)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(CliError::config)?;
    let cells = pool.install(|| run_grid(&spec))?;
    write!(out, "{}", render_table(&spec, &cells)?)?;
    for c in cells.iter().filter(|c| c.error.is_some()) {
        writeln!(
            out,
            "cell HBVM({},{}) i = {} {}: {}",
            c.k,
            c.s,
            c.i,
            c.solver,
            c.error.as_deref().unwrap_or_default()
        )?;
    }
    match &spec.output {
        Some(path) => {
            write_csv(&cells, BufWriter::new(File::create(path)?))?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => write_csv(&cells, &mut *out)?,
    }
    Ok(())
}

/// `order`.
pub fn cmd_order(a: &OrderArgs, out: &mut dyn Write) -> Result<()> {
    let pr = load_problem(&a.problem, &a.fpu)?;
    let solver = a.solver.config()?;
    if a.h.len() < 3 {
        return Err(CliError::Measurement(format!(
            "need at least three stepsizes, got {}",
            a.h.len()
        )));
    }
    let (rq, rp) = if a.problem == "harmonic" {
        harmonic(1.0, 1).exact(&pr.q0, &pr.p0, a.t_end)
    } else {
        reference_solution(pr.system.as_ref(), &pr.q0, &pr.p0, a.t_end).map_err(CliError::from)?
    };
    let est = measure_order(
        pr.system.as_ref(),
        &pr.q0,
        &pr.p0,
        a.k,
        a.s,
        &solver,
        &a.h,
        a.t_end,
        (&rq, &rp),
    )
    .map_err(CliError::from)?;
    writeln!(
        out,
        "{} HBVM({},{}) t_end = {}",
        a.problem, a.k, a.s, a.t_end
    )?;
    for (h, e) in &est.errors {
        match e {
            Some(e) => writeln!(out, "h = {h:<10} error = {e:.6e}")?,
            None => writeln!(out, "h = {h:<10} excluded")?,
        }
    }
    writeln!(out, "order = {:.4}", est.order)?;
    Ok(())
}

/// Parses `args` and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    let res = match &cli.command {
        Command::Tableau(a) => cmd_tableau(a, out),
        Command::Scheme(a) => cmd_scheme(a, out),
        Command::Optimize(a) => cmd_optimize(a, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Bench(a) => cmd_bench(a, cli.threads, out),
        Command::Order(a) => cmd_order(a, out),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
