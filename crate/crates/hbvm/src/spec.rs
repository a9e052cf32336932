//! JSON benchmark specifications.
//!
//! ```json
//! {
//!   "problem": "fpu-paper",
//!   "k_s_pairs": [[4, 2], [2, 2]],
//!   "i_range": [0, 1, 2, 3, 4, 5, 6],
//!   "solvers": [
//!     {"mode": "fixed-point"},
//!     {"mode": "splitting-sweep", "nu_max": 12},
//!     {"mode": "splitting", "nu": 2},
//!     {"mode": "newton-direct"}
//!   ],
//!   "t_end": 10.0,
//!   "output": "fpu.csv"
//! }
//! ```

use std::path::{Path, PathBuf};

use hbvm_core::problems::FpuParams;
use hbvm_core::solvers::{SolverConfig, SolverMode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest `ν` tried by a sweep unless configured otherwise.
pub const DEFAULT_NU_MAX: usize = 12;

/// A benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    /// Problem preset name.
    #[serde(default = "default_problem")]
    pub problem: String,
    /// FPU parameters overriding the preset's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpu: Option<FpuSection>,
    /// Methods HBVM(k,s).
    pub k_s_pairs: Vec<[usize; 2]>,
    /// Stepsizes `h = h0·2^{−i}`.
    pub i_range: Vec<u32>,
    /// `h0`.
    #[serde(default = "default_h0")]
    pub h0: f64,
    /// Solver columns.
    pub solvers: Vec<SolverSpec>,
    /// Final time.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// CSV destination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// FPU overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FpuSection {
    /// Number of stiff springs.
    pub m_pairs: Option<usize>,
    /// Stiff frequency.
    pub omega: Option<f64>,
    /// Soft spring exponent.
    pub coupling_exponent: Option<u32>,
    /// Stiff spring prefactor.
    pub quadratic_prefactor: Option<f64>,
}

impl FpuSection {
    /// Default parameters with the overrides applied.
    pub fn params(&self) -> FpuParams {
        let d = FpuParams::default();
        FpuParams {
            m_pairs: self.m_pairs.unwrap_or(d.m_pairs),
            omega: self.omega.unwrap_or(d.omega),
            coupling_exponent: self.coupling_exponent.unwrap_or(d.coupling_exponent),
            quadratic_prefactor: self.quadratic_prefactor.unwrap_or(d.quadratic_prefactor),
        }
    }
}

/// One solver column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// `fixed-point`, `splitting`, `splitting-sweep` or `newton-direct`.
    pub mode: String,
    /// Inner sweeps for `splitting`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<usize>,
    /// Largest `ν` tried by `splitting-sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_max: Option<usize>,
    /// Residual tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Outer iteration cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    /// Divergence threshold on `‖γ‖∞`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_bound: Option<f64>,
    /// Reuse the previous step's `γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<bool>,
}

impl SolverSpec {
    /// Column with default options.
    pub fn new(mode: &str) -> Self {
        Self {
            mode: mode.to_string(),
            nu: None,
            nu_max: None,
            tol: None,
            max_outer: None,
            divergence_bound: None,
            warm_start: None,
        }
    }

    /// Resolves the column.
    pub fn column(&self) -> Result<Column> {
        let sweep = self.mode == "splitting-sweep";
        let mode = if sweep {
            SolverMode::NewtonSplitting
        } else {
            self.mode.parse::<SolverMode>()?
        };
        let d = SolverConfig::with_mode(mode);
        let cfg = SolverConfig {
            mode,
            tol: self.tol.unwrap_or(d.tol),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            nu: self.nu.unwrap_or(d.nu),
            divergence_bound: self.divergence_bound.unwrap_or(d.divergence_bound),
            warm_start: self.warm_start.unwrap_or(d.warm_start),
        };
        cfg.validate()?;
        if sweep {
            let nu_max = self.nu_max.unwrap_or(DEFAULT_NU_MAX);
            if nu_max == 0 {
                return Err(CliError::Config("nu_max must be at least 1".into()));
            }
            Ok(Column::Sweep { base: cfg, nu_max })
        } else {
            Ok(Column::Fixed(cfg))
        }
    }
}

/// A resolved solver column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Column {
    /// One configuration.
    Fixed(SolverConfig),
    /// Splitting with the `ν ∈ 1..=nu_max` minimizing total outer iterations.
    Sweep {
        /// Options besides `ν`.
        base: SolverConfig,
        /// Largest `ν` tried.
        nu_max: usize,
    },
}

impl Column {
    /// Text table header.
    pub fn label(&self) -> String {
        match self {
            Column::Fixed(c) => match c.mode {
                SolverMode::FixedPoint => "fixed-pt.".into(),
                SolverMode::NewtonDirect => "newton".into(),
                SolverMode::NewtonSplitting => format!("splitting-{}", c.nu),
            },
            Column::Sweep { .. } => "splitting-ν".into(),
        }
    }

    /// `solver` field of the CSV.
    pub fn csv_name(&self) -> &'static str {
        match self {
            Column::Fixed(c) => c.mode.name(),
            Column::Sweep { .. } => "splitting-sweep",
        }
    }
}

fn default_problem() -> String {
    "fpu-paper".into()
}

fn default_h0() -> f64 {
    0.1
}

fn default_t_end() -> f64 {
    10.0
}

impl BenchmarkSpec {
    /// The FPU grid: HBVM(4,2) and HBVM(2,2), `i = 0..6`, fixed-point,
    /// splitting-ν, splitting-2 and direct Newton.
    pub fn fpu_grid() -> Self {
        let mut two = SolverSpec::new("splitting");
        two.nu = Some(2);
        Self {
            problem: default_problem(),
            fpu: None,
            k_s_pairs: vec![[4, 2], [2, 2]],
            i_range: (0..=6).collect(),
            h0: default_h0(),
            solvers: vec![
                SolverSpec::new("fixed-point"),
                SolverSpec::new("splitting-sweep"),
                two,
                SolverSpec::new("newton-direct"),
            ],
            t_end: default_t_end(),
            output: None,
        }
    }

    /// Reads a JSON spec.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parses and validates JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(CliError::config)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks lists and ranges.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.k_s_pairs.is_empty() {
            return bad("k_s_pairs is empty");
        }
        if self.i_range.is_empty() {
            return bad("i_range is empty");
        }
        if self.solvers.is_empty() {
            return bad("solvers is empty");
        }
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return bad("h0 must be positive");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        for &[k, s] in &self.k_s_pairs {
            if s == 0 || k < s {
                return Err(CliError::Config(format!("invalid method HBVM({k},{s})")));
            }
        }
        if self.fpu.is_some() && self.problem != "fpu-paper" {
            return bad("fpu parameters given for a non-FPU problem");
        }
        for sv in &self.solvers {
            sv.column()?;
        }
        self.preset()?;
        Ok(())
    }

    /// Resolved solver columns.
    pub fn columns(&self) -> Result<Vec<Column>> {
        self.solvers.iter().map(SolverSpec::column).collect()
    }

    /// The problem with its initial state.
    pub fn preset(&self) -> Result<hbvm_core::problems::Preset> {
        match (&self.fpu, self.problem.as_str()) {
            (Some(f), "fpu-paper") => Ok(hbvm_core::problems::fpu_preset(f.params())?),
            _ => Ok(hbvm_core::problems::preset(&self.problem)?),
        }
    }

    /// `h0·2^{−i}`.
    pub fn stepsize(&self, i: u32) -> f64 {
        self.h0 / 2f64.powi(i as i32)
    }
}
