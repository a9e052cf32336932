//! Modified triangular splitting of `I + h² X_s² ⊗ J`.
//!
//! A set of auxiliary abscissae `ĉ` defines `P̂_s = (P_{j−1}(ĉ_i))` and the
//! similar matrix `A_s = P̂_s X_s² P̂_s⁻¹`. The abscissae are chosen so that the
//! Crout factorization `A_s = L_s U_s` (unit diagonal on `U_s`) has a constant
//! diagonal `d_s = (det X_s²)^{1/s}` on `L_s`. The inner iteration
//!
//! ```text
//! [I + h² L_s ⊗ J] Δ̂^{ℓ+1} = h² [L_s − A_s] ⊗ J Δ̂^ℓ + η
//! ```
//!
//! then needs a single factorization of `I + h² d_s J`. On the scalar test
//! equation `y'' = −μ² y` with `x = hμ` its error propagates by
//! `M(x²) = x² (I + x² L_s)⁻¹ L_s (I − U_s)`.

use alloc::vec::Vec;

use crate::float::{exp, ln, powf, round, sqrt};
use crate::legendre::eval_legendre_all;
use crate::linalg::{spectral_radius, LuFactors};
use crate::tableau::{crout_diagonal, x_matrix};
use crate::{Error, Matrix, Result};

/// Auxiliary abscissae for `s = 2..=6`, in the order they enter `P̂_s`.
#[allow(clippy::excessive_precision)]
pub const BUILTIN_ABSCISSAE: [&[f64]; 5] = [
    &[0.3, 1.0],
    &[
        0.184464928775305737265558103045646778,
        0.355206619967670337592124663758030473,
        0.11,
    ],
    &[
        0.121426360154302109549573710053503842,
        0.321983015309146534767025518371538042,
        0.556746651956821737853056260425394287,
        0.0669,
    ],
    &[
        0.112021061643484468967447207878165951,
        0.250642318747930116818386585660135569,
        0.468530060432028509730164673409742649,
        0.549585424388219061926710294932774144,
        0.8432,
    ],
    &[
        0.0248310778562588151037629089054186400,
        0.0810927467455591556136430071800859819,
        0.164842169836300745621531627379110494,
        0.286473972582812178906454295119846077,
        0.822252930294509663636743142004393542,
        0.43621,
    ],
];

/// Published constant Crout diagonals `d_s`, `s = 2..=6`.
#[allow(clippy::excessive_precision)]
pub const BUILTIN_DIAGONALS: [f64; 5] = [
    1.0 / 12.0,
    0.0411035345721745016915268553859098174,
    0.0243975018237133294838596159060025047,
    0.0161349374182782642725304938088289256,
    0.0114550901343208942220264712822213470,
];

/// Condition-number threshold above which `P̂_s` is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Splitting data for one `s`.
#[derive(Debug, Clone)]
pub struct SplittingScheme {
    s: usize,
    chat: Vec<f64>,
    phat: Matrix,
    phat_lu: LuFactors,
    a: Matrix,
    l: Matrix,
    u: Matrix,
    d: f64,
}

impl SplittingScheme {
    /// Builds the scheme for arbitrary distinct abscissae. The order of
    /// `chat` is significant and preserved. The Crout diagonal is whatever the
    /// abscissae produce; see [`SplittingScheme::diagonal_deviation`].
    pub fn new(chat: &[f64]) -> Result<Self> {
        let s = chat.len();
        if s == 0 {
            return Err(Error::Config(
                "at least one auxiliary abscissa is required".into(),
            ));
        }
        let mut phat = Matrix::zeros(s, s);
        for (i, &c) in chat.iter().enumerate() {
            for (j, v) in eval_legendre_all(s, c)?.into_iter().enumerate() {
                phat[(i, j)] = v;
            }
        }
        let phat_lu = LuFactors::factor(&phat).map_err(|_| Error::DegenerateAbscissae {
            condition: f64::INFINITY,
        })?;
        let condition = phat_lu.condition_estimate(&phat)?;
        if !(condition <= MAX_CONDITION) {
            return Err(Error::DegenerateAbscissae { condition });
        }
        let x = x_matrix(s);
        let x2 = x.matmul(&x)?;
        // A P̂ = P̂ X²  ⇔  P̂ᵀ Aᵀ = (P̂ X²)ᵀ
        let rhs = phat.matmul(&x2)?.transpose();
        let a = LuFactors::factor(&phat.transpose())?
            .solve_matrix(&rhs)?
            .transpose();
        let (l, u) = crout(&a)?;
        Ok(SplittingScheme {
            s,
            chat: chat.to_vec(),
            phat,
            phat_lu,
            a,
            l,
            u,
            d: crout_diagonal(s),
        })
    }

    /// Scheme from the tabulated abscissae, `2 ≤ s ≤ 6`.
    pub fn builtin(s: usize) -> Result<Self> {
        Self::new(builtin_abscissae(s)?)
    }

    /// Degree `s`.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Auxiliary abscissae in `P̂_s` row order.
    pub fn abscissae(&self) -> &[f64] {
        &self.chat
    }

    /// `P̂_s`.
    pub fn phat(&self) -> &Matrix {
        &self.phat
    }

    /// LU factors of `P̂_s`, for applying `P̂_s⁻¹`.
    pub fn phat_factors(&self) -> &LuFactors {
        &self.phat_lu
    }

    /// `A_s = P̂_s X_s² P̂_s⁻¹`.
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// Crout lower factor `L_s`.
    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Unit upper Crout factor `U_s`.
    pub fn upper(&self) -> &Matrix {
        &self.u
    }

    /// Target diagonal `d_s = (det X_s²)^{1/s}`.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// `max_i |L_ii − d_s|`.
    pub fn diagonal_deviation(&self) -> f64 {
        (0..self.s)
            .map(|i| (self.l[(i, i)] - self.d).abs())
            .fold(0.0, f64::max)
    }

    /// `L_s (I − U_s)`, the `x → 0` slope matrix of `M(x²)`.
    pub fn slope_matrix(&self) -> Matrix {
        let n = Matrix::identity(self.s).sub(&self.u);
        self.l.matmul(&n).expect("square")
    }
}

/// Tabulated abscissae for `s = 2..=6`.
pub fn builtin_abscissae(s: usize) -> Result<&'static [f64]> {
    match s {
        2..=6 => Ok(BUILTIN_ABSCISSAE[s - 2]),
        _ => Err(Error::Config(alloc::format!(
            "built-in schemes exist for s = 2..6, got {s}"
        ))),
    }
}

/// Builtin scheme, `2 ≤ s ≤ 6`.
pub fn builtin_scheme(s: usize) -> Result<SplittingScheme> {
    SplittingScheme::builtin(s)
}

/// See [`SplittingScheme::new`].
pub fn build_scheme(chat: &[f64]) -> Result<SplittingScheme> {
    SplittingScheme::new(chat)
}

/// Crout factorization `A = L U` without pivoting, `diag(U) = 1`.
pub fn crout(a: &Matrix) -> Result<(Matrix, Matrix)> {
    if !a.is_square() {
        return Err(Error::Dimension {
            what: "Crout factorization",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    let tiny = 1e-14 * a.norm_inf();
    let mut l = Matrix::zeros(n, n);
    let mut u = Matrix::identity(n);
    for j in 0..n {
        for i in j..n {
            let s: f64 = (0..j).map(|k| l[(i, k)] * u[(k, j)]).sum();
            l[(i, j)] = a[(i, j)] - s;
        }
        let pivot = l[(j, j)];
        if !(pivot.abs() > tiny) {
            return Err(Error::Factorization { index: j, pivot });
        }
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| l[(j, k)] * u[(k, i)]).sum();
            u[(j, i)] = (a[(j, i)] - s) / pivot;
        }
    }
    Ok((l, u))
}

/// Settings of the damped Newton iteration for the auxiliary abscissae.
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Forward-difference step for the Jacobian.
    pub fd_step: f64,
    /// Maximum Newton iterations.
    pub max_iter: usize,
    /// Required `max_i |L_ii − d_s|`, `i < s`.
    pub tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            fd_step: 1e-7,
            max_iter: 100,
            tol: 1e-12,
        }
    }
}

fn diagonal_residual(free: &[f64], last: f64, d: f64) -> Option<Vec<f64>> {
    let mut chat = free.to_vec();
    chat.push(last);
    let scheme = SplittingScheme::new(&chat).ok()?;
    let r: Vec<f64> = (0..free.len()).map(|i| scheme.l[(i, i)] - d).collect();
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn norm_inf(v: &[f64]) -> f64 {
    crate::float::max_abs(v)
}

/// Step-halving limit of the damped Newton line search (`λ ≥ 2⁻¹⁰`).
const MAX_HALVINGS: usize = 11;

fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

/// Solves for `ĉ_1..ĉ_{s−1}` given `ĉ_s` so that the first `s − 1` Crout
/// diagonals equal `d_s`; the last one follows from `Π L_ii = det A`.
pub fn solve_auxiliary_abscissae(s: usize, chat_last: f64, guess: &[f64]) -> Result<Vec<f64>> {
    solve_auxiliary_abscissae_with(s, chat_last, guess, RootOptions::default())
}

/// [`solve_auxiliary_abscissae`] with explicit options.
///
/// Damped Newton with a forward-difference Jacobian on
/// `R(ĉ_1..ĉ_{s−1}) = (L_ii − d_s)_{i<s}`, halving the step until `‖R‖₂`
/// decreases. The residual surface has poles where a Crout pivot vanishes, so
/// starts close to a singular configuration can stall in a spurious local
/// minimum of `‖R‖`.
pub fn solve_auxiliary_abscissae_with(
    s: usize,
    chat_last: f64,
    guess: &[f64],
    opts: RootOptions,
) -> Result<Vec<f64>> {
    if s < 1 || guess.len() != s - 1 {
        return Err(Error::Dimension {
            what: "auxiliary abscissae guess",
            expected: s.saturating_sub(1),
            found: guess.len(),
        });
    }
    if s == 1 {
        return Ok(Vec::new());
    }
    let d = crout_diagonal(s);
    let zero = alloc::vec![0.0; s - 1];
    let (x, residual) = damped_newton(guess.to_vec(), chat_last, d, &zero, opts);
    if residual < opts.tol {
        Ok(x)
    } else {
        Err(Error::RootFinding { residual })
    }
}

/// Damped Newton on `R(x) = shift`; returns the last iterate and `‖R(x) − shift‖∞`.
fn damped_newton(
    mut x: Vec<f64>,
    chat_last: f64,
    d: f64,
    shift: &[f64],
    opts: RootOptions,
) -> (Vec<f64>, f64) {
    let n = x.len();
    let eval = |x: &[f64]| -> Option<Vec<f64>> {
        let mut r = diagonal_residual(x, chat_last, d)?;
        for (a, b) in r.iter_mut().zip(shift) {
            *a -= b;
        }
        Some(r)
    };
    let Some(mut r) = eval(&x) else {
        return (x, f64::INFINITY);
    };
    let mut rn = norm2(&r);
    let mut escapes = 5;
    for _ in 0..opts.max_iter {
        if norm_inf(&r) <= 1e-16 {
            break;
        }
        let mut jac = Matrix::zeros(n, n);
        let mut jac_ok = true;
        for j in 0..n {
            let mut xp = x.clone();
            let step = opts.fd_step * x[j].abs().max(1.0);
            xp[j] += step;
            let Some(rp) = eval(&xp) else {
                jac_ok = false;
                break;
            };
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / step;
            }
        }
        if !jac_ok {
            break;
        }
        let Ok(dx) = LuFactors::factor(&jac).and_then(|lu| lu.solve(&r)) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a - lambda * b).collect();
            if let Some(rt) = eval(&trial) {
                let tn = norm2(&rt);
                if tn < rn {
                    x = trial;
                    r = rt;
                    rn = tn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            // at roundoff level, or trapped in a local minimum of ‖r‖: allow a
            // few undamped steps to escape, then give up
            if norm_inf(&r) < opts.tol || escapes == 0 {
                break;
            }
            escapes -= 1;
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a - b).collect();
            match eval(&trial) {
                Some(rt) => {
                    x = trial;
                    rn = norm2(&rt);
                    r = rt;
                }
                None => break,
            }
        }
    }
    let res = norm_inf(&r);
    (x, res)
}

/// Builds the constant-diagonal scheme with the given last abscissa.
pub fn scheme_with_last(s: usize, chat_last: f64, guess: &[f64]) -> Result<SplittingScheme> {
    let mut chat = solve_auxiliary_abscissae(s, chat_last, guess)?;
    chat.push(chat_last);
    SplittingScheme::new(&chat)
}

/// `M(x²) = x² (I + x² L)⁻¹ L (I − U)`.
pub fn amplification_matrix(scheme: &SplittingScheme, x2: f64) -> Matrix {
    let s = scheme.s;
    let l = &scheme.l;
    let n = Matrix::identity(s).sub(&scheme.u);
    // forward substitution of (I + x² L) Y = B, column by column
    let forward = |b: &Matrix| -> Matrix {
        let mut y = Matrix::zeros(s, b.cols());
        for c in 0..b.cols() {
            for i in 0..s {
                let acc: f64 = (0..i).map(|k| x2 * l[(i, k)] * y[(k, c)]).sum();
                y[(i, c)] = (b[(i, c)] - acc) / (1.0 + x2 * l[(i, i)]);
            }
        }
        y
    };
    if x2 <= 1.0 {
        forward(&l.matmul(&n).expect("square")).scale(x2)
    } else {
        // x²(I + x²L)⁻¹L = I − (I + x²L)⁻¹ avoids forming huge x²L terms
        n.sub(&forward(&n))
    }
}

/// `ρ(M(x²))`.
pub fn amplification_factor(scheme: &SplittingScheme, x: f64) -> Result<f64> {
    spectral_radius(&amplification_matrix(scheme, x * x))
}

/// Linear convergence parameters of the inner iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceProfile {
    /// `max_{x ≥ 0} ρ(M(x²))`.
    pub rho_star: f64,
    /// `ρ(x²) ≈ rho_tilde·x²` as `x → 0`.
    pub rho_tilde: f64,
    /// `ρ(x²) ≈ rho_tilde_inf·|x|^{−2/(s−1)}` as `|x| → ∞`.
    pub rho_tilde_inf: f64,
    /// Maximizer of `ρ(M(x²))`.
    pub x_star: f64,
}

/// Number of points of the logarithmic scan used by [`convergence_profile`].
pub const PROFILE_GRID: usize = 2000;
/// Scan range of `x`.
pub const PROFILE_RANGE: (f64, f64) = (1e-3, 1e4);

/// The `x` values of the profile scan.
pub fn profile_grid() -> Vec<f64> {
    let (lo, hi) = (ln(PROFILE_RANGE.0), ln(PROFILE_RANGE.1));
    (0..PROFILE_GRID)
        .map(|i| exp(lo + (hi - lo) * i as f64 / (PROFILE_GRID - 1) as f64))
        .collect()
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub(crate) fn golden_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let g = (sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a).abs() > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

/// ρ*, ρ̃ and ρ̃_∞ of a scheme.
pub fn convergence_profile(scheme: &SplittingScheme) -> Result<ConvergenceProfile> {
    let grid = profile_grid();
    let mut best = (0usize, -1.0);
    for (i, &x) in grid.iter().enumerate() {
        let r = amplification_factor(scheme, x)?;
        if r > best.1 {
            best = (i, r);
        }
    }
    let lo = grid[best.0.saturating_sub(1)];
    let hi = grid[(best.0 + 1).min(grid.len() - 1)];
    let (mut x_star, mut rho_star) =
        golden_max(|x| amplification_factor(scheme, x), lo, hi, 1e-10)?;
    if best.1 > rho_star {
        x_star = grid[best.0];
        rho_star = best.1;
    }
    let rho_tilde = spectral_radius(&scheme.slope_matrix())?;
    let rho_tilde_inf = if scheme.s < 2 {
        0.0
    } else {
        let expo = 2.0 / (scheme.s - 1) as f64;
        let mut v =
            [1e5, 1e6, 1e7].map(|x| amplification_factor(scheme, x).map(|r| powf(x, expo) * r));
        if let Some(e) = v.iter().find_map(|r| r.as_ref().err().cloned()) {
            return Err(e);
        }
        let mut vals: Vec<f64> = v.iter_mut().map(|r| *r.as_ref().unwrap()).collect();
        vals.sort_by(f64::total_cmp);
        vals[1]
    };
    Ok(ConvergenceProfile {
        rho_star,
        rho_tilde,
        rho_tilde_inf,
        x_star,
    })
}

/// Deterministic xorshift generator for multi-start guesses (no `std`, no
/// external RNG in the core crate).
struct XorShift(u64);

impl XorShift {
    fn next_unit(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        (x >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// `true` if the free abscissae increase strictly, lie in `[0,1]` and avoid
/// `ĉ_s`: the ordering convention of the tabulated schemes.
pub fn is_ordered(free: &[f64], chat_last: f64) -> bool {
    free.windows(2).all(|w| w[0] < w[1])
        && free.iter().all(|x| (0.0..=1.0).contains(x))
        && free.iter().all(|x| (x - chat_last).abs() > 1e-8)
}

/// Number of seeded random restarts tried by [`ordered_roots`].
pub const MULTISTART_TRIES: usize = 800;

/// All distinct roots `ĉ_1 < … < ĉ_{s−1}` in `[0,1]` found for the given
/// `ĉ_s` from Gauss/equispaced starts plus [`MULTISTART_TRIES`] seeded random
/// sorted starts. No user guess is needed.
pub fn ordered_roots(s: usize, chat_last: f64) -> Vec<Vec<f64>> {
    if s < 2 {
        return alloc::vec![Vec::new()];
    }
    let n = s - 1;
    let accept = |v: &[f64]| is_ordered(v, chat_last);
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    for order in [n, s, s + 1] {
        if let Ok(rule) = crate::legendre::gauss_rule(order) {
            guesses.push(rule.c[..n].to_vec());
        }
    }
    guesses.push((1..=n).map(|i| i as f64 / s as f64).collect());
    guesses.push((1..=n).map(|i| i as f64 / (s + 1) as f64).collect());
    let mut rng = XorShift(0x9E37_79B9_7F4A_7C15 ^ ((s as u64) << 32));
    for _ in 0..MULTISTART_TRIES {
        let mut g: Vec<f64> = (0..n).map(|_| rng.next_unit()).collect();
        g.sort_by(f64::total_cmp);
        guesses.push(g);
    }
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for g in &guesses {
        if let Ok(v) = solve_auxiliary_abscissae(s, chat_last, g) {
            let fresh = !roots
                .iter()
                .any(|r| r.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-8));
            if accept(&v) && fresh {
                roots.push(v);
            }
        }
    }
    roots
}

/// Regenerates a constant-diagonal scheme for the given `ĉ_s` from scratch:
/// among the increasing roots found by [`ordered_roots`], the one with the
/// smallest `ρ*`.
pub fn regenerate_scheme(
    s: usize,
    chat_last: f64,
) -> Result<(SplittingScheme, ConvergenceProfile)> {
    let mut best: Option<(SplittingScheme, ConvergenceProfile)> = None;
    for free in ordered_roots(s, chat_last) {
        let mut chat = free;
        chat.push(chat_last);
        let Ok(scheme) = SplittingScheme::new(&chat) else {
            continue;
        };
        let Ok(profile) = convergence_profile(&scheme) else {
            continue;
        };
        if best
            .as_ref()
            .is_none_or(|(_, p)| profile.rho_star < p.rho_star)
        {
            best = Some((scheme, profile));
        }
    }
    best.ok_or(Error::RootFinding {
        residual: f64::INFINITY,
    })
}

/// `ρ*` of the scheme with `ĉ_s = 1` (free abscissae re-solved), `2 ≤ s ≤ 6`.
pub fn rho_star_at_one(s: usize) -> Result<f64> {
    builtin_abscissae(s)?;
    Ok(regenerate_scheme(s, 1.0)?.1.rho_star)
}

/// Differences in `ρ*` below this are ties.
pub const TIE_TOL: f64 = 1e-9;

/// Grid and refinement settings for [`optimize_last_abscissa_with`].
#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    /// Spacing of the `ĉ_s` grid on `(0,1]`.
    pub grid_step: f64,
    /// Golden-section tolerance in `ĉ_s`.
    pub refine_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            grid_step: 1e-3,
            refine_tol: 1e-5,
        }
    }
}

/// Outcome of [`optimize_last_abscissa`].
#[derive(Debug, Clone)]
pub struct OptimizedScheme {
    /// Minimizing scheme.
    pub scheme: SplittingScheme,
    /// Its convergence profile.
    pub profile: ConvergenceProfile,
    /// Grid candidates that could be evaluated.
    pub evaluated: usize,
    /// Grid candidates skipped because the root finder failed.
    pub skipped: usize,
}

/// Minimizes `ρ*` over `ĉ_s` with the default grid (step `1e−3`, refinement
/// to `1e−5`).
pub fn optimize_last_abscissa(s: usize) -> Result<OptimizedScheme> {
    optimize_last_abscissa_with(s, OptimizeOptions::default())
}

/// Minimizes `ρ*` over a `ĉ_s` grid on `(0,1]`, following the branch of the
/// tabulated scheme by warm-started continuation in both directions, then
/// refines the best grid point by golden section. Ties go to the lowest `ĉ_s`.
pub fn optimize_last_abscissa_with(s: usize, opts: OptimizeOptions) -> Result<OptimizedScheme> {
    let table = builtin_abscissae(s)?;
    let start = table[s - 1];
    let steps = round(1.0 / opts.grid_step) as i64;
    let grid: Vec<f64> = (1..=steps).map(|i| i as f64 * opts.grid_step).collect();
    let first_up = grid.partition_point(|&c| c < start);
    // (ĉ_s, free abscissae, ρ*)
    let mut samples: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut skipped = 0;
    let mut walk = |indices: &mut dyn Iterator<Item = usize>| {
        let mut guess = table[..s - 1].to_vec();
        for i in indices {
            let c = grid[i];
            let free = match solve_auxiliary_abscissae(s, c, &guess) {
                Ok(f) if is_ordered(&f, c) => f,
                _ => {
                    skipped += 1;
                    continue;
                }
            };
            let mut chat = free.clone();
            chat.push(c);
            match SplittingScheme::new(&chat).and_then(|sc| convergence_profile(&sc)) {
                Ok(p) if p.rho_star.is_finite() => {
                    guess = free.clone();
                    samples.push((c, free, p.rho_star));
                }
                _ => skipped += 1,
            }
        }
    };
    walk(&mut (first_up..grid.len()));
    walk(&mut (0..first_up).rev());
    if samples.is_empty() {
        return Err(Error::Optimization);
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = samples.iter().enumerate().fold(0, |bi, (i, smp)| {
        if smp.2 < samples[bi].2 - TIE_TOL {
            i
        } else {
            bi
        }
    });
    let lo = samples[best.saturating_sub(1)].0;
    let hi = samples[(best + 1).min(samples.len() - 1)].0;
    let guess = samples[best].1.clone();
    let objective = |c: f64| -> Result<f64> {
        let mut chat = solve_auxiliary_abscissae(s, c, &guess)?;
        if !is_ordered(&chat, c) {
            return Ok(f64::NEG_INFINITY);
        }
        chat.push(c);
        Ok(-convergence_profile(&SplittingScheme::new(&chat)?)?.rho_star)
    };
    let (mut c_best, mut rho_best) = (samples[best].0, samples[best].2);
    if hi > lo {
        if let Ok((c, neg)) = golden_max(objective, lo, hi, opts.refine_tol) {
            if -neg < rho_best - TIE_TOL {
                c_best = c;
                rho_best = -neg;
            }
        }
    }
    let _ = rho_best;
    let mut chat = solve_auxiliary_abscissae(s, c_best, &guess)?;
    chat.push(c_best);
    let scheme = SplittingScheme::new(&chat)?;
    let profile = convergence_profile(&scheme)?;
    Ok(OptimizedScheme {
        scheme,
        profile,
        evaluated: samples.len(),
        skipped,
    })
}
