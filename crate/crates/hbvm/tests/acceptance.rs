//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p hbvm --release --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hbvm::bench::{run_grid, Cell};
use hbvm::spec::BenchmarkSpec;
use hbvm_core::integrator::{integrate, measure_order, reference_solution, RunConfig};
use hbvm_core::linalg::{
    block_lower_triangular_solve, eigenvalues_small, spectral_radius, LuFactors,
};
use hbvm_core::problems::{harmonic, pendulum, preset};
use hbvm_core::solvers::{
    inner_iteration_errors, solve_from, Method, SolverConfig, SolverMode, StageProblem,
};
use hbvm_core::splitting::{
    amplification_factor, builtin_scheme, convergence_profile, profile_grid, rho_star_at_one,
    solve_auxiliary_abscissae,
};
use hbvm_core::tableau::{det_x, TableauSet};
use hbvm_core::Matrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn digits(a: f64, b: f64) -> f64 {
    let r = rel(a, b);
    if r == 0.0 {
        17.0
    } else {
        -r.log10()
    }
}

// reference abscissae ĉ_1..ĉ_s and d_s, 36 digits
const ABSCISSAE: [(&[&str], &str); 5] = [
    (&["0.3", "1"], "0.0833333333333333333333333333333333333"),
    (
        &[
            "0.184464928775305737265558103045646778",
            "0.355206619967670337592124663758030473",
            "0.11",
        ],
        "0.0411035345721745016915268553859098174",
    ),
    (
        &[
            "0.121426360154302109549573710053503842",
            "0.321983015309146534767025518371538042",
            "0.556746651956821737853056260425394287",
            "0.0669",
        ],
        "0.0243975018237133294838596159060025047",
    ),
    (
        &[
            "0.112021061643484468967447207878165951",
            "0.250642318747930116818386585660135569",
            "0.468530060432028509730164673409742649",
            "0.549585424388219061926710294932774144",
            "0.8432",
        ],
        "0.0161349374182782642725304938088289256",
    ),
    (
        &[
            "0.0248310778562588151037629089054186400",
            "0.0810927467455591556136430071800859819",
            "0.164842169836300745621531627379110494",
            "0.286473972582812178906454295119846077",
            "0.822252930294509663636743142004393542",
            "0.43621",
        ],
        "0.0114550901343208942220264712822213470",
    ),
];

// reference s, ρ*, ρ̃, ρ̃∞, ρ₁*
const PARAMETERS: [(usize, f64, f64, f64, f64); 5] = [
    (2, 0.25, 0.08333, 12.0, 0.25),
    (3, 0.3546, 0.06256, 4.3307, 0.4294),
    (4, 0.4168, 0.03192, 1.2575, 0.5623),
    (5, 0.4931, 0.03665, 0.8351, 0.6338),
    (6, 0.7295, 0.03087, 2.5826, 0.9250),
];

fn abscissae() -> Verdict {
    let start = Instant::now();
    let mut worst_digits = f64::INFINITY;
    let mut worst_d = 0.0_f64;
    let mut notes = Vec::new();
    for (n, (chat, d)) in ABSCISSAE.iter().enumerate() {
        let s = n + 2;
        let chat: Vec<f64> = chat.iter().map(|v| v.parse().unwrap()).collect();
        let last = chat[s - 1];
        let guess: Vec<f64> = chat[..s - 1].iter().map(|c| c + 1e-3).collect();
        match solve_auxiliary_abscissae(s, last, &guess) {
            Ok(v) => {
                for (a, b) in v.iter().zip(&chat) {
                    worst_digits = worst_digits.min(digits(*a, *b));
                }
            }
            Err(e) => {
                worst_digits = 0.0;
                notes.push(format!("s={s}: {e}"));
            }
        }
        let ds = det_x(s).powi(2).powf(1.0 / s as f64);
        worst_d = worst_d.max(rel(ds, d.parse().unwrap()));
    }
    let elapsed = start.elapsed();
    verdict(
        worst_digits >= 10.0 && worst_d <= 1e-12 && elapsed < Duration::from_secs(5),
        format!(
            "min digits {worst_digits:.1}, max d_s rel err {worst_d:.1e}, {:.2} s {}",
            elapsed.as_secs_f64(),
            notes.join("; ")
        ),
    )
}

fn parameters() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    for &(s, rs, rt, ri, r1) in &PARAMETERS {
        let p = convergence_profile(&builtin_scheme(s).unwrap()).unwrap();
        let one = rho_star_at_one(s).unwrap();
        let errs = [
            rel(p.rho_star, rs),
            rel(p.rho_tilde, rt),
            rel(p.rho_tilde_inf, ri),
            rel(one, r1),
        ];
        let ok = errs[0] <= 1e-3 && errs[1] <= 1e-3 && errs[2] <= 1e-2 && errs[3] <= 1e-3;
        pass &= ok;
        if !ok {
            lines.push(format!(
                "s={s}: ρ*={:.4} ρ̃={:.5} ρ̃∞={:.4} ρ₁*={:.4}",
                p.rho_star, p.rho_tilde, p.rho_tilde_inf, one
            ));
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    verdict(
        pass,
        format!(
            "{:.2} s; mismatches: {}",
            elapsed.as_secs_f64(),
            if lines.is_empty() {
                "none".into()
            } else {
                lines.join(", ")
            }
        ),
    )
}

fn p_convergence() -> Verdict {
    let grid = profile_grid();
    let mut worst = 0.0_f64;
    for s in 2..=6 {
        let sc = builtin_scheme(s).unwrap();
        for &x in &grid {
            worst = worst.max(amplification_factor(&sc, x).unwrap());
        }
    }
    verdict(
        worst < 1.0,
        format!("max ρ over {} points × 5 schemes = {worst:.4}", grid.len()),
    )
}

fn tableau_identities() -> Verdict {
    let mut worst = 0.0_f64;
    for s in 1..=6 {
        for k in [s, s + 1, 2 * s, 3 * s] {
            worst = worst.max(TableauSet::new(k, s).unwrap().verify_identities().max());
        }
    }
    verdict(worst <= 1e-12, format!("max residual {worst:.1e}"))
}

fn fpu_grid() -> (Vec<Cell>, Duration) {
    let spec = BenchmarkSpec::fpu_grid();
    let start = Instant::now();
    let cells = run_grid(&spec).unwrap();
    (cells, start.elapsed())
}

fn cell<'a>(cells: &'a [Cell], k: usize, i: u32, solver: &str, nu: Option<usize>) -> &'a Cell {
    cells
        .iter()
        .find(|c| c.k == k && c.i == i && c.solver == solver && (nu.is_none() || c.nu == nu))
        .expect("grid cell")
}

fn divergence_pattern(cells: &[Cell], elapsed: Duration) -> Verdict {
    let mut pass = elapsed < Duration::from_secs(120);
    let mut notes = Vec::new();
    for k in [4, 2] {
        for i in 0..=6 {
            let fp = cell(cells, k, i, "fixed-point", None);
            let sp = cell(cells, k, i, "splitting", Some(2));
            let nd = cell(cells, k, i, "newton-direct", None);
            if fp.converged != (i >= 2) {
                pass = false;
                notes.push(format!(
                    "HBVM({k},2) i={i} fixed-point converged={}",
                    fp.converged
                ));
            }
            if !sp.converged || !nd.converged {
                pass = false;
                notes.push(format!("HBVM({k},2) i={i} splitting/newton failed"));
            }
            if fp.converged && sp.converged && sp.outer >= fp.outer {
                pass = false;
                notes.push(format!(
                    "HBVM({k},2) i={i} splitting {} ≥ fixed-point {}",
                    sp.outer, fp.outer
                ));
            }
        }
    }
    verdict(
        pass,
        format!(
            "grid {:.1} s; {}",
            elapsed.as_secs_f64(),
            if notes.is_empty() {
                "pattern as expected".into()
            } else {
                notes.join(", ")
            }
        ),
    )
}

fn k_independence(cells: &[Cell]) -> Verdict {
    let mut worst = 0.0_f64;
    let mut at = String::new();
    for a in cells.iter().filter(|c| c.k == 4 && c.converged) {
        if let Some(b) = cells
            .iter()
            .find(|b| b.k == 2 && b.i == a.i && b.column == a.column && b.converged)
        {
            let d = (a.outer as f64 - b.outer as f64).abs() / (b.outer as f64);
            if d > worst {
                worst = d;
                at = format!("i={} {} ({} vs {})", a.i, a.solver, a.outer, b.outer);
            }
        }
    }
    verdict(
        worst < 0.05,
        format!("max relative difference {:.2}% at {at}", worst * 100.0),
    )
}

fn energy() -> Verdict {
    let pr = preset("fpu-paper").unwrap();
    let drift = |k| {
        let cfg = RunConfig {
            k,
            s: 2,
            t_end: 10.0,
            h: 0.1,
            solver: SolverConfig::default(),
            record_every: usize::MAX,
        };
        let (_, st) = integrate(pr.system.as_ref(), &pr.q0, &pr.p0, &cfg).unwrap();
        assert!(st.converged());
        st.energy_drift_max
    };
    let (hbvm, gauss) = (drift(4), drift(2));
    verdict(
        hbvm <= 1e-8 && gauss >= 100.0 * hbvm,
        format!("HBVM(4,2) drift {hbvm:.2e}, Gauss-2 drift {gauss:.2e}"),
    )
}

fn order() -> Verdict {
    let sys = pendulum();
    let (q0, p0) = ([1.0], [0.0]);
    let (rq, rp) = reference_solution(&sys, &q0, &p0, 1.0).unwrap();
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let mut orders = Vec::new();
    for k in [4, 2] {
        let est = measure_order(
            &sys,
            &q0,
            &p0,
            k,
            2,
            &SolverConfig::default(),
            &hs,
            1.0,
            (&rq, &rp),
        )
        .unwrap();
        orders.push(est.order);
    }
    verdict(
        orders.iter().all(|p| (p - 4.0).abs() <= 0.2),
        format!("HBVM(4,2) {:.4}, HBVM(2,2) {:.4}", orders[0], orders[1]),
    )
}

// Contraction over inner iterations 3..8 on y'' = −μ²y.
fn contraction() -> Verdict {
    let h = 0.1;
    let mut worst = 0.0_f64;
    let mut lines = Vec::new();
    for s in [2, 3] {
        let me = Method::new(s, s).unwrap();
        let sc = me.scheme().unwrap();
        for x in [0.5, 1.0, 2.0, 10.0] {
            let sys = harmonic(x / h, 1);
            let sp = StageProblem::new(&me, &sys, &[1.0], &[0.0], h).unwrap();
            let eta: Vec<f64> = (0..s).map(|j| 1.0 / (j as f64 + 1.0)).collect();
            let e = inner_iteration_errors(&sp, &eta, 8).unwrap();
            let observed = (e[8] / e[3]).powf(0.2);
            let rho = amplification_factor(sc, x).unwrap();
            let r = rel(observed, rho);
            if r > worst {
                worst = r;
            }
            lines.push(format!("s={s} x={x}: {observed:.4} vs {rho:.4}"));
        }
    }
    verdict(
        worst <= 0.1,
        format!("max rel err {:.2e}; {}", worst, lines.join(", ")),
    )
}

// det(λI − A) coefficients, c_n = 1
fn char_poly(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        let mut next = a.matmul(&m).unwrap();
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        m = next;
        c[n - k] = -a.matmul(&m).unwrap().trace() / k as f64;
    }
    c
}

fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let eval = |z: Complex64| {
        c.iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    };
    let deriv: Vec<f64> = (1..=n).map(|k| k as f64 * c[k]).collect();
    let evald = |z: Complex64| {
        deriv
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32) * 1.5).collect();
    for _ in 0..5000 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let den = (0..n)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |d, j| d * (z[i] - z[j]));
            let step = eval(z[i]) / den;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in &mut z {
        for _ in 0..3 {
            let d = evald(*zi);
            if d.norm() > 0.0 {
                *zi -= eval(*zi) / d;
            }
        }
    }
    z
}

fn oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2013);

    let mut block_err = 0.0_f64;
    for s in 1..=6 {
        for m in 1..=8 {
            let d = rng.gen_range(0.05..0.5);
            let lower = Matrix::from_fn(s, s, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Equal => d,
                std::cmp::Ordering::Greater => rng.gen_range(-1.0..1.0),
                std::cmp::Ordering::Less => 0.0,
            });
            let b = Matrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
            let hm = b.matmul(&b.transpose()).unwrap();
            let h2 = 0.3;
            let rhs: Vec<f64> = (0..s * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag = LuFactors::factor(&Matrix::identity(m).add(&hm.scale(h2 * d))).unwrap();
            let x = block_lower_triangular_solve(&lower, &hm, &diag, h2, &rhs).unwrap();
            let dense = Matrix::from_fn(s * m, s * m, |r, c| {
                let v = h2 * lower[(r / m, c / m)] * hm[(r % m, c % m)];
                if r == c {
                    1.0 + v
                } else {
                    v
                }
            });
            let y = LuFactors::factor(&dense).unwrap().solve(&rhs).unwrap();
            for (a, b) in x.iter().zip(&y) {
                block_err = block_err.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }

    let mut eig_err = 0.0_f64;
    for case in 0..200 {
        let n = 2 + case % 6;
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let eig = eigenvalues_small(&a).unwrap();
        let roots = poly_roots(&char_poly(&a));
        let mut used = vec![false; n];
        for e in &eig {
            let z = Complex64::new(e.re, e.im);
            let (j, dist) = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, r)| (j, (r - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[j] = true;
            eig_err = eig_err.max(dist / z.norm().max(1.0));
        }
        let rho = roots.iter().fold(0.0_f64, |m, r| m.max(r.norm()));
        eig_err = eig_err.max((spectral_radius(&a).unwrap() - rho).abs() / rho.max(1.0));
    }

    // one outer step from γ = 0 on a linear problem is the Newton direction
    let mut newton_err = 0.0_f64;
    for s in 2..=6 {
        let me = Method::new(s + 1, s).unwrap();
        let sys = harmonic(7.0, 3);
        let (q0, p0) = ([0.3, -0.8, 1.1], [0.5, 0.2, -0.4]);
        let sp = StageProblem::new(&me, &sys, &q0, &p0, 0.1).unwrap();
        let zero = vec![0.0; s * 3];
        let step = |mode, nu| {
            let cfg = SolverConfig {
                max_outer: 1,
                nu,
                ..SolverConfig::with_mode(mode)
            };
            solve_from(&sp, &cfg, &zero).unwrap().0
        };
        let a = step(SolverMode::NewtonSplitting, 200);
        let b = step(SolverMode::NewtonDirect, 2);
        for (x, y) in a.iter().zip(&b) {
            newton_err = newton_err.max((x - y).abs() / y.abs().max(1.0));
        }
    }

    verdict(
        block_err <= 1e-10 && eig_err <= 1e-8 && newton_err <= 1e-10,
        format!("block solve {block_err:.1e}, eigenvalues {eig_err:.1e}, ν=200 vs Newton {newton_err:.1e}"),
    )
}

type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn main() -> ExitCode {
    let (cells, grid_time) = fpu_grid();
    let checks: Vec<(&str, Check<'_>)> = vec![
        ("auxiliary abscissae and d_s", Box::new(abscissae)),
        ("convergence parameters", Box::new(parameters)),
        ("P-convergence", Box::new(p_convergence)),
        ("tableau identities", Box::new(tableau_identities)),
        (
            "FPU divergence pattern",
            Box::new(|| divergence_pattern(&cells, grid_time)),
        ),
        ("k-independence", Box::new(|| k_independence(&cells))),
        ("energy conservation", Box::new(energy)),
        ("order", Box::new(order)),
        ("inner contraction", Box::new(contraction)),
        ("oracle equivalences", Box::new(oracles)),
    ];
    let mut failed = 0;
    for (n, (name, check)) in checks.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {:>2} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            n + 1,
            v.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
