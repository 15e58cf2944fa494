//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pwarx_cli::model_file::load_model;
use pwarx_core::benchmark::{generate_example, run_montecarlo, MonteCarloReport, Task};
use pwarx_core::coord_descent::{assign_modes, fit_pwarx, HyperParams, RegularizerKind};
use pwarx_core::data::{build_regressors, Dataset};
use pwarx_core::metrics::snr_db;
use pwarx_core::model::ModeSequence;
use pwarx_core::prox::{project_l1_ball, prox_linf};
use pwarx_core::separator::{separator_objective, SeparatorProblem};
use pwarx_core::solvers::{solve_elastic_net, solve_ridge, solve_ridge_linf, RegressionProblem, SolverSettings};

const RUNS: usize = 20;
const SAMPLES: usize = 2000;
const RESTARTS: usize = 5;

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

fn desk_params() -> HyperParams {
    HyperParams {
        restarts: RESTARTS,
        ..HyperParams::default()
    }
}

// ---------------------------------------------------------------- 1-3

fn k_selection(report: &MonteCarloReport) -> Verdict {
    let hits = report.outcomes().filter(|o| o.k == 3).count();
    let frac = hits as f64 / RUNS as f64;
    let hist: Vec<String> = report.histogram().iter().map(|((_, v), c)| format!("K={v}:{c}")).collect();
    verdict(
        frac >= 0.9,
        format!(
            "K*=3 in {hits}/{RUNS} runs ({:.0}%, need >= 90%); {} ; failures {}",
            100.0 * frac,
            hist.join(" "),
            report.failures()
        ),
    )
}

fn parameter_accuracy(report: &MonteCarloReport) -> Verdict {
    let rows = report.parameter_table();
    let n = report.successful().len();
    if n == 0 {
        return verdict(false, "no successful runs to aggregate");
    }
    let worst_mean = rows.iter().map(|r| (r.mean - r.truth).abs()).fold(0.0, f64::max);
    let worst_std = rows.iter().map(|r| r.std).fold(0.0, f64::max);
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| (r.mean - r.truth).abs() > 0.05 || r.std > 0.1)
        .map(|r| format!("mode {} {}: {:.3}±{:.3} (true {:.2})", r.group + 1, r.coefficient, r.mean, r.std, r.truth))
        .collect();
    verdict(
        bad.is_empty(),
        format!(
            "{n} runs; max |mean-true| {worst_mean:.4} (<= 0.05), max std {worst_std:.4} (<= 0.1){}",
            if bad.is_empty() { String::new() } else { format!("; out of tolerance: {}", bad.join(", ")) }
        ),
    )
}

fn partition_accuracy(report: &MonteCarloReport) -> Verdict {
    let rows = report.boundary_table();
    if rows.iter().all(|r| r.count == 0) {
        return verdict(false, "no normalized boundaries available");
    }
    let worst = rows.iter().map(|r| (r.mean - r.truth).abs()).fold(0.0, f64::max);
    let shown: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.3}±{:.3}", r.mean, r.std))
        .collect();
    verdict(
        worst <= 0.2,
        format!("max |mean-true| {worst:.4} (<= 0.2); means±std {}", shown.join(" ")),
    )
}

// ---------------------------------------------------------------- 4

fn order_selection(report: &MonteCarloReport) -> Verdict {
    let in_range = |v: usize| v == 1 || v == 2;
    let na_ok = report.outcomes().filter(|o| in_range(o.n_a)).count();
    let nb_ok = report.outcomes().filter(|o| in_range(o.n_b)).count();
    let mut beyond = 0.0f64;
    for o in report.outcomes() {
        for th in o.model.theta_y() {
            for v in th[1..o.n_a].iter().chain(&th[o.n_a + 1..o.n_a + o.n_b]) {
                beyond = beyond.max(v.abs());
            }
        }
    }
    let table_beyond = report
        .parameter_table()
        .iter()
        .filter(|r| r.truth == 0.0)
        .map(|r| r.mean.abs())
        .fold(0.0, f64::max);
    let hist: Vec<String> = report.histogram().iter().map(|((q, v), c)| format!("{q}={v}:{c}")).collect();
    let pass = na_ok as f64 >= 0.9 * RUNS as f64 && nb_ok as f64 >= 0.9 * RUNS as f64 && beyond <= 0.05;
    verdict(
        pass,
        format!(
            "n_a in {{1,2}} {na_ok}/{RUNS}, n_b in {{1,2}} {nb_ok}/{RUNS} (need >= 90% each); \
             max |coef| beyond lag 1 over all refits {beyond:.4} (<= 0.05), max |table mean| {table_beyond:.4}; {}",
            hist.join(" ")
        ),
    )
}

// ---------------------------------------------------------------- 5

fn snr() -> Verdict {
    let values: Vec<f64> = (0..20)
        .map(|seed| {
            let g = generate_example(SAMPLES, seed).unwrap();
            snr_db(g.data.y(), &g.noise).unwrap()
        })
        .collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    verdict(
        lo >= 14.5 && hi <= 17.5,
        format!("SNR range over 20 seeds [{lo:.2}, {hi:.2}] dB (within [14.5, 17.5])"),
    )
}

// ---------------------------------------------------------------- 6

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<(Vec<f64>, f64)> {
    (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y = rng.gen_range(-3.0..3.0);
            (row, y)
        })
        .collect()
}

/// Zooming grid search for a convex function on a box around the origin.
fn grid_min(f: &dyn Fn(&[f64]) -> f64, d: usize, radius: f64) -> f64 {
    let n: usize = if d == 1 { 201 } else { 41 };
    let mut center = vec![0.0; d];
    let mut half = radius;
    let mut best = f(&center);
    for _ in 0..80 {
        let step = 2.0 * half / (n - 1) as f64;
        let mut arg = center.clone();
        let total = n.pow(d as u32);
        for idx in 0..total {
            let mut p = vec![0.0; d];
            let mut rest = idx;
            for (j, pj) in p.iter_mut().enumerate() {
                *pj = center[j] - half + step * (rest % n) as f64;
                rest /= n;
            }
            let v = f(&p);
            if v < best {
                best = v;
                arg = p;
            }
        }
        center = arg;
        half = 4.0 * step;
    }
    best
}

fn solver_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = SolverSettings::default();

    let mut moreau = 0.0f64;
    for _ in 0..200 {
        let d = rng.gen_range(1..12);
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let tau = rng.gen_range(0.01..10.0);
        let p = prox_linf(&v, tau);
        let q: Vec<f64> = v.iter().map(|x| x / tau).collect();
        let proj = project_l1_ball(&q, 1.0);
        for i in 0..d {
            moreau = moreau.max((p[i] + tau * proj[i] - v[i]).abs());
        }
    }

    let mut reduction = 0.0f64;
    for _ in 0..30 {
        let d = rng.gen_range(1..6);
        let n = rng.gen_range(5..40);
        let rows = random_rows(&mut rng, n, d);
        let p = RegressionProblem::from_rows(rows, d, rng.gen_range(0.01..1.0), 0.0).unwrap();
        let exact = solve_ridge(&p).unwrap();
        for th in [
            solve_ridge_linf(&p, &s, None).unwrap().theta,
            solve_elastic_net(&p, &s, None).unwrap().theta,
        ] {
            for (a, b) in th.iter().zip(&exact) {
                reduction = reduction.max((a - b).abs());
            }
        }
    }

    let mut grid_gap = 0.0f64;
    for trial in 0..20 {
        let d = 1 + trial % 2;
        let n = rng.gen_range(3..30);
        let rows = random_rows(&mut rng, n, d);
        let mu = rng.gen_range(0.01..1.0);
        let nu = rng.gen_range(0.0..5.0);
        let p = RegressionProblem::from_rows(rows, d, mu, nu).unwrap();
        let radius = 2.0 * solve_ridge(&p).unwrap().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let linf = solve_ridge_linf(&p, &s, None).unwrap().theta;
        let en = solve_elastic_net(&p, &s, None).unwrap().theta;
        let g1 = grid_min(&|t| p.ridge_linf_objective(t), d, radius);
        let g2 = grid_min(&|t| p.elastic_net_objective(t), d, radius);
        grid_gap = grid_gap
            .max((p.ridge_linf_objective(&linf) - g1) / g1.abs().max(1e-12))
            .max((p.elastic_net_objective(&en) - g2) / g2.abs().max(1e-12));
    }

    let mut fd = 0.0f64;
    for _ in 0..20 {
        let k = rng.gen_range(2..5);
        let d = rng.gen_range(2..5);
        let n = rng.gen_range(5..40);
        let mut ext = Vec::new();
        for _ in 0..n {
            ext.extend((0..d - 1).map(|_| rng.gen_range(-2.0..2.0)));
            ext.push(1.0);
        }
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let p = SeparatorProblem::new(&ext, d, &labels, k, rng.gen_range(1e-3..1.0)).unwrap();
        let th: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let (_, g) = separator_objective(&th, &p).unwrap();
        let h = 1e-6;
        let scale = g.iter().flatten().fold(1e-8f64, |m, v| m.max(v.abs()));
        for a in 0..k {
            for b in 0..d {
                let mut plus = th.clone();
                plus[a][b] += h;
                let mut minus = th.clone();
                minus[a][b] -= h;
                let num = (separator_objective(&plus, &p).unwrap().0 - separator_objective(&minus, &p).unwrap().0) / (2.0 * h);
                fd = fd.max((num - g[a][b]).abs() / scale);
            }
        }
    }

    let pass = moreau <= 1e-10 && reduction <= 1e-6 && grid_gap <= 1e-6 && fd <= 1e-5;
    verdict(
        pass,
        format!(
            "Moreau residual {moreau:.1e} (<= 1e-10); nu=0 vs ridge {reduction:.1e} (<= 1e-6); \
             grid-oracle relative gap {grid_gap:.1e} (<= 1e-6); separator gradient FD error {fd:.1e} (<= 1e-5, 20 instances)"
        ),
    )
}

// ---------------------------------------------------------------- 7

fn brute_force_labels(
    set: &pwarx_core::data::RegressorSet,
    ty: &[Vec<f64>],
    tx: &[Vec<f64>],
    rho: f64,
) -> Vec<usize> {
    let k = ty.len();
    (0..set.len())
        .map(|i| {
            let x = set.extended_row(i);
            let y = set.targets()[i];
            let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
            let mut best = (f64::INFINITY, 0);
            for s in 0..k {
                let mut cost = (y - dot(&ty[s])).powi(2);
                for j in 0..k {
                    if j != s {
                        cost += rho * (dot(&tx[j]) - dot(&tx[s]) + 1.0).max(0.0).powi(2);
                    }
                }
                if cost < best.0 {
                    best = (cost, s);
                }
            }
            best.1
        })
        .collect()
}

fn coordinate_descent() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_rise, mut fixed_fail, mut brute_fail, mut converged) = (0.0f64, 0, 0, 0);
    for trial in 0..50 {
        let t = rng.gen_range(20..=200);
        let k = rng.gen_range(1..=4);
        let (n_a, n_b) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let mut y = vec![0.0; t];
        for i in 1..t {
            let a = if y[i - 1] > 0.0 { 0.5 } else { -0.4 };
            y[i] = a * y[i - 1] + u[i - 1].abs().min(2.0) + rng.gen_range(-0.5..0.5);
        }
        let data = Dataset::new(u, y).unwrap();
        let set = build_regressors(&data, n_a, n_b).unwrap();
        let reg = match trial % 3 {
            0 => RegularizerKind::RidgeOnly { mu: 0.1 },
            1 => RegularizerKind::RidgeLinf { mu: 0.1, nu: 0.9 },
            _ => RegularizerKind::ElasticNet { mu: 0.1, nu: 0.9 },
        };
        let h = HyperParams {
            reg,
            rho: rng.gen_range(0.1..2.0),
            ..HyperParams::default()
        };
        let s0 = ModeSequence::new((0..set.len()).map(|_| rng.gen_range(0..k)).collect(), k).unwrap();
        let fit = fit_pwarx(&set, &s0, &h).unwrap();
        for w in fit.objective_trace.windows(2) {
            let slack = h.solver.tol * w[0].abs().max(1.0);
            worst_rise = worst_rise.max((w[1] - w[0] - slack) / w[0].abs().max(1.0));
        }
        let (ty, tx) = (fit.model.theta_y(), fit.model.theta_x());
        let again = assign_modes(&set, ty, tx, h.rho).unwrap();
        if fit.converged {
            converged += 1;
            if again != fit.modes {
                fixed_fail += 1;
            }
        }
        if again.labels() != brute_force_labels(&set, ty, tx, h.rho).as_slice() {
            brute_fail += 1;
        }
        let rand_y: Vec<Vec<f64>> = (0..k).map(|_| (0..set.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let rand_x: Vec<Vec<f64>> = (0..k).map(|_| (0..set.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        if assign_modes(&set, &rand_y, &rand_x, h.rho).unwrap().labels()
            != brute_force_labels(&set, &rand_y, &rand_x, h.rho).as_slice()
        {
            brute_fail += 1;
        }
    }
    verdict(
        worst_rise <= 0.0 && fixed_fail == 0 && brute_fail == 0,
        format!(
            "50 instances: max step increase beyond slack {:.1e} (<= 0); fixed-point failures {fixed_fail}/{converged} converged; \
             brute-force mismatches {brute_fail}/100",
            worst_rise.max(0.0)
        ),
    )
}

// ---------------------------------------------------------------- 8

fn csv_pipeline(dir: &Path) -> Verdict {
    let bin = env!("CARGO_BIN_EXE_pwarx");
    let d = |p: &str| dir.join(p).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["generate", "--T", "1000", "--seed", "11", "--out-dir", &d("gen")],
        vec!["select-k", "--data", &d("gen/data.csv"), "--restarts", "2", "--out-dir", &d("sk")],
        vec!["select-order", "--data", &d("gen/data.csv"), "--k", "3", "--n-max", "3", "--restarts", "2", "--out-dir", &d("so")],
        vec!["simulate", "--model", &d("sk/model.txt"), "--data", &d("gen/data.csv"), "--out-dir", &d("sim")],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in &steps {
        let out = Command::new(bin).args(args).output().unwrap();
        if !out.status.success() {
            return verdict(
                false,
                format!("`pwarx {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)),
            );
        }
    }
    let models: Vec<String> = ["sk", "so"]
        .iter()
        .filter_map(|m| load_model(&dir.join(m).join("model.txt")).ok())
        .map(|m| format!("K={} n_a={} n_b={}", m.num_modes(), m.n_a(), m.n_b()))
        .collect();
    verdict(
        models.len() == 2 && dir.join("sim/predictions.csv").exists(),
        format!("generate -> select-k / select-order -> simulate completed; model files: {}", models.join(", ")),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let h = desk_params();
    eprintln!("running K-selection Monte Carlo ({RUNS} runs, T={SAMPLES}, N={RESTARTS})");
    let k_report = run_montecarlo(Task::SelectK, RUNS, SAMPLES, &h).expect("monte carlo");
    eprintln!("running order-selection Monte Carlo ({RUNS} runs, T={SAMPLES}, N={RESTARTS})");
    let order_report = run_montecarlo(Task::SelectOrder, RUNS, SAMPLES, &h).expect("monte carlo");

    let results = [
        ("K-selection recovery", k_selection(&k_report)),
        ("local-parameter accuracy (unknown K)", parameter_accuracy(&k_report)),
        ("partition accuracy", partition_accuracy(&k_report)),
        ("order-selection shrinkage", order_selection(&order_report)),
        ("SNR reproduction", snr()),
        ("subproblem-solver oracle suite", solver_oracles()),
        ("coordinate-descent monotonicity and fixed point", coordinate_descent()),
        ("CSV pipeline smoke test", csv_pipeline(tmp.path())),
    ];

    println!();
    for (i, (name, v)) in results.iter().enumerate() {
        println!("criterion {} {} {name}: {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!();
    println!("K-selection parameter table:\n{}", k_report.parameter_csv());
    println!("K-selection boundary table:\n{}", k_report.boundary_csv());
    println!("order-selection histogram:\n{}", order_report.histogram_csv());
    let failed = results.iter().filter(|(_, v)| !v.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
