//! Acceptance criteria, one PASS/FAIL line each. Seeds are fixed.
//!
//! Run with `cargo test -p prgd --test acceptance`.

use std::fs;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use prgd::curve::read_csv;
use prgd::suites::{surface_suite, tv_suite, BALL_MAX_RATE, SIGMAS, SURFACE_MIN_RATE};
use prgd_core::accountant::{overall_delta, per_step_delta, radius_for_target, PrivacySpec};
use prgd_core::geometry::BallSpec;
use prgd_core::optimizer::{prgd_run, synthetic_dataset, LossKind, RunConfig};
use prgd_core::rng::stream_rng;
use prgd_core::specfn::{reg_inc_beta, reg_inc_beta_derivative, series_delta_odd_d, BetaParams};
use prgd_core::validation::{ball_second_moments, geometric_delta};
use rand::Rng;

type Outcome = Result<String, String>;

fn delta(d: usize, dx: f64) -> f64 {
    per_step_delta(&PrivacySpec::single_step(d, dx).unwrap()).unwrap()
}

/// `1 - δ`, computed directly so it keeps relative accuracy where δ ≈ 1.
fn tail(d: usize, dx: f64) -> f64 {
    let p = BetaParams::for_dimension(d).unwrap().swapped();
    reg_inc_beta(1.0 - dx * dx / 4.0, p).unwrap()
}

/// Strict `δ(d1, x1) < δ(d2, x2)`, compared through the tail when both are
/// above one half.
fn strictly_below(d1: usize, x1: f64, d2: usize, x2: f64) -> bool {
    let (a, b) = (delta(d1, x1), delta(d2, x2));
    if a > 0.5 && b > 0.5 {
        tail(d1, x1) > tail(d2, x2)
    } else {
        a < b
    }
}

fn grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| 2.0 * i as f64 / (points - 1) as f64)
        .collect()
}

fn prgd(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_prgd"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("PRGD_WORKERS", w),
        None => cmd.env_remove("PRGD_WORKERS"),
    };
    cmd.output().expect("spawn prgd")
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn c1() -> Outcome {
    let mut worst = 0.0f64;
    for dx in grid(200) {
        worst = worst.max((delta(1, dx) - dx / 2.0).abs());
    }
    if worst <= 1e-12 {
        Ok(format!("max |δ - Δx/2| = {worst:.2e}"))
    } else {
        Err(format!("max |δ - Δx/2| = {worst:.2e} > 1e-12"))
    }
}

fn c2() -> Outcome {
    let mut worst = (0.0f64, 0, 0.0);
    for d in 1..=25 {
        for dx in grid(40) {
            let err = (delta(d, dx) - geometric_delta(d, dx, 1.0).unwrap()).abs();
            if err > worst.0 {
                worst = (err, d, dx);
            }
        }
    }
    let (err, d, dx) = worst;
    let msg = format!("max deviation {err:.2e} at d={d} Δx={dx:.4}");
    if err <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c3() -> Outcome {
    let cases = tv_suite(1_000_000, 3, workers()).map_err(|e| e.to_string())?;
    let worst = cases
        .iter()
        .map(|c| c.z.unwrap())
        .fold(0.0, f64::max);
    let failed: Vec<&str> = cases.iter().filter(|c| !c.pass).map(|c| c.case.as_str()).collect();
    let msg = format!("{} cases, worst |z| = {worst:.2} (limit {SIGMAS})", cases.len());
    if failed.is_empty() && cases.len() == 30 {
        Ok(msg)
    } else {
        Err(format!("{msg}; failing: {failed:?}"))
    }
}

fn c4() -> Outcome {
    let mut worst = 0.0f64;
    for d in (1..=41).step_by(2) {
        for dx in grid(40) {
            worst = worst.max((series_delta_odd_d(dx, d).unwrap() - delta(d, dx)).abs());
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max |series - CF| = {worst:.2e}"))
    } else {
        Err(format!("max |series - CF| = {worst:.2e} > 1e-10"))
    }
}

fn c5() -> Outcome {
    let h = 1e-6;
    let g = grid(40);
    let mut worst = 0.0f64;
    for d in 1..=25 {
        for &dx in &g[1..g.len() - 1] {
            // dδ/dΔx = I'(z) · Δx/2 with z = (Δx/2)².
            let analytic = reg_inc_beta_derivative(dx * dx / 4.0, d).unwrap() * dx / 2.0;
            if !(analytic > 0.0) {
                return Err(format!("derivative {analytic} not positive at d={d} Δx={dx}"));
            }
            let fd = if delta(d, dx) > 0.5 {
                (tail(d, dx - h) - tail(d, dx + h)) / (2.0 * h)
            } else {
                (delta(d, dx + h) - delta(d, dx - h)) / (2.0 * h)
            };
            let rel = (fd - analytic).abs() / analytic;
            if rel > 1e-6 {
                return Err(format!("d={d} Δx={dx}: fd {fd} vs {analytic} (rel {rel:.2e})"));
            }
            worst = worst.max(rel);
        }
        for w in g.windows(2) {
            if !strictly_below(d, w[0], d, w[1]) {
                return Err(format!("δ not increasing for d={d} on [{}, {}]", w[0], w[1]));
            }
        }
    }
    Ok(format!("derivative positive, max relative FD error {worst:.2e}, δ strictly increasing"))
}

fn c6() -> Outcome {
    let dims = [1usize, 3, 7, 15, 31];
    let out = prgd(&["curve", "--d", "1,3,7,15,31", "--range", "0:2:0.01"], None);
    if out.status.code() != Some(0) {
        return Err(format!("curve exited with {:?}", out.status.code()));
    }
    let rows = read_csv(out.stdout.as_slice()).map_err(|e| e.to_string())?;
    let per_d = rows.len() / dims.len();
    if per_d != 201 || rows.len() != 201 * dims.len() {
        return Err(format!("expected 5 x 201 rows, got {}", rows.len()));
    }
    let curve = |k: usize| &rows[k * per_d..(k + 1) * per_d];
    // Values are printed to 12 significant digits, so two points that both
    // round to 1 cannot be told apart in the file.
    let saturated = |v: f64| v == 1.0;
    for (k, &d) in dims.iter().enumerate() {
        let c = curve(k);
        if c.iter().any(|r| r.d != d) {
            return Err(format!("rows for d={d} out of place"));
        }
        if c[0].delta != 0.0 || c[per_d - 1].delta != 1.0 {
            return Err(format!("d={d}: endpoints {} and {}", c[0].delta, c[per_d - 1].delta));
        }
        for w in c.windows(2) {
            let ok = w[0].delta < w[1].delta || (saturated(w[0].delta) && saturated(w[1].delta));
            if !ok {
                return Err(format!("d={d}: not increasing at Δx={}", w[1].delta_x));
            }
            if !strictly_below(d, w[0].delta_x, d, w[1].delta_x) {
                return Err(format!("d={d}: library δ not increasing at Δx={}", w[1].delta_x));
            }
        }
    }
    for k in 0..dims.len() - 1 {
        for i in 1..per_d - 1 {
            let (lo, hi) = (&curve(k)[i], &curve(k + 1)[i]);
            let ok = lo.delta < hi.delta || (saturated(lo.delta) && saturated(hi.delta));
            if !ok || !strictly_below(dims[k], lo.delta_x, dims[k + 1], hi.delta_x) {
                return Err(format!(
                    "d={} not below d={} at Δx={}",
                    dims[k],
                    dims[k + 1],
                    lo.delta_x
                ));
            }
        }
    }
    Ok(format!("{} rows: increasing in Δx, ordered in d, δ(0)=0, δ(2)=1", rows.len()))
}

fn c7() -> Outcome {
    let r = overall_delta(&PrivacySpec::new(1, 1.0, 100, 50, 1.0).unwrap()).unwrap();
    if r.overall_delta != 0.25 {
        return Err(format!("overall_delta(1, 1, 100, 50) = {:?}", r.overall_delta));
    }
    let mut rng = stream_rng(7, 0);
    for _ in 0..100 {
        let d = rng.random_range(1..=50);
        let radius = rng.random_range(0.1..10.0);
        let dx = rng.random_range(0.0..2.0 * radius);
        let n = rng.random_range(1..=100_000);
        let r = overall_delta(&PrivacySpec::new(d, dx, n, n, radius).unwrap()).unwrap();
        if r.overall_delta != r.per_step_delta {
            return Err(format!(
                "T=N={n}, d={d}, Δx={dx}, R={radius}: {:?} vs {:?}",
                r.overall_delta, r.per_step_delta
            ));
        }
    }
    Ok("overall(1,1,100,50) = 0.25; T=N exact for 100 random specs".into())
}

fn c8() -> Outcome {
    let mut rng = stream_rng(8, 0);
    let mut worst = 0.0f64;
    let mut worst_d1 = 0.0f64;
    for _ in 0..200 {
        let d = rng.random_range(1..=50);
        let dx = rng.random_range(0.01..5.0);
        let target = rng.random_range(0.001..0.999);
        let radius = radius_for_target(d, dx, target).map_err(|e| e.to_string())?;
        let got = per_step_delta(&PrivacySpec::new(d, dx, 1, 1, radius).unwrap()).unwrap();
        let err = (got - target).abs();
        if err > 1e-9 {
            return Err(format!("d={d} Δx={dx} t={target}: δ(R={radius}) = {got}"));
        }
        worst = worst.max(err);
        let exact = dx / (2.0 * target);
        let r1 = radius_for_target(1, dx, target).map_err(|e| e.to_string())?;
        let rel = (r1 - exact).abs() / exact;
        if rel > 1e-9 {
            return Err(format!("d=1 Δx={dx} t={target}: R={r1} vs {exact}"));
        }
        worst_d1 = worst_d1.max(rel);
    }
    Ok(format!("200 triples, max |δ - t| = {worst:.2e}; d=1 max rel error vs Δx/(2t) = {worst_d1:.2e}"))
}

fn c9() -> Outcome {
    let mut notes = Vec::new();
    for d in [1usize, 2, 3, 5, 11] {
        let spec = BallSpec::unit(d).unwrap();
        let m = ball_second_moments(&spec, 1_000_000, 9 + d as u64).map_err(|e| e.to_string())?;
        let bad = m.outliers(1.0, 3.0);
        if !bad.is_empty() {
            return Err(format!("d={d}: entries beyond 3 SE: {bad:?}"));
        }
        if m.max_norm > 1.0 {
            return Err(format!("d={d}: draw with norm {}", m.max_norm));
        }
        notes.push(format!("d={d} max_norm={:.6}", m.max_norm));
    }
    Ok(format!("E[nnᵀ] = I/(d+2) within 3 SE; {}", notes.join(", ")))
}

fn c10() -> Outcome {
    let kind = LossKind::ScalarFactorization;
    let model = kind.model(1).unwrap();
    let data = synthetic_dataset(kind, 50, 1, 0.1, 10).unwrap();
    let saddle = [0.0, 0.0];
    let mut escaped = 0;
    for seed in 0..100u64 {
        let cfg = RunConfig {
            step_size: 0.01,
            steps: 2000,
            noise_radius: 1.0,
            clip_norm: None,
            seed,
        };
        let trace = prgd_run(&data, model.as_ref(), &cfg, &saddle).map_err(|e| e.to_string())?;
        if trace.final_loss() <= trace.initial_loss() - 0.1 {
            escaped += 1;
        }
        let control = prgd_run(&data, model.as_ref(), &RunConfig { noise_radius: 0.0, ..cfg }, &saddle)
            .map_err(|e| e.to_string())?;
        if control.displacement() != 0.0 || control.final_iterate() != saddle {
            return Err(format!("R=0 control moved for seed {seed}"));
        }
    }
    let msg = format!("{escaped}/100 noisy runs reduced the loss by >= 0.1; R=0 control never moved");
    if escaped >= 90 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c11() -> Outcome {
    let cases = surface_suite(100_000, 11).map_err(|e| e.to_string())?;
    let (sphere, ball): (Vec<_>, Vec<_>) = cases.iter().partition(|c| c.case.starts_with("sphere"));
    let min_sphere = sphere.iter().map(|c| c.estimate).fold(1.0, f64::min);
    let max_ball = ball.iter().map(|c| c.estimate).fold(0.0, f64::max);
    let msg = format!(
        "sphere noise min rate {min_sphere:.6} (need >= {SURFACE_MIN_RATE}); ball noise max rate {max_ball:.4} (need < {BALL_MAX_RATE})"
    );
    if sphere.len() == 4 && ball.len() == 4 && min_sphere >= SURFACE_MIN_RATE && max_ball < BALL_MAX_RATE {
        Ok(msg)
    } else {
        Err(msg)
    }
}

const RUN_CONFIG: &str = r#"
loss = "scalar_factorization"

[data]
n = 50
feature_dim = 1
label_noise = 0.1
seed = 12

[run]
step_size = 0.01
steps = 2000
noise_radius = 1.0
seed = 12

[output]
trace = "run.trace"
"#;

fn c12() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, RUN_CONFIG).map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().unwrap();
    let trace = dir.path().join("run.trace");
    let csv = dir.path().join("curve.csv");
    let csv_arg = csv.to_str().unwrap();
    let curve_args = ["curve", "--d", "1,3,7,15,31", "--range", "0:2:0.01", "--out", csv_arg];

    let mut runs = Vec::new();
    for workers in [None, Some("4")] {
        let run = prgd(&["run", cfg], workers);
        let run_trace = fs::read(&trace).map_err(|e| e.to_string())?;
        let curve = prgd(&curve_args, workers);
        let curve_csv = fs::read(&csv).map_err(|e| e.to_string())?;
        let curve_stdout = prgd(&curve_args[..5], workers).stdout;
        if run.status.code() != Some(0) || curve.status.code() != Some(0) {
            return Err("run or curve failed".into());
        }
        runs.push((run.stdout, run_trace, curve_csv, curve_stdout));
    }
    let tv = |w| prgd(&["validate", "--suite", "tv", "--samples", "200000", "--seed", "12"], Some(w)).stdout;
    if runs[0] != runs[1] {
        return Err("repeated run/curve outputs differ".into());
    }
    if runs[0].2 != runs[0].3 {
        return Err("curve file differs from curve stdout".into());
    }
    if tv("1") != tv("3") {
        return Err("validate output depends on the worker count".into());
    }
    Ok(format!(
        "run summary, {}-byte trace and {}-byte curve CSV byte-identical across invocations",
        runs[0].1.len(),
        runs[0].2.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 12] = [
        ("d=1 closed form", Duration::from_secs(1), c1),
        ("δ vs geometric overlap", Duration::from_secs(5), c2),
        ("δ vs Monte Carlo TV", Duration::from_secs(120), c3),
        ("odd-d series vs continued fraction", Duration::from_secs(5), c4),
        ("derivative and monotonicity", Duration::from_secs(5), c5),
        ("δ curve shape", Duration::from_secs(5), c6),
        ("composition", Duration::from_secs(1), c7),
        ("radius inverse", Duration::from_secs(5), c8),
        ("sampler isotropy", Duration::from_secs(30), c9),
        ("saddle escape", Duration::from_secs(60), c10),
        ("surface-noise adversary", Duration::from_secs(30), c11),
        ("determinism", Duration::from_secs(30), c12),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(m) if elapsed <= budget => (true, m),
            Ok(m) => (false, format!("{m}; over time budget {budget:?}")),
            Err(m) => (false, m),
        };
        failures += usize::from(!pass);
        println!(
            "{} {:>2} {:<36} {:>8.3}s  {}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            elapsed.as_secs_f64(),
            detail
        );
    }
    println!("{} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
