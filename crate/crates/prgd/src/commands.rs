//! Subcommand implementations. Each returns the text for standard output or
//! a [`Failure`] carrying the exit code.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use prgd_core::accountant::{delta_curve, overall_delta, overall_delta_with_source, PrivacySpec, SensitivitySource};
use prgd_core::optimizer::{full_loss, prgd_run, synthetic_dataset, Dataset, LossKind, LossModel};

use crate::config::ExperimentConfig;
use crate::curve;
use crate::report::KeyValue;
use crate::suites::{run_suite, CaseResult, Suite};
use crate::trace::write_trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration; exit code 2.
    Usage(anyhow::Error),
    /// A check failed or the run itself failed; exit code 1.
    Failed(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Failed(_) => EXIT_FAILED,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Failed(e) => e,
        }
    }
}

type CmdResult<T = String> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn failed<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Failed(e.into())
}

pub fn account(d: usize, delta_x: f64, n: usize, t: usize, radius: f64) -> CmdResult {
    let spec = PrivacySpec::new(d, delta_x, n, t, radius).map_err(usage)?;
    if !spec.is_nontrivial() {
        return Err(usage(anyhow!(
            "delta-x = {delta_x} >= 2 * radius = {}: the noise balls are disjoint and delta saturates at 1",
            2.0 * radius
        )));
    }
    let report = overall_delta(&spec).map_err(failed)?;
    let mut kv = KeyValue::new();
    kv.int("d", d as u64)
        .num("delta_x", delta_x)
        .int("n", n as u64)
        .int("t", t as u64)
        .num("radius", radius)
        .delta_report(&report);
    Ok(kv.finish().to_string())
}

/// Writes the δ curve CSV to `out`, or returns it when `out` is `None`.
pub fn curve(dims: &str, range: &str, radius: f64, out: Option<&Path>) -> CmdResult {
    let dims = curve::parse_dims(dims).map_err(usage)?;
    let grid = curve::parse_range(range).map_err(usage)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(usage(anyhow!("radius must be positive")));
    }
    if let Some(&bad) = grid.iter().find(|&&x| !(0.0..=2.0 * radius).contains(&x)) {
        return Err(usage(anyhow!(
            "delta-x value {bad} outside [0, {}]",
            2.0 * radius
        )));
    }
    let rows = delta_curve(&dims, &grid, radius).map_err(failed)?;
    match out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))
                .map_err(failed)?;
            curve::write_csv(BufWriter::new(file), &rows)
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(failed)?;
            Ok(format!("wrote {} rows to {}\n", rows.len(), path.display()))
        }
        None => {
            let mut buf = Vec::new();
            curve::write_csv(&mut buf, &rows).map_err(failed)?;
            Ok(String::from_utf8(buf).expect("csv is ascii"))
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub trace: Option<PathBuf>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub step_size: Option<f64>,
    pub noise_radius: Option<f64>,
}

/// Closed-form minimum of the full loss, where one exists in closed form.
pub fn optimum_loss(kind: LossKind, data: &Dataset, model: &dyn LossModel) -> Option<f64> {
    match kind {
        LossKind::LeastSquares => {
            let (n, p) = (data.len(), data.feature_dim());
            let x = nalgebra::DMatrix::from_fn(n, p, |i, j| data.records()[i].features[j]);
            let y = nalgebra::DVector::from_fn(n, |i, _| data.records()[i].label);
            let w = (x.transpose() * &x).cholesky()?.solve(&(x.transpose() * &y));
            Some(full_loss(data, model, w.as_slice()))
        }
        LossKind::ScalarFactorization => {
            let n = data.len() as f64;
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for r in data.records() {
                let x = r.features[0];
                sxy += x * r.label;
                sxx += x * x;
                syy += r.label * r.label;
            }
            (sxx > 0.0).then(|| (syy - sxy * sxy / sxx) / n)
        }
        LossKind::RankOne => None,
    }
}

pub fn run(config_path: &Path, overrides: &RunOverrides) -> CmdResult {
    let mut cfg = ExperimentConfig::load(config_path).map_err(usage)?;
    if let Some(s) = overrides.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = overrides.steps {
        cfg.run.steps = t;
    }
    if let Some(eta) = overrides.step_size {
        cfg.run.step_size = eta;
    }
    if let Some(r) = overrides.noise_radius {
        cfg.run.noise_radius = r;
    }
    cfg.validate().map_err(usage)?;
    let trace_path = overrides
        .trace
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.trace.clone()))
        .ok_or_else(|| usage(anyhow!("no trace path: pass --trace or set output.trace")))?;

    let kind = cfg.loss_kind().map_err(usage)?;
    let model = kind.model(cfg.data.feature_dim).map_err(usage)?;
    let data = synthetic_dataset(kind, cfg.data.n, cfg.data.feature_dim, cfg.data.label_noise, cfg.data.seed)
        .map_err(usage)?;
    let w0 = cfg.initial_point().map_err(usage)?;
    let run_cfg = cfg.run_config();
    let mut trace = prgd_run(&data, model.as_ref(), &run_cfg, &w0)
        .map_err(|e| failed(anyhow!("run failed: {e}")))?;

    if let (Some(p), true) = (&cfg.privacy, run_cfg.noise_radius > 0.0) {
        let spec = PrivacySpec::new(model.parameter_dim(), p.delta_x, data.len(), run_cfg.steps, run_cfg.noise_radius)
            .map_err(usage)?;
        trace.privacy = Some(overall_delta_with_source(&spec, SensitivitySource::Supplied).map_err(failed)?);
    }

    let file = File::create(&trace_path)
        .with_context(|| format!("cannot create {}", trace_path.display()))
        .map_err(failed)?;
    write_trace(BufWriter::new(file), &trace)
        .with_context(|| format!("cannot write {}", trace_path.display()))
        .map_err(failed)?;

    let mut kv = KeyValue::new();
    kv.text("loss", kind.name())
        .int("n", data.len() as u64)
        .int("steps", run_cfg.steps as u64)
        .num("initial_loss", trace.initial_loss())
        .num("final_loss", trace.final_loss())
        .num("displacement", trace.displacement());
    if let Some(opt) = optimum_loss(kind, &data, model.as_ref()) {
        kv.num("optimum_loss", opt);
    }
    kv.text("trace", &trace_path.display().to_string());
    match &trace.privacy {
        Some(r) => {
            kv.delta_report(r);
        }
        None => {
            kv.text("privacy", "none (noise_radius = 0)");
        }
    }
    Ok(kv.finish().to_string())
}

/// Runs the suites, writing one line per case to `out`. Fails with exit
/// code 1 when any case fails.
pub fn validate<W: Write>(suite: Suite, samples: u64, seed: u64, workers: usize, mut out: W) -> CmdResult<Vec<CaseResult>> {
    if samples == 0 {
        return Err(usage(anyhow!("samples must be at least 1")));
    }
    let cases = run_suite(suite, samples, seed, workers).map_err(failed)?;
    let failures = cases.iter().filter(|c| !c.pass).count();
    let io = |e: io::Error| failed(e);
    for c in &cases {
        writeln!(out, "{c}").map_err(io)?;
    }
    writeln!(out, "{} cases, {} passed, {} failed", cases.len(), cases.len() - failures, failures).map_err(io)?;
    if failures > 0 {
        return Err(failed(anyhow!("{failures} validation case(s) failed")));
    }
    Ok(cases)
}
