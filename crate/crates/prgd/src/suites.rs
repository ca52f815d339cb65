//! Oracle suites driven by `prgd validate`.

use std::fmt;

use anyhow::Result;
use clap::ValueEnum;
use prgd_core::accountant::{per_step_delta, PrivacySpec};
use prgd_core::optimizer::{builtin_losses, synthetic_dataset, LossKind};
use prgd_core::rng::stream_rng;
use prgd_core::validation::{
    ball_noise_distinguisher, closed_form_overlap_check, grad_check, overlap_pair_agrees,
    surface_noise_distinguisher,
};
use rand::Rng;

use crate::parallel;

pub const TV_DIMS: [usize; 6] = [1, 2, 3, 5, 11, 21];
pub const TV_DELTAS: [f64; 5] = [0.2, 0.6, 1.0, 1.4, 1.8];
pub const SURFACE_CASES: [(usize, f64); 4] = [(2, 0.5), (2, 1.0), (3, 0.5), (3, 1.0)];
/// Monte Carlo agreement threshold in standard errors.
pub const SIGMAS: f64 = 3.0;
pub const SURFACE_MIN_RATE: f64 = 0.9999;
/// Ball-noise identification must stay below this rate.
pub const BALL_MAX_RATE: f64 = 0.99;
pub const GRADCHECK_STEP: f64 = 1e-6;
pub const GRADCHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Tv,
    Overlap,
    Gradcheck,
    Surface,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub suite: &'static str,
    pub case: String,
    pub analytic: f64,
    pub estimate: f64,
    pub standard_error: Option<f64>,
    /// Deviation in standard errors, for Monte Carlo cases.
    pub z: Option<f64>,
    pub pass: bool,
}

impl fmt::Display for CaseResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<9} {:<22} analytic={:<20} estimate={:<22}",
            self.suite,
            self.case,
            format!("{:.12}", self.analytic),
            format!("{:.12}", self.estimate)
        )?;
        match self.standard_error {
            Some(se) => write!(f, " se={se:.3e}")?,
            None => write!(f, " se=-        ")?,
        }
        write!(f, " {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

fn delta(d: usize, dx: f64) -> Result<f64> {
    Ok(per_step_delta(&PrivacySpec::single_step(d, dx)?)?)
}

/// Monte Carlo TV distance against the analytic per-step δ on the
/// `TV_DIMS × TV_DELTAS` grid. Case `i` uses seed `seed + i`.
pub fn tv_suite(samples: u64, seed: u64, workers: usize) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for (i, (d, dx)) in TV_DIMS
        .iter()
        .flat_map(|&d| TV_DELTAS.iter().map(move |&dx| (d, dx)))
        .enumerate()
    {
        let analytic = delta(d, dx)?;
        let est = parallel::mc_tv_distance(d, dx, 1.0, samples, seed.wrapping_add(i as u64), workers)?;
        out.push(CaseResult {
            suite: "tv",
            case: format!("d={d} dx={dx}"),
            analytic,
            estimate: est.value,
            standard_error: Some(est.standard_error),
            z: Some(est.z_score(analytic)),
            pass: est.agrees_with(analytic, SIGMAS),
        });
    }
    Ok(out)
}

/// Library overlap volume against elementary formulas, d = 1..3 on a
/// 100-point grid over `[0, 2]`.
pub fn overlap_suite() -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for d in 1..=3 {
        for i in 0..100 {
            let dx = 2.0 * f64::from(i) / 99.0;
            let pair = closed_form_overlap_check(d, dx)?;
            out.push(CaseResult {
                suite: "overlap",
                case: format!("d={d} dx={dx:.6}"),
                analytic: pair.0,
                estimate: pair.1,
                standard_error: None,
            z: None,
                pass: overlap_pair_agrees(pair, 1e-10),
            });
        }
    }
    Ok(out)
}

/// Finite-difference checks of every built-in loss at random parameters,
/// plus the factorization saddle.
pub fn gradcheck_suite(seed: u64) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    let mut rng = stream_rng(seed, 2);
    for &kind in builtin_losses() {
        let feature_dim = if kind == LossKind::ScalarFactorization { 1 } else { 3 };
        let model = kind.model(feature_dim)?;
        let data = synthetic_dataset(kind, 10, feature_dim, 0.3, seed)?;
        for (i, rec) in data.records().iter().enumerate() {
            let w: Vec<f64> = (0..model.parameter_dim())
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let dev = grad_check(model.as_ref(), &w, rec, GRADCHECK_STEP)?;
            out.push(CaseResult {
                suite: "gradcheck",
                case: format!("{} #{i}", kind.name()),
                analytic: 0.0,
                estimate: dev,
                standard_error: None,
            z: None,
                pass: dev <= GRADCHECK_TOL,
            });
        }
    }
    let model = LossKind::ScalarFactorization.model(1)?;
    let data = synthetic_dataset(LossKind::ScalarFactorization, 5, 1, 0.3, seed)?;
    for (i, rec) in data.records().iter().enumerate() {
        let dev = grad_check(model.as_ref(), &[0.0, 0.0], rec, GRADCHECK_STEP)?;
        out.push(CaseResult {
            suite: "gradcheck",
            case: format!("saddle #{i}"),
            analytic: 0.0,
            estimate: dev,
            standard_error: None,
            z: None,
            pass: dev <= 1e-6,
        });
    }
    Ok(out)
}

/// The distance-matching adversary against surface noise (must win) and
/// against ball noise (must match `δ + (1-δ)/2` and stay below
/// [`BALL_MAX_RATE`]).
pub fn surface_suite(samples: u64, seed: u64) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    for (i, &(d, dx)) in SURFACE_CASES.iter().enumerate() {
        let s = seed.wrapping_add(i as u64);
        let rate = surface_noise_distinguisher(d, dx, samples, s)?;
        out.push(CaseResult {
            suite: "surface",
            case: format!("sphere d={d} dx={dx}"),
            analytic: 1.0,
            estimate: rate,
            standard_error: None,
            z: None,
            pass: rate >= SURFACE_MIN_RATE,
        });
        let delta = delta(d, dx)?;
        let expected = delta + (1.0 - delta) / 2.0;
        let se = (expected * (1.0 - expected) / samples as f64).sqrt();
        let rate = ball_noise_distinguisher(d, dx, samples, s)?;
        out.push(CaseResult {
            suite: "surface",
            case: format!("ball d={d} dx={dx}"),
            analytic: expected,
            estimate: rate,
            standard_error: Some(se),
            z: Some((rate - expected).abs() / se),
            pass: (rate - expected).abs() <= SIGMAS * se && rate < BALL_MAX_RATE,
        });
    }
    Ok(out)
}

pub fn run_suite(suite: Suite, samples: u64, seed: u64, workers: usize) -> Result<Vec<CaseResult>> {
    Ok(match suite {
        Suite::Tv => tv_suite(samples, seed, workers)?,
        Suite::Overlap => overlap_suite()?,
        Suite::Gradcheck => gradcheck_suite(seed)?,
        Suite::Surface => surface_suite(samples, seed)?,
        Suite::All => {
            let mut all = overlap_suite()?;
            all.extend(gradcheck_suite(seed)?);
            all.extend(surface_suite(samples, seed)?);
            all.extend(tv_suite(samples, seed, workers)?);
            all
        }
    })
}
