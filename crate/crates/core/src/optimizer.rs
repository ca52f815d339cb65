//! Perturbed gradient descent over per-example losses.
//!
//! Each step picks one record uniformly at random, takes its gradient at the
//! current iterate (optionally clipped to norm `G`), adds a fresh draw from
//! the ball of radius `R`, and moves against the sum:
//!
//! ```text
//! w_{t+1} = w_t - η (∇ℓ(w_t; x_i, y_i) + n_t)
//! ```

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::accountant::{overall_delta_with_source, DeltaReport, PrivacySpec, SensitivitySource};
use crate::geometry::{norm, sample_ball_into, BallSpec};
use crate::rng::stream_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub features: Vec<f64>,
    pub label: f64,
}

/// `N ≥ 1` records sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let first = records.first().ok_or(Error::Invalid("dataset has no records"))?;
        let feature_dim = first.features.len();
        if records.iter().any(|r| r.features.len() != feature_dim) {
            return Err(Error::Invalid("records have differing feature dimensions"));
        }
        Ok(Self {
            records,
            feature_dim,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }
}

/// A per-example loss `ℓ(w; x, y)` and its gradient in `w`.
pub trait LossModel {
    fn parameter_dim(&self) -> usize;

    fn value(&self, w: &[f64], record: &Record) -> f64;

    /// Writes `∇_w ℓ(w; record)` into `out` (length `parameter_dim()`).
    fn gradient(&self, w: &[f64], record: &Record, out: &mut [f64]);
}

/// Empirical risk `L(w) = (1/N) Σ ℓ(w; x_i, y_i)`.
pub fn full_loss(data: &Dataset, model: &dyn LossModel, w: &[f64]) -> f64 {
    let sum: f64 = data.records.iter().map(|r| model.value(w, r)).sum();
    sum / data.len() as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ℓ = (y - wᵀx)²`. Convex.
#[derive(Debug, Clone, Copy)]
pub struct LeastSquares {
    pub dim: usize,
}

impl LossModel for LeastSquares {
    fn parameter_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64], r: &Record) -> f64 {
        let res = r.label - dot(w, &r.features);
        res * res
    }

    fn gradient(&self, w: &[f64], r: &Record, out: &mut [f64]) {
        let res = r.label - dot(w, &r.features);
        for (g, x) in out.iter_mut().zip(&r.features) {
            *g = -2.0 * res * x;
        }
    }
}

/// `ℓ = (y - u·v·x)²` with `w = (u, v)` and scalar feature `x`.
///
/// The origin is stationary for every record. Its Hessian is
/// `-(2/N) Σ xᵢyᵢ [[0, 1], [1, 0]]` with eigenvalues `±(2/N)|Σ xᵢyᵢ|`, so it is
/// a strict saddle whenever `Σ xᵢyᵢ ≠ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarFactorization;

impl LossModel for ScalarFactorization {
    fn parameter_dim(&self) -> usize {
        2
    }

    fn value(&self, w: &[f64], r: &Record) -> f64 {
        let res = r.label - w[0] * w[1] * r.features[0];
        res * res
    }

    fn gradient(&self, w: &[f64], r: &Record, out: &mut [f64]) {
        let x = r.features[0];
        let res = r.label - w[0] * w[1] * x;
        out[0] = -2.0 * res * w[1] * x;
        out[1] = -2.0 * res * w[0] * x;
    }
}

/// Rank-one factorization observed one linear measurement at a time:
/// `ℓ = (y - (wᵀx)²)²`, where `y = ⟨xxᵀ, M⟩` measures the target matrix `M`
/// along `xxᵀ`. Averaged over isotropic `x` this is a rescaled
/// `‖M - wwᵀ‖²_F` plus a trace term; `w = 0` is stationary with Hessian
/// `-(4/N) Σ yᵢ xᵢxᵢᵀ`.
#[derive(Debug, Clone, Copy)]
pub struct RankOneFactorization {
    pub dim: usize,
}

impl LossModel for RankOneFactorization {
    fn parameter_dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64], r: &Record) -> f64 {
        let p = dot(w, &r.features);
        let res = r.label - p * p;
        res * res
    }

    fn gradient(&self, w: &[f64], r: &Record, out: &mut [f64]) {
        let p = dot(w, &r.features);
        let res = r.label - p * p;
        for (g, x) in out.iter_mut().zip(&r.features) {
            *g = -4.0 * res * p * x;
        }
    }
}

/// The built-in benchmark losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    LeastSquares,
    ScalarFactorization,
    RankOne,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::LeastSquares => "least_squares",
            LossKind::ScalarFactorization => "scalar_factorization",
            LossKind::RankOne => "rank_one",
        }
    }

    /// Instantiates the loss for data with `feature_dim` features.
    pub fn model(&self, feature_dim: usize) -> Result<Box<dyn LossModel + Send + Sync>> {
        if feature_dim == 0 {
            return Err(Error::Invalid("feature_dim must be at least 1"));
        }
        Ok(match self {
            LossKind::LeastSquares => Box::new(LeastSquares { dim: feature_dim }),
            LossKind::ScalarFactorization => {
                if feature_dim != 1 {
                    return Err(Error::Invalid("scalar_factorization needs feature_dim = 1"));
                }
                Box::new(ScalarFactorization)
            }
            LossKind::RankOne => Box::new(RankOneFactorization { dim: feature_dim }),
        })
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        builtin_losses()
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or(Error::Invalid("unknown loss name"))
    }
}

pub fn builtin_losses() -> &'static [LossKind] {
    &[
        LossKind::LeastSquares,
        LossKind::ScalarFactorization,
        LossKind::RankOne,
    ]
}

/// Synthetic records for a built-in loss.
///
/// Features are i.i.d. standard normal. Labels are `1ᵀx` (least squares and
/// scalar factorization) or `(1ᵀx)² / feature_dim` (rank one), plus
/// `label_noise` times a standard normal. Drawn from stream 1 of `seed`.
pub fn synthetic_dataset(
    kind: LossKind,
    n: usize,
    feature_dim: usize,
    label_noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1"));
    }
    if feature_dim == 0 {
        return Err(Error::Invalid("feature_dim must be at least 1"));
    }
    if !(label_noise >= 0.0 && label_noise.is_finite()) {
        return Err(Error::domain("label_noise", label_noise, "label_noise >= 0"));
    }
    let mut rng = stream_rng(seed, 1);
    let records = (0..n)
        .map(|_| {
            let features: Vec<f64> = (0..feature_dim).map(|_| rng.sample(StandardNormal)).collect();
            let s: f64 = features.iter().sum();
            let clean = match kind {
                LossKind::LeastSquares | LossKind::ScalarFactorization => s,
                LossKind::RankOne => s * s / feature_dim as f64,
            };
            let eps: f64 = rng.sample(StandardNormal);
            Record {
                features,
                label: clean + label_noise * eps,
            }
        })
        .collect();
    Dataset::new(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// η > 0.
    pub step_size: f64,
    /// T ≥ 1.
    pub steps: usize,
    /// R ≥ 0; zero disables the perturbation.
    pub noise_radius: f64,
    /// Per-example gradient clipping norm `G`, off when `None`.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::domain("step_size", self.step_size, "step_size > 0"));
        }
        if self.steps == 0 {
            return Err(Error::domain("steps", 0.0, "steps >= 1"));
        }
        if !(self.noise_radius >= 0.0 && self.noise_radius.is_finite()) {
            return Err(Error::domain("noise_radius", self.noise_radius, "noise_radius >= 0"));
        }
        if let Some(g) = self.clip_norm {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::domain("clip_norm", g, "clip_norm > 0"));
            }
        }
        Ok(())
    }
}

/// Scalars recorded for one iteration. `loss` is the full-data loss at the
/// iterate produced by this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based.
    pub step: usize,
    pub data_index: usize,
    pub loss: f64,
    /// Norm of the per-example gradient after clipping.
    pub grad_norm: f64,
    pub noise_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    dim: usize,
    initial: Vec<f64>,
    initial_loss: f64,
    records: Vec<StepRecord>,
    // Row-major, one row of `dim` per step.
    iterates: Vec<f64>,
    gradients: Vec<f64>,
    noise: Vec<f64>,
    /// `None` when the run used no noise.
    pub privacy: Option<DeltaReport>,
}

impl RunTrace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn initial_loss(&self) -> f64 {
        self.initial_loss
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    /// Iterate after step `i` (0-based index into `records()`).
    pub fn iterate(&self, i: usize) -> &[f64] {
        &self.iterates[i * self.dim..(i + 1) * self.dim]
    }

    /// Clipped per-example gradient used at step `i`.
    pub fn gradient(&self, i: usize) -> &[f64] {
        &self.gradients[i * self.dim..(i + 1) * self.dim]
    }

    pub fn noise(&self, i: usize) -> &[f64] {
        &self.noise[i * self.dim..(i + 1) * self.dim]
    }

    pub fn final_iterate(&self) -> &[f64] {
        self.iterate(self.len() - 1)
    }

    pub fn final_loss(&self) -> f64 {
        self.records[self.len() - 1].loss
    }

    /// Every iterate visited, starting with the initial point.
    pub fn visited(&self) -> impl Iterator<Item = &[f64]> {
        core::iter::once(self.initial.as_slice()).chain(self.iterates.chunks_exact(self.dim))
    }

    /// `‖w_T - w_0‖`.
    pub fn displacement(&self) -> f64 {
        let last = self.final_iterate();
        libm::sqrt(
            last.iter()
                .zip(&self.initial)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }
}

fn clip_in_place(g: &mut [f64], clip: Option<f64>) -> f64 {
    let n = norm(g);
    match clip {
        Some(limit) if n > limit => {
            let scale = limit / n;
            for x in g.iter_mut() {
                *x *= scale;
            }
            norm(g)
        }
        _ => n,
    }
}

/// Runs PrGD from `initial` and attaches the privacy report.
///
/// The report uses `Δx = 2G` when clipping is on; otherwise the empirical
/// sensitivity over every visited iterate. Randomness (record choice and
/// noise) comes from stream 0 of `config.seed`.
pub fn prgd_run(
    data: &Dataset,
    model: &dyn LossModel,
    config: &RunConfig,
    initial: &[f64],
) -> Result<RunTrace> {
    config.validate()?;
    let dim = model.parameter_dim();
    if dim == 0 || initial.len() != dim {
        return Err(Error::Invalid("initial point length must equal the parameter dimension"));
    }
    let n = data.len();
    let ball = if config.noise_radius > 0.0 {
        Some(BallSpec::new(dim, config.noise_radius)?)
    } else {
        None
    };
    let mut rng = stream_rng(config.seed, 0);

    let mut w = initial.to_vec();
    let mut g = vec![0.0; dim];
    let mut noise = vec![0.0; dim];
    let t_total = config.steps;
    let mut records = Vec::with_capacity(t_total);
    let mut iterates = Vec::with_capacity(t_total * dim);
    let mut gradients = Vec::with_capacity(t_total * dim);
    let mut noises = Vec::with_capacity(t_total * dim);
    let initial_loss = full_loss(data, model, &w);

    for t in 1..=t_total {
        let i = rng.random_range(0..n);
        model.gradient(&w, &data.records[i], &mut g);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                iteration: t,
            });
        }
        let grad_norm = clip_in_place(&mut g, config.clip_norm);
        match &ball {
            Some(b) => sample_ball_into(b, &mut rng, &mut noise),
            None => noise.fill(0.0),
        }
        for k in 0..dim {
            w[k] -= config.step_size * (g[k] + noise[k]);
        }
        let loss = full_loss(data, model, &w);
        if !loss.is_finite() || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "loss",
                iteration: t,
            });
        }
        records.push(StepRecord {
            step: t,
            data_index: i,
            loss,
            grad_norm,
            noise_norm: norm(&noise),
        });
        iterates.extend_from_slice(&w);
        gradients.extend_from_slice(&g);
        noises.extend_from_slice(&noise);
    }

    let mut trace = RunTrace {
        dim,
        initial: initial.to_vec(),
        initial_loss,
        records,
        iterates,
        gradients,
        noise: noises,
        privacy: None,
    };

    if config.noise_radius > 0.0 {
        let (delta_x, source) = match config.clip_norm {
            Some(limit) => (2.0 * limit, SensitivitySource::Certified),
            None => (
                estimate_sensitivity(data, model, trace.visited(), None),
                SensitivitySource::Empirical,
            ),
        };
        let spec = PrivacySpec::new(dim, delta_x, n, t_total, config.noise_radius)?;
        trace.privacy = Some(overall_delta_with_source(&spec, source)?);
    }
    Ok(trace)
}

/// Largest distance between per-example gradients of any two records, over
/// every probe point. With `clip_norm = Some(G)` the gradients are clipped
/// first and the result is capped at `2G`.
pub fn estimate_sensitivity<'a, I>(
    data: &Dataset,
    model: &dyn LossModel,
    probes: I,
    clip_norm: Option<f64>,
) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let dim = model.parameter_dim();
    let n = data.len();
    let mut grads = vec![0.0; n * dim];
    let mut worst2 = 0.0f64;
    for w in probes {
        for (rec, g) in data.records.iter().zip(grads.chunks_exact_mut(dim)) {
            model.gradient(w, rec, g);
            clip_in_place(g, clip_norm);
        }
        for i in 0..n {
            let gi = &grads[i * dim..(i + 1) * dim];
            for j in i + 1..n {
                let gj = &grads[j * dim..(j + 1) * dim];
                let d2: f64 = gi.iter().zip(gj).map(|(a, b)| (a - b) * (a - b)).sum();
                worst2 = worst2.max(d2);
            }
        }
    }
    let bound = libm::sqrt(worst2);
    match clip_norm {
        Some(limit) => bound.min(2.0 * limit),
        None => bound,
    }
}
