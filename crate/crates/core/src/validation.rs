//! Independent oracles for the analytic privacy results.
//!
//! Monte Carlo work is split into fixed chunks of [`MC_CHUNK`] samples. Chunk
//! `k` draws from stream `k` of the seed, so any partition of chunks over
//! workers sums to the same counts as [`mc_tv_distance`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::geometry::{ball_volume, overlap_volume, sample_ball_into, sample_sphere_surface_into, BallSpec};
use crate::optimizer::{LossModel, Record};
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Samples per Monte Carlo chunk.
pub const MC_CHUNK: u64 = 1 << 16;

/// Tolerance of the surface-noise adversary's distance match.
pub const SURFACE_MATCH_TOLERANCE: f64 = 1e-9;

/// A proportion estimated by Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    /// `√(p̂(1-p̂)/samples)`.
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    pub fn from_proportion(successes: u64, samples: u64, seed: u64) -> Self {
        let p = successes as f64 / samples as f64;
        Self {
            value: p,
            standard_error: libm::sqrt(p * (1.0 - p) / samples as f64),
            samples,
            seed,
        }
    }

    /// `|value - analytic| / σ`, where σ is the larger of the plug-in
    /// standard error and the binomial standard error at `analytic`. The
    /// latter keeps the score meaningful when `p̂` lands on 0 or 1.
    pub fn z_score(&self, analytic: f64) -> f64 {
        let null_se = libm::sqrt(analytic * (1.0 - analytic) / self.samples as f64);
        let diff = (self.value - analytic).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.standard_error.max(null_se)
        }
    }

    pub fn agrees_with(&self, analytic: f64, k: f64) -> bool {
        self.z_score(analytic) <= k
    }
}

/// Chunk `(index, size)` pairs covering `samples`.
pub fn chunk_plan(samples: u64) -> impl Iterator<Item = (u64, u64)> {
    let full = samples / MC_CHUNK;
    let rest = samples % MC_CHUNK;
    (0..full)
        .map(|k| (k, MC_CHUNK))
        .chain((rest > 0).then_some((full, rest)))
}

fn tv_inputs(d: usize, delta_x: f64, radius: f64, samples: u64) -> Result<BallSpec> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be at least 1"));
    }
    if !(delta_x >= 0.0 && delta_x.is_finite()) {
        return Err(Error::domain("delta_x", delta_x, "finite delta_x >= 0"));
    }
    BallSpec::new(d, radius)
}

/// Number of draws from the ball at the origin that also fall inside the
/// ball centred at `delta_x · e₁`, for one chunk.
pub fn tv_chunk_hits(ball: &BallSpec, delta_x: f64, seed: u64, chunk: u64, count: u64) -> u64 {
    let mut rng = stream_rng(seed, chunk);
    let mut x = vec![0.0; ball.dim()];
    let r2 = ball.radius() * ball.radius();
    let mut hits = 0;
    for _ in 0..count {
        sample_ball_into(ball, &mut rng, &mut x);
        let shifted = x[0] - delta_x;
        let d2 = shifted * shifted + x[1..].iter().map(|v| v * v).sum::<f64>();
        if d2 <= r2 {
            hits += 1;
        }
    }
    hits
}

/// Monte Carlo total-variation distance between uniform balls whose centres
/// are `delta_x` apart: one minus the fraction of draws landing in both.
pub fn mc_tv_distance(d: usize, delta_x: f64, radius: f64, samples: u64, seed: u64) -> Result<MCEstimate> {
    let ball = tv_inputs(d, delta_x, radius, samples)?;
    let hits: u64 = chunk_plan(samples)
        .map(|(k, n)| tv_chunk_hits(&ball, delta_x, seed, k, n))
        .sum();
    Ok(tv_estimate(hits, samples, seed))
}

/// Builds the estimate from a hit count produced by [`tv_chunk_hits`].
pub fn tv_estimate(hits: u64, samples: u64, seed: u64) -> MCEstimate {
    MCEstimate::from_proportion(samples - hits, samples, seed)
}

/// Checks argument validity for a parallel caller of [`tv_chunk_hits`].
pub fn tv_ball(d: usize, delta_x: f64, radius: f64, samples: u64) -> Result<BallSpec> {
    tv_inputs(d, delta_x, radius, samples)
}

/// Overlap volume of two unit balls `delta_x` apart, as computed by the
/// library and by the elementary formula for `d ≤ 3`.
pub fn closed_form_overlap_check(d: usize, delta_x: f64) -> Result<(f64, f64)> {
    if !(1..=3).contains(&d) {
        return Err(Error::domain("d", d as f64, "d in {1, 2, 3}"));
    }
    if !(0.0..=2.0).contains(&delta_x) {
        return Err(Error::domain("delta_x", delta_x, "0 <= delta_x <= 2"));
    }
    let r = 1.0f64;
    let analytic = overlap_volume(&BallSpec::unit(d)?, delta_x)?;
    let closed = match d {
        1 => 2.0 * r - delta_x,
        2 => {
            2.0 * r * r * libm::acos(delta_x / (2.0 * r))
                - delta_x / 2.0 * libm::sqrt((4.0 * r * r - delta_x * delta_x).max(0.0))
        }
        _ => {
            let h = r - delta_x / 2.0;
            2.0 * PI * h * h * (3.0 * r - h) / 3.0
        }
    };
    Ok((analytic, closed))
}

/// Relative agreement of an `(analytic, closed_form)` pair; values below
/// `1e-14` in magnitude count as zero.
pub fn overlap_pair_agrees(pair: (f64, f64), rel_tol: f64) -> bool {
    let (a, c) = pair;
    if a.abs() < 1e-14 && c.abs() < 1e-14 {
        return true;
    }
    (a - c).abs() <= rel_tol * a.abs().max(c.abs())
}

/// Largest componentwise deviation between the model gradient and a central
/// difference of the model value, relative to `max(1, |analytic|, |numeric|)`.
pub fn grad_check(model: &dyn LossModel, w: &[f64], record: &Record, step: f64) -> Result<f64> {
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::domain("step", step, "0 < step <= 1e-3"));
    }
    let d = model.parameter_dim();
    if w.len() != d {
        return Err(Error::Invalid("parameter length must equal the model dimension"));
    }
    let mut g = vec![0.0; d];
    model.gradient(w, record, &mut g);
    let mut probe = w.to_vec();
    let mut worst = 0.0f64;
    for k in 0..d {
        probe[k] = w[k] + step;
        let up = model.value(&probe, record);
        probe[k] = w[k] - step;
        let down = model.value(&probe, record);
        probe[k] = w[k];
        let numeric = (up - down) / (2.0 * step);
        let scale = g[k].abs().max(numeric.abs()).max(1.0);
        worst = worst.max((numeric - g[k]).abs() / scale);
    }
    Ok(worst)
}

fn distinguisher_inputs(d: usize, delta_x: f64, samples: u64) -> Result<BallSpec> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be at least 1"));
    }
    if !(delta_x > 0.0 && delta_x < 2.0) {
        return Err(Error::domain("delta_x", delta_x, "0 < delta_x < 2"));
    }
    BallSpec::unit(d)
}

/// Runs the membership game: each round picks database 0 (centre at the
/// origin) or 1 (centre at `delta_x · e₁`) by a fair coin, releases centre
/// plus noise, and lets `attribute` name a database from the output (or
/// `None` for a coin-flip guess). Returns the fraction of correct guesses.
fn identification_game<N, A>(ball: &BallSpec, delta_x: f64, samples: u64, seed: u64, mut noise: N, attribute: A) -> f64
where
    N: FnMut(&BallSpec, &mut crate::rng::StreamRng, &mut [f64]),
    A: Fn(&[f64]) -> Option<bool>,
{
    let mut rng = stream_rng(seed, 0);
    let mut out = vec![0.0; ball.dim()];
    let mut correct = 0u64;
    for _ in 0..samples {
        let second: bool = rng.random();
        noise(ball, &mut rng, &mut out);
        if second {
            out[0] += delta_x;
        }
        let guess = match attribute(&out) {
            Some(g) => g,
            None => rng.random(),
        };
        if guess == second {
            correct += 1;
        }
    }
    correct as f64 / samples as f64
}

fn distances(out: &[f64], delta_x: f64) -> (f64, f64) {
    let tail: f64 = out[1..].iter().map(|v| v * v).sum();
    let d0 = libm::sqrt(out[0] * out[0] + tail);
    let s = out[0] - delta_x;
    let d1 = libm::sqrt(s * s + tail);
    (d0, d1)
}

/// Identification rate of the distance-matching adversary against outputs
/// perturbed by noise on the unit sphere.
pub fn surface_noise_distinguisher(d: usize, delta_x: f64, samples: u64, seed: u64) -> Result<f64> {
    let ball = distinguisher_inputs(d, delta_x, samples)?;
    Ok(identification_game(&ball, delta_x, samples, seed, sample_sphere_surface_into, |out| {
        let (d0, d1) = distances(out, delta_x);
        let on0 = (d0 - 1.0).abs() <= SURFACE_MATCH_TOLERANCE;
        let on1 = (d1 - 1.0).abs() <= SURFACE_MATCH_TOLERANCE;
        match (on0, on1) {
            (true, false) => Some(false),
            (false, true) => Some(true),
            _ => None,
        }
    }))
}

/// The same adversary against unit-ball noise: an output inside only one
/// ball is attributed to it; the overlap is a coin flip. The expected rate
/// is `δ + (1 - δ)/2`.
pub fn ball_noise_distinguisher(d: usize, delta_x: f64, samples: u64, seed: u64) -> Result<f64> {
    let ball = distinguisher_inputs(d, delta_x, samples)?;
    Ok(identification_game(&ball, delta_x, samples, seed, sample_ball_into, |out| {
        let (d0, d1) = distances(out, delta_x);
        match (d0 <= 1.0, d1 <= 1.0) {
            (true, false) => Some(false),
            (false, true) => Some(true),
            _ => None,
        }
    }))
}

/// Empirical `E[nnᵀ]` of ball samples with entrywise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoments {
    pub dim: usize,
    /// Row-major `dim × dim`.
    pub mean: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub max_norm: f64,
}

impl SecondMoments {
    /// Entries `(i, j)` whose deviation from `radius²/(d+2) · I` exceeds
    /// `k` standard errors.
    pub fn outliers(&self, radius: f64, k: f64) -> Vec<(usize, usize)> {
        let diag = radius * radius / (self.dim as f64 + 2.0);
        let mut bad = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let idx = i * self.dim + j;
                let want = if i == j { diag } else { 0.0 };
                if (self.mean[idx] - want).abs() > k * self.standard_error[idx] {
                    bad.push((i, j));
                }
            }
        }
        bad
    }
}

pub fn ball_second_moments(spec: &BallSpec, draws: u64, seed: u64) -> Result<SecondMoments> {
    if draws < 2 {
        return Err(Error::Invalid("need at least two draws"));
    }
    let d = spec.dim();
    let mut s1 = vec![0.0; d * d];
    let mut s2 = vec![0.0; d * d];
    let mut x = vec![0.0; d];
    let mut max_norm = 0.0f64;
    for (chunk, count) in chunk_plan(draws) {
        let mut rng = stream_rng(seed, chunk);
        for _ in 0..count {
            sample_ball_into(spec, &mut rng, &mut x);
            max_norm = max_norm.max(crate::geometry::norm(&x));
            for i in 0..d {
                for j in 0..d {
                    let p = x[i] * x[j];
                    s1[i * d + j] += p;
                    s2[i * d + j] += p * p;
                }
            }
        }
    }
    let n = draws as f64;
    let mean: Vec<f64> = s1.iter().map(|s| s / n).collect();
    let standard_error = s2
        .iter()
        .zip(&mean)
        .map(|(s, m)| libm::sqrt((s / n - m * m).max(0.0) * n / (n - 1.0) / n))
        .collect();
    Ok(SecondMoments {
        dim: d,
        mean,
        standard_error,
        max_norm,
    })
}

/// `1 - V_overlap / V_ball`: the per-step δ by way of geometry.
pub fn geometric_delta(d: usize, delta_x: f64, radius: f64) -> Result<f64> {
    let spec = BallSpec::new(d, radius)?;
    Ok(1.0 - overlap_volume(&spec, delta_x)? / ball_volume(&spec))
}
