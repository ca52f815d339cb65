//! `(0, δ)` accounting for gradient perturbation with ball noise.
//!
//! Adding noise uniform on a ball of radius `R` to two gradients at distance
//! `Δx` gives outputs whose total-variation distance is one minus the overlap
//! fraction of the two balls:
//!
//! ```text
//! δ = I_{s²}(1/2, (d+1)/2),   s = Δx / (2R)
//! ```
//!
//! Picking one of `N` records per step scales this to `δ/N`, and `T` steps
//! compose additively to `δ̂ = T·δ/N`, clamped at 1.

use alloc::vec::Vec;

use crate::specfn::{reg_inc_beta, BetaParams};
use crate::{Error, Result};

/// One accounting question: dimension, sensitivity, dataset size, step count
/// and noise radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySpec {
    dim: usize,
    delta_x: f64,
    dataset_size: usize,
    steps: usize,
    noise_radius: f64,
}

impl PrivacySpec {
    pub fn new(
        dim: usize,
        delta_x: f64,
        dataset_size: usize,
        steps: usize,
        noise_radius: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("d", 0.0, "d >= 1"));
        }
        if !(delta_x >= 0.0 && delta_x.is_finite()) {
            return Err(Error::domain("delta_x", delta_x, "finite delta_x >= 0"));
        }
        if dataset_size == 0 {
            return Err(Error::domain("n", 0.0, "n >= 1"));
        }
        if steps == 0 {
            return Err(Error::domain("t", 0.0, "t >= 1"));
        }
        if !(noise_radius > 0.0 && noise_radius.is_finite()) {
            return Err(Error::domain("radius", noise_radius, "0 < radius < inf"));
        }
        Ok(Self {
            dim,
            delta_x,
            dataset_size,
            steps,
            noise_radius,
        })
    }

    /// A single step on a single record with unit noise.
    pub fn single_step(dim: usize, delta_x: f64) -> Result<Self> {
        Self::new(dim, delta_x, 1, 1, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta_x(&self) -> f64 {
        self.delta_x
    }

    pub fn dataset_size(&self) -> usize {
        self.dataset_size
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn noise_radius(&self) -> f64 {
        self.noise_radius
    }

    /// `Δx < 2R`: the two noise balls overlap and δ < 1.
    pub fn is_nontrivial(&self) -> bool {
        self.delta_x < 2.0 * self.noise_radius
    }
}

/// Where the sensitivity `Δx` behind a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivitySource {
    /// Given by the caller.
    Supplied,
    /// `2G` from per-example gradient clipping at norm `G`.
    Certified,
    /// Largest gradient difference observed over the visited iterates.
    Empirical,
}

impl SensitivitySource {
    pub fn label(&self) -> &'static str {
        match self {
            SensitivitySource::Supplied => "supplied",
            SensitivitySource::Certified => "certified",
            SensitivitySource::Empirical => "empirical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaReport {
    pub per_step_delta: f64,
    /// `per_step_delta / N`.
    pub amplified_delta: f64,
    /// `min(1, (T/N) · per_step_delta)`.
    pub overall_delta: f64,
    /// Set when `overall_delta` was clamped at 1.
    pub saturated: bool,
    pub delta_x: f64,
    pub source: SensitivitySource,
}

/// Per-step δ: 1 when `Δx ≥ 2R`, else `I_{s²}(1/2, (d+1)/2)` with `s = Δx/(2R)`.
pub fn per_step_delta(spec: &PrivacySpec) -> Result<f64> {
    let s = spec.delta_x / (2.0 * spec.noise_radius);
    if s >= 1.0 {
        return Ok(1.0);
    }
    reg_inc_beta(s * s, BetaParams::for_dimension(spec.dim)?)
}

pub fn amplified_delta(spec: &PrivacySpec) -> Result<f64> {
    Ok(per_step_delta(spec)? / spec.dataset_size as f64)
}

pub fn overall_delta(spec: &PrivacySpec) -> Result<DeltaReport> {
    overall_delta_with_source(spec, SensitivitySource::Supplied)
}

pub fn overall_delta_with_source(
    spec: &PrivacySpec,
    source: SensitivitySource,
) -> Result<DeltaReport> {
    let per_step = per_step_delta(spec)?;
    let amplified = per_step / spec.dataset_size as f64;
    // (T/N)·δ: exact when T = N.
    let composed = (spec.steps as f64 / spec.dataset_size as f64) * per_step;
    let saturated = composed > 1.0;
    Ok(DeltaReport {
        per_step_delta: per_step,
        amplified_delta: amplified,
        overall_delta: if saturated { 1.0 } else { composed },
        saturated,
        delta_x: spec.delta_x,
        source,
    })
}

/// Noise radius `R` at which the per-step δ for `(d, Δx)` equals `target`.
///
/// δ falls strictly from 1 (as `R → Δx/2`) to 0 (as `R → ∞`); the root is
/// bracketed by doubling and then bisected to machine precision.
pub fn radius_for_target(d: usize, delta_x: f64, target: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::domain("d", 0.0, "d >= 1"));
    }
    if !(delta_x > 0.0 && delta_x.is_finite()) {
        return Err(Error::domain("delta_x", delta_x, "0 < delta_x < inf"));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::domain("target", target, "0 < target < 1"));
    }
    let delta_at = |r: f64| PrivacySpec::new(d, delta_x, 1, 1, r).and_then(|s| per_step_delta(&s));

    let mut lo = delta_x / 2.0;
    let mut hi = delta_x;
    let mut doublings = 0;
    while delta_at(hi)? > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2048 || !hi.is_finite() {
            return Err(Error::Convergence("no radius brackets the target"));
        }
    }
    // δ(lo) > target >= δ(hi)
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if delta_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (dlo, dhi) = (delta_at(lo)?, delta_at(hi)?);
    let r = if (dlo - target).abs() < (dhi - target).abs() {
        lo
    } else {
        hi
    };
    if r <= delta_x / 2.0 {
        return Err(Error::Convergence("radius collapsed onto delta_x / 2"));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub d: usize,
    pub delta_x: f64,
    pub delta: f64,
}

/// Per-step δ for every `(d, Δx)` pair, `d` outermost, in input order.
pub fn delta_curve(d_list: &[usize], delta_x_grid: &[f64], radius: f64) -> Result<Vec<CurveRow>> {
    if d_list.is_empty() {
        return Err(Error::Invalid("empty dimension list"));
    }
    if delta_x_grid.is_empty() {
        return Err(Error::Invalid("empty delta_x grid"));
    }
    let mut rows = Vec::with_capacity(d_list.len() * delta_x_grid.len());
    for &d in d_list {
        for &dx in delta_x_grid {
            let spec = PrivacySpec::new(d, dx, 1, 1, radius)?;
            rows.push(CurveRow {
                d,
                delta_x: dx,
                delta: per_step_delta(&spec)?,
            });
        }
    }
    Ok(rows)
}
