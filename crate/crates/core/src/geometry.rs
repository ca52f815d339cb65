//! Geometry of d-dimensional Euclidean balls.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::specfn::{reg_inc_beta, BetaParams};
use crate::{Error, Result};

/// A ball of dimension `dim` and positive `radius`, centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    dim: usize,
    radius: f64,
}

impl BallSpec {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dim", 0.0, "dim >= 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain("radius", radius, "0 < radius < inf"));
        }
        Ok(Self { dim, radius })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// A noise vector drawn from a ball or sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSample(Vec<f64>);

impl NoiseSample {
    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// `radius^d π^{d/2} / Γ(1 + d/2)`.
pub fn ball_volume(spec: &BallSpec) -> f64 {
    let d = spec.dim as f64;
    let ln_volume =
        d * libm::log(spec.radius) + 0.5 * d * libm::log(PI) - libm::lgamma(1.0 + 0.5 * d);
    libm::exp(ln_volume)
}

/// Volume of the cap cut off by a hyperplane at distance `a · radius` from
/// the centre, `½ V I_{1-a²}((d+1)/2, ½)`.
pub fn cap_volume(spec: &BallSpec, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain("a", a, "0 <= a <= 1"));
    }
    let p = BetaParams::new((spec.dim as f64 + 1.0) / 2.0, 0.5)?;
    let fraction = reg_inc_beta(1.0 - a * a, p)?;
    Ok(0.5 * ball_volume(spec) * fraction)
}

/// Volume of the intersection of two balls of this spec whose centres are
/// `delta_x` apart.
pub fn overlap_volume(spec: &BallSpec, delta_x: f64) -> Result<f64> {
    if !(delta_x >= 0.0) {
        return Err(Error::domain("delta_x", delta_x, "delta_x >= 0"));
    }
    if delta_x >= 2.0 * spec.radius {
        return Ok(0.0);
    }
    Ok(2.0 * cap_volume(spec, delta_x / (2.0 * spec.radius))?)
}

/// Fills `out` (length `spec.dim()`) with a standard-normal direction scaled to
/// `scale`. Retries the measure-zero all-zero draw.
fn fill_direction<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) -> f64 {
    loop {
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 0.0 {
            return n;
        }
    }
}

/// Writes a point uniform on the solid ball into `out`.
///
/// Gaussian direction scaled by `radius · U^{1/d}`. The result always has
/// squared norm at most `radius²`.
pub fn sample_ball_into<R: Rng + ?Sized>(spec: &BallSpec, rng: &mut R, out: &mut [f64]) {
    assert_eq!(out.len(), spec.dim, "output length must equal ball dimension");
    let n = fill_direction(out, rng);
    let u: f64 = rng.random();
    let scale = spec.radius * libm::pow(u, 1.0 / spec.dim as f64) / n;
    for x in out.iter_mut() {
        *x *= scale;
    }
    let r2 = spec.radius * spec.radius;
    // Rounding can push a point with U^{1/d} == 1 a few ulps outside.
    while out.iter().map(|x| x * x).sum::<f64>() > r2 {
        for x in out.iter_mut() {
            *x *= 1.0 - f64::EPSILON;
        }
    }
}

pub fn sample_ball<R: Rng + ?Sized>(spec: &BallSpec, rng: &mut R) -> NoiseSample {
    let mut v = vec![0.0; spec.dim];
    sample_ball_into(spec, rng, &mut v);
    NoiseSample(v)
}

/// Writes a point uniform on the sphere of radius `spec.radius()` into `out`.
pub fn sample_sphere_surface_into<R: Rng + ?Sized>(spec: &BallSpec, rng: &mut R, out: &mut [f64]) {
    assert_eq!(out.len(), spec.dim, "output length must equal ball dimension");
    let n = fill_direction(out, rng);
    for x in out.iter_mut() {
        *x = *x / n * spec.radius;
    }
}

pub fn sample_sphere_surface<R: Rng + ?Sized>(spec: &BallSpec, rng: &mut R) -> NoiseSample {
    let mut v = vec![0.0; spec.dim];
    sample_sphere_surface_into(spec, rng, &mut v);
    NoiseSample(v)
}
