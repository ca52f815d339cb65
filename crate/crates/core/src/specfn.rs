//! Special functions behind the privacy formulas.
//!
//! [`reg_inc_beta`] is evaluated with the modified Lentz continued fraction,
//! switching to the complementary form `1 - I_{1-z}(b, a)` past
//! `z = (a + 1) / (a + b + 2)` where the fraction converges slowly.

use crate::{Error, Result};

/// Convergence threshold on successive continued-fraction convergents.
pub const CF_TOLERANCE: f64 = 1e-15;
/// Iteration cap for the continued fraction.
pub const CF_MAX_ITERATIONS: usize = 300;

const TINY: f64 = 1e-300;

/// Shape parameters `(a, b)` of a beta function, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    a: f64,
    b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain("a", a, "a > 0"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::domain("b", b, "b > 0"));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `(b, a)`.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
        }
    }

    /// Parameters of the per-step privacy formula, `(1/2, (d + 1)/2)`.
    pub fn for_dimension(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("d", 0.0, "d >= 1"));
        }
        Self::new(0.5, (d as f64 + 1.0) / 2.0)
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("x", x, "x > 0"));
    }
    Ok(libm::lgamma(x))
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    let p = BetaParams::new(a, b)?;
    Ok(ln_beta_unchecked(p))
}

fn ln_beta_unchecked(p: BetaParams) -> f64 {
    libm::lgamma(p.a) + libm::lgamma(p.b) - libm::lgamma(p.a + p.b)
}

/// `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(libm::exp)
}

/// Regularized incomplete beta function `I_z(a, b)` for `z ∈ [0, 1]`.
///
/// Exactly 0 at `z = 0` and exactly 1 at `z = 1`.
pub fn reg_inc_beta(z: f64, p: BetaParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain("z", z, "0 <= z <= 1"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return Ok(1.0);
    }
    let (a, b) = (p.a, p.b);
    // ln of z^a (1-z)^b / B(a,b), shared by both branches.
    let ln_front = a * libm::log(z) + b * libm::log1p(-z) - ln_beta_unchecked(p);
    let front = libm::exp(ln_front);
    let value = if z < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(z, a, b)? / a
    } else {
        1.0 - front * beta_fraction(1.0 - z, b, a)? / b
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;

    for m in 1..=CF_MAX_ITERATIONS {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        h *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let step = d * c;
        h *= step;

        if (step - 1.0).abs() < CF_TOLERANCE {
            return Ok(h);
        }
    }
    Err(Error::Accuracy {
        z: x,
        a,
        b,
        iterations: CF_MAX_ITERATIONS,
    })
}

/// Per-step δ from the terminating series, valid for odd `d` only:
/// `(Δx/2) Σ_{k=0}^{(d-1)/2} (1/2)_k (1 - (Δx/2)²)^k / k!`.
pub fn series_delta_odd_d(delta_x: f64, d: usize) -> Result<f64> {
    if d.is_multiple_of(2) {
        return Err(Error::domain("d", d as f64, "odd d >= 1"));
    }
    if !(0.0..=2.0).contains(&delta_x) {
        return Err(Error::domain("delta_x", delta_x, "0 <= delta_x <= 2"));
    }
    let half = delta_x / 2.0;
    let q = 1.0 - half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=(d - 1) / 2 {
        let k = k as f64;
        // (1/2)_k / k! as a running product.
        term *= (k - 0.5) / k * q;
        sum += term;
    }
    Ok(half * sum)
}

/// `d/dz I_z(1/2, (d+1)/2) = (1 - z)^{(d-1)/2} z^{-1/2} / B(1/2, (d+1)/2)`
/// on the open interval `0 < z < 1`.
pub fn reg_inc_beta_derivative(z: f64, d: usize) -> Result<f64> {
    let p = BetaParams::for_dimension(d)?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::domain("z", z, "0 < z < 1"));
    }
    let exponent = (d as f64 - 1.0) / 2.0;
    let ln_value = exponent * libm::log1p(-z) - 0.5 * libm::log(z) - ln_beta_unchecked(p);
    Ok(libm::exp(ln_value))
}
