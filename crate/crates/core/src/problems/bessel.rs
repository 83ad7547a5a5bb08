//! Closed-form unforced solution for `Φ = ½‖x‖²` started at rest from `t = 0`.
//!
//! With `ν = (α − 1)/2` the solution is `x(t) = Λ_ν(t) x0` where
//! `Λ_ν(t) = 2^ν Γ(ν + 1) J_ν(t) / t^ν = Σ_m (−1)^m (t²/4)^m / (m! (ν+1)_m)`.
//! The alternating series has terms of size up to `e^t`, so it is summed in
//! exact binary fixed point and rounded to `f64` once at the end.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const FRAC_BITS: u32 = 320;
const MAX_TERMS: usize = 100_000;
/// Magnitude below which a decreasing tail term stops the summation.
const TAIL_BOUND: f64 = 1e-30;

fn one() -> BigInt {
    BigInt::from(1u8) << FRAC_BITS
}

/// Exact fixed-point image of a finite `f64` (truncated below `2^-FRAC_BITS`).
fn to_fixed(v: f64) -> BigInt {
    if v == 0.0 {
        return BigInt::zero();
    }
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    let shift = exp + FRAC_BITS as i64;
    let mag = BigInt::from(mant);
    let mag = if shift >= 0 {
        mag << shift as usize
    } else {
        mag >> (-shift) as usize
    };
    if v < 0.0 {
        -mag
    } else {
        mag
    }
}

fn from_fixed(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(FRAC_BITS as i32))
}

/// `Λ_ν(t)` for `ν > −1`, `t ≥ 0`.
fn profile_series(nu_fixed: &BigInt, t: f64) -> Result<f64> {
    let unit = one();
    let tf = to_fixed(t);
    let q = (&tf * &tf) >> (FRAC_BITS + 2);
    let np1 = nu_fixed + &unit;
    let thresh = to_fixed(TAIL_BOUND);
    let mut term = unit.clone();
    let mut sum = unit.clone();
    for m in 0..MAX_TERMS {
        let k = BigInt::from(m as u64 + 1);
        let denom = &k * (&np1 + BigInt::from(m as u64) * &unit);
        term = -((&term * &q) / denom);
        sum += &term;
        // Past m + 1 > t the term ratio is below one and decreasing, so the
        // alternating remainder is bounded by the last term.
        if (m as f64 + 1.0) > t && term.abs() < thresh {
            return Ok(from_fixed(&sum));
        }
        if term.is_zero() {
            return Ok(from_fixed(&sum));
        }
    }
    Err(Error::SeriesBudget(MAX_TERMS))
}

fn validate(alpha: f64, t: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "damping exponent must be > 0, got {alpha}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and ≥ 0, got {t}"
        )));
    }
    Ok(())
}

fn order_fixed(alpha: f64) -> BigInt {
    (to_fixed(alpha) - one()) >> 1u32
}

/// `(Λ_ν(t), Λ_ν'(t))` with `ν = (α − 1)/2`, using `Λ_ν' = −t Λ_{ν+1} / (2(ν+1))`.
pub fn bessel_profile(alpha: f64, t: f64) -> Result<(f64, f64)> {
    validate(alpha, t)?;
    let nu = order_fixed(alpha);
    let value = profile_series(&nu, t)?;
    let next = profile_series(&(&nu + one()), t)?;
    let nu_f = (alpha - 1.0) / 2.0;
    Ok((value, -t * next / (2.0 * (nu_f + 1.0))))
}

/// Closed-form position at time `t` for `x(0) = x0`, `ẋ(0) = 0`.
pub fn bessel_solution(alpha: f64, x0: &[f64], t: f64) -> Result<Vec<f64>> {
    let (lam, _) = bessel_profile(alpha, t)?;
    Ok(x0.iter().map(|v| lam * v).collect())
}

/// Closed-form `(x(t), ẋ(t))`.
pub fn bessel_state(alpha: f64, x0: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lam, dlam) = bessel_profile(alpha, t)?;
    Ok((
        x0.iter().map(|v| lam * v).collect(),
        x0.iter().map(|v| dlam * v).collect(),
    ))
}

/// Bessel function of the first kind `J_ν(t)` for `ν > −1`, `t ≥ 0`.
pub fn bessel_j(nu: f64, t: f64) -> Result<f64> {
    if !(nu > -1.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "order must be > -1, got {nu}"
        )));
    }
    validate(1.0, t)?;
    let lam = profile_series(&to_fixed(nu), t)?;
    if t == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    let log_scale = nu * (t / 2.0).ln() - statrs::function::gamma::ln_gamma(nu + 1.0);
    Ok(lam * log_scale.exp())
}
