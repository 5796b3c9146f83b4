//! Null laws used for calibration: the standard normal upper tail, the
//! Gumbel-type limit `G(x) = exp(-e^{-x/2} / sqrt(pi))` of the max-type
//! statistics, and the truncated Cauchy combination of two p-values.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `1 - Φ(x)`, computed through `erfc` so the upper tail keeps full relative
/// accuracy.
pub fn normal_sf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    T::lit(0.5 * libm::erfc(x * FRAC_1_SQRT_2))
}

/// `Φ(x)`.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let x = x.as_f64();
    T::lit(0.5 * libm::erfc(-x * FRAC_1_SQRT_2))
}

/// Limit law of the centred max-type statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GumbelLaw;

impl GumbelLaw {
    #[inline]
    fn rate<T: Real>(x: T) -> T {
        // e^{-x/2} / sqrt(pi)
        (-x / T::lit(2.0)).exp() / T::lit(PI).sqrt()
    }

    pub fn cdf<T: Real>(&self, x: T) -> T {
        (-Self::rate(x)).exp()
    }

    /// `1 - G(x)` without cancellation in the upper tail.
    pub fn sf<T: Real>(&self, x: T) -> T {
        -(-Self::rate(x)).exp_m1()
    }

    /// Upper `alpha` quantile `q` with `G(q) = 1 - alpha`.
    pub fn quantile<T: Real>(&self, alpha: T) -> Result<T> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::InvalidInput(format!(
                "significance level must lie in (0, 1), got {alpha}"
            )));
        }
        // -log(pi) - 2 log(-log(1 - alpha))
        let inner = -(-alpha).ln_1p();
        Ok(-T::lit(PI).ln() - T::lit(2.0) * inner.ln())
    }
}

pub fn gumbel_cdf<T: Real>(x: T) -> T {
    GumbelLaw.cdf(x)
}

pub fn gumbel_sf<T: Real>(x: T) -> T {
    GumbelLaw.sf(x)
}

pub fn gumbel_quantile<T: Real>(alpha: T) -> Result<T> {
    GumbelLaw.quantile(alpha)
}

/// One tangent term of the combination: `0.5 tan((0.5 - p)π)` for `p < 0.5`,
/// zero otherwise. Written as `0.5 / tan(pπ)` which is the same value but
/// stays accurate as `p → 0`.
fn cauchy_term<T: Real>(p: T) -> T {
    let half = T::lit(0.5);
    if p < half {
        half / (p * T::lit(PI)).tan()
    } else {
        T::zero()
    }
}

/// Combines two upper-tail p-values into one via the standard Cauchy law.
///
/// Each p-value contributes `0.5 tan((0.5 - p)π)` only when `p < 0.5`; the
/// combined p-value is `1 - F(sum)` with `F` the standard Cauchy CDF. A zero
/// input p-value sends the sum to `+∞` and the result to exactly `0`.
pub fn cauchy_combine<T: Real>(p1: T, p2: T) -> Result<T> {
    for p in [p1, p2] {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidInput(format!(
                "p-value must lie in [0, 1], got {p}"
            )));
        }
    }
    if p1 == T::zero() || p2 == T::zero() {
        return Ok(T::zero());
    }
    let t = cauchy_term(p1) + cauchy_term(p2);
    Ok(cauchy_sf(t))
}

/// `1 - F(t)` for the standard Cauchy law.
pub fn cauchy_sf<T: Real>(t: T) -> T {
    let pi = T::lit(PI);
    if t > T::zero() {
        // atan(1/t)/π avoids cancellation for large t
        t.recip().atan() / pi
    } else {
        T::lit(0.5) - t.atan() / pi
    }
}
