//! Normal and truncated-exponential probabilities, in linear and log scale.
//!
//! Log-scale versions stay accurate far into the tails, where the linear
//! versions underflow to zero.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `ln(norm_cdf(x))`, accurate for very negative `x`.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > 5.0 {
        return (-norm_cdf(-x)).ln_1p();
    }
    if x > -30.0 {
        return norm_cdf(x).ln();
    }
    // Asymptotic series of the Mills ratio.
    let z2 = 1.0 / (x * x);
    let series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2 + 105.0 * z2 * z2 * z2 * z2;
    -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// `ln(1 - e^d)` for `d <= 0`.
fn log1m_exp(d: f64) -> f64 {
    if d > -std::f64::consts::LN_2 {
        (-d.exp_m1()).ln()
    } else {
        (-d.exp()).ln_1p()
    }
}

/// Mass of `[lo, hi]` under `N(mean, sd^2)`. A zero `sd` is a point mass,
/// counted in `[lo, hi)`.
pub fn normal_mass(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if sd == 0.0 {
        return if lo <= mean && mean < hi { 1.0 } else { 0.0 };
    }
    let zl = (lo - mean) / sd;
    let zh = (hi - mean) / sd;
    if zl >= 0.0 {
        // Both edges in the upper tail: subtract upper-tail probabilities.
        (norm_cdf(-zl) - norm_cdf(-zh)).max(0.0)
    } else {
        (norm_cdf(zh) - norm_cdf(zl)).max(0.0)
    }
}

/// `ln` of [`normal_mass`], finite whenever the true mass is positive.
pub fn log_normal_mass(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    if sd == 0.0 {
        return normal_mass(lo, hi, mean, sd).ln();
    }
    let zl = (lo - mean) / sd;
    let zh = (hi - mean) / sd;
    if zh <= 0.0 {
        let a = log_norm_cdf(zh);
        let b = log_norm_cdf(zl);
        a + log1m_exp(b - a)
    } else if zl >= 0.0 {
        let a = log_norm_cdf(-zl);
        let b = log_norm_cdf(-zh);
        a + log1m_exp(b - a)
    } else {
        normal_mass(lo, hi, mean, sd).ln()
    }
}

/// Mass of `[lo, hi]` under the exponential law with mean parameter `theta`
/// truncated to `[0, bound]`.
pub fn trunc_exp_mass(lo: f64, hi: f64, theta: f64, bound: f64) -> f64 {
    let l = lo.clamp(0.0, bound);
    let h = hi.clamp(0.0, bound);
    if h <= l {
        return 0.0;
    }
    (-l / theta).exp() * (-(-(h - l) / theta).exp_m1()) / (-(-bound / theta).exp_m1())
}

/// `ln` of [`trunc_exp_mass`].
pub fn log_trunc_exp_mass(lo: f64, hi: f64, theta: f64, bound: f64) -> f64 {
    let l = lo.clamp(0.0, bound);
    let h = hi.clamp(0.0, bound);
    if h <= l {
        return f64::NEG_INFINITY;
    }
    -l / theta + (-(-(h - l) / theta).exp_m1()).ln() - (-(-bound / theta).exp_m1()).ln()
}

/// Mean of the exponential law with parameter `theta` truncated to `[0, bound]`.
pub fn trunc_exp_mean(theta: f64, bound: f64) -> f64 {
    let k = bound / theta;
    theta * (1.0 - k * (-k).exp() / (-(-k).exp_m1()))
}

/// Parameter of the exponential law on `[0, bound]` with the given mean.
/// Requires `0 < mean < bound / 2`.
pub fn trunc_exp_rate_for_mean(mean: f64, bound: f64) -> Option<f64> {
    if !(mean > 0.0 && mean < bound / 2.0) {
        return None;
    }
    // The mean increases in theta from 0 to bound / 2.
    let (mut lo, mut hi) = (mean * 1e-3, mean);
    while trunc_exp_mean(hi, bound) < mean {
        hi *= 2.0;
        if hi > 1e12 * bound {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if trunc_exp_mean(mid, bound) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
