use libm::erfc;

use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Gaussian upper-tail probability `Q(x) = P(Z > x)`, `Z ~ N(0, 1)`.
///
/// Evaluated as `erfc(x/√2)/2` so the upper tail keeps full relative
/// precision.
pub fn q_function(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        1.0
    } else {
        0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// `ln Q(x)`, finite for every finite `x`.
///
/// Beyond `x = 8` this uses `Q(x) = φ(x)·M(x)` with the Mills ratio `M`
/// from its continued fraction, so it stays accurate long after `Q`
/// underflows.
pub fn ln_q_function(x: f64) -> f64 {
    if x < 0.0 {
        return (-q_function(-x)).ln_1p();
    }
    if x <= 8.0 {
        return q_function(x).ln();
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
}

/// `M(x) = 1/(x + 1/(x + 2/(x + 3/(x + …))))`, valid for `x > 0`.
fn mills_ratio(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    // Modified Lentz on b0 + a1/(b1 + a2/(b2 + …)) with b_k = x, a_k = k-1 (a1 = 1).
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Exponential integral `E1(x) = ∫ₓ^∞ e^{−t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive(x)?;
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok(e1_continued_fraction_scaled(x) * (-x).exp())
    }
}

/// `e^x·E1(x)`, which stays finite where `E1` underflows.
pub fn exp_scaled_e1(x: f64) -> Result<f64> {
    check_positive(x)?;
    if x <= 1.0 {
        Ok(e1_series(x) * x.exp())
    } else {
        Ok(e1_continued_fraction_scaled(x))
    }
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::param("x", format!("E1 needs x > 0, got {x}")))
    }
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn e1_continued_fraction_scaled(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Exponentially scaled modified Bessel function `e^{−x}·I0(x)`, `x ≥ 0`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * kf);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..100 {
            let kf = k as f64;
            let ratio = (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
            if ratio >= 1.0 {
                break;
            }
            term *= ratio;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_at_zero_and_infinities() {
        assert_eq!(q_function(0.0), 0.5);
        assert_eq!(q_function(f64::INFINITY), 0.0);
        assert_eq!(q_function(f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn ln_q_is_continuous_at_switch() {
        let below = ln_q_function(8.0);
        let above = ln_q_function(8.0 + 1e-12);
        assert!((below - above).abs() < 1e-9 * below.abs());
    }

    #[test]
    fn e1_rejects_non_positive() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
        assert!(exp_scaled_e1(0.0).is_err());
    }

    #[test]
    fn e1_branches_meet() {
        let left = e1_series(1.0);
        let right = e1_continued_fraction_scaled(1.0) * (-1.0f64).exp();
        assert!((left - right).abs() < 1e-13);
    }

    #[test]
    fn i0_branches_meet() {
        let x: f64 = 30.0;
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            sum += term;
        }
        let series = sum * (-x).exp();
        assert!((bessel_i0_scaled(30.0) - series).abs() < 1e-14);
        // mpmath, 30 digits, on both sides of the branch switch.
        assert!((bessel_i0_scaled(30.0) - 0.073_145_946_482_237_3).abs() < 1e-15);
        assert!((bessel_i0_scaled(30.000_000_001) - 0.073_145_946_481_007_68).abs() < 1e-15);
        assert_eq!(bessel_i0_scaled(0.0), 1.0);
    }
}
