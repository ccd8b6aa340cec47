//! Log expected improvement for maximization.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Returned when EI underflows to zero (or the inputs make it non-finite).
pub const LOG_EI_FLOOR: f64 = -1e300;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Below this z the closed form loses digits to cancellation.
const TAIL_Z: f64 = -4.0;
const CF_TERMS: usize = 200;

/// `ln E[max(Y − incumbent, 0)]` for `Y ~ N(mean, std²)`.
///
/// With `z = (mean − incumbent)/std`, `EI = std·h(z)` where
/// `h(z) = φ(z) + z·Φ(z)`. For `z < −4`, `h` is evaluated in log space via
/// the Laplace continued fraction for the Mills ratio.
pub fn log_ei(mean: f64, std: f64, incumbent: f64) -> Result<f64> {
    if std.is_nan() || std <= 0.0 {
        return Err(Error::Acquisition(format!("std must be positive, got {std}")));
    }
    let z = (mean - incumbent) / std;
    let log_h = if z < TAIL_Z {
        log_h_tail(-z)
    } else {
        let pdf = (-0.5 * z * z - LN_SQRT_2PI).exp();
        let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
        (pdf + z * cdf).ln()
    };
    let v = std.ln() + log_h;
    Ok(if v.is_finite() { v } else { LOG_EI_FLOOR })
}

/// `ln h(−x)` for large positive `x`:
/// `h(−x) = φ(x)·t/(x + t)` with `t = 1/(x + 2/(x + 3/(x + …)))`.
fn log_h_tail(x: f64) -> f64 {
    let mut acc = 0.0;
    for k in (2..=CF_TERMS).rev() {
        acc = k as f64 / (x + acc);
    }
    let t = 1.0 / (x + acc);
    -0.5 * x * x - LN_SQRT_2PI + t.ln() - (x + t).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_the_incumbent() {
        let v = log_ei(0.0, 1.0, 0.0).unwrap();
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - phi0.ln()).abs() < 1e-12);
        assert!((v + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn large_improvement() {
        let v = log_ei(8.0, 1.0, 0.0).unwrap();
        assert!((v - 8f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn tail_matches_closed_form_at_the_switch() {
        // ln h(−4) to 16 digits from a 50-digit evaluation of φ(4) − 4·Q(4).
        assert!((log_h_tail(4.0) + 11.849_061_577_550_663).abs() < 1e-12);
        // The closed form there has lost a few digits to cancellation, but no more.
        let direct = log_ei(-3.999_999_999, 1.0, 0.0).unwrap();
        assert!((direct + 11.849_061_577_550_663).abs() < 1e-7);
        let a = log_ei(-3.999_999, 1.0, 0.0).unwrap();
        let b = log_ei(-4.000_001, 1.0, 0.0).unwrap();
        assert!(a > b && a - b < 1e-4);
    }

    #[test]
    fn deep_tail_is_finite_and_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let mean = -100.0 + i as f64 * 0.5;
            let v = log_ei(mean, 1.0, 0.0).unwrap();
            assert!(v.is_finite() && v > prev, "{mean}: {v} vs {prev}");
            prev = v;
        }
        // Asymptotically ln h(−x) ≈ −x²/2 − ln(x²·√2π).
        let x: f64 = 40.0;
        let approx = -0.5 * x * x - (x * x).ln() - LN_SQRT_2PI;
        assert!((log_ei(-x, 1.0, 0.0).unwrap() - approx).abs() < 1e-2);
    }

    #[test]
    fn sentinel_and_errors() {
        assert_eq!(log_ei(f64::NEG_INFINITY, 1.0, 0.0).unwrap(), LOG_EI_FLOOR);
        assert!(log_ei(0.0, 0.0, 0.0).is_err());
        assert!(log_ei(0.0, -1.0, 0.0).is_err());
    }
}
