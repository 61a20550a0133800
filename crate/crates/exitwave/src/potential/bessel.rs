//! Modified Bessel function of the second kind, order zero.
//!
//! Two regimes: the ascending power series below x = 2, and Steed's
//! continued fraction (CF2) above. Both carry full double precision; the
//! crossover keeps each expansion comfortably inside its convergent range.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BesselError {
    #[error("K0 requires a positive argument, got {0}")]
    NonPositiveArgument(f64),
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// K0(x) for x > 0.
pub fn bessel_k0(x: f64) -> Result<f64, BesselError> {
    if x <= 0.0 || !x.is_finite() {
        return Err(BesselError::NonPositiveArgument(x));
    }
    if x <= 2.0 {
        Ok(k0_series(x))
    } else {
        Ok(k0_continued_fraction(x))
    }
}

/// Ascending series: K0 = -(ln(x/2) + gamma) I0(x) + sum_k (x^2/4)^k / (k!)^2 H_k.
fn k0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0; // (x^2/4)^k / (k!)^2 at k = 0
    let mut i0 = 1.0;
    let mut sum = 0.0;
    let mut harmonic = 0.0;
    for k in 1..200 {
        term *= y / ((k * k) as f64);
        i0 += term;
        harmonic += 1.0 / k as f64;
        let delta = term * harmonic;
        sum += delta;
        if term < 1e-18 * i0 && delta < 1e-18 * (sum + 1e-300) {
            break;
        }
    }
    -(0.5 * x).ln().mul_add(i0, EULER_GAMMA * i0) + sum
}

/// Steed's CF2 for K_nu with nu = 0 (Numerical Recipes `bessik` form),
/// valid for x >= 2.
fn k0_continued_fraction(x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0_f64;
    let mut q2 = 1.0_f64;
    let a1 = 0.25_f64; // 0.25 - nu^2 with nu = 0
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10000 {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k0(-1.0).is_err());
    }

    #[test]
    fn reference_values() {
        // A&S / DLMF tabulated values.
        assert!((bessel_k0(1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-12);
        assert!((bessel_k0(0.1).unwrap() - 2.427_069_024_702_017).abs() < 1e-12);
        assert!((bessel_k0(10.0).unwrap() - 1.778_006_231_616_765e-5).abs() < 1e-13);
    }

    #[test]
    fn matches_leading_log_near_zero() {
        for &x in &[1e-6, 1e-5, 1e-4, 1e-3] {
            let approx = -(x / 2.0_f64).ln() - EULER_GAMMA;
            let exact = bessel_k0(x).unwrap();
            assert!((exact - approx).abs() / exact < 0.01);
        }
    }

    #[test]
    fn large_x_asymptote() {
        let x = 10.0;
        let asym = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
        let exact = bessel_k0(x).unwrap();
        assert!((exact - asym).abs() / exact < 0.02);
    }

    #[test]
    fn continuous_at_crossover() {
        let below = bessel_k0(2.0 - 1e-12).unwrap();
        let above = bessel_k0(2.0 + 1e-12).unwrap();
        assert!((below - above).abs() / below < 1e-10);
    }
}
