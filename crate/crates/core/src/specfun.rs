//! Special functions behind the order-statistic bands: log-gamma, the
//! regularized incomplete beta function and the beta quantile.
//!
//! Everything here is a pure function of its arguments.

use crate::error::{Error, Result};

const LANCZOS_R: f64 = 10.900511;

// Pugh's Lanczos coefficients (n = 10, r = 10.900511).
#[allow(clippy::excessive_precision)]
const LANCZOS_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

const LN_PI: f64 = 1.144_729_885_849_400_2;
// ln(2 * sqrt(e / pi))
const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

const CF_TINY: f64 = 1e-300;
const CF_MIN_ITER: usize = 300;

/// `k` and `n` of the Beta(k, n+1-k) law of `F(X_{n:k})`.
///
/// `k = 0` and `k = n + 1` are allowed and stand for the point masses at
/// 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BetaParams {
    k: usize,
    n: usize,
}

impl BetaParams {
    pub fn new(k: i64, n: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain(format!("sample size n={n} must be >= 1")));
        }
        if k < 0 || k > n + 1 {
            return Err(Error::domain(format!(
                "order statistic index k={k} outside 0..={}",
                n + 1
            )));
        }
        Ok(BetaParams {
            k: k as usize,
            n: n as usize,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Beta shape parameters, or `None` for the degenerate boundary cases.
    pub fn shape(&self) -> Option<(f64, f64)> {
        if self.k == 0 || self.k == self.n + 1 {
            None
        } else {
            Some((self.k as f64, (self.n + 1 - self.k) as f64))
        }
    }
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!(
            "log_gamma needs finite x > 0, got {x}"
        )));
    }
    Ok(ln_gamma(x))
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let s = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |s, (i, d)| s + d / (i as f64 - x));
        LN_PI
            - (std::f64::consts::PI * x).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - x) * ((0.5 - x + LANCZOS_R) / std::f64::consts::E).ln()
    } else {
        let s = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |s, (i, d)| s + d / (x + i as f64 - 1.0));
        s.ln()
            + LN_2_SQRT_E_OVER_PI
            + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
    }
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log density of Beta(a, b) at x in (0, 1).
pub(crate) fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let max_iter = CF_MIN_ITER.max((20.0 * a.max(b).sqrt()) as usize);
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let floor = |v: f64| if v.abs() < CF_TINY { CF_TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / floor(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / floor(1.0 + aa * d);
        c = floor(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / floor(1.0 + aa * d);
        c = floor(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// `(ln I_x(a,b), ln(1 - I_x(a,b)))`, each accurate in its own small tail.
///
/// The continued fraction always runs on the side of the mean where it
/// converges, so the smaller of the two tails is computed directly.
pub(crate) fn ln_inc_beta_tails(x: f64, a: f64, b: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x >= 1.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let direct = |x: f64, a: f64, b: f64| {
        a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b) + beta_cf(x, a, b).ln() - a.ln()
    };
    if x < a / (a + b) {
        let lower = direct(x, a, b);
        (lower, ln_one_minus_exp(lower))
    } else {
        let upper = direct(1.0 - x, b, a);
        (ln_one_minus_exp(upper), upper)
    }
}

/// ln(1 - e^v) for v <= 0.
fn ln_one_minus_exp(v: f64) -> f64 {
    if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

/// `(I_x(a,b), 1 - I_x(a,b))`.
pub(crate) fn inc_beta_tails(x: f64, a: f64, b: f64) -> (f64, f64) {
    let (lo, up) = ln_inc_beta_tails(x, a, b);
    (lo.exp(), up.exp())
}

/// The regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "reg_inc_beta needs 0 <= x <= 1, got {x}"
        )));
    }
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
        return Err(Error::domain(format!(
            "reg_inc_beta needs finite a, b > 0, got a={a}, b={b}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let (lower, upper) = inc_beta_tails(x, a, b);
    Ok(if lower <= 0.5 { lower } else { 1.0 - upper })
}

/// Acklam's rational approximation to the standard normal quantile.
/// Only used to seed the Newton iteration.
fn normal_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (-p).ln_1p()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// The p-quantile of Beta(k, n+1-k), written B^p_{k,n} in the band
/// construction. Returns exactly 0 for k = 0 and exactly 1 for k = n+1.
pub fn beta_quantile(p: f64, params: BetaParams) -> Result<f64> {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "beta_quantile needs p in [0, 1], got {p}"
        )));
    }
    let Some((a, b)) = params.shape() else {
        return Ok(if params.k == 0 { 0.0 } else { 1.0 });
    };
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    Ok(beta_quantile_unchecked(p, a, b))
}

pub(crate) fn beta_quantile_unchecked(p: f64, a: f64, b: f64) -> f64 {
    // closed forms: I_x(1,b) = 1-(1-x)^b and I_x(a,1) = x^a
    if a == 1.0 {
        return -((-p).ln_1p() / b).exp_m1();
    }
    if b == 1.0 {
        return (p.ln() / a).exp();
    }

    let mean = a / (a + b);
    let sd = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
    let mut x = (mean + sd * normal_quantile_guess(p)).clamp(1e-12, 1.0 - 1e-12);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let ln_target_lower = p.ln();
    let ln_target_upper = (-p).ln_1p();

    for _ in 0..500 {
        let (ln_lower, ln_upper) = ln_inc_beta_tails(x, a, b);
        // I_x - p, evaluated on whichever tail keeps precision
        let f = if p <= 0.5 {
            ln_lower.exp() - p
        } else {
            (-p).ln_1p().exp() - ln_upper.exp()
        };
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let ln_pdf = ln_beta_pdf(x, a, b);
        // Newton in the log of the relevant tail behaves far better in
        // the extremes than Newton on the raw CDF.
        let step = if p <= 0.5 {
            (ln_lower - ln_target_lower) * (ln_lower - ln_pdf).exp()
        } else {
            -(ln_upper - ln_target_upper) * (ln_upper - ln_pdf).exp()
        };
        let mut next = x - step;
        if !(next.is_finite() && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.max(f64::MIN_POSITIVE) {
            return next;
        }
        x = next;
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            return x;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn log_gamma_examples() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(close(
            log_gamma(0.5).unwrap(),
            0.5 * std::f64::consts::PI.ln(),
            1e-13
        ));
        assert!(close(log_gamma(10.0).unwrap(), 362880f64.ln(), 1e-12));
        assert!(close(log_gamma(2.0).unwrap(), 0.0, 1e-14));
    }

    #[test]
    fn log_gamma_rejects_bad_input() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
        assert!(log_gamma(f64::INFINITY).is_err());
    }

    #[test]
    fn log_gamma_small_argument() {
        // Γ(1e-3) = 999.4237724845955 (via Γ(1+x)/x)
        let lg = log_gamma(1e-3).unwrap();
        assert!(close(lg, 999.423_772_484_595_5_f64.ln(), 1e-12));
    }

    #[test]
    fn reg_inc_beta_examples() {
        assert!(close(reg_inc_beta(0.5, 1.0, 1.0).unwrap(), 0.5, 1e-14));
        assert!(close(reg_inc_beta(0.5, 1.0, 2.0).unwrap(), 0.75, 1e-14));
        assert!(close(reg_inc_beta(0.25, 2.0, 2.0).unwrap(), 0.15625, 1e-14));
        assert_eq!(reg_inc_beta(0.0, 3.0, 4.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 3.0, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn reg_inc_beta_domain_errors() {
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(1.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn beta_quantile_examples() {
        let q = |p, k, n| beta_quantile(p, BetaParams::new(k, n).unwrap()).unwrap();
        assert_eq!(q(0.05, 0, 7), 0.0);
        assert_eq!(q(0.05, 8, 7), 1.0);
        assert!(close(q(0.5, 1, 1), 0.5, 1e-15));
        assert!(close(q(0.1, 1, 2), 1.0 - 0.9f64.sqrt(), 1e-14));
    }

    #[test]
    fn beta_params_bounds() {
        assert!(BetaParams::new(-1, 5).is_err());
        assert!(BetaParams::new(7, 5).is_err());
        assert!(BetaParams::new(0, 0).is_err());
        assert!(BetaParams::new(6, 5).is_ok());
    }

    #[test]
    fn quantile_handles_deep_tails() {
        for &(p, a, b) in &[
            (1e-12, 5.0, 20.0),
            (1.0 - 1e-12, 20.0, 5.0),
            (1e-30, 3.0, 3.0),
        ] {
            let x = beta_quantile_unchecked(p, a, b);
            let (lo, up) = ln_inc_beta_tails(x, a, b);
            if p < 0.5 {
                assert!((lo - p.ln()).abs() < 1e-9, "p={p} a={a} b={b}");
            } else {
                assert!((up - (-p).ln_1p()).abs() < 1e-9, "p={p} a={a} b={b}");
            }
        }
    }
}
