//! ζ near its pole, and exponential integrals.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::number_theory::EULER_GAMMA;

/// Terms summed directly before the Euler-Maclaurin correction.
pub const ZETA_CUTOFF: usize = 10_000;

/// B_2, B_4, ..., B_20.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn log_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (0..ZETA_CUTOFF).map(|k| (k.max(1) as f64).ln()).collect())
}

/// Regular part `R` of `ζ(1+δ) = N^{-δ}/δ + R(δ)` and its derivative.
fn regular_part(delta: f64) -> (f64, f64) {
    let sigma = 1.0 + delta;
    let logs = log_table();
    let mut r = 0.0;
    let mut dr = 0.0;
    // Summed from the small terms up.
    for k in (1..ZETA_CUTOFF).rev() {
        let t = (-sigma * logs[k]).exp();
        r += t;
        dr -= logs[k] * t;
    }
    let n = ZETA_CUTOFF as f64;
    let ln_n = n.ln();
    let n_sigma = (-sigma * ln_n).exp();
    r += 0.5 * n_sigma;
    dr -= 0.5 * ln_n * n_sigma;
    // Correction j: B_{2j}/(2j)! * σ(σ+1)...(σ+2j-2) * N^{-σ-2j+1}.
    let mut fact = 1.0;
    let mut poly = 1.0;
    let mut dpoly = 0.0;
    let mut n_pow = n_sigma * n;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let j = j + 1;
        let lo = if j == 1 { 0 } else { 2 * j - 3 };
        for i in lo..=(2 * j - 2) {
            let factor = sigma + i as f64;
            dpoly = dpoly * factor + poly;
            poly *= factor;
        }
        fact *= ((2 * j - 1) * (2 * j)) as f64;
        n_pow /= n * n;
        let c = b / fact;
        r += c * poly * n_pow;
        dr += c * (dpoly - ln_n * poly) * n_pow;
    }
    (r, dr)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("ζ(1+δ) needs δ > 0, got {delta}")));
    }
    Ok(())
}

/// `ζ(1+δ)` by Euler-Maclaurin with the pole term kept in closed form.
pub fn zeta_near_one(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (r, _) = regular_part(delta);
    let n = ZETA_CUTOFF as f64;
    Ok((-delta * n.ln()).exp() / delta + r)
}

/// `ζ'(1+δ)`.
pub fn zeta_prime_near_one(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (_, dr) = regular_part(delta);
    let ln_n = (ZETA_CUTOFF as f64).ln();
    let nd = (-delta * ln_n).exp();
    Ok(-ln_n * nd / delta - nd / (delta * delta) + dr)
}

/// `(1/ζ(1+δ), -ζ'(1+δ)/ζ(1+δ)^2)`, finite as `δ -> 0` where they tend to
/// `(0, 1)`.
pub fn inverse_zeta_pair(delta: f64) -> (f64, f64) {
    if delta <= 0.0 {
        return (0.0, 1.0);
    }
    let (r, dr) = regular_part(delta);
    let ln_n = (ZETA_CUTOFF as f64).ln();
    let nd = (-delta * ln_n).exp();
    // ζ = A/δ with A = N^{-δ} + δR.
    let a = nd + delta * r;
    let inv = delta / a;
    let neg_dlog = (nd * (1.0 + delta * ln_n) - delta * delta * dr) / (a * a);
    (inv, neg_dlog)
}

/// `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // Modified Lentz on the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `Ein(x) = ∫_0^x (1 - e^{-t})/t dt`.
pub fn ein(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 2.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..80 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        exp_integral_e1(x) + x.ln() + EULER_GAMMA
    }
}
