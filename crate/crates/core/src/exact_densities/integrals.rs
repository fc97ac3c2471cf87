//! The area between the Mertens step function and `ln`, region means of the
//! labeled square, and the Dickman function.

use crate::error::{Error, Result};
use crate::number_theory::{MertensMap, MertensVariant, EULER_GAMMA};

use super::quadrature::{integrate, QuadratureSpec};

/// Antiderivative of `ln x`.
fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln() - x
    }
}

/// `∫_a^b |c - ln x| dx` in closed form.
fn abs_gap(c: f64, a: f64, b: f64) -> f64 {
    let signed = |lo: f64, hi: f64| (xlogx(hi) - xlogx(lo)) - c * (hi - lo);
    let root = c.exp();
    if root <= a {
        signed(a, b)
    } else if root >= b {
        -signed(a, b)
    } else {
        -signed(a, root) + signed(root, b)
    }
}

/// `∫_0^{ln 2} (-γ - ln x) dx`, signed.
pub fn b0_lower_piece_signed() -> f64 {
    let l2 = std::f64::consts::LN_2;
    -EULER_GAMMA * l2 - xlogx(l2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct B0Report {
    pub value: f64,
    /// `∫_0^{ln 2} |f - ln x| dx`, where `f ≡ -γ`.
    pub lower_piece: f64,
    /// Up to the crossover, summed exactly over the steps of `f`.
    pub step_piece: f64,
    pub crossover: f64,
    /// Estimated area beyond the crossover, extrapolated from the decay of
    /// the last unit intervals.
    pub tail_estimate: f64,
    /// Change of the step piece when the crossover drops by one unit.
    pub last_unit: f64,
}

/// `b0 = ∫_0^∞ |f(x) - ln x| dx` for the prime-power variant, truncated at
/// the crossover of the map.
pub fn b0_integral(mertens: &MertensMap, quad: &QuadratureSpec) -> Result<B0Report> {
    quad.validate()?;
    if mertens.variant() != MertensVariant::PrimePowersOneOverKq {
        return Err(Error::InvalidParameter("b0 uses the 1/(kq) variant".into()));
    }
    let lower_piece = abs_gap(-EULER_GAMMA, 0.0, std::f64::consts::LN_2);
    let log_q = mertens.log_q();
    let bp = mertens.breakpoints();
    let x_max = mertens.crossover_ln();
    let units = x_max.floor() as usize + 1;
    let mut per_unit = vec![0.0; units + 1];
    let mut step_piece = 0.0;
    for j in 0..log_q.len() {
        let a = log_q[j];
        if a >= x_max {
            break;
        }
        let b = log_q.get(j + 1).copied().unwrap_or(x_max).min(x_max);
        // Split at integers so the decay per unit interval is visible.
        let mut lo = a;
        while lo < b {
            let hi = (lo.floor() + 1.0).min(b);
            let piece = abs_gap(bp[j], lo, hi);
            per_unit[lo.floor() as usize] += piece;
            step_piece += piece;
            lo = hi;
        }
    }
    let full = x_max.floor() as usize;
    let (mut tail_estimate, mut last_unit) = (0.0, 0.0);
    if full >= 4 {
        let w = &per_unit[full - 3..full];
        last_unit = w[2];
        let r = ((w[2] / w[0]).sqrt()).clamp(0.0, 0.95);
        tail_estimate = w[2] * r / (1.0 - r) + per_unit[full];
    }
    Ok(B0Report {
        value: lower_piece + step_piece,
        lower_piece,
        step_piece,
        crossover: x_max,
        tail_estimate,
        last_unit,
    })
}

/// Mean number of points of the `e^{-wy}` process in `(0,b]^2`:
/// `∫_0^{b^2} (1 - e^{-u})/u du`.
pub fn region_mean(b: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("side must be positive, got {b}")));
    }
    let r = integrate(
        |u: f64| if u == 0.0 { 1.0 } else { -(-u).exp_m1() / u },
        0.0,
        b * b,
        quad,
    )?;
    Ok(r.value)
}

const CHEB_N: usize = 32;

fn cheb_coeffs(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                .sum();
            let c = 2.0 * s / n as f64;
            if k == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

fn cheb_eval(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c[0]
}

/// Coefficients of `∫_{-1}^t f`.
fn cheb_integral(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let at = |j: usize| if j < n { a[j] } else { 0.0 };
    let mut b = vec![0.0; n + 1];
    b[1] = a[0] - at(2) / 2.0;
    for j in 2..=n {
        b[j] = (at(j - 1) - at(j + 1)) / (2 * j) as f64;
    }
    b[0] = -cheb_eval(&b, -1.0);
    b
}

/// The Dickman function on unit intervals, each a Chebyshev series in the
/// local variable.
#[derive(Debug, Clone)]
pub struct Dickman {
    pieces: Vec<Vec<f64>>,
}

impl Dickman {
    /// Tabulates `ρ` on `[0, u_max]` by integrating
    /// `ρ(k+σ) = ρ(k) - ∫_0^σ ρ(k-1+τ)/(k+τ) dτ` one unit at a time.
    pub fn new(u_max: f64) -> Self {
        let units = u_max.ceil().max(1.0) as usize;
        let nodes: Vec<f64> = (0..CHEB_N)
            .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / CHEB_N as f64).cos())
            .collect();
        let mut pieces = vec![{
            let mut c = vec![0.0; CHEB_N];
            c[0] = 1.0;
            c
        }];
        for k in 1..units {
            let prev = &pieces[k - 1];
            let start = cheb_eval(prev, 1.0);
            let g: Vec<f64> = nodes
                .iter()
                .map(|&t| cheb_eval(prev, t) / (k as f64 + 0.5 * (t + 1.0)))
                .collect();
            let integral = cheb_integral(&cheb_coeffs(&g));
            let mut c: Vec<f64> = integral.iter().map(|v| -0.5 * v).collect();
            c[0] += start;
            c.truncate(CHEB_N);
            pieces.push(c);
        }
        Dickman { pieces }
    }

    pub fn u_max(&self) -> f64 {
        self.pieces.len() as f64
    }

    pub fn rho(&self, u: f64) -> f64 {
        if u <= 1.0 {
            return if u >= 0.0 { 1.0 } else { 0.0 };
        }
        let k = (u.floor() as usize).min(self.pieces.len() - 1);
        let sigma = u - k as f64;
        cheb_eval(&self.pieces[k], 2.0 * sigma - 1.0)
    }
}

/// `ρ(u)`, accurate to about `1e-13` relative on moderate `u`.
pub fn dickman_rho(u: f64, quad: &QuadratureSpec) -> Result<f64> {
    quad.validate()?;
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::InvalidParameter(format!("ρ needs u >= 0, got {u}")));
    }
    Ok(Dickman::new(u + 1.0).rho(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_densities::special::ein;
    use crate::number_theory::PrimeTables;

    #[test]
    fn lower_piece_closed_form() {
        let l2 = std::f64::consts::LN_2;
        let expect = l2 * (-EULER_GAMMA) - (l2 * l2.ln() - l2);
        assert!((b0_lower_piece_signed() - expect).abs() < 1e-15);
        let q = QuadratureSpec::default();
        let num = integrate(|x: f64| (-EULER_GAMMA - x.ln()).abs(), 0.0, l2, &q).unwrap();
        assert!((abs_gap(-EULER_GAMMA, 0.0, l2) - num.value).abs() < 1e-9);
    }

    #[test]
    fn abs_gap_matches_quadrature() {
        let q = QuadratureSpec::default();
        for (c, a, b) in [(0.3, 0.5, 2.0), (1.2, 0.5, 2.0), (-1.0, 0.5, 2.0), (0.9, 2.4, 2.6)] {
            let num = integrate(|x: f64| (c - x.ln()).abs(), a, b, &q).unwrap();
            assert!((abs_gap(c, a, b) - num.value).abs() < 1e-9, "{c} {a} {b}");
        }
    }

    #[test]
    fn b0_is_finite_and_converged() {
        let t = PrimeTables::build(10_000_000).unwrap();
        let m = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq).unwrap();
        let r = b0_integral(&m, &QuadratureSpec::default()).unwrap();
        assert!(r.value > 0.0 && r.value.is_finite());
        assert!(r.last_unit < 1e-4, "{r:?}");
        assert!(r.tail_estimate < 1e-3, "{r:?}");
        let coarse = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq)
            .unwrap()
            .with_crossover(1e6);
        let rc = b0_integral(&coarse, &QuadratureSpec::default()).unwrap();
        assert!((r.value - rc.value).abs() < 1e-3, "{} vs {}", r.value, rc.value);
    }

    #[test]
    fn region_means() {
        let q = QuadratureSpec::default();
        let m5 = region_mean(5.0, &q).unwrap();
        let m50 = region_mean(50.0, &q).unwrap();
        assert!((m5 - 3.796).abs() < 1e-3);
        assert!((m50 - 8.401).abs() < 1e-3);
        assert!((m5 - ein(25.0)).abs() < 1e-10);
        assert!((m50 - ein(2500.0)).abs() < 1e-10);
        assert!(region_mean(1e-6, &q).unwrap() < 1e-11);
        assert!(region_mean(0.0, &q).is_err());
    }

    #[test]
    fn dickman_analytic_branch() {
        let d = Dickman::new(10.0);
        assert_eq!(d.rho(0.5), 1.0);
        assert_eq!(d.rho(1.0), 1.0);
        for j in 0..=100 {
            let u = 1.0 + j as f64 / 100.0;
            assert!((d.rho(u) - (1.0 - u.ln())).abs() < 1e-8, "u = {u}");
        }
        assert!((d.rho(2.0) - (1.0 - 2f64.ln())).abs() < 1e-14);
    }

    /// ρ(3) by trapezoid steps on the integral equation.
    fn rho3_by_steps(m: usize) -> f64 {
        let h = 1.0 / m as f64;
        let mut rho = vec![1.0; 3 * m + 1];
        let phi = |rho: &[f64], k: usize| rho[k - m] / (k as f64 * h);
        for i in m + 1..=3 * m {
            rho[i] = rho[i - 1] - 0.5 * h * (phi(&rho, i - 1) + phi(&rho, i));
        }
        rho[3 * m]
    }

    #[test]
    fn dickman_three_matches_refined_steps() {
        let coarse = rho3_by_steps(2000);
        let fine = rho3_by_steps(4000);
        let extrapolated = fine + (fine - coarse) / 3.0;
        let r3 = dickman_rho(3.0, &QuadratureSpec::default()).unwrap();
        assert!((r3 - extrapolated).abs() < 1e-8, "{r3} vs {extrapolated}");
        assert!((r3 - 0.048_608_388_291_131_57).abs() < 1e-12);
    }

    #[test]
    fn dickman_delay_equation() {
        let d = Dickman::new(8.0);
        for &u in &[2.5, 3.7, 5.2, 6.9] {
            let h = 1e-5;
            let deriv = (d.rho(u + h) - d.rho(u - h)) / (2.0 * h);
            assert!((u * deriv + d.rho(u - 1.0)).abs() < 1e-8, "u = {u}");
        }
    }
}
