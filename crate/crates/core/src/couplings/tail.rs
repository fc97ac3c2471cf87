//! Largest label among infinitely many labelled items.
//!
//! If items carry independent labels and the number of labels above `t` is
//! Poisson with mean `Λ(t)`, the largest label `M` satisfies
//! `P(M <= t) = exp(-Λ(t))`. `Λ` is tabulated once as a piecewise polynomial
//! in `ln t` and inverted per draw.

use crate::error::{Error, Result};
use crate::exact_densities::exp_integral_e1;
use crate::number_theory::{PrimeTables, MERTENS_B};
use crate::samplers::RandomSource;

const DEGREE: usize = 16;
const PANELS: usize = 48;
const T_MIN: f64 = 1e-12;
const LAMBDA_FLOOR: f64 = 1e-18;

/// Relative accuracy of inverted labels.
pub const INVERSION_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct TailLabelLaw {
    u_lo: f64,
    width: f64,
    /// `ln Λ` at the Lobatto nodes of each panel, right end first.
    values: Vec<[f64; DEGREE + 1]>,
    /// `ln Λ` at panel boundaries, left to right (decreasing).
    edges: Vec<f64>,
    t_max: f64,
    decay: f64,
    nodes: [f64; DEGREE + 1],
    weights: [f64; DEGREE + 1],
}

fn lobatto(j: usize) -> f64 {
    (std::f64::consts::PI * j as f64 / DEGREE as f64).cos()
}

impl TailLabelLaw {
    /// `lambda` must be positive, continuous and decreasing, with
    /// `Λ(t) ~ C e^{-decay t}` for large `t`.
    pub fn new<F: Fn(f64) -> f64>(lambda: F, decay: f64) -> Result<Self> {
        if !(decay > 0.0) {
            return Err(Error::InvalidParameter(format!("decay rate must be positive, got {decay}")));
        }
        let mut t_max = 1.0;
        while lambda(t_max) > LAMBDA_FLOOR {
            t_max *= 2.0;
            if t_max > 1e6 {
                return Err(Error::InvalidParameter("tail intensity does not decay".into()));
            }
        }
        let u_lo = T_MIN.ln();
        let width = (t_max.ln() - u_lo) / PANELS as f64;
        let mut values = Vec::with_capacity(PANELS);
        for k in 0..PANELS {
            let (a, b) = (u_lo + k as f64 * width, u_lo + (k + 1) as f64 * width);
            let mut v = [0.0; DEGREE + 1];
            for (j, slot) in v.iter_mut().enumerate() {
                let u = 0.5 * (a + b) + 0.5 * (b - a) * lobatto(j);
                let l = lambda(u.exp());
                if !(l > 0.0) || !l.is_finite() {
                    return Err(Error::InvalidParameter(format!("tail intensity {l} at t = {}", u.exp())));
                }
                *slot = l.ln();
            }
            values.push(v);
        }
        let mut edges: Vec<f64> = values.iter().map(|v| v[DEGREE]).collect();
        edges.push(values[PANELS - 1][0]);
        let nodes = std::array::from_fn(lobatto);
        let weights = std::array::from_fn(|j| {
            let w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == DEGREE {
                0.5 * w
            } else {
                w
            }
        });
        Ok(TailLabelLaw {
            u_lo,
            width,
            values,
            edges,
            t_max,
            decay,
            nodes,
            weights,
        })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    fn eval_panel(&self, k: usize, u: f64) -> f64 {
        let a = self.u_lo + k as f64 * self.width;
        let x = 2.0 * (u - a) / self.width - 1.0;
        let v = &self.values[k];
        let (mut num, mut den) = (0.0, 0.0);
        for ((&vj, &node), &w) in v.iter().zip(&self.nodes).zip(&self.weights) {
            let d = x - node;
            if d == 0.0 {
                return vj;
            }
            let w = w / d;
            num += w * vj;
            den += w;
        }
        num / den
    }

    fn ln_lambda(&self, t: f64) -> f64 {
        let u = t.max(T_MIN).ln();
        if t >= self.t_max {
            return self.edges[PANELS] - self.decay * (t - self.t_max);
        }
        let k = (((u - self.u_lo) / self.width) as usize).min(PANELS - 1);
        self.eval_panel(k, u)
    }

    /// Interpolated `Λ(t)`.
    pub fn lambda(&self, t: f64) -> f64 {
        self.ln_lambda(t).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        (-self.lambda(t)).exp()
    }

    /// The `t` with `exp(-Λ(t)) = p`, clamped below at `1e-12`.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p <= 1.0);
        let target = (-p.ln()).ln();
        if target >= self.edges[0] {
            return T_MIN;
        }
        if target <= self.edges[PANELS] {
            return self.t_max + (self.edges[PANELS] - target) / self.decay;
        }
        let k = self.edges.partition_point(|&e| e > target) - 1;
        // Illinois iteration on the bracketing panel.
        let mut a = self.u_lo + k as f64 * self.width;
        let mut b = a + self.width;
        let mut fa = self.edges[k] - target;
        let mut fb = self.edges[k + 1] - target;
        for _ in 0..200 {
            if (b - a).abs() <= INVERSION_TOL || fb == 0.0 {
                break;
            }
            let c = b - fb * (b - a) / (fb - fa);
            let fc = self.eval_panel(k, c) - target;
            if (fc > 0.0) != (fb > 0.0) {
                a = b;
                fa = fb;
            } else {
                fa *= 0.5;
            }
            b = c;
            fb = fc;
        }
        b.exp()
    }

    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        self.quantile(rng.uniform_open())
    }
}

/// How copies of a prime beyond the cut are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultisetVariant {
    /// `Poisson(1/(k p^k))` copies of each `p^k`, weight `ln p^k`.
    PrimePowers,
    /// `Geometric(1/p)` copies of `p`, weight `ln p`.
    GeometricPrimes,
}

/// `Λ(t)` for the items with prime part above `n`: an exact sum over primes
/// up to `X = min(limit, max(10 n, 10^6))` plus an asymptotic tail.
#[derive(Debug, Clone)]
pub struct PrimeTailIntensity {
    ln_p: Vec<f64>,
    p: Vec<f64>,
    ln_x: f64,
    delta_x: f64,
    variant: MultisetVariant,
}

impl PrimeTailIntensity {
    pub fn new(n: u64, tables: &PrimeTables, variant: MultisetVariant) -> Result<Self> {
        let x = tables.limit().min((10 * n).max(1_000_000));
        if x <= n {
            return Err(Error::BeyondTable {
                value: 10 * n,
                limit: tables.limit(),
            });
        }
        let primes = tables.primes();
        let cut = primes.partition_point(|&p| p as u64 <= x);
        let below_x: f64 = primes[..cut].iter().map(|&p| 1.0 / p as f64).sum();
        let ln_x = (x as f64).ln();
        let lo = primes.partition_point(|&p| p as u64 <= n);
        let chosen = &primes[lo..cut];
        Ok(PrimeTailIntensity {
            ln_p: chosen.iter().map(|&p| (p as f64).ln()).collect(),
            p: chosen.iter().map(|&p| p as f64).collect(),
            ln_x,
            delta_x: MERTENS_B + ln_x.ln() - below_x,
            variant,
        })
    }

    /// `ln` of the smallest prime above the cut.
    pub fn decay(&self) -> f64 {
        self.ln_p.first().copied().unwrap_or(self.ln_x)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let direct: f64 = match self.variant {
            MultisetVariant::PrimePowers => self
                .ln_p
                .iter()
                .map(|&l| -(-(-(1.0 + t) * l).exp()).ln_1p())
                .sum(),
            MultisetVariant::GeometricPrimes => self
                .ln_p
                .iter()
                .zip(&self.p)
                .map(|(&l, &p)| ((-t * l).exp() / (p - 1.0)).ln_1p())
                .sum(),
        };
        let lx = self.ln_x;
        let x_t = (-t * lx).exp();
        let mut tail = exp_integral_e1(t * lx) + self.delta_x * x_t;
        tail += match self.variant {
            MultisetVariant::PrimePowers => (-(1.0 + 2.0 * t) * lx).exp() / (2.0 * (1.0 + 2.0 * t) * lx),
            MultisetVariant::GeometricPrimes => (-(1.0 + t) * lx).exp() / ((1.0 + t) * lx),
        };
        direct + tail
    }
}

/// `Λ(t) = Σ_{i>k} e^{-it}/i`, the tail of the Poisson(1/i) multiset of
/// integers with labels `S/i`.
pub fn integer_tail_intensity(k: u64, t: f64) -> f64 {
    let kf = k as f64;
    if (kf + 1.0) * t > 1.0 {
        let mut sum = 0.0;
        let mut i = k + 1;
        loop {
            let term = (-(i as f64) * t).exp() / i as f64;
            sum += term;
            if term < 1e-18 * sum {
                return sum;
            }
            i += 1;
        }
    }
    let head: f64 = (1..=k).map(|i| (-(i as f64) * t).exp() / i as f64).sum();
    -(-(-t).exp_m1()).ln() - head
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_tail_forms_agree() {
        let k = 6;
        for &t in &[0.1, 0.14, 0.15, 0.3] {
            let kf = k as f64;
            let direct: f64 = (k + 1..200_000).map(|i| (-(i as f64) * t).exp() / i as f64).sum();
            let via = integer_tail_intensity(k, t);
            assert!((direct - via).abs() < 1e-12 * direct.max(1.0), "t={t} kt={}", kf * t);
        }
    }

    #[test]
    fn interpolation_matches_direct() {
        let k = 8;
        let law = TailLabelLaw::new(|t| integer_tail_intensity(k, t), (k + 1) as f64).unwrap();
        for i in 0..400 {
            let t = (-27.0 + 0.08 * i as f64).exp();
            if t > law.t_max() {
                break;
            }
            let exact = integer_tail_intensity(k, t);
            let interp = law.lambda(t);
            assert!((interp / exact - 1.0).abs() < 1e-11, "t={t}: {interp} vs {exact}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = TailLabelLaw::new(|t| integer_tail_intensity(3, t), 4.0).unwrap();
        for &p in &[1e-9, 0.01, 0.3, 0.5, 0.9, 0.999_999] {
            let t = law.quantile(p);
            let back = (-integer_tail_intensity(3, t)).exp();
            assert!((back - p).abs() < 1e-9 * p.max(1e-3), "p={p} t={t} back={back}");
        }
    }

    #[test]
    fn prime_tail_against_longer_sum() {
        let small = PrimeTables::build(1_000_000).unwrap();
        let big = PrimeTables::build(20_000_000).unwrap();
        for variant in [MultisetVariant::PrimePowers, MultisetVariant::GeometricPrimes] {
            let a = PrimeTailIntensity::new(50, &small, variant).unwrap();
            let b = PrimeTailIntensity::new(50, &big, variant).unwrap();
            let mut b_long = b.clone();
            // A direct sum to 2e7 instead of 1e6.
            let lo = big.primes().partition_point(|&p| p <= 50);
            b_long.ln_p = big.primes()[lo..].iter().map(|&p| (p as f64).ln()).collect();
            b_long.p = big.primes()[lo..].iter().map(|&p| p as f64).collect();
            b_long.ln_x = (big.limit() as f64).ln();
            let all: f64 = big.primes().iter().map(|&p| 1.0 / p as f64).sum();
            b_long.delta_x = MERTENS_B + b_long.ln_x.ln() - all;
            for &t in &[1e-6, 1e-3, 0.05, 0.5, 2.0] {
                let (x, y) = (a.eval(t), b_long.eval(t));
                assert!((x - y).abs() < 2e-6 * y, "{variant:?} t={t}: {x} vs {y}");
            }
        }
    }
}
