//! Growing an integer from the spacings of the Poisson-Dirichlet process.

use crate::error::{Error, Result};
use crate::number_theory::{MertensMap, MertensVariant, PrimeTables, EULER_GAMMA};
use crate::samplers::{points_below, RandomSource};

use super::growth::choose_p0;

#[derive(Debug, Clone, PartialEq)]
pub struct PDCoupledSample {
    pub n: u64,
    /// `X_1`, the first point below `ln n`.
    pub first_point: f64,
    /// `Y_i = X_i - X_{i+1}` for the retained points.
    pub spacings: Vec<f64>,
    /// `Q_i` with `ln Q_i = h(Y_i)`; 1 where `h` vanishes.
    pub q_star: Vec<u64>,
    /// `Σ h(Y_i)`.
    pub ln_j_star: f64,
    /// `None` when the product exceeds `n`.
    pub j_star: Option<u64>,
    pub p0_star: u64,
    /// `RANK(ln n - X_1, Y_1, Y_2, …)`.
    pub v_scaled: Vec<f64>,
    /// Logarithms of the prime factors of `J* P0*` with multiplicity,
    /// nonincreasing.
    pub log_primes: Vec<f64>,
    /// `Σ |ln P_i* - (ln n) V_i|`.
    pub l1_distance: f64,
    /// `Σ_i |h(Y_i) - Y_i|` over all `i >= 1`.
    pub d_sum: f64,
    /// Mass of the discarded spacings; bounds the error in `l1_distance`.
    pub truncation_error: f64,
}

pub fn default_cutoff(n: u64) -> f64 {
    1e-9 * (n as f64).ln()
}

pub fn pd_couple(
    n: u64,
    mertens: &MertensMap,
    tables: &PrimeTables,
    cutoff: f64,
    rng: &mut RandomSource,
) -> Result<PDCoupledSample> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need n >= 3, got {n}")));
    }
    if !(cutoff > 0.0 && cutoff < (-EULER_GAMMA).exp()) {
        return Err(Error::InvalidParameter(format!("cutoff {cutoff} outside (0, e^-γ)")));
    }
    if mertens.variant() != MertensVariant::PrimePowersOneOverKq {
        return Err(Error::Config("the PD coupling uses the prime-power step function".into()));
    }
    if n > tables.limit() {
        return Err(Error::BeyondTable {
            value: n,
            limit: tables.limit(),
        });
    }
    let ln_n = (n as f64).ln();
    let pts = points_below(ln_n, cutoff, rng);
    let spacings: Vec<f64> = pts.windows(2).map(|w| w[0] - w[1]).collect();
    let residual = *pts.last().unwrap();

    let mut q_star = Vec::with_capacity(spacings.len());
    let mut ln_j_star = 0.0;
    let mut j_star = Some(1u64);
    let mut log_primes = Vec::new();
    let mut d_sum = residual;
    for &y in &spacings {
        let (q, h) = match mertens.h_item(y) {
            Some(pp) => {
                for _ in 0..pp.k {
                    log_primes.push((pp.p as f64).ln());
                }
                (pp.q, pp.ln())
            }
            None if y.ln() <= -mertens.offset() => (1, 0.0),
            None => {
                return Err(Error::BeyondTable {
                    value: y.exp().ceil() as u64,
                    limit: tables.limit(),
                })
            }
        };
        q_star.push(q);
        ln_j_star += h;
        d_sum += (h - y).abs();
        j_star = j_star.and_then(|j| j.checked_mul(q)).filter(|&j| j <= n);
    }
    let p0_star = match j_star {
        Some(j) => choose_p0(n, j, rng.uniform_open(), tables)?,
        None => 1,
    };
    if p0_star > 1 {
        log_primes.push((p0_star as f64).ln());
    }
    log_primes.sort_by(|a, b| b.total_cmp(a));

    let mut v_scaled = Vec::with_capacity(spacings.len() + 1);
    v_scaled.push(ln_n - pts[0]);
    v_scaled.extend_from_slice(&spacings);
    v_scaled.sort_by(|a, b| b.total_cmp(a));

    let len = v_scaled.len().max(log_primes.len());
    let l1_distance = (0..len)
        .map(|i| (log_primes.get(i).copied().unwrap_or(0.0) - v_scaled.get(i).copied().unwrap_or(0.0)).abs())
        .sum();

    Ok(PDCoupledSample {
        n,
        first_point: pts[0],
        spacings,
        q_star,
        ln_j_star,
        j_star,
        p0_star,
        v_scaled,
        log_primes,
        l1_distance,
        d_sum,
        truncation_error: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_invariants() {
        let t = PrimeTables::build(1_000_000).unwrap();
        let m = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq).unwrap();
        let mut rng = RandomSource::new(4, 0);
        let n = 10_000;
        for _ in 0..2000 {
            let s = pd_couple(n, &m, &t, default_cutoff(n), &mut rng).unwrap();
            let ln_q: f64 = s.q_star.iter().map(|&q| (q as f64).ln()).sum();
            assert!((ln_q - s.ln_j_star).abs() < 1e-9);
            let mass: f64 = s.v_scaled.iter().sum::<f64>() + s.truncation_error;
            assert!((mass - (n as f64).ln()).abs() < 1e-9);
            if let Some(j) = s.j_star {
                assert!(j * s.p0_star <= n);
            } else {
                assert_eq!(s.p0_star, 1);
            }
            assert!(s.truncation_error < default_cutoff(n));
            for (&y, &q) in s.spacings.iter().zip(&s.q_star) {
                if y <= (-EULER_GAMMA).exp() {
                    assert_eq!(q, 1);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = PrimeTables::build(10_000).unwrap();
        let m = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq).unwrap();
        let mut rng = RandomSource::new(4, 0);
        assert!(pd_couple(2, &m, &t, 1e-9, &mut rng).is_err());
        assert!(pd_couple(100, &m, &t, 0.9, &mut rng).is_err());
        let p = MertensMap::new(&t, MertensVariant::PrimesOneOverP).unwrap();
        assert!(pd_couple(100, &p, &t, 1e-9, &mut rng).is_err());
    }
}
