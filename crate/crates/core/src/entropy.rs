//! Entropies of the geometric and Poisson laws, the information needed to
//! split a geometric count into prime-power counts, and cycle-type entropy.

use crate::error::{Error, Result};
use crate::number_theory::PrimeTables;

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub name: String,
    pub value: f64,
    pub base: f64,
    pub truncation_error: f64,
}

fn check_base(base: f64) -> Result<f64> {
    if !(base > 1.0) || !base.is_finite() {
        return Err(Error::InvalidParameter(format!("log base must exceed 1, got {base}")));
    }
    Ok(base.ln())
}

fn check_unit(a: f64, what: &str) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("{what} must lie in (0,1), got {a}")));
    }
    Ok(())
}

pub fn geometric_entropy(a: f64, base: f64) -> Result<f64> {
    let ln_base = check_base(base)?;
    check_unit(a, "geometric parameter")?;
    Ok((-(-a).ln_1p() - a / (1.0 - a) * a.ln()) / ln_base)
}

/// The series form `sum_k (a^k/k)(1 + ln(1/a^k))` of the geometric entropy.
pub fn geometric_entropy_series(a: f64, base: f64) -> Result<f64> {
    let ln_base = check_base(base)?;
    check_unit(a, "geometric parameter")?;
    let mut total = 0.0;
    let mut ak = 1.0;
    for k in 1.. {
        ak *= a;
        let term = ak / k as f64 * (1.0 - k as f64 * a.ln());
        total += term;
        if term < 1e-18 * total {
            break;
        }
    }
    Ok(total / ln_base)
}

/// `sum_{j>=2} P(A >= j) ln j` for `A ~ Poisson(x)`, plus a bound on the
/// dropped remainder. Tail probabilities are summed from the top so they
/// keep full relative precision for tiny `x`.
fn poisson_log_tail(x: f64) -> (f64, f64) {
    let kmax = (x + 12.0 * x.sqrt() + 40.0).ceil() as usize;
    let mut terms = Vec::with_capacity(kmax + 1);
    let mut t = (-x).exp();
    for k in 0..=kmax {
        terms.push(t);
        t *= x / (k + 1) as f64;
    }
    let mut tail = vec![0.0; kmax + 2];
    for k in (0..=kmax).rev() {
        tail[k] = tail[k + 1] + terms[k];
    }
    let mut sum = 0.0;
    let mut last = 0.0;
    for (j, &pj) in tail.iter().enumerate().take(kmax + 1).skip(2) {
        if pj < 1e-300 {
            break;
        }
        last = pj * (j as f64).ln();
        sum += last;
    }
    (sum, last)
}

pub fn poisson_entropy(x: f64, base: f64) -> Result<f64> {
    let ln_base = check_base(base)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("Poisson mean must be nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (tail, _) = poisson_log_tail(x);
    Ok((x - x * x.ln() + tail) / ln_base)
}

/// Extra entropy in the prime-power counts `A_k ~ Poisson(a^k/k)` beyond the
/// geometric total `Z = sum k A_k`.
///
/// Subtracting the series form of `h(Z)` term by term cancels the leading
/// `x_k + x_k ln(1/x_k)` parts, leaving `sum_k [x_k ln k + tail_k]`.
pub fn partition_information(a: f64, base: f64) -> Result<EntropyReport> {
    let ln_base = check_base(base)?;
    check_unit(a, "split parameter")?;
    let mut total = 0.0;
    let mut trunc = 0.0;
    let mut ak = 1.0;
    for k in 1.. {
        ak *= a;
        let x = ak / k as f64;
        if x < 1e-16 * a * a {
            trunc = 2.0 * x * (k as f64).ln().max(1.0) / (1.0 - a);
            break;
        }
        let (tail, last) = poisson_log_tail(x);
        total += x * (k as f64).ln() + tail;
        trunc += last;
    }
    Ok(EntropyReport {
        name: "partition_information".into(),
        value: total / ln_base,
        base,
        truncation_error: trunc / ln_base,
    })
}

/// `sum_{p <= P} d(1/p)` over all primes in the tables, with the tail beyond
/// the largest prime bounded through `d(a) <= a^2` (base 2 scale).
pub fn partition_information_prime_sum(tables: &PrimeTables, base: f64) -> Result<EntropyReport> {
    let ln_base = check_base(base)?;
    let mut total = 0.0;
    let mut trunc = 0.0;
    for &p in tables.primes() {
        let r = partition_information(1.0 / p as f64, base)?;
        total += r.value;
        trunc += r.truncation_error;
    }
    let top = tables.limit() as f64;
    let tail = 1.5 * 2f64.ln() / (top * top.ln()) / ln_base;
    Ok(EntropyReport {
        name: "partition_information_prime_sum".into(),
        value: total,
        base,
        truncation_error: trunc + tail,
    })
}

fn bernoulli_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.ln() - (1.0 - p) * (-p).ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct XiEntropy {
    /// `sum_{i<=n} h(xi_i)` summed directly.
    pub direct: f64,
    /// `log n + sum_{i<n} log i / (i+1)`.
    pub closed_form: f64,
    /// The same sum with leading term `log(n+1)`.
    pub closed_form_shifted: f64,
    /// `(log n)^2 / 2`, always in natural log.
    pub asymptote: f64,
}

pub fn xi_entropy_sum(n: u64, base: f64) -> Result<XiEntropy> {
    let ln_base = check_base(base)?;
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let direct: f64 = (2..=n).map(|i| bernoulli_entropy(1.0 / i as f64)).sum();
    let tail: f64 = (1..n).map(|i| (i as f64).ln() / (i + 1) as f64).sum();
    let ln_n = (n as f64).ln();
    Ok(XiEntropy {
        direct: direct / ln_base,
        closed_form: (ln_n + tail) / ln_base,
        closed_form_shifted: (((n + 1) as f64).ln() + tail) / ln_base,
        asymptote: ln_n * ln_n / 2.0,
    })
}

/// All partitions of `n` as multiplicity vectors `m` of length `n`, where
/// `m[k-1]` counts parts equal to `k`.
pub fn partitions(n: usize) -> Vec<Vec<u32>> {
    fn rec(left: usize, max_part: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max_part.min(left)).rev() {
            cur[part - 1] += 1;
            rec(left - part, part, cur, out);
            cur[part - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    rec(n, n, &mut cur, &mut out);
    out
}

/// Probability of a cycle type under a uniform permutation:
/// `prod_i 1 / (i^{c_i} c_i!)`.
pub fn cauchy_probability(mult: &[u32]) -> f64 {
    let mut ln_p = 0.0;
    for (i, &c) in mult.iter().enumerate() {
        let len = (i + 1) as f64;
        ln_p -= c as f64 * len.ln();
        ln_p -= (1..=c).map(|j| (j as f64).ln()).sum::<f64>();
    }
    ln_p.exp()
}

pub const MAX_BRUTEFORCE_N: usize = 40;

pub fn cycle_entropy_bruteforce(n: usize, base: f64) -> Result<f64> {
    let ln_base = check_base(base)?;
    if n > MAX_BRUTEFORCE_N {
        return Err(Error::TooFine(format!(
            "cycle-type enumeration supports n <= {MAX_BRUTEFORCE_N}, got {n}"
        )));
    }
    let h: f64 = partitions(n)
        .iter()
        .map(|m| {
            let p = cauchy_probability(m);
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum();
    Ok(h / ln_base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{E, LN_2};

    /// Direct `-sum p ln p` over a Poisson law.
    fn poisson_entropy_direct(x: f64) -> f64 {
        let mut h = 0.0;
        let mut p = (-x).exp();
        for k in 0..400 {
            if p > 0.0 {
                h -= p * p.ln();
            }
            p *= x / (k + 1) as f64;
        }
        h
    }

    #[test]
    fn geometric_half_is_two_bits() {
        assert!((geometric_entropy(0.5, 2.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_series_identity() {
        let a = 1.0 / 3.0;
        let closed = geometric_entropy(a, E).unwrap();
        let series = geometric_entropy_series(a, E).unwrap();
        assert!((closed - series).abs() < 1e-12);
    }

    #[test]
    fn poisson_entropy_limits_and_direct_sum() {
        assert_eq!(poisson_entropy(0.0, E).unwrap(), 0.0);
        assert!(poisson_entropy(1e-12, E).unwrap() < 1e-10);
        for x in [0.01, 0.3, 1.0, 4.5, 20.0] {
            let f = poisson_entropy(x, E).unwrap();
            assert!((f - poisson_entropy_direct(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn partition_information_matches_direct_difference() {
        for a in [0.5, 0.3, 0.1] {
            let mut sum_h = 0.0;
            let mut ak = 1.0;
            for k in 1..200 {
                ak *= a;
                let x: f64 = ak / k as f64;
                if x < 1e-30 {
                    break;
                }
                sum_h += poisson_entropy_direct(x);
            }
            let direct = sum_h - geometric_entropy(a, E).unwrap();
            let d = partition_information(a, E).unwrap().value;
            assert!((d - direct).abs() < 1e-12, "a = {a}: {d} vs {direct}");
        }
    }

    #[test]
    fn partition_information_values() {
        let d = partition_information(0.5, 2.0).unwrap().value;
        assert!((d - 0.375076).abs() < 1e-5, "d(1/2) = {d}");
        assert!((d - 0.375_076_222_812_627).abs() < 1e-12);
        let d3 = partition_information(1.0 / 3.0, 2.0).unwrap().value;
        assert!((d3 - 0.13879).abs() < 1e-4);
        assert!((d3 - 0.138_791_317_045_350).abs() < 1e-12);
    }

    #[test]
    fn partition_information_small_a() {
        for a in [0.1f64, 0.01, 0.001] {
            let d = partition_information(a, E).unwrap().value;
            assert!(d > 0.0);
            let ratio = d / (a * a * LN_2);
            let slack = 3.0 * a * (1.0 / a).ln().max(1.0);
            assert!((ratio - 1.0).abs() < slack.min(0.5), "a = {a}, ratio = {ratio}");
        }
    }

    #[test]
    fn independent_model_zero_probability() {
        for a in [0.5f64, 0.2, 1.0 / 7.0] {
            let mut s = 0.0;
            let mut ak = 1.0;
            for k in 1..400 {
                ak *= a;
                s += ak / k as f64;
            }
            assert!(((-s).exp() - (1.0 - a)).abs() < 1e-14);
        }
    }

    #[test]
    fn xi_entropy_small_and_large() {
        let one = xi_entropy_sum(1, E).unwrap();
        assert_eq!(one.direct, 0.0);
        let two = xi_entropy_sum(2, E).unwrap();
        assert!((two.direct - LN_2).abs() < 1e-15);
        assert!((two.closed_form - LN_2).abs() < 1e-15);
        assert!((two.closed_form_shifted - LN_2).abs() > 0.1);
        let big = xi_entropy_sum(10_000, E).unwrap();
        assert!((big.direct - big.closed_form).abs() < 1e-9);
        let ratio = big.direct / big.asymptote;
        assert!((0.8..=1.2).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..=10).map(|n| partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]);
        assert_eq!(partitions(40).len(), 37338);
    }

    #[test]
    fn cauchy_probabilities_sum_to_one() {
        for n in 1..=25 {
            let s: f64 = partitions(n).iter().map(|m| cauchy_probability(m)).sum();
            assert!((s - 1.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn cycle_entropy_small_cases() {
        assert_eq!(cycle_entropy_bruteforce(1, E).unwrap(), 0.0);
        assert!((cycle_entropy_bruteforce(2, E).unwrap() - LN_2).abs() < 1e-15);
        let ps: [f64; 3] = [1.0 / 3.0, 0.5, 1.0 / 6.0];
        let h3: f64 = ps.iter().map(|p| -p * p.ln()).sum();
        assert!((cycle_entropy_bruteforce(3, E).unwrap() - h3).abs() < 1e-14);
        assert!(cycle_entropy_bruteforce(41, E).is_err());
    }

    #[test]
    fn cycle_entropy_below_xi_sum() {
        for n in 1..=40u64 {
            let h = cycle_entropy_bruteforce(n as usize, E).unwrap();
            let xi = xi_entropy_sum(n, E).unwrap().direct;
            assert!(h <= xi + 1e-12, "n = {n}: {h} > {xi}");
        }
    }

    proptest! {
        #[test]
        fn partition_information_positive(a in 1e-4f64..0.99) {
            let r = partition_information(a, 2.0).unwrap();
            prop_assert!(r.value > 0.0);
            prop_assert!(r.truncation_error >= 0.0);
        }

        #[test]
        fn geometric_forms_agree(a in 1e-3f64..0.9) {
            let x = geometric_entropy(a, E).unwrap();
            let y = geometric_entropy_series(a, E).unwrap();
            prop_assert!((x - y).abs() < 1e-11 * x.max(1.0));
        }
    }
}
