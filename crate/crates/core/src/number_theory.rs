//! Sieve, exact factorization, prime-power enumeration and the Mertens-type
//! step functions that map the real line onto logarithms of prime powers.

use crate::error::{Error, Result};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// The prime-sum constant `B = lim (sum_{p<=x} 1/p - log log x)`.
pub const MERTENS_B: f64 = 0.261_497_212_847_642_8;

pub const MAX_TABLE_LIMIT: u64 = 100_000_000;

/// A prime power `q = p^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PrimePower {
    pub q: u64,
    pub p: u32,
    pub k: u32,
}

impl PrimePower {
    pub fn ln(&self) -> f64 {
        (self.q as f64).ln()
    }

    /// `1/(k q)`, the Poisson mean of the natural prime-power multiset.
    pub fn poisson_mean(&self) -> f64 {
        1.0 / (self.k as f64 * self.q as f64)
    }
}

/// Smallest-prime-factor table plus the primes and prime powers up to `limit`.
#[derive(Debug, Clone)]
pub struct PrimeTables {
    limit: u64,
    spf: Vec<u32>,
    primes: Vec<u32>,
    prime_powers: Vec<PrimePower>,
}

impl PrimeTables {
    /// Linear sieve up to `limit` (inclusive).
    pub fn build(limit: u64) -> Result<Self> {
        if !(2..=MAX_TABLE_LIMIT).contains(&limit) {
            return Err(Error::Config(format!(
                "table limit {limit} outside 2..={MAX_TABLE_LIMIT}"
            )));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let m = i * p as usize;
                if m > n {
                    break;
                }
                spf[m] = p;
            }
        }

        let mut prime_powers = Vec::with_capacity(primes.len() + 64);
        for &p in &primes {
            let mut q = p as u64;
            let mut k = 1;
            while q <= limit {
                prime_powers.push(PrimePower { q, p, k });
                q *= p as u64;
                k += 1;
            }
        }
        prime_powers.sort_unstable();

        Ok(Self {
            limit,
            spf,
            primes,
            prime_powers,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn prime_powers(&self) -> &[PrimePower] {
        &self.prime_powers
    }

    pub fn smallest_prime_factor(&self, m: u64) -> Option<u32> {
        if m < 2 || m > self.limit {
            None
        } else {
            Some(self.spf[m as usize])
        }
    }

    pub fn is_prime(&self, m: u64) -> bool {
        self.smallest_prime_factor(m) == Some(m as u32)
    }

    /// π(x) for real `x`; exact for `x <= limit`.
    pub fn pi(&self, x: f64) -> Result<usize> {
        if x < 2.0 {
            return Ok(0);
        }
        let xf = x.floor();
        if xf > self.limit as f64 {
            return Err(Error::BeyondTable {
                value: xf as u64,
                limit: self.limit,
            });
        }
        let xi = xf as u64;
        Ok(self.primes.partition_point(|&p| p as u64 <= xi))
    }

    /// π(k) for an integer `k <= limit`.
    pub fn pi_int(&self, k: u64) -> usize {
        debug_assert!(k <= self.limit);
        self.primes.partition_point(|&p| p as u64 <= k)
    }

    /// FNV-1a digest of the limit and the prime list.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.limit);
        for &p in &self.primes {
            eat(p as u64);
        }
        h
    }

    /// Number of prime powers `q <= x`.
    pub fn count_prime_powers(&self, x: u64) -> usize {
        self.prime_powers.partition_point(|pp| pp.q <= x)
    }

    pub fn factor(&self, m: u64) -> Result<FactoredInteger> {
        if m == 0 {
            return Err(Error::InvalidParameter("cannot factor 0".into()));
        }
        if m > self.limit {
            return Err(Error::BeyondTable {
                value: m,
                limit: self.limit,
            });
        }
        let mut factors: Vec<(u32, u32)> = Vec::new();
        let mut r = m as usize;
        while r > 1 {
            let p = self.spf[r];
            let mut e = 0;
            while r % p as usize == 0 {
                r /= p as usize;
                e += 1;
            }
            factors.push((p, e));
        }
        Ok(FactoredInteger { value: m, factors })
    }
}

/// A positive integer together with its prime factorization, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactoredInteger {
    value: u64,
    factors: Vec<(u32, u32)>,
}

impl FactoredInteger {
    pub fn one() -> Self {
        Self {
            value: 1,
            factors: Vec::new(),
        }
    }

    /// Build from (prime, exponent) pairs; zero exponents are dropped and
    /// repeated primes merged.
    pub fn from_factors<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Result<Self> {
        let mut factors: Vec<(u32, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        factors.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += e,
                _ => merged.push((p, e)),
            }
        }
        let mut value: u64 = 1;
        for &(p, e) in &merged {
            for _ in 0..e {
                value = value.checked_mul(p as u64).ok_or_else(|| {
                    Error::InvalidParameter("factored integer overflows u64".into())
                })?;
            }
        }
        Ok(Self {
            value,
            factors: merged,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u32, u32)] {
        &self.factors
    }

    pub fn multiplicity(&self, p: u32) -> u32 {
        self.factors
            .binary_search_by_key(&p, |&(q, _)| q)
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    /// Ω: prime factors counted with multiplicity.
    pub fn big_omega(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    /// ω: distinct prime factors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    /// Largest squarefree divisor.
    pub fn radical(&self) -> u64 {
        self.factors.iter().map(|&(p, _)| p as u64).product()
    }

    pub fn recompute_value(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| (p as u64).pow(e))
            .product()
    }

    /// Prime factors with multiplicity, in nonincreasing order.
    pub fn prime_list_desc(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.big_omega() as usize);
        for &(p, e) in self.factors.iter().rev() {
            out.extend(std::iter::repeat_n(p, e as usize));
        }
        out
    }
}

/// Which jump weights define the Mertens step function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MertensVariant {
    /// Jumps of `1/p` at each prime, offset `-B`.
    PrimesOneOverP,
    /// Jumps of `1/(kq)` at each prime power `q = p^k`, offset `-γ`.
    PrimePowersOneOverKq,
}

impl MertensVariant {
    pub fn offset(self) -> f64 {
        match self {
            MertensVariant::PrimesOneOverP => MERTENS_B,
            MertensVariant::PrimePowersOneOverKq => EULER_GAMMA,
        }
    }
}

/// `B` recomputed from `γ - Σ_{k>=2} Σ_p 1/(k p^k)` over the given primes,
/// keeping only terms with `k p^k <= 10^12`.
pub fn recompute_mertens_b(primes: &[u32]) -> f64 {
    let mut tail = 0.0;
    // Ascending p gives decreasing terms; summing from the largest primes
    // first keeps the small contributions from being swamped.
    for &p in primes.iter().rev() {
        let pf = p as f64;
        let mut pk = pf * pf;
        let mut k = 2.0;
        while k * pk <= 1e12 {
            tail += 1.0 / (k * pk);
            pk *= pf;
            k += 1.0;
        }
    }
    EULER_GAMMA - tail
}

/// The step function `f` (partial sums minus the constant) and its step
/// inverse `g`, with `h = g ∘ log`.
#[derive(Debug, Clone)]
pub struct MertensMap {
    variant: MertensVariant,
    offset: f64,
    /// The prime power at each jump, ascending.
    items: Vec<PrimePower>,
    /// ln q at each jump, ascending.
    log_q: Vec<f64>,
    /// The value f(ln q) just after the jump at q.
    breakpoints: Vec<f64>,
    /// ln of the largest argument e^x for which the exact partial sum is used.
    crossover_ln: f64,
}

impl MertensMap {
    pub fn new(tables: &PrimeTables, variant: MertensVariant) -> Result<Self> {
        let offset = variant.offset();
        if variant == MertensVariant::PrimesOneOverP && tables.limit() >= 1_000_000 {
            let upto = tables.primes().partition_point(|&p| p <= 1_000_000);
            let b = recompute_mertens_b(&tables.primes()[..upto]);
            if (b - MERTENS_B).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "recomputed B = {b} disagrees with the stored constant {MERTENS_B}"
                )));
            }
        }
        let items: Vec<PrimePower> = match variant {
            MertensVariant::PrimesOneOverP => tables
                .primes()
                .iter()
                .map(|&p| PrimePower { q: p as u64, p, k: 1 })
                .collect(),
            MertensVariant::PrimePowersOneOverKq => tables.prime_powers().to_vec(),
        };
        let log_q: Vec<f64> = items.iter().map(|pp| pp.ln()).collect();
        let jumps: Vec<f64> = match variant {
            MertensVariant::PrimesOneOverP => items.iter().map(|pp| 1.0 / pp.q as f64).collect(),
            MertensVariant::PrimePowersOneOverKq => items.iter().map(|pp| pp.poisson_mean()).collect(),
        };
        let mut acc = -offset;
        let breakpoints = jumps
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            variant,
            offset,
            items,
            log_q,
            breakpoints,
            crossover_ln: (tables.limit() as f64).ln(),
        })
    }

    /// Lower the crossover beyond which `f` is replaced by `ln x`.
    pub fn with_crossover(mut self, crossover: f64) -> Self {
        self.crossover_ln = crossover.ln().min(self.crossover_ln);
        self
    }

    pub fn variant(&self) -> MertensVariant {
        self.variant
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn crossover_ln(&self) -> f64 {
        self.crossover_ln
    }

    pub fn log_q(&self) -> &[f64] {
        &self.log_q
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `f(x) = -c + Σ_{q <= e^x} w_q`, or `ln x` beyond the crossover.
    pub fn f(&self, x: f64) -> f64 {
        if x > self.crossover_ln {
            return x.ln();
        }
        let idx = self.log_q.partition_point(|&l| l <= x);
        if idx == 0 {
            -self.offset
        } else {
            self.breakpoints[idx - 1]
        }
    }

    /// `h(x) = ln q` iff `ln x ∈ (f(ln q -), f(ln q)]`, and `0` for
    /// `ln x <= -c`. Arguments past the last tabulated breakpoint map to
    /// themselves, the asymptote of `h`.
    pub fn h(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0);
        let lx = x.ln();
        if lx <= -self.offset {
            return 0.0;
        }
        let idx = self.breakpoints.partition_point(|&b| b < lx);
        if idx >= self.breakpoints.len() || self.log_q[idx] > self.crossover_ln {
            return x;
        }
        self.log_q[idx]
    }

    /// The prime power `q` with `h(x) = ln q`, or `None` when `h(x) = 0` or
    /// `x` lies beyond the tabulated range.
    pub fn h_item(&self, x: f64) -> Option<PrimePower> {
        let lx = x.ln();
        if lx <= -self.offset {
            return None;
        }
        let idx = self.breakpoints.partition_point(|&b| b < lx);
        if idx >= self.breakpoints.len() || self.log_q[idx] > self.crossover_ln {
            return None;
        }
        Some(self.items[idx])
    }

    /// Sum of all jump sizes, i.e. `f(ln limit) + c`.
    pub fn total_jump(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b + self.offset)
    }
}

/// `R(x) = Σ_{q <= x} ln q / (k q) - ln x`.
pub fn chebyshev_r(x: f64, tables: &PrimeTables) -> Result<f64> {
    if x > tables.limit() as f64 {
        return Err(Error::BeyondTable {
            value: x as u64,
            limit: tables.limit(),
        });
    }
    let s: f64 = tables
        .prime_powers()
        .iter()
        .take_while(|pp| (pp.q as f64) <= x)
        .map(|pp| (pp.p as f64).ln() / pp.q as f64)
        .sum();
    Ok(s - x.ln())
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_is_prime(m: u64) -> bool {
        m >= 2 && (2..).take_while(|d| d * d <= m).all(|d| m % d != 0)
    }

    #[test]
    fn tables_at_ten() {
        let t = PrimeTables::build(10).unwrap();
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
        let qs: Vec<u64> = t.prime_powers().iter().map(|pp| pp.q).collect();
        assert_eq!(qs, vec![2, 3, 4, 5, 7, 8, 9]);
    }

    #[test]
    fn tables_small_limits() {
        assert_eq!(PrimeTables::build(2).unwrap().primes(), &[2]);
        assert_eq!(PrimeTables::build(30).unwrap().pi(30.0).unwrap(), 10);
        assert!(PrimeTables::build(1).is_err());
        assert!(PrimeTables::build(MAX_TABLE_LIMIT + 1).is_err());
    }

    #[test]
    fn sieve_matches_trial_division() {
        let t = PrimeTables::build(5000).unwrap();
        for m in 2..=5000u64 {
            assert_eq!(t.is_prime(m), naive_is_prime(m), "m = {m}");
            let s = t.smallest_prime_factor(m).unwrap() as u64;
            assert_eq!(m % s, 0);
            assert!((2..s).all(|d| m % d != 0));
        }
        for x in [0.5, 2.0, 2.9, 100.0, 4999.5] {
            let direct = (2..=x as u64).filter(|&m| naive_is_prime(m)).count();
            assert_eq!(t.pi(x).unwrap(), direct);
        }
        for pp in t.prime_powers() {
            assert_eq!((pp.p as u64).pow(pp.k), pp.q);
            assert!(naive_is_prime(pp.p as u64));
        }
    }

    #[test]
    fn factor_examples() {
        let t = PrimeTables::build(30_000).unwrap();
        assert_eq!(t.factor(40).unwrap().factors(), &[(2, 3), (5, 1)]);
        assert!(t.factor(1).unwrap().factors().is_empty());
        assert_eq!(
            t.factor(24024).unwrap().factors(),
            &[(2, 3), (3, 1), (7, 1), (11, 1), (13, 1)]
        );
        assert!(matches!(t.factor(30_001), Err(Error::BeyondTable { .. })));
    }

    #[test]
    fn factor_round_trip_and_omegas() {
        let t = PrimeTables::build(20_000).unwrap();
        for m in 1..=20_000u64 {
            let f = t.factor(m).unwrap();
            assert_eq!(f.recompute_value(), m);
            let mut r = m;
            let mut big = 0;
            let mut small = 0;
            let mut d = 2;
            while r > 1 {
                if r % d == 0 {
                    small += 1;
                    while r % d == 0 {
                        r /= d;
                        big += 1;
                    }
                }
                d += 1;
            }
            assert_eq!(f.big_omega(), big);
            assert_eq!(f.omega(), small);
        }
    }

    #[test]
    fn mertens_f_examples() {
        let t = PrimeTables::build(1000).unwrap();
        let kq = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq).unwrap();
        assert!((kq.f(0.7) - (-EULER_GAMMA + 0.5)).abs() < 1e-15);
        assert_eq!(kq.f(1e-9), -EULER_GAMMA);
        let p = MertensMap::new(&t, MertensVariant::PrimesOneOverP).unwrap();
        let x = 3f64.ln();
        assert!((p.f(x) - (-MERTENS_B + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn h_map_examples() {
        let t = PrimeTables::build(1000).unwrap();
        let m = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq).unwrap();
        assert_eq!(m.h(0.5), 0.0);
        assert_eq!(m.h(0.6), 2f64.ln());
        let x = (-EULER_GAMMA + 0.5 + 1.0 / 3.0 + 0.05).exp();
        assert_eq!(m.h(x), 4f64.ln());
        // Right-closed bins: the endpoint itself belongs to the lower bin.
        let edge = (-EULER_GAMMA + 0.5).exp();
        assert_eq!(m.h(edge * (1.0 - 1e-12)), 2f64.ln());
        assert_eq!(m.h(edge * (1.0 + 1e-12)), 3f64.ln());
        assert_eq!(m.h_item(0.5), None);
        assert_eq!(m.h_item(x).map(|pp| (pp.q, pp.p, pp.k)), Some((4, 2, 2)));
    }

    #[test]
    fn h_is_step_inverse_of_f() {
        let t = PrimeTables::build(100_000).unwrap();
        let m = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq).unwrap();
        let mut x = 0.01;
        let mut prev = 0.0;
        while x < 10.0 {
            let y = m.h(x);
            assert!(y >= prev);
            prev = y;
            if y > 0.0 {
                let below = m.f(y - 1e-12);
                assert!(below < x.ln() && x.ln() <= m.f(y) + 1e-15);
            }
            x *= 1.0137;
        }
    }

    #[test]
    fn chebyshev_r_examples() {
        let t = PrimeTables::build(1_000_000).unwrap();
        let r2 = chebyshev_r(2.0, &t).unwrap();
        assert!((r2 - (2f64.ln() / 2.0 - 2f64.ln())).abs() < 1e-15);
        let below = chebyshev_r(1.999, &t).unwrap();
        assert!((below + 1.999f64.ln()).abs() < 1e-15);
        let big = chebyshev_r(1e6, &t).unwrap();
        assert!((-2.0..=2.0).contains(&big), "R(1e6) = {big}");
    }

    #[test]
    fn b_recomputation_matches_literal() {
        let t = PrimeTables::build(1_000_000).unwrap();
        let b = recompute_mertens_b(t.primes());
        assert!((b - 0.261497).abs() < 1e-6, "B = {b}");
        assert!(MertensMap::new(&t, MertensVariant::PrimesOneOverP).is_ok());
    }

    #[test]
    fn prime_power_jumps_track_loglog() {
        let t = PrimeTables::build(10_000_000).unwrap();
        let m = MertensMap::new(&t, MertensVariant::PrimePowersOneOverKq).unwrap();
        let expect = EULER_GAMMA + (1e7f64).ln().ln();
        assert!((m.total_jump() - expect).abs() < 0.05);
        for x in [10.0, 12.0, 14.0, 16.0] {
            assert!((m.f(x) - x.ln()).abs() < 0.02, "x = {x}");
        }
    }
}
