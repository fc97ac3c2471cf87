//! The Feller coupling of random permutations of every size.
//!
//! Independent bits `ξ_i ~ Bernoulli(1/i)` close off cycles in canonical
//! cycle notation. Spacings between consecutive ones of `1 ξ_2 … ξ_n 1` give
//! the cycle type of a uniform permutation of `n`; spacings of the whole
//! sequence are independent `Poisson(1/i)` counts.

use crate::error::{Error, Result};
use crate::samplers::{sample_poisson, RandomSource};

use super::tail::{integer_tail_intensity, TailLabelLaw};

pub const MIN_HORIZON_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FellerSample {
    pub n: u64,
    pub horizon: u64,
    /// Positions `i <= horizon` with `ξ_i = 1`, ascending; always starts at 1.
    pub ones: Vec<u64>,
    /// `C_i(n)` at index `i - 1`.
    pub cycle_counts_n: Vec<u64>,
    /// `C_i(∞)` for `i <= n`, counted within the horizon.
    pub cycle_counts_inf: Vec<u64>,
    /// `A(n)`.
    pub first_cycle_len: u64,
    pub j_perm: u64,
    /// Bound on the expected error in `Σ |C_i(n) - C_i(∞)|` from the horizon.
    pub truncation_bound: f64,
}

impl FellerSample {
    pub fn from_ones(n: u64, horizon: u64, ones: Vec<u64>) -> Result<Self> {
        if n < 1 || horizon < n {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= n <= horizon, got n = {n}, horizon = {horizon}"
            )));
        }
        if ones.first() != Some(&1) || ones.windows(2).any(|w| w[0] >= w[1]) || *ones.last().unwrap() > horizon {
            return Err(Error::InvalidParameter("ones must ascend from position 1 within the horizon".into()));
        }
        let nu = n as usize;
        let mut cn = vec![0u64; nu];
        let mut cinf = vec![0u64; nu];
        let upto = ones.partition_point(|&j| j <= n);
        for w in ones.windows(2) {
            let s = (w[1] - w[0]) as usize;
            if s <= nu {
                cinf[s - 1] += 1;
            }
        }
        for w in ones[..upto].windows(2) {
            cn[(w[1] - w[0]) as usize - 1] += 1;
        }
        let last = ones[upto - 1];
        let a = n + 1 - last;
        cn[a as usize - 1] += 1;
        Ok(FellerSample {
            n,
            horizon,
            ones,
            cycle_counts_n: cn,
            cycle_counts_inf: cinf,
            first_cycle_len: a,
            j_perm: n - a,
            truncation_bound: n as f64 / horizon as f64,
        })
    }

    /// Builds a sample from an explicit bit string `ξ_1 ξ_2 …`; the horizon is
    /// the string length.
    pub fn from_bits(bits: &str, n: u64) -> Result<Self> {
        let mut ones = Vec::new();
        for (i, c) in bits.chars().enumerate() {
            match c {
                '1' => ones.push(i as u64 + 1),
                '0' => {}
                _ => return Err(Error::InvalidParameter(format!("bad bit {c:?}"))),
            }
        }
        Self::from_ones(n, bits.len() as u64, ones)
    }

    pub fn xi(&self, i: u64) -> bool {
        self.ones.binary_search(&i).is_ok()
    }

    /// The spacings `B_1, B_2, …` of the sequence within the horizon.
    pub fn spacings(&self) -> Vec<u64> {
        self.ones.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `Σ_{i<=n} |C_i(n) - C_i(∞)|`.
    pub fn indel(&self) -> u64 {
        self.extra() + self.missing()
    }

    /// `Σ (C_i(n) - C_i(∞))^+`.
    pub fn extra(&self) -> u64 {
        self.cycle_counts_n
            .iter()
            .zip(&self.cycle_counts_inf)
            .map(|(&c, &z)| c.saturating_sub(z))
            .sum()
    }

    /// `Σ (C_i(∞) - C_i(n))^+`.
    pub fn missing(&self) -> u64 {
        self.cycle_counts_n
            .iter()
            .zip(&self.cycle_counts_inf)
            .map(|(&c, &z)| z.saturating_sub(c))
            .sum()
    }

    /// `C(n) <= C(∞) + e_{A(n)}` componentwise.
    pub fn is_monotone(&self) -> bool {
        self.cycle_counts_n
            .iter()
            .zip(&self.cycle_counts_inf)
            .enumerate()
            .all(|(i, (&c, &z))| c <= z + u64::from(i as u64 + 1 == self.first_cycle_len))
    }
}

/// Samples the ones of `ξ` up to `T = ceil(horizon_factor · n)`. From a one
/// at `j`, the next one lies beyond `m` with probability `j/m`.
pub fn feller_sample(n: u64, horizon_factor: f64, rng: &mut RandomSource) -> Result<FellerSample> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(horizon_factor >= MIN_HORIZON_FACTOR) {
        return Err(Error::InvalidParameter(format!(
            "horizon factor {horizon_factor} below {MIN_HORIZON_FACTOR}; truncation bound too loose"
        )));
    }
    let horizon = (horizon_factor * n as f64).ceil() as u64;
    let mut ones = vec![1u64];
    let mut j = 1u64;
    loop {
        let next = (j as f64 / rng.uniform_open()).floor() + 1.0;
        if next > horizon as f64 {
            break;
        }
        j = next as u64;
        ones.push(j);
    }
    FellerSample::from_ones(n, horizon, ones)
}

/// Prefixes of `1 R_1 R_2 …` where the `R` are the strings `0^{i-1} 1`,
/// `Poisson(1/i)` copies of each, taken in decreasing order of labels `S/i`.
/// Every prefix has the law of `ξ_1 … ξ_len`.
#[derive(Debug, Clone)]
pub struct JansonPrefix {
    len: u64,
    tail: TailLabelLaw,
}

impl JansonPrefix {
    pub fn new(len: u64) -> Result<Self> {
        if len < 1 {
            return Err(Error::InvalidParameter("prefix length must be positive".into()));
        }
        let tail = TailLabelLaw::new(|t| integer_tail_intensity(len, t), (len + 1) as f64)?;
        Ok(JansonPrefix { len, tail })
    }

    pub fn sample(&self, rng: &mut RandomSource) -> Result<Vec<bool>> {
        let mut items: Vec<(f64, u64)> = Vec::new();
        for i in 1..=self.len {
            let copies = sample_poisson(1.0 / i as f64, rng)?;
            for _ in 0..copies {
                items.push((rng.exp1() / i as f64, i));
            }
        }
        let m = self.tail.sample(rng);
        items.sort_by(|a, b| b.0.total_cmp(&a.0));
        let len = self.len as usize;
        let mut bits = Vec::with_capacity(len + 1);
        bits.push(true);
        for &(label, i) in &items {
            if label < m || bits.len() >= len {
                break;
            }
            bits.extend(std::iter::repeat_n(false, i as usize - 1));
            bits.push(true);
        }
        bits.resize(len.max(bits.len()), false);
        bits.truncate(len);
        Ok(bits)
    }
}
