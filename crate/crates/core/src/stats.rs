//! Mergeable accumulators, goodness-of-fit helpers and the block-parallel
//! trial runner shared by the Monte Carlo experiments.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::samplers::RandomSource;

/// Trials per random stream. Block `b` of a run always uses stream `b`, so
/// results do not depend on how many worker threads are available.
pub const BLOCK_SIZE: u64 = 2048;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let m = self.sum / n;
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Runs `trials` independent trials split into fixed blocks, one random
/// stream per block, and folds the per-block states in block order.
pub fn run_blocks<T, F, M>(seed: u64, trials: u64, init: T, block: F, merge: M) -> T
where
    T: Send + Sync + Clone,
    F: Fn(&mut RandomSource, u64, &mut T) + Sync,
    M: Fn(&mut T, T),
{
    let blocks = trials.div_ceil(BLOCK_SIZE);
    let parts: Vec<T> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RandomSource::new(seed, b);
            let count = BLOCK_SIZE.min(trials - b * BLOCK_SIZE);
            let mut state = init.clone();
            block(&mut rng, count, &mut state);
            state
        })
        .collect();
    let mut out = init;
    for part in parts {
        merge(&mut out, part);
    }
    out
}

/// Mean and standard error of a per-trial statistic.
pub fn mean_of<F>(seed: u64, trials: u64, f: F) -> Accumulator
where
    F: Fn(&mut RandomSource) -> f64 + Sync,
{
    run_blocks(
        seed,
        trials,
        Accumulator::default(),
        |rng, count, acc| {
            for _ in 0..count {
                acc.push(f(rng));
            }
        },
        |acc, part| acc.merge(&part),
    )
}

/// Pearson statistic and upper-tail p-value for observed counts against
/// expected counts. Bins with zero expectation must have zero observations.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            if o > 0 {
                return (f64::INFINITY, 0.0);
            }
            continue;
        }
        let d = o as f64 - e;
        stat += d * d / e;
        dof += 1;
    }
    if dof < 2 {
        return (stat, 1.0);
    }
    let law = ChiSquared::new((dof - 1) as f64).expect("positive degrees of freedom");
    (stat, 1.0 - law.cdf(stat))
}

/// Merges adjacent bins from the right until every expected count is at
/// least `min_expected`.
pub fn pool_tail(observed: &[u64], expected: &[f64], min_expected: f64) -> (Vec<u64>, Vec<f64>) {
    let mut obs = observed.to_vec();
    let mut exp = expected.to_vec();
    while exp.len() > 1 && *exp.last().unwrap() < min_expected {
        let o = obs.pop().unwrap();
        let e = exp.pop().unwrap();
        *obs.last_mut().unwrap() += o;
        *exp.last_mut().unwrap() += e;
    }
    (obs, exp)
}

/// Poisson probabilities P(X = 0..max_k - 1) followed by P(X >= max_k).
pub fn poisson_bins(mean: f64, max_k: usize) -> Vec<f64> {
    let mut probs = Vec::with_capacity(max_k + 1);
    let mut p = (-mean).exp();
    let mut acc = 0.0;
    for k in 0..max_k {
        probs.push(p);
        acc += p;
        p *= mean / (k + 1) as f64;
    }
    probs.push((1.0 - acc).max(0.0));
    probs
}

/// Two-sample chi-square homogeneity test on binned counts.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (na, nb) = (na as f64, nb as f64);
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let tot = (x + y) as f64;
        if tot == 0.0 {
            continue;
        }
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
        dof += 1;
    }
    if dof < 2 {
        return (stat, 1.0);
    }
    let law = ChiSquared::new((dof - 1) as f64).expect("positive degrees of freedom");
    (stat, 1.0 - law.cdf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut whole = Accumulator::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut left = Accumulator::default();
        let mut right = Accumulator::default();
        xs[..37].iter().for_each(|&x| left.push(x));
        xs[37..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        assert_eq!(left.count, whole.count);
        assert!((left.mean() - whole.mean()).abs() < 1e-14);
        assert!((left.variance() - whole.variance()).abs() < 1e-12);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let (stat, p) = chi_square(&[10, 20, 30], &[10.0, 20.0, 30.0]);
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_gross_misfit() {
        let (_, p) = chi_square(&[100, 0], &[50.0, 50.0]);
        assert!(p < 1e-10);
    }

    #[test]
    fn pooling_keeps_totals() {
        let (o, e) = pool_tail(&[50, 30, 3, 1], &[49.0, 31.0, 2.5, 1.5], 5.0);
        assert_eq!(o, vec![50, 34]);
        assert_eq!(e, vec![49.0, 35.0]);
    }

    #[test]
    fn run_blocks_is_deterministic() {
        let a = mean_of(7, 5000, |rng| rng.uniform_open());
        let b = mean_of(7, 5000, |rng| rng.uniform_open());
        assert_eq!(a, b);
        assert_eq!(a.count, 5000);
    }
}
