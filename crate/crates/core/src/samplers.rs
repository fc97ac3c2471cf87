//! Seeded samplers for the elementary laws and point processes.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::number_theory::{FactoredInteger, PrimeTables};

/// A reproducible random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomSource {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on (0, 1].
    pub fn uniform_open(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    /// Standard exponential.
    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// P(Z >= k) = a^k.
pub fn sample_geometric(a: f64, rng: &mut RandomSource) -> Result<u64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric parameter must lie in (0,1), got {a}"
        )));
    }
    Ok(geometric_unchecked(a, rng))
}

pub(crate) fn geometric_unchecked(a: f64, rng: &mut RandomSource) -> u64 {
    let u = rng.uniform_open();
    if u > a {
        return 0;
    }
    (u.ln() / a.ln()).floor() as u64
}

pub fn sample_poisson(mean: f64, rng: &mut RandomSource) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Poisson mean must be finite and nonnegative, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let law = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let x: f64 = law.sample(rng);
    Ok(x as u64)
}

pub fn sample_exponential(rate: f64, rng: &mut RandomSource) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponential rate must be positive, got {rate}"
        )));
    }
    Ok(rng.exp1() / rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedItem {
    pub identity: u64,
    pub weight: f64,
    pub label: f64,
}

/// Attaches exponential labels `S / weight` and sorts by increasing label,
/// which yields a size-biased permutation of the items: the smallest label
/// belongs to item `i` with probability `w_i / sum w`.
pub fn size_biased_order(items: &[(u64, f64)], rng: &mut RandomSource) -> Result<Vec<WeightedItem>> {
    if let Some(&(id, w)) = items.iter().find(|(_, w)| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "item {id} has nonpositive weight {w}"
        )));
    }
    loop {
        let mut out: Vec<WeightedItem> = items
            .iter()
            .map(|&(identity, weight)| WeightedItem {
                identity,
                weight,
                label: rng.exp1() / weight,
            })
            .collect();
        out.sort_by(|a, b| a.label.total_cmp(&b.label));
        if out.windows(2).all(|w| w[0].label < w[1].label) {
            return Ok(out);
        }
    }
}

pub(crate) fn sort_by_label_desc(items: &mut [WeightedItem]) {
    items.sort_by(|a, b| b.label.total_cmp(&a.label));
}

/// The harmonic law P(H = i) = (1/i) / H_n on 1..n.
#[derive(Debug, Clone)]
pub struct HarmonicLaw {
    cumulative: Vec<f64>,
}

impl HarmonicLaw {
    pub fn new(n: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("harmonic law needs n >= 1".into()));
        }
        let mut cumulative = Vec::with_capacity(n as usize);
        let mut acc = 0.0;
        for i in 1..=n {
            acc += 1.0 / i as f64;
            cumulative.push(acc);
        }
        Ok(HarmonicLaw { cumulative })
    }

    pub fn n(&self) -> u64 {
        self.cumulative.len() as u64
    }

    pub fn harmonic_number(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn prob(&self, i: u64) -> f64 {
        if i == 0 || i > self.n() {
            return 0.0;
        }
        1.0 / (i as f64 * self.harmonic_number())
    }

    pub fn sample(&self, rng: &mut RandomSource) -> u64 {
        let target = rng.uniform_open() * self.harmonic_number();
        let idx = self.cumulative.partition_point(|&c| c < target);
        (idx.min(self.cumulative.len() - 1) + 1) as u64
    }
}

pub fn sample_harmonic(n: u64, rng: &mut RandomSource) -> Result<u64> {
    Ok(HarmonicLaw::new(n)?.sample(rng))
}

pub fn sample_uniform_factored(
    n: u64,
    tables: &PrimeTables,
    rng: &mut RandomSource,
) -> Result<FactoredInteger> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > tables.limit() {
        return Err(Error::BeyondTable {
            value: n,
            limit: tables.limit(),
        });
    }
    let m = rng.random_range(1..=n);
    tables.factor(m)
}

/// Points of the scale-invariant Poisson process inside `(lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointWindow {
    pub lo: f64,
    pub hi: f64,
    /// Strictly decreasing.
    pub points: Vec<f64>,
}

impl PointWindow {
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.points.iter().filter(|&&x| x > a && x < b).count()
    }

    /// Differences of consecutive points, largest point first.
    pub fn spacings(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

fn check_window(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "window needs 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

pub fn sample_scale_invariant_window(lo: f64, hi: f64, rng: &mut RandomSource) -> Result<PointWindow> {
    check_window(lo, hi)?;
    let span = (hi / lo).ln();
    let count = sample_poisson(span, rng)?;
    let mut points: Vec<f64> = (0..count)
        .map(|_| lo * (span * (1.0 - rng.uniform_open())).exp())
        .filter(|&x| x > lo && x < hi)
        .collect();
    points.sort_by(|a, b| b.total_cmp(a));
    points.dedup();
    Ok(PointWindow { lo, hi, points })
}

/// Exponentiates a unit-rate Poisson process on `(ln lo, ln hi)` built from
/// exponential gaps. Same law as [`sample_scale_invariant_window`].
pub fn sample_exp_mapped_window(lo: f64, hi: f64, rng: &mut RandomSource) -> Result<PointWindow> {
    check_window(lo, hi)?;
    let (a, b) = (lo.ln(), hi.ln());
    let mut l = a;
    let mut points = Vec::new();
    loop {
        l += rng.exp1();
        if l >= b {
            break;
        }
        points.push(l.exp());
    }
    points.reverse();
    Ok(PointWindow { lo, hi, points })
}

/// Poisson process on `(0,b]^2` with intensity `e^{-wy} dw dy`, by thinning
/// a unit-intensity proposal.
pub fn sample_labeled_square(b: f64, rng: &mut RandomSource) -> Result<Vec<(f64, f64)>> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("square side must be positive, got {b}")));
    }
    let proposals = sample_poisson(b * b, rng)?;
    let mut out = Vec::new();
    for _ in 0..proposals {
        let w = b * rng.uniform_open();
        let y = b * rng.uniform_open();
        if rng.uniform_open() <= (-w * y).exp() {
            out.push((w, y));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PDVector {
    /// Nonincreasing.
    pub components: Vec<f64>,
    /// Mass left unassigned by truncation.
    pub residual: f64,
    /// The first point X_1 below 1.
    pub first_point: f64,
}

/// Stick-breaking points `1 > X_1 > X_2 > ...` of the scale-invariant process
/// below `top`, stopping once the current point drops below `cutoff`.
pub(crate) fn points_below(top: f64, cutoff: f64, rng: &mut RandomSource) -> Vec<f64> {
    let mut pts = Vec::new();
    let mut x = top * rng.uniform_open();
    pts.push(x);
    while x >= cutoff {
        x *= rng.uniform_open();
        pts.push(x);
    }
    pts
}

/// Poisson-Dirichlet(1) vector as ranked spacings `(1 - X_1, X_1 - X_2, ...)`.
pub fn sample_pd(rng: &mut RandomSource, mass_tol: f64) -> Result<PDVector> {
    if !(mass_tol > 0.0 && mass_tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mass tolerance must lie in (0,1), got {mass_tol}"
        )));
    }
    let pts = points_below(1.0, mass_tol, rng);
    let mut components = Vec::with_capacity(pts.len());
    components.push(1.0 - pts[0]);
    components.extend(pts.windows(2).map(|w| w[0] - w[1]));
    components.retain(|&v| v > 0.0);
    components.sort_by(|a, b| b.total_cmp(a));
    Ok(PDVector {
        components,
        residual: *pts.last().unwrap(),
        first_point: pts[0],
    })
}

/// Splits `z` into counts `(A_1, A_2, ...)` with `sum k A_k = z`, drawn from
/// the law of independent `A_k ~ Poisson(a^k/k)` conditioned on that sum.
///
/// The conditional law does not depend on `a`: it is the cycle type of a
/// uniform permutation of `z` elements, sampled by peeling off the cycle of
/// the smallest remaining element, whose length is uniform.
pub fn split_geometric(z: u64, a: f64, rng: &mut RandomSource) -> Result<Vec<u64>> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split parameter must lie in (0,1), got {a}"
        )));
    }
    Ok(split_unchecked(z, rng))
}

pub(crate) fn split_unchecked(z: u64, rng: &mut RandomSource) -> Vec<u64> {
    let mut counts = vec![0u64; z as usize];
    let mut left = z;
    while left > 0 {
        let len = rng.random_range(1..=left);
        counts[(len - 1) as usize] += 1;
        left -= len;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::partitions;
    use std::collections::HashMap;

    fn within_3sigma(hits: u64, trials: u64, p: f64) -> bool {
        let est = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        (est - p).abs() <= 3.0 * sigma
    }

    #[test]
    fn streams_reproduce_and_differ() {
        let mut a = RandomSource::new(7, 3);
        let mut b = RandomSource::new(7, 3);
        let mut c = RandomSource::new(7, 4);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn geometric_tail_and_mean() {
        let mut rng = RandomSource::new(7, 0);
        let trials = 1_000_000;
        let hits = (0..trials)
            .filter(|_| sample_geometric(0.5, &mut rng).unwrap() >= 1)
            .count() as u64;
        assert!(within_3sigma(hits, trials, 0.5));

        let a = 1.0 / 3.0;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let z = sample_geometric(a, &mut rng).unwrap() as f64;
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / trials as f64;
        let sd = ((sum_sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!((mean - a / (1.0 - a)).abs() <= 3.0 * sd);

        assert!(sample_geometric(0.0, &mut rng).is_err());
        assert!(sample_geometric(1.0, &mut rng).is_err());
        for _ in 0..1000 {
            assert_eq!(sample_geometric(1e-300, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn poisson_and_exponential_laws() {
        let mut rng = RandomSource::new(1009, 0);
        for _ in 0..100 {
            assert_eq!(sample_poisson(0.0, &mut rng).unwrap(), 0);
        }
        let trials = 200_000;
        let zeros = (0..trials)
            .filter(|_| sample_poisson(0.5, &mut rng).unwrap() == 0)
            .count() as u64;
        assert!(within_3sigma(zeros, trials, (-0.5f64).exp()));
        let big = (0..trials)
            .filter(|_| sample_exponential(1.0, &mut rng).unwrap() > 1.0)
            .count() as u64;
        assert!(within_3sigma(big, trials, (-1.0f64).exp()));
        assert!(sample_exponential(0.0, &mut rng).is_err());
    }

    #[test]
    fn size_biased_first_item() {
        let mut rng = RandomSource::new(524287, 0);
        let single = size_biased_order(&[(5, 2.0)], &mut rng).unwrap();
        assert_eq!(single[0].identity, 5);
        assert!(size_biased_order(&[], &mut rng).unwrap().is_empty());
        assert!(size_biased_order(&[(1, 0.0)], &mut rng).is_err());

        let trials = 200_000;
        let items = [(2, 2f64.ln()), (3, 3f64.ln())];
        let first_two = (0..trials)
            .filter(|_| size_biased_order(&items, &mut rng).unwrap()[0].identity == 2)
            .count() as u64;
        let p = 2f64.ln() / 6f64.ln();
        assert!((p - 0.3869).abs() < 1e-4);
        assert!(within_3sigma(first_two, trials, p));

        let even = [(0, 1.0), (1, 1.0)];
        let zero_first = (0..trials)
            .filter(|_| size_biased_order(&even, &mut rng).unwrap()[0].identity == 0)
            .count() as u64;
        assert!(within_3sigma(zero_first, trials, 0.5));
    }

    #[test]
    fn harmonic_law() {
        let law = HarmonicLaw::new(3).unwrap();
        assert!((law.prob(1) - 6.0 / 11.0).abs() < 1e-15);
        assert!((law.prob(2) - 3.0 / 11.0).abs() < 1e-15);
        assert!((law.prob(3) - 2.0 / 11.0).abs() < 1e-15);
        let mut rng = RandomSource::new(7, 1);
        for _ in 0..100 {
            assert_eq!(sample_harmonic(1, &mut rng).unwrap(), 1);
        }
        assert!(HarmonicLaw::new(0).is_err());
        let law = HarmonicLaw::new(100).unwrap();
        let h100: f64 = (1..=100).map(|i| 1.0 / i as f64).sum();
        let trials = 200_000;
        let ones = (0..trials).filter(|_| law.sample(&mut rng) == 1).count() as u64;
        assert!(within_3sigma(ones, trials, 1.0 / h100));
    }

    #[test]
    fn uniform_factored() {
        let tables = PrimeTables::build(100).unwrap();
        let mut rng = RandomSource::new(7, 2);
        assert_eq!(sample_uniform_factored(1, &tables, &mut rng).unwrap().value(), 1);
        assert!(sample_uniform_factored(101, &tables, &mut rng).is_err());
        let trials = 200_000;
        let hits = (0..trials)
            .filter(|_| sample_uniform_factored(4, &tables, &mut rng).unwrap().multiplicity(2) == 2)
            .count() as u64;
        assert!(within_3sigma(hits, trials, 0.25));

        let exact: u32 = (1..=10).map(|m| tables.factor(m).unwrap().big_omega()).sum();
        assert_eq!(exact, 15);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let o = sample_uniform_factored(10, &tables, &mut rng).unwrap().big_omega() as f64;
            sum += o;
            sum_sq += o * o;
        }
        let mean = sum / trials as f64;
        let sd = ((sum_sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!((mean - 1.5).abs() <= 3.0 * sd);
    }

    #[test]
    fn window_counts() {
        let mut rng = RandomSource::new(1009, 5);
        let trials = 100_000;
        let mut empty = 0;
        let mut total = 0usize;
        for _ in 0..trials {
            let w = sample_scale_invariant_window(0.5, 4.0, &mut rng).unwrap();
            assert!(w.points.windows(2).all(|p| p[0] > p[1]));
            if w.count_in(1.0, 2.0) == 0 {
                empty += 1;
            }
            total += w.count_in(1.0, std::f64::consts::E);
        }
        assert!(within_3sigma(empty, trials, 0.5));
        let mean = total as f64 / trials as f64;
        assert!((mean - 1.0).abs() <= 3.0 / (trials as f64).sqrt());
        assert!(sample_scale_invariant_window(0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn exp_map_matches_direct_window() {
        let mut rng = RandomSource::new(524287, 9);
        let mut a = vec![0u64; 8];
        let mut b = vec![0u64; 8];
        for _ in 0..50_000 {
            let w = sample_scale_invariant_window(1.0, 20.0, &mut rng).unwrap();
            a[w.points.len().min(7)] += 1;
            let w = sample_exp_mapped_window(1.0, 20.0, &mut rng).unwrap();
            b[w.points.len().min(7)] += 1;
        }
        let (_, p) = crate::stats::two_sample_chi_square(&a, &b);
        assert!(p > 0.001, "count laws differ, p = {p}");

        let mut a = vec![0u64; 10];
        let mut b = vec![0u64; 10];
        for _ in 0..50_000 {
            let w = sample_scale_invariant_window(1.0, 20.0, &mut rng).unwrap();
            if let Some(&x) = w.points.first() {
                a[((x.ln() / 20f64.ln()) * 10.0) as usize] += 1;
            }
            let w = sample_exp_mapped_window(1.0, 20.0, &mut rng).unwrap();
            if let Some(&x) = w.points.first() {
                b[((x.ln() / 20f64.ln()) * 10.0) as usize] += 1;
            }
        }
        let (_, p) = crate::stats::two_sample_chi_square(&a, &b);
        assert!(p > 0.001, "top point laws differ, p = {p}");
    }

    #[test]
    fn labeled_square_small_side() {
        let mut rng = RandomSource::new(7, 11);
        let total: usize = (0..1000)
            .map(|_| sample_labeled_square(1e-4, &mut rng).unwrap().len())
            .sum();
        assert_eq!(total, 0);
        assert!(sample_labeled_square(-1.0, &mut rng).is_err());
    }

    #[test]
    fn pd_vector_properties() {
        let mut rng = RandomSource::new(7, 12);
        let trials = 200_000;
        let mut small = 0;
        for _ in 0..trials {
            let v = sample_pd(&mut rng, 1e-6).unwrap();
            let s: f64 = v.components.iter().sum();
            assert!(s <= 1.0 + 1e-12 && s >= 1.0 - 1e-6 - 1e-12);
            assert!(v.components.windows(2).all(|w| w[0] >= w[1]));
            if v.components[0] <= 0.5 {
                small += 1;
            }
        }
        assert!(within_3sigma(small, trials, 1.0 - 2f64.ln()));
    }

    #[test]
    fn pd_first_point_uniform() {
        for seed in [7u64, 1009, 524287] {
            let mut rng = RandomSource::new(seed, 0);
            let mut bins = vec![0u64; 20];
            for _ in 0..100_000 {
                let v = sample_pd(&mut rng, 1e-3).unwrap();
                bins[((v.first_point * 20.0) as usize).min(19)] += 1;
            }
            let (_, p) = crate::stats::chi_square(&bins, &[5000.0; 20]);
            assert!(p > 0.01, "seed {seed}: p = {p}");
        }
    }

    #[test]
    fn split_small_cases() {
        let mut rng = RandomSource::new(7, 13);
        assert!(split_geometric(0, 0.5, &mut rng).unwrap().iter().all(|&c| c == 0));
        assert_eq!(split_geometric(1, 0.3, &mut rng).unwrap(), vec![1]);
        let trials = 100_000;
        let twos = (0..trials)
            .filter(|_| split_geometric(2, 0.9, &mut rng).unwrap() == vec![0, 1])
            .count() as u64;
        assert!(within_3sigma(twos, trials, 0.5));
    }

    #[test]
    fn split_matches_partition_enumeration() {
        let z = 6u64;
        let a: f64 = 0.37;
        let mut weights: HashMap<Vec<u64>, f64> = HashMap::new();
        let mut total = 0.0;
        for mult in partitions(z as usize) {
            let mut w = 1.0;
            for (k, &m) in mult.iter().enumerate() {
                let x = a.powi(k as i32 + 1) / (k + 1) as f64;
                for j in 1..=m {
                    w *= x / j as f64;
                }
            }
            total += w;
            weights.insert(mult.iter().map(|&m| m as u64).collect(), w);
        }
        let mut rng = RandomSource::new(1009, 14);
        let trials = 200_000u64;
        let mut seen: HashMap<Vec<u64>, u64> = HashMap::new();
        for _ in 0..trials {
            *seen.entry(split_geometric(z, a, &mut rng).unwrap()).or_default() += 1;
        }
        let keys: Vec<Vec<u64>> = weights.keys().cloned().collect();
        let obs: Vec<u64> = keys.iter().map(|k| *seen.get(k).unwrap_or(&0)).collect();
        let exp: Vec<f64> = keys.iter().map(|k| weights[k] / total * trials as f64).collect();
        assert_eq!(obs.iter().sum::<u64>(), trials);
        let (_, p) = crate::stats::chi_square(&obs, &exp);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn geometric_then_split_matches_independent_poissons() {
        let mut rng = RandomSource::new(524287, 15);
        let trials = 1_000_000u64;
        let mut joint: HashMap<(u64, u64), u64> = HashMap::new();
        for _ in 0..trials {
            let z = sample_geometric(0.5, &mut rng).unwrap();
            let c = split_geometric(z, 0.5, &mut rng).unwrap();
            let a1 = c.first().copied().unwrap_or(0);
            let a2 = c.get(1).copied().unwrap_or(0);
            *joint.entry((a1, a2)).or_default() += 1;
        }
        let pois = |m: f64, k: u64| (-m).exp() * m.powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>();
        let mut tv = 0.0;
        let mut covered = 0.0;
        for a1 in 0..30u64 {
            for a2 in 0..15u64 {
                let p = pois(0.5, a1) * pois(0.125, a2);
                covered += p;
                let q = *joint.get(&(a1, a2)).unwrap_or(&0) as f64 / trials as f64;
                tv += (p - q).abs();
            }
        }
        tv = 0.5 * (tv + (1.0 - covered));
        assert!(tv <= 0.01, "tv = {tv}");
        let none = *joint.get(&(0, 0)).unwrap_or(&0);
        assert!(within_3sigma(none, trials, (-0.5f64 - 0.125).exp()));
    }
}
