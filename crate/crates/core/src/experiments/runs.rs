use std::sync::Arc;

use crate::couplings::{
    choose_p0, default_cutoff, feller_sample, grow_integer, partial_product_j, pd_couple, FellerSample,
    GrowthContext, GrowthMode, MultisetVariant,
};
use crate::distances::{crude_u, exact_dtv_small_primes, intensity_match};
use crate::entropy::{partition_information, partition_information_prime_sum, xi_entropy_sum};
use crate::error::{Error, Result};
use crate::exact_densities::{b0_integral, dtv_to_uniform, pmf_j, region_mean as region_mean_exact, Dickman, UniformizationLaw};
use crate::number_theory::{recompute_mertens_b, MertensMap, MertensVariant, MERTENS_B};
use crate::samplers::{sample_labeled_square, sample_pd, sample_scale_invariant_window, RandomSource};
use crate::stats::{chi_square, pool_tail, poisson_bins, run_blocks, Accumulator};

use super::{Lab, Report, RowKey};

/// Per-run sums: accumulators and integer counters, merged elementwise.
#[derive(Debug, Clone, Default)]
pub(crate) struct Tally {
    pub acc: Vec<Accumulator>,
    pub counts: Vec<u64>,
}

impl Tally {
    fn merge(&mut self, other: &Tally) {
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            a.merge(b);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

pub(crate) fn tally<F>(seed: u64, trials: u64, accs: usize, counts: usize, step: F) -> Result<Tally>
where
    F: Fn(&mut RandomSource, &mut Tally) -> Result<()> + Sync,
{
    let init = (
        Tally {
            acc: vec![Accumulator::default(); accs],
            counts: vec![0; counts],
        },
        None::<Arc<Error>>,
    );
    let (t, err) = run_blocks(
        seed,
        trials,
        init,
        |rng, count, st| {
            for _ in 0..count {
                if let Err(e) = step(rng, &mut st.0) {
                    st.1 = Some(Arc::new(e));
                    return;
                }
            }
        },
        |a, b| {
            a.0.merge(&b.0);
            if a.1.is_none() {
                a.1 = b.1;
            }
        },
    );
    match err {
        Some(e) => Err(unshare(e)),
        None => Ok(t),
    }
}

/// Recovers an error that was shared across worker blocks.
pub(crate) fn unshare(e: Arc<Error>) -> Error {
    Arc::try_unwrap(e).unwrap_or_else(|e| Error::InvalidParameter(e.to_string()))
}

fn ln_ln(n: u64) -> f64 {
    (n as f64).ln().ln()
}

pub fn feller(lab: &Lab, ns: &[u64], trials: u64, seeds: &[u64], horizon_factor: f64) -> Result<Report> {
    let mut rep = Report::default();
    for &n in ns {
        for &seed in seeds {
            let t = tally(seed, trials, 3, 1, |rng, t| {
                let s = feller_sample(n, horizon_factor, rng)?;
                t.acc[0].push(s.indel() as f64);
                t.acc[1].push(s.extra() as f64);
                t.acc[2].push(s.missing() as f64);
                if !s.is_monotone() {
                    t.counts[0] += 1;
                }
                Ok(())
            })?;
            let key = RowKey {
                experiment: "feller",
                n,
                trials,
                seed,
            };
            let trunc = n as f64 / (horizon_factor * n as f64).ceil();
            let (mean, se) = (t.acc[0].mean(), t.acc[0].stderr());
            rep.row(key, "mean_indel", mean, se, trunc, "feller-bound");
            rep.row(key, "mean_extra", t.acc[1].mean(), t.acc[1].stderr(), trunc, "");
            rep.row(key, "mean_missing", t.acc[2].mean(), t.acc[2].stderr(), trunc, "");
            let monotone = 1.0 - t.counts[0] as f64 / trials as f64;
            rep.row(key, "monotone_fraction", monotone, 0.0, 0.0, "feller-monotone");
            let bound = 2.0 * n as f64 / (n as f64 + 1.0);
            rep.check(
                key,
                "mean_indel",
                mean <= bound + lab.sigmas(se) + trunc,
                format!("mean {mean:.5} ± {se:.5} against 2n/(n+1) = {bound:.5} + truncation {trunc:.2e}"),
            );
            rep.check(
                key,
                "monotone_fraction",
                t.counts[0] == 0,
                format!("{} of {trials} trials not monotone", t.counts[0]),
            );
        }
    }
    Ok(rep)
}

/// Replays the worked bit string `10111000011000100000`.
pub fn feller_example() -> Result<Report> {
    let s = FellerSample::from_bits("10111000011000100000", 20)?;
    let mut rep = Report::default();
    let key = RowKey {
        experiment: "feller-example",
        n: 20,
        trials: 1,
        seed: 0,
    };
    let mut counts = vec![0u64; 20];
    for (i, c) in [(1, 3), (2, 1), (4, 1), (5, 1), (6, 1)] {
        counts[i - 1] = c;
    }
    let checks = [
        ("spacings", s.spacings() == [2, 1, 1, 5, 1, 4]),
        ("first_cycle_len", s.first_cycle_len == 6),
        ("cycle_counts", s.cycle_counts_n == counts),
        ("j_perm", s.j_perm == 14),
    ];
    for (metric, ok) in checks {
        rep.row(key, metric, if ok { 1.0 } else { 0.0 }, 0.0, 0.0, "feller-example");
        rep.check(key, metric, ok, format!("{metric} reproduced: {ok}"));
    }
    Ok(rep)
}

const REPLAY_ITEMS: [u64; 6] = [3, 2, 2, 11, 2, 7];
const REPLAY_NEXT: u64 = 13;

/// Rows of the first replay table: first n, `J(n)`, and the possible `P0`.
const REPLAY_J: [(u64, u64, &[u64]); 15] = [
    (1, 1, &[1]),
    (2, 1, &[1, 2]),
    (3, 3, &[1]),
    (6, 6, &[1]),
    (12, 12, &[1]),
    (24, 12, &[1, 2]),
    (36, 12, &[1, 2, 3]),
    (60, 12, &[1, 2, 3, 5]),
    (84, 12, &[1, 2, 3, 5, 7]),
    (132, 132, &[1]),
    (264, 264, &[1]),
    (528, 264, &[1, 2]),
    (792, 264, &[1, 2, 3]),
    (1320, 264, &[1, 2, 3, 5]),
    (1848, 1848, &[]),
];

/// Rows of the second replay table: first n and `P0` in the three cases
/// `U ∈ (.5, .6]`, `(.6, 2/3]`, `(5/6, 1)`.
const REPLAY_P0: [(u64, [u64; 3]); 14] = [
    (1, [1, 1, 1]),
    (2, [2, 2, 2]),
    (3, [1, 1, 1]),
    (6, [1, 1, 1]),
    (12, [1, 1, 1]),
    (24, [2, 2, 2]),
    (36, [2, 2, 3]),
    (60, [3, 3, 5]),
    (84, [3, 5, 7]),
    (132, [1, 1, 1]),
    (264, [1, 1, 1]),
    (528, [2, 2, 2]),
    (792, [2, 2, 3]),
    (1320, [3, 3, 5]),
];

/// Replays the growth example `3, 2, 2, 11, 2, 7, (>= 13)` against both
/// tables: `J(n)`, `1 + π(n/J)`, the set of possible `P0`, and `P0` for the
/// three uniform cases.
pub fn replay(lab: &Lab) -> Result<Report> {
    let t = &lab.tables;
    let mut rep = Report::default();
    let last = REPLAY_NEXT * 1848 - 1;
    let mut mismatches = Vec::new();
    let mut checked = 0u64;
    for (k, &(lo, j_expect, p0s)) in REPLAY_J.iter().enumerate() {
        let hi = REPLAY_J.get(k + 1).map_or(last, |r| r.0 - 1);
        for n in lo..=hi {
            checked += 1;
            let j = partial_product_j(&REPLAY_ITEMS, REPLAY_NEXT, n);
            if j != Some(j_expect) {
                mismatches.push(format!("J({n}) = {j:?}, expected {j_expect}"));
                continue;
            }
            let kk = 1 + t.pi_int(n / j_expect) as u64;
            let options: Vec<u64> = (0..kk)
                .map(|i| choose_p0(n, j_expect, (i as f64 + 0.5) / kk as f64, t))
                .collect::<Result<_>>()?;
            let expect: Vec<u64> = if p0s.is_empty() {
                std::iter::once(1).chain(t.primes()[..kk as usize - 1].iter().map(|&p| p as u64)).collect()
            } else {
                p0s.to_vec()
            };
            if options != expect || (p0s.is_empty() && !(1..=6).contains(&kk)) {
                mismatches.push(format!("n = {n}: P0 options {options:?}, expected {expect:?}"));
            }
        }
    }
    let key1 = RowKey {
        experiment: "replay",
        n: 1,
        trials: checked,
        seed: 0,
    };
    rep.row(key1, "mismatches", mismatches.len() as f64, 0.0, 0.0, "growth-tables");
    rep.check(key1, "mismatches", mismatches.is_empty(), mismatches.first().cloned().unwrap_or_default());

    let cases = [0.55, 0.65, 0.9];
    let mut mismatches = Vec::new();
    let mut checked = 0u64;
    for (k, &(lo, p0)) in REPLAY_P0.iter().enumerate() {
        let hi = REPLAY_P0.get(k + 1).map_or(1847, |r| r.0 - 1);
        for n in lo..=hi {
            let j = partial_product_j(&REPLAY_ITEMS, REPLAY_NEXT, n).unwrap_or(0);
            for (c, &u) in cases.iter().enumerate() {
                checked += 1;
                let got = choose_p0(n, j, u, t)?;
                if got != p0[c] {
                    mismatches.push(format!("n = {n}, U = {u}: P0 = {got}, expected {}", p0[c]));
                }
            }
        }
    }
    let key2 = RowKey {
        experiment: "replay",
        n: 2,
        trials: checked,
        seed: 0,
    };
    rep.row(key2, "mismatches", mismatches.len() as f64, 0.0, 0.0, "growth-tables");
    rep.check(key2, "mismatches", mismatches.is_empty(), mismatches.first().cloned().unwrap_or_default());
    Ok(rep)
}

fn growth_context<'a>(lab: &'a Lab, n: u64, mode: GrowthMode) -> Result<GrowthContext<'a>> {
    let law = match mode {
        GrowthMode::ExactUniform => Some(Arc::new(UniformizationLaw::new(lab.jp0_law(n)?))),
        GrowthMode::Simulate => None,
    };
    GrowthContext::new(n, &lab.tables, mode, MultisetVariant::PrimePowers, law)
}

pub const INDEL_WINDOW: (f64, f64) = (1.8, 2.6);

/// Indel statistics of the grown integer. In exact mode the mean is checked
/// against the window at `n >= 10^4` and for decrease along the grid.
pub fn grow_int(lab: &Lab, ns: &[u64], trials: &[u64], seed: u64, mode: GrowthMode) -> Result<Report> {
    let mut rep = Report::default();
    let mut means = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let tr = trials[i.min(trials.len() - 1)];
        let ctx = growth_context(lab, n, mode)?;
        let t = tally(seed, tr, 3, 2, |rng, t| {
            let g = grow_integer(&ctx, rng)?;
            t.acc[0].push(g.indel_count as f64);
            t.acc[1].push(g.extra as f64);
            t.acc[2].push(g.missing as f64);
            t.counts[0] += (g.extra >= 1) as u64;
            t.counts[1] += g.coupled_event as u64;
            Ok(())
        })?;
        let key = RowKey {
            experiment: "grow-int",
            n,
            trials: tr,
            seed,
        };
        let (mean, se) = (t.acc[0].mean(), t.acc[0].stderr());
        let frac = |c: u64| {
            let p = c as f64 / tr as f64;
            (p, (p * (1.0 - p) / tr as f64).sqrt())
        };
        rep.row(key, "mean_indel", mean, se, 0.0, "indel-upper-bound");
        rep.row(key, "mean_extra", t.acc[1].mean(), t.acc[1].stderr(), 0.0, "");
        rep.row(key, "mean_missing", t.acc[2].mean(), t.acc[2].stderr(), 0.0, "");
        let (p, pse) = frac(t.counts[0]);
        rep.row(key, "p_extra_ge1", p, pse, 0.0, "");
        let (p, pse) = frac(t.counts[1]);
        rep.row(key, "coupled_fraction", p, pse, 0.0, "");
        if mode == GrowthMode::ExactUniform {
            if n >= 10_000 {
                let (lo, hi) = lab.window(INDEL_WINDOW);
                rep.check(
                    key,
                    "mean_indel",
                    (lo..=hi).contains(&mean),
                    format!("mean {mean:.4} ± {se:.4}, window [{lo:.3}, {hi:.3}]"),
                );
            }
            if let Some(&(pn, pm)) = means.last() {
                rep.check(
                    key,
                    "mean_indel_decreasing",
                    mean < pm,
                    format!("mean {mean:.4} ± {se:.4} at n = {n} against {pm:.4} at n = {pn}"),
                );
            }
        }
        means.push((n, mean));
    }
    Ok(rep)
}

/// Chi-square of the exactly uniformized integer against the uniform law.
pub fn uniformity(lab: &Lab, n: u64, trials: u64, seeds: &[u64]) -> Result<Report> {
    let ctx = growth_context(lab, n, GrowthMode::ExactUniform)?;
    let mut rep = Report::default();
    let threshold = (0.01 / lab.tol_scale).min(1.0);
    for &seed in seeds {
        let t = tally(seed, trials, 0, n as usize, |rng, t| {
            let g = grow_integer(&ctx, rng)?;
            t.counts[(g.value - 1) as usize] += 1;
            Ok(())
        })?;
        let expected = vec![trials as f64 / n as f64; n as usize];
        let (stat, p) = chi_square(&t.counts, &expected);
        let key = RowKey {
            experiment: "uniformity",
            n,
            trials,
            seed,
        };
        rep.row(key, "chi_square", stat, 0.0, 0.0, "");
        rep.row(key, "p_value", p, 0.0, 0.0, "uniform-construction");
        rep.check(key, "p_value", p > threshold, format!("p = {p:.4}, threshold {threshold}"));
    }
    Ok(rep)
}

/// Total mass of the exact law of `J`, and optionally a Monte Carlo check of
/// the simulated `J` marginal at `mc_n`.
pub fn pmf_j_experiment(lab: &Lab, ns: &[u64], mc: Option<(u64, u64, u64)>) -> Result<Report> {
    let mut rep = Report::default();
    for &n in ns {
        let pj = pmf_j(n, &lab.tables, &lab.quad)?;
        let key = RowKey {
            experiment: "pmf-j",
            n,
            trials: 0,
            seed: 0,
        };
        let total = pj.total();
        rep.row(key, "total_mass", total, 0.0, pj.tolerance(), "density-of-j");
        rep.check(
            key,
            "total_mass",
            (total - 1.0).abs() <= lab.tol(1e-6),
            format!("Σ = {total:.12}"),
        );
    }
    if let Some((n, trials, seed)) = mc {
        let pj = pmf_j(n, &lab.tables, &lab.quad)?;
        let ctx = growth_context(lab, n, GrowthMode::Simulate)?;
        let t = tally(seed, trials, 0, n as usize, |rng, t| {
            let g = grow_integer(&ctx, rng)?;
            t.counts[(g.j - 1) as usize] += 1;
            Ok(())
        })?;
        let tv = 0.5
            * t.counts
                .iter()
                .zip(pj.masses())
                .map(|(&c, &m)| (c as f64 / trials as f64 - m).abs())
                .sum::<f64>();
        let key = RowKey {
            experiment: "pmf-j",
            n,
            trials,
            seed,
        };
        rep.row(key, "mc_total_variation", tv, 0.0, pj.tolerance(), "density-of-j");
        rep.check(key, "mc_total_variation", tv <= lab.tol(0.01), format!("d_TV = {tv:.5}"));
    }
    Ok(rep)
}

pub const DTV_SCALED_WINDOW: (f64, f64) = (0.1, 1.5);

/// Exact `d_TV(J P0, N)`, its scaling by `log n / log log n`, and its decrease.
pub fn dtv_jp0(lab: &Lab, ns: &[u64]) -> Result<Report> {
    let mut rep = Report::default();
    let mut prev: Option<(u64, f64)> = None;
    for &n in ns {
        let f = lab.jp0_law(n)?;
        let d = dtv_to_uniform(&f).half_l1;
        let scaled = d * (n as f64).ln() / ln_ln(n);
        let key = RowKey {
            experiment: "dtv-jp0",
            n,
            trials: 0,
            seed: 0,
        };
        rep.row(key, "dtv", d, 0.0, f.tolerance(), "jp-distance");
        rep.row(key, "dtv_scaled", scaled, 0.0, 0.0, "jp-distance");
        let (lo, hi) = lab.window(DTV_SCALED_WINDOW);
        rep.check(
            key,
            "dtv_scaled",
            (lo..=hi).contains(&scaled),
            format!("d_TV log n / log log n = {scaled:.4}, window [{lo:.3}, {hi:.3}]"),
        );
        if let Some((pn, pd)) = prev {
            rep.check(key, "dtv_decreasing", d < pd, format!("{d:.6} at n = {n} against {pd:.6} at n = {pn}"));
        }
        prev = Some((n, d));
    }
    Ok(rep)
}

/// Reference values for the region means.
pub const REGION_MEAN_VALUES: [(u64, f64); 2] = [(5, 3.796), (50, 8.401)];

pub fn region_mean(lab: &Lab, bs: &[u64], trials: u64, seed: u64) -> Result<Report> {
    let mut rep = Report::default();
    for &b in bs {
        let exact = region_mean_exact(b as f64, &lab.quad)?;
        let key = RowKey {
            experiment: "region-mean",
            n: b,
            trials: 0,
            seed: 0,
        };
        rep.row(key, "exact_mean", exact, 0.0, lab.quad.abs_tol, "region-mean");
        if let Some(&(_, v)) = REGION_MEAN_VALUES.iter().find(|r| r.0 == b) {
            rep.check(
                key,
                "exact_mean",
                (exact - v).abs() <= lab.tol(1e-3),
                format!("{exact:.6} against {v}"),
            );
        }
        // The proposal count grows like b^2; sample only small squares.
        if trials > 0 && b <= 10 {
            let acc = tally(seed, trials, 1, 0, |rng, t| {
                t.acc[0].push(sample_labeled_square(b as f64, rng)?.len() as f64);
                Ok(())
            })?
            .acc[0];
            let key = RowKey {
                experiment: "region-mean",
                n: b,
                trials,
                seed,
            };
            let (m, se) = (acc.mean(), acc.stderr());
            rep.row(key, "sampled_mean", m, se, 0.0, "region-mean");
            rep.check(
                key,
                "sampled_mean",
                (m - exact).abs() <= lab.sigmas(se),
                format!("{m:.5} ± {se:.5} against {exact:.5}"),
            );
        }
    }
    Ok(rep)
}

pub const SPACING_WINDOW: (f64, f64) = (1e-3, 1e6);

fn interval_name(x: f64) -> String {
    if (x - std::f64::consts::E).abs() < 1e-12 {
        "e".into()
    } else {
        format!("{x}")
    }
}

/// Counts of window spacings in `(a, b)`: mean `log(b/a)` and a Poisson
/// goodness of fit.
pub fn spacing_test(lab: &Lab, intervals: &[(f64, f64)], trials: u64, seeds: &[u64]) -> Result<Report> {
    let mut rep = Report::default();
    let (lo, hi) = SPACING_WINDOW;
    const MAX_K: usize = 12;
    let threshold = (0.01 / lab.tol_scale).min(1.0);
    for &(a, b) in intervals {
        if !(a > 0.0 && b > a && b < hi) {
            return Err(Error::InvalidParameter(format!("interval ({a}, {b}) not inside the window")));
        }
        let name = format!("{}_{}", interval_name(a), interval_name(b));
        let target = (b / a).ln();
        // A spacing reaching above the window top is lost only if a point
        // falls in (hi - b, hi).
        let trunc = (hi / (hi - b)).ln();
        for &seed in seeds {
            let t = tally(seed, trials, 1, MAX_K + 1, |rng, t| {
                let w = sample_scale_invariant_window(lo, hi, rng)?;
                let c = w.spacings().iter().filter(|&&y| y > a && y < b).count();
                t.acc[0].push(c as f64);
                t.counts[c.min(MAX_K)] += 1;
                Ok(())
            })?;
            let key = RowKey {
                experiment: "spacing-test",
                n: 0,
                trials,
                seed,
            };
            let (m, se) = (t.acc[0].mean(), t.acc[0].stderr());
            rep.row(key, &format!("mean_count_{name}"), m, se, trunc, "spacing-lemma");
            rep.check(
                key,
                &format!("mean_count_{name}"),
                (m - target).abs() <= lab.sigmas(se) + trunc,
                format!("{m:.5} ± {se:.5} against log(b/a) = {target:.5}"),
            );
            let expected: Vec<f64> = poisson_bins(target, MAX_K).iter().map(|p| p * trials as f64).collect();
            let (obs, exp) = pool_tail(&t.counts, &expected, 5.0);
            let (_, p) = chi_square(&obs, &exp);
            rep.row(key, &format!("poisson_p_{name}"), p, 0.0, 0.0, "spacing-lemma");
            rep.check(key, &format!("poisson_p_{name}"), p > threshold, format!("p = {p:.4}"));
        }
    }
    Ok(rep)
}

/// Reference values for the partition information in bits.
pub const ENTROPY_VALUES: [(&str, f64, f64); 3] = [
    ("d_half", 0.375076, 1e-5),
    ("d_third", 0.13879, 1e-4),
    ("prime_sum", 0.612433379, 1e-6),
];

pub fn entropy(lab: &Lab, xi_n: u64, with_prime_sum: bool) -> Result<Report> {
    let mut rep = Report::default();
    let key = RowKey {
        experiment: "entropy",
        n: lab.tables.limit(),
        trials: 0,
        seed: 0,
    };
    let mut reports = vec![partition_information(0.5, 2.0)?, partition_information(1.0 / 3.0, 2.0)?];
    if with_prime_sum {
        reports.push(partition_information_prime_sum(&lab.tables, 2.0)?);
    }
    for ((metric, target, tol), r) in ENTROPY_VALUES.iter().zip(&reports) {
        rep.row(key, metric, r.value, 0.0, r.truncation_error, "entropy-increment");
        rep.check(
            key,
            metric,
            (r.value - target).abs() <= lab.tol(*tol) + r.truncation_error,
            format!("{:.10} bits against {target}", r.value),
        );
    }
    let xi = xi_entropy_sum(xi_n, std::f64::consts::E)?;
    let key = RowKey {
        experiment: "entropy",
        n: xi_n,
        trials: 0,
        seed: 0,
    };
    rep.row(key, "xi_entropy", xi.direct, 0.0, 0.0, "");
    rep.row(key, "xi_entropy_closed_form", xi.closed_form, 0.0, 0.0, "");
    rep.row(key, "xi_entropy_ratio", xi.direct / xi.asymptote, 0.0, 0.0, "");
    Ok(rep)
}

pub const MERTENS_B_REFERENCE: f64 = 0.261497;

pub fn constant_b(lab: &Lab) -> Result<Report> {
    if lab.tables.limit() < 1_000_000 {
        return Err(Error::BeyondTable {
            value: 1_000_000,
            limit: lab.tables.limit(),
        });
    }
    let upto = lab.tables.pi_int(1_000_000);
    let b = recompute_mertens_b(&lab.tables.primes()[..upto]);
    let mut rep = Report::default();
    let key = RowKey {
        experiment: "constant-b",
        n: 1_000_000,
        trials: 0,
        seed: 0,
    };
    rep.row(key, "mertens_b", b, 0.0, (b - MERTENS_B).abs(), "mertens-constant");
    rep.check(
        key,
        "mertens_b",
        (b - MERTENS_B_REFERENCE).abs() <= lab.tol(1e-6),
        format!("{b:.10} against {MERTENS_B_REFERENCE}"),
    );
    Ok(rep)
}

/// Exact `d_TV` of the small-prime exponents (when `with_dtv`) and the
/// crude bound `u(b, n)`, with the sandwich `d_TV <= u` and the hand values
/// at `b = 2, n = 4`.
pub fn small_primes(lab: &Lab, bs: &[u64], ns: &[u64], with_dtv: bool) -> Result<Report> {
    let mut rep = Report::default();
    let experiment = if with_dtv { "dtv-small-primes" } else { "crude-u" };
    let mut grid: Vec<(u64, u64)> = bs.iter().flat_map(|&b| ns.iter().map(move |&n| (b, n))).collect();
    grid.push((2, 4));
    grid.sort_unstable();
    grid.dedup();
    for (b, n) in grid {
        let key = RowKey {
            experiment,
            n,
            trials: 0,
            seed: 0,
        };
        let u = crude_u(b, n, &lab.tables)?;
        rep.row(key, &format!("u_b{b}"), u.value, 0.0, u.rounding_error, "crude-bound");
        if (b, n) == (2, 4) {
            rep.check(key, "u_b2", (u.value - 0.5).abs() <= 1e-12, format!("u(2,4) = {}", u.value));
        }
        if with_dtv {
            let d = exact_dtv_small_primes(b, n, &lab.tables)?;
            rep.row(key, &format!("dtv_b{b}"), d, 0.0, 0.0, "crude-bound");
            rep.check(
                key,
                &format!("sandwich_b{b}"),
                d <= u.value + u.rounding_error,
                format!("d_TV = {d:.6e}, u = {:.6e}", u.value),
            );
            if (b, n) == (2, 4) {
                rep.check(key, "dtv_b2", (d - 0.25).abs() <= 1e-12, format!("d_TV(2,4) = {d}"));
            }
        }
    }
    Ok(rep)
}

pub fn intensity(lab: &Lab, ns: &[u64]) -> Result<Report> {
    let mut rep = Report::default();
    for &n in ns {
        let im = intensity_match(n, &lab.tables)?;
        let key = RowKey {
            experiment: "intensity",
            n,
            trials: 0,
            seed: 0,
        };
        let d = im.difference();
        let bound = lab.tol(5.0 / (n as f64).ln());
        rep.row(key, "omega_uniform", im.omega_uniform, 0.0, 0.0, "");
        rep.row(key, "omega_independent", im.omega_independent, 0.0, 0.0, "");
        rep.row(key, "difference", d, 0.0, 0.0, "intensity-match");
        rep.check(key, "difference", d.abs() <= bound, format!("|{d:.5}| against 5/log n = {bound:.5}"));
    }
    Ok(rep)
}

/// The coupling of the Poisson-Dirichlet vector with `J* P0*`: mean `ℓ1`
/// distance and `Σ |h(Y) - Y|` along the grid.
pub fn pd_distance(lab: &Lab, ns: &[u64], trials: u64, seed: u64) -> Result<Report> {
    let map = MertensMap::new(&lab.tables, MertensVariant::PrimePowersOneOverKq)?;
    let mut rep = Report::default();
    let mut prev: Option<(u64, Accumulator)> = None;
    for &n in ns {
        let cutoff = default_cutoff(n);
        let t = tally(seed, trials, 3, 1, |rng, t| {
            let s = pd_couple(n, &map, &lab.tables, cutoff, rng)?;
            t.acc[0].push(s.l1_distance);
            t.acc[1].push(s.d_sum);
            t.acc[2].push(s.truncation_error);
            t.counts[0] += s.j_star.is_none() as u64;
            Ok(())
        })?;
        let key = RowKey {
            experiment: "pd-distance",
            n,
            trials,
            seed,
        };
        let l1 = t.acc[0];
        let trunc = t.acc[2].mean();
        rep.row(key, "mean_l1", l1.mean(), l1.stderr(), trunc, "pd-distance");
        rep.row(key, "mean_d_sum", t.acc[1].mean(), t.acc[1].stderr(), trunc, "b0-area");
        rep.row(key, "j_star_overflow", t.counts[0] as f64 / trials as f64, 0.0, 0.0, "");
        if let Some((pn, pl)) = prev {
            let ratio = l1.mean() / pl.mean();
            let allowed = lab.tol(1.5) * ln_ln(n) / ln_ln(pn);
            rep.check(
                key,
                "mean_l1_ratio",
                ratio <= allowed,
                format!("ratio {ratio:.4} against 1.5 log log ratio {allowed:.4}"),
            );
            let sigma = (l1.stderr().powi(2) + pl.stderr().powi(2)).sqrt();
            rep.check(
                key,
                "mean_l1_bounded",
                l1.mean() <= pl.mean() + lab.sigmas(sigma) + trunc,
                format!("{:.4} at n = {n} against {:.4} at n = {pn}, σ = {sigma:.4}", l1.mean(), pl.mean()),
            );
        }
        prev = Some((n, l1));
    }
    Ok(rep)
}

/// `P(V_1 <= 1/2)` from sampled Poisson-Dirichlet vectors, and the tabulated
/// `ρ` against `1 - log u` on `[1, 2]`.
pub fn dickman(lab: &Lab, trials: u64, seed: u64) -> Result<Report> {
    let mut rep = Report::default();
    let t = tally(seed, trials, 1, 0, |rng, t| {
        let v = sample_pd(rng, 1e-12)?;
        t.acc[0].push((v.components[0] <= 0.5) as u64 as f64);
        Ok(())
    })?;
    let key = RowKey {
        experiment: "dickman",
        n: 2,
        trials,
        seed,
    };
    let target = 1.0 - std::f64::consts::LN_2;
    let (p, se) = (t.acc[0].mean(), t.acc[0].stderr());
    rep.row(key, "p_v1_le_half", p, se, 1e-12, "dickman-marginal");
    rep.check(
        key,
        "p_v1_le_half",
        (p - target).abs() <= lab.sigmas(se) + 1e-12,
        format!("{p:.5} ± {se:.5} against 1 - log 2 = {target:.5}"),
    );
    let rho = Dickman::new(3.0);
    let err = (0..=1000)
        .map(|i| {
            let u = 1.0 + i as f64 / 1000.0;
            (rho.rho(u) - (1.0 - u.ln())).abs()
        })
        .fold(0.0, f64::max);
    let key = RowKey {
        experiment: "dickman",
        n: 2,
        trials: 0,
        seed: 0,
    };
    rep.row(key, "rho_2", rho.rho(2.0), 0.0, err, "dickman-marginal");
    rep.row(key, "rho_max_error_1_2", err, 0.0, 0.0, "dickman-marginal");
    rep.check(key, "rho_max_error_1_2", err <= lab.tol(1e-8), format!("max error {err:.3e}"));
    Ok(rep)
}

pub const B0_CUTOFF: f64 = 1e-6;

/// The area `b0` by quadrature against the Monte Carlo mean of
/// `Σ |h(Y) - Y|` over the points of the scale-invariant process.
pub fn b0(lab: &Lab, trials: u64, seed: u64) -> Result<Report> {
    let map = MertensMap::new(&lab.tables, MertensVariant::PrimePowersOneOverKq)?;
    let exact = b0_integral(&map, &lab.quad)?;
    // Above the tabulated range h is the identity, so the window stops there.
    let top = 2.0 * map.crossover_ln();
    let t = tally(seed, trials, 1, 0, |rng, t| {
        let w = sample_scale_invariant_window(B0_CUTOFF, top, rng)?;
        // Below the cutoff h vanishes and the expected sum is the cutoff.
        let s: f64 = w.points.iter().map(|&y| (map.h(y) - y).abs()).sum::<f64>() + B0_CUTOFF;
        t.acc[0].push(s);
        Ok(())
    })?;
    let mut rep = Report::default();
    let key = RowKey {
        experiment: "b0",
        n: lab.tables.limit(),
        trials: 0,
        seed: 0,
    };
    rep.row(key, "b0_quadrature", exact.value, 0.0, exact.tail_estimate, "b0-area");
    let key = RowKey {
        experiment: "b0",
        n: lab.tables.limit(),
        trials,
        seed,
    };
    let (m, se) = (t.acc[0].mean(), t.acc[0].stderr());
    let slack = exact.tail_estimate + B0_CUTOFF;
    rep.row(key, "b0_monte_carlo", m, se, slack, "b0-area");
    rep.check(
        key,
        "b0_monte_carlo",
        (m - exact.value).abs() <= lab.sigmas(se) + slack,
        format!("{m:.5} ± {se:.5} against {:.5} (tail {:.2e})", exact.value, exact.tail_estimate),
    );
    Ok(rep)
}
