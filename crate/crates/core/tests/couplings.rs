use std::sync::Arc;

use primecouple::couplings::{feller_sample, grow_integer, GrowthContext, GrowthMode, MultisetVariant};
use primecouple::exact_densities::{pmf_jp0, QuadratureSpec, UniformizationLaw};
use primecouple::number_theory::PrimeTables;
use primecouple::samplers::RandomSource;
use primecouple::stats::{mean_of, run_blocks, Accumulator};

const HORIZON: f64 = 1000.0;

fn one_sided(n: u64, trials: u64) -> (Accumulator, Accumulator) {
    run_blocks(
        7,
        trials,
        (Accumulator::default(), Accumulator::default()),
        |rng, count, st| {
            for _ in 0..count {
                let s = feller_sample(n, HORIZON, rng).unwrap();
                st.0.push(s.extra() as f64);
                st.1.push(s.missing() as f64);
            }
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
        },
    )
}

/// Both one-sided sums of the Feller coupling approach one: the distance to
/// one shrinks along the grid and is within 3σ plus the horizon truncation at
/// the largest n.
#[test]
fn feller_one_sided_sums_approach_one() {
    let grid = [100u64, 1_000, 10_000];
    let runs: Vec<_> = grid.iter().map(|&n| one_sided(n, 100_000)).collect();
    for side in 0..2 {
        let pick = |r: &(Accumulator, Accumulator)| if side == 0 { r.0 } else { r.1 };
        let devs: Vec<f64> = runs.iter().map(|r| (pick(r).mean() - 1.0).abs()).collect();
        let last = pick(runs.last().unwrap());
        let trunc = 1.0 / HORIZON;
        assert!(
            (last.mean() - 1.0).abs() <= 3.0 * last.stderr() + trunc,
            "side {side}: {} ± {} at n = 10^4",
            last.mean(),
            last.stderr()
        );
        for (k, w) in devs.windows(2).enumerate() {
            let se = pick(&runs[k + 1]).stderr() + pick(&runs[k]).stderr();
            assert!(w[1] <= w[0] + 3.0 * se, "side {side}: deviation grew {devs:?}");
        }
    }
}

/// At least one insertion: the uniformized integer almost always carries a
/// prime beyond the multiset.
#[test]
fn extra_prime_probability_at_ten_thousand() {
    let n = 10_000;
    let tables = PrimeTables::build(2_000_000).unwrap();
    let law = Arc::new(UniformizationLaw::new(pmf_jp0(n, &tables, &QuadratureSpec::default()).unwrap()));
    let ctx = GrowthContext::new(n, &tables, GrowthMode::ExactUniform, MultisetVariant::PrimePowers, Some(law)).unwrap();
    let acc = mean_of(7, 100_000, |rng| (grow_integer(&ctx, rng).unwrap().extra >= 1) as u64 as f64);
    assert!(acc.mean() >= 0.9, "P(extra >= 1) = {} ± {}", acc.mean(), acc.stderr());
}

#[test]
fn transcripts_repeat_for_equal_streams() {
    let tables = PrimeTables::build(1_000_000).unwrap();
    let ctx = GrowthContext::new(5_000, &tables, GrowthMode::Simulate, MultisetVariant::PrimePowers, None).unwrap();
    let transcript = |seed: u64, stream: u64| {
        let mut rng = RandomSource::new(seed, stream);
        (0..500)
            .map(|_| grow_integer(&ctx, &mut rng).unwrap().record(seed).to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(transcript(3, 1), transcript(3, 1));
    assert_ne!(transcript(3, 1), transcript(3, 2));
    assert_ne!(transcript(3, 1), transcript(4, 1));
}

#[test]
fn exact_mode_keeps_jp0_on_the_coupled_event() {
    let n = 2_000;
    let tables = PrimeTables::build(1_000_000).unwrap();
    let law = Arc::new(UniformizationLaw::new(pmf_jp0(n, &tables, &QuadratureSpec::default()).unwrap()));
    let ctx = GrowthContext::new(n, &tables, GrowthMode::ExactUniform, MultisetVariant::PrimePowers, Some(law.clone()))
        .unwrap();
    let mut rng = RandomSource::new(5, 0);
    let mut coupled = 0u32;
    for _ in 0..20_000 {
        let g = grow_integer(&ctx, &mut rng).unwrap();
        assert!((1..=n).contains(&g.value));
        if g.coupled_event {
            coupled += 1;
            assert_eq!(g.value, g.jp0());
        }
    }
    let rate = coupled as f64 / 20_000.0;
    assert!((rate - (1.0 - law.dtv())).abs() < 0.02, "coupled fraction {rate}, 1 - d_TV = {}", 1.0 - law.dtv());
}
