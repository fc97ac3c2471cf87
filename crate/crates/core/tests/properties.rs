use std::sync::OnceLock;

use proptest::prelude::*;

use primecouple::couplings::{
    feller_sample, grow_integer, indel_count, integer_tail_intensity, GrowthContext, GrowthMode, MultisetVariant,
    TailLabelLaw, TranscriptRecord,
};
use primecouple::distances::{crude_u, exact_dtv_small_primes, SmoothVectorLaw};
use primecouple::number_theory::PrimeTables;
use primecouple::samplers::{size_biased_order, split_geometric, RandomSource};

fn tables() -> &'static PrimeTables {
    static T: OnceLock<PrimeTables> = OnceLock::new();
    T.get_or_init(|| PrimeTables::build(1_000_000).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factor_round_trip(m in 1u64..=1_000_000) {
        let f = tables().factor(m).unwrap();
        prop_assert_eq!(f.value(), m);
        prop_assert_eq!(f.recompute_value(), m);
        prop_assert!(f.factors().iter().all(|&(p, e)| e >= 1 && tables().is_prime(p as u64)));
    }

    #[test]
    fn indel_triangle(a in 1u64..5_000, b in 1u64..5_000, c in 1u64..5_000) {
        let t = tables();
        let (fa, fb, fc) = (t.factor(a).unwrap(), t.factor(b).unwrap(), t.factor(c).unwrap());
        prop_assert!(indel_count(&fa, &fb) <= indel_count(&fa, &fc) + indel_count(&fc, &fb));
        prop_assert_eq!(indel_count(&fa, &fb), indel_count(&fb, &fa));
    }

    #[test]
    fn feller_monotone_every_trial(n in 1u64..400, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed, 0);
        let s = feller_sample(n, 100.0, &mut rng).unwrap();
        prop_assert!(s.is_monotone());
        prop_assert_eq!(s.cycle_counts_n.iter().enumerate().map(|(i, c)| (i as u64 + 1) * c).sum::<u64>(), n);
        prop_assert!(s.extra() <= 1);
    }

    #[test]
    fn grown_integer_fits(n in 2u64..20_000, seed in any::<u64>()) {
        let ctx = GrowthContext::new(n, tables(), GrowthMode::Simulate, MultisetVariant::PrimePowers, None).unwrap();
        let mut rng = RandomSource::new(seed, 0);
        let g = grow_integer(&ctx, &mut rng).unwrap();
        prop_assert!(g.j >= 1 && g.jp0() <= n);
        prop_assert!(g.p0 == 1 || tables().is_prime(g.p0));
        let jf = tables().factor(g.j).unwrap();
        for &(p, e) in jf.factors() {
            let z = g.z.iter().find(|f| f.0 == p).map_or(0, |f| f.1);
            prop_assert!(e <= z);
        }
        prop_assert_eq!(g.indel_count, g.extra + g.missing);
        let line = g.record(seed).to_string();
        prop_assert_eq!(line.parse::<TranscriptRecord>().unwrap(), g.record(seed));
    }

    #[test]
    fn size_biased_order_is_a_permutation(weights in prop::collection::vec(0.01f64..10.0, 1..20), seed in any::<u64>()) {
        let items: Vec<(u64, f64)> = weights.iter().enumerate().map(|(i, &w)| (i as u64, w)).collect();
        let mut rng = RandomSource::new(seed, 0);
        let order = size_biased_order(&items, &mut rng).unwrap();
        let mut ids: Vec<u64> = order.iter().map(|w| w.identity).collect();
        prop_assert!(order.windows(2).all(|w| w[0].label < w[1].label));
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..items.len() as u64).collect::<Vec<_>>());
    }

    #[test]
    fn split_preserves_total(z in 0u64..60, a in 0.01f64..0.99, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed, 0);
        let parts = split_geometric(z, a, &mut rng).unwrap();
        prop_assert_eq!(parts.iter().enumerate().map(|(k, c)| (k as u64 + 1) * c).sum::<u64>(), z);
    }

    #[test]
    fn tail_quantile_inverts(k in 1u64..50, p in 1e-6f64..0.999_999) {
        let law = TailLabelLaw::new(|t| integer_tail_intensity(k, t), (k + 1) as f64).unwrap();
        let t = law.quantile(p);
        prop_assert!((law.cdf(t) - p).abs() <= 1e-8 * p.max(1e-2));
    }

    #[test]
    fn dtv_below_crude_bound(b in prop::sample::select(vec![2u64, 3, 5, 7]), n in 1u64..20_000) {
        let d = exact_dtv_small_primes(b, n, tables()).unwrap();
        let u = crude_u(b, n, tables()).unwrap();
        prop_assert!(d <= u.value + u.rounding_error, "d = {}, u = {}", d, u.value);
        let law = SmoothVectorLaw::new(b, n, tables()).unwrap();
        prop_assert_eq!(law.entries.iter().map(|e| e.dependent_count).sum::<u64>(), n);
    }
}
