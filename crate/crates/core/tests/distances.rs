use primecouple::couplings::indel_count;
use primecouple::distances::{crude_u, exact_dtv_small_primes};
use primecouple::number_theory::{gcd, PrimeTables};

/// `Ω(m)` by trial division.
fn big_omega(mut m: u64) -> u64 {
    let mut count = 0;
    let mut d = 2;
    while d * d <= m {
        while m % d == 0 {
            m /= d;
            count += 1;
        }
        d += 1;
    }
    count + (m > 1) as u64
}

#[test]
fn indel_metric_on_all_pairs_to_1000() {
    let t = PrimeTables::build(1_000).unwrap();
    let f: Vec<_> = (1..=1_000u64).map(|i| t.factor(i).unwrap()).collect();
    let omega: Vec<u64> = (0..=1_000u64).map(|i| if i == 0 { 0 } else { big_omega(i) }).collect();
    for i in 1..=1_000u64 {
        for j in 1..=1_000u64 {
            let d = indel_count(&f[i as usize - 1], &f[j as usize - 1]);
            let g = gcd(i, j);
            assert_eq!(d, omega[(i / g) as usize] + omega[(j / g) as usize], "({i}, {j})");
            assert_eq!(d == 0, i == j);
        }
    }
}

#[test]
fn sandwich_on_the_full_grid() {
    let t = PrimeTables::build(100_000).unwrap();
    for b in [2, 3, 5] {
        for n in [10, 100, 1_000, 10_000] {
            let d = exact_dtv_small_primes(b, n, &t).unwrap();
            let u = crude_u(b, n, &t).unwrap();
            assert!(d <= u.value + u.rounding_error, "b = {b}, n = {n}: {d} > {}", u.value);
        }
    }
}
