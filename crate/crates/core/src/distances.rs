//! Distances between the uniform integer and the independent prime model:
//! exact small-prime total variation, the crude bound `u(b, n)`, coupling
//! indel expectations and a small optimal-transport oracle.

use std::sync::Arc;

use crate::couplings::{feller_sample, grow_integer, indel_count, GrowthContext};
use crate::error::{Error, Result};
use crate::exact_densities::Pmf;
use crate::number_theory::PrimeTables;
use crate::samplers::sample_uniform_factored;
use crate::stats::{run_blocks, Accumulator};

pub const MAX_SMALL_PRIMES: usize = 10;
pub const MAX_SMOOTH_ENTRIES: usize = 5_000_000;
pub const MAX_OT_N: u64 = 64;
pub const MAX_OT_DENOMINATOR: u64 = 1_000_000;

fn small_primes(b: u64, tables: &PrimeTables) -> Result<Vec<u64>> {
    if b > tables.limit() {
        return Err(Error::BeyondTable {
            value: b,
            limit: tables.limit(),
        });
    }
    let ps: Vec<u64> = tables.primes()[..tables.pi_int(b)].iter().map(|&p| p as u64).collect();
    if ps.len() > MAX_SMALL_PRIMES {
        return Err(Error::InvalidParameter(format!(
            "{} primes up to {b}; at most {MAX_SMALL_PRIMES} supported",
            ps.len()
        )));
    }
    Ok(ps)
}

/// All `d <= n` built from `primes`, with their exponent vectors.
fn smooth_upto(primes: &[u64], n: u64) -> Result<Vec<(u64, Vec<u32>)>> {
    let mut out = vec![(1u64, vec![0u32; primes.len()])];
    for (k, &p) in primes.iter().enumerate() {
        let mut grown = Vec::new();
        for (d, ex) in &out {
            let mut v = *d;
            let mut e = 0;
            while let Some(next) = v.checked_mul(p).filter(|&x| x <= n) {
                v = next;
                e += 1;
                let mut ex2 = ex.clone();
                ex2[k] = e;
                grown.push((v, ex2));
            }
        }
        out.extend(grown);
        if out.len() > MAX_SMOOTH_ENTRIES {
            return Err(Error::TooFine(format!("more than {MAX_SMOOTH_ENTRIES} smooth numbers up to {n}")));
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothEntry {
    pub d: u64,
    /// `a_p` for the primes up to `b`, ascending.
    pub exponents: Vec<u32>,
    /// `n P(C_p(n) = a_p for all p <= b)`.
    pub dependent_count: u64,
    /// `Π (1 - 1/p) p^{-a_p}`.
    pub independent: f64,
}

/// The laws of `(C_p(n))_{p<=b}` and `(Z_p)_{p<=b}` on exponent vectors.
#[derive(Debug, Clone)]
pub struct SmoothVectorLaw {
    pub b: u64,
    pub n: u64,
    pub primes: Vec<u64>,
    pub entries: Vec<SmoothEntry>,
    /// Independent mass on vectors with `d > n`.
    pub tail_mass_z: f64,
}

impl SmoothVectorLaw {
    pub fn new(b: u64, n: u64, tables: &PrimeTables) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let primes = small_primes(b, tables)?;
        let base: f64 = primes.iter().map(|&p| 1.0 - 1.0 / p as f64).product();
        let k = primes.len();
        // Signed squarefree products for inclusion-exclusion.
        let subsets: Vec<(u64, bool)> = (0u32..1 << k)
            .map(|mask| {
                let prod = (0..k)
                    .filter(|i| mask >> i & 1 == 1)
                    .fold(1u64, |acc, i| acc.saturating_mul(primes[i]));
                (prod, mask.count_ones() % 2 == 1)
            })
            .collect();
        let entries: Vec<SmoothEntry> = smooth_upto(&primes, n)?
            .into_iter()
            .map(|(d, exponents)| {
                let mut count: i64 = 0;
                for &(s, odd) in &subsets {
                    let c = (n / d / s) as i64;
                    count += if odd { -c } else { c };
                }
                SmoothEntry {
                    d,
                    exponents,
                    dependent_count: count as u64,
                    independent: base / d as f64,
                }
            })
            .collect();
        let tail_mass_z = smooth_tail(&primes, n, |_| 1.0, |p| 1.0 / p as f64) * base;
        Ok(SmoothVectorLaw {
            b,
            n,
            primes,
            entries,
            tail_mass_z,
        })
    }

    /// `Σ |P(C = a) - P(Z = a)|` over all exponent vectors, unhalved.
    pub fn l1_distance(&self) -> f64 {
        let nf = self.n as f64;
        self.entries
            .iter()
            .map(|e| (e.dependent_count as f64 / nf - e.independent).abs())
            .sum::<f64>()
            + self.tail_mass_z
    }
}

/// `Σ_{d > n} g(d) / d` over `d` built from `primes`, for multiplicative
/// weights with `g(p^a) = first(p)` for `a >= 1`: the series is split on the
/// exponent of the largest prime and closed geometrically once `p^a > n`.
/// `ratio(p)` is the common ratio `1/p`. Every term is positive.
fn smooth_tail<F, G>(primes: &[u64], n: u64, first: F, ratio: G) -> f64
where
    F: Fn(u64) -> f64 + Copy,
    G: Fn(u64) -> f64 + Copy,
{
    // Full sums Σ_d g(d)/d over the first k primes.
    let full: Vec<f64> = std::iter::once(1.0)
        .chain(primes.iter().scan(1.0, |acc, &p| {
            let r = ratio(p);
            *acc *= 1.0 + first(p) * r / (1.0 - r);
            Some(*acc)
        }))
        .collect();
    fn rec<F: Fn(u64) -> f64 + Copy, G: Fn(u64) -> f64 + Copy>(
        primes: &[u64],
        full: &[f64],
        m: u64,
        n: u64,
        first: F,
        ratio: G,
    ) -> f64 {
        let Some((&p, rest)) = primes.split_last() else {
            return if m > n { 1.0 } else { 0.0 };
        };
        let r = ratio(p);
        let mut sum = 0.0;
        let mut weight = 1.0;
        let mut mm = m;
        let mut a = 0u32;
        while mm <= n {
            sum += weight * rec(rest, full, mm, n, first, ratio);
            a += 1;
            weight = first(p) * r.powi(a as i32);
            match mm.checked_mul(p) {
                Some(v) => mm = v,
                None => {
                    mm = u64::MAX;
                    break;
                }
            }
        }
        let _ = mm;
        // Remaining exponents a, a+1, ...: every d' qualifies.
        let geometric = if a == 0 { 1.0 / (1.0 - r) } else { first(p) * r.powi(a as i32) / (1.0 - r) };
        sum + full[rest.len()] * geometric
    }
    rec(primes, &full, 1, n, first, ratio)
}

pub fn exact_dtv_small_primes(b: u64, n: u64, tables: &PrimeTables) -> Result<f64> {
    Ok(SmoothVectorLaw::new(b, n, tables)?.l1_distance())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrudeU {
    pub value: f64,
    /// `(1/n) Σ_{d<=n} {n/d} 2^ω(d)`.
    pub head: f64,
    /// `Σ_{d>n} 2^ω(d)/d`, summed exactly.
    pub tail: f64,
    /// Floating-point rounding bound.
    pub rounding_error: f64,
}

/// `u(b, n) = (1/n) Σ_{d b-smooth} {n/d} 2^ω(d)`. For `d > n` the fractional
/// part is `n/d`, so the infinite part is the positive series `Σ_{d>n} 2^ω/d`.
pub fn crude_u(b: u64, n: u64, tables: &PrimeTables) -> Result<CrudeU> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let primes = small_primes(b, tables)?;
    let nf = n as f64;
    let mut head = 0.0;
    let mut terms = 0usize;
    for (d, ex) in smooth_upto(&primes, n)? {
        let r = n % d;
        if r != 0 {
            let omega = ex.iter().filter(|&&e| e > 0).count() as i32;
            head += (r as f64 / d as f64) * 2f64.powi(omega);
        }
        terms += 1;
    }
    head /= nf;
    let tail = smooth_tail(&primes, n, |_| 2.0, |p| 1.0 / p as f64);
    let value = head + tail;
    Ok(CrudeU {
        value,
        head,
        tail,
        rounding_error: 4.0 * f64::EPSILON * value * (terms as f64).max(1.0).log2().max(1.0),
    })
}

/// `E Ω(N(n)) = (1/n) Σ_{q<=n} ⌊n/q⌋` over prime powers, and
/// `E Ω(M(n)) = Σ_{p<=n} 1/(p-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityMatch {
    pub omega_uniform: f64,
    pub omega_independent: f64,
}

impl IntensityMatch {
    pub fn difference(&self) -> f64 {
        self.omega_uniform - self.omega_independent
    }
}

pub fn intensity_match(n: u64, tables: &PrimeTables) -> Result<IntensityMatch> {
    if n < 1 || n > tables.limit() {
        return Err(Error::BeyondTable {
            value: n,
            limit: tables.limit(),
        });
    }
    let pp = &tables.prime_powers()[..tables.count_prime_powers(n)];
    let count: u64 = pp.iter().map(|q| n / q.q).sum();
    let omega_independent = tables.primes()[..tables.pi_int(n)]
        .iter()
        .map(|&p| 1.0 / (p as f64 - 1.0))
        .sum();
    Ok(IntensityMatch {
        omega_uniform: count as f64 / n as f64,
        omega_independent,
    })
}

/// A coupling whose achieved `E Σ|C - Z|` is estimated.
pub enum CouplingRun<'a> {
    Feller { n: u64, horizon_factor: f64 },
    Growth(&'a GrowthContext<'a>),
    /// Both sides are the same uniform integer.
    Identical { n: u64, tables: &'a PrimeTables },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndelEstimate {
    pub indel: Accumulator,
    pub extra: Accumulator,
    pub missing: Accumulator,
    pub truncation_error: f64,
}

impl IndelEstimate {
    pub fn mean(&self) -> f64 {
        self.indel.mean()
    }

    pub fn stderr(&self) -> f64 {
        self.indel.stderr()
    }
}

pub fn empirical_indel(run: &CouplingRun<'_>, seed: u64, trials: u64) -> Result<IndelEstimate> {
    if trials < 1 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let truncation_error = match run {
        CouplingRun::Feller { n, horizon_factor } => {
            *n as f64 / (horizon_factor * *n as f64).ceil()
        }
        _ => 0.0,
    };
    let init: (IndelEstimateParts, Option<Arc<Error>>) = Default::default();
    let (parts, err) = run_blocks(
        seed,
        trials,
        init,
        |rng, count, st| {
            for _ in 0..count {
                if st.1.is_some() {
                    return;
                }
                let r: Result<(u64, u64)> = match run {
                    CouplingRun::Feller { n, horizon_factor } => {
                        feller_sample(*n, *horizon_factor, rng).map(|s| (s.extra(), s.missing()))
                    }
                    CouplingRun::Growth(ctx) => grow_integer(ctx, rng).map(|g| (g.extra, g.missing)),
                    CouplingRun::Identical { n, tables } => sample_uniform_factored(*n, tables, rng).map(|m| {
                        let d = indel_count(&m, &m);
                        (d, 0)
                    }),
                };
                match r {
                    Ok((e, m)) => st.0.push(e, m),
                    Err(e) => st.1 = Some(Arc::new(e)),
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
    if let Some(e) = err {
        return Err(Arc::try_unwrap(e).unwrap_or_else(|e| Error::InvalidParameter(e.to_string())));
    }
    Ok(IndelEstimate {
        indel: parts.indel,
        extra: parts.extra,
        missing: parts.missing,
        truncation_error,
    })
}

#[derive(Debug, Clone, Default)]
struct IndelEstimateParts {
    indel: Accumulator,
    extra: Accumulator,
    missing: Accumulator,
}

impl IndelEstimateParts {
    fn push(&mut self, extra: u64, missing: u64) {
        self.indel.push((extra + missing) as f64);
        self.extra.push(extra as f64);
        self.missing.push(missing as f64);
    }

    fn merge(&mut self, o: &Self) {
        self.indel.merge(&o.indel);
        self.extra.merge(&o.extra);
        self.missing.merge(&o.missing);
    }
}

/// Best rational approximation with denominator at most `max_den`.
fn rationalize(x: f64, max_den: u64) -> Option<(u64, u64)> {
    if x == 0.0 {
        return Some((0, 1));
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor() as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= 1e-12 * x.max(1e-300) {
            return Some((h1, k1));
        }
        let frac = v - a as f64;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 > 0 && (h1 as f64 / k1 as f64 - x).abs() <= 1e-12 * x {
        Some((h1, k1))
    } else {
        None
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    crate::number_theory::gcd(a, b)
}

/// Scales both laws to integer masses over a common denominator.
fn integer_masses(a: &Pmf, b: &Pmf) -> Result<(Vec<i64>, Vec<i64>, u64)> {
    let mut den = 1u64;
    let mut fracs = Vec::with_capacity(a.masses().len() * 2);
    for &m in a.masses().iter().chain(b.masses()) {
        let (p, q) = rationalize(m, MAX_OT_DENOMINATOR)
            .ok_or_else(|| Error::TooFine(format!("mass {m} has no denominator <= {MAX_OT_DENOMINATOR}")))?;
        den = den / gcd(den, q) * q;
        if den > MAX_OT_DENOMINATOR {
            return Err(Error::TooFine(format!("common denominator exceeds {MAX_OT_DENOMINATOR}")));
        }
        fracs.push((p, q));
    }
    let scaled: Vec<i64> = fracs.iter().map(|&(p, q)| (p * (den / q)) as i64).collect();
    let (sa, sb) = scaled.split_at(a.masses().len());
    if sa.iter().sum::<i64>() != den as i64 || sb.iter().sum::<i64>() != den as i64 {
        return Err(Error::InvalidParameter("laws do not sum to one exactly".into()));
    }
    Ok((sa.to_vec(), sb.to_vec(), den))
}

struct Edge {
    to: usize,
    cap: i64,
    cost: i64,
}

/// Min-cost flow by successive shortest paths with Bellman-Ford.
fn min_cost_flow(nodes: usize, edges_in: &[(usize, usize, i64, i64)], s: usize, t: usize, need: i64) -> Option<i64> {
    let mut edges: Vec<Edge> = Vec::with_capacity(edges_in.len() * 2);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for &(u, v, cap, cost) in edges_in {
        adj[u].push(edges.len());
        edges.push(Edge { to: v, cap, cost });
        adj[v].push(edges.len());
        edges.push(Edge { to: u, cap: 0, cost: -cost });
    }
    let (mut flow, mut total) = (0i64, 0i64);
    while flow < need {
        let mut dist = vec![i64::MAX; nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut in_queue = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for &ei in &adj[u] {
                let e = &edges[ei];
                if e.cap > 0 && dist[u] + e.cost < dist[e.to] {
                    dist[e.to] = dist[u] + e.cost;
                    prev[e.to] = ei;
                    if !in_queue[e.to] {
                        in_queue[e.to] = true;
                        queue.push_back(e.to);
                    }
                }
            }
        }
        if dist[t] == i64::MAX {
            return None;
        }
        let mut push = need - flow;
        let mut v = t;
        while v != s {
            let ei = prev[v];
            push = push.min(edges[ei].cap);
            v = edges[ei ^ 1].to;
        }
        let mut v = t;
        while v != s {
            let ei = prev[v];
            edges[ei].cap -= push;
            edges[ei ^ 1].cap += push;
            v = edges[ei ^ 1].to;
        }
        flow += push;
        total += push * dist[t];
    }
    Some(total)
}

/// Exact `min E d(X, Y)` over couplings of two laws on `1..n`, with the
/// indel distance as cost.
pub fn ot_oracle_small(law_a: &Pmf, law_b: &Pmf, tables: &PrimeTables) -> Result<f64> {
    let n = law_a.n();
    if law_b.n() != n {
        return Err(Error::InvalidParameter("laws must share the support 1..n".into()));
    }
    if n > MAX_OT_N || n > tables.limit() {
        return Err(Error::InvalidParameter(format!("n = {n} above {MAX_OT_N}")));
    }
    let (sa, sb, den) = integer_masses(law_a, law_b)?;
    let facs: Vec<_> = (1..=n).map(|i| tables.factor(i)).collect::<Result<_>>()?;
    let nu = n as usize;
    let (s, t) = (2 * nu, 2 * nu + 1);
    let mut edges = Vec::new();
    for i in 0..nu {
        if sa[i] > 0 {
            edges.push((s, i, sa[i], 0));
        }
        if sb[i] > 0 {
            edges.push((nu + i, t, sb[i], 0));
        }
    }
    for i in 0..nu {
        if sa[i] == 0 {
            continue;
        }
        for j in 0..nu {
            if sb[j] > 0 {
                edges.push((i, nu + j, den as i64, indel_count(&facs[i], &facs[j]) as i64));
            }
        }
    }
    let cost = min_cost_flow(2 * nu + 2, &edges, s, t, den as i64)
        .ok_or_else(|| Error::InvalidParameter("transport problem infeasible".into()))?;
    Ok(cost as f64 / den as f64)
}

/// `E d(X, Y)` for independent `X ~ law_a`, `Y ~ law_b`.
pub fn product_coupling_cost(law_a: &Pmf, law_b: &Pmf, tables: &PrimeTables) -> Result<f64> {
    let n = law_a.n();
    let facs: Vec<_> = (1..=n).map(|i| tables.factor(i)).collect::<Result<_>>()?;
    let mut sum = 0.0;
    for (i, &pa) in law_a.masses().iter().enumerate() {
        for (j, &pb) in law_b.masses().iter().enumerate() {
            sum += pa * pb * indel_count(&facs[i], &facs[j]) as f64;
        }
    }
    Ok(sum)
}
