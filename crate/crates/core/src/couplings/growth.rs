//! Growing a random integer from a size-biased permutation of a random
//! multiset of primes, with an optional exact uniformization step.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exact_densities::UniformizationLaw;
use crate::number_theory::{FactoredInteger, PrimeTables};
use crate::samplers::{geometric_unchecked, sort_by_label_desc, split_unchecked, RandomSource, WeightedItem};

use super::tail::{MultisetVariant, PrimeTailIntensity, TailLabelLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthMode {
    /// `N = J P0`.
    Simulate,
    /// `N = J P0` on the event `E_n`, otherwise a draw from the deficiency law.
    ExactUniform,
}

/// Per-`n` state shared read-only by all trials.
#[derive(Debug, Clone)]
pub struct GrowthContext<'a> {
    n: u64,
    tables: &'a PrimeTables,
    mode: GrowthMode,
    variant: MultisetVariant,
    /// Primes `<= n` with `1/p`.
    small: Vec<(u32, f64)>,
    /// Index ranges of `small` with `p` in `[P, 2P)`, plus `ln(1 - 1/P)`.
    blocks: Vec<(usize, usize, f64)>,
    tail: TailLabelLaw,
    uniformization: Option<Arc<UniformizationLaw>>,
}

impl<'a> GrowthContext<'a> {
    pub fn new(
        n: u64,
        tables: &'a PrimeTables,
        mode: GrowthMode,
        variant: MultisetVariant,
        uniformization: Option<Arc<UniformizationLaw>>,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if n > tables.limit() {
            return Err(Error::BeyondTable {
                value: n,
                limit: tables.limit(),
            });
        }
        match (mode, &uniformization) {
            (GrowthMode::ExactUniform, None) => {
                return Err(Error::Config("exact_uniform mode needs the law of J P0 for this n".into()))
            }
            (GrowthMode::ExactUniform, Some(law)) if law.n() != n => {
                return Err(Error::Config(format!("uniformization law is for n = {}, not {n}", law.n())))
            }
            _ => {}
        }
        if mode == GrowthMode::ExactUniform && variant != MultisetVariant::PrimePowers {
            return Err(Error::Config("exact_uniform mode is defined for the prime-power multiset only".into()));
        }
        let small: Vec<(u32, f64)> = tables.primes()[..tables.pi_int(n)]
            .iter()
            .map(|&p| (p, 1.0 / p as f64))
            .collect();
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < small.len() {
            let top = 2 * small[start].0 as u64;
            let end = start + small[start..].partition_point(|&(p, _)| (p as u64) < top);
            blocks.push((start, end, (-small[start].1).ln_1p()));
            start = end;
        }
        let intensity = PrimeTailIntensity::new(n, tables, variant)?;
        let tail = TailLabelLaw::new(|t| intensity.eval(t), intensity.decay())?;
        Ok(GrowthContext {
            n,
            tables,
            mode,
            variant,
            small,
            blocks,
            tail,
            uniformization,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mode(&self) -> GrowthMode {
        self.mode
    }

    pub fn variant(&self) -> MultisetVariant {
        self.variant
    }

    pub fn tail_law(&self) -> &TailLabelLaw {
        &self.tail
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrownInteger {
    pub n: u64,
    /// Items with prime part `<= n` (identity `q`, weight `ln q`), by
    /// decreasing label.
    pub items: Vec<WeightedItem>,
    /// Largest label among items with prime part `> n`.
    pub tail_label: f64,
    /// Nonzero `Z_p`, ascending in `p`.
    pub z: Vec<(u32, u32)>,
    pub j: u64,
    /// Number of factors in `J`.
    pub j_len: usize,
    pub p0: u64,
    /// `N`.
    pub value: u64,
    /// `E_n`.
    pub coupled_event: bool,
    /// `Σ_{p<=n} |C_p(N) - Z_p|`.
    pub indel_count: u64,
    /// `Σ (C_p(N) - Z_p)^+`.
    pub extra: u64,
    /// `Σ (Z_p - C_p(N))^+`.
    pub missing: u64,
}

impl GrownInteger {
    pub fn jp0(&self) -> u64 {
        self.j * self.p0
    }

    pub fn record(&self, seed: u64) -> TranscriptRecord {
        TranscriptRecord {
            n: self.n,
            seed,
            j: self.j,
            p0: self.p0,
            value: self.value,
            coupled_event: self.coupled_event,
            indel_count: self.indel_count,
        }
    }
}

/// `P0` from one uniform: `1` if `K U <= 1`, else the `i`-th prime where
/// `K U ∈ (i, i+1]`, with `K = 1 + π(n/J)`.
pub fn choose_p0(n: u64, j: u64, u: f64, tables: &PrimeTables) -> Result<u64> {
    if j == 0 || j > n {
        return Err(Error::InvalidParameter(format!("need 1 <= J <= n, got J = {j}, n = {n}")));
    }
    let m = n / j;
    if m > tables.limit() {
        return Err(Error::BeyondTable {
            value: m,
            limit: tables.limit(),
        });
    }
    let k = 1 + tables.pi_int(m);
    let x = k as f64 * u;
    if x <= 1.0 {
        return Ok(1);
    }
    let i = (x.ceil() as usize).min(k) - 1;
    Ok(tables.primes()[i - 1] as u64)
}

/// The largest partial product of `items` not exceeding `n`, stopping at the
/// first factor that would overflow. `next_at_least` bounds the factor after
/// the listed ones; `None` when the listed items do not settle `J`.
pub fn partial_product_j(items: &[u64], next_at_least: u64, n: u64) -> Option<u64> {
    let mut prod = 1u64;
    for &q in items {
        match prod.checked_mul(q) {
            Some(v) if v <= n => prod = v,
            _ => return Some(prod),
        }
    }
    match prod.checked_mul(next_at_least) {
        Some(v) if v <= n => None,
        _ => Some(prod),
    }
}

/// `Σ_p |v_p(a) - v_p(b)|`.
pub fn indel_count(a: &FactoredInteger, b: &FactoredInteger) -> u64 {
    let (up, down) = indel_parts(a.factors(), b.factors());
    up + down
}

/// `(Σ (v_p(a) - v_p(b))^+, Σ (v_p(b) - v_p(a))^+)` for ascending factor lists.
fn indel_parts(a: &[(u32, u32)], b: &[(u32, u32)]) -> (u64, u64) {
    let (mut i, mut k) = (0, 0);
    let (mut up, mut down) = (0u64, 0u64);
    while i < a.len() || k < b.len() {
        let pa = a.get(i).map_or(u32::MAX, |f| f.0);
        let pb = b.get(k).map_or(u32::MAX, |f| f.0);
        if pa == pb {
            let (x, y) = (a[i].1 as u64, b[k].1 as u64);
            up += x.saturating_sub(y);
            down += y.saturating_sub(x);
            i += 1;
            k += 1;
        } else if pa < pb {
            up += a[i].1 as u64;
            i += 1;
        } else {
            down += b[k].1 as u64;
            k += 1;
        }
    }
    (up, down)
}

pub fn grow_integer(ctx: &GrowthContext<'_>, rng: &mut RandomSource) -> Result<GrownInteger> {
    let n = ctx.n;
    // Z_p >= 1 with probability 1/p: skip geometrically at the largest rate
    // of each block, thin, then use memorylessness for the excess.
    let mut z: Vec<(u32, u32)> = Vec::new();
    for &(start, end, ln_q) in &ctx.blocks {
        let rate = ctx.small[start].1;
        let mut i = start;
        loop {
            let skip = rng.uniform_open().ln() / ln_q;
            if skip >= (end - i) as f64 {
                break;
            }
            i += skip as usize;
            let (p, inv) = ctx.small[i];
            if rng.uniform_open() * rate <= inv {
                z.push((p, 1 + geometric_unchecked(inv, rng) as u32));
            }
            i += 1;
        }
    }
    let mut items: Vec<WeightedItem> = Vec::new();
    for &(p, zp) in &z {
        let ln_p = (p as f64).ln();
        match ctx.variant {
            MultisetVariant::PrimePowers => {
                let counts = split_unchecked(zp as u64, rng);
                for (k0, &a) in counts.iter().enumerate() {
                    let k = k0 as u32 + 1;
                    let q = (p as u64).saturating_pow(k);
                    let w = k as f64 * ln_p;
                    for _ in 0..a {
                        items.push(WeightedItem {
                            identity: q,
                            weight: w,
                            label: rng.exp1() / w,
                        });
                    }
                }
            }
            MultisetVariant::GeometricPrimes => {
                for _ in 0..zp {
                    items.push(WeightedItem {
                        identity: p as u64,
                        weight: ln_p,
                        label: rng.exp1() / ln_p,
                    });
                }
            }
        }
    }
    sort_by_label_desc(&mut items);
    let tail_label = ctx.tail.sample(rng);

    let mut j = 1u64;
    let mut j_len = 0;
    for it in &items {
        if it.label < tail_label {
            break;
        }
        match j.checked_mul(it.identity) {
            Some(v) if v <= n => {
                j = v;
                j_len += 1;
            }
            _ => break,
        }
    }
    let p0 = choose_p0(n, j, rng.uniform_open(), ctx.tables)?;
    let jp0 = j * p0;

    let (value, coupled_event) = match ctx.mode {
        GrowthMode::Simulate => (jp0, true),
        GrowthMode::ExactUniform => {
            let law = ctx.uniformization.as_ref().expect("checked at construction");
            if rng.uniform_open() <= law.keep_probability(jp0) {
                (jp0, true)
            } else {
                (law.sample_deficiency(rng.uniform_open()), false)
            }
        }
    };
    let fac = ctx.tables.factor(value)?;
    let (extra, missing) = indel_parts(fac.factors(), &z);
    Ok(GrownInteger {
        n,
        items,
        tail_label,
        z,
        j,
        j_len,
        p0,
        value,
        coupled_event,
        indel_count: extra + missing,
        extra,
        missing,
    })
}

/// One line per trial: `n,seed,J,P0,N,E_n,indel`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub n: u64,
    pub seed: u64,
    pub j: u64,
    pub p0: u64,
    pub value: u64,
    pub coupled_event: bool,
    pub indel_count: u64,
}

pub const TRANSCRIPT_HEADER: &str = "n,seed,J,P0,N,E_n,indel";

impl fmt::Display for TranscriptRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.n,
            self.seed,
            self.j,
            self.p0,
            self.value,
            u8::from(self.coupled_event),
            self.indel_count
        )
    }
}

impl std::str::FromStr for TranscriptRecord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad transcript line {s:?}"));
        let f: Vec<&str> = s.trim().split(',').collect();
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |i: usize| f[i].parse::<u64>().map_err(|_| bad());
        let coupled_event = match f[5] {
            "0" => false,
            "1" => true,
            _ => return Err(bad()),
        };
        Ok(TranscriptRecord {
            n: num(0)?,
            seed: num(1)?,
            j: num(2)?,
            p0: num(3)?,
            value: num(4)?,
            coupled_event,
            indel_count: num(6)?,
        })
    }
}
