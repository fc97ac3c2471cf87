//! Exact laws of `J(n)` and `J(n) P0(n)` and their distances to the
//! harmonic and uniform laws.

use crate::error::{Error, Result};
use crate::number_theory::PrimeTables;

use super::quadrature::{composite_rule, QuadratureSpec};
use super::special::inverse_zeta_pair;

pub const MAX_EXACT_N: u64 = 100_000;

/// A probability mass function on `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
    tolerance: f64,
}

impl Pmf {
    /// Builds a pmf, clipping masses within `tolerance` below zero.
    pub fn new(mut mass: Vec<f64>, tolerance: f64) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidParameter("pmf needs a nonempty support".into()));
        }
        for (i, m) in mass.iter_mut().enumerate() {
            if !m.is_finite() || *m < -tolerance {
                return Err(Error::InvalidParameter(format!(
                    "mass {m} at {} is below -{tolerance}",
                    i + 1
                )));
            }
            *m = m.max(0.0);
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > tolerance {
            return Err(Error::InvalidParameter(format!(
                "masses sum to {total}, off by more than {tolerance}"
            )));
        }
        Ok(Pmf { mass, tolerance })
    }

    pub fn uniform(n: u64) -> Self {
        Pmf {
            mass: vec![1.0 / n as f64; n as usize],
            tolerance: 1e-15,
        }
    }

    pub fn harmonic(n: u64) -> Self {
        let h: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
        Pmf {
            mass: (1..=n).map(|i| 1.0 / (i as f64 * h)).collect(),
            tolerance: 1e-14,
        }
    }

    /// Point mass at `i` on `1..=n`.
    pub fn point(n: u64, i: u64) -> Self {
        let mut mass = vec![0.0; n as usize];
        mass[(i - 1) as usize] = 1.0;
        Pmf {
            mass,
            tolerance: 0.0,
        }
    }

    pub fn n(&self) -> u64 {
        self.mass.len() as u64
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn mass(&self, i: u64) -> f64 {
        if i == 0 || i > self.n() {
            0.0
        } else {
            self.mass[(i - 1) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `sum_i |p_i - q_i|` over the union of supports.
    pub fn l1_variation(&self, other: &Pmf) -> f64 {
        let n = self.n().max(other.n());
        (1..=n).map(|i| (self.mass(i) - other.mass(i)).abs()).sum()
    }

    /// Half the L1 distance.
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        0.5 * self.l1_variation(other)
    }
}

/// Bookkeeping from [`pmf_j_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct PmfJInfo {
    /// Upper limit of the integral in `s = c / ln n`.
    pub s_max: f64,
    pub nodes: usize,
    /// Largest change of any mass between the last two panel refinements.
    pub refinement_change: f64,
    pub mass_error: f64,
}

fn s_breaks(n: u64, s_max: f64, split: usize) -> Vec<f64> {
    let ln_n = (n as f64).ln();
    let mut coarse = vec![0.0];
    let mut s = 1.0 / (8.0 * ln_n);
    while s < s_max {
        coarse.push(s);
        s *= 1.5;
    }
    coarse.push(s_max);
    let mut out = vec![0.0];
    for w in coarse.windows(2) {
        for j in 1..=split {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / split as f64);
        }
    }
    out
}

/// Masses `P(J = i)` using one composite rule in `s`.
///
/// With `x = n / i`,
/// `P(J = i) = (1/i) ∫ i^{-s} [ -ζ'/ζ²(1+s) - (1/ζ(1+s)) Σ_{q <= x} ln p q^{-1-s} ] ds`,
/// the full prime-power sum being `-ζ'/ζ(1+s)`. Running `i` downward lets
/// the partial sums grow incrementally.
fn pmf_j_on_rule(n: u64, tables: &PrimeTables, nodes: &[f64], weights: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let mut inv_zeta = vec![0.0; m];
    let mut lead = vec![0.0; m];
    for (j, &s) in nodes.iter().enumerate() {
        let (iz, l) = inverse_zeta_pair(s);
        inv_zeta[j] = iz;
        lead[j] = l;
    }
    let pps = tables.prime_powers();
    let mut partial = vec![0.0; m];
    let mut next_pp = 0usize;
    let mut mass = vec![0.0; n as usize];
    for i in (1..=n).rev() {
        let x = n / i;
        while next_pp < pps.len() && pps[next_pp].q <= x {
            let pp = pps[next_pp];
            let ln_q = pp.ln();
            let ln_p = (pp.p as f64).ln();
            for (j, &s) in nodes.iter().enumerate() {
                partial[j] += ln_p * (-(1.0 + s) * ln_q).exp();
            }
            next_pp += 1;
        }
        let ln_i = (i as f64).ln();
        let mut acc = 0.0;
        for j in 0..m {
            acc += weights[j] * (-nodes[j] * ln_i).exp() * (lead[j] - inv_zeta[j] * partial[j]);
        }
        mass[(i - 1) as usize] = acc / i as f64;
    }
    mass
}

fn check_n(n: u64, tables: &PrimeTables) -> Result<()> {
    if !(2..=MAX_EXACT_N).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "exact laws need 2 <= n <= {MAX_EXACT_N}, got {n}"
        )));
    }
    if n > tables.limit() {
        return Err(Error::BeyondTable {
            value: n,
            limit: tables.limit(),
        });
    }
    Ok(())
}

/// `P(J(n) = i)` for `i = 1..=n`, refining the panels until the largest
/// change of any mass is within the quadrature tolerance.
pub fn pmf_j_detailed(n: u64, tables: &PrimeTables, quad: &QuadratureSpec) -> Result<(Pmf, PmfJInfo)> {
    quad.validate()?;
    check_n(n, tables)?;
    // Every term carries at least 2^{-s}.
    let s_max = (1e14 * n as f64).log2();
    let order = 16;
    let mut prev: Option<Vec<f64>> = None;
    let mut change = f64::INFINITY;
    let mut nodes_used = 0;
    for level in 0..6 {
        let breaks = s_breaks(n, s_max, 1 << level);
        let (nodes, weights) = composite_rule(&breaks, order);
        nodes_used = nodes.len();
        let mass = pmf_j_on_rule(n, tables, &nodes, &weights);
        if let Some(p) = &prev {
            change = p
                .iter()
                .zip(&mass)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = mass.iter().cloned().fold(0.0, f64::max);
            if change <= quad.abs_tol.max(quad.rel_tol * scale) {
                prev = Some(mass);
                break;
            }
        }
        prev = Some(mass);
    }
    let mass = prev.expect("at least one level runs");
    let total: f64 = mass.iter().sum();
    let mass_error = (total - 1.0).abs();
    let tolerance = (mass_error + n as f64 * change).max(1e-12);
    let pmf = Pmf::new(mass, tolerance)?;
    Ok((
        pmf,
        PmfJInfo {
            s_max,
            nodes: nodes_used,
            refinement_change: change,
            mass_error,
        },
    ))
}

pub fn pmf_j(n: u64, tables: &PrimeTables, quad: &QuadratureSpec) -> Result<Pmf> {
    Ok(pmf_j_detailed(n, tables, quad)?.0)
}

/// `Σ_i |P(J=i) - P(H=i)|`, unhalved.
pub fn dtv_j_harmonic(n: u64, tables: &PrimeTables, quad: &QuadratureSpec) -> Result<f64> {
    let pj = pmf_j(n, tables, quad)?;
    Ok(pj.l1_variation(&Pmf::harmonic(n)))
}

/// `(i ln n) P(J = i)`.
pub fn harmonic_ratio(pj: &Pmf) -> Vec<f64> {
    let ln_n = (pj.n() as f64).ln();
    (1..=pj.n()).map(|i| i as f64 * ln_n * pj.mass(i)).collect()
}

/// `f_n(m) = Σ*_{p | m} P(J = m/p) / (1 + π(np/m))`, where `p = 1` is allowed.
pub fn pmf_jp0_from_j(pj: &Pmf, tables: &PrimeTables) -> Result<Pmf> {
    let n = pj.n();
    if n > tables.limit() {
        return Err(Error::BeyondTable {
            value: n,
            limit: tables.limit(),
        });
    }
    let mut mass = vec![0.0; n as usize];
    for m in 1..=n {
        let fm = tables.factor(m)?;
        let mut acc = pj.mass(m) / (1 + tables.pi_int(n / m)) as f64;
        for &(p, _) in fm.factors() {
            let p = p as u64;
            acc += pj.mass(m / p) / (1 + tables.pi_int(n * p / m)) as f64;
        }
        mass[(m - 1) as usize] = acc;
    }
    Pmf::new(mass, pj.tolerance() * 2.0)
}

pub fn pmf_jp0(n: u64, tables: &PrimeTables, quad: &QuadratureSpec) -> Result<Pmf> {
    pmf_jp0_from_j(&pmf_j(n, tables, quad)?, tables)
}

/// The three expressions for the total variation distance to uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtvForms {
    pub positive_part: f64,
    pub negative_part: f64,
    pub half_l1: f64,
}

pub fn dtv_to_uniform(f: &Pmf) -> DtvForms {
    let u = 1.0 / f.n() as f64;
    let mut pos = 0.0;
    let mut neg = 0.0;
    for &m in f.masses() {
        let d = m - u;
        if d > 0.0 {
            pos += d;
        } else {
            neg -= d;
        }
    }
    DtvForms {
        positive_part: pos,
        negative_part: neg,
        half_l1: 0.5 * (pos + neg),
    }
}

/// `d_TV(J P0, uniform)` as the positive-part sum.
pub fn dtv_jp0_uniform(n: u64, tables: &PrimeTables, quad: &QuadratureSpec) -> Result<f64> {
    Ok(dtv_to_uniform(&pmf_jp0(n, tables, quad)?).positive_part)
}

/// `g_n(m)`: the law of `J P0` with `P(J = i)` replaced by `1/(i ln n)`.
pub fn g_fun(n: u64, m: u64, tables: &PrimeTables) -> Result<f64> {
    check_m(n, m, tables)?;
    let fm = tables.factor(m)?;
    let term = |p: u64| {
        let x = (n * p) as f64 / m as f64;
        x / (1 + tables.pi_int(n * p / m)) as f64
    };
    let mut acc = term(1);
    for &(p, _) in fm.factors() {
        acc += term(p as u64);
    }
    Ok(acc / (n as f64 * (n as f64).ln()))
}

/// `h_n(m) = [ln s(m) + (1 + ω(m))(ln(n/m) - 1)] / (n ln n)`, `s` the radical.
pub fn h_fun(n: u64, m: u64, tables: &PrimeTables) -> Result<f64> {
    check_m(n, m, tables)?;
    let fm = tables.factor(m)?;
    let omega = fm.omega() as f64;
    let ln_s = (fm.radical() as f64).ln();
    let nf = n as f64;
    Ok((ln_s + (1.0 + omega) * ((nf / m as f64).ln() - 1.0)) / (nf * nf.ln()))
}

fn check_m(n: u64, m: u64, tables: &PrimeTables) -> Result<()> {
    if m < 1 || m > n || n < 2 {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= n, n >= 2; got m={m}, n={n}")));
    }
    if n > tables.limit() {
        return Err(Error::BeyondTable {
            value: n,
            limit: tables.limit(),
        });
    }
    Ok(())
}

/// `max_m |g_n(m) - h_n(m)| n ln n / (1 + ω(m))`.
pub fn gh_ladder_constant(n: u64, tables: &PrimeTables) -> Result<f64> {
    let scale = n as f64 * (n as f64).ln();
    let mut worst: f64 = 0.0;
    for m in 1..=n {
        let omega = tables.factor(m)?.omega() as f64;
        let d = (g_fun(n, m, tables)? - h_fun(n, m, tables)?).abs() * scale / (1.0 + omega);
        worst = worst.max(d);
    }
    Ok(worst)
}

/// The pieces needed to turn `J P0` into an exactly uniform `N`.
#[derive(Debug, Clone)]
pub struct UniformizationLaw {
    f: Pmf,
    keep: Vec<f64>,
    deficiency_cdf: Vec<f64>,
    dtv: f64,
}

impl UniformizationLaw {
    pub fn new(f: Pmf) -> Self {
        let n = f.n() as usize;
        let u = 1.0 / n as f64;
        let keep = f
            .masses()
            .iter()
            .map(|&m| if m > 0.0 { (m.min(u)) / m } else { 1.0 })
            .collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = f
            .masses()
            .iter()
            .map(|&m| {
                acc += (u - m).max(0.0);
                acc
            })
            .collect();
        let total = acc;
        if total > 0.0 {
            cdf.iter_mut().for_each(|c| *c /= total);
        }
        let dtv = dtv_to_uniform(&f).positive_part;
        UniformizationLaw {
            f,
            keep,
            deficiency_cdf: cdf,
            dtv,
        }
    }

    pub fn n(&self) -> u64 {
        self.f.n()
    }

    pub fn law(&self) -> &Pmf {
        &self.f
    }

    pub fn dtv(&self) -> f64 {
        self.dtv
    }

    /// `b_n(m) = min(f_n(m), 1/n) / f_n(m)`.
    pub fn keep_probability(&self, m: u64) -> f64 {
        self.keep[(m - 1) as usize]
    }

    /// `G_n(j)`.
    pub fn deficiency_cdf(&self, j: u64) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.deficiency_cdf[(j - 1) as usize]
        }
    }

    /// The `j` with `G_n(j-1) < u <= G_n(j)`.
    pub fn sample_deficiency(&self, u: f64) -> u64 {
        let idx = self.deficiency_cdf.partition_point(|&c| c < u);
        (idx.min(self.deficiency_cdf.len() - 1) + 1) as u64
    }
}
