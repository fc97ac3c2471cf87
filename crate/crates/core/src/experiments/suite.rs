use crate::couplings::GrowthMode;
use crate::error::Result;

use super::runs::*;
use super::{Lab, Report, RowKey, FIXED_SEEDS};

/// The acceptance criteria run in process. The byte-for-byte determinism
/// check of the `accept` command runs the binary itself and lives outside.
pub const CRITERIA: [(u32, &str); 17] = [
    (1, "feller indel bound"),
    (2, "feller monotonicity"),
    (3, "feller worked example"),
    (4, "growth table replay"),
    (5, "exact-uniform indel mean"),
    (6, "uniformity of the constructed integer"),
    (7, "law of J"),
    (8, "d_TV(J P0, N) trend"),
    (9, "region means"),
    (10, "spacing lemma"),
    (11, "partition information"),
    (12, "constant B"),
    (13, "d_TV <= u sandwich"),
    (14, "intensity match"),
    (15, "Poisson-Dirichlet coupling"),
    (16, "Dickman marginal"),
    (17, "b0 consistency"),
];

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: &'static str,
    pub report: Report,
    pub error: Option<String>,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.report.checks.is_empty() && self.report.passed()
    }

    /// One line: id, verdict, title, and the first failure if any.
    pub fn summary(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!("criterion {:>2}: {verdict} {}", self.id, self.title);
        if let Some(e) = &self.error {
            line.push_str(&format!(" [error: {e}]"));
        } else if let Some(f) = self.report.failures().next() {
            line.push_str(&format!(" [{} n={} {}: {}]", f.experiment, f.n, f.metric, f.detail));
        }
        line
    }
}

fn run_criterion(lab: &Lab, id: u32) -> Result<Report> {
    let s0 = FIXED_SEEDS[0];
    match id {
        1 => feller(lab, &[10, 100, 1000], 100_000, &[s0], 1000.0),
        2 => {
            let mut r = feller(lab, &[100], 100_000, &[FIXED_SEEDS[1]], 1000.0)?;
            r.checks.retain(|c| c.metric == "monotone_fraction");
            Ok(r)
        }
        3 => feller_example(),
        4 => replay(lab),
        5 => grow_int(
            lab,
            &[1_000, 10_000, 100_000],
            &[100_000, 100_000, 30_000],
            s0,
            GrowthMode::ExactUniform,
        ),
        6 => uniformity(lab, 1000, 1_000_000, &FIXED_SEEDS),
        7 => pmf_j_experiment(lab, &[100, 1_000, 10_000], Some((100, 1_000_000, s0))),
        8 => dtv_jp0(lab, &[100, 1_000, 10_000]),
        9 => region_mean(lab, &[5, 50], 100_000, s0),
        10 => spacing_test(lab, &[(1.0, 2.0), (2.0, 4.0), (1.0, std::f64::consts::E)], 100_000, &FIXED_SEEDS),
        11 => entropy(lab, 10_000, true),
        12 => constant_b(lab),
        13 => small_primes(lab, &[2, 3, 5], &[10, 100, 1_000, 10_000], true),
        14 => intensity(lab, &[1_000, 10_000, 100_000]),
        15 => pd_distance(lab, &[1_000, 10_000, 100_000, 1_000_000], 10_000, s0),
        16 => dickman(lab, 1_000_000, s0),
        17 => b0(lab, 100_000, s0),
        _ => unreachable!("criterion ids come from CRITERIA"),
    }
}

/// Runs the selected criteria (all when `only` is empty) in id order.
pub fn acceptance_suite(lab: &Lab, only: &[u32]) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .filter(|(id, _)| only.is_empty() || only.contains(id))
        .map(|&(id, title)| match run_criterion(lab, id) {
            Ok(report) => CriterionOutcome {
                id,
                title,
                report,
                error: None,
            },
            Err(e) => CriterionOutcome {
                id,
                title,
                report: Report::default(),
                error: Some(e.to_string()),
            },
        })
        .collect()
}

impl Report {
    /// All rows of the outcomes plus one verdict row per criterion.
    pub fn from_outcomes(outcomes: &[CriterionOutcome]) -> Report {
        let mut all = Report::default();
        for o in outcomes {
            all.extend(o.report.clone());
            let key = RowKey {
                experiment: "accept",
                n: o.id as u64,
                trials: 0,
                seed: 0,
            };
            all.row(key, "passed", if o.passed() { 1.0 } else { 0.0 }, 0.0, 0.0, o.title);
        }
        all.sort();
        all
    }
}
