use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use primecouple::couplings::GrowthMode;
use primecouple::error::{Error, Result};
use primecouple::exact_densities::PmfCache;
use primecouple::experiments::{self as ex, ExperimentConfig, Lab, OutputFormat, Report, FIXED_SEEDS};

#[derive(Parser, Debug)]
#[command(name = "primecouple", version, about = "Couplings of uniform random integers with independent prime models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Feller coupling of permutation cycle counts.
    Feller(Flags),
    /// Grow a random integer from the prime multiset.
    GrowInt(Flags),
    /// Couple the Poisson-Dirichlet vector with a random integer.
    PdDistance(Flags),
    /// Exact total variation of small-prime exponents, with the crude bound.
    DtvSmallPrimes(Flags),
    /// The crude bound u(b, n).
    CrudeU(Flags),
    /// Exact law of J.
    PmfJ(Flags),
    /// Exact total variation between J P0 and the uniform law.
    DtvJp0(Flags),
    /// Partition information and related entropies.
    Entropy(Flags),
    /// Mean point counts of the e^{-wy} process.
    RegionMean(Flags),
    /// Spacing counts of the scale-invariant process.
    SpacingTest(Flags),
    /// Dickman function and the largest Poisson-Dirichlet component.
    Dickman(Flags),
    /// Expected number of prime factors, uniform against independent.
    Intensity(Flags),
    /// Replay the worked growth example.
    Replay(Flags),
    /// Recompute the Mertens constant.
    ConstantB(Flags),
    /// The area between the Mertens step function and log.
    B0(Flags),
    /// Run the acceptance criteria.
    Accept(Flags),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Exact,
    Simulate,
}

#[derive(Args, Debug, Clone, Default)]
struct Flags {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long)]
    tables_limit: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scales every tolerance in the bound checks.
    #[arg(long)]
    tol_scale: Option<f64>,
    /// Directory for cached exact laws.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Square sides or prime bounds.
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Chi-square the constructed integer against the uniform law.
    #[arg(long)]
    uniformity: bool,
    /// Include the sum over primes.
    #[arg(long)]
    primes: bool,
    #[arg(long)]
    horizon_factor: Option<f64>,
    /// Intervals `a:b`, where `e` stands for Euler's number.
    #[arg(long, value_delimiter = ',')]
    intervals: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u32>>,
}

impl Flags {
    fn or(self, o: Flags) -> Flags {
        Flags {
            n: self.n.or(o.n),
            n_grid: self.n_grid.or(o.n_grid),
            trials: self.trials.or(o.trials),
            seed: self.seed.or(o.seed),
            tables_limit: self.tables_limit.or(o.tables_limit),
            out: self.out.or(o.out),
            format: self.format.or(o.format),
            config: self.config,
            tol_scale: self.tol_scale.or(o.tol_scale),
            cache_dir: self.cache_dir.or(o.cache_dir),
            b: self.b.or(o.b),
            mode: self.mode.or(o.mode),
            uniformity: self.uniformity || o.uniformity,
            primes: self.primes || o.primes,
            horizon_factor: self.horizon_factor.or(o.horizon_factor),
            intervals: self.intervals.or(o.intervals),
            criteria: self.criteria.or(o.criteria),
        }
    }

    fn grid(&self, default: &[u64]) -> Vec<u64> {
        match (&self.n_grid, self.n) {
            (Some(g), _) => g.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default.to_vec(),
        }
    }

    fn seeds(&self, default: &[u64]) -> Vec<u64> {
        self.seed.clone().unwrap_or_else(|| default.to_vec())
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Feller(_) => "feller",
            Command::GrowInt(_) => "grow-int",
            Command::PdDistance(_) => "pd-distance",
            Command::DtvSmallPrimes(_) => "dtv-small-primes",
            Command::CrudeU(_) => "crude-u",
            Command::PmfJ(_) => "pmf-j",
            Command::DtvJp0(_) => "dtv-jp0",
            Command::Entropy(_) => "entropy",
            Command::RegionMean(_) => "region-mean",
            Command::SpacingTest(_) => "spacing-test",
            Command::Dickman(_) => "dickman",
            Command::Intensity(_) => "intensity",
            Command::Replay(_) => "replay",
            Command::ConstantB(_) => "constant-b",
            Command::B0(_) => "b0",
            Command::Accept(_) => "accept",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Feller(f)
            | Command::GrowInt(f)
            | Command::PdDistance(f)
            | Command::DtvSmallPrimes(f)
            | Command::CrudeU(f)
            | Command::PmfJ(f)
            | Command::DtvJp0(f)
            | Command::Entropy(f)
            | Command::RegionMean(f)
            | Command::SpacingTest(f)
            | Command::Dickman(f)
            | Command::Intensity(f)
            | Command::Replay(f)
            | Command::ConstantB(f)
            | Command::B0(f)
            | Command::Accept(f) => f,
        }
    }
}

fn parse_interval(s: &str) -> Result<(f64, f64)> {
    let num = |t: &str| -> Result<f64> {
        match t.trim() {
            "e" => Ok(std::f64::consts::E),
            v => v.parse().map_err(|_| Error::Config(format!("bad interval endpoint {v:?}"))),
        }
    };
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("interval {s:?} should look like a:b")))?;
    Ok((num(a)?, num(b)?))
}

/// Merges the config file under the command-line flags.
fn resolve(cmd: &Command) -> std::result::Result<Flags, String> {
    let flags = cmd.flags().clone();
    let Some(path) = &flags.config else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut args = vec!["primecouple".to_string(), cmd.name().to_string()];
    args.extend(ex::config_file_args(&text).map_err(|e| e.to_string())?);
    let from_file = Cli::try_parse_from(args).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(flags.or(from_file.command.flags().clone()))
}

fn run(name: &str, f: &Flags) -> Result<(Report, OutputFormat, Option<PathBuf>, Vec<String>)> {
    let s0 = f.seeds(&[FIXED_SEEDS[0]]);
    let trials = |d: u64| f.trials.unwrap_or(d);
    let grid: Vec<u64> = match name {
        "feller" => f.grid(&[10, 100, 1_000]),
        "grow-int" => f.grid(&[1_000]),
        "pd-distance" => f.grid(&[1_000, 10_000, 100_000, 1_000_000]),
        "dtv-small-primes" | "crude-u" => f.grid(&[10, 100, 1_000, 10_000]),
        "pmf-j" | "dtv-jp0" => f.grid(&[100, 1_000, 10_000]),
        "intensity" => f.grid(&[1_000, 10_000, 100_000]),
        _ => f.grid(&[1]),
    };
    let config = ExperimentConfig {
        subcommand: name.into(),
        n_grid: grid.clone(),
        trials: trials(1),
        seeds: s0.clone(),
        tables_limit: f.tables_limit.unwrap_or(ex::DEFAULT_TABLES_LIMIT),
        tol_scale: f.tol_scale.unwrap_or(1.0),
        out: f.out.clone(),
        format: f.format.unwrap_or_default(),
    };
    config.validate()?;
    let mut lab = Lab::new(config.tables_limit)?.with_tol_scale(config.tol_scale);
    if let Some(dir) = &f.cache_dir {
        lab = lab.with_cache(PmfCache::new(dir));
    }
    let mut summaries = Vec::new();
    let seed = s0[0];
    let report = match name {
        "feller" => {
            let mut r = ex::feller(&lab, &grid, trials(100_000), &s0, f.horizon_factor.unwrap_or(1000.0))?;
            r.extend(ex::feller_example()?);
            r
        }
        "grow-int" => {
            let mode = match f.mode.unwrap_or(ModeArg::Exact) {
                ModeArg::Exact => GrowthMode::ExactUniform,
                ModeArg::Simulate => GrowthMode::Simulate,
            };
            if f.uniformity {
                let seeds = f.seeds(&FIXED_SEEDS);
                ex::uniformity(&lab, grid[0], trials(1_000_000), &seeds)?
            } else {
                ex::grow_int(&lab, &grid, &[trials(100_000)], seed, mode)?
            }
        }
        "pd-distance" => ex::pd_distance(&lab, &grid, trials(10_000), seed)?,
        "dtv-small-primes" | "crude-u" => {
            let bs = f.b.clone().unwrap_or_else(|| vec![2, 3, 5]);
            ex::small_primes(&lab, &bs, &grid, name == "dtv-small-primes")?
        }
        "pmf-j" => {
            let mc = f.trials.map(|t| (f.n.unwrap_or(100), t, seed));
            ex::pmf_j_experiment(&lab, &grid, mc)?
        }
        "dtv-jp0" => ex::dtv_jp0(&lab, &grid)?,
        "entropy" => ex::entropy(&lab, f.n.unwrap_or(10_000), f.primes)?,
        "region-mean" => {
            let bs = f.b.clone().unwrap_or_else(|| vec![5, 50]);
            ex::region_mean(&lab, &bs, trials(100_000), seed)?
        }
        "spacing-test" => {
            let intervals = match &f.intervals {
                Some(v) => v.iter().map(|s| parse_interval(s)).collect::<Result<Vec<_>>>()?,
                None => vec![(1.0, 2.0), (2.0, 4.0), (1.0, std::f64::consts::E)],
            };
            ex::spacing_test(&lab, &intervals, trials(100_000), &f.seeds(&FIXED_SEEDS))?
        }
        "dickman" => ex::dickman(&lab, trials(1_000_000), seed)?,
        "intensity" => ex::intensity(&lab, &grid)?,
        "replay" => ex::replay(&lab)?,
        "constant-b" => ex::constant_b(&lab)?,
        "b0" => ex::b0(&lab, trials(100_000), seed)?,
        "accept" => {
            let only = f.criteria.clone().unwrap_or_default();
            if let Some(bad) = only.iter().find(|id| !ex::CRITERIA.iter().any(|c| c.0 == **id)) {
                return Err(Error::Config(format!("no criterion {bad}")));
            }
            let outcomes = ex::acceptance_suite(&lab, &only);
            summaries = outcomes.iter().map(|o| o.summary()).collect();
            Report::from_outcomes(&outcomes)
        }
        _ => unreachable!("every subcommand is handled"),
    };
    Ok((report, config.format, config.out, summaries))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let flags = match resolve(&cli.command) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (mut report, format, out, summaries) = match run(name, &flags) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    report.sort();
    let text = report.render(format);
    match &out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    for s in &summaries {
        eprintln!("{s}");
    }
    let mut failed = false;
    for c in report.failures() {
        failed = true;
        eprintln!("FAIL {} n={} seed={} {}: {}", c.experiment, c.n, c.seed, c.metric, c.detail);
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
