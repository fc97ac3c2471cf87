//! On-disk cache for exact pmfs.
//!
//! Format (text, version 1):
//!
//! ```text
//! primecouple-pmf 1
//! kind <name>
//! n <n>
//! checksum <16 hex digits>
//! abs_tol <f64>
//! rel_tol <f64>
//! tolerance <f64>
//! masses
//! <mass of 1>
//! ...
//! <mass of n>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a load returns the
//! stored values bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::pmf::Pmf;
use super::quadrature::QuadratureSpec;

const MAGIC: &str = "primecouple-pmf";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PmfKey {
    pub kind: String,
    pub n: u64,
    pub checksum: u64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl PmfKey {
    pub fn new(kind: &str, n: u64, checksum: u64, quad: &QuadratureSpec) -> Self {
        PmfKey {
            kind: kind.to_string(),
            n,
            checksum,
            abs_tol: quad.abs_tol,
            rel_tol: quad.rel_tol,
        }
    }

    fn file_name(&self) -> String {
        format!(
            "{}_n{}_{:016x}_{:016x}{:016x}.pmf",
            self.kind,
            self.n,
            self.checksum,
            self.abs_tol.to_bits(),
            self.rel_tol.to_bits()
        )
    }
}

#[derive(Debug, Clone)]
pub struct PmfCache {
    dir: PathBuf,
}

impl PmfCache {
    pub fn new<P: AsRef<Path>>(dir: P) -> Self {
        PmfCache {
            dir: dir.as_ref().to_path_buf(),
        }
    }

    pub fn path_for(&self, key: &PmfKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn load(&self, key: &PmfKey) -> Result<Option<Pmf>> {
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        parse(&text, key).map(Some)
    }

    /// Writes to a temporary sibling, then renames into place.
    pub fn store(&self, key: &PmfKey, pmf: &Pmf) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(key);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            write!(f, "{}", render(key, pmf))?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn get_or_compute<F>(&self, key: &PmfKey, compute: F) -> Result<Pmf>
    where
        F: FnOnce() -> Result<Pmf>,
    {
        if let Some(p) = self.load(key)? {
            return Ok(p);
        }
        let p = compute()?;
        self.store(key, &p)?;
        Ok(p)
    }
}

fn render(key: &PmfKey, pmf: &Pmf) -> String {
    let mut s = String::with_capacity(24 * pmf.masses().len() + 256);
    s.push_str(&format!("{MAGIC} {VERSION}\n"));
    s.push_str(&format!("kind {}\n", key.kind));
    s.push_str(&format!("n {}\n", key.n));
    s.push_str(&format!("checksum {:016x}\n", key.checksum));
    s.push_str(&format!("abs_tol {:?}\n", key.abs_tol));
    s.push_str(&format!("rel_tol {:?}\n", key.rel_tol));
    s.push_str(&format!("tolerance {:?}\n", pmf.tolerance()));
    s.push_str("masses\n");
    for m in pmf.masses() {
        s.push_str(&format!("{m:?}\n"));
    }
    s
}

fn parse(text: &str, key: &PmfKey) -> Result<Pmf> {
    let bad = |what: &str| Error::Cache(format!("malformed cache file: {what}"));
    let mut lines = text.lines();
    let mut field = |name: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad(name))?;
        let (k, v) = line.split_once(' ').ok_or_else(|| bad(name))?;
        if k != name {
            return Err(bad(name));
        }
        Ok(v.to_string())
    };
    let version: u32 = field(MAGIC)?.parse().map_err(|_| bad("version"))?;
    if version != VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let kind = field("kind")?;
    let n: u64 = field("n")?.parse().map_err(|_| bad("n"))?;
    let checksum = u64::from_str_radix(&field("checksum")?, 16).map_err(|_| bad("checksum"))?;
    let abs_tol: f64 = field("abs_tol")?.parse().map_err(|_| bad("abs_tol"))?;
    let rel_tol: f64 = field("rel_tol")?.parse().map_err(|_| bad("rel_tol"))?;
    let tolerance: f64 = field("tolerance")?.parse().map_err(|_| bad("tolerance"))?;
    let stored = PmfKey {
        kind,
        n,
        checksum,
        abs_tol,
        rel_tol,
    };
    if &stored != key {
        return Err(Error::Cache(format!("key mismatch: stored {stored:?}, wanted {key:?}")));
    }
    if lines.next() != Some("masses") {
        return Err(bad("masses"));
    }
    let mass: Vec<f64> = lines
        .map(|l| l.parse::<f64>().map_err(|_| bad("mass value")))
        .collect::<Result<_>>()?;
    if mass.len() as u64 != n {
        return Err(bad("mass count"));
    }
    Pmf::new(mass, tolerance)
}
