//! Run configuration and JSON reports.
//!
//! Every report separates the deterministic payload from the wall-clock
//! section, so `Report::numeric_json` is byte-identical across reruns with
//! the same configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::cvec::{self, C64};
use crate::domain::catalog::{catalog_domain, Params};
use crate::domain::{load_domain_file, DomainSpec};
use crate::error::{Error, Result};
use crate::slicing::HARTOGS_TOL;
use crate::verdict::CERT_TOL;

pub const TOOL: &str = "cvxlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "CVXLAB_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSource {
    File { path: PathBuf },
    Catalog { name: String, params: Params },
}

impl DomainSource {
    /// A path to an existing file, or `name` / `name:key=value,key=value`.
    pub fn parse(text: &str) -> Result<Self> {
        let path = Path::new(text);
        if path.is_file() {
            return Ok(DomainSource::File { path: path.to_path_buf() });
        }
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (text, None),
        };
        let mut params = Params::new();
        for pair in rest.into_iter().flat_map(|r| r.split(',')).filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{pair}`")))?;
            params.insert(k.trim().to_string(), constant(v)?);
        }
        Ok(DomainSource::Catalog { name: name.trim().to_string(), params })
    }

    pub fn load(&self) -> Result<DomainSpec> {
        match self {
            DomainSource::File { path } => load_domain_file(path),
            DomainSource::Catalog { name, params } => catalog_domain(name, params),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Budgets {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub certificate: f64,
    pub hartogs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { certificate: CERT_TOL, hartogs: HARTOGS_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSource>,
    pub budgets: Budgets,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Command-specific settings.
    pub settings: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        RunConfig {
            command: command.to_string(),
            domain: None,
            budgets: Budgets::default(),
            seed,
            tolerances: Tolerances::default(),
            settings: BTreeMap::new(),
            out: None,
            csv: None,
        }
    }

    pub fn set<T: Serialize>(&mut self, key: &str, value: T) -> &mut Self {
        self.settings.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        for (name, v) in [("samples", b.samples), ("circles", b.circles), ("planes", b.planes)] {
            if v == Some(0) {
                return Err(Error::InvalidParameter(format!("budget `{name}` must be at least 1")));
            }
        }
        let t = &self.tolerances;
        if !(1e-12..=1e-2).contains(&t.certificate) || !(1e-12..=1e-2).contains(&t.hartogs) {
            return Err(Error::InvalidParameter("tolerances must lie in [1e-12, 1e-2]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainEcho {
    pub name: String,
    pub dimension: usize,
    pub bounding_radius: f64,
    pub formula: String,
}

impl DomainEcho {
    pub fn of(spec: &DomainSpec) -> Self {
        DomainEcho {
            name: spec.name.clone(),
            dimension: spec.dimension,
            bounding_radius: spec.bounding_radius,
            formula: spec.formula(),
        }
    }
}

/// One expected outcome of a reproduction recipe or a `--expect` flag.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: Value,
    pub passed: bool,
}

impl Check {
    pub fn new<T: Serialize>(name: &str, expected: &str, observed: T, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            expected: expected.to_string(),
            observed: serde_json::to_value(observed).unwrap_or(Value::Null),
            passed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WallClock {
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub domains: Vec<DomainEcho>,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub wall_clock: WallClock,
    #[serde(skip)]
    started: Option<Instant>,
}

#[derive(Serialize)]
struct Numeric<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    domains: &'a [DomainEcho],
    results: &'a BTreeMap<String, Value>,
    checks: &'a [Check],
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            config,
            domains: Vec::new(),
            results: BTreeMap::new(),
            checks: Vec::new(),
            wall_clock: WallClock { seconds: 0.0 },
            started: Some(Instant::now()),
        }
    }

    pub fn domain(&mut self, spec: &DomainSpec) -> &mut Self {
        self.domains.push(DomainEcho::of(spec));
        self
    }

    pub fn result<T: Serialize>(&mut self, key: &str, value: T) -> Result<&mut Self> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn check(&mut self, check: Check) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn finish(&mut self) -> &mut Self {
        if let Some(t) = self.started {
            self.wall_clock.seconds = t.elapsed().as_secs_f64();
        }
        self
    }

    /// The report without the wall-clock section.
    pub fn numeric_json(&self) -> String {
        let n = Numeric {
            tool: self.tool,
            version: self.version,
            config: &self.config,
            domains: &self.domains,
            results: &self.results,
            checks: &self.checks,
        };
        serde_json::to_string_pretty(&n).expect("report values serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// A real number, optionally written `sqrt(x)` or `-sqrt(x)`.
pub fn constant(text: &str) -> Result<f64> {
    let t = text.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) if rest.starts_with("sqrt(") => (-1.0, rest),
        _ => (1.0, t),
    };
    let bad = || Error::InvalidParameter(format!("not a number: `{text}`"));
    match body.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        Some(inner) => {
            let v: f64 = inner.trim().parse().map_err(|_| bad())?;
            if v < 0.0 {
                return Err(bad());
            }
            Ok(sign * v.sqrt())
        }
        None => body.parse().map_err(|_| bad()),
    }
}

/// A complex number `a`, `bi`, `a+bi` or `a-bi`, or a real constant expression.
pub fn complex_number(text: &str) -> Result<C64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not part of an exponent or the leading sign
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            s => constant(s)?,
        };
        let re = if re.is_empty() { 0.0 } else { constant(re)? };
        return Ok(C64::new(re, im));
    }
    Ok(C64::new(constant(&t)?, 0.0))
}

/// Comma-separated complex coordinates.
pub fn parse_point(text: &str) -> Result<Vec<C64>> {
    text.split(',').map(complex_number).collect()
}

/// `x0,x1,y0,y1`.
pub fn parse_window(text: &str) -> Result<crate::components::Window> {
    let v: Vec<f64> = text.split(',').map(constant).collect::<Result<_>>()?;
    if v.len() != 4 {
        return Err(Error::InvalidParameter("window needs four numbers x0,x1,y0,y1".into()));
    }
    Ok(crate::components::Window { x0: v[0], x1: v[1], y0: v[2], y1: v[3] })
}

pub fn format_point(p: &[C64]) -> String {
    p.iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect::<Vec<_>>().join(",")
}

/// Installs the global thread pool size from the environment, if set.
pub fn init_threads_from_env() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV} must be a positive integer")))?;
        if n == 0 {
            return Err(Error::InvalidParameter(format!("{THREADS_ENV} must be a positive integer")));
        }
        // a pool installed earlier in the process wins
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn unit_or_err(v: &[C64]) -> Result<Vec<C64>> {
    if cvec::norm(v) == 0.0 {
        return Err(Error::InvalidParameter("direction must be nonzero".into()));
    }
    Ok(cvec::normalized(v))
}
