//! Command-line interface. `run` returns the process exit status:
//! 0 for expected outcomes, 1 for usage and input errors, 2 for unexpected verdicts.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::components::connected_components;
use crate::convexity::{
    boundary_ratio, composed_convexity_check, composed_psh_check, hyperplane_search, segment_convexity_falsify,
    CompositionDescriptor, HyperplaneBudget, OuterFunction, RatioMode, SegmentBudget, DEFAULT_RADII,
};
use crate::cvec::{self, C64};
use crate::domain::catalog::{catalog_domain, CATALOG};
use crate::domain::{sample_boundary, DomainSpec};
use crate::error::{Error, Result};
use crate::psh::{indicatrix_sweep, levi_min_eig, levi_min_eig_fn, points_inside, psh_falsify, recheck_circle, PshConfig, PshTarget};
use crate::ray::{directional_distance, lemma5_integral, lemma5_s_min, RayConfig};
use crate::report::{self, parse_point, parse_window, Check, DomainSource, Report, RunConfig};
use crate::reproduce::{reproduce, DEFAULT_SEED, TARGETS};
use crate::slicing::{exceptional_sweep, hartogs_contains};
use crate::verdict::Verdict;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNEXPECTED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cvxlab", version, about = "Numerical falsification of pseudoconvexity and related convexity notions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List or show catalog domains.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Run a falsification check on a domain.
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
    /// Mean of the indicatrix gauge over the circle of directions (delta, s e^{i theta}).
    Lemma5(Lemma5Args),
    /// Connected components of {z : w in the indicatrix at z} on a planar lattice.
    HartogsSlice(SliceArgs),
    /// -log s falsification on random complex 2-planes through a point.
    Sweep(SweepArgs),
    /// Convexity or plurisubharmonicity of f(s) or f(-log s).
    Fcomp(FcompArgs),
    /// Boundary ratio s(x) / |x - a|^2 along tangent offsets.
    Ratio(RatioArgs),
    /// Run a pinned reproduction recipe (or `all`).
    Reproduce(ReproduceArgs),
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    List,
    Show {
        /// `name` or `name:key=value,...`
        domain: String,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Domain file or catalog reference `name[:key=value,...]`.
    #[arg(long)]
    domain: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Expect {
    Pass,
    Falsified,
    Any,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PscTarget {
    NeglogS,
    Indicatrix,
    Hartogs,
}

#[derive(Subcommand, Debug)]
enum CheckKind {
    /// Pseudoconvexity via circle sub-mean-value certificates.
    Psc {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "neglog-s")]
        target: PscTarget,
        /// Number of circles.
        #[arg(long, default_value_t = 400)]
        budget: usize,
        /// Base point for the indicatrix target; sampled points when omitted.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// Number of sampled points for the indicatrix target.
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, value_enum, default_value = "pass")]
        expect: Expect,
    },
    /// Convexity via segments whose midpoint leaves the domain.
    Convex {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, value_enum, default_value = "pass")]
        expect: Expect,
    },
    /// Search for a complex hyperplane through a point outside the domain.
    Linconvex {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 1000)]
        conormals: usize,
    },
    /// Smallest eigenvalue of the Levi form of a primitive at a boundary point.
    Levi {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Index of the primitive field (0-based).
        #[arg(long, default_value_t = 0)]
        primitive: usize,
    },
}

#[derive(Args, Debug)]
struct Lemma5Args {
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Circle radius; the smallest admissible radius when omitted.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// CSV of `theta,exit_time`.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SliceArgs {
    #[arg(long)]
    domain: String,
    /// Fibre vector `w`, comma-separated complex coordinates.
    #[arg(long, allow_hyphen_values = true)]
    w: String,
    /// `x0,x1,y0,y1` in the coordinate of the complex line.
    #[arg(long, allow_hyphen_values = true)]
    window: String,
    #[arg(long)]
    step: f64,
    /// Base point of the complex line `base + zeta dir` (dimension > 1).
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dir: Option<String>,
    /// CSV of `x,y,label`.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, default_value_t = 50)]
    planes: usize,
    /// Circles per plane.
    #[arg(long, default_value_t = 120)]
    circles: usize,
    #[arg(long, value_enum, default_value = "any")]
    expect: SweepExpect,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SweepExpect {
    /// No plane falsified.
    Exceptional,
    /// At least one plane falsified.
    Falsified,
    Any,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FcompMode {
    Convex,
    Psh,
}

#[derive(Args, Debug)]
struct FcompArgs {
    #[command(flatten)]
    common: Common,
    /// neg-log, reciprocal, exp-neg, exp, identity, affine:A,B or expr:<field in re(1)>.
    #[arg(long)]
    f: String,
    #[arg(long, value_enum)]
    mode: FcompMode,
    /// Segments (convex) or circles (psh).
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// Upper end of the range on which the shape of f is sampled.
    #[arg(long, default_value_t = 20.0)]
    tmax: f64,
    #[arg(long, value_enum, default_value = "pass")]
    expect: Expect,
}

#[derive(Args, Debug)]
struct RatioArgs {
    #[command(flatten)]
    common: Common,
    /// real, complex or J.
    #[arg(long)]
    mode: String,
    /// Boundary point given directly.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Index into the seeded boundary samples.
    #[arg(long, default_value_t = 0)]
    point_index: usize,
    #[arg(long, default_value_t = 16)]
    samples: usize,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// Recipe name or `all`.
    name: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Directory for `<name>.json`; stdout when omitted.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Entry point used by the binary.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = report::init_threads_from_env() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Catalog { action } => catalog_cmd(action),
        Command::Check { kind } => check_cmd(kind),
        Command::Lemma5(a) => lemma5_cmd(a),
        Command::HartogsSlice(a) => slice_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Fcomp(a) => fcomp_cmd(a),
        Command::Ratio(a) => ratio_cmd(a),
        Command::Reproduce(a) => reproduce_cmd(a),
    }
}

fn emit(report: &mut Report, out: Option<&Path>) -> Result<i32> {
    report.finish();
    match out {
        Some(p) => report.write(p)?,
        None => print_line(&report.to_json()),
    }
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_UNEXPECTED })
}

fn load(common: &Common, command: &str) -> Result<(DomainSpec, RunConfig)> {
    let source = DomainSource::parse(&common.domain)?;
    let spec = source.load()?;
    let mut cfg = RunConfig::new(command, common.seed);
    cfg.domain = Some(source);
    cfg.out = common.out.clone();
    Ok((spec, cfg))
}

fn point_in(spec: &DomainSpec, text: &str) -> Result<Vec<C64>> {
    let p = parse_point(text)?;
    spec.check_dim(&p)?;
    Ok(p)
}

fn verdict_check(v: &Verdict, expect: Expect) -> Check {
    let ok = match expect {
        Expect::Pass => !v.is_falsified(),
        Expect::Falsified => v.is_falsified(),
        Expect::Any => true,
    };
    let observed = if v.is_falsified() { "falsified" } else { "passed-at-resolution" };
    Check::new("verdict", &format!("{expect:?}").to_lowercase(), observed, ok)
}

/// Prints a line, ignoring a closed stdout.
fn print_line(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn catalog_cmd(action: CatalogAction) -> Result<i32> {
    match action {
        CatalogAction::List => {
            for (name, what) in CATALOG {
                print_line(&format!("{name:<16} {what}"));
            }
        }
        CatalogAction::Show { domain } => {
            let source = DomainSource::parse(&domain)?;
            let spec = source.load()?;
            let mut cfg = RunConfig::new("catalog show", 0);
            cfg.domain = Some(source);
            let mut r = Report::new(cfg);
            r.domain(&spec);
            emit(&mut r, None)?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ConvergenceRow {
    grid: usize,
    margin: f64,
}

fn psc_convergence(spec: &DomainSpec, target: &PshTarget, v: &Verdict, cfg: &PshConfig) -> Result<Vec<ConvergenceRow>> {
    let Some(cert) = v.certificate() else { return Ok(Vec::new()) };
    [1, 2, 4]
        .iter()
        .map(|k| {
            let grid = cert.samples * k;
            Ok(ConvergenceRow { grid, margin: recheck_circle(spec, target, cert, grid, cfg)? })
        })
        .collect()
}

#[derive(Serialize)]
struct DistanceRow {
    direction: Vec<C64>,
    angles: Vec<(usize, Option<f64>)>,
}

/// Directional distances at doubling angle grids.
fn distance_convergence(spec: &DomainSpec, z: &[C64], seed: u64) -> Result<Vec<DistanceRow>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..4)
        .map(|_| {
            let x = cvec::random_unit(&mut rng, spec.dimension);
            let angles = [64, 128, 256, 512]
                .iter()
                .map(|&a| Ok((a, directional_distance(spec, z, &x, &RayConfig::with_angles(a))?.value)))
                .collect::<Result<_>>()?;
            Ok(DistanceRow { direction: x, angles })
        })
        .collect()
}

fn check_cmd(kind: CheckKind) -> Result<i32> {
    match kind {
        CheckKind::Psc { common, target, budget, point, points, expect } => {
            let (spec, mut cfg) = load(&common, "check psc")?;
            cfg.budgets.circles = Some(budget);
            cfg.set("target", target).set("expect", expect);
            if let Some(p) = &point {
                cfg.set("point", p);
            }
            cfg.validate()?;
            let pcfg = PshConfig::with_circles(budget);
            let mut r = Report::new(cfg);
            r.domain(&spec);
            match target {
                PscTarget::NeglogS | PscTarget::Hartogs => {
                    let t = if target == PscTarget::NeglogS { PshTarget::NegLogS } else { PshTarget::Hartogs };
                    let v = psh_falsify(&spec, &t, &pcfg, common.seed)?;
                    r.result("grid_convergence", psc_convergence(&spec, &t, &v, &pcfg)?)?;
                    r.check(verdict_check(&v, expect));
                    r.result("verdict", &v)?;
                }
                PscTarget::Indicatrix => {
                    let zs = match &point {
                        Some(p) => vec![point_in(&spec, p)?],
                        None => {
                            r.config.budgets.samples = Some(points.max(1));
                            points_inside(&spec, points.max(1), common.seed)?
                        }
                    };
                    let sweep = indicatrix_sweep(&spec, &zs, &pcfg, common.seed)?;
                    let v = match &sweep.first {
                        Some((_, c)) => Verdict::Falsified { certificate: Box::new(c.clone()) },
                        None => Verdict::PassedAtResolution {
                            budget: crate::verdict::SearchBudget {
                                candidates: budget * zs.len(),
                                grid: pcfg.grid,
                                radii: (0.0, 0.0),
                                seed: common.seed,
                                band: None,
                            },
                        },
                    };
                    let table = match &sweep.first {
                        Some((k, _)) => {
                            psc_convergence(&spec, &PshTarget::MinkowskiAt(zs[*k].clone()), &v, &pcfg)?
                        }
                        None => Vec::new(),
                    };
                    r.result("grid_convergence", table)?;
                    r.result("distance_convergence", distance_convergence(&spec, &zs[0], common.seed)?)?;
                    r.check(verdict_check(&v, expect));
                    r.result("verdict", &v)?;
                    r.result("indicatrix", &sweep)?;
                }
            }
            emit(&mut r, common.out.as_deref())
        }
        CheckKind::Convex { common, budget, expect } => {
            let (spec, mut cfg) = load(&common, "check convex")?;
            cfg.budgets.samples = Some(budget);
            cfg.set("expect", expect);
            cfg.validate()?;
            let v = segment_convexity_falsify(&spec, budget, common.seed)?;
            let mut r = Report::new(cfg);
            r.domain(&spec);
            r.check(verdict_check(&v, expect));
            r.result("verdict", &v)?;
            emit(&mut r, common.out.as_deref())
        }
        CheckKind::Linconvex { common, point, conormals } => {
            let (spec, mut cfg) = load(&common, "check linconvex")?;
            cfg.set("point", &point).set("conormals", conormals);
            cfg.validate()?;
            if conormals == 0 {
                return Err(Error::InvalidParameter("conormals must be at least 1".into()));
            }
            let a = point_in(&spec, &point)?;
            let budget = HyperplaneBudget { conormals, ..Default::default() };
            let w = hyperplane_search(&spec, &a, &budget, common.seed)?;
            let mut r = Report::new(cfg);
            r.domain(&spec);
            r.result("budget", &budget)?;
            r.result("found", w.is_some())?;
            r.result("witness", &w)?;
            emit(&mut r, common.out.as_deref())
        }
        CheckKind::Levi { common, point, primitive } => {
            let (spec, mut cfg) = load(&common, "check levi")?;
            cfg.set("point", &point).set("primitive", primitive);
            let a = point_in(&spec, &point)?;
            let prims = spec.primitives();
            let p = prims
                .get(primitive)
                .ok_or_else(|| Error::InvalidParameter(format!("the domain has {} primitives", prims.len())))?;
            let e = match &p.map {
                None => levi_min_eig(&p.field, &a)?,
                Some(_) => levi_min_eig_fn(|z| p.value(z), &a)?,
            };
            let mut r = Report::new(cfg);
            r.domain(&spec);
            r.result("min_eigenvalue", e)?;
            emit(&mut r, common.out.as_deref())
        }
    }
}

fn lemma5_cmd(a: Lemma5Args) -> Result<i32> {
    let s = a.s.unwrap_or_else(|| lemma5_s_min(a.delta, a.c));
    let mut cfg = RunConfig::new("lemma5", 0);
    cfg.set("delta", a.delta).set("c", a.c).set("s", s).set("eps", a.eps).set("grid", a.grid);
    cfg.out = a.out.clone();
    cfg.csv = a.csv.clone();
    let res = lemma5_integral(a.delta, a.c, s, a.eps, a.grid)?;
    if let Some(path) = &a.csv {
        let mut text = String::from("theta,exit_time\n");
        for (t, d) in &res.profile {
            text.push_str(&format!("{t},{d}\n"));
        }
        write_text(path, &text)?;
    }
    let mut r = Report::new(cfg);
    r.domain(&catalog_domain("lemma5-e", &crate::domain::catalog::params(&[("c", a.c), ("eps", a.eps)]))?);
    r.result("integral", res.value)?;
    r.result("profile_min", res.profile.iter().map(|p| p.1).fold(f64::INFINITY, f64::min))?;
    r.check(Check::new("integral", "< 1", res.value, res.value < 1.0 || s == 0.0));
    emit(&mut r, a.out.as_deref())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn slice_cmd(a: SliceArgs) -> Result<i32> {
    let source = DomainSource::parse(&a.domain)?;
    let spec = source.load()?;
    let w = point_in(&spec, &a.w)?;
    let window = parse_window(&a.window)?;
    let n = spec.dimension;
    let base = match &a.base {
        Some(b) => point_in(&spec, b)?,
        None => vec![C64::new(0.0, 0.0); n],
    };
    let dir = match &a.dir {
        Some(d) => report::unit_or_err(&point_in(&spec, d)?)?,
        None => cvec::unit(n, 0),
    };
    let mut cfg = RunConfig::new("hartogs-slice", 0);
    cfg.domain = Some(source);
    cfg.set("w", &w).set("window", window).set("step", a.step).set("base", &base).set("dir", &dir);
    cfg.out = a.out.clone();
    cfg.csv = a.csv.clone();
    let member = |x: f64, y: f64| {
        let z = cvec::axpy(&base, C64::new(x, y), &dir);
        hartogs_contains(&spec, &z, &w).unwrap_or(false)
    };
    let comps = connected_components(member, window, a.step)?;
    if let Some(path) = &a.csv {
        write_text(path, &comps.to_csv())?;
    }
    let mut r = Report::new(cfg);
    r.domain(&spec);
    r.result("components", &comps)?;
    emit(&mut r, a.out.as_deref())
}

fn sweep_cmd(a: SweepArgs) -> Result<i32> {
    let (spec, mut cfg) = load(&a.common, "sweep")?;
    cfg.budgets.planes = Some(a.planes);
    cfg.budgets.circles = Some(a.circles);
    cfg.set("point", &a.point).set("expect", a.expect);
    cfg.validate()?;
    let p = point_in(&spec, &a.point)?;
    let rep = exceptional_sweep(&spec, &p, a.planes, &PshConfig::with_circles(a.circles), a.common.seed)?;
    let ok = match a.expect {
        SweepExpect::Exceptional => rep.falsified == 0,
        SweepExpect::Falsified => rep.falsified > 0,
        SweepExpect::Any => true,
    };
    let mut r = Report::new(cfg);
    r.domain(&spec);
    r.check(Check::new("violation fraction", &format!("{:?}", a.expect).to_lowercase(), rep.violation_fraction, ok));
    r.result("sweep", &rep)?;
    emit(&mut r, a.common.out.as_deref())
}

fn fcomp_cmd(a: FcompArgs) -> Result<i32> {
    let (spec, mut cfg) = load(&a.common, "fcomp")?;
    cfg.set("f", &a.f).set("mode", a.mode).set("tmax", a.tmax).set("expect", a.expect);
    match a.mode {
        FcompMode::Convex => cfg.budgets.samples = Some(a.budget),
        FcompMode::Psh => cfg.budgets.circles = Some(a.budget),
    }
    cfg.validate()?;
    let f = CompositionDescriptor::new(OuterFunction::parse(&a.f)?, a.tmax)?;
    let v = match a.mode {
        FcompMode::Convex => {
            let band = (1e-3, 0.2 * spec.bounding_radius);
            composed_convexity_check(&spec, &f, &SegmentBudget { segments: a.budget, band }, a.common.seed)?
        }
        FcompMode::Psh => composed_psh_check(&spec, &f, &PshConfig::with_circles(a.budget), a.common.seed)?,
    };
    let mut r = Report::new(cfg);
    r.domain(&spec);
    r.result("function", &f)?;
    r.check(verdict_check(&v, a.expect));
    r.result("verdict", &v)?;
    emit(&mut r, a.common.out.as_deref())
}

fn ratio_cmd(a: RatioArgs) -> Result<i32> {
    let (spec, mut cfg) = load(&a.common, "ratio")?;
    let mode = RatioMode::parse(&a.mode)?;
    cfg.set("mode", mode).set("point_index", a.point_index).set("radii", DEFAULT_RADII);
    if let Some(p) = &a.point {
        cfg.set("point", p);
    } else {
        cfg.budgets.samples = Some(a.samples);
    }
    cfg.validate()?;
    let data = match &a.point {
        Some(p) => crate::domain::boundary_point_data(&spec, &point_in(&spec, p)?)?,
        None => {
            let pts = sample_boundary(&spec, a.samples, a.common.seed)?;
            let count = pts.len();
            pts.into_iter().nth(a.point_index).ok_or_else(|| {
                Error::InvalidParameter(format!("point index {} out of range ({count} samples)", a.point_index))
            })?
        }
    };
    let est = boundary_ratio(&spec, &data, mode, &DEFAULT_RADII)?;
    let mut r = Report::new(cfg);
    r.domain(&spec);
    r.result("point", &data.point)?;
    r.result("ratio", &est)?;
    emit(&mut r, a.common.out.as_deref())
}

fn reproduce_cmd(a: ReproduceArgs) -> Result<i32> {
    let names: Vec<&str> = if a.name == "all" { TARGETS.to_vec() } else { vec![a.name.as_str()] };
    let mut code = EXIT_OK;
    for name in names {
        let rep = reproduce(name, a.seed)?;
        for c in &rep.checks {
            eprintln!("{name}: {} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.observed);
        }
        match &a.out_dir {
            Some(dir) => rep.write(&dir.join(format!("{name}.json")))?,
            None => print_line(&rep.to_json()),
        }
        if !rep.all_passed() {
            code = EXIT_UNEXPECTED;
        }
    }
    Ok(code)
}
