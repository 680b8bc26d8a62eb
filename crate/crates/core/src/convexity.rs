//! Real and linear convexity tests, composed defining functions and boundary ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{self, C64};
use crate::domain::{
    boundary_point_data, sample_interior, signed_boundary_distance, BoundaryPointData, DistanceConfig, DomainSpec,
};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::psh::{band_circles, neglog_s, s_value, search_circles, PshConfig};
use crate::verdict::{CertificateKind, SearchBudget, Verdict, ViolationCertificate, CERT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
    Neither,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curvature {
    Convex,
    Concave,
    Affine,
    Neither,
}

#[derive(Clone, Debug)]
pub enum OuterFunction {
    NegLog,
    Reciprocal,
    ExpNeg,
    Exp,
    Identity,
    Affine { a: f64, b: f64 },
    /// Expression in `re(1)`, which plays the role of `t`.
    Custom(ScalarField),
}

impl OuterFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OuterFunction::NegLog => -t.ln(),
            OuterFunction::Reciprocal => 1.0 / t,
            OuterFunction::ExpNeg => (-t).exp(),
            OuterFunction::Exp => t.exp(),
            OuterFunction::Identity => t,
            OuterFunction::Affine { a, b } => a * t + b,
            OuterFunction::Custom(f) => f.value(&[C64::new(t, 0.0)]),
        }
    }

    /// Accepts `neg-log`, `reciprocal`, `exp-neg`, `exp`, `identity`,
    /// `affine:A,B` and `expr:<expression in re(1)>`.
    pub fn parse(text: &str) -> Result<Self> {
        Ok(match text {
            "neg-log" | "neglog" => OuterFunction::NegLog,
            "reciprocal" => OuterFunction::Reciprocal,
            "exp-neg" => OuterFunction::ExpNeg,
            "exp" => OuterFunction::Exp,
            "identity" => OuterFunction::Identity,
            _ => {
                if let Some(rest) = text.strip_prefix("affine:") {
                    let parts: Vec<&str> = rest.split(',').collect();
                    let num = |s: &str| {
                        s.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number {s:?}")))
                    };
                    if parts.len() != 2 {
                        return Err(Error::InvalidParameter("affine needs two coefficients".into()));
                    }
                    OuterFunction::Affine { a: num(parts[0])?, b: num(parts[1])? }
                } else if let Some(rest) = text.strip_prefix("expr:") {
                    OuterFunction::Custom(ScalarField::parse(rest, 1)?)
                } else {
                    return Err(Error::InvalidParameter(format!("unknown function {text:?}")));
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            OuterFunction::NegLog => "neg-log".into(),
            OuterFunction::Reciprocal => "reciprocal".into(),
            OuterFunction::ExpNeg => "exp-neg".into(),
            OuterFunction::Exp => "exp".into(),
            OuterFunction::Identity => "identity".into(),
            OuterFunction::Affine { a, b } => format!("affine:{a},{b}"),
            OuterFunction::Custom(f) => format!("expr:{f}"),
        }
    }
}

/// A function of one variable with sampled shape tags on `(0, t_max]`.
#[derive(Clone, Debug, Serialize)]
pub struct CompositionDescriptor {
    pub name: String,
    pub monotonicity: Monotonicity,
    pub curvature: Curvature,
    #[serde(skip)]
    pub function: OuterFunction,
}

const SHAPE_SAMPLES: usize = 1000;

fn shape_tags(f: &OuterFunction, t_max: f64) -> (Monotonicity, Curvature) {
    let ts: Vec<f64> = (1..=SHAPE_SAMPLES).map(|k| t_max * k as f64 / SHAPE_SAMPLES as f64).collect();
    let v: Vec<f64> = ts.iter().map(|&t| f.eval(t)).collect();
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    let eps = 1e-12 * scale;
    let d1: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let d2: Vec<f64> = v.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let up = d1.iter().any(|&d| d > eps);
    let down = d1.iter().any(|&d| d < -eps);
    let mono = match (up, down) {
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (false, false) => Monotonicity::Constant,
        (true, true) => Monotonicity::Neither,
    };
    let cup = d2.iter().any(|&d| d > eps);
    let cap = d2.iter().any(|&d| d < -eps);
    let curv = match (cup, cap) {
        (true, false) => Curvature::Convex,
        (false, true) => Curvature::Concave,
        (false, false) => Curvature::Affine,
        (true, true) => Curvature::Neither,
    };
    (mono, curv)
}

impl CompositionDescriptor {
    /// Tags are derived from 1000 samples on `(0, t_max]`.
    pub fn new(function: OuterFunction, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::InvalidParameter("t_max must be positive".into()));
        }
        let (monotonicity, curvature) = shape_tags(&function, t_max);
        Ok(CompositionDescriptor { name: function.name(), monotonicity, curvature, function })
    }

    /// Fails when the claimed tags disagree with the sampled shape.
    pub fn with_tags(function: OuterFunction, t_max: f64, mono: Monotonicity, curv: Curvature) -> Result<Self> {
        let d = Self::new(function, t_max)?;
        if d.monotonicity != mono || d.curvature != curv {
            return Err(Error::InvalidParameter(format!(
                "{}: sampled shape is {:?}/{:?}, not {mono:?}/{curv:?}",
                d.name, d.monotonicity, d.curvature
            )));
        }
        Ok(d)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.function.eval(t)
    }

    pub fn is_convex(&self) -> bool {
        matches!(self.curvature, Curvature::Convex | Curvature::Affine)
    }

    pub fn is_decreasing(&self) -> bool {
        self.monotonicity == Monotonicity::Decreasing
    }

    pub fn is_increasing(&self) -> bool {
        self.monotonicity == Monotonicity::Increasing
    }
}

fn segment_certificate(target: &str, a: Vec<C64>, b: Vec<C64>, m: Vec<C64>, margin: f64, index: usize) -> ViolationCertificate {
    let direction = cvec::sub(&b, &a);
    ViolationCertificate {
        kind: CertificateKind::Segment,
        target: target.to_string(),
        center: m.clone(),
        radius: 0.5 * cvec::norm(&direction),
        direction,
        margin,
        samples: 3,
        recheck_samples: 3,
        recheck_margin: margin,
        index,
        points: vec![a, b, m],
    }
}

/// Midpoint test of one segment: `Some(depth)` when both ends are inside and the
/// midpoint lies outside at boundary distance `depth > CERT_TOL`.
pub fn segment_witness(spec: &DomainSpec, a: &[C64], b: &[C64]) -> Result<Option<f64>> {
    spec.check_dim(a)?;
    spec.check_dim(b)?;
    let m: Vec<C64> = a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect();
    if !spec.member(a) || !spec.member(b) || spec.member(&m) {
        return Ok(None);
    }
    let depth = -s_value(spec, &m, &DistanceConfig::default());
    Ok((depth > CERT_TOL).then_some(depth))
}

const BATCH: usize = 256;

/// Seeded pairs of interior points (global pairs and short pairs) whose
/// midpoint is tested for membership.
pub fn segment_convexity_falsify(spec: &DomainSpec, segments: usize, seed: u64) -> Result<Verdict> {
    if segments == 0 {
        return Err(Error::InvalidParameter("segment budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = spec.bounding_radius;
    let mut done = 0;
    while done < segments {
        let count = BATCH.min(segments - done);
        let mut pairs = Vec::with_capacity(count);
        for k in 0..count {
            let Some(a) = sample_interior(spec, &mut rng, 10_000) else {
                return Err(Error::EmptyRegion("no interior sample found".into()));
            };
            let b = if (done + k) % 2 == 0 {
                match sample_interior(spec, &mut rng, 10_000) {
                    Some(b) => b,
                    None => continue,
                }
            } else {
                let len = r * (1e-3f64.ln() * rng.random::<f64>()).exp();
                cvec::axpy(&a, C64::new(len, 0.0), &cvec::random_unit(&mut rng, spec.dimension))
            };
            pairs.push((a, b));
        }
        let hits: Vec<Option<f64>> = pairs.par_iter().map(|(a, b)| segment_witness(spec, a, b).ok().flatten()).collect();
        if let Some(k) = hits.iter().position(Option::is_some) {
            let (a, b) = pairs[k].clone();
            let m: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x + y) * 0.5).collect();
            let cert = segment_certificate("membership", a, b, m, hits[k].unwrap(), done + k);
            return Ok(Verdict::Falsified { certificate: Box::new(cert) });
        }
        done += count;
    }
    Ok(Verdict::PassedAtResolution {
        budget: SearchBudget { candidates: segments, grid: 3, radii: (0.0, 2.0 * r), seed, band: None },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperplaneBudget {
    pub conormals: usize,
    pub descent_steps: usize,
    pub probes: usize,
    pub verify_probes: usize,
}

impl Default for HyperplaneBudget {
    fn default() -> Self {
        HyperplaneBudget { conormals: 1000, descent_steps: 50, probes: 256, verify_probes: 10_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperplaneWitness {
    /// Unit conormal: the hyperplane is `{z : <z - a, w> = 0}`.
    pub conormal: Vec<C64>,
    pub point: Vec<C64>,
    pub verified_probes: usize,
    /// Number of conormals examined before this one was accepted.
    pub tried: usize,
}

/// Fixed probe offsets in `C^{n-1}`, radii log-spread over the window.
fn hyperplane_probes(n: usize, count: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
    (0..count)
        .map(|_| {
            let rho = 2.0 * r * (1e-5f64.ln() * rng.random::<f64>()).exp();
            cvec::scale(&cvec::random_unit(rng, n - 1), C64::new(rho, 0.0))
        })
        .collect()
}

fn lift(a: &[C64], basis: &[Vec<C64>], zeta: &[C64]) -> Vec<C64> {
    let mut p = a.to_vec();
    for (b, z) in basis.iter().zip(zeta) {
        p = cvec::axpy(&p, *z, b);
    }
    p
}

/// `max(-level)` over probes inside the window; `<= 0` when no probe is a member.
fn penetration(spec: &DomainSpec, a: &[C64], w: &[C64], probes: &[Vec<C64>]) -> f64 {
    let basis = cvec::complement_basis(&[w.to_vec()], a.len());
    let r = spec.bounding_radius;
    let mut worst = f64::NEG_INFINITY;
    for zeta in probes {
        let p = lift(a, &basis, zeta);
        if cvec::norm(&p) > r {
            continue;
        }
        let v = if spec.member(&p) { (-spec.level(&p)).max(f64::MIN_POSITIVE) } else { -spec.level(&p).abs() };
        worst = worst.max(v);
    }
    worst
}

fn verify_plane(spec: &DomainSpec, a: &[C64], w: &[C64], probes: &[Vec<C64>]) -> bool {
    let basis = cvec::complement_basis(&[w.to_vec()], a.len());
    let r = spec.bounding_radius;
    probes.par_iter().all(|zeta| {
        let p = lift(a, &basis, zeta);
        cvec::norm(&p) > r || !spec.member(&p)
    })
}

/// Search for a complex hyperplane through `a` that misses the domain inside the window.
pub fn hyperplane_search(spec: &DomainSpec, a: &[C64], budget: &HyperplaneBudget, seed: u64) -> Result<Option<HyperplaneWitness>> {
    spec.check_dim(a)?;
    if spec.member(a) {
        return Err(Error::InDomain);
    }
    let n = spec.dimension;
    if n < 2 {
        return Err(Error::InvalidParameter("hyperplanes through a point need n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = spec.bounding_radius;
    let probes = hyperplane_probes(n, budget.probes, r, &mut rng);
    let verify = hyperplane_probes(n, budget.verify_probes, r, &mut rng);
    let mut candidates: Vec<Vec<C64>> = Vec::new();
    if let Ok(d) = boundary_point_data(spec, a) {
        if let Some(nrm) = d.normal {
            candidates.push(nrm);
        }
    }
    candidates.extend((0..budget.conormals).map(|_| cvec::random_unit(&mut rng, n)));
    let scores: Vec<f64> = candidates.par_iter().map(|w| penetration(spec, a, w, &probes)).collect();
    for (k, (w, &s)) in candidates.iter().zip(&scores).enumerate() {
        if s <= 0.0 && verify_plane(spec, a, w, &verify) {
            return Ok(Some(HyperplaneWitness {
                conormal: w.clone(),
                point: a.to_vec(),
                verified_probes: verify.len(),
                tried: k + 1,
            }));
        }
    }
    // local pattern search from the least penetrating conormals
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
    let mut tried = candidates.len();
    for &start in order.iter().take(4) {
        let mut w = candidates[start].clone();
        let mut best = scores[start];
        let mut step = 0.2;
        for _ in 0..budget.descent_steps {
            let trial = cvec::normalized(&cvec::axpy(&w, C64::new(step, 0.0), &cvec::gaussian(&mut rng, n)));
            let s = penetration(spec, a, &trial, &probes);
            tried += 1;
            if s < best {
                best = s;
                w = trial;
                if best <= 0.0 && verify_plane(spec, a, &w, &verify) {
                    return Ok(Some(HyperplaneWitness { conormal: w, point: a.to_vec(), verified_probes: verify.len(), tried }));
                }
            } else {
                step *= 0.7;
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentBudget {
    pub segments: usize,
    pub band: (f64, f64),
}

/// Midpoint convexity of `f(s_D)` on short segments inside the band, without
/// checking the shape of `f`.
pub fn composed_midpoint_falsify(
    spec: &DomainSpec,
    f: &CompositionDescriptor,
    budget: &SegmentBudget,
    seed: u64,
) -> Result<Verdict> {
    let (lo, hi) = budget.band;
    if !(lo > 0.0 && hi > lo) || budget.segments == 0 {
        return Err(Error::InvalidParameter("need 0 < band.0 < band.1 and a positive budget".into()));
    }
    let cfg = DistanceConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = format!("{}(s)", f.name);
    let mut tested = 0;
    let mut attempts = 0;
    while tested < budget.segments {
        if attempts > 50 * budget.segments + 10_000 {
            if tested == 0 {
                return Err(Error::EmptyRegion("no segment inside the band".into()));
            }
            break;
        }
        let mut pairs = Vec::with_capacity(BATCH);
        for _ in 0..BATCH {
            attempts += 1;
            let Some(a) = sample_interior(spec, &mut rng, 10_000) else {
                return Err(Error::EmptyRegion("no interior sample found".into()));
            };
            let len = hi * (1e-3f64.ln() * rng.random::<f64>()).exp();
            let b = cvec::axpy(&a, C64::new(len, 0.0), &cvec::random_unit(&mut rng, spec.dimension));
            pairs.push((a, b));
        }
        let results: Vec<Option<f64>> = pairs
            .par_iter()
            .map(|(a, b)| {
                if !spec.member(b) {
                    return None;
                }
                let m: Vec<C64> = a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect();
                let inside = |p: &[C64]| {
                    let s = signed_boundary_distance(spec, p, &cfg).ok()?.value;
                    (s >= lo && s <= hi).then_some(s)
                };
                let (sa, sb, sm) = (inside(a)?, inside(b)?, inside(&m)?);
                let (ga, gb, gm) = (f.eval(sa), f.eval(sb), f.eval(sm));
                let avg = 0.5 * (ga + gb);
                Some(gm - avg - CERT_TOL * (1.0 + avg.abs()))
            })
            .collect();
        for (k, res) in results.iter().enumerate() {
            let Some(excess) = res else { continue };
            tested += 1;
            if *excess > 0.0 {
                let (a, b) = pairs[k].clone();
                let m: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x + y) * 0.5).collect();
                let cert = segment_certificate(&target, a, b, m, excess + CERT_TOL, tested - 1);
                return Ok(Verdict::Falsified { certificate: Box::new(cert) });
            }
            if tested >= budget.segments {
                break;
            }
        }
    }
    Ok(Verdict::PassedAtResolution {
        budget: SearchBudget { candidates: tested, grid: 3, radii: (hi * 1e-3, hi), seed, band: Some(budget.band) },
    })
}

/// Midpoint convexity of `f(s_D)` for decreasing convex `f`.
pub fn composed_convexity_check(spec: &DomainSpec, f: &CompositionDescriptor, budget: &SegmentBudget, seed: u64) -> Result<Verdict> {
    if !(f.is_decreasing() && f.is_convex()) {
        return Err(Error::InvalidParameter(format!("{} must be decreasing and convex", f.name)));
    }
    composed_midpoint_falsify(spec, f, budget, seed)
}

/// Circle-mean search on `f(-log s_D)` for increasing convex `f`.
pub fn composed_psh_check(spec: &DomainSpec, f: &CompositionDescriptor, cfg: &PshConfig, seed: u64) -> Result<Verdict> {
    if !(f.is_increasing() && f.is_convex()) {
        return Err(Error::InvalidParameter(format!("{} must be increasing and convex", f.name)));
    }
    let circles = band_circles(spec, cfg, seed)?;
    let u = |z: &[C64]| f.eval(neglog_s(spec, z, &cfg.distance));
    let target = format!("{}(-log s)", f.name);
    Ok(match search_circles(&u, &target, &circles, cfg.grid) {
        Some(c) => Verdict::Falsified { certificate: Box::new(c) },
        None => {
            let (lo, hi) = circles.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), c| (l.min(c.radius), h.max(c.radius)));
            Verdict::PassedAtResolution {
                budget: SearchBudget { candidates: circles.len(), grid: cfg.grid, radii: (lo, hi), seed, band: Some(cfg.band_for(spec)) },
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioMode {
    RealTangent,
    ComplexTangent,
    JSymmetrized,
}

impl RatioMode {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "real" | "real-tangent" => Ok(RatioMode::RealTangent),
            "complex" | "complex-tangent" => Ok(RatioMode::ComplexTangent),
            "J" | "j" | "j-symmetrized" => Ok(RatioMode::JSymmetrized),
            _ => Err(Error::InvalidParameter(format!("unknown ratio mode {text:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioEstimate {
    pub mode: RatioMode,
    /// Minimum over the two smallest radii.
    pub estimate: f64,
    /// `(radius, minimal ratio)` for each radius in the schedule.
    pub per_radius: Vec<(f64, f64)>,
    /// Whether the per-radius minima vary monotonically with the radius.
    pub monotone: bool,
    pub offsets_per_radius: usize,
}

pub const DEFAULT_RADII: [f64; 4] = [0.1, 0.05, 0.02, 0.01];

fn tangent_offsets(a: &BoundaryPointData, mode: RatioMode, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = a.point.len();
    let (basis, complex) = match mode {
        RatioMode::RealTangent => (&a.real_tangent, false),
        _ => (&a.complex_tangent, true),
    };
    let mut out: Vec<Vec<C64>> = Vec::new();
    for b in basis {
        out.push(b.clone());
        if complex {
            out.push(cvec::scale(b, C64::new(0.0, 1.0)));
        }
    }
    while out.len() < count {
        let mut v = vec![C64::new(0.0, 0.0); n];
        for b in basis {
            let coef = if complex { cvec::gaussian(&mut rng, 1)[0] } else { C64::new(cvec::gaussian(&mut rng, 1)[0].re, 0.0) };
            v = cvec::axpy(&v, coef, b);
        }
        if cvec::norm(&v) > 0.0 {
            out.push(cvec::normalized(&v));
        }
    }
    out
}

/// Sampled lower limit of `s_D(x) / |x - a|^2` over tangent offsets of shrinking size.
pub fn boundary_ratio(spec: &DomainSpec, a: &BoundaryPointData, mode: RatioMode, radii: &[f64]) -> Result<RatioEstimate> {
    let Some(_) = &a.normal else { return Err(Error::MissingFrame) };
    if a.non_smooth {
        return Err(Error::MissingFrame);
    }
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] >= w[0]) || radii.last().is_some_and(|&r| r < 1e-4) {
        return Err(Error::InvalidParameter("radii must be strictly decreasing, at least two, and >= 1e-4".into()));
    }
    let basis_len = match mode {
        RatioMode::RealTangent => a.real_tangent.len(),
        _ => a.complex_tangent.len(),
    };
    if basis_len == 0 {
        return Err(Error::InvalidParameter("the chosen tangent space is trivial here".into()));
    }
    let offsets = tangent_offsets(a, mode, 64, 0x7a11);
    let cfg = DistanceConfig::default();
    let s = |p: &[C64]| s_value(spec, p, &cfg);
    let mut per_radius = Vec::new();
    for &r in radii {
        let ratios: Vec<f64> = offsets
            .par_iter()
            .flat_map_iter(|v| [1.0, 0.75, 0.5].into_iter().map(move |f| (v, f * r)))
            .map(|(v, rho)| {
                let x = cvec::axpy(&a.point, C64::new(rho, 0.0), v);
                match mode {
                    RatioMode::JSymmetrized => {
                        let y = cvec::axpy(&a.point, C64::new(0.0, rho), v);
                        (s(&x) + s(&y)) / (rho * rho)
                    }
                    _ => s(&x) / (rho * rho),
                }
            })
            .collect();
        if ratios.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("tangent offsets leave the window".into()));
        }
        per_radius.push((r, ratios.iter().copied().fold(f64::INFINITY, f64::min)));
    }
    let k = per_radius.len();
    let estimate = per_radius[k - 1].1.min(per_radius[k - 2].1);
    let inc = per_radius.windows(2).all(|w| w[1].1 >= w[0].1);
    let dec = per_radius.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(RatioEstimate { mode, estimate, per_radius, monotone: inc || dec, offsets_per_radius: offsets.len() * 3 })
}
