//! Sub-mean-value tests on complex circles, Levi forms and analytic disk probes.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{self, C64};
use crate::domain::distance::{changes_near, nearest_on, ray_fan};
use crate::domain::{
    boundary_point_data, sample_boundary, sample_interior, signed_boundary_distance, BoundaryDistance,
    DistanceConfig, DomainSpec,
};
use crate::error::{Error, Result};
use crate::expr::{real_derivatives, ScalarField, HESSIAN_STEP};
use crate::ray::{minkowski, RayConfig};
use crate::verdict::{CertificateKind, SearchBudget, Verdict, ViolationCertificate, CERT_TOL};

/// `u(center) - mean of u(center + r e^{i theta} V)` by the trapezoid rule.
///
/// Non-finite values count as "infinite". A circle with at least `grid / 8`
/// of them is rejected; fewer make the test inconclusive and the margin is -inf.
pub fn circle_mean_margin<F: Fn(&[C64]) -> f64>(u: F, center: &[C64], v: &[C64], r: f64, grid: usize) -> Result<f64> {
    if center.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: center.len(), got: v.len() });
    }
    if !(r > 0.0) || grid < 3 {
        return Err(Error::InvalidParameter("need r > 0 and grid >= 3".into()));
    }
    let u0 = u(center);
    if !u0.is_finite() {
        return Err(Error::InvalidParameter("function is not finite at the center".into()));
    }
    let mut p = center.to_vec();
    let mut sum = 0.0;
    let mut bad = 0;
    for k in 0..grid {
        let w = C64::from_polar(r, std::f64::consts::TAU * k as f64 / grid as f64);
        for ((pi, ci), vi) in p.iter_mut().zip(center).zip(v) {
            *pi = ci + w * vi;
        }
        let val = u(&p);
        if val.is_finite() {
            sum += val;
        } else {
            bad += 1;
        }
    }
    if bad * 8 >= grid {
        return Err(Error::CircleGrazesBoundary { bad, total: grid });
    }
    if bad > 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(u0 - sum / grid as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct Circle {
    pub center: Vec<C64>,
    pub direction: Vec<C64>,
    pub radius: f64,
}

/// Evaluates circles in enumeration order (parallel within chunks) and returns
/// the first one whose margin exceeds the tolerance and survives a 4x recheck.
pub fn search_circles<F: Fn(&[C64]) -> f64 + Sync>(
    u: &F,
    target: &str,
    circles: &[Circle],
    grid: usize,
) -> Option<ViolationCertificate> {
    const CHUNK: usize = 32;
    for (ci, chunk) in circles.chunks(CHUNK).enumerate() {
        let margins: Vec<f64> = chunk
            .par_iter()
            .map(|c| circle_mean_margin(u, &c.center, &c.direction, c.radius, grid).unwrap_or(f64::NEG_INFINITY))
            .collect();
        for (k, (c, &m)) in chunk.iter().zip(&margins).enumerate() {
            if !(m > CERT_TOL) {
                continue;
            }
            let fine = circle_mean_margin(u, &c.center, &c.direction, c.radius, 4 * grid).unwrap_or(f64::NEG_INFINITY);
            if fine >= 0.5 * m && fine > CERT_TOL {
                return Some(ViolationCertificate {
                    kind: CertificateKind::CircleMean,
                    target: target.to_string(),
                    center: c.center.clone(),
                    direction: c.direction.clone(),
                    radius: c.radius,
                    margin: m,
                    samples: grid,
                    recheck_samples: 4 * grid,
                    recheck_margin: fine,
                    index: ci * CHUNK + k,
                    points: Vec::new(),
                });
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub enum PshTarget {
    /// `-log s_D`.
    NegLogS,
    /// `-log d_D(., X)` for a fixed direction.
    NegLogD(Vec<C64>),
    /// The gauge `X -> 1/d_D(z, X)` of the indicatrix at `z`.
    MinkowskiAt(Vec<C64>),
    /// `log 1/d_D(z, w)` on `D x C^n`, whose sublevel set `< 0` is the Hartogs-like domain.
    Hartogs,
}

impl PshTarget {
    pub fn name(&self) -> &'static str {
        match self {
            PshTarget::NegLogS => "neglog-s",
            PshTarget::NegLogD(_) => "neglog-d",
            PshTarget::MinkowskiAt(_) => "minkowski-at",
            PshTarget::Hartogs => "hartogs",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PshConfig {
    /// Number of circles examined.
    pub circles: usize,
    /// Quadrature nodes per circle.
    pub grid: usize,
    /// Range of `s_D` for circle centers; defaults to `(1e-4, 0.2 R_max)`.
    pub band: Option<(f64, f64)>,
    /// Circle radii as fractions of the admissible radius.
    pub fractions: Vec<f64>,
    pub ray: RayConfig,
    pub distance: DistanceConfig,
}

impl Default for PshConfig {
    fn default() -> Self {
        PshConfig {
            circles: 400,
            grid: 32,
            band: None,
            fractions: vec![0.9, 0.5, 0.2],
            ray: RayConfig::with_angles(64),
            distance: DistanceConfig::default(),
        }
    }
}

impl PshConfig {
    pub fn with_circles(circles: usize) -> Self {
        PshConfig { circles, ..Default::default() }
    }

    pub fn band_for(&self, spec: &DomainSpec) -> (f64, f64) {
        self.band.unwrap_or((1e-4, 0.2 * spec.bounding_radius))
    }
}

/// `s_D` as a plain number; points outside the window count as non-finite.
pub fn s_value(spec: &DomainSpec, z: &[C64], cfg: &DistanceConfig) -> f64 {
    match signed_boundary_distance(spec, z, cfg) {
        Ok(d) => d.value,
        Err(_) => f64::NAN,
    }
}

/// `-log s_D`, infinite off the domain.
pub fn neglog_s(spec: &DomainSpec, z: &[C64], cfg: &DistanceConfig) -> f64 {
    let s = s_value(spec, z, cfg);
    if s > 0.0 {
        -s.ln()
    } else {
        f64::INFINITY
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Directions Hermitian-orthogonal to `x`, a random mix of them, and one random direction.
fn tangent_directions(rng: &mut ChaCha8Rng, x: &[C64]) -> Vec<Vec<C64>> {
    let n = x.len();
    let mut out = Vec::new();
    if cvec::norm(x) > 0.0 && n > 1 {
        let basis = cvec::complement_basis(&[x.to_vec()], n);
        if basis.len() > 1 {
            let mut mix = vec![C64::new(0.0, 0.0); n];
            for (b, g) in basis.iter().zip(cvec::gaussian(rng, basis.len())) {
                mix = cvec::axpy(&mix, g, b);
            }
            out.push(cvec::normalized(&mix));
        }
        out.extend(basis);
    }
    out.push(cvec::random_unit(rng, n));
    out
}

/// A center inside the band together with its boundary distance.
#[derive(Clone, Debug)]
pub struct BandPoint {
    pub point: Vec<C64>,
    pub distance: BoundaryDistance,
}

/// Seeded centers with `s_D` in the band: random offsets from junction points,
/// inward offsets from sampled boundary points, and offsets orthogonal to
/// removed affine sets.
pub fn band_centers(spec: &DomainSpec, count: usize, band: (f64, f64), cfg: &DistanceConfig, seed: u64) -> Result<Vec<BandPoint>> {
    let (lo, hi) = band;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter("band must satisfy 0 < lo < hi".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.dimension;
    let affine = spec.affine_sets();
    let from_affine = if affine.is_empty() { 0 } else { count / 2 };
    let from_junction = if spec.primitives().len() < 2 { 0 } else { (count - from_affine) / 3 };
    let mut raw: Vec<Vec<C64>> = junction_points(spec, from_junction, rng.random())
        .into_iter()
        .map(|j| {
            let t = log_uniform(&mut rng, lo, hi);
            cvec::axpy(&j, C64::new(t, 0.0), &cvec::random_unit(&mut rng, n))
        })
        .collect();
    let smooth = count - from_affine - from_junction;
    if smooth > 0 {
        match sample_boundary(spec, smooth, rng.random()) {
            Ok(pts) => {
                for b in pts {
                    let Some(nrm) = b.normal else { continue };
                    let t = log_uniform(&mut rng, lo, hi);
                    raw.push(cvec::axpy(&b.point, C64::new(-t, 0.0), &nrm));
                }
            }
            Err(Error::NoBoundary) if from_affine > 0 => {}
            Err(e) => return Err(e),
        }
    }
    for k in 0..from_affine {
        let a = affine[k % affine.len()];
        let mut base = a.point.clone();
        for b in &a.basis {
            let g = cvec::gaussian(&mut rng, 1)[0] * (0.1 * spec.bounding_radius);
            base = cvec::axpy(&base, g, b);
        }
        let mut u = cvec::gaussian(&mut rng, n);
        for b in &a.basis {
            u = cvec::axpy(&u, -cvec::herm(&u, b), b);
        }
        let u = cvec::normalized(&u);
        let t = log_uniform(&mut rng, lo, hi.min(0.5 * spec.bounding_radius));
        raw.push(cvec::axpy(&base, C64::new(t, 0.0), &u));
    }
    let out: Vec<BandPoint> = raw
        .into_par_iter()
        .filter_map(|p| {
            if !spec.member(&p) {
                return None;
            }
            let d = signed_boundary_distance(spec, &p, cfg).ok()?;
            (d.value >= lo && d.value <= hi).then_some(BandPoint { point: p, distance: d })
        })
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyRegion("no sample has its boundary distance in the band".into()));
    }
    Ok(out)
}

/// Boundary points where two primitive zero sets meet, found by projecting
/// interior samples onto pairwise intersections.
pub fn junction_points(spec: &DomainSpec, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let prims = spec.primitives();
    let mut pairs = Vec::new();
    for i in 0..prims.len() {
        for j in i + 1..prims.len() {
            pairs.push((i, j));
        }
    }
    if count == 0 || pairs.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = ray_fan(spec.dimension, 8, seed);
    let mut out = Vec::new();
    for attempt in 0..20 * count {
        if out.len() >= count {
            break;
        }
        let Some(x) = sample_interior(spec, &mut rng, 1000) else { break };
        let (i, j) = pairs[attempt % pairs.len()];
        let Some(p) = nearest_on(&[prims[i], prims[j]], &x, 80) else { continue };
        if cvec::norm(&p) <= spec.bounding_radius && changes_near(spec, &p, &dirs) {
            out.push(p);
        }
    }
    out
}

/// Circles around band centers in complex-tangent and random directions.
pub fn band_circles(spec: &DomainSpec, cfg: &PshConfig, seed: u64) -> Result<Vec<Circle>> {
    let per_center = (cfg.fractions.len() * (spec.dimension.min(3) + 1)).max(1);
    // some raw centers fall outside the band, so ask for more than needed
    let count = 2 * cfg.circles.div_ceil(per_center).max(1);
    let centers = band_centers(spec, count, cfg.band_for(spec), &cfg.distance, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::new();
    'outer: for c in &centers {
        let normal = match &c.distance.nearest {
            Some(p) => cvec::sub(&c.point, p),
            None => Vec::new(),
        };
        let dirs = tangent_directions(&mut rng, &normal);
        for d in &dirs {
            for f in &cfg.fractions {
                out.push(Circle { center: c.point.clone(), direction: d.clone(), radius: f * c.distance.value });
                if out.len() >= cfg.circles {
                    break 'outer;
                }
            }
        }
    }
    Ok(out)
}

/// Circles in direction space around `X = b - z` for boundary points `b`,
/// nearest boundary point first.
fn indicatrix_circles(spec: &DomainSpec, z: &[C64], cfg: &PshConfig, seed: u64) -> Result<Vec<Circle>> {
    let d = signed_boundary_distance(spec, z, &cfg.distance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut anchors: Vec<Vec<C64>> = Vec::new();
    if let Some(p) = &d.nearest {
        anchors.push(p.clone());
    }
    let extra = (cfg.circles / (2 * cfg.fractions.len().max(1))).max(1);
    if let Ok(pts) = sample_boundary(spec, extra, rng.random()) {
        anchors.extend(pts.into_iter().map(|b| b.point));
    }
    let mut out = Vec::new();
    'outer: for b in &anchors {
        let x = cvec::sub(b, z);
        if cvec::norm(&x) == 0.0 {
            continue;
        }
        let mut dirs = match boundary_point_data(spec, b) {
            Ok(data) if data.has_frame() && !data.complex_tangent.is_empty() => data.complex_tangent,
            _ => Vec::new(),
        };
        dirs.extend(tangent_directions(&mut rng, &x));
        for v in &dirs {
            for f in [1.0, 0.5, 0.25] {
                out.push(Circle { center: x.clone(), direction: v.clone(), radius: f * cvec::norm(&x) });
                if out.len() >= cfg.circles {
                    break 'outer;
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyRegion("no boundary point found for the indicatrix test".into()));
    }
    Ok(out)
}

/// Circles in `D x C^n` through points `(z, w)` with `w` reaching the nearest
/// boundary point; vertical, horizontal and mixed directions.
fn hartogs_circles(spec: &DomainSpec, cfg: &PshConfig, seed: u64) -> Result<Vec<Circle>> {
    let n = spec.dimension;
    let per_center = 3 * cfg.fractions.len() * 2;
    let count = cfg.circles.div_ceil(per_center).max(1);
    let centers = band_centers(spec, count, cfg.band_for(spec), &cfg.distance, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    let zero = vec![C64::new(0.0, 0.0); n];
    let join = |a: &[C64], b: &[C64]| -> Vec<C64> { a.iter().chain(b).copied().collect() };
    let mut out = Vec::new();
    'outer: for c in &centers {
        let Some(p) = &c.distance.nearest else { continue };
        let w = cvec::sub(p, &c.point);
        let s = c.distance.value;
        let centre = join(&c.point, &w);
        let zdirs = tangent_directions(&mut rng, &cvec::scale(&w, C64::new(-1.0, 0.0)));
        let wdirs = tangent_directions(&mut rng, &w);
        let mut lines: Vec<(Vec<C64>, f64)> = Vec::new();
        for u in zdirs.iter().take(2) {
            lines.push((join(u, &zero), s));
            let v = &wdirs[0];
            let mixed = cvec::normalized(&join(u, v));
            lines.push((mixed, s * std::f64::consts::SQRT_2));
        }
        for v in wdirs.iter().take(2) {
            lines.push((join(&zero, v), cvec::norm(&w)));
        }
        for (dir, rmax) in &lines {
            for f in &cfg.fractions {
                out.push(Circle { center: centre.clone(), direction: dir.clone(), radius: f * rmax });
                if out.len() >= cfg.circles {
                    break 'outer;
                }
            }
        }
    }
    Ok(out)
}

/// `log h(z, w)` on `D x C^n`; infinite for `z` outside the domain.
pub fn hartogs_log_gauge(spec: &DomainSpec, zw: &[C64], ray: &RayConfig) -> f64 {
    let n = spec.dimension;
    let (z, w) = zw.split_at(n);
    if !spec.member(z) {
        return f64::INFINITY;
    }
    match minkowski(spec, z, w, ray) {
        Ok(h) if h > 0.0 => h.ln(),
        _ => f64::NAN,
    }
}

fn budget(cfg: &PshConfig, spec: &DomainSpec, circles: &[Circle], seed: u64, band: bool) -> SearchBudget {
    let (rlo, rhi) = circles
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), c| (lo.min(c.radius), hi.max(c.radius)));
    SearchBudget {
        candidates: circles.len(),
        grid: cfg.grid,
        radii: (rlo, rhi),
        seed,
        band: band.then(|| cfg.band_for(spec)),
    }
}

/// Seeded search for a circle on which the target fails the sub-mean-value inequality.
pub fn psh_falsify(spec: &DomainSpec, target: &PshTarget, cfg: &PshConfig, seed: u64) -> Result<Verdict> {
    if cfg.circles == 0 || cfg.grid < 8 {
        return Err(Error::InvalidParameter("need at least one circle and grid >= 8".into()));
    }
    let (circles, cert) = match target {
        PshTarget::NegLogS => {
            let circles = band_circles(spec, cfg, seed)?;
            let u = |z: &[C64]| neglog_s(spec, z, &cfg.distance);
            let cert = search_circles(&u, target.name(), &circles, cfg.grid);
            (circles, cert)
        }
        PshTarget::NegLogD(x) => {
            spec.check_dim(x)?;
            if cvec::norm(x) == 0.0 {
                return Err(Error::InvalidParameter("direction must be nonzero".into()));
            }
            let circles = band_circles(spec, cfg, seed)?;
            let u = |z: &[C64]| {
                if !spec.member(z) {
                    return f64::INFINITY;
                }
                match crate::ray::directional_distance(spec, z, x, &cfg.ray) {
                    Ok(d) => d.value.map_or(f64::NAN, |v| -v.ln()),
                    Err(_) => f64::NAN,
                }
            };
            let cert = search_circles(&u, target.name(), &circles, cfg.grid);
            (circles, cert)
        }
        PshTarget::MinkowskiAt(z) => {
            spec.check_dim(z)?;
            if !spec.member(z) {
                return Err(Error::NotInDomain);
            }
            let circles = indicatrix_circles(spec, z, cfg, seed)?;
            let u = |x: &[C64]| minkowski(spec, z, x, &cfg.ray).unwrap_or(f64::NAN);
            let cert = search_circles(&u, target.name(), &circles, cfg.grid);
            (circles, cert)
        }
        PshTarget::Hartogs => {
            let circles = hartogs_circles(spec, cfg, seed)?;
            let u = |zw: &[C64]| hartogs_log_gauge(spec, zw, &cfg.ray);
            let cert = search_circles(&u, target.name(), &circles, cfg.grid);
            (circles, cert)
        }
    };
    Ok(match cert {
        Some(c) => Verdict::Falsified { certificate: Box::new(c) },
        None => Verdict::PassedAtResolution {
            budget: budget(cfg, spec, &circles, seed, !matches!(target, PshTarget::MinkowskiAt(_))),
        },
    })
}

/// Circle-mean search on the gauge of the indicatrix at `z`.
pub fn indicatrix_psc_check(spec: &DomainSpec, z: &[C64], cfg: &PshConfig, seed: u64) -> Result<Verdict> {
    psh_falsify(spec, &PshTarget::MinkowskiAt(z.to_vec()), cfg, seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct IndicatrixSweep {
    pub points: Vec<Vec<C64>>,
    pub falsified: usize,
    /// Index of the first falsified point and its certificate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first: Option<(usize, ViolationCertificate)>,
    pub circles_per_point: usize,
}

/// Runs `indicatrix_psc_check` at each point; point `k` uses seed `seed + k`.
pub fn indicatrix_sweep(spec: &DomainSpec, points: &[Vec<C64>], cfg: &PshConfig, seed: u64) -> Result<IndicatrixSweep> {
    let verdicts: Vec<Verdict> = points
        .par_iter()
        .enumerate()
        .map(|(k, z)| indicatrix_psc_check(spec, z, cfg, seed.wrapping_add(k as u64)))
        .collect::<Result<_>>()?;
    let falsified = verdicts.iter().filter(|v| v.is_falsified()).count();
    let first = verdicts
        .iter()
        .enumerate()
        .find_map(|(k, v)| v.certificate().map(|c| (k, c.clone())));
    Ok(IndicatrixSweep { points: points.to_vec(), falsified, first, circles_per_point: cfg.circles })
}

/// Seeded members of the domain within distance `radius` of `center`.
pub fn points_near(spec: &DomainSpec, center: &[C64], radius: f64, count: usize, seed: u64) -> Result<Vec<Vec<C64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count.saturating_mul(1000) {
        if out.len() == count {
            break;
        }
        let z = cvec::add(center, &cvec::random_in_ball(&mut rng, center.len(), radius));
        if spec.member(&z) {
            out.push(z);
        }
    }
    if out.len() < count {
        return Err(Error::EmptyRegion(format!("found {} of {count} members near the center", out.len())));
    }
    Ok(out)
}

/// Seeded members of the domain drawn uniformly from the bounding ball.
pub fn points_inside(spec: &DomainSpec, count: usize, seed: u64) -> Result<Vec<Vec<C64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| sample_interior(spec, &mut rng, 100_000).ok_or_else(|| Error::EmptyRegion("no interior point found".into())))
        .collect()
}

/// Verdicts of the three equivalent pseudoconvexity tests on one domain.
#[derive(Clone, Debug, Serialize)]
pub struct CoherenceReport {
    pub neglog_s: Verdict,
    pub hartogs: Verdict,
    pub indicatrix: IndicatrixSweep,
    /// All three falsified, or none.
    pub coherent: bool,
}

/// `-log s_D`, the Hartogs gauge and indicatrix gauges at `points` sampled
/// points. Indicatrix points are drawn near the `-log s_D` witness when
/// there is one and uniformly from the domain otherwise.
pub fn pseudoconvexity_coherence(spec: &DomainSpec, cfg: &PshConfig, indicatrix_cfg: &PshConfig, points: usize, seed: u64) -> Result<CoherenceReport> {
    let neglog_s = psh_falsify(spec, &PshTarget::NegLogS, cfg, seed)?;
    let hartogs = psh_falsify(spec, &PshTarget::Hartogs, cfg, seed ^ 0x4a27)?;
    let zs = match neglog_s.certificate() {
        Some(c) => points_near(spec, &c.center, c.radius, points, seed ^ 0x1d1c)?,
        None => points_inside(spec, points, seed ^ 0x1d1c)?,
    };
    let indicatrix = indicatrix_sweep(spec, &zs, indicatrix_cfg, seed ^ 0x7a7a)?;
    let falsified = [neglog_s.is_falsified(), hartogs.is_falsified(), indicatrix.falsified > 0];
    let coherent = falsified.iter().all(|&b| b) || falsified.iter().all(|&b| !b);
    Ok(CoherenceReport { neglog_s, hartogs, indicatrix, coherent })
}

/// Recomputes a circle certificate's margin at a given resolution.
pub fn recheck_circle(spec: &DomainSpec, target: &PshTarget, cert: &ViolationCertificate, grid: usize, cfg: &PshConfig) -> Result<f64> {
    let (c, v, r) = (&cert.center, &cert.direction, cert.radius);
    match target {
        PshTarget::NegLogS => circle_mean_margin(|z| neglog_s(spec, z, &cfg.distance), c, v, r, grid),
        PshTarget::NegLogD(x) => circle_mean_margin(
            |z| match crate::ray::directional_distance(spec, z, x, &cfg.ray) {
                Ok(d) => d.value.map_or(f64::NAN, |v| -v.ln()),
                Err(_) => f64::INFINITY,
            },
            c,
            v,
            r,
            grid,
        ),
        PshTarget::MinkowskiAt(z) => {
            circle_mean_margin(|x| minkowski(spec, z, x, &cfg.ray).unwrap_or(f64::NAN), c, v, r, grid)
        }
        PshTarget::Hartogs => circle_mean_margin(|zw| hartogs_log_gauge(spec, zw, &cfg.ray), c, v, r, grid),
    }
}

/// Minimal eigenvalue of the complex Hessian of `f` on the complex tangent space at `a`.
pub fn levi_min_eig_fn<F: Fn(&[C64]) -> f64>(f: F, a: &[C64]) -> Result<f64> {
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter("the complex tangent space is trivial for n = 1".into()));
    }
    let d = real_derivatives(&f, a, HESSIAN_STEP)?;
    let g = &d.gradient;
    let nrm: Vec<C64> = (0..n).map(|j| C64::new(g[2 * j], g[2 * j + 1])).collect();
    if cvec::norm(&nrm) < 1e-12 {
        return Err(Error::VanishingGradient);
    }
    let h = &d.hessian;
    // A = conj(L), L_jk = d^2 f / dz_j dzbar_k, so that X^H A X is the Levi form
    let a_mat = DMatrix::from_fn(n, n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        C64::new(h[xj][xk] + h[yj][yk], h[xj][yk] - h[yj][xk]).conj() * 0.25
    });
    let basis = cvec::complement_basis(&[nrm], n);
    let m = basis.len();
    let t = DMatrix::from_fn(n, m, |i, k| basis[k][i]);
    let restricted = t.adjoint() * a_mat * &t;
    let herm = (&restricted + restricted.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn levi_min_eig(f: &ScalarField, a: &[C64]) -> Result<f64> {
    if a.len() != f.dimension() {
        return Err(Error::DimensionMismatch { expected: f.dimension(), got: a.len() });
    }
    if !f.is_smooth_at(a, 1e-6) {
        return Err(Error::NonSmooth);
    }
    levi_min_eig_fn(|z| f.value(z), a)
}

/// `zeta -> c0 + c1 zeta + c2 zeta^2`.
#[derive(Clone, Debug, Serialize)]
pub struct QuadraticDisk {
    pub c0: Vec<C64>,
    pub c1: Vec<C64>,
    pub c2: Vec<C64>,
}

impl QuadraticDisk {
    pub fn apply(&self, zeta: C64) -> Vec<C64> {
        let z2 = zeta * zeta;
        self.c0.iter().zip(&self.c1).zip(&self.c2).map(|((a, b), c)| a + b * zeta + c * z2).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskProbeResult {
    /// `min s_D(p(zeta)) - s_D(p(0))` over sampled `0 < |zeta| <= 1`.
    pub margin: f64,
    pub argmin: C64,
    pub center_distance: f64,
    pub samples: usize,
}

/// Compares the boundary distance at the disk center with the rest of the disk.
pub fn disk_probe(spec: &DomainSpec, disk: &QuadraticDisk, radial: usize, angular: usize, cfg: &DistanceConfig) -> Result<DiskProbeResult> {
    for v in [&disk.c0, &disk.c1, &disk.c2] {
        spec.check_dim(v)?;
    }
    if radial == 0 || angular < 3 {
        return Err(Error::InvalidParameter("need radial >= 1 and angular >= 3".into()));
    }
    let s0 = s_value(spec, &disk.c0, cfg);
    if !(s0 > 0.0) || !spec.member(&disk.c0) {
        return Err(Error::DiskNotContained);
    }
    let zetas: Vec<C64> = (1..=radial)
        .flat_map(|i| {
            (0..angular).map(move |k| {
                C64::from_polar(i as f64 / radial as f64, std::f64::consts::TAU * k as f64 / angular as f64)
            })
        })
        .collect();
    let values: Vec<f64> = zetas
        .par_iter()
        .map(|&zeta| {
            let p = disk.apply(zeta);
            if spec.member(&p) {
                s_value(spec, &p, cfg)
            } else {
                f64::NAN
            }
        })
        .collect();
    let mut margin = f64::INFINITY;
    let mut argmin = C64::new(0.0, 0.0);
    for (z, v) in zetas.iter().zip(&values) {
        if !(*v > 0.0) {
            return Err(Error::DiskNotContained);
        }
        if v - s0 < margin {
            margin = v - s0;
            argmin = *z;
        }
    }
    Ok(DiskProbeResult { margin, argmin, center_distance: s0, samples: zetas.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::c;
    use crate::domain::catalog::{catalog, catalog_domain, params};

    #[test]
    fn pluriharmonic_margin_is_zero() {
        let m = circle_mean_margin(|z| z[0].re + 3.0 * z[1].im, &[c(0.3, 1.0), c(-2.0, 0.5)], &[c(0.6, 0.8), c(1.0, 0.0)], 0.7, 32)
            .unwrap();
        assert!(m.abs() < 1e-9);
    }

    #[test]
    fn negative_norm_margin_is_exact() {
        let v = [c(0.6, 0.1), c(-0.3, 0.4)];
        let r = 0.4;
        let m = circle_mean_margin(|z| -cvec::norm2(z), &[c(1.0, 2.0), c(0.0, -1.0)], &v, r, 32).unwrap();
        assert!((m - r * r * cvec::norm2(&v)).abs() < 1e-6);
    }

    #[test]
    fn grazing_circle_rejected() {
        let u = |z: &[C64]| if z[0].re > 0.0 { f64::INFINITY } else { 0.0 };
        assert!(matches!(
            circle_mean_margin(u, &[c(0.0, 0.0)], &[c(1.0, 0.0)], 1.0, 16),
            Err(Error::CircleGrazesBoundary { .. })
        ));
    }

    #[test]
    fn levi_model_and_sphere() {
        let m = catalog_domain("model-hor", &params(&[("c", 0.5), ("n", 2.0)])).unwrap();
        let f = &m.primitives()[0].field;
        let l = levi_min_eig(f, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((l + 0.25).abs() < 1e-5, "{l}");
        let sphere = ScalarField::parse("norm2 - 1", 3).unwrap();
        let l = levi_min_eig(&sphere, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((l - 1.0).abs() < 1e-6, "{l}");
        assert!(matches!(
            levi_min_eig(&sphere, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::VanishingGradient)
        ));
    }

    #[test]
    fn kinked_field_rejected() {
        let f = ScalarField::parse("max(re(1), re(2))", 2).unwrap();
        assert!(matches!(levi_min_eig(&f, &[c(0.0, 0.0), c(0.0, 0.0)]), Err(Error::NonSmooth)));
    }

    #[test]
    fn ball_disk_probe_is_negative() {
        let s = catalog("ball").unwrap();
        let disk = QuadraticDisk {
            c0: vec![c(0.0, 0.0), c(0.0, 0.0)],
            c1: vec![c(0.5, 0.0), c(0.0, 0.0)],
            c2: vec![c(0.0, 0.0), c(0.0, 0.0)],
        };
        let r = disk_probe(&s, &disk, 8, 16, &DistanceConfig::default()).unwrap();
        assert!(r.margin < 0.0);
        let big = QuadraticDisk { c1: vec![c(2.0, 0.0), c(0.0, 0.0)], ..disk };
        assert!(matches!(disk_probe(&s, &big, 8, 16, &DistanceConfig::default()), Err(Error::DiskNotContained)));
    }

    #[test]
    fn model_disk_probe_is_positive() {
        let s = catalog_domain("model-hor", &params(&[("c", 0.5), ("n", 2.0)])).unwrap();
        let delta: f64 = 0.01;
        let t = (1.5 * delta).sqrt();
        let disk = QuadraticDisk {
            c0: vec![c(-delta, 0.0), c(0.0, 0.0)],
            c1: vec![c(0.0, 0.0), c(t, 0.0)],
            c2: vec![c(delta, 0.0), c(0.0, 0.0)],
        };
        let r = disk_probe(&s, &disk, 16, 32, &DistanceConfig::default()).unwrap();
        assert!(r.margin > 0.0, "{r:?}");
    }

    #[test]
    fn hartogs_figure_mixed_disk_probe_is_positive() {
        let s = catalog("hartogs-figure").unwrap();
        let (z1, w) = (0.46, 0.52);
        let (a, b) = (0.5 - z1, w - 0.5);
        let amp = 0.02;
        let disk = QuadraticDisk {
            c0: vec![c(z1, 0.0), c(w, 0.0)],
            c1: vec![c(amp, 0.0), c(amp * a / b, 0.0)],
            c2: vec![c(0.0, 0.0), c(0.0, 0.0)],
        };
        let r = disk_probe(&s, &disk, 16, 32, &DistanceConfig::default()).unwrap();
        assert!(r.margin > 0.0, "{r:?}");
    }
}
