//! Pinned reproduction recipes. Each recipe runs a fixed configuration and
//! records its expected outcomes as report checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::components::{connected_components, Window};
use crate::convexity::{
    boundary_ratio, composed_convexity_check, composed_midpoint_falsify, composed_psh_check, hyperplane_search,
    CompositionDescriptor, HyperplaneBudget, OuterFunction, RatioMode, SegmentBudget, DEFAULT_RADII,
};
use crate::cvec::{self, c, C64};
use crate::domain::catalog::{catalog, catalog_domain, params};
use crate::domain::{
    boundary_point_data, sample_boundary, signed_boundary_distance, DistanceConfig, DistanceMethod, DomainSpec,
};
use crate::error::{Error, Result};
use crate::psh::{pseudoconvexity_coherence, CoherenceReport, PshConfig};
use crate::ray::{lemma5_integral, lemma5_s_min, ray_exit_time, RayConfig};
use crate::report::{Check, Report, RunConfig};
use crate::slicing::{exceptional_sweep, hartogs_contains, member_on_plane, slice_domain, PlaneFrame};
use crate::verdict::{Verdict, CERT_TOL};

pub const TARGETS: &[&str] = &[
    "lemma5",
    "theorem1-crosscheck",
    "example10",
    "example13",
    "example14",
    "example15",
    "prop6-quadrant",
    "prop8-hartogsfigure",
    "ratio-tests",
];

pub const DEFAULT_SEED: u64 = 1;

/// Runs one recipe; the returned report carries the checks and is finished.
pub fn reproduce(name: &str, seed: u64) -> Result<Report> {
    let mut cfg = RunConfig::new("reproduce", seed);
    cfg.set("target", name);
    let mut r = Report::new(cfg);
    match name {
        "lemma5" => lemma5(&mut r)?,
        "theorem1-crosscheck" => theorem1(&mut r, seed)?,
        "example10" => example10(&mut r, seed)?,
        "example13" => example13(&mut r, seed)?,
        "example14" => example14(&mut r, seed)?,
        "example15" => example15(&mut r, seed)?,
        "prop6-quadrant" => prop6(&mut r, seed)?,
        "prop8-hartogsfigure" => prop8(&mut r, seed)?,
        "ratio-tests" => ratios(&mut r)?,
        _ => return Err(Error::InvalidParameter(format!("unknown reproduction target `{name}`"))),
    }
    r.finish();
    Ok(r)
}

#[derive(Serialize)]
struct Lemma5Row {
    delta: f64,
    s: f64,
    value_512: f64,
    value_1024: f64,
    change: f64,
}

fn lemma5(r: &mut Report) -> Result<()> {
    let (c_, eps) = (0.5, 0.5);
    let mut rows = Vec::new();
    for delta in [0.01, 0.005] {
        for s in [lemma5_s_min(delta, c_), delta] {
            let a = lemma5_integral(delta, c_, s, eps, 512)?.value;
            let b = lemma5_integral(delta, c_, s, eps, 1024)?.value;
            rows.push(Lemma5Row { delta, s, value_512: a, value_1024: b, change: (a - b).abs() });
        }
    }
    let below = rows.iter().all(|x| x.value_512 < 1.0 - 1e-4);
    let stable = rows.iter().all(|x| x.change < 1e-5);
    let spec = catalog_domain("lemma5-e", &params(&[("c", c_), ("eps", eps)]))?;
    let t = ray_exit_time(&spec, &[c(-0.01, 0.0), c(0.0, 0.0)], &[c(0.01, 0.0), c(0.0, 0.0)], 0.0, &RayConfig::default())?;
    let exit_ok = t.is_some_and(|t| (t - 1.0).abs() < 1e-6);
    r.domain(&spec);
    r.result("integrals", &rows)?;
    r.result("exit_time_x0", t)?;
    r.check(Check::new("integral below one", "value < 1 - 1e-4 at grid 512", &rows, below));
    r.check(Check::new("grid doubling", "|value(512) - value(1024)| < 1e-5", rows.iter().map(|x| x.change).collect::<Vec<_>>(), stable));
    r.check(Check::new("exit time at X0", "1 +- 1e-6", t, exit_ok));
    Ok(())
}

pub const PSEUDOCONVEX: [&str; 4] = ["ball", "polydisc", "convex-tube", "ellipsoid"];
pub const NOT_PSEUDOCONVEX: [&str; 3] = ["hartogs-figure", "model-hor", "lemma5-e"];

/// Certificate that survives the recheck at the certificate tolerance.
pub fn survives(v: &Verdict) -> bool {
    v.certificate().is_some_and(|c| c.recheck_margin >= CERT_TOL && c.recheck_margin >= 0.5 * c.margin)
}

fn theorem1(r: &mut Report, seed: u64) -> Result<()> {
    let cfg = PshConfig::default();
    let icfg = PshConfig::with_circles(120);
    for name in PSEUDOCONVEX.iter().chain(&NOT_PSEUDOCONVEX) {
        let spec = catalog(name)?;
        let rep: CoherenceReport = pseudoconvexity_coherence(&spec, &cfg, &icfg, 50, seed)?;
        let expect_bad = NOT_PSEUDOCONVEX.contains(name);
        let ok = if expect_bad {
            survives(&rep.neglog_s)
                && survives(&rep.hartogs)
                && rep.indicatrix.first.as_ref().is_some_and(|(_, c)| c.recheck_margin >= CERT_TOL)
        } else {
            !rep.neglog_s.is_falsified() && !rep.hartogs.is_falsified() && rep.indicatrix.falsified == 0
        };
        let summary = (rep.neglog_s.is_falsified(), rep.hartogs.is_falsified(), rep.indicatrix.falsified);
        let expected = if expect_bad { "all three tests falsify with surviving certificates" } else { "all three tests pass" };
        r.domain(&spec);
        r.check(Check::new(name, expected, summary, ok && rep.coherent));
        r.result(name, &rep)?;
    }
    Ok(())
}

pub const EXAMPLE10_WINDOW: Window = Window { x0: -3.2, x1: 3.2, y0: -2.2, y1: 2.2 };

fn example10(r: &mut Report, seed: u64) -> Result<()> {
    let spec = catalog("example10")?;
    let w = [c(3f64.sqrt(), 0.0)];
    let member = |x: f64, y: f64| hartogs_contains(&spec, &[c(x, y)], &w).unwrap_or(false);
    let coarse = connected_components(member, EXAMPLE10_WINDOW, 0.01)?;
    let fine = connected_components(member, EXAMPLE10_WINDOW, 0.005)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<C64> = (0..10_000).map(|_| c(rng.random_range(-3.5..3.5), rng.random_range(-2.5..2.5))).collect();
    let mismatches = pts
        .par_iter()
        .filter(|z| hartogs_contains(&spec, &[**z], &[c(0.0, 0.0)]).ok() != spec.contains(&[**z]).ok())
        .count();
    r.domain(&spec);
    r.result("components_h0.01", &coarse)?;
    r.result("components_h0.005", &fine)?;
    r.result("zero_fibre_mismatches", mismatches)?;
    r.check(Check::new("components at h = 0.01", "2", coarse.count, coarse.count == 2));
    r.check(Check::new("components at h = 0.005", "2", fine.count, fine.count == 2));
    r.check(Check::new("zero fibre", "0 mismatches on 10^4 samples", mismatches, mismatches == 0));
    Ok(())
}

/// Seeded points on the piece `|z_3|^2 = |z_1|^2 + |z_2|^2` of the cone's boundary.
pub fn example13_boundary_points(count: usize, seed: u64) -> Result<Vec<Vec<C64>>> {
    let spec = catalog("example13")?;
    let mut out = Vec::with_capacity(count);
    let mut k = 0u64;
    while out.len() < count {
        if k > 50 {
            return Err(Error::EmptyRegion("too few boundary samples on the inner cone".into()));
        }
        for b in sample_boundary(&spec, count, seed.wrapping_add(k))? {
            if b.active != 0 || out.len() == count {
                continue;
            }
            // remove the projection residue so the sample lies exactly on the cone
            let mut p = b.point;
            let rad = (p[0].norm_sqr() + p[1].norm_sqr()).sqrt();
            if p[2].norm() == 0.0 {
                continue;
            }
            p[2] = p[2] / p[2].norm() * rad;
            out.push(p);
        }
        k += 1;
    }
    Ok(out)
}

/// Largest `|rho(z_1 - l conj z_2, z_2 + l conj z_1, z_3) + |l|^2 (|z_1|^2 + |z_2|^2)|`.
pub fn example13_identity_error(points: &[Vec<C64>], seed: u64) -> Result<f64> {
    let spec = catalog("example13")?;
    let rho = spec.primitives()[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for z in points {
        let l = C64::from_polar(rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>());
        let moved = [z[0] - l * z[1].conj(), z[1] + l * z[0].conj(), z[2]];
        let rhs = -l.norm_sqr() * (z[0].norm_sqr() + z[1].norm_sqr());
        worst = worst.max((rho.value(&moved) - rhs).abs());
    }
    Ok(worst)
}

pub fn sweep_config() -> PshConfig {
    PshConfig::with_circles(120)
}

fn example13(r: &mut Report, seed: u64) -> Result<()> {
    let spec = catalog("example13")?;
    let pts = example13_boundary_points(1000, seed)?;
    let err = example13_identity_error(&pts, seed)?;
    let origin = exceptional_sweep(&spec, &[c(0.0, 0.0); 3], 200, &sweep_config(), seed)?;
    let z0 = exceptional_sweep(&spec, &[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 200, &sweep_config(), seed)?;
    r.domain(&spec);
    r.result("identity_max_error", err)?;
    r.check(Check::new("boundary identity", "max error <= 1e-12 on 1000 samples", err, err <= 1e-12));
    r.check(Check::new("sweep at 0", "violation fraction 0", origin.violation_fraction, origin.falsified == 0));
    r.check(Check::new("sweep at z0 = (1,0,1)", "violation fraction > 0", z0.violation_fraction, z0.falsified > 0));
    r.result("sweep_origin", &origin)?;
    r.result("sweep_z0", &z0)?;
    Ok(())
}

/// Whether a plane certificate's circle is centred closer to the puncture
/// at the plane origin than to any other boundary.
pub fn puncture_certificate(spec: &DomainSpec, frame: &PlaneFrame, center: &[C64]) -> Result<bool> {
    let slice = slice_domain(spec, frame)?;
    let d = signed_boundary_distance(&slice.spec, center, &DistanceConfig::default())?;
    Ok(d.method == DistanceMethod::Affine && (d.value - cvec::norm(center)).abs() <= 1e-9 * (1.0 + d.value))
}

fn example14(r: &mut Report, seed: u64) -> Result<()> {
    let spec = catalog("example14")?;
    let outside = exceptional_sweep(&spec, &[c(2.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)], 50, &sweep_config(), seed)?;
    let inside = exceptional_sweep(&spec, &[c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)], 50, &sweep_config(), seed)?;
    let first = inside.per_plane.iter().find(|p| p.falsified);
    let puncture = match first {
        Some(p) => match &p.certificate {
            Some(cert) => puncture_certificate(&spec, &p.frame, &cert.center)?,
            None => false,
        },
        None => false,
    };
    r.domain(&spec);
    r.check(Check::new("sweep at a on the line outside the ball", "violation fraction 0", outside.violation_fraction, outside.falsified == 0));
    r.check(Check::new("sweep at a on the line inside the ball", "violation fraction > 0", inside.violation_fraction, inside.falsified > 0));
    r.check(Check::new("puncture certificate", "first witness circle is centred nearest the removed point", puncture, puncture));
    r.result("sweep_outside", &outside)?;
    r.result("sweep_inside", &inside)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Example15Summary {
    pub samples: usize,
    pub double_members: usize,
    pub union_mismatches: usize,
    pub planes: usize,
    pub planes_with_member: usize,
    pub boundary_samples: usize,
    pub smooth_samples: usize,
    pub hyperplanes_found: usize,
}

pub fn example15_summary(samples: usize, planes: usize, boundary: usize, seed: u64) -> Result<Example15Summary> {
    let union = catalog("example15")?;
    let pieces: Vec<DomainSpec> = (1..=3)
        .map(|j| catalog_domain("example15-piece", &params(&[("j", j as f64)])))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<C64>> = (0..samples).map(|_| cvec::random_in_ball(&mut rng, 3, union.bounding_radius)).collect();
    let (double_members, union_mismatches) = pts
        .par_iter()
        .map(|z| {
            let k = pieces.iter().filter(|p| p.member(z)).count();
            ((k >= 2) as usize, ((k >= 1) != union.member(z)) as usize)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let frames: Vec<(PlaneFrame, u64)> = (0..planes)
        .map(|_| {
            let base = cvec::random_in_ball(&mut rng, 3, 2.0);
            (PlaneFrame::random_through(&base, &mut rng), rng.random())
        })
        .collect();
    let planes_with_member = frames
        .par_iter()
        .filter(|(f, s)| {
            member_on_plane(&union, f, 4096, *s).is_some_and(|p| {
                let off = cvec::sub(&p, &f.base);
                let inplane = cvec::axpy(&cvec::axpy(&off, -cvec::herm(&off, &f.v1), &f.v1), -cvec::herm(&off, &f.v2), &f.v2);
                union.member(&p) && cvec::norm(&inplane) <= 1e-12 * (1.0 + cvec::norm(&p))
            })
        })
        .count();
    let piece = &pieces[2];
    let smooth: Vec<Vec<C64>> = sample_boundary(piece, boundary, rng.random())?
        .into_iter()
        .filter(|b| b.has_frame() && !b.non_smooth)
        .map(|b| b.point)
        .collect();
    let found = smooth
        .par_iter()
        .enumerate()
        .filter(|(k, a)| {
            matches!(hyperplane_search(piece, a, &HyperplaneBudget::default(), seed.wrapping_add(*k as u64)), Ok(Some(_)))
        })
        .count();
    Ok(Example15Summary {
        samples,
        double_members,
        union_mismatches,
        planes,
        planes_with_member,
        boundary_samples: boundary,
        smooth_samples: smooth.len(),
        hyperplanes_found: found,
    })
}

fn example15(r: &mut Report, seed: u64) -> Result<()> {
    let s = example15_summary(100_000, 100, 100, seed)?;
    r.domain(&catalog("example15")?);
    r.check(Check::new("pieces are disjoint", "0 double memberships", s.double_members, s.double_members == 0));
    r.check(Check::new("union membership", "0 mismatches", s.union_mismatches, s.union_mismatches == 0));
    r.check(Check::new("planes meet the union", "every plane has a verified member", s.planes_with_member, s.planes_with_member == s.planes));
    let frac = s.hyperplanes_found as f64 / s.smooth_samples.max(1) as f64;
    r.check(Check::new("supporting hyperplanes of one piece", ">= 95% of smooth samples", frac, s.smooth_samples > 0 && frac >= 0.95));
    r.result("summary", &s)?;
    Ok(())
}

pub fn segment_budget() -> SegmentBudget {
    SegmentBudget { segments: 100_000, band: (1e-3, 2.0) }
}

fn prop6(r: &mut Report, seed: u64) -> Result<()> {
    let q = catalog("quadrant")?;
    let b = catalog("ball")?;
    let exp_neg = CompositionDescriptor::new(OuterFunction::ExpNeg, 10.0)?;
    let id = CompositionDescriptor::new(OuterFunction::Identity, 10.0)?;
    let neglog = CompositionDescriptor::new(OuterFunction::NegLog, 10.0)?;
    let v1 = composed_convexity_check(&q, &exp_neg, &segment_budget(), seed)?;
    let v2 = composed_midpoint_falsify(&q, &id, &SegmentBudget { segments: 10_000, band: (1e-3, 2.0) }, seed)?;
    let v3 = composed_convexity_check(&b, &neglog, &SegmentBudget { segments: 10_000, band: (1e-3, 1.0) }, seed)?;
    r.domain(&q).domain(&b);
    r.check(Check::new("quadrant, exp(-s)", "passes 1e5 segments", v1.is_falsified(), !v1.is_falsified()));
    r.check(Check::new("quadrant, s", "falsified", v2.is_falsified(), v2.is_falsified()));
    r.check(Check::new("ball, -log s", "passes", v3.is_falsified(), !v3.is_falsified()));
    r.result("quadrant_exp_neg", &v1)?;
    r.result("quadrant_identity", &v2)?;
    r.result("ball_neg_log", &v3)?;
    Ok(())
}

fn prop8(r: &mut Report, seed: u64) -> Result<()> {
    let h = catalog("hartogs-figure")?;
    let b = catalog("ball")?;
    let id = CompositionDescriptor::new(OuterFunction::Identity, 20.0)?;
    let v1 = composed_psh_check(&h, &id, &PshConfig::default(), seed)?;
    let v2 = composed_psh_check(&b, &id, &PshConfig::default(), seed)?;
    r.domain(&h).domain(&b);
    r.check(Check::new("Hartogs figure, -log s", "falsified", v1.is_falsified(), survives(&v1)));
    r.check(Check::new("ball, -log s", "passes", v2.is_falsified(), !v2.is_falsified()));
    r.result("hartogs_figure", &v1)?;
    r.result("ball", &v2)?;
    Ok(())
}

fn ratios(r: &mut Report) -> Result<()> {
    let h = catalog("half-space")?;
    let a = boundary_point_data(&h, &[c(0.0, 0.3), c(0.2, -0.1)])?;
    let modes = [RatioMode::RealTangent, RatioMode::ComplexTangent, RatioMode::JSymmetrized];
    let hs: Vec<f64> = modes.iter().map(|m| boundary_ratio(&h, &a, *m, &DEFAULT_RADII).map(|e| e.estimate)).collect::<Result<_>>()?;
    let b = catalog("ball")?;
    let p = boundary_point_data(&b, &[c(0.6, 0.0), c(0.0, 0.8)])?;
    let sphere = boundary_ratio(&b, &p, RatioMode::RealTangent, &DEFAULT_RADII)?;
    let rmin = *DEFAULT_RADII.last().unwrap_or(&0.01);
    let oracle = (1.0 - (1.0 + rmin * rmin).sqrt()) / (rmin * rmin);
    let m = catalog_domain("model-hor", &params(&[("c", 0.5), ("n", 2.0)]))?;
    let z = boundary_point_data(&m, &[c(0.0, 0.0), c(0.0, 0.0)])?;
    let model = boundary_ratio(&m, &z, RatioMode::ComplexTangent, &DEFAULT_RADII)?;
    r.domain(&h).domain(&b).domain(&m);
    r.check(Check::new("half-space, all modes", "0 +- 1e-6", &hs, hs.iter().all(|v| v.abs() <= 1e-6)));
    r.check(Check::new("sphere, real tangent", "-0.5 +- 1e-2", sphere.estimate, (sphere.estimate + 0.5).abs() <= 1e-2));
    r.check(Check::new("sphere, closed form", "within 1e-3 of the circle formula", oracle, (sphere.estimate - oracle).abs() <= 1e-3));
    r.check(Check::new("model, complex tangent", "<= -0.1", model.estimate, model.estimate <= -0.1));
    r.result("sphere", &sphere)?;
    r.result("model", &model)?;
    Ok(())
}
