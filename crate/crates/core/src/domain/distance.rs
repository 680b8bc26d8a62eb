//! Signed Euclidean distance to the boundary, positive inside.
//!
//! The boundary of a region tree lies in the union of the primitive zero
//! sets and the removed affine sets. Candidates are nearest points on
//! single zero sets, on pairwise intersections of zero sets (junctions),
//! on removed affine sets, and first hits along a fixed fan of rays. A
//! candidate counts only if the domain membership actually changes in a
//! small neighbourhood of it. When the best valid candidate matches the
//! lower bound given by the nearest single zero set, the value is
//! flagged exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::quadric::Quadric;
use super::{DomainSpec, Primitive};
use crate::cvec::{self, C64};
use crate::error::{Error, Result};
use crate::roots;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMethod {
    Projection,
    Junction,
    Affine,
    Ray,
    /// Nothing found inside the window.
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct BoundaryDistance {
    /// Signed distance, `+inf`/`-inf` when no boundary was found.
    pub value: f64,
    pub nearest: Option<Vec<C64>>,
    pub method: DistanceMethod,
    /// Best candidate attains the nearest-zero-set lower bound.
    pub exact: bool,
}

impl BoundaryDistance {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceConfig {
    /// Number of fallback rays.
    pub rays: usize,
    pub ray_seed: u64,
    pub max_iter: usize,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig { rays: 8, ray_seed: 0x5eed, max_iter: 80 }
    }
}

struct Candidate {
    point: Vec<C64>,
    dist: f64,
    method: DistanceMethod,
}

pub(crate) fn grad(p: &Primitive, z: &[C64]) -> Vec<f64> {
    crate::expr::real_gradient(|q| p.value(q), z, 1e-6)
}

/// Nearest point to `z` on `{F_i = 0 for all i}` (one or two constraints).
/// A single quadratic constraint is solved globally; otherwise `z` is
/// repeatedly projected onto the linearized constraint set, which finds a
/// nearby stationary point.
pub(crate) fn nearest_on(prims: &[&Primitive], z: &[C64], max_iter: usize) -> Option<Vec<C64>> {
    if let [f] = prims {
        if let Some(q) = Quadric::of(f) {
            let x = q.nearest(&cvec::to_real(z))?;
            let start = cvec::from_real(&x);
            if q.residual(&x) <= 1e-12 * (1.0 + cvec::norm(&start)) {
                return Some(start);
            }
            return nearest_from(prims, z, &start, max_iter)
                .filter(|p| cvec::dist(z, p) <= cvec::dist(z, &start) + 1e-9 * (1.0 + cvec::norm(z)))
                .or_else(|| on_zero_set(f, &start).then_some(start));
        }
    }
    if let Some(p) = nearest_from(prims, z, z, max_iter) {
        return Some(p);
    }
    // symmetric starts can make the constraint gradients degenerate
    let scale = 1e-2 * (1.0 + cvec::norm(z));
    for u in ray_fan(z.len(), 2, 0xfeed) {
        let start = cvec::axpy(z, C64::new(scale, 0.0), &u);
        if let Some(p) = nearest_from(prims, z, &start, max_iter) {
            return Some(p);
        }
    }
    None
}

fn nearest_from(prims: &[&Primitive], z: &[C64], start: &[C64], max_iter: usize) -> Option<Vec<C64>> {
    let k = prims.len();
    let x = cvec::to_real(z);
    let m = x.len();
    let mut p = cvec::to_real(start);
    let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..max_iter {
        let pc = cvec::from_real(&p);
        let vals: Vec<f64> = prims.iter().map(|f| f.value(&pc)).collect();
        let jac: Vec<Vec<f64>> = prims.iter().map(|f| grad(f, &pc)).collect();
        let d: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
        let rhs: Vec<f64> = (0..k)
            .map(|i| vals[i] + jac[i].iter().zip(&d).map(|(g, v)| g * v).sum::<f64>())
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let mu: Vec<f64> = if k == 1 {
            let g2 = dot(&jac[0], &jac[0]);
            if g2 < 1e-24 {
                return None;
            }
            vec![rhs[0] / g2]
        } else {
            let (a, b, c) = (dot(&jac[0], &jac[0]), dot(&jac[0], &jac[1]), dot(&jac[1], &jac[1]));
            let det = a * c - b * b;
            if det <= 1e-12 * a * c || a < 1e-24 || c < 1e-24 {
                return None;
            }
            vec![(c * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - b * rhs[0]) / det]
        };
        let mut q = x.clone();
        for i in 0..k {
            for j in 0..m {
                q[j] -= mu[i] * jac[i][j];
            }
        }
        let step: f64 = q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        p = q;
        if !p.iter().all(|v| v.is_finite()) {
            return None;
        }
        if step < 1e-14 * scale {
            break;
        }
    }
    let pc = cvec::from_real(&p);
    prims.iter().all(|f| on_zero_set(f, &pc)).then_some(pc)
}

fn on_zero_set(f: &Primitive, p: &[C64]) -> bool {
    let g = grad(f, p);
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    gn > 0.0 && f.value(p).abs() / gn <= 1e-10 * (1.0 + cvec::norm(p))
}

fn real_unit(v: &[f64]) -> Option<Vec<C64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(cvec::from_real(&v.iter().map(|x| x / n).collect::<Vec<_>>()))
}

/// Membership changes within `eta` of `p` along one of `dirs`.
pub(crate) fn changes_near(spec: &DomainSpec, p: &[C64], dirs: &[Vec<C64>]) -> bool {
    let eta = 1e-7 * (1.0 + cvec::norm(p));
    let (mut inside, mut outside) = (false, false);
    for d in dirs {
        for s in [1.0, -1.0] {
            if spec.member(&cvec::axpy(p, C64::new(s * eta, 0.0), d)) {
                inside = true;
            } else {
                outside = true;
            }
            if inside && outside {
                return true;
            }
        }
    }
    false
}

fn coordinate_dirs(n: usize) -> Vec<Vec<C64>> {
    let mut v = Vec::with_capacity(2 * n);
    for j in 0..n {
        v.push(cvec::unit(n, j));
        let mut w = vec![C64::new(0.0, 0.0); n];
        w[j] = C64::new(0.0, 1.0);
        v.push(w);
    }
    v
}

/// Fixed fan of unit directions used for fallback ray hits.
pub fn ray_fan(n: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9));
    (0..count).map(|_| cvec::random_unit(&mut rng, n)).collect()
}

/// Signed distance to the boundary of `spec`, positive inside.
pub fn signed_boundary_distance(
    spec: &DomainSpec,
    z: &[C64],
    cfg: &DistanceConfig,
) -> Result<BoundaryDistance> {
    spec.check_dim(z)?;
    if cvec::norm(z) > spec.bounding_radius * (1.0 + 1e-12) {
        return Err(Error::OutsideWindow { radius: spec.bounding_radius });
    }
    let inside = spec.member(z);
    let sign = if inside { 1.0 } else { -1.0 };
    let prims = spec.primitives();
    let n = spec.dimension;

    let mut lower = f64::INFINITY;
    let mut lower_known = true;
    let mut best: Option<Candidate> = None;
    let consider = |c: Candidate, best: &mut Option<Candidate>| {
        if best.as_ref().is_none_or(|b| c.dist < b.dist) {
            *best = Some(c);
        }
    };

    let mut singles: Vec<Option<(Vec<C64>, Vec<f64>)>> = Vec::with_capacity(prims.len());
    for f in &prims {
        match nearest_on(&[*f], z, cfg.max_iter) {
            Some(p) => {
                let d = cvec::dist(z, &p);
                lower = lower.min(d);
                let g = grad(f, &p);
                if let Some(nrm) = real_unit(&g) {
                    if changes_near(spec, &p, &[nrm]) {
                        consider(Candidate { point: p.clone(), dist: d, method: DistanceMethod::Projection }, &mut best);
                    }
                }
                singles.push(Some((p, g)));
            }
            None => {
                lower_known = false;
                singles.push(None);
            }
        }
    }

    let coords = coordinate_dirs(n);
    for a in spec.affine_sets() {
        let p = a.project(z);
        let d = cvec::dist(z, &p);
        lower = lower.min(d);
        if spec.member(&p) {
            continue;
        }
        let mut dirs = coords.clone();
        if d > 0.0 {
            dirs.push(cvec::normalized(&cvec::sub(z, &p)));
        }
        let eta = 1e-7 * (1.0 + cvec::norm(&p));
        let touches = dirs.iter().any(|u| {
            spec.member(&cvec::axpy(&p, C64::new(eta, 0.0), u))
                || spec.member(&cvec::axpy(&p, C64::new(-eta, 0.0), u))
        });
        if touches {
            consider(Candidate { point: p, dist: d, method: DistanceMethod::Affine }, &mut best);
        }
    }

    let tight = |best: &Option<Candidate>, lower: f64| {
        lower_known
            && best.as_ref().is_some_and(|b| b.dist <= lower + 1e-12 * (1.0 + lower))
    };

    if !tight(&best, lower) {
        for i in 0..prims.len() {
            for j in (i + 1)..prims.len() {
                let Some(p) = nearest_on(&[prims[i], prims[j]], z, cfg.max_iter) else {
                    continue;
                };
                let d = cvec::dist(z, &p);
                if best.as_ref().is_some_and(|b| d >= b.dist) {
                    continue;
                }
                let gi = grad(prims[i], &p);
                let gj = grad(prims[j], &p);
                let sum: Vec<f64> = gi.iter().zip(&gj).map(|(a, b)| a / norm_r(&gi) + b / norm_r(&gj)).collect();
                let diff: Vec<f64> = gi.iter().zip(&gj).map(|(a, b)| a / norm_r(&gi) - b / norm_r(&gj)).collect();
                let dirs: Vec<Vec<C64>> =
                    [gi, gj, sum, diff].iter().filter_map(|v| real_unit(v)).collect();
                if changes_near(spec, &p, &dirs) {
                    consider(Candidate { point: p, dist: d, method: DistanceMethod::Junction }, &mut best);
                }
            }
        }
        let t_max = 2.0 * spec.bounding_radius;
        for u in ray_fan(n, cfg.rays, cfg.ray_seed) {
            let level = |t: f64| sign * spec.level(&cvec::axpy(z, C64::new(t, 0.0), &u));
            let t0 = best.as_ref().map_or(spec.bounding_radius * 1e-3, |b| b.dist * 0.05).max(1e-9);
            if let Some(t) = roots::first_exit(level, t0, t_max, t_max / 64.0, 1e-12) {
                if best.as_ref().is_none_or(|b| t < b.dist) {
                    let p = cvec::axpy(z, C64::new(t, 0.0), &u);
                    consider(Candidate { point: p, dist: t, method: DistanceMethod::Ray }, &mut best);
                }
            }
        }
    }

    let exact = tight(&best, lower);
    Ok(match best {
        Some(b) => BoundaryDistance { value: sign * b.dist, nearest: Some(b.point), method: b.method, exact },
        None => BoundaryDistance {
            value: sign * f64::INFINITY,
            nearest: None,
            method: DistanceMethod::Unbounded,
            exact: false,
        },
    })
}

fn norm_r(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300)
}
