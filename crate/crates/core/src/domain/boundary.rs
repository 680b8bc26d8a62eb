//! Boundary points with normal and tangent frames.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::distance::{changes_near, grad, nearest_on};
use super::{DomainSpec, BOUNDARY_TOL};
use crate::cvec::{self, C64};
use crate::error::{Error, Result};
use crate::roots;

/// Two primitives closer than this (relative) mark a junction.
pub const JUNCTION_TOL: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryPointData {
    pub point: Vec<C64>,
    /// Index of the locally active primitive in `DomainSpec::primitives()` order.
    pub active: usize,
    /// Unit outward normal (real direction, stored as a complex vector).
    pub normal: Option<Vec<C64>>,
    /// Orthonormal basis (real inner product) of the real tangent hyperplane.
    pub real_tangent: Vec<Vec<C64>>,
    /// Hermitian-orthonormal basis of the complex tangent hyperplane.
    pub complex_tangent: Vec<Vec<C64>>,
    pub non_smooth: bool,
}

impl BoundaryPointData {
    pub fn has_frame(&self) -> bool {
        self.normal.is_some() && !self.non_smooth
    }
}

fn real_gram_schmidt(vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= d * qi;
                }
            }
        }
        let m = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if m > 1e-10 {
            out.push(w.iter().map(|x| x / m).collect());
        }
    }
    out
}

/// Frames at a boundary point `a` (|s_D(a)| within the boundary tolerance).
pub fn boundary_point_data(spec: &DomainSpec, a: &[C64]) -> Result<BoundaryPointData> {
    spec.check_dim(a)?;
    let prims = spec.primitives();
    let scale = 1.0 + cvec::norm(a);
    let mut gaps: Vec<(f64, usize, Vec<f64>)> = prims
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let g = grad(f, a);
            let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let gap = if gn > 0.0 { f.value(a).abs() / gn } else { f64::INFINITY };
            (gap, i, g)
        })
        .collect();
    gaps.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let near_affine = spec.affine_sets().iter().any(|s| s.distance(a) < JUNCTION_TOL * scale);
    let Some((gap, active, g)) = gaps.first().cloned() else {
        return Err(Error::NoBoundary);
    };
    if gap > BOUNDARY_TOL * scale && !near_affine {
        return Err(Error::InvalidParameter("point is not on the boundary".into()));
    }
    let n = spec.dimension;
    let mut non_smooth = near_affine
        || !prims[active].is_smooth_at(a, 1e-9)
        || gaps.get(1).is_some_and(|s| s.0 < JUNCTION_TOL * scale);
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let normal = if gn > 1e-14 && gap <= BOUNDARY_TOL * scale {
        let mut nrm: Vec<C64> = cvec::from_real(&g.iter().map(|x| x / gn).collect::<Vec<_>>());
        let eta = 1e-7 * scale;
        if spec.member(&cvec::axpy(a, C64::new(eta, 0.0), &nrm)) {
            nrm = cvec::scale(&nrm, C64::new(-1.0, 0.0));
        }
        Some(nrm)
    } else {
        non_smooth = true;
        None
    };
    let (real_tangent, complex_tangent) = match &normal {
        Some(nrm) => {
            let mut vs = vec![cvec::to_real(nrm)];
            for k in 0..2 * n {
                let mut e = vec![0.0; 2 * n];
                e[k] = 1.0;
                vs.push(e);
            }
            let q = real_gram_schmidt(&vs);
            let rt = q.iter().skip(1).map(|v| cvec::from_real(v)).collect();
            (rt, cvec::complement_basis(&[nrm.clone()], n))
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(BoundaryPointData { point: a.to_vec(), active, normal, real_tangent, complex_tangent, non_smooth })
}

/// Uniform point of the domain inside the window, by rejection.
pub fn sample_interior(spec: &DomainSpec, rng: &mut ChaCha8Rng, tries: usize) -> Option<Vec<C64>> {
    for _ in 0..tries {
        let z = cvec::random_in_ball(rng, spec.dimension, spec.bounding_radius);
        if spec.member(&z) {
            return Some(z);
        }
    }
    None
}

/// Deterministic boundary samples: first exits of random real rays from
/// random interior points, projected onto the active zero set.
pub fn sample_boundary(spec: &DomainSpec, count: usize, seed: u64) -> Result<Vec<BoundaryPointData>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prims = spec.primitives();
    let r = spec.bounding_radius;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 200 * count + 1000 {
            break;
        }
        let Some(x) = sample_interior(spec, &mut rng, 10_000) else {
            return Err(Error::EmptyRegion("no member of the domain found in the bounding ball".into()));
        };
        let u = cvec::random_unit(&mut rng, spec.dimension);
        let level = |t: f64| spec.level(&cvec::axpy(&x, C64::new(t, 0.0), &u));
        let Some(t) = roots::first_exit(level, 1e-3 * r, 2.0 * r, r / 32.0, 1e-13) else {
            continue;
        };
        let b = cvec::axpy(&x, C64::new(t, 0.0), &u);
        if cvec::norm(&b) > r {
            continue;
        }
        // snap to the nearest zero set
        let best = prims
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let g = grad(f, &b);
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                (if gn > 0.0 { f.value(&b).abs() / gn } else { f64::INFINITY }, i)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((_, i)) = best else { continue };
        let Some(mut a) = nearest_on(&[prims[i]], &b, 80) else { continue };
        if cvec::norm(&a) > r {
            continue;
        }
        let Ok(mut data) = boundary_point_data(spec, &a) else { continue };
        if spec.member(&a) {
            // the open set must not contain its boundary samples
            let Some(nrm) = data.normal.clone() else { continue };
            let scale = 1.0 + cvec::norm(&a);
            let Some(out) = (0..20)
                .map(|k| cvec::axpy(&a, C64::new(1e-15 * scale * 2f64.powi(k), 0.0), &nrm))
                .find(|p| !spec.member(p))
            else {
                continue;
            };
            a = out;
            data.point = a.clone();
        }
        let probe: Vec<Vec<C64>> = match &data.normal {
            Some(nrm) => vec![nrm.clone()],
            None => vec![u.clone()],
        };
        if !changes_near(spec, &a, &probe) {
            continue;
        }
        out.push(data);
    }
    if out.is_empty() {
        return Err(Error::NoBoundary);
    }
    Ok(out)
}
