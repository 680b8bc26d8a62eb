//! Hartogs-like domains, two-dimensional slices and plane sweeps.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{self, C64};
use crate::domain::{signed_boundary_distance, AffineMap, DistanceConfig, DomainSpec};
use crate::error::{Error, Result};
use crate::psh::{psh_falsify, PshConfig, PshTarget};
use crate::ray::{minkowski, RayConfig};
use crate::verdict::ViolationCertificate;

pub const HARTOGS_TOL: f64 = 1e-7;

/// Whether `(z, w)` lies in `{(z, w) : z in D, 1/d_D(z, w) < 1}`.
pub fn hartogs_contains(spec: &DomainSpec, z: &[C64], w: &[C64]) -> Result<bool> {
    spec.check_dim(z)?;
    spec.check_dim(w)?;
    if !spec.member(z) {
        return Ok(false);
    }
    let wn = cvec::norm(w);
    if wn == 0.0 {
        return Ok(true);
    }
    if spec.dimension == 1 {
        // a non-member on the critical circle already bounds s_D(z) from above
        let rho = wn / (1.0 - HARTOGS_TOL);
        let hit = (0..32).any(|k| {
            let t = std::f64::consts::TAU * k as f64 / 32.0;
            !spec.member(&[z[0] + C64::from_polar(rho, t)])
        });
        if hit {
            return Ok(false);
        }
    }
    let s = signed_boundary_distance(spec, z, &DistanceConfig::default())?;
    if spec.dimension == 1 && s.is_finite() {
        // in one variable the largest disk around z has radius s_D(z)
        return Ok(wn / s.value < 1.0 - HARTOGS_TOL);
    }
    if s.value * (1.0 - HARTOGS_TOL) > wn {
        return Ok(true);
    }
    Ok(minkowski(spec, z, w, &RayConfig::default())? < 1.0 - HARTOGS_TOL)
}

/// A complex 2-plane `a + zeta_1 V_1 + zeta_2 V_2` with Hermitian-orthonormal spanning vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlaneFrame {
    pub base: Vec<C64>,
    pub v1: Vec<C64>,
    pub v2: Vec<C64>,
}

impl PlaneFrame {
    pub fn new(base: Vec<C64>, v1: Vec<C64>, v2: Vec<C64>) -> Result<Self> {
        let n = base.len();
        if v1.len() != n || v2.len() != n {
            return Err(Error::InvalidFrame("vectors must have the dimension of the base point".into()));
        }
        if n < 2 {
            return Err(Error::InvalidFrame("a 2-plane needs n >= 2".into()));
        }
        if (cvec::norm(&v1) - 1.0).abs() > 1e-10 || (cvec::norm(&v2) - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidFrame("spanning vectors must have unit length".into()));
        }
        if cvec::herm(&v1, &v2).norm() > 1e-10 {
            return Err(Error::InvalidFrame("spanning vectors must be orthogonal".into()));
        }
        Ok(PlaneFrame { base, v1, v2 })
    }

    /// Gram–Schmidt on the given spanning vectors.
    pub fn orthonormalized(base: Vec<C64>, u1: &[C64], u2: &[C64]) -> Result<Self> {
        let q = cvec::orthonormalize(&[u1.to_vec(), u2.to_vec()]);
        if q.len() < 2 {
            return Err(Error::InvalidFrame("spanning vectors are dependent".into()));
        }
        Self::new(base, q[0].clone(), q[1].clone())
    }

    /// Unitarily invariant random plane through `base`.
    pub fn random_through<R: Rng + ?Sized>(base: &[C64], rng: &mut R) -> Self {
        let n = base.len();
        loop {
            let (g1, g2) = (cvec::gaussian(rng, n), cvec::gaussian(rng, n));
            if let Ok(f) = Self::orthonormalized(base.to_vec(), &g1, &g2) {
                return f;
            }
        }
    }

    pub fn lift(&self, zeta: &[C64]) -> Vec<C64> {
        let p = cvec::axpy(&self.base, zeta[0], &self.v1);
        cvec::axpy(&p, zeta[1], &self.v2)
    }

    pub fn map(&self) -> AffineMap {
        AffineMap { base: self.base.clone(), cols: vec![self.v1.clone(), self.v2.clone()] }
    }
}

#[derive(Clone, Debug)]
pub struct SliceDomain {
    pub frame: PlaneFrame,
    /// The induced domain in the plane coordinates.
    pub spec: DomainSpec,
}

impl SliceDomain {
    pub fn lift(&self, zeta: &[C64]) -> Vec<C64> {
        self.frame.lift(zeta)
    }
}

/// Pulls the domain back to plane coordinates.
pub fn slice_domain(spec: &DomainSpec, frame: &PlaneFrame) -> Result<SliceDomain> {
    let frame = PlaneFrame::new(frame.base.clone(), frame.v1.clone(), frame.v2.clone())?;
    spec.check_dim(&frame.base)?;
    let region = spec.region.pullback(&Arc::new(frame.map()));
    let radius = spec.bounding_radius + cvec::norm(&frame.base);
    let slice = DomainSpec::new(2, region, radius)?.named(&format!("{} (slice)", spec.name));
    Ok(SliceDomain { frame, spec: slice })
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaneVerdict {
    pub index: usize,
    pub frame: PlaneFrame,
    pub falsified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Certificate in plane coordinates (the plane's base point is the origin).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ViolationCertificate>,
    /// Set when the slice could not be examined (for example, it misses the domain).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExceptionalSweepReport {
    pub point: Vec<C64>,
    pub planes: usize,
    pub circles_per_plane: usize,
    pub falsified: usize,
    pub violation_fraction: f64,
    /// Indices of planes with a certificate.
    pub falsifying_frames: Vec<usize>,
    pub per_plane: Vec<PlaneVerdict>,
}

impl ExceptionalSweepReport {
    /// No plane produced a certificate.
    pub fn exceptional_at_resolution(&self) -> bool {
        self.falsified == 0
    }
}

/// Runs the `-log s` falsifier on `m` random planes through `a`.
pub fn exceptional_sweep(spec: &DomainSpec, a: &[C64], m: usize, cfg: &PshConfig, seed: u64) -> Result<ExceptionalSweepReport> {
    spec.check_dim(a)?;
    if m == 0 {
        return Err(Error::InvalidParameter("at least one plane is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Vec<(PlaneFrame, u64)> = (0..m).map(|_| (PlaneFrame::random_through(a, &mut rng), rng.random())).collect();
    let per_plane: Vec<PlaneVerdict> = frames
        .into_par_iter()
        .enumerate()
        .map(|(index, (frame, plane_seed))| {
            let outcome = slice_domain(spec, &frame).and_then(|s| psh_falsify(&s.spec, &PshTarget::NegLogS, cfg, plane_seed));
            match outcome {
                Ok(v) => PlaneVerdict {
                    index,
                    frame,
                    falsified: v.is_falsified(),
                    margin: v.certificate().map(|c| c.margin),
                    certificate: v.certificate().cloned(),
                    note: None,
                },
                Err(e) => PlaneVerdict {
                    index,
                    frame,
                    falsified: false,
                    margin: None,
                    certificate: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    let falsifying_frames: Vec<usize> = per_plane.iter().filter(|p| p.falsified).map(|p| p.index).collect();
    let falsified = falsifying_frames.len();
    Ok(ExceptionalSweepReport {
        point: a.to_vec(),
        planes: m,
        circles_per_plane: cfg.circles,
        falsified,
        violation_fraction: falsified as f64 / m as f64,
        falsifying_frames,
        per_plane,
    })
}

/// A member of the domain on the plane, searched over seeded plane points of
/// log-spread radius inside the window.
pub fn member_on_plane(spec: &DomainSpec, frame: &PlaneFrame, probes: usize, seed: u64) -> Option<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = spec.bounding_radius;
    (0..probes).find_map(|_| {
        let rho = 2.0 * r * (1e-4f64.ln() * rng.random::<f64>()).exp();
        let zeta = cvec::scale(&cvec::random_unit(&mut rng, 2), C64::new(rho, 0.0));
        let p = frame.lift(&zeta);
        (cvec::norm(&p) <= r && spec.member(&p)).then_some(p)
    })
}
