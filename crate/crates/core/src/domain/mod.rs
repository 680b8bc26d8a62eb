//! Open sets in C^n as boolean trees over sublevel sets `{F < 0}`.

pub mod boundary;
pub mod catalog;
pub mod distance;
pub mod file;
mod quadric;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cvec::{self, C64};
use crate::error::{Error, Result};
use crate::expr::ScalarField;

pub use file::{load_domain_file, parse_domain_json};
pub use boundary::{boundary_point_data, sample_boundary, sample_interior, BoundaryPointData, JUNCTION_TOL};
pub use distance::{signed_boundary_distance, BoundaryDistance, DistanceConfig, DistanceMethod};

/// Global tolerance for "on the boundary".
pub const BOUNDARY_TOL: f64 = 1e-7;
/// Points closer than this to a removed affine set are excluded.
pub const AFFINE_TOL: f64 = 1e-12;
pub const DEFAULT_BOUNDING_RADIUS: f64 = 10.0;

/// `zeta -> base + sum_k zeta_k * cols[k]`, from C^m to C^n.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub base: Vec<C64>,
    pub cols: Vec<Vec<C64>>,
}

impl AffineMap {
    pub fn source_dim(&self) -> usize {
        self.cols.len()
    }

    pub fn target_dim(&self) -> usize {
        self.base.len()
    }

    pub fn apply(&self, zeta: &[C64]) -> Vec<C64> {
        let mut out = self.base.clone();
        for (k, col) in self.cols.iter().enumerate() {
            let s = zeta[k];
            for (o, c) in out.iter_mut().zip(col) {
                *o += s * c;
            }
        }
        out
    }

    fn linear(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.target_dim()];
        for (k, col) in self.cols.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(col) {
                *o += v[k] * c;
            }
        }
        out
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            base: self.apply(&inner.base),
            cols: inner.cols.iter().map(|c| self.linear(c)).collect(),
        }
    }
}

/// A primitive open set `{F(map(z)) < 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub field: ScalarField,
    pub map: Option<Arc<AffineMap>>,
}

impl Primitive {
    pub fn new(field: ScalarField) -> Self {
        Primitive { field, map: None }
    }

    #[inline]
    pub fn value(&self, z: &[C64]) -> f64 {
        match &self.map {
            None => self.field.value(z),
            Some(m) => self.field.value(&m.apply(z)),
        }
    }

    pub fn is_smooth_at(&self, z: &[C64], tol: f64) -> bool {
        match &self.map {
            None => self.field.is_smooth_at(z, tol),
            Some(m) => self.field.is_smooth_at(&m.apply(z), tol),
        }
    }

    fn input_dim(&self) -> usize {
        match &self.map {
            None => self.field.dimension(),
            Some(m) => m.source_dim(),
        }
    }
}

/// Complex affine subspace `point + span(basis)`, basis orthonormal.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSet {
    pub point: Vec<C64>,
    pub basis: Vec<Vec<C64>>,
}

impl AffineSet {
    pub fn new(point: Vec<C64>, span: &[Vec<C64>]) -> Self {
        AffineSet { point, basis: cvec::orthonormalize(span) }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, z: &[C64]) -> Vec<C64> {
        let d = cvec::sub(z, &self.point);
        let mut p = self.point.clone();
        for q in &self.basis {
            let coef = cvec::herm(&d, q);
            p = cvec::axpy(&p, coef, q);
        }
        p
    }

    pub fn distance(&self, z: &[C64]) -> f64 {
        cvec::dist(z, &self.project(z))
    }

    /// Preimage under an affine map, `None` when empty.
    pub fn preimage(&self, map: &AffineMap) -> Option<AffineSet> {
        let n = map.target_dim();
        let m = map.source_dim();
        // P⊥ = I - W W^H
        let perp = |v: &[C64]| -> Vec<C64> {
            let mut out = v.to_vec();
            for q in &self.basis {
                let coef = cvec::herm(v, q);
                out = cvec::axpy(&out, -coef, q);
            }
            out
        };
        let k_cols: Vec<Vec<C64>> = map.cols.iter().map(|c| perp(c)).collect();
        let rhs = perp(&cvec::sub(&self.point, &map.base));
        let k = DMatrix::from_fn(n, m, |i, j| k_cols[j][i]);
        let r = DVector::from_vec(rhs.clone());
        let gram = k.adjoint() * &k;
        let eig = gram.symmetric_eigen();
        let kr = k.adjoint() * &r;
        let scale = eig.eigenvalues.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
        let mut zeta0 = DVector::<C64>::zeros(m);
        let mut kernel = Vec::new();
        for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(idx);
            if lam.abs() <= 1e-20 * scale.max(1.0) {
                kernel.push(v.iter().copied().collect::<Vec<_>>());
            } else {
                let coef = (v.adjoint() * &kr)[(0, 0)] / lam;
                zeta0 += v * coef;
            }
        }
        let resid = (&k * &zeta0 - &r).norm();
        if resid > 1e-10 * (1.0 + r.norm()) {
            return None;
        }
        Some(AffineSet::new(zeta0.iter().copied().collect(), &kernel))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Primitive(Primitive),
    Union(Vec<Region>),
    Intersection(Vec<Region>),
    /// Interior of the complement of the child.
    Complement(Box<Region>),
    MinusAffine(Box<Region>, AffineSet),
}

impl Region {
    pub fn primitive(text: &str, n: usize) -> Result<Region> {
        Ok(Region::Primitive(Primitive::new(ScalarField::parse(text, n)?)))
    }

    pub fn member(&self, z: &[C64]) -> bool {
        match self {
            Region::Primitive(p) => p.value(z) < 0.0,
            Region::Union(xs) => xs.iter().any(|x| x.member(z)),
            Region::Intersection(xs) => xs.iter().all(|x| x.member(z)),
            Region::Complement(x) => x.level(z) > 0.0,
            Region::MinusAffine(x, a) => x.member(z) && a.distance(z) > AFFINE_TOL,
        }
    }

    /// Continuous function negative exactly on the region (removed affine
    /// sets ignored).
    pub fn level(&self, z: &[C64]) -> f64 {
        match self {
            Region::Primitive(p) => p.value(z),
            Region::Union(xs) => xs.iter().map(|x| x.level(z)).fold(f64::INFINITY, f64::min),
            Region::Intersection(xs) => {
                xs.iter().map(|x| x.level(z)).fold(f64::NEG_INFINITY, f64::max)
            }
            Region::Complement(x) => -x.level(z),
            Region::MinusAffine(x, _) => x.level(z),
        }
    }

    pub fn collect_primitives<'a>(&'a self, out: &mut Vec<&'a Primitive>) {
        match self {
            Region::Primitive(p) => out.push(p),
            Region::Union(xs) | Region::Intersection(xs) => {
                xs.iter().for_each(|x| x.collect_primitives(out))
            }
            Region::Complement(x) => x.collect_primitives(out),
            Region::MinusAffine(x, _) => x.collect_primitives(out),
        }
    }

    pub fn collect_affine<'a>(&'a self, out: &mut Vec<&'a AffineSet>) {
        match self {
            Region::Primitive(_) => {}
            Region::Union(xs) | Region::Intersection(xs) => {
                xs.iter().for_each(|x| x.collect_affine(out))
            }
            Region::Complement(x) => x.collect_affine(out),
            Region::MinusAffine(x, a) => {
                x.collect_affine(out);
                out.push(a);
            }
        }
    }

    fn check_dims(&self, n: usize) -> Result<()> {
        match self {
            Region::Primitive(p) => {
                if p.input_dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.input_dim() });
                }
                Ok(())
            }
            Region::Union(xs) | Region::Intersection(xs) => {
                if xs.is_empty() {
                    return Err(Error::InvalidParameter("empty union/intersection".into()));
                }
                xs.iter().try_for_each(|x| x.check_dims(n))
            }
            Region::Complement(x) => x.check_dims(n),
            Region::MinusAffine(x, a) => {
                if a.point.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: a.point.len() });
                }
                if a.dim() >= n {
                    return Err(Error::InvalidParameter(
                        "removed affine set must have dimension < n".into(),
                    ));
                }
                x.check_dims(n)
            }
        }
    }

    /// Pull the region back along an affine map `C^m -> C^n`.
    pub fn pullback(&self, map: &Arc<AffineMap>) -> Region {
        match self {
            Region::Primitive(p) => {
                let composed = match &p.map {
                    None => map.clone(),
                    Some(inner) => Arc::new(inner.compose(map)),
                };
                Region::Primitive(Primitive { field: p.field.clone(), map: Some(composed) })
            }
            Region::Union(xs) => Region::Union(xs.iter().map(|x| x.pullback(map)).collect()),
            Region::Intersection(xs) => {
                Region::Intersection(xs.iter().map(|x| x.pullback(map)).collect())
            }
            Region::Complement(x) => Region::Complement(Box::new(x.pullback(map))),
            Region::MinusAffine(x, a) => {
                let inner = x.pullback(map);
                match a.preimage(map) {
                    Some(pre) if pre.dim() < map.source_dim() => {
                        Region::MinusAffine(Box::new(inner), pre)
                    }
                    // whole slice removed: keep an empty intersection-equivalent
                    Some(_) => Region::Intersection(vec![
                        inner,
                        Region::Primitive(Primitive::new(
                            ScalarField::parse("1", map.source_dim()).expect("constant field"),
                        )),
                    ]),
                    None => inner,
                }
            }
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, xs: &[Region]| -> fmt::Result {
            write!(f, "{name}(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        };
        match self {
            Region::Primitive(p) if p.map.is_some() => write!(f, "{{({}) ∘ affine < 0}}", p.field),
            Region::Primitive(p) => write!(f, "{{{} < 0}}", p.field),
            Region::Union(xs) => list(f, "union", xs),
            Region::Intersection(xs) => list(f, "intersection", xs),
            Region::Complement(x) => write!(f, "complement({x})"),
            Region::MinusAffine(x, a) => {
                write!(f, "minus_affine({x}, point={:?}, dim={})", fmt_point(&a.point), a.dim())
            }
        }
    }
}

fn fmt_point(p: &[C64]) -> Vec<String> {
    p.iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub dimension: usize,
    pub region: Region,
    pub bounding_radius: f64,
    pub name: String,
}

impl DomainSpec {
    pub fn new(dimension: usize, region: Region, bounding_radius: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(bounding_radius > 0.0) || !bounding_radius.is_finite() {
            return Err(Error::InvalidParameter("bounding radius must be positive".into()));
        }
        region.check_dims(dimension)?;
        Ok(DomainSpec { dimension, region, bounding_radius, name: String::from("custom") })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn check_dim(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: z.len() });
        }
        Ok(())
    }

    pub fn contains(&self, z: &[C64]) -> Result<bool> {
        self.check_dim(z)?;
        Ok(self.region.member(z))
    }

    /// Membership without the dimension check.
    #[inline]
    pub fn member(&self, z: &[C64]) -> bool {
        self.region.member(z)
    }

    #[inline]
    pub fn level(&self, z: &[C64]) -> f64 {
        self.region.level(z)
    }

    pub fn primitives(&self) -> Vec<&Primitive> {
        let mut v = Vec::new();
        self.region.collect_primitives(&mut v);
        v
    }

    pub fn affine_sets(&self) -> Vec<&AffineSet> {
        let mut v = Vec::new();
        self.region.collect_affine(&mut v);
        v
    }

    pub fn formula(&self) -> String {
        self.region.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disc(cx: f64, r: f64) -> Region {
        Region::primitive(&format!("(re(1) - ({cx}))^2 + im(1)^2 - {}", r * r), 1).unwrap()
    }

    #[test]
    fn union_membership_matches_logical_or() {
        let a = disc(-1.0, 2.0);
        let b = disc(1.0, 2.0);
        let u = Region::Union(vec![a.clone(), b.clone()]);
        let i = Region::Intersection(vec![a.clone(), b.clone()]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let z = [c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0))];
            assert_eq!(u.member(&z), a.member(&z) || b.member(&z));
            assert_eq!(i.member(&z), a.member(&z) && b.member(&z));
            assert_eq!(u.member(&z), u.level(&z) < 0.0);
        }
    }

    #[test]
    fn removed_point_is_excluded() {
        let ball = Region::primitive("norm2 - 1", 2).unwrap();
        let r = Region::MinusAffine(
            Box::new(ball),
            AffineSet::new(vec![c(0.0, 0.0), c(0.0, 0.0)], &[]),
        );
        let spec = DomainSpec::new(2, r, 2.0).unwrap();
        assert!(!spec.contains(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap());
        assert!(spec.contains(&[c(1e-6, 0.0), c(0.0, 0.0)]).unwrap());
    }

    #[test]
    fn affine_dimension_must_be_small() {
        let ball = Region::primitive("norm2 - 1", 1).unwrap();
        let line = AffineSet::new(vec![c(0.0, 0.0)], &[vec![c(1.0, 0.0)]]);
        assert!(DomainSpec::new(1, Region::MinusAffine(Box::new(ball), line), 2.0).is_err());
    }

    #[test]
    fn preimage_of_line_in_plane() {
        // line {z_2 = 0.3, z_3 = 0} in C^3, plane z = (0,0.3,0) + a e_1 + b (e_2 + e_3)/sqrt2
        let line = AffineSet::new(
            vec![c(0.0, 0.0), c(0.3, 0.0), c(0.0, 0.0)],
            &[cvec::unit(3, 0)],
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let map = AffineMap {
            base: vec![c(0.0, 0.0), c(0.3, 0.0), c(0.0, 0.0)],
            cols: vec![cvec::unit(3, 0), vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0)]],
        };
        let pre = line.preimage(&map).unwrap();
        assert_eq!(pre.dim(), 1);
        assert!(pre.distance(&[c(5.0, 1.0), c(0.0, 0.0)]) < 1e-12);
        assert!((pre.distance(&[c(0.0, 0.0), c(0.1, 0.0)]) - 0.1).abs() < 1e-12);
        // a parallel plane misses the line
        let shifted = AffineMap { base: vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], ..map.clone() };
        let shifted = AffineMap { cols: vec![cvec::unit(3, 0), cvec::unit(3, 1)], ..shifted };
        assert!(line.preimage(&shifted).is_none());
    }
}
