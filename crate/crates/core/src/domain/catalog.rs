//! Named domains used throughout the test suites and reproduction recipes.
//!
//! Formulas (`z_j = x_j + i y_j`, all inequalities strict):
//!
//! | name | parameters (defaults) | set |
//! |------|-----------------------|-----|
//! | `ball` | `n=2, r=1` | `norm2 - r^2 < 0` |
//! | `polydisc` | `n=2, r=1` | `abs2(j) - r^2 < 0` for all j |
//! | `half-space` | `n=2` | `re(1) < 0` |
//! | `convex-tube` | `n=2` | `re(1)^2 + re(2)^2 - 1 < 0` |
//! | `ellipsoid` | `n=2` | `abs2(1) + 4*abs2(2) - 1 < 0` |
//! | `quadrant` | | `re(1) > 0, im(1) > 0` in C |
//! | `l-tube` | | `|x_1| < 1, |x_2| < 1` and (`x_1 < 0` or `x_2 < 0`) |
//! | `hartogs-figure` | `r=0.5, q=0.5` | `abs2(1) < 1, abs2(2) < 1` and (`abs2(1) < r^2` or `abs2(2) > q^2`) |
//! | `model-hor` | `c=0.5, n=2` | `re(1) + im(1)^2 + abs2(2..n-1) + c*im(n)^2 - re(n)^2 < 0`, `c < 1` |
//! | `lemma5-e` | `c=0.5, eps=0.5` | `re(1) + im(1)^2 - re(2)^2 + c*im(2)^2 < 0`, `abs2(1) < eps^2`, `abs2(2) < eps^2` |
//! | `example10` | | `abs2(z-1) < 4` or `abs2(z+1) < 4` in C |
//! | `example13` | | `abs2(3) < abs2(1) + abs2(2) < 4*abs2(3)` |
//! | `example14` | `lines=1, height=0.3` | unit ball of C^3 minus `l_1 = (t, 0, height)` (and `l_2 = (0, t, height)` when `lines=2`) |
//! | `example15` | | union over j of `abs2(j) > sum_{k != j} abs2(k)` in C^3 |
//! | `example15-piece` | `j=3` | the single piece `abs2(j) > sum_{k != j} abs2(k)` |

use std::collections::BTreeMap;

use super::{AffineSet, DomainSpec, Region};
use crate::cvec::{self, c};
use crate::error::{Error, Result};

pub type Params = BTreeMap<String, f64>;

pub const CATALOG: &[(&str, &str)] = &[
    ("ball", "Euclidean ball {norm2 < r^2}"),
    ("polydisc", "polydisc {|z_j| < r}"),
    ("half-space", "{Re z_1 < 0}"),
    ("convex-tube", "tube over the unit disc {(Re z_1)^2 + (Re z_2)^2 < 1}"),
    ("ellipsoid", "complex ellipsoid {|z_1|^2 + 4|z_2|^2 < 1}"),
    ("quadrant", "{Re z > 0, Im z > 0} in C"),
    ("l-tube", "tube over an L-shaped planar base"),
    ("hartogs-figure", "Hartogs figure in the unit bidisc"),
    ("model-hor", "quadratic model set of a Levi-concave boundary point"),
    ("lemma5-e", "model set intersected with the bidisc of radius eps"),
    ("example10", "union of the discs |z-1| < 2 and |z+1| < 2"),
    ("example13", "cone {|z_3|^2 < |z_1|^2 + |z_2|^2 < 4|z_3|^2}"),
    ("example14", "unit ball of C^3 minus one or two complex lines"),
    ("example15", "{|z| < sqrt2 max |z_j|} in C^3"),
    ("example15-piece", "one piece {|z_j|^2 > sum of the other |z_k|^2}"),
];

struct P<'a> {
    name: &'a str,
    map: &'a Params,
}

impl P<'_> {
    fn get(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }

    fn dim(&self, default: usize, min: usize) -> Result<usize> {
        let v = self.get("n", default as f64);
        if v.fract() != 0.0 || v < min as f64 || v > 16.0 {
            return Err(Error::InvalidParameter(format!("{}: n must be an integer in [{min}, 16]", self.name)));
        }
        Ok(v as usize)
    }

    fn only(&self, keys: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(Error::InvalidParameter(format!("{}: unknown parameter `{k}`", self.name)));
            }
        }
        Ok(())
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{}: {key} must be positive", self.name)));
        }
        Ok(v)
    }
}

fn prim(text: String, n: usize) -> Result<Region> {
    Region::primitive(&text, n)
}

fn model_text(c_: f64, n: usize) -> String {
    let mut s = String::from("re(1) + im(1)^2");
    for j in 2..n {
        s.push_str(&format!(" + abs2({j})"));
    }
    s.push_str(&format!(" + {c_}*im({n})^2 - re({n})^2"));
    s
}

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|(n, _)| *n).collect()
}

pub fn catalog_domain(name: &str, params: &Params) -> Result<DomainSpec> {
    let p = P { name, map: params };
    let spec = match name {
        "ball" => {
            p.only(&["n", "r"])?;
            let n = p.dim(2, 1)?;
            let r = p.positive("r", 1.0)?;
            DomainSpec::new(n, prim(format!("norm2 - {}", r * r), n)?, 2.0 * r)?
        }
        "polydisc" => {
            p.only(&["n", "r"])?;
            let n = p.dim(2, 1)?;
            let r = p.positive("r", 1.0)?;
            let parts = (1..=n).map(|j| prim(format!("abs2({j}) - {}", r * r), n)).collect::<Result<_>>()?;
            DomainSpec::new(n, Region::Intersection(parts), 2.0 * r * (n as f64).sqrt())?
        }
        "half-space" => {
            p.only(&["n"])?;
            let n = p.dim(2, 1)?;
            DomainSpec::new(n, prim("re(1)".into(), n)?, 10.0)?
        }
        "convex-tube" => {
            p.only(&[])?;
            DomainSpec::new(2, prim("re(1)^2 + re(2)^2 - 1".into(), 2)?, 4.0)?
        }
        "ellipsoid" => {
            p.only(&[])?;
            DomainSpec::new(2, prim("abs2(1) + 4*abs2(2) - 1".into(), 2)?, 2.0)?
        }
        "quadrant" => {
            p.only(&[])?;
            let r = Region::Intersection(vec![prim("-re(1)".into(), 1)?, prim("-im(1)".into(), 1)?]);
            DomainSpec::new(1, r, 10.0)?
        }
        "l-tube" => {
            p.only(&[])?;
            let r = Region::Intersection(vec![
                prim("re(1) - 1".into(), 2)?,
                prim("-re(1) - 1".into(), 2)?,
                prim("re(2) - 1".into(), 2)?,
                prim("-re(2) - 1".into(), 2)?,
                Region::Union(vec![prim("re(1)".into(), 2)?, prim("re(2)".into(), 2)?]),
            ]);
            DomainSpec::new(2, r, 4.0)?
        }
        "hartogs-figure" => {
            p.only(&["r", "q"])?;
            let r = p.positive("r", 0.5)?;
            let q = p.positive("q", 0.5)?;
            if r >= 1.0 || q >= 1.0 {
                return Err(Error::InvalidParameter("hartogs-figure: r and q must be < 1".into()));
            }
            let reg = Region::Intersection(vec![
                prim("abs2(1) - 1".into(), 2)?,
                prim("abs2(2) - 1".into(), 2)?,
                Region::Union(vec![
                    prim(format!("abs2(1) - {}", r * r), 2)?,
                    prim(format!("{} - abs2(2)", q * q), 2)?,
                ]),
            ]);
            DomainSpec::new(2, reg, 2.0)?
        }
        "model-hor" => {
            p.only(&["c", "n"])?;
            let n = p.dim(2, 2)?;
            let c_ = p.get("c", 0.5);
            if !(c_ < 1.0) || !c_.is_finite() {
                return Err(Error::InvalidParameter("model-hor: c must be < 1".into()));
            }
            DomainSpec::new(n, prim(model_text(c_, n), n)?, 1.0)?
        }
        "lemma5-e" => {
            p.only(&["c", "eps"])?;
            let c_ = p.get("c", 0.5);
            let eps = p.positive("eps", 0.5)?;
            if !(c_ < 1.0) || !c_.is_finite() {
                return Err(Error::InvalidParameter("lemma5-e: c must be < 1".into()));
            }
            let reg = Region::Intersection(vec![
                prim(model_text(c_, 2), 2)?,
                prim(format!("abs2(1) - {}", eps * eps), 2)?,
                prim(format!("abs2(2) - {}", eps * eps), 2)?,
            ]);
            DomainSpec::new(2, reg, 2.0 * eps)?
        }
        "example10" => {
            p.only(&[])?;
            let reg = Region::Union(vec![
                prim("(re(1) - 1)^2 + im(1)^2 - 4".into(), 1)?,
                prim("(re(1) + 1)^2 + im(1)^2 - 4".into(), 1)?,
            ]);
            DomainSpec::new(1, reg, 4.0)?
        }
        "example13" => {
            p.only(&[])?;
            let reg = Region::Intersection(vec![
                prim("abs2(3) - abs2(1) - abs2(2)".into(), 3)?,
                prim("abs2(1) + abs2(2) - 4*abs2(3)".into(), 3)?,
            ]);
            DomainSpec::new(3, reg, 4.0)?
        }
        "example14" => {
            p.only(&["lines", "height"])?;
            let lines = p.get("lines", 1.0);
            let h = p.get("height", 0.3);
            if lines != 1.0 && lines != 2.0 {
                return Err(Error::InvalidParameter("example14: lines must be 1 or 2".into()));
            }
            let anchor = vec![c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
            let mut reg = Region::MinusAffine(
                Box::new(prim("norm2 - 1".into(), 3)?),
                AffineSet::new(anchor.clone(), &[cvec::unit(3, 0)]),
            );
            if lines == 2.0 {
                reg = Region::MinusAffine(Box::new(reg), AffineSet::new(anchor, &[cvec::unit(3, 1)]));
            }
            DomainSpec::new(3, reg, 3.0)?
        }
        "example15" => {
            p.only(&[])?;
            let parts = (1..=3).map(|j| prim(piece_text(j), 3)).collect::<Result<_>>()?;
            DomainSpec::new(3, Region::Union(parts), 4.0)?
        }
        "example15-piece" => {
            p.only(&["j"])?;
            let j = p.get("j", 3.0);
            if ![1.0, 2.0, 3.0].contains(&j) {
                return Err(Error::InvalidParameter("example15-piece: j must be 1, 2 or 3".into()));
            }
            DomainSpec::new(3, prim(piece_text(j as usize), 3)?, 4.0)?
        }
        _ => return Err(Error::UnknownCatalog(name.to_string())),
    };
    Ok(spec.named(name))
}

fn piece_text(j: usize) -> String {
    let others: Vec<String> = (1..=3).filter(|&k| k != j).map(|k| format!("abs2({k})")).collect();
    format!("{} - abs2({j})", others.join(" + "))
}

/// Catalog lookup with default parameters.
pub fn catalog(name: &str) -> Result<DomainSpec> {
    catalog_domain(name, &Params::new())
}

pub fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_entry_builds() {
        for name in catalog_names() {
            catalog(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn model_formula() {
        let s = catalog_domain("model-hor", &params(&[("c", 0.5), ("n", 2.0)])).unwrap();
        let f = &s.primitives()[0].field;
        let z = [c(0.3, -0.2), c(0.7, 0.4)];
        let expect = 0.3 + 0.04 + 0.5 * 0.16 - 0.49;
        assert!((f.eval(&z).unwrap() - expect).abs() < 1e-15);
        assert!(catalog_domain("model-hor", &params(&[("c", 1.0)])).is_err());
    }

    #[test]
    fn ball_formula() {
        let s = catalog_domain("ball", &params(&[("n", 3.0)])).unwrap();
        assert_eq!(s.dimension, 3);
        assert!(s.contains(&[c(0.5, 0.5), c(0.5, 0.0), c(0.0, 0.0)]).unwrap());
        assert!(!s.contains(&[c(0.6, 0.6), c(0.6, 0.0), c(0.0, 0.0)]).unwrap());
    }

    #[test]
    fn unknown_names_and_params() {
        assert!(matches!(catalog("nope"), Err(Error::UnknownCatalog(_))));
        assert!(catalog_domain("ball", &params(&[("radius", 2.0)])).is_err());
    }

    #[test]
    fn example15_membership() {
        let s = catalog("example15").unwrap();
        assert!(s.contains(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap());
        assert!(!s.contains(&[c(0.0, 0.0); 3]).unwrap());
    }

    #[test]
    fn example13_boundary_point_is_not_member() {
        let s = catalog("example13").unwrap();
        assert!(!s.contains(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap());
        assert!(s.contains(&[c(1.0, 0.0), c(0.0, 0.0), c(0.8, 0.0)]).unwrap());
    }

    #[test]
    fn example15_pieces_are_disjoint() {
        let pieces: Vec<DomainSpec> = (1..=3)
            .map(|j| catalog_domain("example15-piece", &params(&[("j", j as f64)])).unwrap())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20_000 {
            let z = cvec::gaussian(&mut rng, 3);
            let hits = pieces.iter().filter(|p| p.member(&z)).count();
            assert!(hits <= 1);
        }
    }
}
