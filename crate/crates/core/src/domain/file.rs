//! JSON domain files.
//!
//! ```json
//! { "dimension": 2, "bounding_radius": 4.0,
//!   "tree": { "union": [ { "primitive": "norm2 - 1" },
//!                        { "catalog": "polydisc", "params": { "n": 2 } } ] } }
//! ```
//!
//! Tree nodes: `{"primitive": expr, "map"?: {"base": pt, "cols": [pt..]}}`
//! (the field is evaluated at `base + sum_k z_k cols[k]`, one column per coordinate),
//! `{"union": [..]}`, `{"intersection": [..]}`, `{"complement": node}`,
//! `{"minus_affine": {"of": node, "point": pt, "basis": [pt..]}}`,
//! `{"catalog": name, "params"?: {..}}`. Points are lists of `[re, im]` pairs.
//! A whole file may also be just `{"catalog": name, "params": {..}}`.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::catalog::{catalog_domain, Params};
use super::{AffineMap, AffineSet, DomainSpec, Primitive, Region, DEFAULT_BOUNDING_RADIUS};
use crate::cvec::C64;
use crate::error::{Error, Result};
use crate::expr::ScalarField;

type Pt = Vec<[f64; 2]>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapJson {
    base: Pt,
    cols: Vec<Pt>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MinusJson {
    of: Box<Node>,
    point: Pt,
    #[serde(default)]
    basis: Vec<Pt>,
}

#[derive(Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum Node {
    Primitive { primitive: String, map: Option<MapJson> },
    Union { union: Vec<Node> },
    Intersection { intersection: Vec<Node> },
    Complement { complement: Box<Node> },
    MinusAffine { minus_affine: MinusJson },
    Catalog { catalog: String, #[serde(default)] params: Params },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileJson {
    dimension: usize,
    tree: Node,
    bounding_radius: Option<f64>,
    name: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TopJson {
    Full(FileJson),
    Catalog {
        catalog: String,
        #[serde(default)]
        params: Params,
    },
}

fn point(p: &Pt) -> Vec<C64> {
    p.iter().map(|[a, b]| C64::new(*a, *b)).collect()
}

fn build(node: &Node, n: usize) -> Result<Region> {
    Ok(match node {
        Node::Primitive { primitive, map: None } => Region::primitive(primitive, n)?,
        Node::Primitive { primitive, map: Some(m) } => {
            let map = AffineMap { base: point(&m.base), cols: m.cols.iter().map(point).collect() };
            if map.cols.len() != n || map.cols.iter().any(|c| c.len() != map.base.len()) {
                return Err(Error::InvalidParameter(
                    "map needs one column per domain coordinate, each of the base length".into(),
                ));
            }
            let field = ScalarField::parse(primitive, map.base.len())?;
            Region::Primitive(Primitive { field, map: Some(Arc::new(map)) })
        }
        Node::Union { union } => Region::Union(union.iter().map(|x| build(x, n)).collect::<Result<_>>()?),
        Node::Intersection { intersection } => {
            Region::Intersection(intersection.iter().map(|x| build(x, n)).collect::<Result<_>>()?)
        }
        Node::Complement { complement } => Region::Complement(Box::new(build(complement, n)?)),
        Node::MinusAffine { minus_affine: m } => {
            let basis: Vec<Vec<C64>> = m.basis.iter().map(point).collect();
            Region::MinusAffine(Box::new(build(&m.of, n)?), AffineSet::new(point(&m.point), &basis))
        }
        Node::Catalog { catalog, params } => {
            let spec = catalog_domain(catalog, params)?;
            if spec.dimension != n {
                return Err(Error::DimensionMismatch { expected: n, got: spec.dimension });
            }
            spec.region
        }
    })
}

/// Parses a domain document.
pub fn parse_domain_json(text: &str) -> Result<DomainSpec> {
    let top: TopJson = serde_json::from_str(text).map_err(|e| {
        // untagged enums lose the position; re-parse as a plain value for it
        match serde_json::from_str::<serde_json::Value>(text) {
            Err(inner) => Error::Json(inner),
            Ok(_) => Error::Json(e),
        }
    })?;
    match top {
        TopJson::Catalog { catalog, params } => catalog_domain(&catalog, &params),
        TopJson::Full(f) => {
            let region = build(&f.tree, f.dimension)?;
            let spec = DomainSpec::new(f.dimension, region, f.bounding_radius.unwrap_or(DEFAULT_BOUNDING_RADIUS))?;
            Ok(match f.name {
                Some(name) => spec.named(&name),
                None => spec,
            })
        }
    }
}

pub fn load_domain_file(path: &Path) -> Result<DomainSpec> {
    parse_domain_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::c;

    #[test]
    fn union_file() {
        let s = parse_domain_json(
            r#"{"dimension": 1, "bounding_radius": 4,
                "tree": {"union": [{"primitive": "abs2(1) - 1"},
                                   {"primitive": "(re(1) - 2)^2 + im(1)^2 - 1"}]}}"#,
        )
        .unwrap();
        assert!(s.member(&[c(0.0, 0.0)]));
        assert!(s.member(&[c(2.5, 0.0)]));
        assert!(!s.member(&[c(0.0, 1.5)]));
        assert_eq!(s.bounding_radius, 4.0);
    }

    #[test]
    fn catalog_forms() {
        let a = parse_domain_json(r#"{"catalog": "ball", "params": {"n": 3}}"#).unwrap();
        assert_eq!(a.dimension, 3);
        let b = parse_domain_json(
            r#"{"dimension": 2, "tree": {"complement": {"catalog": "ball"}}}"#,
        )
        .unwrap();
        assert!(b.member(&[c(2.0, 0.0), c(0.0, 0.0)]));
        assert!(!b.member(&[c(0.0, 0.0), c(0.0, 0.0)]));
    }

    #[test]
    fn minus_affine_and_map() {
        let s = parse_domain_json(
            r#"{"dimension": 2, "tree": {"minus_affine": {
                 "of": {"primitive": "abs2(1) - 1", "map": {"base": [[0,0]], "cols": [[[1,0]], [[0,0]]]}},
                 "point": [[0,0],[0,0]], "basis": [[[0,0],[1,0]]]}}}"#,
        )
        .unwrap();
        assert!(s.member(&[c(0.5, 0.0), c(7.0, 0.0)]));
        assert!(!s.member(&[c(0.0, 0.0), c(7.0, 0.0)]));
    }

    #[test]
    fn expression_error_has_position() {
        let e = parse_domain_json(r#"{"dimension": 1, "tree": {"primitive": "abs2(1) - * 1"}}"#).unwrap_err();
        assert!(matches!(e, Error::Syntax { pos: 10, .. }), "{e:?}");
    }

    #[test]
    fn malformed_json_reports_line() {
        let e = parse_domain_json("{\"dimension\": 1,\n \"tree\": }").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn unknown_node_rejected() {
        assert!(parse_domain_json(r#"{"dimension": 1, "tree": {"xor": []}}"#).is_err());
    }
}
