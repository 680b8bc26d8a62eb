//! Real-valued scalar fields on C^n given as expression trees.
//!
//! Coordinates are 1-based in the text grammar (`re(1)` is `Re z_1`).
//! Derivatives are central finite differences in the interleaved real
//! coordinates `(x_1, y_1, ..., x_n, y_n)`. Near the kink set of a
//! `max`/`min` node the differences straddle two smooth pieces and the
//! result is a one-sided blend; use [`ScalarField::is_smooth_at`] first
//! when smoothness matters.

use std::fmt;

use crate::cvec::{self, C64};
use crate::error::{Error, Result};
use crate::parse;

/// Default relative finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Step used for second derivatives; balances truncation against cancellation.
pub const HESSIAN_STEP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Re(usize),
    Im(usize),
    Abs2(usize),
    Norm2,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, u32),
    Max(Vec<Node>),
    Min(Vec<Node>),
}

impl Node {
    fn eval(&self, z: &[C64]) -> f64 {
        match self {
            Node::Const(v) => *v,
            Node::Re(j) => z[j - 1].re,
            Node::Im(j) => z[j - 1].im,
            Node::Abs2(j) => {
                let w = z[j - 1];
                w.re * w.re + w.im * w.im
            }
            Node::Norm2 => z.iter().map(|w| w.re * w.re + w.im * w.im).sum(),
            Node::Add(a, b) => a.eval(z) + b.eval(z),
            Node::Sub(a, b) => a.eval(z) - b.eval(z),
            Node::Mul(a, b) => a.eval(z) * b.eval(z),
            Node::Neg(a) => -a.eval(z),
            Node::Pow(a, k) => a.eval(z).powi(*k as i32),
            Node::Max(xs) => xs.iter().map(|x| x.eval(z)).fold(f64::NEG_INFINITY, f64::max),
            Node::Min(xs) => xs.iter().map(|x| x.eval(z)).fold(f64::INFINITY, f64::min),
        }
    }

    fn max_index(&self) -> usize {
        match self {
            Node::Const(_) | Node::Norm2 => 0,
            Node::Re(j) | Node::Im(j) | Node::Abs2(j) => *j,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => a.max_index().max(b.max_index()),
            Node::Neg(a) | Node::Pow(a, _) => a.max_index(),
            Node::Max(xs) | Node::Min(xs) => xs.iter().map(Node::max_index).max().unwrap_or(0),
        }
    }

    fn kinked(&self, z: &[C64], tol: f64) -> bool {
        match self {
            Node::Const(_) | Node::Re(_) | Node::Im(_) | Node::Abs2(_) | Node::Norm2 => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.kinked(z, tol) || b.kinked(z, tol)
            }
            Node::Neg(a) | Node::Pow(a, _) => a.kinked(z, tol),
            Node::Max(xs) | Node::Min(xs) => {
                if xs.iter().any(|x| x.kinked(z, tol)) {
                    return true;
                }
                let mut vals: Vec<f64> = xs.iter().map(|x| x.eval(z)).collect();
                vals.sort_by(f64::total_cmp);
                if matches!(self, Node::Max(_)) {
                    vals.reverse();
                }
                vals.len() >= 2 && (vals[0] - vals[1]).abs() <= tol * (1.0 + vals[0].abs())
            }
        }
    }

    /// Polynomial degree in the real coordinates; `None` for `max`/`min`.
    fn degree(&self) -> Option<u32> {
        Some(match self {
            Node::Const(_) => 0,
            Node::Re(_) | Node::Im(_) => 1,
            Node::Abs2(_) | Node::Norm2 => 2,
            Node::Add(a, b) | Node::Sub(a, b) => a.degree()?.max(b.degree()?),
            Node::Mul(a, b) => a.degree()? + b.degree()?,
            Node::Neg(a) => a.degree()?,
            Node::Pow(a, k) => a.degree()? * k,
            Node::Max(_) | Node::Min(_) => return None,
        })
    }

    fn has_kink_nodes(&self) -> bool {
        match self {
            Node::Max(_) | Node::Min(_) => true,
            Node::Const(_) | Node::Re(_) | Node::Im(_) | Node::Abs2(_) | Node::Norm2 => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.has_kink_nodes() || b.has_kink_nodes()
            }
            Node::Neg(a) | Node::Pow(a, _) => a.has_kink_nodes(),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, name: &str, xs: &[Node]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

/// Fully parenthesized output; re-parses to an identical tree up to
/// negative constants, which come back as `Neg(Const)`.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) if *v < 0.0 => write!(f, "(-{})", -v),
            Node::Const(v) => write!(f, "{v}"),
            Node::Re(j) => write!(f, "re({j})"),
            Node::Im(j) => write!(f, "im({j})"),
            Node::Abs2(j) => write!(f, "abs2({j})"),
            Node::Norm2 => write!(f, "norm2"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, k) => write!(f, "({a})^{k}"),
            Node::Max(xs) => write_list(f, "max", xs),
            Node::Min(xs) => write_list(f, "min", xs),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    root: Node,
    dimension: usize,
}

/// Gradient and symmetric real Hessian in interleaved real coordinates.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn new(root: Node, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let m = root.max_index();
        if m > dimension {
            return Err(Error::CoordOutOfRange { index: m, dim: dimension });
        }
        Ok(ScalarField { root, dimension })
    }

    pub fn parse(text: &str, dimension: usize) -> Result<Self> {
        parse::parse_field(text, dimension)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn eval(&self, z: &[C64]) -> Result<f64> {
        if z.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: z.len() });
        }
        Ok(self.root.eval(z))
    }

    /// Evaluation without the dimension check; callers guarantee `z.len() == n`.
    #[inline]
    pub fn value(&self, z: &[C64]) -> f64 {
        self.root.eval(z)
    }

    pub fn has_kink_nodes(&self) -> bool {
        self.root.has_kink_nodes()
    }

    /// Upper bound on the polynomial degree; `None` when the field has kinks.
    pub fn degree(&self) -> Option<u32> {
        self.root.degree()
    }

    /// False when some `max`/`min` node has two arguments within `tol` of each other.
    pub fn is_smooth_at(&self, z: &[C64], tol: f64) -> bool {
        !self.root.kinked(z, tol)
    }

    /// Central-difference gradient; step `h * max(1, |x_i|)` per real coordinate.
    pub fn gradient(&self, z: &[C64], h: f64) -> Vec<f64> {
        real_gradient(|p| self.value(p), z, h)
    }

    pub fn numeric_derivatives(&self, z: &[C64], h: f64) -> Result<Derivatives> {
        if z.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: z.len() });
        }
        real_derivatives(|p| self.value(p), z, h)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

/// Central-difference gradient and Hessian in interleaved real coordinates.
pub fn real_derivatives<F: Fn(&[C64]) -> f64>(f: F, z: &[C64], h: f64) -> Result<Derivatives> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    let x = cvec::to_real(z);
    let m = x.len();
    let f = |v: &[f64]| f(&cvec::from_real(v));
    let steps: Vec<f64> = x.iter().map(|xi| h * xi.abs().max(1.0)).collect();
    let f0 = f(&x);
    let mut gradient = vec![0.0; m];
    let mut hessian = vec![vec![0.0; m]; m];
    let mut y = x.clone();
    for i in 0..m {
        let hi = steps[i];
        y[i] = x[i] + hi;
        let fp = f(&y);
        y[i] = x[i] - hi;
        let fm = f(&y);
        y[i] = x[i];
        gradient[i] = (fp - fm) / (2.0 * hi);
        hessian[i][i] = (fp - 2.0 * f0 + fm) / (hi * hi);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let (hi, hj) = (steps[i], steps[j]);
            let mut eval_at = |si: f64, sj: f64| {
                y[i] = x[i] + si * hi;
                y[j] = x[j] + sj * hj;
                let v = f(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (eval_at(1.0, 1.0) - eval_at(1.0, -1.0) - eval_at(-1.0, 1.0)
                + eval_at(-1.0, -1.0))
                / (4.0 * hi * hj);
            hessian[i][j] = v;
            hessian[j][i] = v;
        }
    }
    Ok(Derivatives { gradient, hessian })
}

/// Central-difference gradient of an arbitrary function of a complex point.
pub fn real_gradient<F: Fn(&[C64]) -> f64>(f: F, z: &[C64], h: f64) -> Vec<f64> {
    let mut p = z.to_vec();
    let mut g = Vec::with_capacity(2 * z.len());
    for j in 0..z.len() {
        for part in 0..2 {
            let base = z[j];
            let s = h * if part == 0 { base.re.abs() } else { base.im.abs() }.max(1.0);
            let d = if part == 0 { C64::new(s, 0.0) } else { C64::new(0.0, s) };
            p[j] = base + d;
            let fp = f(&p);
            p[j] = base - d;
            let fm = f(&p);
            p[j] = base;
            g.push((fp - fm) / (2.0 * s));
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::c;

    #[test]
    fn single_re_node() {
        let f = ScalarField::parse("re(1)", 2).unwrap();
        assert_eq!(f.eval(&[c(0.3, 0.7), c(-2.0, 5.0)]).unwrap(), 0.3);
    }

    #[test]
    fn mixed_quadratic_at_point() {
        let f = ScalarField::parse("re(1) + im(1)^2 + abs2(2) - 0.5*re(2)^2", 2).unwrap();
        assert!((f.eval(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn abs2_of_3_4i() {
        let f = ScalarField::parse("abs2(1)", 1).unwrap();
        assert_eq!(f.eval(&[c(3.0, 4.0)]).unwrap(), 25.0);
    }

    #[test]
    fn constants_and_norm2() {
        let f = ScalarField::parse("7", 3).unwrap();
        assert_eq!(f.eval(&[c(1.0, 2.0), c(0.0, 0.0), c(9.0, 9.0)]).unwrap(), 7.0);
        let g = ScalarField::parse("norm2", 2).unwrap();
        assert_eq!(g.eval(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap(), 2.0);
    }

    #[test]
    fn cone_boundary_point() {
        let rho = ScalarField::parse("abs2(3) - abs2(1) - abs2(2)", 3).unwrap();
        let v = rho.eval(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = ScalarField::parse("re(1)", 2).unwrap();
        assert!(matches!(f.eval(&[c(1.0, 0.0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn derivatives_of_linear_field() {
        let f = ScalarField::parse("re(1)", 2).unwrap();
        let d = f.numeric_derivatives(&[c(0.4, -1.2), c(2.0, 0.1)], 1e-4).unwrap();
        let expect = [1.0, 0.0, 0.0, 0.0];
        for (g, e) in d.gradient.iter().zip(expect) {
            assert!((g - e).abs() < 1e-8);
        }
        for row in &d.hessian {
            for v in row {
                assert!(v.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn hessian_of_abs2_at_origin() {
        let f = ScalarField::parse("abs2(1)", 2).unwrap();
        let d = f.numeric_derivatives(&[c(0.0, 0.0), c(0.0, 0.0)], 1e-4).unwrap();
        let expect = [[2.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0], [0.0; 4], [0.0; 4]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((d.hessian[i][j] - expect[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn second_derivative_of_im_squared() {
        // analytic: d^2/dy^2 (y^2) = 2
        let f = ScalarField::parse("im(1)^2", 1).unwrap();
        let d = f.numeric_derivatives(&[c(0.0, 1.0)], HESSIAN_STEP).unwrap();
        assert!((d.hessian[1][1] - 2.0).abs() < 1e-6);
        assert!((d.gradient[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn nonpositive_step_rejected() {
        let f = ScalarField::parse("re(1)", 1).unwrap();
        assert!(f.numeric_derivatives(&[c(0.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn kink_detection() {
        let f = ScalarField::parse("max(re(1), im(1))", 1).unwrap();
        assert!(!f.is_smooth_at(&[c(1.0, 1.0)], 1e-9));
        assert!(f.is_smooth_at(&[c(1.0, 0.0)], 1e-9));
    }
}
