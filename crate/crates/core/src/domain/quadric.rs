//! Global nearest points on zero sets of real quadratic polynomials.
//!
//! In the eigenbasis of the Hessian, the stationarity condition for the
//! nearest point to `q` on `{c + β·y + Σ λ_i y_i²/2 = 0}` gives
//! `y_i(μ) = (q_i − μ β_i) / (1 + μ λ_i)`. Every stationary point is a root
//! of `g(μ) = f(y(μ))` on one of the intervals between the poles `−1/λ_i`,
//! or lies on a pole with the corresponding coordinates left free.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::Primitive;
use crate::cvec;

/// `c + b·x + xᵀAx/2` in interleaved real coordinates.
#[derive(Clone, Debug)]
pub(crate) struct Quadric {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl Quadric {
    /// Exact coefficients when the primitive has degree at most two.
    pub(crate) fn of(p: &Primitive) -> Option<Self> {
        if p.field.degree()? > 2 {
            return None;
        }
        let m = 2 * p.input_dim();
        let f = |x: &[f64]| p.value(&cvec::from_real(x));
        let e = |terms: &[(usize, f64)]| {
            let mut x = vec![0.0; m];
            for &(i, s) in terms {
                x[i] += s;
            }
            f(&x)
        };
        let c = e(&[]);
        let mut a = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        for i in 0..m {
            let (fp, fm) = (e(&[(i, 1.0)]), e(&[(i, -1.0)]));
            b[i] = (fp - fm) / 2.0;
            a[(i, i)] = fp + fm - 2.0 * c;
            for j in 0..i {
                let v = (e(&[(i, 1.0), (j, 1.0)]) - e(&[(i, 1.0), (j, -1.0)]) - e(&[(i, -1.0), (j, 1.0)])
                    + e(&[(i, -1.0), (j, -1.0)]))
                    / 4.0;
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        Some(Quadric { a, b, c })
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.c + self.b.dot(x) + 0.5 * x.dot(&(&self.a * x))
    }

    /// `|f| / |∇f|` at `x`, a first-order distance to the zero set.
    pub(crate) fn residual(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let g = &self.a * &x + &self.b;
        self.value(&x).abs() / g.norm()
    }

    /// Nearest point of the zero set to `x`, `None` when the set is empty.
    pub(crate) fn nearest(&self, x: &[f64]) -> Option<Vec<f64>> {
        let eig = self.a.clone().symmetric_eigen();
        let (u, lam) = (eig.eigenvectors, eig.eigenvalues);
        let q = u.transpose() * DVector::from_column_slice(x);
        let beta = u.transpose() * &self.b;
        let m = q.len();
        let lmax = lam.amax();
        let h = |y: &DVector<f64>| {
            self.c + (0..m).map(|i| beta[i] * y[i] + 0.5 * lam[i] * y[i] * y[i]).sum::<f64>()
        };
        let y_of = |mu: f64| DVector::from_fn(m, |i, _| (q[i] - mu * beta[i]) / (1.0 + mu * lam[i]));
        let (qs, bs, ls) = (q.as_slice(), beta.as_slice(), lam.as_slice());
        let g = |mu: f64| {
            let mut acc = self.c;
            for ((&qi, &bi), &li) in qs.iter().zip(bs).zip(ls) {
                let y = (qi - mu * bi) / (1.0 + mu * li);
                acc += bi * y + 0.5 * li * y * y;
            }
            acc
        };

        let mut poles: Vec<f64> = lam
            .iter()
            .filter(|l| l.abs() > 1e-12 * lmax)
            .map(|l| -1.0 / l)
            .collect();
        poles.sort_by(f64::total_cmp);
        poles.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));
        let w = if lmax > 0.0 { 1.0 / lmax } else { 1.0 };

        let mut cands: Vec<DVector<f64>> = Vec::new();
        let mut ends = vec![f64::NEG_INFINITY];
        ends.extend(&poles);
        ends.push(f64::INFINITY);
        for pair in ends.windows(2) {
            let mus = samples(pair[0], pair[1], w);
            let vals: Vec<f64> = mus.iter().map(|&mu| g(mu)).collect();
            for k in 0..mus.len().saturating_sub(1) {
                let (g0, g1) = (vals[k], vals[k + 1]);
                if !(g0.is_finite() && g1.is_finite()) {
                    continue;
                }
                if g0 == 0.0 {
                    cands.push(y_of(mus[k]));
                    continue;
                }
                if g0.signum() == g1.signum() {
                    continue;
                }
                let (mut lo, mut hi, glo) = (mus[k], mus[k + 1], g0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid).signum() == glo.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cands.push(y_of(0.5 * (lo + hi)));
            }
        }

        // points on a pole: the coordinates of that eigenspace are free
        for &p in &poles {
            let lk = -1.0 / p;
            let group: Vec<usize> = (0..m).filter(|&i| (lam[i] - lk).abs() <= 1e-10 * lmax).collect();
            let mut y = DVector::zeros(m);
            for i in 0..m {
                y[i] = if group.contains(&i) {
                    -beta[i] / lk
                } else {
                    (q[i] - p * beta[i]) / (1.0 + p * lam[i])
                };
            }
            let t2 = -2.0 * h(&y) / lk;
            if t2.is_nan() || t2 < 0.0 {
                continue;
            }
            let mut dir: Vec<f64> = group.iter().map(|&i| q[i] - y[i]).collect();
            let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dn > 0.0 {
                dir.iter_mut().for_each(|v| *v /= dn);
            } else {
                dir[0] = 1.0;
            }
            let t = t2.sqrt();
            for (k, &i) in group.iter().enumerate() {
                y[i] += t * dir[k];
            }
            cands.push(y);
        }

        let best = cands
            .into_iter()
            .filter(|y| y.iter().all(|v| v.is_finite()))
            .min_by(|a, b| (a - &q).norm().total_cmp(&(b - &q).norm()))?;
        Some((&u * best).iter().copied().collect())
    }
}

/// Sorted offsets in `(0, 1)`, dense towards both ends.
fn unit_offsets() -> &'static [f64] {
    static T: OnceLock<Vec<f64>> = OnceLock::new();
    T.get_or_init(|| {
        let mut v: Vec<f64> = (1..=15).flat_map(|k| [10f64.powi(-k), 1.0 - 10f64.powi(-k)]).collect();
        v.extend((1..256).map(|j| j as f64 / 256.0));
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

/// Sorted positive offsets from `1e-15` to `1e15`.
fn ray_offsets() -> &'static [f64] {
    static T: OnceLock<Vec<f64>> = OnceLock::new();
    T.get_or_init(|| {
        let mut v: Vec<f64> = (-15..=15).map(|k| 10f64.powi(k)).collect();
        v.extend((1..=256).map(|j| j as f64 / 32.0));
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

/// Monotone sample abscissae inside `(lo, hi)`, dense towards finite ends.
fn samples(lo: f64, hi: f64, w: f64) -> Vec<f64> {
    let v: Vec<f64> = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => unit_offsets().iter().map(|u| lo + (hi - lo) * u).collect(),
        (false, true) => ray_offsets().iter().map(|t| hi - w * t).collect(),
        (true, false) => ray_offsets().iter().map(|t| lo + w * t).collect(),
        (false, false) => ray_offsets()
            .iter()
            .rev()
            .map(|t| -w * t)
            .chain(std::iter::once(0.0))
            .chain(ray_offsets().iter().map(|t| w * t))
            .collect(),
    };
    v.into_iter().filter(|&mu| mu > lo && mu < hi).collect()
}
