//! Small helpers for vectors in C^n.
//!
//! Points are stored as `Vec<Complex64>`. Real views interleave coordinates
//! as `(x_1, y_1, x_2, y_2, ...)` with `z_j = x_j + i y_j`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Hermitian product, linear in the first argument.
pub fn herm(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm2(a).sqrt()
}

pub fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[C64], s: C64, b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[C64]) -> Vec<C64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn unit(n: usize, j: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[j] = C64::new(1.0, 0.0);
    v
}

pub fn to_real(a: &[C64]) -> Vec<f64> {
    a.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn from_real(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
}

/// Standard complex Gaussian vector (unitarily invariant).
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect()
}

/// Uniformly distributed unit vector in C^n.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    loop {
        let g = gaussian(rng, n);
        let m = norm(&g);
        if m > 1e-12 {
            return g.iter().map(|x| x / m).collect();
        }
    }
}

/// Uniform point in the Euclidean ball of radius `r` in C^n.
pub fn random_in_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> Vec<C64> {
    let u = random_unit(rng, n);
    let t: f64 = rng.random::<f64>().powf(1.0 / (2 * n) as f64);
    scale(&u, C64::new(r * t, 0.0))
}

/// Gram-Schmidt (Hermitian). Vectors that become numerically dependent are dropped.
pub fn orthonormalize(vs: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        // two passes for stability
        for _ in 0..2 {
            for q in &out {
                let p = herm(&w, q);
                w = axpy(&w, -p, q);
            }
        }
        let m = norm(&w);
        if m > 1e-10 * norm(v).max(1e-300) && m > 1e-300 {
            out.push(w.iter().map(|x| x / m).collect());
        }
    }
    out
}

/// Orthonormal basis of the Hermitian orthogonal complement of `span(vs)`.
pub fn complement_basis(vs: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let mut all: Vec<Vec<C64>> = orthonormalize(vs);
    let k = all.len();
    for j in 0..n {
        all.push(unit(n, j));
    }
    let q = orthonormalize(&all);
    q.into_iter().skip(k).collect()
}

/// Real inner product of the interleaved views.
pub fn real_dot(a: &[C64], b: &[C64]) -> f64 {
    herm(a, b).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_unit(&mut rng, 3);
        let b = complement_basis(&[v.clone()], 3);
        assert_eq!(b.len(), 2);
        for q in &b {
            assert!(herm(q, &v).norm() < 1e-12);
            assert!((norm(q) - 1.0).abs() < 1e-12);
        }
        assert!(herm(&b[0], &b[1]).norm() < 1e-12);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = random_in_ball(&mut rng, 2, 3.0);
            assert!(norm(&p) <= 3.0);
        }
    }
}
