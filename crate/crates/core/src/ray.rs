//! Exit times along complex rays, directional distances and Minkowski gauges.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{self, C64};
use crate::domain::catalog::{catalog_domain, params};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::roots;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RayConfig {
    /// Initial angle grid for directional distances.
    pub angles: usize,
    /// Relative tolerance of exit times.
    pub tol: f64,
    /// Target accuracy of the refined minimum over angles.
    pub refine_tol: f64,
    /// Keep per-angle exit times in the result.
    pub keep_profile: bool,
}

impl Default for RayConfig {
    fn default() -> Self {
        RayConfig { angles: 256, tol: 1e-9, refine_tol: 1e-6, keep_profile: false }
    }
}

impl RayConfig {
    pub fn with_angles(angles: usize) -> Self {
        RayConfig { angles, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionalDistance {
    /// `None` when no exit was detected before the window cap.
    pub value: Option<f64>,
    pub angles: usize,
    /// Largest ray parameter examined, `R_max / |X|`.
    pub cap: f64,
    /// `(angle, exit time)` pairs sorted by angle, including refinement points.
    pub profile: Option<Vec<(f64, Option<f64>)>>,
}

impl DirectionalDistance {
    pub fn as_f64(&self) -> f64 {
        self.value.unwrap_or(f64::INFINITY)
    }
}

fn check_start(spec: &DomainSpec, z: &[C64], x: &[C64]) -> Result<()> {
    spec.check_dim(z)?;
    spec.check_dim(x)?;
    if !spec.member(z) {
        return Err(Error::NotInDomain);
    }
    if cvec::norm(x) == 0.0 {
        return Err(Error::InvalidParameter("direction must be nonzero".into()));
    }
    Ok(())
}

fn exit_unchecked(spec: &DomainSpec, z: &[C64], x: &[C64], phi: f64, tol: f64) -> Option<f64> {
    let dir = cvec::scale(x, C64::from_polar(1.0, phi));
    let cap = spec.bounding_radius / cvec::norm(x);
    let punctured = !spec.affine_sets().is_empty();
    let mut buf = z.to_vec();
    let level = |t: f64| {
        for ((b, a), d) in buf.iter_mut().zip(z).zip(&dir) {
            *b = a + d * t;
        }
        let v = spec.level(&buf);
        // points exactly on a removed affine set count as outside
        if punctured && v < 0.0 && !spec.member(&buf) {
            0.0
        } else {
            v
        }
    };
    roots::first_exit(level, cap * 1e-4, cap, cap / 64.0, tol)
}

/// First `t > 0` with `z + t e^{i phi} X` outside the domain, `None` if none up to the cap.
pub fn ray_exit_time(spec: &DomainSpec, z: &[C64], x: &[C64], phi: f64, cfg: &RayConfig) -> Result<Option<f64>> {
    check_start(spec, z, x)?;
    Ok(exit_unchecked(spec, z, x, phi, cfg.tol))
}

fn as_val(t: Option<f64>) -> f64 {
    t.unwrap_or(f64::INFINITY)
}

/// Golden-section minimum of the exit time over `[lo, hi]`.
fn golden(f: &mut impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if (hi - lo) < tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Radius of the largest complex disk `z + lambda X`, `|lambda| < r`, inside the domain.
pub fn directional_distance(spec: &DomainSpec, z: &[C64], x: &[C64], cfg: &RayConfig) -> Result<DirectionalDistance> {
    check_start(spec, z, x)?;
    if cfg.angles < 4 {
        return Err(Error::InvalidParameter("at least 4 angles are required".into()));
    }
    let n = cfg.angles;
    let step = TAU / n as f64;
    let times: Vec<Option<f64>> =
        (0..n).into_par_iter().map(|k| exit_unchecked(spec, z, x, k as f64 * step, cfg.tol)).collect();
    let cap = spec.bounding_radius / cvec::norm(x);
    let mut profile: Vec<(f64, Option<f64>)> = times.iter().enumerate().map(|(k, t)| (k as f64 * step, *t)).collect();

    // refine around the best two local minima of the grid
    let mut minima: Vec<usize> = (0..n)
        .filter(|&k| {
            let v = as_val(times[k]);
            v.is_finite() && v <= as_val(times[(k + n - 1) % n]) && v <= as_val(times[(k + 1) % n])
        })
        .collect();
    minima.sort_by(|&a, &b| as_val(times[a]).total_cmp(&as_val(times[b])).then(a.cmp(&b)));
    minima.truncate(2);
    for k in minima {
        let centre = k as f64 * step;
        // angle tolerance giving value accuracy well below refine_tol near a smooth minimum
        let atol = (cfg.refine_tol / (1.0 + as_val(times[k]))).sqrt().min(step) * 1e-2;
        let mut evals = Vec::new();
        let mut f = |phi: f64| {
            let t = exit_unchecked(spec, z, x, phi, cfg.tol);
            evals.push((phi.rem_euclid(TAU), t));
            as_val(t)
        };
        golden(&mut f, centre - step, centre + step, atol);
        profile.extend(evals);
    }
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = profile.iter().map(|p| as_val(p.1)).fold(f64::INFINITY, f64::min);
    Ok(DirectionalDistance {
        value: best.is_finite().then_some(best),
        angles: n,
        cap,
        profile: cfg.keep_profile.then_some(profile),
    })
}

/// `1 / d(z, X)`, with 0 for `X = 0` and for directions that never exit.
pub fn minkowski(spec: &DomainSpec, z: &[C64], x: &[C64], cfg: &RayConfig) -> Result<f64> {
    spec.check_dim(x)?;
    if cvec::norm(x) == 0.0 {
        spec.check_dim(z)?;
        if !spec.member(z) {
            return Err(Error::NotInDomain);
        }
        return Ok(0.0);
    }
    Ok(match directional_distance(spec, z, x, cfg)?.value {
        Some(d) => 1.0 / d,
        None => 0.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma5Result {
    pub delta: f64,
    pub c: f64,
    pub s: f64,
    pub eps: f64,
    pub grid: usize,
    pub value: f64,
    /// `(theta, r(X_theta))` on the quadrature grid.
    pub profile: Vec<(f64, f64)>,
}

/// Smallest admissible circle radius for given `delta`, `c`.
pub fn lemma5_s_min(delta: f64, c: f64) -> f64 {
    3.0 * (1.0 - c).powf(-0.5) * delta.powf(1.5)
}

/// Mean over theta of the gauge of the model set at `(-delta, 0)` in the directions `(delta, s e^{i theta})`.
pub fn lemma5_integral(delta: f64, c: f64, s: f64, eps: f64, grid: usize) -> Result<Lemma5Result> {
    lemma5_integral_with(delta, c, s, eps, grid, &RayConfig::default())
}

pub fn lemma5_integral_with(
    delta: f64,
    c: f64,
    s: f64,
    eps: f64,
    grid: usize,
    cfg: &RayConfig,
) -> Result<Lemma5Result> {
    if !(delta > 0.0 && delta <= eps / 4.0) {
        return Err(Error::InvalidParameter("need 0 < delta <= eps/4".into()));
    }
    if !(c < 1.0) {
        return Err(Error::InvalidParameter("need c < 1".into()));
    }
    let lo = lemma5_s_min(delta, c);
    if s != 0.0 && !(s >= lo * (1.0 - 1e-12) && s <= delta * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("need s = 0 or {lo:.6e} <= s <= delta")));
    }
    if grid < 64 {
        return Err(Error::InvalidParameter("grid must be at least 64".into()));
    }
    let spec = catalog_domain("lemma5-e", &params(&[("c", c), ("eps", eps)]))?;
    let z = [C64::new(-delta, 0.0), C64::new(0.0, 0.0)];
    let profile: Vec<(f64, f64)> = (0..grid)
        .map(|k| {
            let theta = TAU * k as f64 / grid as f64;
            let x = [C64::new(delta, 0.0), C64::from_polar(s, theta)];
            let d = directional_distance(&spec, &z, &x, cfg)?.as_f64();
            Ok((theta, d))
        })
        .collect::<Result<_>>()?;
    let value = profile.iter().map(|(_, d)| 1.0 / d).sum::<f64>() / grid as f64;
    Ok(Lemma5Result { delta, c, s, eps, grid, value, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::c;
    use crate::domain::catalog::catalog;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fast() -> RayConfig {
        RayConfig::with_angles(64)
    }

    #[test]
    fn ball_exit_and_distance() {
        let s = catalog("ball").unwrap();
        let z = [c(0.0, 0.0), c(0.0, 0.0)];
        let x = [c(1.0, 0.0), c(0.0, 0.0)];
        for phi in [0.0, 1.0, 4.0] {
            let t = ray_exit_time(&s, &z, &x, phi, &RayConfig::default()).unwrap().unwrap();
            assert!((t - 1.0).abs() < 1e-9);
        }
        let x = [c(0.3, 0.4), c(-1.0, 0.5)];
        let d = directional_distance(&s, &z, &x, &RayConfig::default()).unwrap();
        assert!((d.as_f64() - 1.0 / cvec::norm(&x)).abs() < 1e-6);
        let m = minkowski(&s, &z, &[c(2.0, 0.0), c(0.0, 0.0)], &fast()).unwrap();
        assert!((m - 2.0).abs() < 1e-6);
    }

    #[test]
    fn polydisc_distance() {
        let s = catalog("polydisc").unwrap();
        let z = [c(0.0, 0.0), c(0.0, 0.0)];
        let x = [c(0.3, 0.4), c(0.2, -0.1)];
        let d = directional_distance(&s, &z, &x, &RayConfig::default()).unwrap();
        assert!((d.as_f64() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn half_space_infinite_ray() {
        let s = catalog("half-space").unwrap();
        let z = [c(-1.0, 0.0), c(0.0, 0.0)];
        let x = [c(1.0, 0.0), c(0.0, 0.0)];
        let cfg = RayConfig::default();
        assert!((ray_exit_time(&s, &z, &x, 0.0, &cfg).unwrap().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(ray_exit_time(&s, &z, &x, std::f64::consts::PI, &cfg).unwrap(), None);
        // a direction inside the boundary never exits
        let y = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(minkowski(&s, &z, &y, &fast()).unwrap(), 0.0);
    }

    #[test]
    fn start_outside_is_an_error() {
        let s = catalog("ball").unwrap();
        let z = [c(2.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(ray_exit_time(&s, &z, &z, 0.0, &fast()), Err(Error::NotInDomain)));
    }

    #[test]
    fn model_exit_at_center_direction() {
        let s = catalog("lemma5-e").unwrap();
        let z = [c(-0.01, 0.0), c(0.0, 0.0)];
        let x = [c(0.01, 0.0), c(0.0, 0.0)];
        let t = ray_exit_time(&s, &z, &x, 0.0, &RayConfig::default()).unwrap().unwrap();
        assert!((t - 1.0).abs() < 1e-6);
    }

    /// Brute-force disk radius: coarse then fine lattice scan of exit times in (t, phi).
    fn lattice_distance(s: &DomainSpec, z: &[C64], x: &[C64], phis: usize) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..phis {
            let w = C64::from_polar(1.0, TAU * k as f64 / phis as f64);
            let inside = |t: f64| s.member(&z.iter().zip(x).map(|(a, b)| a + b * w * t).collect::<Vec<_>>());
            let mut t = 0.0;
            while t < best && inside(t + 1e-3) {
                t += 1e-3;
            }
            while t < best && inside(t + 1e-6) {
                t += 1e-6;
            }
            best = best.min(t + 1e-6);
        }
        best
    }

    #[test]
    fn model_disk_shrinks_against_lattice() {
        let s = catalog("lemma5-e").unwrap();
        let delta = 0.01;
        let sv = lemma5_s_min(delta, 0.5);
        let z = [c(-delta, 0.0), c(0.0, 0.0)];
        let x = [c(delta, 0.0), c(0.0, sv)];
        let d = directional_distance(&s, &z, &x, &RayConfig::default()).unwrap().as_f64();
        let oracle = lattice_distance(&s, &z, &x, 2048);
        assert!(d < 1.0 - 1e-4, "{d}");
        assert!((d - oracle).abs() < 2e-5, "{d} vs {oracle}");
    }

    #[test]
    fn profile_minimum_is_value() {
        let s = catalog("ellipsoid").unwrap();
        let z = [c(0.1, 0.0), c(0.0, 0.1)];
        let x = [c(0.5, 0.2), c(0.1, -0.3)];
        let cfg = RayConfig { keep_profile: true, ..fast() };
        let d = directional_distance(&s, &z, &x, &cfg).unwrap();
        let m = d.profile.as_ref().unwrap().iter().map(|p| p.1.unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(m, d.as_f64());
    }

    #[test]
    fn homogeneity_and_grid_refinement() {
        let s = catalog("ellipsoid").unwrap();
        let z = [c(0.1, 0.0), c(0.0, 0.1)];
        let x = [c(0.5, 0.2), c(0.1, -0.3)];
        let base = directional_distance(&s, &z, &x, &fast()).unwrap().as_f64();
        let fine = directional_distance(&s, &z, &x, &RayConfig::with_angles(128)).unwrap().as_f64();
        assert!(fine <= base + 1e-6 && (fine - base).abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let lam = cvec::gaussian(&mut rng, 1)[0];
            let y = cvec::scale(&x, lam);
            let d = directional_distance(&s, &z, &y, &fast()).unwrap().as_f64();
            assert!((d * lam.norm() - base).abs() < 1e-6);
        }
    }

    #[test]
    fn gauge_triangle_inequality_on_convex_set() {
        let s = catalog("quadrant").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = [c(1.0, 0.5)];
        for _ in 0..10 {
            let x = cvec::gaussian(&mut rng, 1);
            let y = cvec::gaussian(&mut rng, 1);
            let hx = minkowski(&s, &z, &x, &fast()).unwrap();
            let hy = minkowski(&s, &z, &y, &fast()).unwrap();
            let hxy = minkowski(&s, &z, &cvec::add(&x, &y), &fast()).unwrap();
            assert!(hxy <= hx + hy + 1e-6);
        }
    }

    // Brute-force reference values (64 quadrature nodes, 360-angle scan with local refinement).
    const ORACLE: [(f64, f64, f64); 4] = [
        (0.01, 0.004242640687119285, 0.9995507458336454),
        (0.01, 0.01, 0.997523007792763),
        (0.005, 0.0015, 0.9998875454451321),
        (0.005, 0.005, 0.9987556078671844),
    ];

    #[test]
    fn lemma5_matches_reference() {
        for (delta, s, want) in ORACLE {
            let r = lemma5_integral(delta, 0.5, s, 0.5, 64).unwrap();
            assert!((r.value - want).abs() < 1e-5, "delta={delta} s={s}: {} vs {want}", r.value);
            assert!(r.value < 1.0 - 1e-4);
        }
    }

    #[test]
    fn lemma5_degenerate_circle() {
        let r = lemma5_integral(0.01, 0.5, 0.0, 0.5, 64).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lemma5_parameter_checks() {
        assert!(lemma5_integral(0.2, 0.5, 0.1, 0.5, 64).is_err());
        assert!(lemma5_integral(0.01, 1.0, 0.01, 0.5, 64).is_err());
        assert!(lemma5_integral(0.01, 0.5, 0.001, 0.5, 64).is_err());
        assert!(lemma5_integral(0.01, 0.5, 0.01, 0.5, 32).is_err());
    }
}
