//! Bracketing and Illinois root refinement along a ray parameter.

/// First `t` in `(0, t_max]` where `level(t) >= 0`, assuming `level(0) < 0`.
///
/// Steps start at `t0` and double up to `max_step`; the bracket is then
/// refined with the Illinois variant of regula falsi until its width is
/// below `rel_tol * t`. Returns `None` when no sign change occurs before
/// `t_max`.
pub fn first_exit<F: FnMut(f64) -> f64>(
    mut level: F,
    t0: f64,
    t_max: f64,
    max_step: f64,
    rel_tol: f64,
) -> Option<f64> {
    let mut a = 0.0;
    let mut fa = f64::NAN;
    let mut step = t0.max(f64::MIN_POSITIVE);
    let (b, fb) = loop {
        let t = (a + step).min(t_max);
        let ft = level(t);
        if ft >= 0.0 {
            break (t, ft);
        }
        if t >= t_max {
            return None;
        }
        a = t;
        fa = ft;
        step = (2.0 * step).min(max_step);
    };
    if fa.is_nan() {
        fa = level(a.max(0.0));
        if fa >= 0.0 {
            return Some(0.0);
        }
    }
    Some(refine(&mut level, a, fa, b, fb, rel_tol))
}

/// Illinois refinement on a bracket with `fa < 0 <= fb`.
pub fn refine<F: FnMut(f64) -> f64>(
    level: &mut F,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    rel_tol: f64,
) -> f64 {
    let mut side = 0i8;
    for it in 0..200 {
        let width = b - a;
        if width <= rel_tol * b.abs().max(1e-300) {
            break;
        }
        // every fourth step is a plain bisection to guarantee shrinkage
        let mut t = if it % 4 == 3 || !(fb - fa).is_finite() || fb == fa {
            0.5 * (a + b)
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        if !(t > a && t < b) {
            t = 0.5 * (a + b);
        }
        let ft = level(t);
        if ft >= 0.0 {
            b = t;
            fb = ft;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = t;
            fa = ft;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (a + b)
}
