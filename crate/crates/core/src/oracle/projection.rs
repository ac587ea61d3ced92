//! Projection onto the rotated cone `2 u v >= w1^2 + w2^2` computed by
//! search instead of the closed form used by the solver.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Nearest cone point to `x`.
///
/// In the coordinates `t = (u + v)/sqrt2`, `s = (u - v)/sqrt2`, `r = |w|`
/// the cone is `t >= |(s, r)|`. Its boundary rays are `t (1, cos a, sin a)`
/// for `a` in `[0, pi]`, and the best `t` on each ray has a one-line
/// formula, so the search is over the angle alone: a dense scan followed by
/// golden-section refinement of the best bracket.
pub fn numeric_cone_projection(x: [f64; 4]) -> [f64; 4] {
    let in_cone = x[0] >= 0.0 && x[1] >= 0.0 && 2.0 * x[0] * x[1] >= x[2] * x[2] + x[3] * x[3];
    if in_cone {
        return x;
    }
    let t0 = (x[0] + x[1]) * FRAC_1_SQRT_2;
    let s0 = (x[0] - x[1]) * FRAC_1_SQRT_2;
    let r0 = x[2].hypot(x[3]);

    let on_ray = |a: f64| {
        let (c, s) = (a.cos(), a.sin());
        let t = ((t0 + s0 * c + r0 * s) / 2.0).max(0.0);
        let p = [t, t * c, t * s];
        let d = (p[0] - t0).powi(2) + (p[1] - s0).powi(2) + (p[2] - r0).powi(2);
        (d, p)
    };

    let samples = 4096;
    let step = PI / samples as f64;
    let best = (0..=samples)
        .map(|i| i as f64 * step)
        .min_by(|&a, &b| on_ray(a).0.total_cmp(&on_ray(b).0))
        .unwrap_or(0.0);
    let (mut lo, mut hi) = ((best - step).max(0.0), (best + step).min(PI));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if on_ray(a).0 <= on_ray(b).0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    let (_, [t, s, r]) = on_ray(0.5 * (lo + hi));
    let dir = if r0 > 0.0 { [x[2] / r0, x[3] / r0] } else { [1.0, 0.0] };
    [(t + s) * FRAC_1_SQRT_2, (t - s) * FRAC_1_SQRT_2, r * dir[0], r * dir[1]]
}
