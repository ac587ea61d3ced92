//! Projection onto the rotated second-order cone
//! `{(u, v, w1, w2) : u, v >= 0, 2 u v >= w1^2 + w2^2}`.
//!
//! The map `(u, v) -> ((u + v)/sqrt2, (u - v)/sqrt2)` is orthogonal and sends
//! the rotated cone onto the standard cone `t >= |(s, w1, w2)|`, so the
//! projection is the standard one conjugated by that rotation.

use std::f64::consts::FRAC_1_SQRT_2;

/// Euclidean projection onto the rotated cone. Idempotent.
pub fn project_rotated_cone(u: f64, v: f64, w1: f64, w2: f64) -> [f64; 4] {
    let t = (u + v) * FRAC_1_SQRT_2;
    let s = (u - v) * FRAC_1_SQRT_2;
    let norm = (s * s + w1 * w1 + w2 * w2).sqrt();
    if norm <= t {
        return [u, v, w1, w2];
    }
    if norm <= -t {
        return [0.0; 4];
    }
    let scale = 0.5 * (t + norm);
    let (tp, sp) = (scale, scale * s / norm);
    let u_p = ((tp + sp) * FRAC_1_SQRT_2).max(0.0);
    let v_p = ((tp - sp) * FRAC_1_SQRT_2).max(0.0);
    [u_p, v_p, scale * w1 / norm, scale * w2 / norm]
}

/// Projects a 4-vector in place.
pub(crate) fn project_in_place(z: &mut [f64]) {
    let p = project_rotated_cone(z[0], z[1], z[2], z[3]);
    z.copy_from_slice(&p);
}

/// Distance from the cone, `|z - proj(z)|`.
pub(crate) fn distance(z: &[f64]) -> f64 {
    let p = project_rotated_cone(z[0], z[1], z[2], z[3]);
    z.iter()
        .zip(p)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Distance from the polar cone `-K`; by Moreau this is `|proj_K(z)|`.
pub(crate) fn polar_distance(z: &[f64]) -> f64 {
    let p = project_rotated_cone(z[0], z[1], z[2], z[3]);
    p.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::numeric_cone_projection;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist2(a: [f64; 4], b: [f64; 4]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn interior_point_is_fixed() {
        assert_eq!(project_rotated_cone(1.0, 1.0, 0.5, 0.5), [1.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn polar_point_goes_to_origin() {
        assert_eq!(project_rotated_cone(-1.0, -1.0, 0.0, 0.0), [0.0; 4]);
        let numeric = numeric_cone_projection([-1.0, -1.0, 0.0, 0.0]);
        assert!(dist2(numeric, [0.0; 4]).sqrt() < 1e-6);
    }

    #[test]
    fn pure_w_point_matches_numeric_oracle() {
        let p = project_rotated_cone(0.0, 0.0, 1.0, 0.0);
        let q = numeric_cone_projection([0.0, 0.0, 1.0, 0.0]);
        assert!(dist2(p, q).sqrt() < 1e-6, "{p:?} vs {q:?}");
    }

    #[test]
    fn thousand_random_points_match_numeric_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let p = project_rotated_cone(x[0], x[1], x[2], x[3]);
            let q = numeric_cone_projection(x);
            assert!(dist2(p, q).sqrt() < 1e-6, "{x:?}: {p:?} vs {q:?}");
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let p = project_rotated_cone(x[0], x[1], x[2], x[3]);
            let pp = project_rotated_cone(p[0], p[1], p[2], p[3]);
            assert!(dist2(p, pp).sqrt() < 1e-12);
        }
    }

    #[test]
    fn projection_is_no_farther_than_random_cone_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let p = project_rotated_cone(x[0], x[1], x[2], x[3]);
            let d = dist2(x, p);
            for _ in 0..20 {
                let u: f64 = rng.gen_range(0.0..2.0);
                let v: f64 = rng.gen_range(0.0..2.0);
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (2.0 * u * v).sqrt() * rng.gen_range(0.0..1.0);
                let y = [u, v, r * a.cos(), r * a.sin()];
                assert!(d <= dist2(x, y) + 1e-12);
            }
        }
    }

    #[test]
    fn polar_distance_vanishes_on_negated_cone() {
        assert!(polar_distance(&[-1.0, -2.0, 0.5, 0.5]) < 1e-15);
        assert!(distance(&[1.0, 2.0, 0.5, 0.5]) < 1e-15);
        assert!(polar_distance(&[1.0, 2.0, 0.5, 0.5]) > 0.1);
    }
}
