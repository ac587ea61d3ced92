//! Modified Ruiz equilibration of the constraint matrix plus a scalar cost
//! scaling. Rows of one cone block share a factor so the scaled cone is the
//! same cone.

pub(crate) struct Scaling {
    /// Column factors: `x = d * x_scaled`.
    pub d: Vec<f64>,
    /// Row factors: `z_scaled = e * z`.
    pub e: Vec<f64>,
    /// Cost factor: `q_scaled = c * d * q`.
    pub c: f64,
}

impl Scaling {
    pub(crate) fn identity(n: usize, m: usize) -> Self {
        Self {
            d: vec![1.0; n],
            e: vec![1.0; m],
            c: 1.0,
        }
    }
}

fn clamp_norm(v: f64) -> f64 {
    if v < 1e-4 {
        1.0
    } else {
        v.min(1e4)
    }
}

/// Scales `vals` (compressed rows) and `q` in place and returns the factors.
pub(crate) fn equilibrate(
    n: usize,
    row_ptr: &[usize],
    col_idx: &[usize],
    vals: &mut [f64],
    q: &mut [f64],
    cone_start: usize,
    iters: usize,
) -> Scaling {
    let m = row_ptr.len() - 1;
    let mut s = Scaling::identity(n, m);
    let mut col_norm = vec![0.0f64; n];
    let mut row_norm = vec![0.0f64; m];
    for _ in 0..iters {
        col_norm.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            let mut r = 0.0f64;
            for k in row_ptr[i]..row_ptr[i + 1] {
                let a = vals[k].abs();
                r = r.max(a);
                col_norm[col_idx[k]] = col_norm[col_idx[k]].max(a);
            }
            row_norm[i] = r;
        }
        for block in (cone_start..m).step_by(4) {
            let r = row_norm[block..block + 4].iter().copied().fold(0.0, f64::max);
            row_norm[block..block + 4].iter_mut().for_each(|v| *v = r);
        }
        let dt: Vec<f64> = col_norm.iter().map(|&v| 1.0 / clamp_norm(v).sqrt()).collect();
        let et: Vec<f64> = row_norm.iter().map(|&v| 1.0 / clamp_norm(v).sqrt()).collect();
        for i in 0..m {
            for k in row_ptr[i]..row_ptr[i + 1] {
                vals[k] *= et[i] * dt[col_idx[k]];
            }
            s.e[i] *= et[i];
        }
        for j in 0..n {
            q[j] *= dt[j];
            s.d[j] *= dt[j];
        }
    }
    let q_norm = q.iter().map(|v| v.abs()).fold(0.0, f64::max);
    s.c = 1.0 / clamp_norm(q_norm);
    q.iter_mut().for_each(|v| *v *= s.c);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn badly_scaled_rows_are_brought_near_unit_norm() {
        // rows: [1000, 0.001], [1, 1]
        let row_ptr = [0, 2, 4];
        let col_idx = [0, 1, 0, 1];
        let mut vals = [1000.0, 0.001, 1.0, 1.0];
        let mut q = [1.0, 1.0];
        let s = equilibrate(2, &row_ptr, &col_idx, &mut vals, &mut q, 2, 25);
        let max = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(max <= 1.0 + 1e-9 && max > 0.5);
        assert!(s.d.iter().chain(&s.e).all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn cone_block_shares_one_factor() {
        let row_ptr = [0, 1, 2, 3, 4];
        let col_idx = [0, 1, 2, 3];
        let mut vals = [1.0, 100.0, 2.0f64.sqrt(), 0.01];
        let mut q = [0.0; 4];
        let s = equilibrate(4, &row_ptr, &col_idx, &mut vals, &mut q, 0, 10);
        assert!(s.e.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
    }
}
