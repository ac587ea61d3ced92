//! Operator-splitting solver for the continuous relaxation of a
//! [`ConicProgram`].
//!
//! All constraints are written as `z = A x` with `z` in a product set `C`:
//! intervals for equality, inequality and column-bound rows, and a rotated
//! cone for every 4-row cone block `(x_v, x_l, sqrt2 x_P, sqrt2 x_Q)`. The
//! iteration is the alternating-direction scheme of OSQP with the box
//! projection generalized to cones:
//!
//! ```text
//! (x~, nu) = KKT^-1 (sigma x - q, z - y / rho)
//! z~       = z + (nu - y) / rho
//! x        = alpha x~ + (1 - alpha) x
//! z+       = Proj_C(alpha z~ + (1 - alpha) z + y / rho)
//! y        = y + rho (alpha z~ + (1 - alpha) z - z+)
//! ```
//!
//! Infeasibility is detected from the limits of the successive differences
//! `dy` (primal) and `dx` (dual). A [`Solver`] owns the factored system and
//! the current iterate; column bounds can be changed without refactoring,
//! which is what branch-and-bound does between nodes.

pub mod cone;
mod kkt;
mod scaling;

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cone::project_rotated_cone;

use crate::program::ConicProgram;
use kkt::Kkt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Absolute and relative tolerance on the primal residual.
    pub eps_primal: f64,
    /// Absolute and relative tolerance on the dual residual.
    pub eps_dual: f64,
    /// Relative duality-gap tolerance.
    pub eps_gap: f64,
    /// Tolerance of the infeasibility certificates.
    pub eps_infeasible: f64,
    pub max_iters: usize,
    /// Ruiz equilibration on/off.
    pub scaling: bool,
    pub scaling_iters: usize,
    pub over_relaxation: f64,
    pub rho: f64,
    pub sigma: f64,
    pub adaptive_rho: bool,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
    /// Start from the previous iterate held by the [`Solver`].
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps_primal: 1e-6,
            eps_dual: 1e-6,
            eps_gap: 1e-6,
            eps_infeasible: 1e-4,
            max_iters: 100_000,
            scaling: true,
            scaling_iters: 15,
            over_relaxation: 1.6,
            rho: 0.1,
            sigma: 1e-6,
            adaptive_rho: true,
            check_every: 10,
            warm_start: true,
        }
    }
}

impl SolverSettings {
    /// Same settings with every tolerance set to `eps`.
    pub fn with_tolerance(mut self, eps: f64) -> Self {
        self.eps_primal = eps;
        self.eps_dual = eps;
        self.eps_gap = eps;
        self
    }

    fn check(&self) -> Result<(), SolverError> {
        let tolerances = [self.eps_primal, self.eps_dual, self.eps_gap, self.eps_infeasible];
        if tolerances.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(SolverError::Settings("tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.check_every == 0 {
            return Err(SolverError::Settings("iteration counts must be >= 1".into()));
        }
        if !(self.over_relaxation > 0.0 && self.over_relaxation < 2.0) {
            return Err(SolverError::Settings("over-relaxation must lie in (0, 2)".into()));
        }
        if !(self.rho > 0.0 && self.sigma > 0.0) {
            return Err(SolverError::Settings("rho and sigma must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    /// Absolute gap between primal and dual objectives.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Multipliers of the equality rows.
    pub y_eq: Vec<f64>,
    /// Multipliers of the `<=` rows, nonnegative at optimality.
    pub y_ineq: Vec<f64>,
    /// Multipliers of the column bounds, zero for free columns.
    pub y_bounds: Vec<f64>,
    pub y_cones: Vec<[f64; 4]>,
    /// `c'x` in the program's maximization sense.
    pub objective: f64,
    /// Dual bound in the maximization sense.
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Largest `(P^2 + Q^2) / (v l)` over the cones, clipped to `[0, 1]`.
    pub cone_tightness: f64,
    /// Normalized residual of the infeasibility certificate, when one was
    /// found.
    pub certificate_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("linear system factorization failed: {0}")]
    Factorization(String),
    #[error("invalid solver settings: {0}")]
    Settings(String),
    #[error("malformed program: {0}")]
    Malformed(String),
}

/// Solver state in scaled coordinates. Only meaningful for the [`Solver`]
/// that produced it or a clone of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// One-shot solve of the continuous relaxation. Integrality marks are
/// ignored.
pub fn solve(program: &ConicProgram, settings: SolverSettings) -> Result<SolveResult, SolverError> {
    Solver::new(program, settings)?.solve()
}

/// Compressed rows.
#[derive(Debug, Clone)]
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

/// Compressed columns.
#[derive(Debug, Clone)]
struct Csc {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csc {
    fn from_rows(rows: &Csr, n: usize) -> Self {
        let mut count = vec![0usize; n + 1];
        for &j in &rows.idx {
            count[j + 1] += 1;
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let ptr = count.clone();
        let mut next = count;
        let mut idx = vec![0; rows.idx.len()];
        let mut val = vec![0.0; rows.idx.len()];
        for i in 0..rows.ptr.len() - 1 {
            for k in rows.ptr[i]..rows.ptr[i + 1] {
                let j = rows.idx[k];
                idx[next[j]] = i;
                val[next[j]] = rows.val[k];
                next[j] += 1;
            }
        }
        Self { ptr, idx, val }
    }

    /// `out = A x`.
    fn mul(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for k in self.ptr[j]..self.ptr[j + 1] {
                    out[self.idx[k]] += self.val[k] * xj;
                }
            }
        }
    }

    /// `out = A' y`.
    fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (self.ptr[j]..self.ptr[j + 1])
                .map(|k| self.val[k] * y[self.idx[k]])
                .sum();
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Workspace holding the scaled problem, its factorization and the current
/// iterate. Cloning is cheap relative to a factorization: the symbolic
/// analysis is shared.
#[derive(Debug, Clone)]
pub struct Solver {
    settings: SolverSettings,
    n: usize,
    m: usize,
    n_eq: usize,
    n_ineq: usize,
    cone_start: usize,
    cols: Csc,
    /// Scaled minimization cost.
    q: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
    root_l: Vec<f64>,
    root_u: Vec<f64>,
    bound_row: Vec<Option<usize>>,
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
    rho: f64,
    rho_vec: Vec<f64>,
    kkt: Kkt,
    iterate: Iterate,
    cones: Vec<crate::program::RotatedCone>,
}

impl Solver {
    pub fn new(program: &ConicProgram, settings: SolverSettings) -> Result<Self, SolverError> {
        settings.check()?;
        let n = program.n_cols();
        if program.lower.len() != n || program.upper.len() != n {
            return Err(SolverError::Malformed("bound vectors differ in length from the objective".into()));
        }
        let mut ptr = vec![0usize];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        let mut l = Vec::new();
        let mut u = Vec::new();
        let mut push_row = |coeffs: &[(usize, f64)], lo: f64, hi: f64| {
            for &(j, a) in coeffs {
                idx.push(j);
                val.push(a);
            }
            ptr.push(idx.len());
            l.push(lo);
            u.push(hi);
        };
        let check_cols = |coeffs: &[(usize, f64)]| coeffs.iter().all(|&(j, a)| j < n && a.is_finite());
        for r in &program.equalities {
            if !check_cols(&r.coeffs) || !r.rhs.is_finite() {
                return Err(SolverError::Malformed(format!("bad {:?} equality row", r.family)));
            }
            push_row(&r.coeffs, r.rhs, r.rhs);
        }
        for r in &program.inequalities {
            if !check_cols(&r.coeffs) || r.rhs.is_nan() {
                return Err(SolverError::Malformed(format!("bad {:?} inequality row", r.family)));
            }
            push_row(&r.coeffs, f64::NEG_INFINITY, r.rhs);
        }
        let discrete: std::collections::HashSet<usize> = program.discrete_columns().collect();
        let mut bound_row = vec![None; n];
        let mut next_row = program.equalities.len() + program.inequalities.len();
        for j in 0..n {
            let (lo, hi) = (program.lower[j], program.upper[j]);
            if lo.is_nan() || hi.is_nan() {
                return Err(SolverError::Malformed(format!("NaN bound on column {j}")));
            }
            if lo.is_finite() || hi.is_finite() || discrete.contains(&j) {
                push_row(&[(j, 1.0)], lo, hi);
                bound_row[j] = Some(next_row);
                next_row += 1;
            }
        }
        let cone_start = next_row;
        for k in &program.cones {
            let cols = [k.u, k.v, k.w[0], k.w[1]];
            if cols.iter().any(|&j| j >= n) {
                return Err(SolverError::Malformed("cone references a missing column".into()));
            }
            push_row(&[(k.u, 1.0)], f64::NEG_INFINITY, f64::INFINITY);
            push_row(&[(k.v, 1.0)], f64::NEG_INFINITY, f64::INFINITY);
            push_row(&[(k.w[0], SQRT_2)], f64::NEG_INFINITY, f64::INFINITY);
            push_row(&[(k.w[1], SQRT_2)], f64::NEG_INFINITY, f64::INFINITY);
        }
        let m = l.len();
        let mut rows = Csr { ptr, idx, val };
        let mut q: Vec<f64> = program.objective.iter().map(|c| -c).collect();
        let scale = if settings.scaling {
            scaling::equilibrate(
                n,
                &rows.ptr,
                &rows.idx,
                &mut rows.val,
                &mut q,
                cone_start,
                settings.scaling_iters,
            )
        } else {
            scaling::Scaling::identity(n, m)
        };
        let l: Vec<f64> = l.iter().zip(&scale.e).map(|(v, e)| v * e).collect();
        let u: Vec<f64> = u.iter().zip(&scale.e).map(|(v, e)| v * e).collect();
        let rho_vec = rho_vector(&l, &u, cone_start, settings.rho);
        Ok(Self {
            settings,
            n,
            m,
            n_eq: program.equalities.len(),
            n_ineq: program.inequalities.len(),
            cone_start,
            cols: Csc::from_rows(&rows, n),
            q,
            root_l: l.clone(),
            root_u: u.clone(),
            l,
            u,
            bound_row,
            d: scale.d,
            e: scale.e,
            c: scale.c,
            rho: settings.rho,
            rho_vec: rho_vec.clone(),
            kkt: Kkt::new(n, &rows.ptr, &rows.idx, &rows.val, settings.sigma, &rho_vec)?,
            iterate: Iterate {
                x: vec![0.0; n],
                z: vec![0.0; m],
                y: vec![0.0; m],
                rho: settings.rho,
            },
            cones: program.cones.clone(),
        })
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn set_settings(&mut self, settings: SolverSettings) -> Result<(), SolverError> {
        settings.check()?;
        if settings.sigma != self.settings.sigma || settings.scaling != self.settings.scaling {
            return Err(SolverError::Settings(
                "sigma and scaling are fixed when the workspace is built".into(),
            ));
        }
        self.settings = settings;
        Ok(())
    }

    fn rho_vector(&self, rho: f64) -> Vec<f64> {
        rho_vector(&self.l, &self.u, self.cone_start, rho)
    }

    fn update_rho(&mut self, rho: f64) -> Result<(), SolverError> {
        self.rho = rho;
        let new = self.rho_vector(rho);
        if new != self.rho_vec {
            self.rho_vec = new;
            self.kkt.set_rho(&self.rho_vec)?;
        }
        Ok(())
    }

    /// Replaces the bounds of a column, in original units. The column must
    /// have had a finite bound or an integrality mark when the workspace was
    /// built.
    pub fn set_column_bounds(&mut self, col: usize, lo: f64, hi: f64) -> Result<(), SolverError> {
        let i = self.bound_row[col]
            .ok_or_else(|| SolverError::Malformed(format!("column {col} carries no bound row")))?;
        let was_fixed = self.l[i] == self.u[i];
        self.l[i] = lo * self.e[i];
        self.u[i] = hi * self.e[i];
        if was_fixed != (lo == hi) {
            let rho = self.rho;
            self.rho_vec[i] = self.rho_vector(rho)[i];
            self.kkt.set_rho(&self.rho_vec)?;
        }
        Ok(())
    }

    /// Applies several bound changes with at most one refactorization.
    pub fn set_many_column_bounds(
        &mut self,
        changes: impl IntoIterator<Item = (usize, f64, f64)>,
    ) -> Result<(), SolverError> {
        let mut refactor = false;
        for (col, lo, hi) in changes {
            let i = self.bound_row[col]
                .ok_or_else(|| SolverError::Malformed(format!("column {col} carries no bound row")))?;
            refactor |= (self.l[i] == self.u[i]) != (lo == hi);
            self.l[i] = lo * self.e[i];
            self.u[i] = hi * self.e[i];
        }
        if refactor {
            self.rho_vec = self.rho_vector(self.rho);
            self.kkt.set_rho(&self.rho_vec)?;
        }
        Ok(())
    }

    /// Restores every column bound to its value at construction.
    pub fn reset_bounds(&mut self) -> Result<(), SolverError> {
        let fixed_before: Vec<bool> = (0..self.m).map(|i| self.l[i] == self.u[i]).collect();
        self.l.clone_from(&self.root_l);
        self.u.clone_from(&self.root_u);
        if (0..self.m).any(|i| fixed_before[i] != (self.l[i] == self.u[i])) {
            self.rho_vec = self.rho_vector(self.rho);
            self.kkt.set_rho(&self.rho_vec)?;
        }
        Ok(())
    }

    pub fn column_bounds(&self, col: usize) -> (f64, f64) {
        match self.bound_row[col] {
            Some(i) => (self.l[i] / self.e[i], self.u[i] / self.e[i]),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn iterate(&self) -> Iterate {
        self.iterate.clone()
    }

    pub fn set_iterate(&mut self, iterate: Iterate) -> Result<(), SolverError> {
        if iterate.x.len() != self.n || iterate.y.len() != self.m {
            return Err(SolverError::Malformed("iterate from a different workspace".into()));
        }
        self.iterate = iterate;
        Ok(())
    }

    /// Zeroes the iterate and resets the step size.
    pub fn cold_start(&mut self) -> Result<(), SolverError> {
        self.iterate = Iterate {
            x: vec![0.0; self.n],
            z: vec![0.0; self.m],
            y: vec![0.0; self.m],
            rho: self.settings.rho,
        };
        self.update_rho(self.settings.rho)
    }

    fn project(&self, w: &mut [f64]) {
        for i in 0..self.cone_start {
            w[i] = w[i].clamp(self.l[i], self.u[i]);
        }
        for block in w[self.cone_start..].chunks_exact_mut(4) {
            cone::project_in_place(block);
        }
    }

    /// Runs the iteration from the held iterate (or from zero when warm
    /// starting is off) until a termination criterion fires.
    pub fn solve(&mut self) -> Result<SolveResult, SolverError> {
        if !self.settings.warm_start {
            self.cold_start()?;
        } else if self.iterate.rho != self.rho {
            self.update_rho(self.iterate.rho)?;
        }
        let (n, m) = (self.n, self.m);
        let alpha = self.settings.over_relaxation;
        let sigma = self.settings.sigma;
        let dim = self.kkt.dim();
        let mut rhs = vec![0.0; dim];
        let mut work = vec![0.0; dim];
        let mut x = std::mem::take(&mut self.iterate.x);
        let mut z = std::mem::take(&mut self.iterate.z);
        let mut y = std::mem::take(&mut self.iterate.y);
        let mut x_prev = x.clone();
        let mut y_prev = y.clone();
        let mut zr = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut ax = vec![0.0; m];
        let mut aty = vec![0.0; n];
        let mut status = SolveStatus::IterLimit;
        let mut certificate = None;
        let mut iterations = 0;
        let mut metrics = Metrics::default();
        let mut adapt_interval = 5 * self.settings.check_every;
        let mut next_adapt = adapt_interval;

        for iter in 1..=self.settings.max_iters {
            iterations = iter;
            for j in 0..n {
                rhs[j] = sigma * x[j] - self.q[j];
            }
            for i in 0..m {
                rhs[n + i] = z[i] - y[i] / self.rho_vec[i];
            }
            self.kkt.solve(&mut rhs, &mut work);
            for j in 0..n {
                x[j] = alpha * rhs[j] + (1.0 - alpha) * x[j];
            }
            for i in 0..m {
                let zt = z[i] + (rhs[n + i] - y[i]) / self.rho_vec[i];
                zr[i] = alpha * zt + (1.0 - alpha) * z[i];
                w[i] = zr[i] + y[i] / self.rho_vec[i];
            }
            self.project(&mut w);
            for i in 0..m {
                y[i] += self.rho_vec[i] * (zr[i] - w[i]);
            }
            std::mem::swap(&mut z, &mut w);

            let last = iter == self.settings.max_iters;
            if iter % self.settings.check_every != 0 && !last {
                continue;
            }
            if x.iter().chain(&y).any(|v| !v.is_finite()) {
                return Err(SolverError::Factorization("iterate diverged to non-finite values".into()));
            }
            self.cols.mul(&x, &mut ax);
            self.cols.mul_t(&y, &mut aty);
            metrics = self.metrics(&x, &z, &y, &ax, &aty);
            if metrics.converged(&self.settings) {
                status = SolveStatus::Optimal;
                break;
            }
            if let Some(q) = self.primal_infeasibility(&y, &y_prev) {
                status = SolveStatus::Infeasible;
                certificate = Some(q);
                break;
            }
            if let Some(q) = self.dual_infeasibility(&x, &x_prev) {
                status = SolveStatus::Unbounded;
                certificate = Some(q);
                break;
            }
            if self.settings.adaptive_rho && iter >= next_adapt {
                let proposed = self.proposed_rho(&z, &ax, &aty, &x, &y);
                next_adapt = iter + adapt_interval;
                if proposed > 5.0 * self.rho || proposed < 0.2 * self.rho {
                    self.update_rho(proposed)?;
                    // Back off after every change so rho cannot bounce
                    // between two values faster than the iterates settle.
                    adapt_interval *= 2;
                    next_adapt = iter + adapt_interval;
                }
            }
            // Certificates are tested on the change since the previous check.
            x_prev.copy_from_slice(&x);
            y_prev.copy_from_slice(&y);
        }

        let result = self.package(status, &x, &y, metrics, iterations, certificate);
        self.iterate = Iterate { x, z, y, rho: self.rho };
        Ok(result)
    }

    fn metrics(&self, x: &[f64], z: &[f64], y: &[f64], ax: &[f64], aty: &[f64]) -> Metrics {
        let mut r_p = 0.0f64;
        let mut ax_n = 0.0f64;
        let mut z_n = 0.0f64;
        for i in 0..self.m {
            let inv = 1.0 / self.e[i];
            r_p = r_p.max(((ax[i] - z[i]) * inv).abs());
            ax_n = ax_n.max((ax[i] * inv).abs());
            z_n = z_n.max((z[i] * inv).abs());
        }
        let mut r_d = 0.0f64;
        let mut aty_n = 0.0f64;
        let mut q_n = 0.0f64;
        let mut primal = 0.0;
        for j in 0..self.n {
            let inv = 1.0 / (self.d[j] * self.c);
            r_d = r_d.max(((self.q[j] + aty[j]) * inv).abs());
            aty_n = aty_n.max((aty[j] * inv).abs());
            q_n = q_n.max((self.q[j] * inv).abs());
            primal += self.q[j] * x[j];
        }
        primal /= self.c;
        // Dual objective: -support_C(y), with z standing in where the
        // support is infinite.
        let mut support = 0.0;
        for i in 0..self.m {
            let yi = y[i] * self.e[i] / self.c;
            let zi = z[i] / self.e[i];
            let bound = if i >= self.cone_start {
                zi
            } else if yi > 0.0 {
                if self.u[i].is_finite() { self.u[i] / self.e[i] } else { zi }
            } else if self.l[i].is_finite() {
                self.l[i] / self.e[i]
            } else {
                zi
            };
            support += yi * bound;
        }
        Metrics {
            r_p,
            r_d,
            ax_n,
            z_n,
            aty_n,
            q_n,
            primal,
            dual: -support,
        }
    }

    fn proposed_rho(&self, z: &[f64], ax: &[f64], aty: &[f64], _x: &[f64], y: &[f64]) -> f64 {
        let r_p = ax.iter().zip(z).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let norm_p = inf_norm(ax).max(inf_norm(z)).max(1e-30);
        let r_d = self.q.iter().zip(aty).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
        let norm_d = inf_norm(aty).max(inf_norm(&self.q)).max(1e-30);
        let _ = y;
        let ratio = (r_p / norm_p) / (r_d / norm_d).max(1e-30);
        (self.rho * ratio.sqrt()).clamp(1e-6, 1e6)
    }

    fn primal_infeasibility(&self, y: &[f64], y_prev: &[f64]) -> Option<f64> {
        let eps = self.settings.eps_infeasible;
        let dy: Vec<f64> = (0..self.m).map(|i| (y[i] - y_prev[i]) * self.e[i] / self.c).collect();
        let dy_n = inf_norm(&dy);
        if dy_n < 1e-12 {
            return None;
        }
        // A' dy in original units: D^-1 Abar' dybar / c.
        let dybar: Vec<f64> = (0..self.m).map(|i| y[i] - y_prev[i]).collect();
        let mut at = vec![0.0; self.n];
        self.cols.mul_t(&dybar, &mut at);
        let at_n = (0..self.n).fold(0.0f64, |m, j| m.max((at[j] / (self.d[j] * self.c)).abs()));
        if at_n > eps * dy_n {
            return None;
        }
        let mut support = 0.0;
        for i in 0..self.cone_start {
            let v = dy[i];
            if v.abs() <= eps * dy_n * 1e-3 {
                continue;
            }
            let b = if v > 0.0 { self.u[i] } else { self.l[i] };
            if !b.is_finite() {
                return None;
            }
            support += v * b / self.e[i];
        }
        for block in dy[self.cone_start..].chunks_exact(4) {
            if cone::polar_distance(block) > eps * dy_n {
                return None;
            }
        }
        (support < -eps * dy_n).then_some(at_n / dy_n)
    }

    fn dual_infeasibility(&self, x: &[f64], x_prev: &[f64]) -> Option<f64> {
        let eps = self.settings.eps_infeasible;
        let dxbar: Vec<f64> = (0..self.n).map(|j| x[j] - x_prev[j]).collect();
        let dx_n = (0..self.n).fold(0.0f64, |m, j| m.max((dxbar[j] * self.d[j]).abs()));
        if dx_n < 1e-12 {
            return None;
        }
        let q_dx: f64 = (0..self.n).map(|j| self.q[j] * dxbar[j]).sum::<f64>() / self.c;
        if q_dx >= -eps * dx_n {
            return None;
        }
        let mut adx = vec![0.0; self.m];
        self.cols.mul(&dxbar, &mut adx);
        for i in 0..self.m {
            adx[i] /= self.e[i];
        }
        for i in 0..self.cone_start {
            if self.u[i].is_finite() && adx[i] > eps * dx_n {
                return None;
            }
            if self.l[i].is_finite() && adx[i] < -eps * dx_n {
                return None;
            }
        }
        for block in adx[self.cone_start..].chunks_exact(4) {
            if cone::distance(block) > eps * dx_n {
                return None;
            }
        }
        Some(-q_dx / dx_n)
    }

    fn package(
        &self,
        status: SolveStatus,
        x: &[f64],
        y: &[f64],
        metrics: Metrics,
        iterations: usize,
        certificate: Option<f64>,
    ) -> SolveResult {
        let x_un: Vec<f64> = x.iter().zip(&self.d).map(|(v, d)| v * d).collect();
        let y_un: Vec<f64> = (0..self.m).map(|i| y[i] * self.e[i] / self.c).collect();
        let n_lin = self.n_eq + self.n_ineq;
        let y_bounds = self
            .bound_row
            .iter()
            .map(|r| r.map_or(0.0, |i| y_un[i]))
            .collect();
        let y_cones = y_un[self.cone_start..]
            .chunks_exact(4)
            .map(|b| [b[0], b[1], b[2], b[3]])
            .collect();
        SolveResult {
            status,
            objective: -metrics_primal(&self.q, x, self.c),
            dual_objective: -metrics.dual,
            residuals: Residuals {
                primal: metrics.r_p,
                dual: metrics.r_d,
                gap: (metrics.primal - metrics.dual).abs(),
            },
            y_eq: y_un[..self.n_eq].to_vec(),
            y_ineq: y_un[self.n_eq..n_lin].to_vec(),
            y_bounds,
            y_cones,
            iterations,
            cone_tightness: cone_tightness(&self.cones, &x_un),
            certificate_residual: certificate,
            x: x_un,
        }
    }
}

/// Equality rows get a stiffer step, free rows a tiny one, cone blocks a
/// uniform one.
fn rho_vector(l: &[f64], u: &[f64], cone_start: usize, rho: f64) -> Vec<f64> {
    (0..l.len())
        .map(|i| {
            if i >= cone_start {
                rho
            } else if l[i] == u[i] {
                (rho * 1e3).min(1e6)
            } else if l[i] == f64::NEG_INFINITY && u[i] == f64::INFINITY {
                1e-6
            } else {
                rho
            }
        })
        .collect()
}

fn metrics_primal(q: &[f64], x: &[f64], c: f64) -> f64 {
    q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / c
}

/// Largest `(w0^2 + w1^2) / (u v)` over the cones, clipped to `[0, 1]`. A
/// cone with `u v = 0` and zero flow counts as tight.
pub fn cone_tightness(cones: &[crate::program::RotatedCone], x: &[f64]) -> f64 {
    cones
        .iter()
        .map(|k| {
            let lhs = x[k.u] * x[k.v];
            let rhs = x[k.w[0]].powi(2) + x[k.w[1]].powi(2);
            if lhs <= 1e-14 {
                1.0
            } else {
                (rhs / lhs).clamp(0.0, 1.0)
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Default)]
struct Metrics {
    r_p: f64,
    r_d: f64,
    ax_n: f64,
    z_n: f64,
    aty_n: f64,
    q_n: f64,
    primal: f64,
    dual: f64,
}

impl Metrics {
    fn converged(&self, s: &SolverSettings) -> bool {
        let eps_p = s.eps_primal * (1.0 + self.ax_n.max(self.z_n));
        let eps_d = s.eps_dual * (1.0 + self.aty_n.max(self.q_n));
        let gap_ok = (self.primal - self.dual).abs()
            <= s.eps_gap * (1.0 + self.primal.abs() + self.dual.abs());
        self.r_p <= eps_p && self.r_d <= eps_d && gap_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{RotatedCone, RowFamily};

    fn lp_1d() -> ConicProgram {
        // maximize x s.t. x <= 3, x >= 0
        let mut p = ConicProgram::with_columns(vec!["x".into()]);
        p.objective[0] = 1.0;
        p.lower[0] = 0.0;
        p.add_le(RowFamily::RampUp, vec![(0, 1.0)], 3.0);
        p
    }

    #[test]
    fn one_dimensional_lp() {
        let r = solve(&lp_1d(), SolverSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-5, "{}", r.x[0]);
        assert!((r.objective - 3.0).abs() < 1e-5);
        assert!(r.y_ineq[0] > 0.0);
    }

    /// `2 u v >= w^2` with `u = v = 1` forces `w <= sqrt2`; asking `w >= 3`
    /// is infeasible. In the program's convention the cone reads
    /// `x_u x_v >= w0^2 + w1^2`, so `u` is fixed to 2.
    fn infeasible_cone() -> ConicProgram {
        let mut p = ConicProgram::with_columns(vec!["u".into(), "v".into(), "w".into(), "o".into()]);
        p.objective = vec![-1.0, -1.0, 0.0, 0.0];
        p.fix(0, 2.0);
        p.fix(1, 1.0);
        p.fix(3, 0.0);
        p.lower[2] = 3.0;
        p.add_cone(RotatedCone { u: 0, v: 1, w: [2, 3] });
        p
    }

    #[test]
    fn hand_built_cone_program_is_certified_infeasible() {
        let r = solve(&infeasible_cone(), SolverSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.certificate_residual.unwrap() <= SolverSettings::default().eps_infeasible);
    }

    #[test]
    fn cone_program_reaches_boundary() {
        // maximize w s.t. u = 2, v = 1, u v >= w^2  ->  w = sqrt2
        let mut p = infeasible_cone();
        p.lower[2] = f64::NEG_INFINITY;
        p.objective = vec![0.0, 0.0, 1.0, 0.0];
        let r = solve(&p, SolverSettings::default().with_tolerance(1e-8)).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[2] - SQRT_2).abs() < 1e-6, "{}", r.x[2]);
        assert!((r.cone_tightness - 1.0).abs() < 1e-5);
    }

    #[test]
    fn unbounded_lp_is_detected() {
        let mut p = ConicProgram::with_columns(vec!["x".into(), "y".into()]);
        p.objective = vec![1.0, 0.0];
        p.lower = vec![0.0, 0.0];
        p.add_le(RowFamily::RampUp, vec![(0, -1.0), (1, 1.0)], 1.0);
        let r = solve(&p, SolverSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_constrained_lp_matches_hand_solution() {
        // maximize 2a + b s.t. a + b = 1, a <= 0.7, a, b >= 0
        let mut p = ConicProgram::with_columns(vec!["a".into(), "b".into()]);
        p.objective = vec![2.0, 1.0];
        p.lower = vec![0.0, 0.0];
        p.upper = vec![0.7, f64::INFINITY];
        p.add_eq(RowFamily::RealBalance, vec![(0, 1.0), (1, 1.0)], 1.0);
        let r = solve(&p, SolverSettings::default().with_tolerance(1e-9)).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[0] - 0.7).abs() < 1e-7 && (r.x[1] - 0.3).abs() < 1e-7);
        assert!((r.objective - r.dual_objective).abs() < 1e-6);
    }

    #[test]
    fn scaling_does_not_move_the_solution() {
        let mut p = ConicProgram::with_columns(vec!["a".into(), "b".into(), "l".into(), "o".into()]);
        // maximize a + 10 b - l with a 1e3-scaled row and l >= |b|.
        p.objective = vec![1.0, 10.0, -1.0, 0.0];
        p.lower = vec![0.0, 0.0, 0.0, 0.0];
        p.upper = vec![f64::INFINITY, f64::INFINITY, 1.0, 0.0];
        p.add_le(RowFamily::RampUp, vec![(0, 1000.0), (1, 2000.0)], 1500.0);
        p.add_cone(RotatedCone { u: 2, v: 2, w: [1, 3] });
        let eps = 1e-8;
        let on = solve(&p, SolverSettings::default().with_tolerance(eps)).unwrap();
        let mut off_settings = SolverSettings::default().with_tolerance(eps);
        off_settings.scaling = false;
        let off = solve(&p, off_settings).unwrap();
        assert_eq!(on.status, SolveStatus::Optimal);
        assert_eq!(off.status, SolveStatus::Optimal);
        for (a, b) in on.x.iter().zip(&off.x) {
            assert!((a - b).abs() <= 10.0 * eps, "{a} vs {b}");
        }
    }

    #[test]
    fn bound_changes_reuse_the_factorization() {
        let mut solver = Solver::new(&lp_1d(), SolverSettings::default()).unwrap();
        let first = solver.solve().unwrap();
        solver.set_column_bounds(0, 0.0, 1.0).unwrap();
        let second = solver.solve().unwrap();
        assert!((first.x[0] - 3.0).abs() < 1e-5);
        assert!((second.x[0] - 1.0).abs() < 1e-5);
        solver.reset_bounds().unwrap();
        assert_eq!(solver.column_bounds(0), (0.0, f64::INFINITY));
    }

    #[test]
    fn bad_settings_are_rejected() {
        let mut s = SolverSettings::default();
        s.eps_primal = 0.0;
        assert!(matches!(solve(&lp_1d(), s), Err(SolverError::Settings(_))));
    }
}
