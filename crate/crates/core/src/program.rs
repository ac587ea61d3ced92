//! Standard-form mixed-integer conic program.
//!
//! ```text
//! maximize    c'x
//! subject to  A_eq x  = b_eq
//!             A_in x <= b_in
//!             lower <= x <= upper
//!             x_u * x_v >= x_w0^2 + x_w1^2,  x_u, x_v >= 0   (each cone)
//!             x_j in {0, 1}  (binaries),  x_j in N_0  (integers)
//! ```

use std::fmt::Write as _;

use serde::Serialize;

/// What a constraint row models. Used for counting, diagnostics and the
/// dump format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RowFamily {
    RealBalance,
    ReactiveBalance,
    VoltageDrop,
    FuelRecursion,
    RampUp,
    RampDown,
    FirstStepRamp,
    GeneratorInjection,
    LoadRealInjection,
    LoadReactiveInjection,
    PickupMonotone,
    ChargeLimit,
    DischargeLimit,
    EssInjection,
    SocRecursion,
    SocWindowUpper,
    SocWindowLower,
    SocTransfer,
    LowerBoundEvolution,
    UpperBoundEvolution,
    LowerBoundTerminal,
    UpperBoundTerminal,
    LowerConservation,
    UpperConservation,
    TravelLower,
    TravelUpper,
    TravelBoxLower,
    TravelBoxUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub family: RowFamily,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// `x_u * x_v >= x_w[0]^2 + x_w[1]^2` with `x_u, x_v >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RotatedCone {
    pub u: usize,
    pub v: usize,
    pub w: [usize; 2],
}

impl RotatedCone {
    /// `max(0, w0^2 + w1^2 - u v)` plus any negativity of `u` or `v`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let (u, v) = (x[self.u], x[self.v]);
        let excess = x[self.w[0]].powi(2) + x[self.w[1]].powi(2) - u * v;
        excess.max(0.0).max(-u).max(-v)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConicProgram {
    /// Maximization weights.
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub equalities: Vec<Row>,
    pub inequalities: Vec<Row>,
    pub cones: Vec<RotatedCone>,
    pub binaries: Vec<usize>,
    pub integers: Vec<usize>,
    pub names: Vec<String>,
}

/// Worst violations of a point, by constraint class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PointViolation {
    pub equality: f64,
    pub inequality: f64,
    pub bounds: f64,
    pub cone: f64,
}

impl PointViolation {
    pub fn max(&self) -> f64 {
        self.equality.max(self.inequality).max(self.bounds).max(self.cone)
    }
}

impl ConicProgram {
    pub fn with_columns(names: Vec<String>) -> Self {
        let n = names.len();
        Self {
            objective: vec![0.0; n],
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            names,
            ..Self::default()
        }
    }

    pub fn n_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, family: RowFamily, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push(Row {
            coeffs: merge(coeffs),
            rhs,
            family,
        });
    }

    pub fn add_le(&mut self, family: RowFamily, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.inequalities.push(Row {
            coeffs: merge(coeffs),
            rhs,
            family,
        });
    }

    pub fn set_bounds(&mut self, col: usize, lo: f64, hi: f64) {
        self.lower[col] = lo;
        self.upper[col] = hi;
    }

    pub fn fix(&mut self, col: usize, value: f64) {
        self.set_bounds(col, value, value);
    }

    pub fn add_cone(&mut self, cone: RotatedCone) {
        self.cones.push(cone);
    }

    pub fn is_integer_column(&self, col: usize) -> bool {
        self.binaries.contains(&col) || self.integers.contains(&col)
    }

    /// Binary columns first, then integer columns.
    pub fn discrete_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.binaries.iter().chain(&self.integers).copied()
    }

    /// The continuous relaxation: integrality marks dropped, bounds kept.
    pub fn relaxed(&self) -> Self {
        let mut p = self.clone();
        p.binaries.clear();
        p.integers.clear();
        p
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn count_rows(&self, family: RowFamily) -> usize {
        self.equalities
            .iter()
            .chain(&self.inequalities)
            .filter(|r| r.family == family)
            .count()
    }

    /// Discrete columns whose value is farther than `tol` from an integer.
    pub fn fractional_columns(&self, x: &[f64], tol: f64) -> Vec<usize> {
        self.discrete_columns()
            .filter(|&j| (x[j] - x[j].round()).abs() > tol)
            .collect()
    }

    pub fn violation(&self, x: &[f64]) -> PointViolation {
        let equality = self
            .equalities
            .iter()
            .map(|r| (r.activity(x) - r.rhs).abs())
            .fold(0.0, f64::max);
        let inequality = self
            .inequalities
            .iter()
            .map(|r| (r.activity(x) - r.rhs).max(0.0))
            .fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        let cone = self.cones.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        PointViolation {
            equality,
            inequality,
            bounds,
            cone,
        }
    }

    /// Plain-text dump: column-major triplets for both constraint blocks,
    /// then bounds, cones and integrality marks. Infinite bounds print as
    /// `inf`/`-inf`. Stable for a given program.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# maximize c'x; cols {} eq {} le {} cones {}",
            self.n_cols(),
            self.equalities.len(),
            self.inequalities.len(),
            self.cones.len()
        );
        for (j, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "n {j} {name}");
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                let _ = writeln!(out, "c {j} {c:e}");
            }
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            let _ = writeln!(out, "b {j} {} {}", fmt_bound(*lo), fmt_bound(*hi));
        }
        for (tag, rows) in [("E", &self.equalities), ("I", &self.inequalities)] {
            let mut triplets: Vec<(usize, usize, f64)> = rows
                .iter()
                .enumerate()
                .flat_map(|(i, r)| r.coeffs.iter().map(move |&(j, a)| (j, i, a)))
                .collect();
            triplets.sort_by_key(|&(j, i, _)| (j, i));
            for (j, i, a) in triplets {
                let _ = writeln!(out, "{tag} {i} {j} {a:e}");
            }
            for (i, r) in rows.iter().enumerate() {
                let _ = writeln!(out, "{} {i} {:e} {:?}", tag.to_lowercase(), r.rhs, r.family);
            }
        }
        for k in &self.cones {
            let _ = writeln!(out, "K {} {} {} {}", k.u, k.v, k.w[0], k.w[1]);
        }
        for &j in &self.binaries {
            let _ = writeln!(out, "B {j}");
        }
        for &j in &self.integers {
            let _ = writeln!(out, "Z {j}");
        }
        out
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}

fn merge(mut coeffs: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    coeffs.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_coefficients_are_merged() {
        let mut p = ConicProgram::with_columns(vec!["a".into(), "b".into()]);
        p.add_eq(RowFamily::SocRecursion, vec![(1, 1.0), (0, 2.0), (1, -1.0)], 0.0);
        assert_eq!(p.equalities[0].coeffs, vec![(0, 2.0)]);
    }

    #[test]
    fn cone_violation_is_zero_on_boundary() {
        let k = RotatedCone { u: 0, v: 1, w: [2, 3] };
        let x = [1.0, 0.0169, 0.12, 0.05];
        assert!(k.violation(&x) < 1e-15);
        assert!(k.violation(&[0.5, 0.0, 0.0, 0.0]) == 0.0);
        assert!(k.violation(&[1.0, 0.01, 0.12, 0.05]) > 0.0);
    }

    #[test]
    fn relaxation_keeps_bounds() {
        let mut p = ConicProgram::with_columns(vec!["d".into()]);
        p.set_bounds(0, 0.0, 1.0);
        p.binaries.push(0);
        let r = p.relaxed();
        assert!(r.binaries.is_empty());
        assert_eq!((r.lower[0], r.upper[0]), (0.0, 1.0));
        assert_eq!(p.fractional_columns(&[0.4], 1e-5), vec![0]);
        assert!(p.fractional_columns(&[1.0 - 1e-7], 1e-5).is_empty());
    }
}
