//! Brute-force optimum over every integral assignment of the discrete columns.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::program::ConicProgram;
use crate::socp::{SolveStatus, Solver, SolverSettings};

/// Limits of [`enumerate_optimal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationCaps {
    /// Upper value tried for every integer column, on top of its own bound.
    /// Needed when an integer column has no finite upper bound.
    pub integer_cap: Option<u32>,
    /// Largest number of assignments the oracle agrees to visit.
    pub max_assignments: u128,
    pub solver: SolverSettings,
    /// Worker threads; `0` uses the available parallelism.
    pub workers: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        Self {
            integer_cap: None,
            max_assignments: 1_000_000,
            solver: SolverSettings {
                max_iters: 200_000,
                ..SolverSettings::default().with_tolerance(1e-7)
            },
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumeratedOptimum {
    pub objective: f64,
    /// `(column, value)` for every discrete column, binaries first.
    pub assignment: Vec<(usize, f64)>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumeration {
    /// `None` when no assignment admits a feasible continuous completion.
    pub best: Option<EnumeratedOptimum>,
    pub assignments: u128,
    pub feasible: usize,
    /// Assignments whose solve stopped at the iteration limit.
    pub unresolved: usize,
}

impl Enumeration {
    pub fn objective(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.objective)
    }

    pub fn is_infeasible(&self) -> bool {
        self.best.is_none()
    }
}

/// Integer values tried for each discrete column, binaries first.
pub fn enumeration_domains(program: &ConicProgram, caps: &EnumerationCaps) -> Vec<(usize, Vec<f64>)> {
    program
        .discrete_columns()
        .map(|j| {
            let is_binary = program.binaries.contains(&j);
            let mut hi = if is_binary { program.upper[j].min(1.0) } else { program.upper[j] };
            if let (false, Some(cap)) = (is_binary, caps.integer_cap) {
                hi = hi.min(f64::from(cap));
            }
            let lo = if is_binary { program.lower[j].max(0.0) } else { program.lower[j] };
            let (lo, hi) = (lo.ceil(), hi.floor());
            let values = if lo.is_finite() && hi.is_finite() && lo <= hi {
                let n = (hi - lo) as u64 + 1;
                (0..n).map(|i| lo + i as f64).collect()
            } else if lo.is_finite() && hi.is_finite() {
                Vec::new()
            } else {
                vec![f64::NAN]
            };
            (j, values)
        })
        .collect()
}

/// Number of assignments, saturating at `u128::MAX` for unbounded domains.
pub fn domain_size(domains: &[(usize, Vec<f64>)]) -> u128 {
    domains.iter().fold(1u128, |acc, (_, values)| {
        if values.iter().any(|v| v.is_nan()) {
            u128::MAX
        } else {
            acc.saturating_mul(values.len() as u128)
        }
    })
}

/// Solves the continuous program for every integral assignment of the
/// discrete columns and keeps the best. Ties within `1e-9` relative go to
/// the lexicographically smallest assignment, so the answer does not depend
/// on how the work is split between threads.
pub fn enumerate_optimal(program: &ConicProgram, caps: &EnumerationCaps) -> Result<Enumeration> {
    let domains = enumeration_domains(program, caps);
    let product = domain_size(&domains);
    if product > caps.max_assignments {
        return Err(Error::DomainTooLarge {
            product,
            limit: caps.max_assignments,
        });
    }
    let total = product as usize;
    let base = Solver::new(program, caps.solver)?;
    let workers = match caps.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        w => w,
    }
    .clamp(1, total.max(1));

    let chunk = total.div_ceil(workers).max(1);
    let partials: Vec<Result<Partial>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (start, end) = (w * chunk, ((w + 1) * chunk).min(total));
                let mut solver = base.clone();
                let domains = &domains;
                scope.spawn(move || sweep(&mut solver, domains, start..end))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("enumeration worker panicked")).collect()
    });

    let mut out = Enumeration {
        best: None,
        assignments: product,
        feasible: 0,
        unresolved: 0,
    };
    for partial in partials {
        let partial = partial?;
        out.feasible += partial.feasible;
        out.unresolved += partial.unresolved;
        if let Some(candidate) = partial.best {
            out.best = Some(match out.best.take() {
                Some(current) if !better(&candidate, &current) => current,
                _ => candidate,
            });
        }
    }
    Ok(out)
}

#[derive(Default)]
struct Partial {
    best: Option<EnumeratedOptimum>,
    feasible: usize,
    unresolved: usize,
}

fn sweep(solver: &mut Solver, domains: &[(usize, Vec<f64>)], range: std::ops::Range<usize>) -> Result<Partial> {
    let mut partial = Partial::default();
    for code in range {
        let assignment = decode(domains, code);
        solver.set_many_column_bounds(assignment.iter().map(|&(j, v)| (j, v, v)))?;
        solver.cold_start()?;
        let result = solver.solve()?;
        match result.status {
            SolveStatus::Optimal => {
                partial.feasible += 1;
                let candidate = EnumeratedOptimum {
                    objective: result.objective,
                    assignment,
                    x: result.x,
                };
                if partial.best.as_ref().is_none_or(|b| better(&candidate, b)) {
                    partial.best = Some(candidate);
                }
            }
            SolveStatus::IterLimit => partial.unresolved += 1,
            SolveStatus::Infeasible | SolveStatus::Unbounded => {}
        }
    }
    Ok(partial)
}

/// Mixed-radix decoding with the first column varying slowest, so codes
/// increase with the assignment in lexicographic order.
fn decode(domains: &[(usize, Vec<f64>)], mut code: usize) -> Vec<(usize, f64)> {
    let mut out = vec![(0, 0.0); domains.len()];
    for (slot, (j, values)) in out.iter_mut().zip(domains).rev() {
        let n = values.len();
        *slot = (*j, values[code % n]);
        code /= n;
    }
    out
}

fn better(a: &EnumeratedOptimum, b: &EnumeratedOptimum) -> bool {
    let scale = a.objective.abs().max(b.objective.abs()).max(1.0);
    if (a.objective - b.objective).abs() <= 1e-9 * scale {
        lexicographic(&a.assignment, &b.assignment) == Ordering::Less
    } else {
        a.objective > b.objective
    }
}

fn lexicographic(a: &[(usize, f64)], b: &[(usize, f64)]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.1.total_cmp(&y.1))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::RowFamily;

    fn knapsack() -> ConicProgram {
        // maximize 5a + 4b + 3c, 2a + 3b + c <= 5, a,b in {0,1}, c in 0..=3
        let mut p = ConicProgram::with_columns(vec!["a".into(), "b".into(), "c".into()]);
        p.objective = vec![5.0, 4.0, 3.0];
        p.set_bounds(0, 0.0, 1.0);
        p.set_bounds(1, 0.0, 1.0);
        p.set_bounds(2, 0.0, 3.0);
        p.binaries = vec![0, 1];
        p.integers = vec![2];
        p.add_le(RowFamily::RampUp, vec![(0, 2.0), (1, 3.0), (2, 1.0)], 5.0);
        p
    }

    #[test]
    fn visits_the_full_product() {
        let e = enumerate_optimal(&knapsack(), &EnumerationCaps::default()).unwrap();
        assert_eq!(e.assignments, 2 * 2 * 4);
        assert!((e.objective().unwrap() - 14.0).abs() < 1e-5);
        assert_eq!(e.best.unwrap().assignment, vec![(0, 1.0), (1, 0.0), (2, 3.0)]);
    }

    #[test]
    fn worker_count_does_not_change_the_answer() {
        let one = enumerate_optimal(&knapsack(), &EnumerationCaps { workers: 1, ..Default::default() }).unwrap();
        let four = enumerate_optimal(&knapsack(), &EnumerationCaps { workers: 4, ..Default::default() }).unwrap();
        assert_eq!(one.best.unwrap().assignment, four.best.unwrap().assignment);
        assert_eq!(one.feasible, four.feasible);
    }

    #[test]
    fn ties_go_to_the_smallest_assignment() {
        let mut p = ConicProgram::with_columns(vec!["a".into(), "b".into()]);
        p.objective = vec![1.0, 1.0];
        p.set_bounds(0, 0.0, 1.0);
        p.set_bounds(1, 0.0, 1.0);
        p.binaries = vec![0, 1];
        p.add_le(RowFamily::RampUp, vec![(0, 1.0), (1, 1.0)], 1.0);
        let e = enumerate_optimal(&p, &EnumerationCaps::default()).unwrap();
        assert_eq!(e.best.unwrap().assignment, vec![(0, 0.0), (1, 1.0)]);
    }

    #[test]
    fn unbounded_integer_domain_is_refused() {
        let mut p = knapsack();
        p.upper[2] = f64::INFINITY;
        match enumerate_optimal(&p, &EnumerationCaps::default()) {
            Err(Error::DomainTooLarge { product, .. }) => assert_eq!(product, u128::MAX),
            other => panic!("expected refusal, got {other:?}"),
        }
        let capped = EnumerationCaps {
            integer_cap: Some(2),
            ..Default::default()
        };
        assert_eq!(enumerate_optimal(&p, &capped).unwrap().assignments, 12);
    }

    #[test]
    fn oversized_domain_reports_its_product() {
        let caps = EnumerationCaps {
            max_assignments: 10,
            ..Default::default()
        };
        match enumerate_optimal(&knapsack(), &caps) {
            Err(Error::DomainTooLarge { product: 16, limit: 10 }) => {}
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn all_infeasible_assignments_report_infeasible() {
        let mut p = knapsack();
        p.add_le(RowFamily::RampUp, vec![(0, -1.0), (1, -1.0), (2, -1.0)], -10.0);
        let e = enumerate_optimal(&p, &EnumerationCaps::default()).unwrap();
        assert!(e.is_infeasible());
        assert_eq!(e.feasible, 0);
    }
}
