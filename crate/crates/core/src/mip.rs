//! Best-first branch-and-bound over the binary and integer columns.
//!
//! Every node is the root program with some discrete columns re-bounded.
//! Nodes are kept in a max-heap on their parent's relaxation bound; equal
//! bounds are served first-in first-out, so the `0`/floor child of a split
//! is explored before its sibling. A node whose rounded relaxation already
//! satisfies every row is evaluated with its discrete columns fixed instead
//! of being split further.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::program::ConicProgram;
use crate::socp::{Iterate, SolveResult, SolveStatus, Solver, SolverSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct MipSettings {
    /// Relative gap `(bound - incumbent) / max(|incumbent|, 1e-6)` at which
    /// the search stops.
    pub gap: f64,
    pub node_limit: usize,
    /// Seconds. Ignored on targets without a clock.
    pub time_limit: f64,
    /// Distance from an integer below which a discrete value counts as
    /// integral.
    pub integrality_tol: f64,
    /// Row violation allowed for a rounded relaxation to be accepted as
    /// integral without further branching.
    pub rounding_tol: f64,
    pub workers: usize,
    /// Node relaxations.
    pub relaxation: SolverSettings,
    /// Final re-solve of the incumbent with its discrete columns fixed.
    pub polish: Option<SolverSettings>,
    /// Run the rounding heuristic every this many nodes (0 = root only).
    pub heuristic_every: usize,
}

impl Default for MipSettings {
    fn default() -> Self {
        let relaxation = SolverSettings {
            max_iters: 60_000,
            ..SolverSettings::default()
        };
        let polish = SolverSettings {
            max_iters: 400_000,
            ..SolverSettings::default().with_tolerance(1e-9)
        };
        Self {
            gap: 1e-4,
            node_limit: 10_000,
            time_limit: 300.0,
            integrality_tol: 1e-5,
            rounding_tol: 1e-5,
            workers: 1,
            relaxation,
            polish: Some(polish),
            heuristic_every: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MipStatus {
    /// Gap closed.
    Optimal,
    /// The root relaxation, or every leaf, is infeasible.
    Infeasible,
    NodeLimit,
    TimeLimit,
}

impl MipStatus {
    pub fn is_limit(self) -> bool {
        matches!(self, MipStatus::NodeLimit | MipStatus::TimeLimit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IncumbentSource {
    RoundingHeuristic,
    NodeIntegrality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub x: Vec<f64>,
    /// Maximization objective.
    pub objective: f64,
    pub source: IncumbentSource,
    iterate: Option<Arc<Iterate>>,
}

/// One row of the progress log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Progress {
    pub nodes: usize,
    pub open: usize,
    pub best_bound: f64,
    pub incumbent: Option<f64>,
    pub gap: f64,
}

impl Progress {
    pub const HEADER: &'static str = "nodes\topen\tbound\tincumbent\tgap";
}

impl fmt::Display for Progress {
    /// Tab-separated, matching [`Progress::HEADER`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inc = self.incumbent.map_or_else(|| "-".to_string(), |v| format!("{v:.9e}"));
        write!(
            f,
            "{}\t{}\t{:.9e}\t{}\t{:.3e}",
            self.nodes, self.open, self.best_bound, inc, self.gap
        )
    }
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub incumbent: Option<Incumbent>,
    /// Upper bound on the optimal objective.
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub root_objective: f64,
    pub root_cone_tightness: f64,
    pub elapsed_seconds: f64,
    pub log: Vec<Progress>,
}

impl MipResult {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|i| i.objective)
    }
}

pub fn relative_gap(bound: f64, incumbent: Option<f64>) -> f64 {
    match incumbent {
        Some(inc) => ((bound - inc) / inc.abs().max(1e-6)).max(0.0),
        None => f64::INFINITY,
    }
}

/// Most fractional integer column first, then most fractional binary. Ties
/// go to the lowest column index. `None` when every discrete column is
/// integral within `tol`.
///
/// Integer columns carry the trip counts. Settling them first keeps the
/// mode binaries, which often have slack in the relaxation, from splitting
/// the tree into copies that each repeat the same trip decisions.
pub fn branch_select(program: &ConicProgram, x: &[f64], tol: f64) -> Option<usize> {
    most_fractional(&program.integers, x, tol).or_else(|| most_fractional(&program.binaries, x, tol))
}

fn most_fractional(cols: &[usize], x: &[f64], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in cols {
        let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if frac <= tol {
            continue;
        }
        match best {
            Some((bj, bf)) if frac < bf || (frac == bf && j > bj) => {}
            _ => best = Some((j, frac)),
        }
    }
    best.map(|(j, _)| j)
}

struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    seq: u64,
    depth: usize,
    /// `(column, lo, hi)`, later entries override earlier ones.
    overrides: Vec<(usize, f64, f64)>,
    warm: Option<Arc<Iterate>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Evaluated {
    result: SolveResult,
    iterate: Arc<Iterate>,
}

/// Root bounds of the discrete columns, as `(column, lo, hi)`.
fn root_bounds(program: &ConicProgram) -> Vec<(usize, f64, f64)> {
    program
        .discrete_columns()
        .map(|j| (j, program.lower[j], program.upper[j]))
        .collect()
}

fn apply(solver: &mut Solver, base: &[(usize, f64, f64)], overrides: &[(usize, f64, f64)]) -> Result<()> {
    let mut bounds: std::collections::BTreeMap<usize, (f64, f64)> =
        base.iter().map(|&(j, lo, hi)| (j, (lo, hi))).collect();
    for &(j, lo, hi) in overrides {
        bounds.insert(j, (lo, hi));
    }
    solver.set_many_column_bounds(bounds.into_iter().map(|(j, (lo, hi))| (j, lo, hi)))?;
    Ok(())
}

fn evaluate(
    solver: &mut Solver,
    base: &[(usize, f64, f64)],
    overrides: &[(usize, f64, f64)],
    warm: Option<&Arc<Iterate>>,
) -> Result<Evaluated> {
    apply(solver, base, overrides)?;
    match warm {
        Some(it) => solver.set_iterate(Iterate::clone(it))?,
        None => solver.cold_start()?,
    }
    let mut result = solver.solve()?;
    if warm.is_some() && result.status == SolveStatus::IterLimit {
        solver.cold_start()?;
        result = solver.solve()?;
    }
    Ok(Evaluated {
        result,
        iterate: Arc::new(solver.iterate()),
    })
}

/// Discrete columns rounded to the nearest integer.
fn rounded(program: &ConicProgram, x: &[f64]) -> Vec<(usize, f64)> {
    program.discrete_columns().map(|j| (j, x[j].round())).collect()
}

/// Each binary set to whichever of `0` and `1` violates the rows it
/// appears in less, with the other discrete columns held at `fixed`.
fn least_violating_binaries(program: &ConicProgram, x: &[f64], fixed: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut point = x.to_vec();
    for &(j, v) in fixed {
        point[j] = v;
    }
    let mut rows_of: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for (i, r) in program.inequalities.iter().enumerate() {
        for &(j, _) in &r.coeffs {
            rows_of.entry(j).or_default().push(i);
        }
    }
    let violation = |point: &[f64], j: usize| -> f64 {
        rows_of.get(&j).map_or(0.0, |rows| {
            rows.iter()
                .map(|&i| {
                    let r = &program.inequalities[i];
                    (r.activity(point) - r.rhs).max(0.0)
                })
                .sum()
        })
    };
    let mut out = fixed.to_vec();
    for entry in out.iter_mut() {
        let j = entry.0;
        if !program.binaries.contains(&j) {
            continue;
        }
        point[j] = 0.0;
        let v0 = violation(&point, j);
        point[j] = 1.0;
        let v1 = violation(&point, j);
        let pick = if v0 < v1 {
            0.0
        } else if v1 < v0 {
            1.0
        } else {
            x[j].round()
        };
        point[j] = pick;
        entry.1 = pick;
    }
    out
}

/// Solves with the discrete columns fixed to `assignment` and returns the
/// point if the fixed program is feasible.
fn solve_fixed(
    solver: &mut Solver,
    base: &[(usize, f64, f64)],
    assignment: &[(usize, f64)],
    warm: Option<&Arc<Iterate>>,
) -> Result<Option<Evaluated>> {
    let fixes: Vec<(usize, f64, f64)> = assignment.iter().map(|&(j, v)| (j, v, v)).collect();
    let out = evaluate(solver, base, &fixes, warm)?;
    Ok((out.result.status == SolveStatus::Optimal).then_some(out))
}

/// Rounds a relaxation to an integral point and re-solves the continuous
/// columns. Tries nearest rounding, then binaries chosen to least violate
/// their rows, then the same with every integer column at its floor.
pub fn round_heuristic(
    program: &ConicProgram,
    relaxation: &SolveResult,
    settings: &MipSettings,
) -> Result<Option<Incumbent>> {
    let mut solver = Solver::new(program, settings.relaxation)?;
    let base = root_bounds(program);
    heuristic_with(&mut solver, program, &base, &relaxation.x, None)
}

fn heuristic_with(
    solver: &mut Solver,
    program: &ConicProgram,
    base: &[(usize, f64, f64)],
    x: &[f64],
    warm: Option<&Arc<Iterate>>,
) -> Result<Option<Incumbent>> {
    let clamp_to_root = |assignment: Vec<(usize, f64)>| -> Vec<(usize, f64)> {
        assignment
            .into_iter()
            .map(|(j, v)| (j, v.clamp(program.lower[j], program.upper[j])))
            .collect()
    };
    let nearest = clamp_to_root(rounded(program, x));
    let mut attempts = vec![nearest.clone()];
    let by_rows = least_violating_binaries(program, x, &nearest);
    if by_rows != nearest {
        attempts.push(by_rows.clone());
    }
    let floors: Vec<(usize, f64)> = by_rows
        .iter()
        .map(|&(j, v)| if program.integers.contains(&j) { (j, x[j].floor().max(program.lower[j])) } else { (j, v) })
        .collect();
    if !attempts.contains(&floors) {
        attempts.push(floors);
    }
    for assignment in attempts {
        if let Some(out) = solve_fixed(solver, base, &assignment, warm)? {
            return Ok(Some(Incumbent {
                objective: out.result.objective,
                x: out.result.x,
                source: IncumbentSource::RoundingHeuristic,
                iterate: Some(out.iterate),
            }));
        }
    }
    Ok(None)
}

struct Search<'a> {
    program: &'a ConicProgram,
    settings: &'a MipSettings,
    base: Vec<(usize, f64, f64)>,
    incumbent: Option<Incumbent>,
    heap: BinaryHeap<Node>,
    seq: u64,
    nodes: usize,
    log: Vec<Progress>,
}

impl<'a> Search<'a> {
    fn incumbent_value(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|i| i.objective)
    }

    /// Nodes whose bound cannot beat the incumbent by more than the gap.
    fn is_dominated(&self, bound: f64) -> bool {
        match self.incumbent_value() {
            Some(inc) => bound <= inc + self.settings.gap * inc.abs().max(1e-6),
            None => false,
        }
    }

    fn offer(&mut self, candidate: Incumbent) {
        if self.incumbent_value().is_none_or(|inc| candidate.objective > inc) {
            log::debug!("incumbent {:.9e} from {:?}", candidate.objective, candidate.source);
            self.incumbent = Some(candidate);
        }
    }

    fn push(&mut self, bound: f64, depth: usize, overrides: Vec<(usize, f64, f64)>, warm: Option<Arc<Iterate>>) {
        self.seq += 1;
        self.heap.push(Node {
            bound,
            seq: self.seq,
            depth,
            overrides,
            warm,
        });
    }

    fn best_bound(&self) -> f64 {
        let open = self.heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
        open.max(self.incumbent_value().unwrap_or(f64::NEG_INFINITY))
    }

    fn record(&mut self) {
        let bound = self.best_bound();
        let p = Progress {
            nodes: self.nodes,
            open: self.heap.len(),
            best_bound: bound,
            incumbent: self.incumbent_value(),
            gap: relative_gap(bound, self.incumbent_value()),
        };
        log::info!("{p}");
        self.log.push(p);
    }

    /// Handles one evaluated node: fathoms, records incumbents or splits.
    fn process(&mut self, solver: &mut Solver, node: &Node, eval: Evaluated) -> Result<()> {
        let res = &eval.result;
        let bound = match res.status {
            SolveStatus::Infeasible => return Ok(()),
            SolveStatus::Optimal => res.objective.min(node.bound),
            // An unconverged node keeps its parent's bound so it is never
            // pruned on an unreliable value.
            SolveStatus::IterLimit | SolveStatus::Unbounded => node.bound,
        };
        if self.is_dominated(bound) {
            return Ok(());
        }
        let x = &res.x;
        let tol = self.settings.integrality_tol;
        let split = branch_select(self.program, x, tol);
        let assignment = rounded(self.program, x);
        let looks_integral = split.is_none() || {
            let mut point = x.clone();
            for &(j, v) in &assignment {
                point[j] = v;
            }
            self.program.violation(&point).max() <= self.settings.rounding_tol
        };
        if looks_integral {
            let fixed = solve_fixed(solver, &self.base, &assignment, Some(&eval.iterate))?;
            if let Some(out) = fixed {
                let objective = out.result.objective;
                self.offer(Incumbent {
                    objective,
                    x: out.result.x,
                    source: IncumbentSource::NodeIntegrality,
                    iterate: Some(out.iterate),
                });
                if split.is_none() || self.is_dominated(bound) {
                    return Ok(());
                }
            } else if split.is_none() {
                return Ok(());
            }
        }
        let every = self.settings.heuristic_every;
        if node.depth == 0 || (every > 0 && self.nodes % every == 0) {
            if let Some(inc) = heuristic_with(solver, self.program, &self.base, x, Some(&eval.iterate))? {
                self.offer(inc);
                if self.is_dominated(bound) {
                    return Ok(());
                }
            }
        }
        let Some(j) = split else { return Ok(()) };
        let (lo, hi) = node
            .overrides
            .iter()
            .rev()
            .find(|o| o.0 == j)
            .map_or((self.program.lower[j], self.program.upper[j]), |o| (o.1, o.2));
        let (down, up) = (x[j].floor(), x[j].ceil());
        let warm = Some(eval.iterate.clone());
        if down >= lo {
            let mut ov = node.overrides.clone();
            ov.push((j, lo, down));
            self.push(bound, node.depth + 1, ov, warm.clone());
        }
        if up <= hi {
            let mut ov = node.overrides.clone();
            ov.push((j, up, hi));
            self.push(bound, node.depth + 1, ov, warm);
        }
        Ok(())
    }
}

/// Branch-and-bound. Single-worker runs are deterministic; with several
/// workers the open nodes are evaluated in batches on cloned workspaces and
/// the results applied in pop order.
pub fn optimize(program: &ConicProgram, settings: &MipSettings) -> Result<MipResult> {
    let clock = Clock::start();
    let mut root_solver = Solver::new(program, settings.relaxation)?;
    let base = root_bounds(program);
    let mut search = Search {
        program,
        settings,
        base,
        incumbent: None,
        heap: BinaryHeap::new(),
        seq: 0,
        nodes: 0,
        log: Vec::new(),
    };

    let root = Node {
        bound: f64::INFINITY,
        seq: 0,
        depth: 0,
        overrides: Vec::new(),
        warm: None,
    };
    let root_eval = evaluate(&mut root_solver, &search.base, &[], None)?;
    search.nodes = 1;
    let root_objective = root_eval.result.objective;
    let root_cone_tightness = root_eval.result.cone_tightness;
    let root_status = root_eval.result.status;
    if root_status == SolveStatus::Infeasible {
        return Ok(MipResult {
            status: MipStatus::Infeasible,
            incumbent: None,
            best_bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes: 1,
            root_objective,
            root_cone_tightness,
            elapsed_seconds: clock.seconds(),
            log: Vec::new(),
        });
    }
    search.process(&mut root_solver, &root, root_eval)?;
    search.record();

    let workers = settings.workers.max(1);
    let mut pool: Vec<Solver> = (0..workers).map(|_| root_solver.clone()).collect();
    let mut status = MipStatus::Optimal;
    'search: loop {
        let mut batch = Vec::with_capacity(workers);
        while batch.len() < workers {
            let Some(node) = search.heap.pop() else { break };
            if search.is_dominated(node.bound) {
                continue;
            }
            batch.push(node);
        }
        if batch.is_empty() {
            break;
        }
        if search.nodes >= settings.node_limit {
            status = MipStatus::NodeLimit;
            search.heap.extend(batch);
            break 'search;
        }
        if clock.seconds() >= settings.time_limit {
            status = MipStatus::TimeLimit;
            search.heap.extend(batch);
            break 'search;
        }
        let evals: Vec<Result<Evaluated>> = if batch.len() == 1 {
            vec![evaluate(&mut pool[0], &search.base, &batch[0].overrides, batch[0].warm.as_ref())]
        } else {
            let base = &search.base;
            std::thread::scope(|scope| {
                let handles: Vec<_> = batch
                    .iter()
                    .zip(pool.iter_mut())
                    .map(|(node, solver)| {
                        scope.spawn(move || evaluate(solver, base, &node.overrides, node.warm.as_ref()))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("node worker panicked")).collect()
            })
        };
        for (node, eval) in batch.iter().zip(evals) {
            search.nodes += 1;
            search.process(&mut pool[0], node, eval?)?;
            if search.nodes % 10 == 0 {
                search.record();
            }
        }
    }
    search.record();

    let best_bound = if status == MipStatus::Optimal {
        search.incumbent_value().unwrap_or(f64::NEG_INFINITY)
    } else {
        search.best_bound()
    };
    if status == MipStatus::Optimal && search.incumbent.is_none() {
        status = MipStatus::Infeasible;
    }
    if let (Some(polish), Some(inc)) = (settings.polish, search.incumbent.as_mut()) {
        polish_incumbent(&mut root_solver, program, &search.base, inc, polish)?;
    }
    let gap = match status {
        MipStatus::Optimal => relative_gap(search.best_bound().max(best_bound), search.incumbent_value()).min(settings.gap),
        _ => relative_gap(best_bound, search.incumbent_value()),
    };
    Ok(MipResult {
        status,
        best_bound: best_bound.max(search.incumbent_value().unwrap_or(f64::NEG_INFINITY)),
        gap,
        nodes: search.nodes,
        incumbent: search.incumbent,
        root_objective,
        root_cone_tightness,
        elapsed_seconds: clock.seconds(),
        log: search.log,
    })
}

/// Re-solves the incumbent's continuous columns to a tight tolerance.
/// Keeps the original point if the tight solve does not converge.
fn polish_incumbent(
    solver: &mut Solver,
    program: &ConicProgram,
    base: &[(usize, f64, f64)],
    inc: &mut Incumbent,
    polish: SolverSettings,
) -> Result<()> {
    let assignment = rounded(program, &inc.x);
    let coarse = *solver.settings();
    solver.set_settings(polish)?;
    let out = solve_fixed(solver, base, &assignment, inc.iterate.as_ref());
    solver.set_settings(coarse)?;
    if let Some(out) = out? {
        let mut x = out.result.x;
        for &(j, v) in &assignment {
            x[j] = v;
        }
        inc.objective = program.objective_value(&x);
        inc.x = x;
        inc.iterate = Some(out.iterate);
    } else {
        log::warn!("incumbent polish did not converge; keeping the coarse point");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::RowFamily;

    #[test]
    fn integers_are_preferred_and_ties_go_to_lower_index() {
        let mut p = ConicProgram::with_columns((0..4).map(|i| format!("c{i}")).collect());
        p.binaries = vec![0, 1];
        p.integers = vec![2, 3];
        assert_eq!(branch_select(&p, &[0.5, 0.9, 1.5, 0.0], 1e-5), Some(2));
        assert_eq!(branch_select(&p, &[0.5, 0.9, 1.2, 2.4], 1e-5), Some(3));
        assert_eq!(branch_select(&p, &[1.0, 0.0, 1.5, 2.0], 1e-5), Some(2));
        assert_eq!(branch_select(&p, &[0.6, 0.4, 0.0, 0.0], 1e-5), Some(0));
        assert_eq!(branch_select(&p, &[0.7, 0.4, 0.0, 0.0], 1e-5), Some(1));
        assert_eq!(branch_select(&p, &[1.0, 0.0, 3.0, 2.0 + 1e-7], 1e-5), None);
    }

    #[test]
    fn all_fixed_program_needs_one_node() {
        // maximize x + 2k, x <= 1.5, k fixed at 1
        let mut p = ConicProgram::with_columns(vec!["x".into(), "k".into()]);
        p.objective = vec![1.0, 2.0];
        p.set_bounds(0, 0.0, 1.5);
        p.fix(1, 1.0);
        p.integers.push(1);
        let r = optimize(&p, &MipSettings::default()).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert_eq!(r.nodes, 1);
        assert!((r.objective().unwrap() - 3.5).abs() < 1e-6);
    }

    #[test]
    fn knapsack_needs_branching() {
        // maximize 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11,
        // 3a + 4b + 2c <= 8, a, b, c integer in [0, 3]. Optimum 13 at (2, 0, 1).
        let mut p = ConicProgram::with_columns(vec!["a".into(), "b".into(), "c".into()]);
        p.objective = vec![5.0, 4.0, 3.0];
        for j in 0..3 {
            p.set_bounds(j, 0.0, 3.0);
        }
        p.add_le(RowFamily::RampUp, vec![(0, 2.0), (1, 3.0), (2, 1.0)], 5.0);
        p.add_le(RowFamily::RampUp, vec![(0, 4.0), (1, 1.0), (2, 2.0)], 11.0);
        p.add_le(RowFamily::RampUp, vec![(0, 3.0), (1, 4.0), (2, 2.0)], 8.0);
        p.integers = vec![0, 1, 2];
        let r = optimize(&p, &MipSettings::default()).unwrap();
        assert_eq!(r.status, MipStatus::Optimal);
        assert!((r.objective().unwrap() - 13.0).abs() < 1e-5, "{:?}", r.objective());
        let parallel = optimize(
            &p,
            &MipSettings {
                workers: 3,
                ..MipSettings::default()
            },
        )
        .unwrap();
        assert!((parallel.objective().unwrap() - 13.0).abs() < 1e-5);
    }

    #[test]
    fn infeasible_root_is_reported() {
        let mut p = ConicProgram::with_columns(vec!["x".into()]);
        p.set_bounds(0, 0.0, 1.0);
        p.add_le(RowFamily::RampUp, vec![(0, -1.0)], -2.0);
        p.binaries.push(0);
        let r = optimize(&p, &MipSettings::default()).unwrap();
        assert_eq!(r.status, MipStatus::Infeasible);
        assert!(r.incumbent.is_none());
    }

    #[test]
    fn progress_lines_are_tab_separated() {
        let p = Progress {
            nodes: 3,
            open: 1,
            best_bound: 1.0,
            incumbent: None,
            gap: f64::INFINITY,
        };
        assert_eq!(p.to_string().split('\t').count(), Progress::HEADER.split('\t').count());
    }
}
