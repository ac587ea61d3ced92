//! Solve and compare drivers, and the artifact files they produce.
//!
//! | file           | content                                                        |
//! |----------------|----------------------------------------------------------------|
//! | `plan.json`    | the [`RestorationPlan`]                                        |
//! | `schedule.csv` | `from,to,depart,arrive,type,qty`, one row per scheduled batch  |
//! | `traces.csv`   | per step: restored MW, generation MW, per ESS bus `s, s_up, s_lo` |
//! | `summary.json` | [`SolveSummary`]                                               |
//!
//! Floats in every file carry 9 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulation::{compile, extract_plan, CompiledModel, ObjectiveParts, RestorationPlan};
use crate::mip::{self, MipResult, MipSettings, MipStatus};
use crate::scenario::{BusId, Scenario};

/// Slack allowed when checking that routing never loses to the static run.
pub const DOMINANCE_SLACK: f64 = 1e-6;

/// Tolerance used to read integral values out of a solution.
const EXTRACT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Pin every trip count to zero.
    pub static_only: bool,
    pub mip: MipSettings,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub model: CompiledModel,
    pub result: MipResult,
    /// `None` when the search ended without an incumbent.
    pub plan: Option<RestorationPlan>,
}

impl SolveOutcome {
    /// The search stopped on a node or time limit.
    pub fn hit_limit(&self) -> bool {
        self.result.status.is_limit()
    }

    pub fn summary(&self) -> SolveSummary {
        let plan = self.plan.as_ref();
        SolveSummary {
            scenario: self.model.scenario.name.clone(),
            routed: !self.model.is_static,
            status: self.result.status,
            partial: self.hit_limit(),
            objective: plan.map(|p| p.objective),
            best_bound: finite(self.result.best_bound),
            gap: finite(self.result.gap),
            nodes: self.result.nodes,
            runtime_seconds: self.result.elapsed_seconds,
            root_objective: finite(self.result.root_objective),
            restored_energy_mwh: plan.map(RestorationPlan::restored_energy),
            trips: plan.map_or(0, |p| p.trips.len()),
            model: ModelSize {
                columns: self.model.counts.columns,
                equalities: self.model.counts.equalities,
                inequalities: self.model.counts.inequalities,
                cones: self.model.counts.cones,
                binaries: self.model.counts.binaries,
                integers: self.model.counts.integers,
            },
        }
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSize {
    pub columns: usize,
    pub equalities: usize,
    pub inequalities: usize,
    pub cones: usize,
    pub binaries: usize,
    pub integers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub scenario: String,
    pub routed: bool,
    pub status: MipStatus,
    /// True when the search hit a limit and the plan is the best found so far.
    pub partial: bool,
    pub objective: Option<ObjectiveParts>,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub runtime_seconds: f64,
    pub root_objective: Option<f64>,
    pub restored_energy_mwh: Option<f64>,
    pub trips: usize,
    pub model: ModelSize,
}

/// Compiles and optimizes one scenario.
pub fn solve(scenario: &Scenario, options: &SolveOptions) -> Result<SolveOutcome> {
    let mut model = compile(scenario)?;
    if options.static_only {
        model = model.into_static();
    }
    solve_model(model, &options.mip)
}

pub fn solve_model(model: CompiledModel, settings: &MipSettings) -> Result<SolveOutcome> {
    let result = mip::optimize(&model.program, settings)?;
    let plan = match &result.incumbent {
        Some(inc) => Some(extract_plan(&model, &inc.x, EXTRACT_TOL)?),
        None => None,
    };
    Ok(SolveOutcome { model, result, plan })
}

/// Writes `plan.json`, `schedule.csv`, `traces.csv` and `summary.json` into
/// `dir`, creating it if needed. Without a plan only the summary is written.
pub fn write_artifacts(dir: &Path, outcome: &SolveOutcome) -> Result<()> {
    create_dir(dir)?;
    if let Some(plan) = &outcome.plan {
        write_file(&dir.join("plan.json"), &plan_json(plan))?;
        write_file(&dir.join("schedule.csv"), &schedule_csv(plan))?;
        write_file(&dir.join("traces.csv"), &traces_csv(plan))?;
    }
    write_file(&dir.join("summary.json"), &to_json_9(&outcome.summary()))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `v` with 9 significant digits. Magnitudes outside `[1e-4, 1e9)` use
/// exponent notation.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i32;
    if (-4..9).contains(&magnitude) {
        let decimals = (8 - magnitude).max(0) as usize;
        let text = format!("{v:.decimals$}");
        if text.trim_start_matches('-').trim_start_matches(['0', '.']).is_empty() {
            "0".into()
        } else {
            text
        }
    } else {
        format!("{v:.8e}")
    }
}

/// Rounds to 9 significant digits.
pub fn round_sig9(v: f64) -> f64 {
    format_sig9(v).parse().unwrap_or(v)
}

fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(rounded) = n.as_f64().map(round_sig9).and_then(serde_json::Number::from_f64) {
                *n = rounded;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 9 significant digits.
pub fn to_json_9<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_json(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("json value serializes");
    text.push('\n');
    text
}

pub fn plan_json(plan: &RestorationPlan) -> String {
    to_json_9(plan)
}

pub fn read_plan(path: &Path) -> Result<RestorationPlan> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub const SCHEDULE_HEADER: &str = "from,to,depart,arrive,type,qty";

/// One row per batch, in the plan's trip order.
pub fn schedule_csv(plan: &RestorationPlan) -> String {
    let mut out = format!("{SCHEDULE_HEADER}\n");
    for trip in &plan.trips {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            trip.from, trip.to, trip.depart, trip.arrive, trip.mess_type, trip.quantity
        );
    }
    out
}

/// Rows `t = 1..=T+1`. The power columns are empty on the last row, which
/// only carries the terminal SoC.
pub fn traces_csv(plan: &RestorationPlan) -> String {
    let mut out = String::from("t,restored_mw,generation_mw");
    for e in &plan.ess {
        let _ = write!(out, ",soc_{0},soc_upper_{0},soc_lower_{0}", e.bus);
    }
    out.push('\n');
    for t in 0..=plan.steps {
        let _ = write!(out, "{}", t + 1);
        match (plan.restored_mw.get(t), plan.generation_mw.get(t)) {
            (Some(r), Some(g)) => {
                let _ = write!(out, ",{},{}", format_sig9(*r), format_sig9(*g));
            }
            _ => out.push_str(",,"),
        }
        for e in &plan.ess {
            let _ = write!(
                out,
                ",{},{},{}",
                format_sig9(e.soc[t]),
                format_sig9(e.soc_upper[t]),
                format_sig9(e.soc_lower[t])
            );
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepPair {
    pub t: usize,
    pub restored_routed: f64,
    pub restored_static: f64,
    pub generation_routed: f64,
    pub generation_static: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocPair {
    pub bus: BusId,
    pub t: usize,
    pub soc_routed: f64,
    pub upper_routed: f64,
    pub lower_routed: f64,
    pub soc_static: f64,
    pub upper_static: f64,
    pub lower_static: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub scenario: String,
    pub routed: SolveSummary,
    pub stat: SolveSummary,
    pub routed_objective: f64,
    pub static_objective: f64,
    /// `routed_objective - static_objective`.
    pub margin: f64,
    pub routed_energy_mwh: f64,
    pub static_energy_mwh: f64,
    /// Steps where the routed run restores at least as much load.
    pub steps_not_worse: usize,
    pub steps: Vec<StepPair>,
    pub soc: Vec<SocPair>,
}

/// Runs the routed and the static solve of one scenario and pairs their
/// traces. Both runs share the scenario, so initial fuel, SoC and demand
/// are identical. Fails with [`Error::DominanceViolated`] when the routed
/// objective falls below the static one by more than [`DOMINANCE_SLACK`].
pub fn compare(scenario: &Scenario, settings: &MipSettings) -> Result<(SolveOutcome, SolveOutcome, Comparison)> {
    let routed = solve(
        scenario,
        &SolveOptions {
            static_only: false,
            mip: settings.clone(),
        },
    )?;
    let stat = solve(
        scenario,
        &SolveOptions {
            static_only: true,
            mip: settings.clone(),
        },
    )?;
    let missing = |which: &str| Error::Structural(format!("{which} run ended without a feasible plan"));
    let rp = routed.plan.as_ref().ok_or_else(|| missing("routed"))?;
    let sp = stat.plan.as_ref().ok_or_else(|| missing("static"))?;
    let comparison = pair_plans(rp, sp, routed.summary(), stat.summary());
    if comparison.routed_objective < comparison.static_objective - DOMINANCE_SLACK {
        return Err(Error::DominanceViolated {
            routed: comparison.routed_objective,
            stat: comparison.static_objective,
        });
    }
    Ok((routed, stat, comparison))
}

pub fn pair_plans(routed: &RestorationPlan, stat: &RestorationPlan, rs: SolveSummary, ss: SolveSummary) -> Comparison {
    let steps: Vec<StepPair> = (0..routed.steps)
        .map(|t| StepPair {
            t: t + 1,
            restored_routed: routed.restored_mw[t],
            restored_static: stat.restored_mw[t],
            generation_routed: routed.generation_mw[t],
            generation_static: stat.generation_mw[t],
        })
        .collect();
    let soc = routed
        .ess
        .iter()
        .zip(&stat.ess)
        .flat_map(|(r, s)| {
            (0..=routed.steps).map(move |t| SocPair {
                bus: r.bus,
                t: t + 1,
                soc_routed: r.soc[t],
                upper_routed: r.soc_upper[t],
                lower_routed: r.soc_lower[t],
                soc_static: s.soc[t],
                upper_static: s.soc_upper[t],
                lower_static: s.soc_lower[t],
            })
        })
        .collect();
    let steps_not_worse = steps
        .iter()
        .filter(|p| p.restored_routed >= p.restored_static - DOMINANCE_SLACK)
        .count();
    Comparison {
        scenario: routed.scenario.clone(),
        routed: rs,
        stat: ss,
        routed_objective: routed.objective.total,
        static_objective: stat.objective.total,
        margin: routed.objective.total - stat.objective.total,
        routed_energy_mwh: routed.restored_energy(),
        static_energy_mwh: stat.restored_energy(),
        steps_not_worse,
        steps,
        soc,
    }
}

/// `t,restored_routed,restored_static,generation_routed,generation_static`.
pub fn comparison_steps_csv(c: &Comparison) -> String {
    let mut out = String::from("t,restored_routed,restored_static,generation_routed,generation_static\n");
    for p in &c.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.t,
            format_sig9(p.restored_routed),
            format_sig9(p.restored_static),
            format_sig9(p.generation_routed),
            format_sig9(p.generation_static)
        );
    }
    out
}

/// `bus,t,soc_routed,upper_routed,lower_routed,soc_static,upper_static,lower_static`.
pub fn comparison_soc_csv(c: &Comparison) -> String {
    let mut out = String::from("bus,t,soc_routed,upper_routed,lower_routed,soc_static,upper_static,lower_static\n");
    for p in &c.soc {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.bus,
            p.t,
            format_sig9(p.soc_routed),
            format_sig9(p.upper_routed),
            format_sig9(p.lower_routed),
            format_sig9(p.soc_static),
            format_sig9(p.upper_static),
            format_sig9(p.lower_static)
        );
    }
    out
}

/// Writes `routed/` and `static/` artifact sets plus `compare.json`,
/// `compare_steps.csv` and `compare_soc.csv`.
pub fn write_comparison(dir: &Path, routed: &SolveOutcome, stat: &SolveOutcome, c: &Comparison) -> Result<()> {
    write_artifacts(&dir.join("routed"), routed)?;
    write_artifacts(&dir.join("static"), stat)?;
    write_file(&dir.join("compare.json"), &to_json_9(c))?;
    write_file(&dir.join("compare_steps.csv"), &comparison_steps_csv(c))?;
    write_file(&dir.join("compare_soc.csv"), &comparison_soc_csv(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.157481749869), "0.157481750");
        assert_eq!(format_sig9(27.3582431), "27.3582431");
        assert_eq!(format_sig9(-1.0), "-1.00000000");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.234e-7), "1.23400000e-7");
        assert_eq!(format_sig9(12345678912.0), "1.23456789e10");
        assert_eq!(round_sig9(0.1 + 0.2), 0.3);
    }

    #[test]
    fn json_floats_are_rounded() {
        let text = to_json_9(&vec![0.1 + 0.2, 1.0 / 3.0]);
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![0.3, 0.333333333]);
    }
}
