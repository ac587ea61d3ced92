#![allow(dead_code)]

use mess_restore::formulation::extract_plan;
use mess_restore::mip::MipSettings;
use mess_restore::report::{self, SolveOptions, SolveOutcome};
use mess_restore::{RestorationPlan, Scenario};

pub fn solve(scenario: &Scenario, static_only: bool) -> SolveOutcome {
    report::solve(
        scenario,
        &SolveOptions {
            static_only,
            mip: MipSettings::default(),
        },
    )
    .expect("solve runs")
}

pub fn plan_of(outcome: &SolveOutcome) -> RestorationPlan {
    outcome.plan.clone().expect("search found a plan")
}

/// Plan read back from a raw point without rounding the continuous part.
pub fn plan_from_point(outcome: &SolveOutcome, x: &[f64]) -> RestorationPlan {
    extract_plan(&outcome.model, x, 1e-4).expect("discrete columns stay integral")
}

pub fn relative_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
