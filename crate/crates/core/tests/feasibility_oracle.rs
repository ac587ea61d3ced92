mod common;

use std::sync::OnceLock;

use mess_restore::formulation::{Symbol, TripRecord};
use mess_restore::instances;
use mess_restore::oracle::{check_feasibility, Family, FeasibilityReport};
use mess_restore::report::SolveOutcome;
use mess_restore::scenario::BusId;
use mess_restore::{RestorationPlan, Scenario};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

fn tiny_routed() -> &'static (Scenario, SolveOutcome) {
    static CELL: OnceLock<(Scenario, SolveOutcome)> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = instances::tiny(3);
        let out = common::solve(&s, false);
        (s, out)
    })
}

fn tiny_plan() -> (Scenario, RestorationPlan) {
    let (s, out) = tiny_routed();
    (s.clone(), common::plan_of(out))
}

fn flagged(report: &FeasibilityReport, family: Family) -> bool {
    report.worst(family) > report.tol
}

#[test]
fn optimized_plans_pass_every_family() {
    for seed in 0..4 {
        let s = instances::tiny(seed);
        for static_only in [false, true] {
            let plan = common::plan_of(&common::solve(&s, static_only));
            let report = check_feasibility(&s, &plan, TOL);
            assert!(report.is_feasible(), "seed {seed} static {static_only}\n{report}");
        }
    }
}

#[test]
fn decreasing_pickup_names_the_bus_and_step() {
    let (s, mut plan) = tiny_plan();
    let load = &mut plan.loads[1];
    load.pickup[1] = load.pickup[0] - 0.2;
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::PickupMonotonicity), "{report}");
    let at = report.check(Family::PickupMonotonicity).unwrap().at.clone().unwrap();
    assert_eq!(at.bus, Some(BusId(5)));
    assert_eq!(at.t, Some(2));
}

#[test]
fn ramp_violation_is_labelled_ramp() {
    let (s, mut plan) = tiny_plan();
    let g = &mut plan.generators[0];
    g.dispatch[1] = g.dispatch[0] + s.generators[0].ramp_up + 0.01;
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::Ramp), "{report}");
    assert!(report.worst(Family::Ramp) >= 0.01 - 1e-9);
}

#[test]
fn fuel_shortfall_is_labelled_fuel() {
    let (s, mut plan) = tiny_plan();
    let last = plan.generators[0].fuel.len() - 1;
    plan.generators[0].fuel[last] = -0.05;
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::Fuel), "{report}");
    assert_eq!(report.check(Family::Fuel).unwrap().at.as_ref().unwrap().t, Some(last + 1));
}

#[test]
fn simultaneous_charge_and_discharge_is_labelled_complementarity() {
    let (s, mut plan) = tiny_plan();
    let e = &mut plan.ess[0];
    e.mode[0] = 0;
    e.charge[0] = 0.02;
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::Complementarity), "{report}");
    let at = report.check(Family::Complementarity).unwrap().at.clone().unwrap();
    assert_eq!((at.bus, at.t), (Some(BusId(2)), Some(1)));
}

#[test]
fn broken_soc_recursion_is_labelled_soc_evolution() {
    let (s, mut plan) = tiny_plan();
    plan.ess[1].soc[1] += 0.05;
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::SocEvolution), "{report}");
    assert_eq!(report.check(Family::SocEvolution).unwrap().at.as_ref().unwrap().bus, Some(BusId(4)));
}

#[test]
fn overfilled_batch_is_labelled_travel_box() {
    let (s, mut plan) = tiny_plan();
    plan.trips.retain(|_| false);
    plan.trips.push(TripRecord {
        arc: 0,
        from: BusId(2),
        to: BusId(4),
        depart: 1,
        arrive: 2,
        mess_type: 1,
        quantity: 1,
        soc_shipped: 0.5,
        soc_lower: 0.02,
        soc_upper: 0.2,
    });
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::TravelBox), "{report}");
    assert!((report.worst(Family::TravelBox) - 0.3).abs() < 1e-12);
}

#[test]
fn seven_units_without_a_bound_move_are_labelled_bound_evolution() {
    let s = instances::desk();
    let mut plan = common::plan_of(&common::solve(&s, true));
    let unit_upper = s.mess_types[0].soc_max_unit;
    plan.trips.push(TripRecord {
        arc: 0,
        from: BusId(3),
        to: BusId(7),
        depart: 1,
        arrive: 2,
        mess_type: 1,
        quantity: 7,
        soc_shipped: 0.0,
        soc_lower: 7.0 * s.mess_types[0].soc_min_unit,
        soc_upper: 7.0 * unit_upper,
    });
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::BoundEvolution), "{report}");
    assert!((report.worst(Family::BoundEvolution) - 7.0 * unit_upper).abs() < 1e-9);
    assert!((7.0 * unit_upper - 1.75).abs() < 1e-12);
}

#[test]
fn trip_on_a_missing_arc_is_labelled_integrality() {
    let (s, mut plan) = tiny_plan();
    plan.trips.push(TripRecord {
        arc: 9,
        from: BusId(4),
        to: BusId(2),
        depart: 1,
        arrive: 2,
        mess_type: 1,
        quantity: 1,
        soc_shipped: 0.1,
        soc_lower: 0.02,
        soc_upper: 0.2,
    });
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::Integrality), "{report}");
}

#[test]
fn truncated_plan_is_a_shape_error() {
    let (s, mut plan) = tiny_plan();
    plan.loads.pop();
    let report = check_feasibility(&s, &plan, TOL);
    assert!(flagged(&report, Family::Shape));
}

/// Columns that the plan carries through unchanged. Pickup and shipped SoC
/// are clamped and the bound books are rebuilt during extraction.
const CARRIED: [Symbol; 12] = [
    Symbol::V,
    Symbol::P,
    Symbol::Q,
    Symbol::L,
    Symbol::BranchP,
    Symbol::BranchQ,
    Symbol::PGen,
    Symbol::Fuel,
    Symbol::Charge,
    Symbol::Discharge,
    Symbol::Soc,
    Symbol::Phi,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The oracle and the compiled rows agree on every perturbed point.
    #[test]
    fn oracle_agrees_with_program_rows(
        which in 0..CARRIED.len(),
        pick in 0usize..10_000,
        exponent in -9i32..-1,
        negative in any::<bool>(),
    ) {
        let (s, out) = tiny_routed();
        let model = &out.model;
        let mut x = out.result.incumbent.as_ref().unwrap().x.clone();
        let range = model.atlas.block(CARRIED[which]).range();
        let col = range.start + pick % range.len();
        let delta = 10f64.powi(exponent) * if negative { -1.0 } else { 1.0 };
        x[col] += delta;
        let program_worst = model.program.violation(&x).max();
        let plan = common::plan_from_point(out, &x);
        let oracle_worst = check_feasibility(s, &plan, TOL).max_violation();
        // Verdicts must agree unless the violation sits at the threshold.
        if program_worst > 10.0 * TOL || program_worst < 0.1 * TOL {
            prop_assert_eq!(program_worst <= TOL, oracle_worst <= TOL,
                "{}: program {:e} oracle {:e}", model.program.names[col], program_worst, oracle_worst);
        }
        prop_assert!((program_worst - oracle_worst).abs() <= 10.0 * TOL + 1e-6 * program_worst,
            "{}: program {:e} oracle {:e}", model.program.names[col], program_worst, oracle_worst);
    }
}
