mod common;

use std::collections::HashMap;

use mess_restore::instances;
use mess_restore::mip::MipSettings;
use mess_restore::oracle::check_feasibility;
use mess_restore::report::{self, SCHEDULE_HEADER};

#[test]
fn written_plan_reads_back_feasible_and_schedule_matches_trips() {
    let scenario = instances::desk();
    let outcome = common::solve(&scenario, false);
    let dir = tempfile::tempdir().unwrap();
    report::write_artifacts(dir.path(), &outcome).unwrap();

    let plan = report::read_plan(&dir.path().join("plan.json")).unwrap();
    let oracle = check_feasibility(&scenario, &plan, 1e-6);
    assert!(oracle.is_feasible(), "{oracle}");
    assert!(!plan.trips.is_empty());

    let schedule = std::fs::read_to_string(dir.path().join("schedule.csv")).unwrap();
    let mut lines = schedule.lines();
    assert_eq!(lines.next(), Some(SCHEDULE_HEADER));
    let mut rows: HashMap<String, usize> = HashMap::new();
    for line in lines {
        *rows.entry(line.to_string()).or_default() += 1;
    }
    for trip in plan.trips.iter().filter(|t| t.quantity > 0) {
        let key = format!(
            "{},{},{},{},{},{}",
            trip.from, trip.to, trip.depart, trip.arrive, trip.mess_type, trip.quantity
        );
        let slot = rows.get_mut(&key).unwrap_or_else(|| panic!("no schedule row for {key}"));
        *slot -= 1;
    }
    assert!(rows.values().all(|&n| n == 0), "unmatched schedule rows: {rows:?}");

    let traces = std::fs::read_to_string(dir.path().join("traces.csv")).unwrap();
    assert_eq!(traces.lines().count(), plan.steps + 2);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["routed"], true);
}

#[test]
fn comparison_pairs_every_step_and_routed_dominates() {
    let scenario = instances::tiny(2);
    let (routed, stat, comparison) = report::compare(&scenario, &MipSettings::default()).unwrap();
    assert!(comparison.routed_objective >= comparison.static_objective - report::DOMINANCE_SLACK);
    assert_eq!(comparison.steps.len(), scenario.horizon.steps);
    assert_eq!(comparison.soc.len(), scenario.ess.len() * (scenario.horizon.steps + 1));

    let dir = tempfile::tempdir().unwrap();
    report::write_comparison(dir.path(), &routed, &stat, &comparison).unwrap();
    for name in ["compare.json", "compare_steps.csv", "compare_soc.csv", "routed/plan.json", "static/plan.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
}

#[test]
fn nine_significant_digits() {
    assert_eq!(report::format_sig9(1.0 / 3.0), "0.333333333");
    assert_eq!(report::format_sig9(12345.678901234), "12345.6789");
    assert_eq!(report::format_sig9(-2.5e-7), "-2.50000000e-7");
    assert_eq!(report::format_sig9(0.0), "0");
}

#[test]
fn without_arcs_routed_and_static_coincide() {
    let mut scenario = instances::tiny(1);
    scenario.transport.clear();
    let (_, _, comparison) = report::compare(&scenario, &MipSettings::default()).unwrap();
    assert!((comparison.routed_objective - comparison.static_objective).abs() <= 1e-6);
    let mut first: HashMap<_, f64> = HashMap::new();
    for pair in &comparison.soc {
        let upper = *first.entry(pair.bus).or_insert(pair.upper_static);
        assert!((pair.upper_static - upper).abs() < 1e-12, "static book moves at {} t={}", pair.bus, pair.t);
    }
}

#[test]
fn shipped_scenario_files_match_the_built_in_instances() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let table1 = mess_restore::Scenario::load_validated(&root.join("table1_123bus.json")).unwrap();
    assert_eq!(table1, instances::table1(0));
    let desk = mess_restore::Scenario::load_validated(&root.join("desk.json")).unwrap();
    assert_eq!(desk, instances::desk());
}
