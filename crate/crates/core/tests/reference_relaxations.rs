//! Continuous relaxations checked against values computed outside this
//! crate: the compiled program was exported as JSON and solved with
//! cvxpy + Clarabel (interior point), independently of the ADMM solver.

use mess_restore::socp::{self, SolveStatus, SolverSettings};
use mess_restore::{compile, instances, Scenario};

fn relaxation(scenario: &Scenario) -> f64 {
    let model = compile(scenario).unwrap();
    let r = socp::solve(&model.program, SolverSettings::default().with_tolerance(1e-9)).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    r.objective
}

#[test]
fn two_bus_relaxation_matches_interior_point_value() {
    let value = relaxation(&instances::two_bus());
    assert!((value - 0.019_899_597_265).abs() < 1e-5, "{value}");
}

#[test]
fn tiny_relaxation_matches_interior_point_value() {
    let value = relaxation(&instances::tiny(0));
    assert!((value - 0.305_774_333_577).abs() < 1e-5, "{value}");
}
