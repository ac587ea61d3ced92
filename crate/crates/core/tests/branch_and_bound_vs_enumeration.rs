mod common;

use std::time::{Duration, Instant};

use mess_restore::oracle::{domain_size, enumerate_optimal, enumeration_domains, EnumerationCaps};
use mess_restore::{compile, instances, Error};

#[test]
fn branch_and_bound_matches_enumeration_on_tiny_instances() {
    for seed in 0..6 {
        let scenario = instances::tiny(seed);
        let start = Instant::now();
        let outcome = common::solve(&scenario, false);
        let bb = outcome.result.objective().expect("tiny instances are feasible");
        let brute = enumerate_optimal(&outcome.model.program, &EnumerationCaps::default()).unwrap();
        assert_eq!(brute.unresolved, 0, "seed {seed}");
        let truth = brute.objective().unwrap();
        assert!(
            common::relative_diff(bb, truth) <= 1e-4,
            "seed {seed}: branch and bound {bb} vs enumeration {truth}"
        );
        assert!(start.elapsed() < Duration::from_secs(30), "seed {seed} took {:?}", start.elapsed());
    }
}

#[test]
fn enumeration_refuses_the_desk_instance_with_its_domain_size() {
    let model = compile(&instances::desk()).unwrap();
    let caps = EnumerationCaps::default();
    let product = domain_size(&enumeration_domains(&model.program, &caps));
    assert!(product > caps.max_assignments);
    match enumerate_optimal(&model.program, &caps) {
        Err(Error::DomainTooLarge { product: p, limit }) => {
            assert_eq!(p, product);
            assert_eq!(limit, 1_000_000);
        }
        other => panic!("expected a refusal, got {:?}", other.map(|e| e.assignments)),
    }
}
