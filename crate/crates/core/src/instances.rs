//! Built-in scenarios.
//!
//! * [`two_bus`]: one generator feeding one load over one line.
//! * [`desk`]: two islands. The first is generation-rich; the second has no
//!   generator, heavy demand and two nearly empty ESS buses.
//! * [`table1`]: the 123-bus, five-island test system with 19 ESS buses,
//!   19 generators and 40 transport arcs.
//! * [`tiny`]: small random instances whose integer domain is small enough
//!   to enumerate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{
    Branch, Bus, BusId, BusKind, CostScheme, CostWeights, EssBusSpec, GeneratorSpec, Horizon,
    LoadSpec, MessType, Options, Scenario, TransportArcSpec, TransportCosts,
};

pub(crate) fn bus(id: u32, kind: BusKind) -> Bus {
    Bus { id: BusId(id), kind }
}

pub(crate) fn line(from: u32, to: u32, resistance: f64, reactance: f64) -> Branch {
    Branch {
        from: BusId(from),
        to: BusId(to),
        resistance,
        reactance,
        current_sq_max: None,
    }
}

pub(crate) fn generator(id: u32, p_max: f64, fuel: f64) -> GeneratorSpec {
    GeneratorSpec {
        bus: BusId(id),
        p_max,
        ramp_up: 0.15,
        ramp_down: -0.1,
        fuel_initial: fuel,
        fuel_rate: 1.0,
        q_min: -0.24,
        q_max: 0.24,
    }
}

pub(crate) fn load(id: u32, p: Vec<f64>) -> LoadSpec {
    let q = p.iter().map(|v| 0.5 * v).collect();
    LoadSpec {
        bus: BusId(id),
        p_forecast: p,
        q_forecast: q,
    }
}

pub(crate) fn ess(id: u32, unit_soc: Vec<Vec<f64>>) -> EssBusSpec {
    EssBusSpec {
        bus: BusId(id),
        initial_units: unit_soc.iter().map(|v| v.len() as u32).collect(),
        unit_initial_soc: unit_soc,
        p_ch_max: 0.16,
        p_dis_max: 0.16,
        q_min: -0.24,
        q_max: 0.24,
        stationary_soc_min: 0.0,
        stationary_soc_max: 0.0,
        stationary_soc_init: 0.0,
    }
}

pub(crate) fn arc(from: u32, to: u32, travel: Vec<usize>) -> TransportArcSpec {
    TransportArcSpec {
        from: BusId(from),
        to: BusId(to),
        travel,
        depart: None,
        types: None,
        count_max: None,
    }
}

pub(crate) fn table1_types() -> Vec<MessType> {
    vec![
        MessType {
            soc_min_unit: 0.025,
            soc_max_unit: 0.25,
        },
        MessType {
            soc_min_unit: 0.005,
            soc_max_unit: 0.05,
        },
    ]
}

pub(crate) fn options() -> Options {
    Options {
        eta_ch: 0.9,
        eta_dis: 0.9,
        v_min: 0.95,
        v_max: 1.05,
        reference_buses: None,
    }
}

/// Fills the cost tables from the default pricing scheme.
pub fn priced(mut s: Scenario) -> Scenario {
    let scheme = CostScheme::default();
    let dt = s.horizon.step_hours;
    s.costs = CostWeights {
        pickup: scheme.pickup_weights(&s.loads, dt),
        generation: scheme.generation_weights(s.generators.len(), s.horizon.steps, dt),
        transport: TransportCosts {
            per_unit: scheme.transport_per_unit(&s.mess_types, s.horizon.max_travel),
            overrides: Vec::new(),
        },
    };
    s
}

/// Generator at bus 1 serving a 0.1 MW load at bus 2, one step.
pub fn two_bus() -> Scenario {
    priced(Scenario {
        name: "two-bus".into(),
        buses: vec![bus(1, BusKind::Generator), bus(2, BusKind::Load)],
        branches: vec![line(1, 2, 0.01, 0.02)],
        generators: vec![generator(1, 0.46, 3.55)],
        loads: vec![load(2, vec![0.1])],
        ess: Vec::new(),
        mess_types: Vec::new(),
        transport: Vec::new(),
        costs: CostWeights::default(),
        horizon: Horizon {
            steps: 1,
            step_hours: 1.0,
            max_travel: 0,
        },
        options: options(),
    })
}

/// Desk-scale routing instance: T = 6, H = 2, two MESS types.
///
/// Island A (buses 1-6) has two generators, ESS bus 3 holding most of the
/// fleet, and light loads. Island B (buses 7-12) has no generator, ESS buses
/// 7 and 9 with one nearly drained unit each, and heavy loads. Units can
/// travel A -> B and back.
pub fn desk() -> Scenario {
    let steps = 6;
    let profile = [0.9, 1.0, 1.0, 1.1, 1.0, 0.9];
    let shaped = |base: f64| profile.iter().map(|f| base * f).collect::<Vec<_>>();
    priced(Scenario {
        name: "desk".into(),
        buses: vec![
            bus(1, BusKind::Generator),
            bus(2, BusKind::Generator),
            bus(3, BusKind::Ess),
            bus(4, BusKind::Load),
            bus(5, BusKind::Load),
            bus(6, BusKind::Load),
            bus(7, BusKind::Ess),
            bus(8, BusKind::Load),
            bus(9, BusKind::Ess),
            bus(10, BusKind::Load),
            bus(11, BusKind::Load),
            bus(12, BusKind::Load),
        ],
        branches: vec![
            line(1, 2, 0.01, 0.02),
            line(1, 3, 0.01, 0.02),
            line(2, 4, 0.02, 0.03),
            line(2, 5, 0.02, 0.03),
            line(3, 6, 0.02, 0.03),
            line(7, 8, 0.01, 0.02),
            line(7, 9, 0.01, 0.02),
            line(8, 10, 0.02, 0.03),
            line(9, 11, 0.02, 0.03),
            line(9, 12, 0.02, 0.03),
        ],
        generators: vec![generator(1, 0.46, 3.55), generator(2, 0.46, 3.55)],
        loads: vec![
            load(4, shaped(0.05)),
            load(5, shaped(0.04)),
            load(6, shaped(0.03)),
            load(8, shaped(0.12)),
            load(10, shaped(0.10)),
            load(11, shaped(0.11)),
            load(12, shaped(0.09)),
        ],
        ess: vec![
            ess(3, vec![vec![0.16, 0.15, 0.15], vec![0.03, 0.03]]),
            ess(7, vec![vec![0.05], vec![]]),
            ess(9, vec![vec![], vec![0.01]]),
        ],
        mess_types: table1_types(),
        transport: vec![
            TransportArcSpec {
                types: Some(vec![1]),
                count_max: Some(3),
                ..arc(3, 7, vec![1])
            },
            TransportArcSpec {
                types: Some(vec![2]),
                count_max: Some(2),
                depart: Some(vec![1, 2]),
                ..arc(3, 9, vec![2])
            },
            TransportArcSpec {
                types: Some(vec![1]),
                count_max: Some(1),
                depart: Some(vec![4]),
                ..arc(7, 3, vec![1])
            },
        ],
        costs: CostWeights::default(),
        horizon: Horizon {
            steps,
            step_hours: 1.0,
            max_travel: 2,
        },
        options: options(),
    })
}

pub const TABLE1_ESS: [u32; 19] = [
    3, 8, 18, 21, 23, 25, 54, 57, 61, 67, 72, 89, 91, 93, 115, 116, 120, 121, 122,
];

pub const TABLE1_GEN: [u32; 19] = [
    13, 14, 15, 26, 27, 36, 40, 44, 78, 81, 97, 101, 105, 108, 110, 117, 118, 119, 123,
];

/// The transport arcs of the 123-bus system. The last listed arc of the
/// source table, (122, 112), names a load bus; it is read as (122, 116). The
/// repeated (121, 72) is kept as a second, parallel road.
pub const TABLE1_ARCS: [(u32, u32); 40] = [
    (121, 61),
    (121, 72),
    (121, 120),
    (57, 120),
    (121, 116),
    (21, 67),
    (21, 122),
    (23, 121),
    (25, 89),
    (54, 121),
    (54, 25),
    (54, 115),
    (54, 116),
    (54, 120),
    (57, 54),
    (61, 116),
    (67, 23),
    (67, 116),
    (67, 120),
    (72, 25),
    (72, 57),
    (72, 89),
    (72, 93),
    (89, 67),
    (89, 72),
    (89, 122),
    (91, 115),
    (91, 120),
    (93, 121),
    (93, 89),
    (115, 57),
    (116, 72),
    (116, 120),
    (120, 57),
    (120, 89),
    (121, 72),
    (121, 93),
    (122, 121),
    (122, 61),
    (122, 116),
];

/// Island id ranges of the 123-bus system. 118 branches over 123 buses
/// leave five components.
pub const TABLE1_ISLANDS: [(u32, u32); 5] = [(1, 34), (35, 51), (52, 66), (67, 100), (101, 123)];

/// The 123-bus instance. `seed` draws the initial unit SoCs (uniform in
/// `[0.5, 0.65]` of capacity), the line impedances and the load levels.
pub fn table1(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = 10;
    let types = table1_types();
    let kind_of = |id: u32| {
        if TABLE1_ESS.contains(&id) {
            BusKind::Ess
        } else if TABLE1_GEN.contains(&id) {
            BusKind::Generator
        } else {
            BusKind::Load
        }
    };
    let buses: Vec<Bus> = (1..=123).map(|id| bus(id, kind_of(id))).collect();
    let mut branches = Vec::new();
    for &(first, last) in &TABLE1_ISLANDS {
        for id in first + 1..=last {
            let local = id - first;
            let parent = first + (local - 1) / 2;
            let r = rng.gen_range(0.005..0.015);
            branches.push(line(parent, id, r, 2.0 * r));
        }
    }
    let generators = TABLE1_GEN.iter().map(|&id| generator(id, 0.46, 3.55)).collect();
    let levels = [0.02, 0.04, 0.075];
    let loads = buses
        .iter()
        .filter(|b| b.kind == BusKind::Load)
        .map(|b| {
            let base = levels[rng.gen_range(0..levels.len())];
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = (0..steps)
                .map(|t| {
                    let angle = phase + std::f64::consts::TAU * t as f64 / steps as f64;
                    base * (1.0 + 0.1 * angle.sin())
                })
                .collect();
            load(b.id.0, p)
        })
        .collect();
    let ess_buses = TABLE1_ESS
        .iter()
        .map(|&id| {
            let counts = [10usize, 20];
            let soc = types
                .iter()
                .zip(counts)
                .map(|(m, count)| {
                    (0..count)
                        .map(|_| rng.gen_range(0.5..=0.65) * m.soc_max_unit)
                        .collect()
                })
                .collect();
            ess(id, soc)
        })
        .collect();
    let transport = TABLE1_ARCS
        .iter()
        .map(|&(from, to)| arc(from, to, vec![1, 2, 3]))
        .collect();
    priced(Scenario {
        name: format!("table1-seed{seed}"),
        buses,
        branches,
        generators,
        loads,
        ess: ess_buses,
        mess_types: types,
        transport,
        costs: CostWeights::default(),
        horizon: Horizon {
            steps,
            step_hours: 1.0,
            max_travel: 3,
        },
        options: options(),
    })
}

/// Small random instance with at most 12 discrete columns and transport
/// caps of at most 3.
///
/// Island A: generator 1 (reference), ESS 2, load 3. Island B: ESS 4
/// (reference), load 5. One MESS type; travel time 1.
pub fn tiny(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps: usize = if seed % 2 == 0 { 2 } else { 3 };
    let cap: u32 = if steps == 2 { rng.gen_range(1..=3) } else { rng.gen_range(1..=2) };
    let types = vec![MessType {
        soc_min_unit: 0.02,
        soc_max_unit: 0.2,
    }];
    let unit_soc = |rng: &mut ChaCha8Rng, count: usize| -> Vec<f64> {
        (0..count).map(|_| rng.gen_range(0.04..0.18)).collect()
    };
    let units_a = rng.gen_range(2..=4);
    let units_b = rng.gen_range(0..=1);
    let soc_a = unit_soc(&mut rng, units_a);
    let soc_b = unit_soc(&mut rng, units_b);
    let demand = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> Vec<f64> {
        (0..steps).map(|_| rng.gen_range(lo..hi)).collect()
    };
    let loads = vec![
        load(3, demand(&mut rng, 0.03, 0.1)),
        load(5, demand(&mut rng, 0.05, 0.2)),
    ];
    let mut transport = vec![TransportArcSpec {
        count_max: Some(cap),
        ..arc(2, 4, vec![1])
    }];
    if steps == 2 {
        transport.push(TransportArcSpec {
            count_max: Some(cap),
            ..arc(4, 2, vec![1])
        });
    }
    let fuel = rng.gen_range(0.1..0.6);
    let mut e_a = ess(2, vec![soc_a]);
    let mut e_b = ess(4, vec![soc_b]);
    e_a.p_ch_max = rng.gen_range(0.05..0.16);
    e_b.p_dis_max = rng.gen_range(0.05..0.16);
    e_b.stationary_soc_max = rng.gen_range(0.0..0.1);
    e_b.stationary_soc_init = 0.5 * e_b.stationary_soc_max;
    priced(Scenario {
        name: format!("tiny-seed{seed}"),
        buses: vec![
            bus(1, BusKind::Generator),
            bus(2, BusKind::Ess),
            bus(3, BusKind::Load),
            bus(4, BusKind::Ess),
            bus(5, BusKind::Load),
        ],
        branches: vec![line(1, 2, 0.01, 0.02), line(2, 3, 0.01, 0.02), line(4, 5, 0.01, 0.02)],
        generators: vec![generator(1, 0.3, fuel)],
        loads,
        ess: vec![e_a, e_b],
        mess_types: types,
        transport,
        costs: CostWeights::default(),
        horizon: Horizon {
            steps,
            step_hours: 1.0,
            max_travel: 1,
        },
        options: options(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::validate;

    #[test]
    fn built_in_scenarios_validate() {
        for s in [two_bus(), desk(), table1(1), tiny(0), tiny(1), tiny(7)] {
            let report = validate(&s);
            assert!(report.is_pass(), "{}: {report}", s.name);
        }
    }

    #[test]
    fn table1_counts() {
        let s = table1(3);
        assert_eq!(s.buses.len(), 123);
        assert_eq!(s.branches.len(), 118);
        assert_eq!(s.ess.len(), 19);
        assert_eq!(s.generators.len(), 19);
        assert_eq!(s.loads.len(), 85);
        assert_eq!(s.islands().len(), 5);
        assert_eq!(s.transport.len(), 40);
    }

    #[test]
    fn table1_initial_soc_within_drawn_band() {
        let s = table1(4);
        for e in &s.ess {
            for (m, socs) in s.mess_types.iter().zip(&e.unit_initial_soc) {
                assert!(socs
                    .iter()
                    .all(|&v| v >= 0.5 * m.soc_max_unit - 1e-12 && v <= 0.65 * m.soc_max_unit + 1e-12));
            }
        }
    }

    #[test]
    fn island_without_generator_falls_back_to_ess_reference() {
        let s = table1(0);
        let refs = s.reference_buses();
        assert_eq!(refs[2], BusId(54));
        assert_eq!(refs[0], BusId(13));
    }

    #[test]
    fn table1_is_deterministic_in_seed() {
        assert_eq!(table1(9), table1(9));
        assert_ne!(table1(9), table1(10));
    }

    #[test]
    fn tiny_instances_stay_small() {
        for seed in 0..20 {
            let s = tiny(seed);
            let slots = crate::transport::TransportIndex::build(&s).len();
            let discrete = s.ess.len() * s.steps() + slots;
            assert!(discrete <= 12, "seed {seed}: {discrete}");
            assert!(s.transport.iter().all(|a| a.count_max.unwrap() <= 3));
        }
    }
}
