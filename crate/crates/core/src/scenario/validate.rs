use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{BusId, BusKind, DisjointSets, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return write!(f, "pass");
        }
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Checks every invariant of the data model. Violations are collected, not
/// short-circuited, so one run reports everything wrong with a document.
pub fn validate(s: &Scenario) -> ValidationReport {
    let mut r = ValidationReport::default();
    let steps = s.horizon.steps;

    if steps < 1 {
        r.push("horizon.steps", "T must be at least 1");
    }
    if s.horizon.max_travel >= steps {
        r.push("horizon.max_travel", "H must be < T");
    }
    if !(s.horizon.step_hours > 0.0 && s.horizon.step_hours.is_finite()) {
        r.push("horizon.step_hours", "step length must be positive");
    }
    for (name, eta) in [("options.eta_ch", s.options.eta_ch), ("options.eta_dis", s.options.eta_dis)] {
        if !(eta > 0.0 && eta <= 1.0) {
            r.push(name, "efficiency must lie in (0, 1]");
        }
    }
    if !(s.options.v_min <= 1.0 && 1.0 <= s.options.v_max && s.options.v_min >= 0.0) {
        r.push("options.v_min/v_max", "voltage bounds must satisfy 0 <= v_min <= 1 <= v_max");
    }

    let kinds = check_buses(s, &mut r);
    check_devices(s, &kinds, &mut r);
    check_branches(s, &kinds, &mut r);
    check_ess(s, &mut r);
    check_transport(s, &kinds, &mut r);
    check_costs(s, &mut r);
    check_references(s, &kinds, &mut r);
    r
}

fn check_buses(s: &Scenario, r: &mut ValidationReport) -> BTreeMap<BusId, BusKind> {
    let mut kinds = BTreeMap::new();
    for (i, bus) in s.buses.iter().enumerate() {
        if kinds.insert(bus.id, bus.kind).is_some() {
            r.push(format!("buses[{i}]"), format!("duplicate bus id {}", bus.id));
        }
    }
    if s.buses.is_empty() {
        r.push("buses", "scenario has no buses");
    }
    kinds
}

// Every bus kind must be backed by exactly one device record of that kind.
fn check_devices(s: &Scenario, kinds: &BTreeMap<BusId, BusKind>, r: &mut ValidationReport) {
    let mut owners: BTreeMap<BusId, usize> = BTreeMap::new();
    let mut claim = |field: String, bus: BusId, kind: BusKind, r: &mut ValidationReport| {
        match kinds.get(&bus) {
            None => r.push(field, format!("unknown bus {bus}")),
            Some(&k) if k != kind => r.push(field, format!("bus {bus} is not a {kind:?} bus")),
            Some(_) => {}
        }
        *owners.entry(bus).or_default() += 1;
    };
    for (i, g) in s.generators.iter().enumerate() {
        claim(format!("generators[{i}].bus"), g.bus, BusKind::Generator, r);
    }
    for (i, l) in s.loads.iter().enumerate() {
        claim(format!("loads[{i}].bus"), l.bus, BusKind::Load, r);
    }
    for (i, e) in s.ess.iter().enumerate() {
        claim(format!("ess[{i}].bus"), e.bus, BusKind::Ess, r);
    }
    for bus in &s.buses {
        match owners.get(&bus.id).copied().unwrap_or(0) {
            0 => r.push("buses", format!("bus {} has no {:?} record", bus.id, bus.kind)),
            1 => {}
            n => r.push("buses", format!("bus {} has {n} device records", bus.id)),
        }
    }

    let steps = s.horizon.steps;
    for (i, g) in s.generators.iter().enumerate() {
        let f = |name: &str| format!("generators[{i}].{name}");
        if !(g.p_max >= 0.0) {
            r.push(f("p_max"), "p_max must be >= 0");
        }
        if !(g.ramp_down <= 0.0 && 0.0 <= g.ramp_up) {
            r.push(f("ramp"), "ramp_down <= 0 <= ramp_up required");
        }
        if !(g.fuel_initial >= 0.0) {
            r.push(f("fuel_initial"), "initial fuel must be >= 0");
        }
        if !(g.fuel_rate >= 0.0 && g.fuel_rate.is_finite()) {
            r.push(f("fuel_rate"), "fuel rate must be finite and >= 0");
        }
        if !(g.q_min <= g.q_max) {
            r.push(f("q_min"), "q_min <= q_max required");
        }
    }
    for (i, l) in s.loads.iter().enumerate() {
        if l.p_forecast.len() != steps || l.q_forecast.len() != steps {
            r.push(format!("loads[{i}]"), format!("forecasts must have length T = {steps}"));
        }
        if l.p_forecast.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            r.push(format!("loads[{i}].p_forecast"), "forecast must be > 0 at every step");
        }
        if l.q_forecast.iter().any(|q| !q.is_finite()) {
            r.push(format!("loads[{i}].q_forecast"), "forecast must be finite");
        }
    }
}

fn check_branches(s: &Scenario, kinds: &BTreeMap<BusId, BusKind>, r: &mut ValidationReport) {
    let position: BTreeMap<BusId, usize> = s.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut sets = DisjointSets::new(s.buses.len());
    for (i, b) in s.branches.iter().enumerate() {
        let field = format!("branches[{i}]");
        if !kinds.contains_key(&b.from) || !kinds.contains_key(&b.to) {
            r.push(field, format!("branch {} -> {} names an unknown bus", b.from, b.to));
            continue;
        }
        if b.from == b.to {
            r.push(field, "branch endpoints must differ");
            continue;
        }
        if !(b.resistance >= 0.0 && b.resistance.is_finite()) {
            r.push(field.clone(), "resistance must be finite and >= 0");
        }
        if !b.reactance.is_finite() {
            r.push(field.clone(), "reactance must be finite");
        }
        if let Some(l) = b.current_sq_max {
            if !(l >= 0.0) {
                r.push(field.clone(), "current bound must be >= 0");
            }
        }
        if !sets.union(position[&b.from], position[&b.to]) {
            r.push(field, format!("branch {} -> {} closes a cycle; network must be a forest", b.from, b.to));
        }
    }
}

fn check_ess(s: &Scenario, r: &mut ValidationReport) {
    let m = s.mess_types.len();
    for (nu, t) in s.mess_types.iter().enumerate() {
        if !(0.0 <= t.soc_min_unit && t.soc_min_unit < t.soc_max_unit) {
            r.push(format!("mess_types[{nu}]"), "0 <= soc_min_unit < soc_max_unit required");
        }
    }
    for (i, e) in s.ess.iter().enumerate() {
        let f = |name: &str| format!("ess[{i}].{name}");
        if e.initial_units.len() != m {
            r.push(f("initial_units"), format!("expected one count per MESS type ({m})"));
        }
        if e.unit_initial_soc.len() != e.initial_units.len() {
            r.push(f("unit_initial_soc"), "expected one SoC list per MESS type");
        }
        for (nu, (socs, &count)) in e.unit_initial_soc.iter().zip(&e.initial_units).enumerate() {
            if socs.len() != count as usize {
                r.push(
                    f("unit_initial_soc"),
                    format!("type {} lists {} SoC values for {count} units", nu + 1, socs.len()),
                );
            }
            if let Some(t) = s.mess_types.get(nu) {
                if socs.iter().any(|&v| !(t.soc_min_unit <= v && v <= t.soc_max_unit)) {
                    r.push(f("unit_initial_soc"), format!("type {} initial SoC outside unit bounds", nu + 1));
                }
            }
        }
        if !(e.p_ch_max >= 0.0 && e.p_dis_max >= 0.0) {
            r.push(f("p_max"), "charge and discharge limits must be >= 0");
        }
        if !(e.q_min <= e.q_max) {
            r.push(f("q_min"), "q_min <= q_max required");
        }
        if !(0.0 <= e.stationary_soc_min
            && e.stationary_soc_min <= e.stationary_soc_init
            && e.stationary_soc_init <= e.stationary_soc_max)
        {
            r.push(f("stationary"), "0 <= stationary min <= init <= max required");
        }
    }
}

fn check_transport(s: &Scenario, kinds: &BTreeMap<BusId, BusKind>, r: &mut ValidationReport) {
    let steps = s.horizon.steps;
    let h = s.horizon.max_travel;
    for (i, a) in s.transport.iter().enumerate() {
        let field = format!("transport[{i}]");
        if a.from == a.to {
            r.push(field.clone(), "self-loop arc");
        }
        for end in [a.from, a.to] {
            if kinds.get(&end) != Some(&BusKind::Ess) {
                r.push(field.clone(), format!("arc endpoint {end} is not an ESS bus"));
            }
        }
        if a.travel.is_empty() {
            r.push(field.clone(), "arc allows no travel time");
        }
        for &w in &a.travel {
            if w == 0 || w > h {
                r.push(field.clone(), format!("travel time {w} outside [1, H = {h}]"));
            }
        }
        if let Some(departs) = &a.depart {
            for &t in departs {
                let latest = steps.saturating_sub(a.travel.iter().copied().min().unwrap_or(1));
                if t == 0 || t > latest {
                    r.push(field.clone(), format!("departure {t} cannot arrive by T = {steps}"));
                }
            }
        }
        if let Some(types) = &a.types {
            for &nu in types {
                if nu == 0 || nu > s.mess_types.len() {
                    r.push(field.clone(), format!("unknown MESS type {nu}"));
                }
            }
        }
    }
}

fn check_costs(s: &Scenario, r: &mut ValidationReport) {
    let steps = s.horizon.steps;
    let c = &s.costs;
    let table_ok = |rows: &[Vec<f64>], count: usize| rows.len() == count && rows.iter().all(|row| row.len() == steps);
    if !table_ok(&c.pickup, s.loads.len()) {
        r.push("costs.pickup", "expected one weight per load per step");
    }
    if !table_ok(&c.generation, s.generators.len()) {
        r.push("costs.generation", "expected one weight per generator per step");
    }
    if c.pickup.iter().flatten().chain(c.generation.iter().flatten()).any(|&w| !(w >= 0.0 && w.is_finite())) {
        r.push("costs", "pickup and generation weights must be finite and >= 0");
    }
    if !s.transport.is_empty() {
        let h = s.horizon.max_travel;
        if c.transport.per_unit.len() != s.mess_types.len() || c.transport.per_unit.iter().any(|row| row.len() < h) {
            r.push("costs.transport.per_unit", "expected one cost per MESS type per travel time");
        }
    }
    let transport_values = c.transport.per_unit.iter().flatten().chain(c.transport.overrides.iter().map(|o| &o.cost));
    if transport_values.into_iter().any(|w| !w.is_finite()) {
        r.push("costs.transport", "transport costs must be finite");
    }
}

fn check_references(s: &Scenario, kinds: &BTreeMap<BusId, BusKind>, r: &mut ValidationReport) {
    let Some(explicit) = &s.options.reference_buses else {
        return;
    };
    let islands = s.islands();
    let mut seen = BTreeSet::new();
    for b in explicit {
        if !kinds.contains_key(b) {
            r.push("options.reference_buses", format!("unknown bus {b}"));
        }
        if let Some(k) = islands.iter().position(|isl| isl.binary_search(b).is_ok()) {
            if !seen.insert(k) {
                r.push("options.reference_buses", format!("island of bus {b} has two reference buses"));
            }
        }
    }
    if seen.len() != islands.len() {
        r.push("options.reference_buses", "each island needs exactly one reference bus");
    }
}
