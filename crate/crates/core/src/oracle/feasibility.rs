//! Constraint sweep over a [`RestorationPlan`], computed from the scenario
//! data alone. Nothing here reads the compiled program, so a mistake in a
//! row builder shows up as a disagreement rather than certifying itself.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::formulation::RestorationPlan;
use crate::scenario::{BusId, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    /// Plan dimensions that do not match the scenario.
    Shape,
    PowerBalance,
    VoltageDrop,
    Cone,
    Bounds,
    Injection,
    Fuel,
    Ramp,
    PickupMonotonicity,
    Complementarity,
    SocEvolution,
    SocWindow,
    BoundEvolution,
    Conservation,
    TravelBox,
    Integrality,
}

impl Family {
    pub const ALL: [Family; 16] = [
        Family::Shape,
        Family::PowerBalance,
        Family::VoltageDrop,
        Family::Cone,
        Family::Bounds,
        Family::Injection,
        Family::Fuel,
        Family::Ramp,
        Family::PickupMonotonicity,
        Family::Complementarity,
        Family::SocEvolution,
        Family::SocWindow,
        Family::BoundEvolution,
        Family::Conservation,
        Family::TravelBox,
        Family::Integrality,
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where the worst violation of a family occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Location {
    pub bus: Option<BusId>,
    pub t: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyCheck {
    pub family: Family,
    /// Largest absolute violation, `0` when the family is satisfied.
    pub worst: f64,
    pub at: Option<Location>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub tol: f64,
    pub families: Vec<FamilyCheck>,
}

impl FeasibilityReport {
    pub fn worst(&self, family: Family) -> f64 {
        self.check(family).map_or(0.0, |c| c.worst)
    }

    pub fn check(&self, family: Family) -> Option<&FamilyCheck> {
        self.families.iter().find(|c| c.family == family)
    }

    /// Families whose worst violation exceeds the tolerance.
    pub fn violated(&self) -> Vec<&FamilyCheck> {
        self.families.iter().filter(|c| c.worst > self.tol).collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.violated().is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.families.iter().map(|c| c.worst).fold(0.0, f64::max)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.families {
            let verdict = if c.worst > self.tol { "FAIL" } else { "ok" };
            write!(f, "{:<20} {:>4} {:.3e}", c.family.to_string(), verdict, c.worst)?;
            if let (true, Some(at)) = (c.worst > self.tol, &c.at) {
                if let Some(bus) = at.bus {
                    write!(f, " bus {bus}")?;
                }
                if let Some(t) = at.t {
                    write!(f, " t {t}")?;
                }
                write!(f, " ({})", at.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct Tally {
    worst: BTreeMap<Family, (f64, Option<Location>)>,
}

impl Tally {
    fn new() -> Self {
        Self {
            worst: Family::ALL.iter().map(|&f| (f, (0.0, None))).collect(),
        }
    }

    fn record(&mut self, family: Family, violation: f64, bus: Option<BusId>, t: Option<usize>, detail: impl Into<String>) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        let slot = self.worst.get_mut(&family).expect("every family is tallied");
        if v > slot.0 {
            *slot = (
                v,
                Some(Location {
                    bus,
                    t,
                    detail: detail.into(),
                }),
            );
        }
    }

    /// `|lhs - rhs|`.
    fn equal(&mut self, family: Family, lhs: f64, rhs: f64, bus: Option<BusId>, t: Option<usize>, detail: &str) {
        self.record(family, (lhs - rhs).abs(), bus, t, detail);
    }

    /// `max(0, lhs - rhs)`.
    fn at_most(&mut self, family: Family, lhs: f64, rhs: f64, bus: Option<BusId>, t: Option<usize>, detail: &str) {
        self.record(family, (lhs - rhs).max(0.0), bus, t, detail);
    }

    fn within(&mut self, family: Family, v: f64, lo: f64, hi: f64, bus: Option<BusId>, t: Option<usize>, detail: &str) {
        self.record(family, (lo - v).max(v - hi).max(0.0), bus, t, detail);
    }

    fn finish(self, tol: f64) -> FeasibilityReport {
        FeasibilityReport {
            tol,
            families: self
                .worst
                .into_iter()
                .map(|(family, (worst, at))| FamilyCheck { family, worst, at })
                .collect(),
        }
    }
}

/// Evaluates every constraint family on `plan`.
///
/// Steps are 1-based in locations. Power and network quantities have `T`
/// entries; SoC, bounds, transfer and fuel have `T + 1`.
pub fn check_feasibility(scenario: &Scenario, plan: &RestorationPlan, tol: f64) -> FeasibilityReport {
    let mut tally = Tally::new();
    if !shape_ok(scenario, plan, &mut tally) {
        return tally.finish(tol);
    }
    network(scenario, plan, &mut tally);
    generators(scenario, plan, &mut tally);
    loads(scenario, plan, &mut tally);
    storage(scenario, plan, &mut tally);
    trips(scenario, plan, &mut tally);
    tally.finish(tol)
}

fn shape_ok(s: &Scenario, plan: &RestorationPlan, tally: &mut Tally) -> bool {
    let steps = s.horizon.steps;
    let mut problems = Vec::new();
    if plan.steps != steps {
        problems.push(format!("plan has {} steps, scenario {steps}", plan.steps));
    }
    let lens_ok = |rows: &Vec<Vec<f64>>, width: usize| rows.len() == steps && rows.iter().all(|r| r.len() == width);
    let (nb, ne) = (s.buses.len(), s.branches.len());
    let net = &plan.network;
    if !(lens_ok(&net.voltage_sq, nb) && lens_ok(&net.p, nb) && lens_ok(&net.q, nb)) {
        problems.push("bus traces do not match the bus list".into());
    }
    if !(lens_ok(&net.branch_p, ne) && lens_ok(&net.branch_q, ne) && lens_ok(&net.current_sq, ne)) {
        problems.push("branch traces do not match the branch list".into());
    }
    let gens_ok = plan.generators.len() == s.generators.len()
        && plan
            .generators
            .iter()
            .zip(&s.generators)
            .all(|(g, spec)| g.bus == spec.bus && g.dispatch.len() == steps && g.fuel.len() == steps + 1);
    if !gens_ok {
        problems.push("generator traces do not match the generator list".into());
    }
    let loads_ok = plan.loads.len() == s.loads.len()
        && plan.loads.iter().zip(&s.loads).all(|(l, spec)| l.bus == spec.bus && l.pickup.len() == steps);
    if !loads_ok {
        problems.push("load traces do not match the load list".into());
    }
    let ess_ok = plan.ess.len() == s.ess.len()
        && plan.ess.iter().zip(&s.ess).all(|(e, spec)| {
            e.bus == spec.bus
                && e.charge.len() == steps
                && e.discharge.len() == steps
                && e.mode.len() == steps
                && [&e.soc, &e.soc_upper, &e.soc_lower, &e.transfer].iter().all(|v| v.len() == steps + 1)
        });
    if !ess_ok {
        problems.push("storage traces do not match the ESS list".into());
    }
    for p in &problems {
        tally.record(Family::Shape, f64::INFINITY, None, None, p.clone());
    }
    problems.is_empty()
}

fn network(s: &Scenario, plan: &RestorationPlan, tally: &mut Tally) {
    let net = &plan.network;
    let pos: BTreeMap<BusId, usize> = s.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let refs = s.reference_buses();
    for t in 1..=s.horizon.steps {
        let k = t - 1;
        let mut real = net.p[k].clone();
        let mut reactive = net.q[k].clone();
        for (e, br) in s.branches.iter().enumerate() {
            let (i, j) = (pos[&br.from], pos[&br.to]);
            let (pf, qf, l) = (net.branch_p[k][e], net.branch_q[k][e], net.current_sq[k][e]);
            real[j] += pf - br.resistance * l;
            reactive[j] += qf - br.reactance * l;
            real[i] -= pf;
            reactive[i] -= qf;
            let drop = net.voltage_sq[k][i]
                - net.voltage_sq[k][j]
                - 2.0 * (br.resistance * pf + br.reactance * qf)
                + br.impedance_sq() * l;
            let label = format!("branch {} -> {}", br.from, br.to);
            tally.record(Family::VoltageDrop, drop.abs(), Some(br.to), Some(t), label.clone());
            let excess = pf * pf + qf * qf - net.voltage_sq[k][i] * l;
            tally.record(Family::Cone, excess.max(0.0), Some(br.to), Some(t), label.clone());
            let l_max = br.current_sq_max.unwrap_or(f64::INFINITY);
            tally.within(Family::Bounds, l, 0.0, l_max, Some(br.to), Some(t), &format!("current on {label}"));
        }
        for (j, bus) in s.buses.iter().enumerate() {
            tally.record(Family::PowerBalance, real[j].abs(), Some(bus.id), Some(t), "real balance");
            tally.record(Family::PowerBalance, reactive[j].abs(), Some(bus.id), Some(t), "reactive balance");
            let v = net.voltage_sq[k][j];
            if refs.contains(&bus.id) {
                tally.equal(Family::Bounds, v, 1.0, Some(bus.id), Some(t), "reference voltage");
            } else {
                tally.within(Family::Bounds, v, s.options.v_min, s.options.v_max, Some(bus.id), Some(t), "voltage");
            }
        }
    }
}

fn bus_index(s: &Scenario, id: BusId) -> usize {
    s.buses.iter().position(|b| b.id == id).expect("validated bus id")
}

fn generators(s: &Scenario, plan: &RestorationPlan, tally: &mut Tally) {
    let (steps, dt) = (s.horizon.steps, s.horizon.step_hours);
    for (spec, g) in s.generators.iter().zip(&plan.generators) {
        let bus = Some(spec.bus);
        let j = bus_index(s, spec.bus);
        tally.equal(Family::Fuel, g.fuel[0], spec.fuel_initial, bus, Some(1), "initial fuel");
        for t in 1..=steps {
            let pg = g.dispatch[t - 1];
            tally.within(Family::Bounds, pg, 0.0, spec.p_max, bus, Some(t), "generator output");
            let q = plan.network.q[t - 1][j];
            tally.within(Family::Bounds, q, spec.q_min, spec.q_max, bus, Some(t), "generator reactive");
            tally.equal(Family::Injection, plan.network.p[t - 1][j], pg, bus, Some(t), "generator injection");
            let expected = g.fuel[t - 1] - spec.fuel_rate * dt * pg;
            tally.equal(Family::Fuel, g.fuel[t], expected, bus, Some(t + 1), "fuel recursion");
            tally.at_most(Family::Fuel, 0.0, g.fuel[t], bus, Some(t + 1), "fuel exhausted");
        }
        tally.at_most(Family::Ramp, g.dispatch[0], spec.ramp_up, bus, Some(1), "first-step ramp");
        for t in 1..steps {
            let delta = g.dispatch[t] - g.dispatch[t - 1];
            tally.at_most(Family::Ramp, delta, spec.ramp_up, bus, Some(t + 1), "ramp up");
            tally.at_most(Family::Ramp, spec.ramp_down, delta, bus, Some(t + 1), "ramp down");
        }
    }
}

fn loads(s: &Scenario, plan: &RestorationPlan, tally: &mut Tally) {
    let steps = s.horizon.steps;
    for (spec, l) in s.loads.iter().zip(&plan.loads) {
        let bus = Some(spec.bus);
        let j = bus_index(s, spec.bus);
        for t in 1..=steps {
            let r = l.pickup[t - 1];
            tally.within(Family::Bounds, r, 0.0, 1.0, bus, Some(t), "pickup fraction");
            let net = &plan.network;
            tally.equal(Family::Injection, net.p[t - 1][j], -r * spec.p_forecast[t - 1], bus, Some(t), "load real");
            tally.equal(Family::Injection, net.q[t - 1][j], -r * spec.q_forecast[t - 1], bus, Some(t), "load reactive");
            if t < steps {
                tally.at_most(Family::PickupMonotonicity, r, l.pickup[t], bus, Some(t + 1), "pickup decreased");
            }
        }
    }
}

/// Legal trips from the arc specification, independent of the transport
/// index. Returns the reason when the trip is not legal.
fn trip_legality(s: &Scenario, arc: usize, from: BusId, to: BusId, depart: usize, arrive: usize, mess_type: usize) -> Result<u32, String> {
    let spec = s.transport.get(arc).ok_or_else(|| format!("arc {arc} does not exist"))?;
    if spec.from != from || spec.to != to {
        return Err(format!("arc {arc} runs {} -> {}", spec.from, spec.to));
    }
    if mess_type == 0 || mess_type > s.mess_types.len() || !spec.allows_type(mess_type - 1) {
        return Err(format!("type {mess_type} not allowed on arc {arc}"));
    }
    let travel = arrive.saturating_sub(depart);
    let steps = s.horizon.steps;
    if travel == 0 || !spec.travel.contains(&travel) || travel > s.horizon.max_travel {
        return Err(format!("travel time {travel} not allowed on arc {arc}"));
    }
    if depart == 0 || arrive > steps || !spec.allows_departure(depart) {
        return Err(format!("departure {depart} arriving {arrive} not allowed"));
    }
    let fleet: u32 = s.ess.iter().map(|e| e.initial_units.get(mess_type - 1).copied().unwrap_or(0)).sum();
    Ok(spec.count_max.unwrap_or(u32::MAX).min(fleet))
}

fn storage(s: &Scenario, plan: &RestorationPlan, tally: &mut Tally) {
    let (steps, dt) = (s.horizon.steps, s.horizon.step_hours);
    let (eta_ch, eta_dis) = (s.options.eta_ch, s.options.eta_dis);
    let types = &s.mess_types;
    for (spec, e) in s.ess.iter().zip(&plan.ess) {
        let bus = Some(spec.bus);
        let j = bus_index(s, spec.bus);
        for t in 1..=steps {
            let (ch, dis, d) = (e.charge[t - 1], e.discharge[t - 1], e.mode[t - 1]);
            tally.within(Family::Bounds, ch, 0.0, spec.p_ch_max, bus, Some(t), "charge");
            tally.within(Family::Bounds, dis, 0.0, spec.p_dis_max, bus, Some(t), "discharge");
            let q = plan.network.q[t - 1][j];
            tally.within(Family::Bounds, q, spec.q_min, spec.q_max, bus, Some(t), "storage reactive");
            tally.equal(Family::Injection, plan.network.p[t - 1][j], dis - ch, bus, Some(t), "storage injection");
            if d > 1 {
                tally.record(Family::Integrality, f64::from(d) - 1.0, bus, Some(t), "mode is not binary");
            }
            let d = f64::from(d.min(1));
            tally.at_most(Family::Complementarity, ch, d * spec.p_ch_max, bus, Some(t), "charging in discharge mode");
            tally.at_most(
                Family::Complementarity,
                dis,
                (1.0 - d) * spec.p_dis_max,
                bus,
                Some(t),
                "discharging in charge mode",
            );
        }

        // Transfer: SoC arriving minus SoC leaving at each step.
        let mut transfer = vec![0.0; steps + 1];
        let mut d_upper = vec![0.0; steps + 2];
        let mut d_lower = vec![0.0; steps + 2];
        for trip in &plan.trips {
            let Some(m) = types.get(trip.mess_type.wrapping_sub(1)) else { continue };
            let k = f64::from(trip.quantity);
            if trip.to == spec.bus && (1..=steps).contains(&trip.arrive) {
                transfer[trip.arrive - 1] += trip.soc_shipped;
                d_upper[trip.arrive] += k * m.soc_max_unit;
                d_lower[trip.arrive] += k * m.soc_min_unit;
            }
            if trip.from == spec.bus && (1..=steps).contains(&trip.depart) {
                transfer[trip.depart - 1] -= trip.soc_shipped;
                d_upper[trip.depart + 1] -= k * m.soc_max_unit;
                d_lower[trip.depart + 1] -= k * m.soc_min_unit;
            }
        }
        for t in 1..=steps + 1 {
            tally.equal(Family::SocEvolution, e.transfer[t - 1], transfer[t - 1], bus, Some(t), "transferred SoC");
        }

        tally.equal(Family::SocEvolution, e.soc[0], spec.initial_soc(), bus, Some(1), "initial SoC");
        for t in 1..=steps {
            let expected =
                e.soc[t - 1] + e.transfer[t - 1] + eta_ch * dt * e.charge[t - 1] - dt / eta_dis * e.discharge[t - 1];
            tally.equal(Family::SocEvolution, e.soc[t], expected, bus, Some(t + 1), "SoC recursion");
        }
        for t in 1..=steps + 1 {
            let level = e.soc[t - 1] + e.transfer[t - 1];
            tally.at_most(Family::SocWindow, 0.0, e.soc[t - 1], bus, Some(t), "negative SoC");
            tally.at_most(Family::SocWindow, level, e.soc_upper[t - 1], bus, Some(t), "above upper bound");
            tally.at_most(Family::SocWindow, e.soc_lower[t - 1], level, bus, Some(t), "below lower bound");
        }

        let (hi0, lo0) = (spec.initial_soc_upper(types), spec.initial_soc_lower(types));
        tally.equal(Family::BoundEvolution, e.soc_upper[0], hi0, bus, Some(1), "initial upper bound");
        tally.equal(Family::BoundEvolution, e.soc_lower[0], lo0, bus, Some(1), "initial lower bound");
        for t in 2..=steps {
            let hi = e.soc_upper[t - 2] + d_upper[t];
            let lo = e.soc_lower[t - 2] + d_lower[t];
            tally.equal(Family::BoundEvolution, e.soc_upper[t - 1], hi, bus, Some(t), "upper bound step");
            tally.equal(Family::BoundEvolution, e.soc_lower[t - 1], lo, bus, Some(t), "lower bound step");
        }
        tally.equal(Family::BoundEvolution, e.soc_upper[steps], e.soc_upper[steps - 1], bus, Some(steps + 1), "terminal upper bound");
        tally.equal(Family::BoundEvolution, e.soc_lower[steps], e.soc_lower[steps - 1], bus, Some(steps + 1), "terminal lower bound");
    }

    let (total_lo, total_hi) = s.total_soc_bounds();
    for t in 1..=steps + 1 {
        let (mut hi, mut lo) = (0.0, 0.0);
        for e in &plan.ess {
            hi += e.soc_upper[t - 1];
            lo += e.soc_lower[t - 1];
        }
        for trip in plan.trips.iter().filter(|trip| trip.depart < t && t < trip.arrive) {
            if let Some(m) = types.get(trip.mess_type.wrapping_sub(1)) {
                hi += f64::from(trip.quantity) * m.soc_max_unit;
                lo += f64::from(trip.quantity) * m.soc_min_unit;
            }
        }
        tally.equal(Family::Conservation, hi, total_hi, None, Some(t), "upper bounds total");
        tally.equal(Family::Conservation, lo, total_lo, None, Some(t), "lower bounds total");
    }
}

fn trips(s: &Scenario, plan: &RestorationPlan, tally: &mut Tally) {
    for trip in &plan.trips {
        let bus = Some(trip.from);
        let t = Some(trip.depart);
        let label = format!("trip {} -> {} departing {}", trip.from, trip.to, trip.depart);
        match trip_legality(s, trip.arc, trip.from, trip.to, trip.depart, trip.arrive, trip.mess_type) {
            Err(reason) => tally.record(Family::Integrality, 1.0, bus, t, format!("{label}: {reason}")),
            Ok(cap) => {
                if trip.quantity == 0 {
                    tally.record(Family::Integrality, 1.0, bus, t, format!("{label}: empty batch"));
                }
                if trip.quantity > cap {
                    tally.record(Family::TravelBox, f64::from(trip.quantity - cap), bus, t, format!("{label}: above count cap"));
                }
                let m = &s.mess_types[trip.mess_type - 1];
                let k = f64::from(trip.quantity);
                tally.equal(Family::TravelBox, trip.soc_lower, k * m.soc_min_unit, bus, t, &format!("{label}: lower bound"));
                tally.equal(Family::TravelBox, trip.soc_upper, k * m.soc_max_unit, bus, t, &format!("{label}: upper bound"));
                tally.within(
                    Family::TravelBox,
                    trip.soc_shipped,
                    k * m.soc_min_unit,
                    k * m.soc_max_unit,
                    bus,
                    t,
                    &format!("{label}: shipped SoC"),
                );
            }
        }
    }
}
