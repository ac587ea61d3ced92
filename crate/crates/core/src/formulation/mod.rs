//! Compiles a scenario into a [`ConicProgram`].
//!
//! Each `build_*` function appends one constraint group to the program. They
//! share a [`Ctx`] holding the scenario, the transport index and the column
//! atlas. Steps are 1-based throughout.

mod atlas;
mod plan;

use std::collections::HashMap;

use serde::Serialize;

pub use atlas::{Block, Symbol, VariableAtlas};
pub use plan::{
    extract_plan, EssTrace, GeneratorTrace, LoadTrace, NetworkTrace, ObjectiveParts, RestorationPlan, TripRecord,
};

use crate::error::{Error, Result};
use crate::program::{ConicProgram, RotatedCone, RowFamily};
use crate::scenario::{BusId, Scenario};
use crate::transport::TransportIndex;

/// Row and cone tallies recorded at compile time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ModelCounts {
    pub columns: usize,
    pub equalities: usize,
    pub inequalities: usize,
    pub cones: usize,
    pub binaries: usize,
    pub integers: usize,
    pub trip_slots: usize,
}

#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub scenario: Scenario,
    pub index: TransportIndex,
    pub atlas: VariableAtlas,
    pub program: ConicProgram,
    pub counts: ModelCounts,
    /// True when every trip count is pinned to zero.
    pub is_static: bool,
}

impl CompiledModel {
    /// Pins every trip count to zero. The program keeps its shape, so a
    /// routed and a static model share one column layout.
    pub fn into_static(mut self) -> Self {
        for slot in 0..self.index.len() {
            let k = self.atlas.trip(Symbol::TripCount, slot);
            self.program.fix(k, 0.0);
        }
        self.is_static = true;
        self
    }

    pub fn col(&self, symbol: Symbol, t: usize, e: usize) -> usize {
        self.atlas.col(symbol, t, e)
    }
}

/// Compiles a validated scenario into the mixed-integer conic program.
pub fn compile(scenario: &Scenario) -> Result<CompiledModel> {
    check_radial(scenario)?;
    let index = TransportIndex::build(scenario);
    let atlas = VariableAtlas::new(scenario, &index);
    atlas.audit().map_err(Error::Structural)?;
    let mut program = ConicProgram::with_columns(atlas.column_names(scenario, &index));
    {
        let cx = Ctx::new(scenario, &index, &atlas);
        build_objective(&cx, &mut program);
        build_power_flow(&cx, &mut program);
        build_voltage_current_bounds(&cx, &mut program);
        build_generator(&cx, &mut program);
        build_reactive_bounds(&cx, &mut program);
        build_load_pickup(&cx, &mut program);
        build_mess_power(&cx, &mut program);
        build_soc_evolution(&cx, &mut program);
        build_bound_evolution(&cx, &mut program);
        build_bound_conservation(&cx, &mut program);
        build_travel_soc(&cx, &mut program);
        build_integrality(&cx, &mut program);
    }
    let counts = ModelCounts {
        columns: program.n_cols(),
        equalities: program.equalities.len(),
        inequalities: program.inequalities.len(),
        cones: program.cones.len(),
        binaries: program.binaries.len(),
        integers: program.integers.len(),
        trip_slots: index.len(),
    };
    Ok(CompiledModel {
        scenario: scenario.clone(),
        index,
        atlas,
        program,
        counts,
        is_static: false,
    })
}

/// `compile` followed by [`CompiledModel::into_static`].
pub fn compile_static(scenario: &Scenario) -> Result<CompiledModel> {
    compile(scenario).map(CompiledModel::into_static)
}

/// Every bus has at most one incoming branch and the branch set has no
/// cycle, so each island is a tree directed away from its root.
pub fn check_radial(scenario: &Scenario) -> Result<()> {
    let mut parent: HashMap<BusId, BusId> = HashMap::new();
    for b in &scenario.branches {
        if scenario.bus_position(b.from).is_none() || scenario.bus_position(b.to).is_none() {
            return Err(Error::Structural(format!("branch {} -> {} names an unknown bus", b.from, b.to)));
        }
        if parent.insert(b.to, b.from).is_some() {
            return Err(Error::Structural(format!("bus {} has more than one incoming branch", b.to)));
        }
    }
    for &start in parent.keys() {
        let mut at = start;
        let mut hops = 0;
        while let Some(&up) = parent.get(&at) {
            at = up;
            hops += 1;
            if at == start || hops > parent.len() {
                return Err(Error::Structural(format!("branches through bus {start} form a cycle")));
            }
        }
    }
    Ok(())
}

pub(crate) struct Ctx<'a> {
    pub s: &'a Scenario,
    pub index: &'a TransportIndex,
    pub atlas: &'a VariableAtlas,
    pub steps: usize,
    pub dt: f64,
    bus_pos: HashMap<BusId, usize>,
}

impl<'a> Ctx<'a> {
    pub fn new(s: &'a Scenario, index: &'a TransportIndex, atlas: &'a VariableAtlas) -> Self {
        Self {
            s,
            index,
            atlas,
            steps: s.steps(),
            dt: s.horizon.step_hours,
            bus_pos: s.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect(),
        }
    }

    fn bus(&self, id: BusId) -> usize {
        self.bus_pos[&id]
    }

    fn col(&self, symbol: Symbol, t: usize, e: usize) -> usize {
        self.atlas.col(symbol, t, e)
    }

    fn trip(&self, symbol: Symbol, slot: usize) -> usize {
        self.atlas.trip(symbol, slot)
    }

    /// `sign * symbol` for every slot arriving at `bus` at step `t` and
    /// `-sign * symbol` for every slot leaving it at step `depart`.
    fn net_trips(&self, symbol: Symbol, bus: BusId, arrive: usize, depart: usize, sign: f64) -> Vec<(usize, f64)> {
        let mut terms = Vec::new();
        if arrive >= 1 && arrive <= self.steps {
            terms.extend(self.index.arrivals_at(bus, arrive).iter().map(|&i| (self.trip(symbol, i), sign)));
        }
        if depart >= 1 && depart <= self.steps {
            terms.extend(self.index.departures_at(bus, depart).iter().map(|&i| (self.trip(symbol, i), -sign)));
        }
        terms
    }
}

/// Pickup reward on `r`, generation cost on `p_gen`, transport cost on `k`.
pub(crate) fn build_objective(cx: &Ctx, p: &mut ConicProgram) {
    let costs = &cx.s.costs;
    for t in 1..=cx.steps {
        for (e, w) in costs.pickup.iter().enumerate() {
            p.objective[cx.col(Symbol::Pickup, t, e)] = w[t - 1];
        }
        for (g, w) in costs.generation.iter().enumerate() {
            p.objective[cx.col(Symbol::PGen, t, g)] = -w[t - 1];
        }
    }
    for (i, slot) in cx.index.slots().iter().enumerate() {
        let c = costs.transport_cost(slot.arc, slot.mess_type, slot.travel, slot.depart);
        p.objective[cx.trip(Symbol::TripCount, i)] = -c;
    }
}

/// Branch-flow balance at every bus, voltage drop along every branch and
/// the relaxed current cone `v_from * l >= P^2 + Q^2`.
pub(crate) fn build_power_flow(cx: &Ctx, p: &mut ConicProgram) {
    let s = cx.s;
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); s.buses.len()];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); s.buses.len()];
    for (e, b) in s.branches.iter().enumerate() {
        incoming[cx.bus(b.to)].push(e);
        outgoing[cx.bus(b.from)].push(e);
    }
    for t in 1..=cx.steps {
        for j in 0..s.buses.len() {
            let mut real = vec![(cx.col(Symbol::P, t, j), 1.0)];
            let mut reactive = vec![(cx.col(Symbol::Q, t, j), 1.0)];
            for &e in &incoming[j] {
                let br = &s.branches[e];
                real.push((cx.col(Symbol::BranchP, t, e), 1.0));
                real.push((cx.col(Symbol::L, t, e), -br.resistance));
                reactive.push((cx.col(Symbol::BranchQ, t, e), 1.0));
                reactive.push((cx.col(Symbol::L, t, e), -br.reactance));
            }
            for &e in &outgoing[j] {
                real.push((cx.col(Symbol::BranchP, t, e), -1.0));
                reactive.push((cx.col(Symbol::BranchQ, t, e), -1.0));
            }
            p.add_eq(RowFamily::RealBalance, real, 0.0);
            p.add_eq(RowFamily::ReactiveBalance, reactive, 0.0);
        }
        for (e, br) in s.branches.iter().enumerate() {
            let (i, j) = (cx.bus(br.from), cx.bus(br.to));
            p.add_eq(
                RowFamily::VoltageDrop,
                vec![
                    (cx.col(Symbol::V, t, i), 1.0),
                    (cx.col(Symbol::V, t, j), -1.0),
                    (cx.col(Symbol::BranchP, t, e), -2.0 * br.resistance),
                    (cx.col(Symbol::BranchQ, t, e), -2.0 * br.reactance),
                    (cx.col(Symbol::L, t, e), br.impedance_sq()),
                ],
                0.0,
            );
            p.add_cone(RotatedCone {
                u: cx.col(Symbol::V, t, i),
                v: cx.col(Symbol::L, t, e),
                w: [cx.col(Symbol::BranchP, t, e), cx.col(Symbol::BranchQ, t, e)],
            });
        }
    }
}

/// Voltage box, unit voltage at every island reference bus and the current
/// box. An infinite current limit leaves only `l >= 0`.
pub(crate) fn build_voltage_current_bounds(cx: &Ctx, p: &mut ConicProgram) {
    let s = cx.s;
    let refs = s.reference_buses();
    for t in 1..=cx.steps {
        for (j, bus) in s.buses.iter().enumerate() {
            let col = cx.col(Symbol::V, t, j);
            if refs.contains(&bus.id) {
                p.fix(col, 1.0);
            } else {
                p.set_bounds(col, s.options.v_min, s.options.v_max);
            }
        }
        for (e, br) in s.branches.iter().enumerate() {
            p.set_bounds(cx.col(Symbol::L, t, e), 0.0, br.current_sq_max.unwrap_or(f64::INFINITY));
        }
    }
}

/// Fuel recursion, ramping, cold-start first step and the output box. The
/// bus injection equals the dispatch.
pub(crate) fn build_generator(cx: &Ctx, p: &mut ConicProgram) {
    let (steps, dt) = (cx.steps, cx.dt);
    for (g, gen) in cx.s.generators.iter().enumerate() {
        let bus = cx.bus(gen.bus);
        let pg = |t| cx.col(Symbol::PGen, t, g);
        let f = |t| cx.col(Symbol::Fuel, t, g);
        p.fix(f(1), gen.fuel_initial);
        for t in 2..=steps + 1 {
            p.set_bounds(f(t), 0.0, f64::INFINITY);
        }
        for t in 1..=steps {
            p.add_eq(
                RowFamily::FuelRecursion,
                vec![(f(t + 1), 1.0), (f(t), -1.0), (pg(t), gen.fuel_rate * dt)],
                0.0,
            );
            p.set_bounds(pg(t), 0.0, gen.p_max);
            p.add_eq(
                RowFamily::GeneratorInjection,
                vec![(cx.col(Symbol::P, t, bus), 1.0), (pg(t), -1.0)],
                0.0,
            );
        }
        for t in 1..steps {
            p.add_le(RowFamily::RampUp, vec![(pg(t + 1), 1.0), (pg(t), -1.0)], gen.ramp_up);
            p.add_le(RowFamily::RampDown, vec![(pg(t), 1.0), (pg(t + 1), -1.0)], -gen.ramp_down);
        }
        p.add_le(RowFamily::FirstStepRamp, vec![(pg(1), 1.0)], gen.ramp_up);
    }
}

/// Reactive boxes on generator and ESS buses. Load buses are left to the
/// pickup rows.
pub(crate) fn build_reactive_bounds(cx: &Ctx, p: &mut ConicProgram) {
    let boxes = cx
        .s
        .generators
        .iter()
        .map(|g| (g.bus, g.q_min, g.q_max))
        .chain(cx.s.ess.iter().map(|e| (e.bus, e.q_min, e.q_max)));
    for (bus, lo, hi) in boxes {
        let j = cx.bus(bus);
        for t in 1..=cx.steps {
            p.set_bounds(cx.col(Symbol::Q, t, j), lo, hi);
        }
    }
}

/// Consumption-negative injections `p = -r * p_hat`, `q = -r * q_hat`,
/// `0 <= r <= 1` and pickup that never decreases.
pub(crate) fn build_load_pickup(cx: &Ctx, p: &mut ConicProgram) {
    for (e, load) in cx.s.loads.iter().enumerate() {
        let j = cx.bus(load.bus);
        let r = |t| cx.col(Symbol::Pickup, t, e);
        for t in 1..=cx.steps {
            p.set_bounds(r(t), 0.0, 1.0);
            p.add_eq(
                RowFamily::LoadRealInjection,
                vec![(cx.col(Symbol::P, t, j), 1.0), (r(t), load.p_forecast[t - 1])],
                0.0,
            );
            p.add_eq(
                RowFamily::LoadReactiveInjection,
                vec![(cx.col(Symbol::Q, t, j), 1.0), (r(t), load.q_forecast[t - 1])],
                0.0,
            );
        }
        for t in 1..cx.steps {
            p.add_le(RowFamily::PickupMonotone, vec![(r(t), 1.0), (r(t + 1), -1.0)], 0.0);
        }
    }
}

/// Charge and discharge limits switched by the mode binary, and the ESS bus
/// injection `p = p_dis - p_ch`.
pub(crate) fn build_mess_power(cx: &Ctx, p: &mut ConicProgram) {
    for (e, ess) in cx.s.ess.iter().enumerate() {
        let j = cx.bus(ess.bus);
        for t in 1..=cx.steps {
            let (ch, dis, d) = (
                cx.col(Symbol::Charge, t, e),
                cx.col(Symbol::Discharge, t, e),
                cx.col(Symbol::Mode, t, e),
            );
            p.set_bounds(ch, 0.0, ess.p_ch_max);
            p.set_bounds(dis, 0.0, ess.p_dis_max);
            p.set_bounds(d, 0.0, 1.0);
            p.add_le(RowFamily::ChargeLimit, vec![(ch, 1.0), (d, -ess.p_ch_max)], 0.0);
            p.add_le(RowFamily::DischargeLimit, vec![(dis, 1.0), (d, ess.p_dis_max)], ess.p_dis_max);
            p.add_eq(
                RowFamily::EssInjection,
                vec![(cx.col(Symbol::P, t, j), 1.0), (ch, 1.0), (dis, -1.0)],
                0.0,
            );
        }
    }
}

/// SoC recursion, the SoC window against the dynamic bounds, and the net
/// SoC moved by trips at each step.
pub(crate) fn build_soc_evolution(cx: &Ctx, p: &mut ConicProgram) {
    let (steps, dt) = (cx.steps, cx.dt);
    let (eta_ch, eta_dis) = (cx.s.options.eta_ch, cx.s.options.eta_dis);
    for (e, ess) in cx.s.ess.iter().enumerate() {
        let soc = |t| cx.col(Symbol::Soc, t, e);
        let phi = |t| cx.col(Symbol::Phi, t, e);
        p.fix(soc(1), ess.initial_soc());
        for t in 2..=steps + 1 {
            p.set_bounds(soc(t), 0.0, f64::INFINITY);
        }
        p.fix(phi(steps + 1), 0.0);
        for t in 1..=steps {
            p.add_eq(
                RowFamily::SocRecursion,
                vec![
                    (soc(t + 1), 1.0),
                    (soc(t), -1.0),
                    (phi(t), -1.0),
                    (cx.col(Symbol::Charge, t, e), -eta_ch * dt),
                    (cx.col(Symbol::Discharge, t, e), dt / eta_dis),
                ],
                0.0,
            );
            let mut transfer = vec![(phi(t), 1.0)];
            transfer.extend(cx.net_trips(Symbol::TripSoc, ess.bus, t, t, -1.0));
            p.add_eq(RowFamily::SocTransfer, transfer, 0.0);
        }
        for t in 1..=steps + 1 {
            p.add_le(
                RowFamily::SocWindowUpper,
                vec![(soc(t), 1.0), (phi(t), 1.0), (cx.col(Symbol::SocUpper, t, e), -1.0)],
                0.0,
            );
            p.add_le(
                RowFamily::SocWindowLower,
                vec![(cx.col(Symbol::SocLower, t, e), 1.0), (soc(t), -1.0), (phi(t), -1.0)],
                0.0,
            );
        }
    }
}

/// Dynamic bound books. A batch's bounds leave the origin in the step after
/// departure and reach the destination at the arrival step, so a batch in
/// transit (`depart < t < arrive`) is counted at neither bus.
pub(crate) fn build_bound_evolution(cx: &Ctx, p: &mut ConicProgram) {
    let steps = cx.steps;
    let types = &cx.s.mess_types;
    let books = [
        (Symbol::SocLower, Symbol::TripLower, RowFamily::LowerBoundEvolution, RowFamily::LowerBoundTerminal),
        (Symbol::SocUpper, Symbol::TripUpper, RowFamily::UpperBoundEvolution, RowFamily::UpperBoundTerminal),
    ];
    for (e, ess) in cx.s.ess.iter().enumerate() {
        for (book, trip, family, terminal) in books {
            let col = |t| cx.col(book, t, e);
            let initial = if book == Symbol::SocLower {
                ess.initial_soc_lower(types)
            } else {
                ess.initial_soc_upper(types)
            };
            p.fix(col(1), initial);
            for t in 2..=steps + 1 {
                p.set_bounds(col(t), 0.0, f64::INFINITY);
            }
            for t in 1..steps {
                let mut row = vec![(col(t + 1), 1.0), (col(t), -1.0)];
                row.extend(cx.net_trips(trip, ess.bus, t + 1, t, -1.0));
                p.add_eq(family, row, 0.0);
            }
            p.add_eq(terminal, vec![(col(steps + 1), 1.0), (col(steps), -1.0)], 0.0);
        }
    }
}

/// System-wide totals of both bound books, counting batches in transit.
pub(crate) fn build_bound_conservation(cx: &Ctx, p: &mut ConicProgram) {
    let (total_lo, total_hi) = cx.s.total_soc_bounds();
    let books = [
        (Symbol::SocLower, Symbol::TripLower, RowFamily::LowerConservation, total_lo),
        (Symbol::SocUpper, Symbol::TripUpper, RowFamily::UpperConservation, total_hi),
    ];
    for t in 1..=cx.steps + 1 {
        for (book, trip, family, total) in books {
            let mut row: Vec<(usize, f64)> = (0..cx.s.ess.len()).map(|e| (cx.col(book, t, e), 1.0)).collect();
            row.extend(cx.index.in_transit_at(t).map(|i| (cx.trip(trip, i), 1.0)));
            p.add_eq(family, row, total);
        }
    }
}

/// Batch bounds proportional to the unit count, the shipped SoC inside
/// them, and the count box. Counts are also capped by the fleet size of
/// their type.
pub(crate) fn build_travel_soc(cx: &Ctx, p: &mut ConicProgram) {
    let fleet: Vec<u32> = (0..cx.s.mess_types.len())
        .map(|nu| cx.s.ess.iter().map(|e| e.initial_units.get(nu).copied().unwrap_or(0)).sum())
        .collect();
    for (i, slot) in cx.index.slots().iter().enumerate() {
        let m = &cx.s.mess_types[slot.mess_type];
        let (soc, lo, hi, k) = (
            cx.trip(Symbol::TripSoc, i),
            cx.trip(Symbol::TripLower, i),
            cx.trip(Symbol::TripUpper, i),
            cx.trip(Symbol::TripCount, i),
        );
        p.add_eq(RowFamily::TravelLower, vec![(lo, 1.0), (k, -m.soc_min_unit)], 0.0);
        p.add_eq(RowFamily::TravelUpper, vec![(hi, 1.0), (k, -m.soc_max_unit)], 0.0);
        p.add_le(RowFamily::TravelBoxLower, vec![(lo, 1.0), (soc, -1.0)], 0.0);
        p.add_le(RowFamily::TravelBoxUpper, vec![(soc, 1.0), (hi, -1.0)], 0.0);
        for col in [soc, lo, hi] {
            p.set_bounds(col, 0.0, f64::INFINITY);
        }
        let cap = slot.count_max.unwrap_or(u32::MAX).min(fleet[slot.mess_type]);
        p.set_bounds(k, 0.0, f64::from(cap));
    }
}

/// Mode columns are binary, trip counts are nonnegative integers.
pub(crate) fn build_integrality(cx: &Ctx, p: &mut ConicProgram) {
    let mode = cx.atlas.block(Symbol::Mode);
    p.binaries.extend(mode.range());
    let counts = cx.atlas.block(Symbol::TripCount);
    p.integers.extend(counts.range());
}
