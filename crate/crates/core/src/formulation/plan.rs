//! Turning a solution vector into a restoration plan.

use serde::{Deserialize, Serialize};

use super::{CompiledModel, Symbol};
use crate::error::{Error, Result};
use crate::scenario::{BusId, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveParts {
    pub total: f64,
    pub pickup_reward: f64,
    pub generation_cost: f64,
    pub transport_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadTrace {
    pub bus: BusId,
    pub pickup: Vec<f64>,
    pub restored_mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorTrace {
    pub bus: BusId,
    pub dispatch: Vec<f64>,
    /// `T + 1` entries.
    pub fuel: Vec<f64>,
}

/// Per ESS bus. SoC quantities have `T + 1` entries, power quantities `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssTrace {
    pub bus: BusId,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    pub mode: Vec<u8>,
    pub soc: Vec<f64>,
    pub soc_upper: Vec<f64>,
    pub soc_lower: Vec<f64>,
    pub transfer: Vec<f64>,
}

/// One scheduled batch of `quantity` units of one type on one trip slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub arc: usize,
    pub from: BusId,
    pub to: BusId,
    pub depart: usize,
    pub arrive: usize,
    /// 1-based MESS type.
    pub mess_type: usize,
    pub quantity: u32,
    pub soc_shipped: f64,
    pub soc_lower: f64,
    pub soc_upper: f64,
}

/// Network state indexed `[t - 1][bus or branch position]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NetworkTrace {
    pub voltage_sq: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub branch_p: Vec<Vec<f64>>,
    pub branch_q: Vec<Vec<f64>>,
    pub current_sq: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub scenario: String,
    pub steps: usize,
    pub step_hours: f64,
    pub objective: ObjectiveParts,
    /// `sum_j r_j * p_hat_j` per step.
    pub restored_mw: Vec<f64>,
    /// Total generator output per step.
    pub generation_mw: Vec<f64>,
    pub loads: Vec<LoadTrace>,
    pub generators: Vec<GeneratorTrace>,
    pub ess: Vec<EssTrace>,
    pub trips: Vec<TripRecord>,
    pub network: NetworkTrace,
}

impl RestorationPlan {
    /// `sum_t restored_mw * dt`.
    pub fn restored_energy(&self) -> f64 {
        self.restored_mw.iter().sum::<f64>() * self.step_hours
    }

    pub fn ess_trace(&self, bus: BusId) -> Option<&EssTrace> {
        self.ess.iter().find(|e| e.bus == bus)
    }

    /// Recomputes the objective from the plan values and the scenario costs.
    pub fn evaluate_objective(&self, scenario: &Scenario) -> ObjectiveParts {
        let costs = &scenario.costs;
        let pickup_reward: f64 = self
            .loads
            .iter()
            .zip(&costs.pickup)
            .map(|(l, w)| l.pickup.iter().zip(w).map(|(r, w)| r * w).sum::<f64>())
            .sum();
        let generation_cost: f64 = self
            .generators
            .iter()
            .zip(&costs.generation)
            .map(|(g, w)| g.dispatch.iter().zip(w).map(|(p, w)| p * w).sum::<f64>())
            .sum();
        let transport_cost: f64 = self
            .trips
            .iter()
            .map(|trip| {
                f64::from(trip.quantity)
                    * costs.transport_cost(trip.arc, trip.mess_type - 1, trip.arrive - trip.depart, trip.depart)
            })
            .sum();
        ObjectiveParts {
            total: pickup_reward - generation_cost - transport_cost,
            pickup_reward,
            generation_cost,
            transport_cost,
        }
    }
}

/// Builds the plan from a solution of `model`.
///
/// Discrete columns farther than `tol` from an integer are an error. Within
/// tolerance they are rounded, and the batch bounds and the bound books are
/// recomputed from the rounded counts so they move in exact unit steps.
pub fn extract_plan(model: &CompiledModel, x: &[f64], tol: f64) -> Result<RestorationPlan> {
    let program = &model.program;
    let bad = program.fractional_columns(x, tol);
    if !bad.is_empty() {
        return Err(Error::NonIntegral {
            tol,
            columns: bad.iter().map(|&j| program.names[j].clone()).collect(),
        });
    }
    let s = &model.scenario;
    let steps = s.steps();
    let at = |sym: Symbol, t: usize, e: usize| x[model.col(sym, t, e)];
    let series = |sym: Symbol, e: usize, len: usize| (1..=len).map(|t| at(sym, t, e)).collect::<Vec<f64>>();

    let loads: Vec<LoadTrace> = s
        .loads
        .iter()
        .enumerate()
        .map(|(e, load)| {
            let pickup: Vec<f64> = series(Symbol::Pickup, e, steps).into_iter().map(|r| r.clamp(0.0, 1.0)).collect();
            let restored_mw = pickup.iter().zip(&load.p_forecast).map(|(r, p)| r * p).collect();
            LoadTrace {
                bus: load.bus,
                pickup,
                restored_mw,
            }
        })
        .collect();
    let generators: Vec<GeneratorTrace> = s
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| GeneratorTrace {
            bus: gen.bus,
            dispatch: series(Symbol::PGen, g, steps),
            fuel: series(Symbol::Fuel, g, steps + 1),
        })
        .collect();

    let mut trips = Vec::new();
    let mut rounded_counts = vec![0u32; model.index.len()];
    for (i, slot) in model.index.slots().iter().enumerate() {
        let k = x[model.atlas.trip(Symbol::TripCount, i)].round().max(0.0) as u32;
        rounded_counts[i] = k;
        if k == 0 {
            continue;
        }
        let m = &s.mess_types[slot.mess_type];
        let (soc_lower, soc_upper) = (f64::from(k) * m.soc_min_unit, f64::from(k) * m.soc_max_unit);
        trips.push(TripRecord {
            arc: slot.arc,
            from: slot.from,
            to: slot.to,
            depart: slot.depart,
            arrive: slot.arrive(),
            mess_type: slot.mess_type + 1,
            quantity: k,
            soc_shipped: x[model.atlas.trip(Symbol::TripSoc, i)].clamp(soc_lower, soc_upper),
            soc_lower,
            soc_upper,
        });
    }

    let ess = s
        .ess
        .iter()
        .enumerate()
        .map(|(e, spec)| {
            let mut upper = vec![spec.initial_soc_upper(&s.mess_types); steps + 1];
            let mut lower = vec![spec.initial_soc_lower(&s.mess_types); steps + 1];
            for t in 1..steps {
                let (mut d_lo, mut d_hi) = (0.0, 0.0);
                for (&i, sign) in model
                    .index
                    .arrivals_at(spec.bus, t + 1)
                    .iter()
                    .zip(std::iter::repeat(1.0))
                    .chain(model.index.departures_at(spec.bus, t).iter().zip(std::iter::repeat(-1.0)))
                {
                    let m = &s.mess_types[model.index.slot(i).mess_type];
                    let k = f64::from(rounded_counts[i]);
                    d_lo += sign * k * m.soc_min_unit;
                    d_hi += sign * k * m.soc_max_unit;
                }
                upper[t] = upper[t - 1] + d_hi;
                lower[t] = lower[t - 1] + d_lo;
            }
            upper[steps] = upper[steps - 1];
            lower[steps] = lower[steps - 1];
            EssTrace {
                bus: spec.bus,
                charge: series(Symbol::Charge, e, steps),
                discharge: series(Symbol::Discharge, e, steps),
                mode: series(Symbol::Mode, e, steps).iter().map(|d| d.round() as u8).collect(),
                soc: series(Symbol::Soc, e, steps + 1),
                soc_upper: upper,
                soc_lower: lower,
                transfer: series(Symbol::Phi, e, steps + 1),
            }
        })
        .collect();

    let per_step = |sym: Symbol, width: usize| -> Vec<Vec<f64>> {
        (1..=steps).map(|t| (0..width).map(|e| at(sym, t, e)).collect()).collect()
    };
    let (nb, ne) = (s.buses.len(), s.branches.len());
    let network = NetworkTrace {
        voltage_sq: per_step(Symbol::V, nb),
        p: per_step(Symbol::P, nb),
        q: per_step(Symbol::Q, nb),
        branch_p: per_step(Symbol::BranchP, ne),
        branch_q: per_step(Symbol::BranchQ, ne),
        current_sq: per_step(Symbol::L, ne),
    };

    let restored_mw = (0..steps).map(|t| loads.iter().map(|l| l.restored_mw[t]).sum()).collect();
    let generation_mw = (0..steps).map(|t| generators.iter().map(|g| g.dispatch[t]).sum()).collect();
    let mut plan = RestorationPlan {
        scenario: s.name.clone(),
        steps,
        step_hours: s.horizon.step_hours,
        objective: ObjectiveParts::default(),
        restored_mw,
        generation_mw,
        loads,
        generators,
        ess,
        trips,
        network,
    };
    plan.objective = plan.evaluate_objective(s);
    Ok(plan)
}
