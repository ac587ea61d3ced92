//! Time-expanded transport network.
//!
//! Every legal trip is a [`TripSlot`]: an arc, a departure step, a travel time
//! and a MESS type. Steps are 1-based. A slot leaves its origin at `depart`
//! and is available at its destination at `depart + travel`; the SoC and the
//! capacity bounds of the batch move with it. All constraint builders and the
//! plan extraction look trips up through [`TransportIndex::arrivals_at`] and
//! [`TransportIndex::departures_at`], so this module is the single place where
//! arrival and departure timing is decided.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::scenario::{BusId, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripSlot {
    /// Position of the arc in the scenario transport list.
    pub arc: usize,
    pub from: BusId,
    pub to: BusId,
    pub depart: usize,
    pub travel: usize,
    /// 0-based MESS type.
    pub mess_type: usize,
    pub count_max: Option<u32>,
}

impl TripSlot {
    pub fn arrive(&self) -> usize {
        self.depart + self.travel
    }

    /// The batch has left its origin but is not yet credited at its
    /// destination: `depart < t < arrive`.
    pub fn in_transit_at(&self, t: usize) -> bool {
        self.depart < t && t < self.arrive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportIndex {
    steps: usize,
    slots: Vec<TripSlot>,
    arrivals: HashMap<(BusId, usize), Vec<usize>>,
    departures: HashMap<(BusId, usize), Vec<usize>>,
}

impl TransportIndex {
    /// Enumerates every slot allowed by the scenario's arcs, ordered by arc,
    /// then type, then travel time, then departure step.
    pub fn build(scenario: &Scenario) -> Self {
        let steps = scenario.horizon.steps;
        let mut slots = Vec::new();
        for (arc, spec) in scenario.transport.iter().enumerate() {
            let mut travel = spec.travel.clone();
            travel.sort_unstable();
            travel.dedup();
            for mess_type in 0..scenario.mess_types.len() {
                if !spec.allows_type(mess_type) {
                    continue;
                }
                for &w in &travel {
                    if w == 0 || w > scenario.horizon.max_travel || w >= steps {
                        continue;
                    }
                    for depart in 1..=steps - w {
                        if spec.allows_departure(depart) {
                            slots.push(TripSlot {
                                arc,
                                from: spec.from,
                                to: spec.to,
                                depart,
                                travel: w,
                                mess_type,
                                count_max: spec.count_max,
                            });
                        }
                    }
                }
            }
        }
        Self::from_slots(steps, slots)
    }

    pub fn from_slots(steps: usize, slots: Vec<TripSlot>) -> Self {
        let mut arrivals: HashMap<_, Vec<usize>> = HashMap::new();
        let mut departures: HashMap<_, Vec<usize>> = HashMap::new();
        for (i, s) in slots.iter().enumerate() {
            arrivals.entry((s.to, s.arrive())).or_default().push(i);
            departures.entry((s.from, s.depart)).or_default().push(i);
        }
        Self {
            steps,
            slots,
            arrivals,
            departures,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn slots(&self) -> &[TripSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, i: usize) -> &TripSlot {
        &self.slots[i]
    }

    /// Slot ids with `to == bus` and `arrive == t`.
    pub fn arrivals_at(&self, bus: BusId, t: usize) -> &[usize] {
        self.arrivals.get(&(bus, t)).map_or(&[], Vec::as_slice)
    }

    /// Slot ids with `from == bus` and `depart == t`.
    pub fn departures_at(&self, bus: BusId, t: usize) -> &[usize] {
        self.departures.get(&(bus, t)).map_or(&[], Vec::as_slice)
    }

    /// Slot ids in transit at step `t`.
    pub fn in_transit_at(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.in_transit_at(t))
            .map(|(i, _)| i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn single_arc_with_two_steps_has_one_slot_per_type() {
        let mut s = instances::desk();
        s.horizon.steps = 2;
        s.horizon.max_travel = 1;
        s.transport.truncate(1);
        s.transport[0].travel = vec![1];
        s.transport[0].depart = None;
        s.transport[0].types = None;
        let index = TransportIndex::build(&s);
        assert_eq!(index.len(), s.mess_types.len());
        assert!(index.slots().iter().all(|slot| slot.depart == 1 && slot.arrive() == 2));
    }

    #[test]
    fn nothing_arrives_at_the_first_step_or_leaves_at_the_last() {
        let s = instances::desk();
        let index = TransportIndex::build(&s);
        let steps = s.horizon.steps;
        for e in &s.ess {
            assert!(index.arrivals_at(e.bus, 1).is_empty());
            assert!(index.departures_at(e.bus, steps).is_empty());
        }
    }

    #[test]
    fn non_ess_bus_sees_no_traffic() {
        let s = instances::desk();
        let index = TransportIndex::build(&s);
        let load_bus = s.loads[0].bus;
        for t in 1..=s.horizon.steps {
            assert!(index.arrivals_at(load_bus, t).is_empty());
            assert!(index.departures_at(load_bus, t).is_empty());
        }
    }

    #[test]
    fn type_restriction_filters_slots() {
        let mut s = instances::desk();
        s.transport.truncate(1);
        s.transport[0].types = Some(vec![2]);
        let index = TransportIndex::build(&s);
        assert!(!index.is_empty());
        assert!(index.slots().iter().all(|slot| slot.mess_type == 1));
    }
}
