//! Input data model for a restoration instance.
//!
//! A [`Scenario`] is plain data: it is read from a JSON document, checked by
//! [`validate`], and never mutated afterwards. Bus identifiers are the ids used
//! in the document; everything downstream refers to buses by [`BusId`] and to
//! devices by their position in the corresponding list.

mod file;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use file::{CostScheme, CostSpec};
pub use validate::{validate, ValidationReport, Violation};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Load,
    Generator,
    Ess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
}

/// A distribution line, oriented `from -> to`. Impedances are per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    pub resistance: f64,
    pub reactance: f64,
    /// Upper bound on the squared current magnitude; `None` means unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_sq_max: Option<f64>,
}

impl Branch {
    pub fn impedance_sq(&self) -> f64 {
        self.resistance * self.resistance + self.reactance * self.reactance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub bus: BusId,
    /// MW.
    pub p_max: f64,
    /// MW per step, non-negative.
    pub ramp_up: f64,
    /// MW per step, non-positive.
    pub ramp_down: f64,
    pub fuel_initial: f64,
    /// Fuel burned per MWh produced.
    pub fuel_rate: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub bus: BusId,
    /// MW demand forecast, one entry per step.
    pub p_forecast: Vec<f64>,
    /// MVar demand forecast, one entry per step.
    pub q_forecast: Vec<f64>,
}

/// Capacity class of a mobile unit. Types are numbered from 1 in documents
/// and reports, in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessType {
    /// MWh floor of one unit.
    pub soc_min_unit: f64,
    /// MWh capacity of one unit.
    pub soc_max_unit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssBusSpec {
    pub bus: BusId,
    /// Units of each MESS type parked at the bus at the first step.
    pub initial_units: Vec<u32>,
    /// Initial SoC (MWh) of every parked unit, grouped by type.
    pub unit_initial_soc: Vec<Vec<f64>>,
    pub p_ch_max: f64,
    pub p_dis_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Stationary storage attached to the bus, on top of the mobile units.
    #[serde(default)]
    pub stationary_soc_min: f64,
    #[serde(default)]
    pub stationary_soc_max: f64,
    #[serde(default)]
    pub stationary_soc_init: f64,
}

impl EssBusSpec {
    pub fn initial_soc(&self) -> f64 {
        self.unit_initial_soc.iter().flatten().sum::<f64>() + self.stationary_soc_init
    }

    pub fn initial_soc_lower(&self, types: &[MessType]) -> f64 {
        self.units_weighted(types, |m| m.soc_min_unit) + self.stationary_soc_min
    }

    pub fn initial_soc_upper(&self, types: &[MessType]) -> f64 {
        self.units_weighted(types, |m| m.soc_max_unit) + self.stationary_soc_max
    }

    fn units_weighted(&self, types: &[MessType], per_unit: impl Fn(&MessType) -> f64) -> f64 {
        self.initial_units
            .iter()
            .zip(types)
            .map(|(&count, m)| f64::from(count) * per_unit(m))
            .sum()
    }
}

/// A road between two ESS buses. The legal trips are the product of
/// `travel` times, departure steps and MESS types, restricted to departures
/// that arrive within the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportArcSpec {
    pub from: BusId,
    pub to: BusId,
    /// Allowed travel times in steps.
    pub travel: Vec<usize>,
    /// Allowed departure steps; every legal step when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depart: Option<Vec<usize>>,
    /// Allowed MESS types (1-based); every type when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<Vec<usize>>,
    /// Cap on the number of units in one trip.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_max: Option<u32>,
}

impl TransportArcSpec {
    pub fn allows_type(&self, mess_type: usize) -> bool {
        self.types
            .as_ref()
            .map_or(true, |types| types.contains(&(mess_type + 1)))
    }

    pub fn allows_departure(&self, depart: usize) -> bool {
        self.depart.as_ref().map_or(true, |d| d.contains(&depart))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportCostOverride {
    /// Position of the arc in the transport list.
    pub arc: usize,
    /// 1-based MESS type.
    pub mess_type: usize,
    pub travel: usize,
    pub depart: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransportCosts {
    /// Cost per unit moved, indexed `[type][travel - 1]`.
    pub per_unit: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<TransportCostOverride>,
}

/// Objective weights. `pickup` multiplies the pickup fraction of each load,
/// `generation` the MW output of each generator, and transport costs the
/// number of units in a trip.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostWeights {
    /// `[load][step]`.
    pub pickup: Vec<Vec<f64>>,
    /// `[generator][step]`.
    pub generation: Vec<Vec<f64>>,
    pub transport: TransportCosts,
}

impl CostWeights {
    /// Cost of moving one unit of `mess_type` (0-based) on a trip.
    pub fn transport_cost(&self, arc: usize, mess_type: usize, travel: usize, depart: usize) -> f64 {
        self.transport
            .overrides
            .iter()
            .find(|o| {
                o.arc == arc && o.mess_type == mess_type + 1 && o.travel == travel && o.depart == depart
            })
            .map(|o| o.cost)
            .unwrap_or_else(|| {
                self.transport
                    .per_unit
                    .get(mess_type)
                    .and_then(|row| row.get(travel.wrapping_sub(1)))
                    .copied()
                    .unwrap_or(0.0)
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Number of steps `T`.
    pub steps: usize,
    /// Step length in hours.
    pub step_hours: f64,
    /// Longest travel time `H` in steps.
    pub max_travel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub eta_ch: f64,
    pub eta_dis: f64,
    /// Bounds on the squared voltage magnitude.
    pub v_min: f64,
    pub v_max: f64,
    /// One reference bus per island. Defaults to the smallest generator bus
    /// of each island.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_buses: Option<Vec<BusId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "file::ScenarioFile", into = "file::ScenarioFile")]
pub struct Scenario {
    pub name: String,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<GeneratorSpec>,
    pub loads: Vec<LoadSpec>,
    pub ess: Vec<EssBusSpec>,
    pub mess_types: Vec<MessType>,
    pub transport: Vec<TransportArcSpec>,
    pub costs: CostWeights,
    pub horizon: Horizon,
    pub options: Options,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Reads and validates; an invalid document is returned as
    /// [`Error::Invalid`].
    pub fn load_validated(path: &Path) -> Result<Self> {
        let scenario = Self::load(path)?;
        scenario.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let report = validate(&self);
        if report.is_pass() {
            Ok(self)
        } else {
            Err(Error::Invalid(report))
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn steps(&self) -> usize {
        self.horizon.steps
    }

    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn ess_position(&self, id: BusId) -> Option<usize> {
        self.ess.iter().position(|e| e.bus == id)
    }

    /// Total MESS-contributed lower and upper SoC bounds summed over all ESS
    /// buses, including stationary offsets.
    pub fn total_soc_bounds(&self) -> (f64, f64) {
        self.ess.iter().fold((0.0, 0.0), |(lo, hi), e| {
            (
                lo + e.initial_soc_lower(&self.mess_types),
                hi + e.initial_soc_upper(&self.mess_types),
            )
        })
    }

    /// Same scenario with every transport arc removed.
    pub fn without_transport(&self) -> Self {
        let mut stat = self.clone();
        stat.transport.clear();
        stat.costs.transport.overrides.clear();
        stat
    }

    /// Connected components of the branch graph as sorted bus-id lists,
    /// ordered by their smallest bus id.
    pub fn islands(&self) -> Vec<Vec<BusId>> {
        islands(self)
    }

    /// The reference bus of every island, in island order.
    pub fn reference_buses(&self) -> Vec<BusId> {
        let islands = self.islands();
        match &self.options.reference_buses {
            Some(explicit) => islands
                .iter()
                .map(|island| {
                    explicit
                        .iter()
                        .copied()
                        .find(|b| island.binary_search(b).is_ok())
                        .unwrap_or(island[0])
                })
                .collect(),
            None => islands.iter().map(|island| self.default_reference(island)).collect(),
        }
    }

    // Smallest generator bus, else smallest ESS bus, else the smallest bus.
    fn default_reference(&self, island: &[BusId]) -> BusId {
        let kind_of: BTreeMap<BusId, BusKind> = self.buses.iter().map(|b| (b.id, b.kind)).collect();
        let first_of = |kind: BusKind| island.iter().copied().find(|b| kind_of.get(b) == Some(&kind));
        first_of(BusKind::Generator)
            .or_else(|| first_of(BusKind::Ess))
            .unwrap_or(island[0])
    }
}

/// Connected components of the branch graph. Branches that name unknown buses
/// are ignored; validation reports them separately.
pub fn islands(scenario: &Scenario) -> Vec<Vec<BusId>> {
    let n = scenario.buses.len();
    let position: BTreeMap<BusId, usize> = scenario
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let mut sets = DisjointSets::new(n);
    for branch in &scenario.branches {
        if let (Some(&a), Some(&b)) = (position.get(&branch.from), position.get(&branch.to)) {
            sets.union(a, b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<BusId>> = BTreeMap::new();
    for (i, bus) in scenario.buses.iter().enumerate() {
        groups.entry(sets.find(i)).or_default().push(bus.id);
    }
    let mut islands: Vec<Vec<BusId>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    islands.sort_by_key(|g| g[0]);
    islands
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Returns false when `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn edgeless_buses_are_singleton_islands() {
        let mut s = instances::two_bus();
        s.branches.clear();
        s.buses.push(Bus {
            id: BusId(7),
            kind: BusKind::Load,
        });
        let islands = s.islands();
        assert_eq!(islands, vec![vec![BusId(1)], vec![BusId(2)], vec![BusId(7)]]);
    }

    #[test]
    fn connected_tree_is_one_island() {
        let s = instances::desk();
        let islands = s.islands();
        assert_eq!(islands.len(), 2);
        let mut all: Vec<BusId> = islands.concat();
        all.sort();
        assert_eq!(all.len(), s.buses.len());
    }

    #[test]
    fn default_reference_prefers_generators() {
        let s = instances::desk();
        let refs = s.reference_buses();
        for (island, r) in s.islands().iter().zip(&refs) {
            assert!(island.contains(r));
        }
    }

    #[test]
    fn ess_bounds_sum_units_and_stationary_offsets() {
        let types = vec![
            MessType {
                soc_min_unit: 0.025,
                soc_max_unit: 0.25,
            },
            MessType {
                soc_min_unit: 0.005,
                soc_max_unit: 0.05,
            },
        ];
        let ess = EssBusSpec {
            bus: BusId(1),
            initial_units: vec![2, 0],
            unit_initial_soc: vec![vec![0.2, 0.1], vec![]],
            p_ch_max: 0.16,
            p_dis_max: 0.16,
            q_min: -0.24,
            q_max: 0.24,
            stationary_soc_min: 0.0,
            stationary_soc_max: 0.1,
            stationary_soc_init: 0.05,
        };
        assert!((ess.initial_soc_upper(&types) - 0.6).abs() < 1e-12);
        assert!((ess.initial_soc_lower(&types) - 0.05).abs() < 1e-12);
        assert!((ess.initial_soc() - 0.35).abs() < 1e-12);
    }
}
