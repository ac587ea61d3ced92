//! On-disk layout of a scenario document.
//!
//! The `costs` section may give explicit weight tables, a pricing scheme, or
//! both; explicit tables win. Everything else maps one-to-one onto
//! [`Scenario`].

use serde::{Deserialize, Serialize};

use super::{
    Branch, Bus, CostWeights, EssBusSpec, GeneratorSpec, Horizon, LoadSpec, MessType, Options,
    Scenario, TransportArcSpec, TransportCosts,
};

/// Uniform pricing: restoring one MWh of load is worth `restore_per_mwh`,
/// generating one MWh costs `generation_ratio` of that, and moving a unit
/// costs `transport_ratio` of the value of its full capacity for a one-step
/// trip, plus `transport_step_ratio` of that for every extra step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostScheme {
    pub restore_per_mwh: f64,
    pub generation_ratio: f64,
    pub transport_ratio: f64,
    pub transport_step_ratio: f64,
}

impl Default for CostScheme {
    fn default() -> Self {
        Self {
            restore_per_mwh: 1.0,
            generation_ratio: 0.8,
            transport_ratio: 0.1,
            transport_step_ratio: 0.1,
        }
    }
}

impl CostScheme {
    pub fn pickup_weights(&self, loads: &[LoadSpec], step_hours: f64) -> Vec<Vec<f64>> {
        loads
            .iter()
            .map(|l| {
                l.p_forecast
                    .iter()
                    .map(|p| self.restore_per_mwh * p * step_hours)
                    .collect()
            })
            .collect()
    }

    pub fn generation_weights(&self, generators: usize, steps: usize, step_hours: f64) -> Vec<Vec<f64>> {
        let w = self.generation_ratio * self.restore_per_mwh * step_hours;
        vec![vec![w; steps]; generators]
    }

    pub fn transport_per_unit(&self, types: &[MessType], max_travel: usize) -> Vec<Vec<f64>> {
        types
            .iter()
            .map(|m| {
                (1..=max_travel)
                    .map(|travel| {
                        self.transport_ratio
                            * self.restore_per_mwh
                            * m.soc_max_unit
                            * (1.0 + self.transport_step_ratio * (travel as f64 - 1.0))
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<CostScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportCosts>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct ScenarioFile {
    #[serde(default)]
    name: String,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    #[serde(default)]
    generators: Vec<GeneratorSpec>,
    #[serde(default)]
    loads: Vec<LoadSpec>,
    #[serde(default)]
    ess: Vec<EssBusSpec>,
    #[serde(default)]
    mess_types: Vec<MessType>,
    #[serde(default)]
    transport: Vec<TransportArcSpec>,
    #[serde(default)]
    costs: CostSpec,
    horizon: Horizon,
    options: Options,
}

impl From<ScenarioFile> for Scenario {
    fn from(f: ScenarioFile) -> Self {
        let scheme = f.costs.scheme.unwrap_or_default();
        let steps = f.horizon.steps;
        let dt = f.horizon.step_hours;
        let costs = CostWeights {
            pickup: f
                .costs
                .pickup
                .unwrap_or_else(|| scheme.pickup_weights(&f.loads, dt)),
            generation: f
                .costs
                .generation
                .unwrap_or_else(|| scheme.generation_weights(f.generators.len(), steps, dt)),
            transport: f.costs.transport.unwrap_or_else(|| TransportCosts {
                per_unit: scheme.transport_per_unit(&f.mess_types, f.horizon.max_travel),
                overrides: Vec::new(),
            }),
        };
        Scenario {
            name: f.name,
            buses: f.buses,
            branches: f.branches,
            generators: f.generators,
            loads: f.loads,
            ess: f.ess,
            mess_types: f.mess_types,
            transport: f.transport,
            costs,
            horizon: f.horizon,
            options: f.options,
        }
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        ScenarioFile {
            name: s.name,
            buses: s.buses,
            branches: s.branches,
            generators: s.generators,
            loads: s.loads,
            ess: s.ess,
            mess_types: s.mess_types,
            transport: s.transport,
            costs: CostSpec {
                scheme: None,
                pickup: Some(s.costs.pickup),
                generation: Some(s.costs.generation),
                transport: Some(s.costs.transport),
            },
            horizon: s.horizon,
            options: s.options,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_costs_eighty_percent_of_restoration() {
        let scheme = CostScheme::default();
        let gen = scheme.generation_weights(1, 1, 1.0);
        assert!((gen[0][0] - 0.8 * scheme.restore_per_mwh).abs() < 1e-15);
    }

    #[test]
    fn transport_cost_grows_ten_percent_per_extra_step() {
        let scheme = CostScheme::default();
        let types = [MessType {
            soc_min_unit: 0.025,
            soc_max_unit: 0.25,
        }];
        let per_unit = scheme.transport_per_unit(&types, 3);
        assert!((per_unit[0][0] - 0.025).abs() < 1e-15);
        assert!((per_unit[0][1] - 0.0275).abs() < 1e-15);
        assert!((per_unit[0][2] - 0.03).abs() < 1e-15);
    }

    #[test]
    fn scheme_only_document_resolves_all_tables() {
        let doc = r#"{
            "buses": [{"id": 1, "kind": "generator"}, {"id": 2, "kind": "load"}],
            "branches": [{"from": 1, "to": 2, "resistance": 0.01, "reactance": 0.02}],
            "generators": [{"bus": 1, "p_max": 1.0, "ramp_up": 1.0, "ramp_down": -1.0,
                            "fuel_initial": 5.0, "fuel_rate": 1.0, "q_min": -1.0, "q_max": 1.0}],
            "loads": [{"bus": 2, "p_forecast": [0.5, 0.25], "q_forecast": [0.1, 0.05]}],
            "costs": {"scheme": {"restore_per_mwh": 2.0, "generation_ratio": 0.5,
                                  "transport_ratio": 0.1, "transport_step_ratio": 0.1}},
            "horizon": {"steps": 2, "step_hours": 1.0, "max_travel": 1},
            "options": {"eta_ch": 0.9, "eta_dis": 0.9, "v_min": 0.95, "v_max": 1.05}
        }"#;
        let s = Scenario::from_json(doc).unwrap();
        assert_eq!(s.costs.pickup, vec![vec![1.0, 0.5]]);
        assert_eq!(s.costs.generation, vec![vec![1.0, 1.0]]);
        let again = Scenario::from_json(&s.to_json_pretty()).unwrap();
        assert_eq!(again, s);
    }
}
