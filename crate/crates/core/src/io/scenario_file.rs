//! The scenario document: one JSON file describing the feeder, the
//! prosumers and their devices, all time series, and default settings for
//! the optimizer.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BatteryParams, EvParams, HeatPumpParams, HouseholdLoad, Profile, PvParams, TripSchedule};
use crate::network::TopologySpec;
use crate::optimizer::{BasinHoppingConfig, CostTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub topology: TopologySpec,
    pub prosumers: Vec<ProsumerSpec>,
    pub profiles: ProfilesSpec,
    #[serde(default)]
    pub costs: CostTable,
    #[serde(default)]
    pub optimizer: BasinHoppingConfig,
    pub simulation: SimulationSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProsumerSpec {
    pub id: String,
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv: Option<PvParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<BatteryParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_pump: Option<HeatPumpParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evs: Vec<EvSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvSpec {
    pub id: String,
    pub params: EvParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesSpec {
    pub irradiance_w_m2: Profile,
    pub ambient_c: Profile,
    /// Keyed by prosumer id.
    pub households: BTreeMap<String, HouseholdLoad>,
    /// Keyed by vehicle id.
    #[serde(default)]
    pub ev_trips: BTreeMap<String, TripSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    /// Wall-clock instant of the flexibility request, `YYYY-MM-DDTHH:MM:SS`.
    pub start: NaiveDateTime,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default = "default_dispatch_step")]
    pub dispatch_step_s: f64,
    #[serde(default = "default_warmup")]
    pub warmup_s: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_dt() -> f64 {
    0.1
}
fn default_dispatch_step() -> f64 {
    15.0
}
fn default_warmup() -> f64 {
    86_400.0
}
fn default_steps() -> usize {
    40
}

impl ScenarioFile {
    /// Parses a scenario document, naming the JSON path of any schema error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read scenario: {e}")))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_name_the_path() {
        let text = r#"{
            "topology": {"pcc_bus": "b0", "buses": [{"id": "b0"}], "lines": []},
            "prosumers": [{"id": "p1", "bus": "b0", "battery": {"capacity_kwh": "ten"}}],
            "profiles": {"irradiance_w_m2": {"step_s": 3600, "values": [0]},
                         "ambient_c": {"step_s": 3600, "values": [0]}, "households": {}},
            "simulation": {"start": "2023-01-16T20:00:00"}
        }"#;
        let err = ScenarioFile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("prosumers[0].battery.capacity_kwh"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{
            "topology": {"pcc_bus": "b0", "buses": [{"id": "b0", "colour": 1}], "lines": []},
            "prosumers": [],
            "profiles": {"irradiance_w_m2": {"step_s": 3600, "values": [0]},
                         "ambient_c": {"step_s": 3600, "values": [0]}, "households": {}},
            "simulation": {"start": "2023-01-16T20:00:00"}
        }"#;
        let err = ScenarioFile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("topology.buses[0]"), "{err}");
    }
}
