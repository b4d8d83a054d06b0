use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::scenario_file::ScenarioFile;
use crate::model::{BatteryParams, Clock, EvParams, HeatPumpParams, HouseholdLoad, Profile, PvParams, TripSchedule};
use crate::network::GridTopology;

/// Technology class of a controllable plant; selects the cost coefficient
/// and the unit of its dispatch entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    /// PV inverter, dispatched in kVAr.
    Inverter,
    Bes,
    Ehp,
    BevV1g,
    BevV2g,
}

impl PlantKind {
    pub const ALL: [PlantKind; 5] =
        [PlantKind::Bes, PlantKind::Inverter, PlantKind::Ehp, PlantKind::BevV1g, PlantKind::BevV2g];

    pub fn is_reactive(self) -> bool {
        self == PlantKind::Inverter
    }

    pub fn label(self) -> &'static str {
        match self {
            PlantKind::Inverter => "inverter",
            PlantKind::Bes => "bes",
            PlantKind::Ehp => "ehp",
            PlantKind::BevV1g => "bev_v1g",
            PlantKind::BevV2g => "bev_v2g",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantInfo {
    pub id: String,
    pub kind: PlantKind,
    pub prosumer: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: String,
    pub params: EvParams,
    pub schedule: Arc<TripSchedule>,
    pub plant: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prosumer {
    pub id: String,
    pub bus: usize,
    pub household: HouseholdLoad,
    pub pv: Option<(PvParams, usize)>,
    pub battery: Option<(BatteryParams, usize)>,
    pub heat_pump: Option<(HeatPumpParams, usize)>,
    pub vehicles: Vec<Vehicle>,
}

/// Census of controllable plants by class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PlantCensus {
    pub prosumers: usize,
    pub pv: usize,
    pub bes: usize,
    pub ehp: usize,
    pub bev: usize,
    pub bev_v2g: usize,
    pub controllable: usize,
}

impl std::fmt::Display for PlantCensus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} prosumers, {} PV inverters, {} BES, {} EHP, {} BEV ({} V2G): {} controllable plants",
            self.prosumers, self.pv, self.bes, self.ehp, self.bev, self.bev_v2g, self.controllable
        )
    }
}

/// A validated scenario. Plants are ordered prosumer by prosumer; within a
/// prosumer: inverter, battery, heat pump, vehicles.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub topology: GridTopology,
    pub prosumers: Vec<Prosumer>,
    pub plants: Vec<PlantInfo>,
    pub irradiance: Profile,
    pub ambient: Profile,
    pub clock: Clock,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(ScenarioFile::read(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(ScenarioFile::from_json(text)?)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let topology = GridTopology::new(file.topology.clone())?;
        let sim = &file.simulation;
        if !(sim.dt_s > 0.0) {
            return Err(Error::config("simulation.dt_s", "must be > 0"));
        }
        if !(sim.dispatch_step_s > 0.0) || !is_multiple(sim.dispatch_step_s, sim.dt_s) {
            return Err(Error::config("simulation.dispatch_step_s", "must be a positive multiple of dt_s"));
        }
        if !(sim.warmup_s >= 0.0) || !is_multiple(sim.warmup_s, sim.dispatch_step_s) {
            return Err(Error::config("simulation.warmup_s", "must be a non-negative multiple of dispatch_step_s"));
        }
        file.irradiance_check()?;
        file.costs.validate()?;
        file.optimizer.validate()?;

        let mut ids = BTreeSet::new();
        let mut plants = Vec::new();
        let mut prosumers = Vec::new();
        let mut min_tau = f64::INFINITY;
        let mut vehicle_ids = HashMap::new();
        for (pi, p) in file.prosumers.iter().enumerate() {
            let path = format!("prosumers[{pi}]");
            if !ids.insert(p.id.clone()) {
                return Err(Error::config(format!("{path}.id"), format!("duplicate id `{}`", p.id)));
            }
            let bus = topology.bus_index(&p.bus).ok_or_else(|| Error::DanglingReference {
                from: format!("prosumer `{}`", p.id),
                to: format!("bus `{}`", p.bus),
            })?;
            let household = file.profiles.households.get(&p.id).cloned().ok_or_else(|| {
                Error::config(format!("profiles.households.{}", p.id), "missing household profile for prosumer")
            })?;
            household.validate(&format!("profiles.households.{}", p.id))?;
            let mut push = |id: String, kind: PlantKind| {
                plants.push(PlantInfo { id, kind, prosumer: pi });
                plants.len() - 1
            };
            let pv = match p.pv {
                Some(params) => {
                    params.validate(&format!("{path}.pv"))?;
                    min_tau = min_tau.min(params.time_constant_s);
                    Some((params, push(format!("{}/pv", p.id), PlantKind::Inverter)))
                }
                None => None,
            };
            let battery = match p.battery {
                Some(params) => {
                    params.validate(&format!("{path}.battery"))?;
                    min_tau = min_tau.min(params.time_constant_s);
                    Some((params, push(format!("{}/bes", p.id), PlantKind::Bes)))
                }
                None => None,
            };
            let heat_pump = match p.heat_pump {
                Some(params) => {
                    params.validate(&format!("{path}.heat_pump"))?;
                    min_tau = min_tau.min(params.time_constant_s);
                    Some((params, push(format!("{}/ehp", p.id), PlantKind::Ehp)))
                }
                None => None,
            };
            let mut vehicles = Vec::new();
            for (vi, ev) in p.evs.iter().enumerate() {
                let vpath = format!("{path}.evs[{vi}]");
                ev.params.validate(&format!("{vpath}.params"))?;
                if vehicle_ids.insert(ev.id.clone(), p.id.clone()).is_some() || ids.contains(&ev.id) {
                    return Err(Error::config(format!("{vpath}.id"), format!("duplicate id `{}`", ev.id)));
                }
                let schedule = file.profiles.ev_trips.get(&ev.id).cloned().unwrap_or_default();
                schedule.validate(&format!("profiles.ev_trips.{}", ev.id))?;
                min_tau = min_tau.min(ev.params.time_constant_s);
                let kind = if ev.params.v2g { PlantKind::BevV2g } else { PlantKind::BevV1g };
                let plant = push(ev.id.clone(), kind);
                vehicles.push(Vehicle { id: ev.id.clone(), params: ev.params, schedule: Arc::new(schedule), plant });
            }
            prosumers.push(Prosumer { id: p.id.clone(), bus, household, pv, battery, heat_pump, vehicles });
        }
        for key in file.profiles.households.keys() {
            if !ids.contains(key) {
                return Err(Error::DanglingReference {
                    from: format!("profiles.households.{key}"),
                    to: format!("prosumer `{key}`"),
                });
            }
        }
        for key in file.profiles.ev_trips.keys() {
            if !vehicle_ids.contains_key(key) {
                return Err(Error::DanglingReference {
                    from: format!("profiles.ev_trips.{key}"),
                    to: format!("vehicle `{key}`"),
                });
            }
        }
        if sim.dt_s > min_tau / 5.0 * (1.0 + 1e-12) {
            return Err(Error::config(
                "simulation.dt_s",
                format!("{} s exceeds T/5 of the fastest device ({} s)", sim.dt_s, min_tau / 5.0),
            ));
        }

        let start = sim.start;
        let clock = Clock {
            start_second_of_day: start.num_seconds_from_midnight() as f64,
            start_weekday: start.weekday().num_days_from_monday(),
        };
        let scenario = Self {
            irradiance: file.profiles.irradiance_w_m2.clone(),
            ambient: file.profiles.ambient_c.clone(),
            file,
            topology,
            prosumers,
            plants,
            clock,
        };
        scenario.check_coverage(scenario.file.simulation.steps)?;
        Ok(scenario)
    }

    /// Checks every profile covers warm-up plus `steps` dispatch steps.
    pub fn check_coverage(&self, steps: usize) -> Result<()> {
        let sim = &self.file.simulation;
        let from = self.clock.start_second_of_day - sim.warmup_s;
        let to = self.clock.start_second_of_day + steps as f64 * sim.dispatch_step_s;
        self.irradiance.check_coverage("profiles.irradiance_w_m2", from, to)?;
        self.ambient.check_coverage("profiles.ambient_c", from, to)?;
        for p in &self.prosumers {
            p.household.check_coverage(&format!("profiles.households.{}", p.id), from, to)?;
        }
        Ok(())
    }

    pub fn to_file(&self) -> ScenarioFile {
        self.file.clone()
    }

    pub fn dt(&self) -> f64 {
        self.file.simulation.dt_s
    }

    pub fn dispatch_step(&self) -> f64 {
        self.file.simulation.dispatch_step_s
    }

    pub fn n_plants(&self) -> usize {
        self.plants.len()
    }

    pub fn census(&self) -> PlantCensus {
        let count = |k: PlantKind| self.plants.iter().filter(|p| p.kind == k).count();
        PlantCensus {
            prosumers: self.prosumers.len(),
            pv: count(PlantKind::Inverter),
            bes: count(PlantKind::Bes),
            ehp: count(PlantKind::Ehp),
            bev: count(PlantKind::BevV1g) + count(PlantKind::BevV2g),
            bev_v2g: count(PlantKind::BevV2g),
            controllable: self.plants.len(),
        }
    }
}

fn is_multiple(value: f64, unit: f64) -> bool {
    let ratio = value / unit;
    (ratio - ratio.round()).abs() < 1e-9
}

impl ScenarioFile {
    fn irradiance_check(&self) -> Result<()> {
        self.profiles.irradiance_w_m2.validate("profiles.irradiance_w_m2")?;
        self.profiles.ambient_c.validate("profiles.ambient_c")
    }
}
