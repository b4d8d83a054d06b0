//! Device models and the dynamic blocks they are built from.

pub mod battery;
pub mod blocks;
pub mod ev;
pub mod heat_pump;
pub mod household;
pub mod profile;
pub mod pv;

pub use battery::{BatteryParams, BatteryStorage, StorageStep};
pub use blocks::{DelayBlock, FirstOrderBlock, PidController, PidGains, SecondOrderBlock};
pub use ev::{ElectricVehicle, EvParams, EvStep, Trip, TripSchedule};
pub use heat_pump::{cop, HeatPumpParams, HeatPumpStep, HeatPumpSystem};
pub use household::{HouseholdLoad, HouseholdSample};
pub use profile::{Clock, Instant, Profile};
pub use pv::{q_capability, InverterStep, PvInverter, PvParams};
