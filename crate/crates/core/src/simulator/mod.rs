//! The digital twin of the energy cell.

pub mod scenario;
pub mod trace;
pub mod twin;

pub use scenario::{PlantCensus, PlantInfo, PlantKind, Prosumer, Scenario, Vehicle};
pub use trace::{SimulationTrace, TraceRow};
pub use twin::{Evaluation, Measurement, PlantSample, ProsumerState, ReferenceState, Twin, TwinState};
