//! Dispatch objective and the Basin Hopping / Nelder-Mead optimizer.

pub mod basin_hopping;
pub mod cost;
pub mod metropolis;
pub mod nelder_mead;
pub mod objective;

pub use basin_hopping::{basin_hopping, BasinHoppingConfig, BasinHoppingResult, IterationRecord};
pub use cost::{CostTable, FlexibilityRequest, EUR_PER_COST_UNIT};
pub use metropolis::{acceptance_probability, adapt_step_size, metropolis_accept, AcceptanceCounters, MetropolisState};
pub use nelder_mead::{clamp_to, nelder_mead, LocalResult, NelderMeadSettings};
pub use objective::{objective, objective_terms, plant_cost, target_pcc, ObjectiveTerms, Score};
