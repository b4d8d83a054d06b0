//! Radial low-voltage feeder: topology, power flow and line limits.

pub mod power_flow;
pub mod topology;

pub use power_flow::{
    balance_monitor, balance_residual, check_line_limits, solve_power_flow, Injection, LineViolation, PccReading, PowerFlowSolution,
};
pub use topology::{Bus, GridTopology, Line, TopologySpec};
