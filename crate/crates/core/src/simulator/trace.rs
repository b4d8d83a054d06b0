use serde::Serialize;

use super::twin::{Measurement, PlantSample, ReferenceState, Twin};
use crate::error::{Error, Result};
use crate::network::PccReading;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub pcc: PccReading,
    pub plants: Vec<PlantSample>,
    pub losses_kw: f64,
    pub max_line_loading: f64,
    pub violations: usize,
}

impl TraceRow {
    pub fn from_measurement(m: &Measurement) -> Self {
        Self {
            t_s: m.pcc.t_s,
            pcc: m.pcc,
            plants: m.plants.clone(),
            losses_kw: m.losses_kw,
            max_line_loading: m.max_line_loading,
            violations: m.violations.len(),
        }
    }
}

/// Time series sampled once per dispatch step.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SimulationTrace {
    pub rows: Vec<TraceRow>,
}

impl Twin {
    /// Runs `steps` dispatch steps under local control from `reference`,
    /// recording the reference instant as the first row.
    pub fn simulate_baseline(&self, reference: &ReferenceState, steps: usize) -> Result<SimulationTrace> {
        let zeros = vec![0.0; self.n_plants()];
        let mut rows = vec![TraceRow::from_measurement(&self.measure(&reference.snapshot))];
        let mut current = reference.clone();
        for step in 0..steps {
            let eval = self.evaluate_dispatch(&current, &zeros, self.scenario.dispatch_step())?;
            if let Some(e) = &eval.measurement.solver_error {
                return Err(Error::DispatchAborted { step, reason: e.clone() });
            }
            rows.push(TraceRow::from_measurement(&eval.measurement));
            current = self.advance_with(&current, eval);
        }
        Ok(SimulationTrace { rows })
    }
}
