use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::PlantKind;

/// Specific cost of a load change per kW (kVAr for inverters), in units of
/// 0.1 EUR/kW. `k_infeasible` is charged per overloaded line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostTable {
    pub k_bes: f64,
    pub k_inv: f64,
    pub k_ehp: f64,
    pub k_bev_v1g: f64,
    pub k_bev_v2g: f64,
    pub k_pcc_p: f64,
    pub k_pcc_q: f64,
    pub k_infeasible: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        Self {
            k_bes: 2.78e-4,
            k_inv: 1.38e-4,
            k_ehp: 7.92e-3,
            k_bev_v1g: 5.56e-4,
            k_bev_v2g: 9.72e-4,
            k_pcc_p: 2.78e-2,
            k_pcc_q: 2.78e-2,
            k_infeasible: 10.0,
        }
    }
}

/// Cost table units are 0.1 EUR per kW.
pub const EUR_PER_COST_UNIT: f64 = 0.1;

impl CostTable {
    pub fn for_kind(&self, kind: PlantKind) -> f64 {
        match kind {
            PlantKind::Bes => self.k_bes,
            PlantKind::Inverter => self.k_inv,
            PlantKind::Ehp => self.k_ehp,
            PlantKind::BevV1g => self.k_bev_v1g,
            PlantKind::BevV2g => self.k_bev_v2g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("costs.k_bes", self.k_bes),
            ("costs.k_inv", self.k_inv),
            ("costs.k_ehp", self.k_ehp),
            ("costs.k_bev_v1g", self.k_bev_v1g),
            ("costs.k_bev_v2g", self.k_bev_v2g),
            ("costs.k_pcc_p", self.k_pcc_p),
            ("costs.k_pcc_q", self.k_pcc_q),
            ("costs.k_infeasible", self.k_infeasible),
        ];
        for (path, k) in all {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(Error::config(path, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Requested change of the PCC exchange relative to the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlexibilityRequest {
    pub dp_kw: f64,
    pub dq_kvar: f64,
    /// Seconds after the reference instant.
    pub start_s: f64,
    pub duration_s: f64,
}

impl FlexibilityRequest {
    pub fn new(dp_kw: f64, dq_kvar: f64, duration_s: f64) -> Self {
        Self { dp_kw, dq_kvar, start_s: 0.0, duration_s }
    }

    /// Number of dispatch steps covered; the duration must be a multiple of
    /// the step.
    pub fn steps(&self, dispatch_step_s: f64) -> Result<usize> {
        let ratio = self.duration_s / dispatch_step_s;
        if !(ratio >= 0.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::config(
                "request.duration_s",
                format!("{} s is not a multiple of the {} s dispatch step", self.duration_s, dispatch_step_s),
            ));
        }
        Ok(ratio.round() as usize)
    }
}
