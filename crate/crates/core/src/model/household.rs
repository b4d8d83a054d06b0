use serde::{Deserialize, Serialize};

use super::profile::Profile;
use crate::error::Result;

/// Inflexible household demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseholdLoad {
    pub p_kw: Profile,
    pub q_kvar: Profile,
    pub heat_kw: Profile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdSample {
    pub p_kw: f64,
    pub q_kvar: f64,
    pub heat_kw: f64,
}

impl HouseholdLoad {
    pub fn validate(&self, path: &str) -> Result<()> {
        self.p_kw.validate(&format!("{path}.p_kw"))?;
        self.q_kvar.validate(&format!("{path}.q_kvar"))?;
        self.heat_kw.validate(&format!("{path}.heat_kw"))
    }

    pub fn check_coverage(&self, path: &str, from: f64, to: f64) -> Result<()> {
        self.p_kw.check_coverage(&format!("{path}.p_kw"), from, to)?;
        self.q_kvar.check_coverage(&format!("{path}.q_kvar"), from, to)?;
        self.heat_kw.check_coverage(&format!("{path}.heat_kw"), from, to)
    }

    pub fn sample(&self, absolute_s: f64) -> HouseholdSample {
        HouseholdSample {
            p_kw: self.p_kw.value_at(absolute_s),
            q_kvar: self.q_kvar.value_at(absolute_s),
            heat_kw: self.heat_kw.value_at(absolute_s).max(0.0),
        }
    }
}
