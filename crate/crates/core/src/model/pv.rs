use serde::{Deserialize, Serialize};

use super::blocks::FirstOrderBlock;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvParams {
    pub s_rated_kva: f64,
    /// DC peak power at 1000 W/m².
    pub peak_kw: f64,
    #[serde(default = "default_performance_ratio")]
    pub performance_ratio: f64,
    #[serde(default = "default_q_fraction")]
    pub q_fraction_limit: f64,
    #[serde(default = "default_time_constant")]
    pub time_constant_s: f64,
}

fn default_performance_ratio() -> f64 {
    0.85
}

fn default_q_fraction() -> f64 {
    0.30
}

fn default_time_constant() -> f64 {
    1.0
}

impl PvParams {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.s_rated_kva > 0.0) {
            return Err(Error::config(format!("{path}.s_rated_kva"), "must be > 0"));
        }
        if !(self.peak_kw >= 0.0) {
            return Err(Error::config(format!("{path}.peak_kw"), "must be >= 0"));
        }
        if !(self.performance_ratio > 0.0 && self.performance_ratio <= 1.0) {
            return Err(Error::config(format!("{path}.performance_ratio"), "must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.q_fraction_limit) {
            return Err(Error::config(format!("{path}.q_fraction_limit"), "must be in [0, 1]"));
        }
        if !(self.time_constant_s > 0.0) {
            return Err(Error::config(format!("{path}.time_constant_s"), "must be > 0"));
        }
        Ok(())
    }
}

/// PV inverter: active power follows irradiance, reactive power is
/// dispatchable within the capability limits.
#[derive(Debug, Clone, PartialEq)]
pub struct PvInverter {
    pub params: PvParams,
    /// AC active power fed in (kW, generation positive).
    pub p_ac: f64,
    /// Reactive power, consumption (inductive) positive.
    pub q: FirstOrderBlock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverterStep {
    pub p_ac: f64,
    pub q: f64,
    pub saturated: bool,
}

/// Symmetric reactive-power window `(q_min, q_max)` in kVAr.
pub fn q_capability(s_rated: f64, q_fraction_limit: f64, p_ac: f64) -> (f64, f64) {
    let circle = (s_rated * s_rated - p_ac * p_ac).max(0.0).sqrt();
    let q = (q_fraction_limit * s_rated).min(circle);
    (-q, q)
}

impl PvInverter {
    pub fn new(params: PvParams) -> Result<Self> {
        params.validate("pv")?;
        Ok(Self { params, p_ac: 0.0, q: FirstOrderBlock::new(1.0, params.time_constant_s, 0.0)? })
    }

    pub fn dc_power(&self, irradiance_w_m2: f64) -> f64 {
        self.params.peak_kw * self.params.performance_ratio * irradiance_w_m2.max(0.0) / 1000.0
    }

    pub fn q_capability(&self) -> (f64, f64) {
        q_capability(self.params.s_rated_kva, self.params.q_fraction_limit, self.p_ac)
    }

    pub fn step(&mut self, q_setpoint: f64, irradiance_w_m2: f64, dt: f64) -> Result<InverterStep> {
        self.q.check_step(dt)?;
        Ok(self.step_unchecked(q_setpoint, irradiance_w_m2, dt))
    }

    pub(crate) fn step_unchecked(&mut self, q_setpoint: f64, irradiance_w_m2: f64, dt: f64) -> InverterStep {
        self.p_ac = self.dc_power(irradiance_w_m2).min(self.params.s_rated_kva);
        let (lo, hi) = self.q_capability();
        let cmd = q_setpoint.clamp(lo, hi);
        let block = self.q;
        let [q] = super::blocks::rk4([self.q.y], dt, |s| [block.derivative(cmd, s[0])]);
        self.q.y = q.clamp(lo, hi);
        InverterStep { p_ac: self.p_ac, q: self.q.y, saturated: cmd != q_setpoint }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capability_examples() {
        let (lo, hi) = q_capability(10.0, 0.3, 0.0);
        assert_eq!((lo, hi), (-3.0, 3.0));
        let (_, hi) = q_capability(10.0, 0.3, 9.8);
        assert!((hi - (100.0f64 - 96.04).sqrt()).abs() < 1e-12);
        assert!((hi - 1.99).abs() < 0.01);
        assert_eq!(q_capability(10.0, 0.3, 10.0).1, 0.0);
    }

    #[test]
    fn q_available_at_night() {
        let mut inv = PvInverter::new(PvParams {
            s_rated_kva: 10.0,
            peak_kw: 10.0,
            performance_ratio: 0.85,
            q_fraction_limit: 0.3,
            time_constant_s: 1.0,
        })
        .unwrap();
        for _ in 0..200 {
            inv.step(5.0, 0.0, 0.1).unwrap();
        }
        assert!((inv.q.y - 3.0).abs() < 1e-6);
        assert_eq!(inv.p_ac, 0.0);
    }
}
