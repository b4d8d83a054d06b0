use serde::{Deserialize, Serialize};

use super::blocks::{rk4, FirstOrderBlock};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryParams {
    pub capacity_kwh: f64,
    pub p_max_charge_kw: f64,
    pub p_max_discharge_kw: f64,
    #[serde(default = "default_efficiency")]
    pub efficiency_charge: f64,
    #[serde(default = "default_efficiency")]
    pub efficiency_discharge: f64,
    #[serde(default = "default_time_constant")]
    pub time_constant_s: f64,
    pub initial_soc: f64,
}

fn default_efficiency() -> f64 {
    0.95
}

fn default_time_constant() -> f64 {
    2.0
}

impl BatteryParams {
    pub fn validate(&self, path: &str) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::config(format!("{path}.{field}"), why));
        if !(self.capacity_kwh > 0.0) {
            return bad("capacity_kwh", "must be > 0");
        }
        if !(self.p_max_charge_kw >= 0.0) || !(self.p_max_discharge_kw >= 0.0) {
            return bad("p_max_charge_kw", "power limits must be >= 0");
        }
        for (name, eta) in [
            ("efficiency_charge", self.efficiency_charge),
            ("efficiency_discharge", self.efficiency_discharge),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(name, "must be in (0, 1]");
            }
        }
        if !(self.time_constant_s > 0.0) {
            return bad("time_constant_s", "must be > 0");
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return bad("initial_soc", "must be in [0, 1]");
        }
        Ok(())
    }
}

/// Grid-side energy counters in kWh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyMeter {
    pub charged_kwh: f64,
    pub discharged_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageStep {
    /// Grid-side power, charging positive (kW).
    pub p_actual: f64,
    pub soc: f64,
    /// The setpoint was clipped by power or SOC limits.
    pub saturated: bool,
}

/// Stationary battery behind its own inverter. Power follows the clamped
/// setpoint through a first-order lag.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryStorage {
    pub params: BatteryParams,
    pub soc: f64,
    pub power: FirstOrderBlock,
    pub meter: EnergyMeter,
}

impl BatteryStorage {
    pub fn new(params: BatteryParams) -> Result<Self> {
        params.validate("battery")?;
        Ok(Self {
            params,
            soc: params.initial_soc,
            power: FirstOrderBlock::new(1.0, params.time_constant_s, 0.0)?,
            meter: EnergyMeter::default(),
        })
    }

    /// Setpoint window `[lo, hi]` (kW) admissible for a step of length `dt`.
    pub fn setpoint_window(&self, dt: f64) -> (f64, f64) {
        let p = &self.params;
        let e = p.capacity_kwh * 3600.0;
        let hi = if self.soc >= 1.0 {
            0.0
        } else {
            p.p_max_charge_kw.min((1.0 - self.soc) * e / (p.efficiency_charge * dt))
        };
        let lo = if self.soc <= 0.0 {
            0.0
        } else {
            -p.p_max_discharge_kw.min(self.soc * e * p.efficiency_discharge / dt)
        };
        (lo, hi)
    }

    pub fn step(&mut self, p_setpoint: f64, dt: f64) -> Result<StorageStep> {
        self.power.check_step(dt)?;
        Ok(self.step_unchecked(p_setpoint, dt))
    }

    pub(crate) fn step_unchecked(&mut self, p_setpoint: f64, dt: f64) -> StorageStep {
        let (lo, hi) = self.setpoint_window(dt);
        let cmd = p_setpoint.clamp(lo, hi);
        let saturated = cmd != p_setpoint;
        let (eta_c, eta_d) = (self.params.efficiency_charge, self.params.efficiency_discharge);
        let cap = self.params.capacity_kwh;
        let block = self.power;
        let [y, soc, e_in, e_out] = rk4(
            [self.power.y, self.soc, self.meter.charged_kwh, self.meter.discharged_kwh],
            dt,
            |s| {
                let charge = s[0].max(0.0);
                let discharge = (-s[0]).max(0.0);
                [
                    block.derivative(cmd, s[0]),
                    (eta_c * charge - discharge / eta_d) / (cap * 3600.0),
                    charge / 3600.0,
                    discharge / 3600.0,
                ]
            },
        );
        let (mut y, mut soc, mut e_in, mut e_out) = (y, soc, e_in, e_out);
        if soc > 1.0 {
            e_in -= (soc - 1.0) * cap / eta_c;
            soc = 1.0;
            y = y.min(0.0);
        } else if soc < 0.0 {
            e_out -= -soc * cap * eta_d;
            soc = 0.0;
            y = y.max(0.0);
        }
        if soc >= 1.0 {
            y = y.min(0.0);
        }
        if soc <= 0.0 {
            y = y.max(0.0);
        }
        self.power.y = y;
        self.soc = soc;
        self.meter = EnergyMeter { charged_kwh: e_in, discharged_kwh: e_out };
        StorageStep { p_actual: y, soc, saturated }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bes(soc: f64) -> BatteryStorage {
        BatteryStorage::new(BatteryParams {
            capacity_kwh: 10.0,
            p_max_charge_kw: 5.0,
            p_max_discharge_kw: 5.0,
            efficiency_charge: 1.0,
            efficiency_discharge: 1.0,
            time_constant_s: 2.0,
            initial_soc: soc,
        })
        .unwrap()
    }

    #[test]
    fn empty_battery_refuses_discharge() {
        let mut b = bes(0.0);
        for _ in 0..150 {
            let s = b.step(-3.0, 0.1).unwrap();
            assert_eq!(s.p_actual, 0.0);
            assert!(s.saturated);
        }
        assert_eq!(b.soc, 0.0);
    }

    #[test]
    fn full_battery_refuses_charge() {
        let mut b = bes(1.0);
        for _ in 0..150 {
            assert_eq!(b.step(4.0, 0.1).unwrap().p_actual, 0.0);
        }
        assert_eq!(b.soc, 1.0);
    }

    #[test]
    fn charging_for_fifteen_seconds() {
        // 5 kW for 15 s = 0.0208333 kWh into 10 kWh.
        let mut b = bes(0.5);
        b.power.y = 5.0;
        for _ in 0..150 {
            b.step(5.0, 0.1).unwrap();
        }
        assert!((b.soc - (0.5 + 5.0 * 15.0 / 3600.0 / 10.0)).abs() < 1e-12, "{}", b.soc);
        assert!((b.soc - 0.5021).abs() < 1e-4);
    }

    #[test]
    fn setpoint_clamped_to_power_limits() {
        let mut b = bes(0.5);
        for _ in 0..300 {
            b.step(50.0, 0.1).unwrap();
        }
        assert!((b.power.y - 5.0).abs() < 1e-4);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut p = bes(0.5).params;
        p.efficiency_charge = 0.0;
        assert!(BatteryStorage::new(p).is_err());
        p.efficiency_charge = 1.0;
        p.initial_soc = 1.2;
        assert!(BatteryStorage::new(p).is_err());
    }
}
