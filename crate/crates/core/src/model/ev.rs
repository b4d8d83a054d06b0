use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::blocks::{rk4, FirstOrderBlock};
use super::profile::Instant;
use crate::error::{Error, Result};

/// One trip; times are seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trip {
    pub depart_s: f64,
    pub return_s: f64,
    pub energy_kwh: f64,
}

/// Daily driving pattern of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TripSchedule {
    pub trips: Vec<Trip>,
    /// Trips only happen Monday to Friday.
    #[serde(default)]
    pub weekdays_only: bool,
}

impl TripSchedule {
    pub fn validate(&self, path: &str) -> Result<()> {
        for (i, t) in self.trips.iter().enumerate() {
            if !(0.0..86_400.0).contains(&t.depart_s) || !(t.depart_s < t.return_s && t.return_s <= 86_400.0) {
                return Err(Error::config(
                    format!("{path}.trips[{i}]"),
                    "needs 0 <= depart_s < return_s <= 86400",
                ));
            }
            if !(t.energy_kwh >= 0.0) {
                return Err(Error::config(format!("{path}.trips[{i}].energy_kwh"), "must be >= 0"));
            }
        }
        Ok(())
    }

    fn active_on(&self, weekday: u32) -> bool {
        !self.trips.is_empty() && (!self.weekdays_only || weekday < 5)
    }

    /// Away between the first departure and the last return of the day.
    pub fn is_connected(&self, at: &Instant) -> bool {
        if !self.active_on(at.weekday) {
            return true;
        }
        let first = self.trips.iter().map(|t| t.depart_s).fold(f64::INFINITY, f64::min);
        let last = self.trips.iter().map(|t| t.return_s).fold(f64::NEG_INFINITY, f64::max);
        !(at.second_of_day >= first && at.second_of_day < last)
    }

    pub fn daily_energy(&self) -> f64 {
        self.trips.iter().map(|t| t.energy_kwh).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvParams {
    pub capacity_kwh: f64,
    pub p_rated_kw: f64,
    #[serde(default)]
    pub v2g: bool,
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    #[serde(default = "default_time_constant")]
    pub time_constant_s: f64,
    pub initial_soc: f64,
}

fn default_efficiency() -> f64 {
    0.95
}

fn default_time_constant() -> f64 {
    5.0
}

impl EvParams {
    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.capacity_kwh > 0.0) {
            return Err(Error::config(format!("{path}.capacity_kwh"), "must be > 0"));
        }
        if !(self.p_rated_kw > 0.0) {
            return Err(Error::config(format!("{path}.p_rated_kw"), "must be > 0"));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::config(format!("{path}.efficiency"), "must be in (0, 1]"));
        }
        if !(self.time_constant_s > 0.0) {
            return Err(Error::config(format!("{path}.time_constant_s"), "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::config(format!("{path}.initial_soc"), "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Energy bookkeeping in kWh. Charged/discharged are grid-side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvMeter {
    pub charged_kwh: f64,
    pub discharged_kwh: f64,
    pub driven_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvStep {
    pub p_el: f64,
    pub soc: f64,
    pub connected: bool,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricVehicle {
    pub params: EvParams,
    pub schedule: Arc<TripSchedule>,
    pub soc: f64,
    pub power: FirstOrderBlock,
    pub connected: bool,
    pub meter: EvMeter,
    last_trip_day: Option<i64>,
}

impl ElectricVehicle {
    pub fn new(params: EvParams, schedule: Arc<TripSchedule>) -> Result<Self> {
        params.validate("ev")?;
        schedule.validate("ev.schedule")?;
        Ok(Self {
            params,
            schedule,
            soc: params.initial_soc,
            power: FirstOrderBlock::new(1.0, params.time_constant_s, 0.0)?,
            connected: true,
            meter: EvMeter::default(),
            last_trip_day: None,
        })
    }

    /// Power drawn under local control: rated power until full.
    pub fn local_command(&self) -> f64 {
        if self.connected && self.soc < 1.0 {
            self.params.p_rated_kw
        } else {
            0.0
        }
    }

    /// Admissible power window (kW) while connected, ignoring SOC.
    pub fn power_window(&self) -> (f64, f64) {
        let p = self.params.p_rated_kw;
        (if self.params.v2g { -p } else { 0.0 }, p)
    }

    /// Returns the vehicle to the charger and books the day's driving.
    fn reconnect(&mut self, day: i64) {
        self.connected = true;
        if self.last_trip_day == Some(day) {
            return;
        }
        self.last_trip_day = Some(day);
        let wanted = self.schedule.daily_energy();
        let available = self.soc * self.params.capacity_kwh;
        let used = wanted.min(available);
        self.soc = (self.soc - used / self.params.capacity_kwh).max(0.0);
        self.meter.driven_kwh += used;
    }

    pub fn step(&mut self, flex_offset: f64, at: &Instant, dt: f64) -> Result<EvStep> {
        self.power.check_step(dt)?;
        Ok(self.step_unchecked(flex_offset, at, dt))
    }

    pub(crate) fn step_unchecked(&mut self, flex_offset: f64, at: &Instant, dt: f64) -> EvStep {
        let now_connected = self.schedule.is_connected(at);
        if now_connected && !self.connected {
            self.reconnect(at.day);
        } else if !now_connected {
            self.connected = false;
        }
        if !self.connected {
            self.power.y = 0.0;
            return EvStep { p_el: 0.0, soc: self.soc, connected: false, saturated: flex_offset != 0.0 };
        }

        let eta = self.params.efficiency;
        let cap = self.params.capacity_kwh;
        let e = cap * 3600.0;
        let (mut lo, mut hi) = self.power_window();
        if self.soc >= 1.0 {
            hi = 0.0;
        } else {
            hi = hi.min((1.0 - self.soc) * e / (eta * dt));
        }
        if self.soc <= 0.0 {
            lo = lo.max(0.0);
        } else {
            lo = lo.max(-self.soc * e * eta / dt);
        }
        let requested = self.local_command() + flex_offset;
        let cmd = requested.clamp(lo, hi);
        let block = self.power;
        let [y, soc, e_in, e_out] = rk4(
            [self.power.y, self.soc, self.meter.charged_kwh, self.meter.discharged_kwh],
            dt,
            |s| {
                let charge = s[0].max(0.0);
                let discharge = (-s[0]).max(0.0);
                [
                    block.derivative(cmd, s[0]),
                    (eta * charge - discharge / eta) / e,
                    charge / 3600.0,
                    discharge / 3600.0,
                ]
            },
        );
        let (mut y, mut soc, mut e_in, mut e_out) = (y, soc, e_in, e_out);
        if soc > 1.0 {
            e_in -= (soc - 1.0) * cap / eta;
            soc = 1.0;
        } else if soc < 0.0 {
            e_out -= -soc * cap * eta;
            soc = 0.0;
        }
        if soc >= 1.0 {
            y = y.min(0.0);
        }
        if soc <= 0.0 {
            y = y.max(0.0);
        }
        let (wlo, whi) = self.power_window();
        y = y.clamp(wlo, whi);
        self.power.y = y;
        self.soc = soc;
        self.meter.charged_kwh = e_in;
        self.meter.discharged_kwh = e_out;
        EvStep { p_el: y, soc, connected: true, saturated: cmd != requested }
    }
}
