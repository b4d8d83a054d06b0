use serde::{Deserialize, Serialize};

use super::blocks::{rk4, FirstOrderBlock, PidController, PidGains};
use crate::error::{Error, Result};

const KELVIN: f64 = 273.15;

/// Coefficient of performance from the Carnot limit scaled by a constant
/// effectiveness: `η · T_sink / (T_sink − T_source)`, temperatures in °C in,
/// Kelvin inside.
pub fn cop(t_sink_c: f64, t_source_c: f64, effectiveness: f64) -> Result<f64> {
    if !(t_sink_c > t_source_c) {
        return Err(Error::Domain(format!(
            "COP needs sink ({t_sink_c} °C) warmer than source ({t_source_c} °C)"
        )));
    }
    Ok(effectiveness * (t_sink_c + KELVIN) / (t_sink_c - t_source_c))
}

/// Smallest sink/source lift used inside the simulation, which keeps the COP
/// finite if ambient air ever reaches storage temperature.
const MIN_LIFT_K: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatPumpParams {
    pub p_el_max_kw: f64,
    #[serde(default = "d_element")]
    pub element_p_max_kw: f64,
    #[serde(default = "d_effectiveness")]
    pub effectiveness: f64,
    /// Storage heat capacity (kWh/K).
    pub heat_capacity_kwh_per_k: f64,
    #[serde(default = "d_setpoint")]
    pub t_setpoint_c: f64,
    #[serde(default = "d_t_min")]
    pub t_min_c: f64,
    #[serde(default = "d_t_max")]
    pub t_max_c: f64,
    #[serde(default = "d_threshold")]
    pub t_element_threshold_c: f64,
    #[serde(default = "d_pid")]
    pub pid: PidGains,
    #[serde(default = "d_time_constant")]
    pub time_constant_s: f64,
    #[serde(default = "d_power_factor")]
    pub power_factor: f64,
    #[serde(default = "d_setpoint")]
    pub initial_temperature_c: f64,
}

fn d_element() -> f64 {
    6.0
}
fn d_effectiveness() -> f64 {
    0.5
}
fn d_setpoint() -> f64 {
    45.0
}
fn d_t_min() -> f64 {
    35.0
}
fn d_t_max() -> f64 {
    90.0
}
fn d_threshold() -> f64 {
    50.0
}
fn d_pid() -> PidGains {
    PidGains { kp: 1.0, ki: 0.001, kd: 0.0 }
}
fn d_time_constant() -> f64 {
    20.0
}
fn d_power_factor() -> f64 {
    0.95
}

impl HeatPumpParams {
    pub fn validate(&self, path: &str) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::config(format!("{path}.{field}"), why));
        if !(self.p_el_max_kw > 0.0) {
            return bad("p_el_max_kw", "must be > 0");
        }
        if !(self.element_p_max_kw >= 0.0) {
            return bad("element_p_max_kw", "must be >= 0");
        }
        if !(self.effectiveness > 0.0 && self.effectiveness < 1.0) {
            return bad("effectiveness", "must be in (0, 1)");
        }
        if !(self.heat_capacity_kwh_per_k > 0.0) {
            return bad("heat_capacity_kwh_per_k", "must be > 0");
        }
        if !(self.t_min_c < self.t_max_c) {
            return bad("t_min_c", "must be below t_max_c");
        }
        if !(self.t_min_c..=self.t_max_c).contains(&self.t_setpoint_c) {
            return bad("t_setpoint_c", "must lie within [t_min_c, t_max_c]");
        }
        if !(self.t_min_c..=self.t_max_c).contains(&self.initial_temperature_c) {
            return bad("initial_temperature_c", "must lie within [t_min_c, t_max_c]");
        }
        if !(self.time_constant_s > 0.0) {
            return bad("time_constant_s", "must be > 0");
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return bad("power_factor", "must be in (0, 1]");
        }
        Ok(())
    }

    pub fn p_total_max(&self) -> f64 {
        self.p_el_max_kw + self.element_p_max_kw
    }

    /// Reactive power per kW of electric consumption (inductive).
    pub fn q_per_p(&self) -> f64 {
        (1.0 / (self.power_factor * self.power_factor) - 1.0).max(0.0).sqrt()
    }
}

/// Heat-side bookkeeping in kWh.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatMeter {
    pub heat_supplied_kwh: f64,
    pub heat_demand_kwh: f64,
    pub electric_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatPumpStep {
    pub p_el: f64,
    pub temperature_c: f64,
    /// Storage pinned at t_min or t_max, or the command was clipped.
    pub saturated: bool,
    pub element_active: bool,
}

/// Air-water heat pump with heating element and hot-water storage, under a
/// local feed-forward + PI temperature controller.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatPumpSystem {
    pub params: HeatPumpParams,
    pub temperature_c: f64,
    pub controller: PidController,
    pub power: FirstOrderBlock,
    pub meter: HeatMeter,
    /// Local command of the most recent step (kW).
    pub local_command: f64,
}

impl HeatPumpSystem {
    pub fn new(params: HeatPumpParams) -> Result<Self> {
        params.validate("heat_pump")?;
        let limit = params.p_total_max();
        Ok(Self {
            params,
            temperature_c: params.initial_temperature_c,
            controller: PidController::new(params.pid, -limit, limit)?,
            power: FirstOrderBlock::new(1.0, params.time_constant_s, 0.0)?,
            meter: HeatMeter::default(),
            local_command: 0.0,
        })
    }

    fn cop_at(&self, temperature_c: f64, ambient_c: f64) -> f64 {
        let source = ambient_c.min(temperature_c - MIN_LIFT_K);
        // Cannot fail: source < sink by construction.
        cop(temperature_c, source, self.params.effectiveness).unwrap_or(1.0)
    }

    /// Heat delivered (kW_th) for electric input `p`; compressor first, then
    /// the element at unit efficiency.
    fn heat_output(&self, p: f64, cop: f64) -> f64 {
        let compressor = p.clamp(0.0, self.params.p_el_max_kw);
        let element = (p - self.params.p_el_max_kw).max(0.0);
        cop * compressor + element
    }

    /// Electric power that exactly covers `heat_demand` (kW).
    fn covering_power(&self, heat_demand: f64, cop: f64) -> f64 {
        let p = &self.params;
        if heat_demand <= cop * p.p_el_max_kw {
            heat_demand.max(0.0) / cop
        } else {
            p.p_el_max_kw + (heat_demand - cop * p.p_el_max_kw).min(p.element_p_max_kw)
        }
    }

    /// Local command without flexibility: feed-forward plus PI correction,
    /// evaluated without advancing the controller.
    pub fn local_command_preview(&self, heat_demand: f64, ambient_c: f64) -> f64 {
        let cop = self.cop_at(self.temperature_c, ambient_c);
        let err = self.params.t_setpoint_c - self.temperature_c;
        let g = self.controller.gains;
        let pid = (g.kp * err + g.ki * self.controller.integral).clamp(self.controller.lo, self.controller.hi);
        let cap = self.capacity_for(heat_demand, cop, 0.0);
        (self.covering_power(heat_demand, cop) + pid).clamp(0.0, cap)
    }

    fn capacity_for(&self, heat_demand: f64, cop: f64, flex_offset: f64) -> f64 {
        let p = &self.params;
        // A positive request raises the commanded storage target towards
        // t_max, which is above the element threshold.
        let target = if flex_offset > 0.0 { p.t_max_c } else { p.t_setpoint_c };
        let element_allowed = target > p.t_element_threshold_c || heat_demand > cop * p.p_el_max_kw;
        p.p_el_max_kw + if element_allowed { p.element_p_max_kw } else { 0.0 }
    }

    pub fn step(&mut self, heat_demand: f64, ambient_c: f64, flex_offset: f64, dt: f64) -> Result<HeatPumpStep> {
        self.power.check_step(dt)?;
        Ok(self.step_unchecked(heat_demand, ambient_c, flex_offset, dt))
    }

    pub(crate) fn step_unchecked(&mut self, heat_demand: f64, ambient_c: f64, flex_offset: f64, dt: f64) -> HeatPumpStep {
        let p = self.params;
        let cop_now = self.cop_at(self.temperature_c, ambient_c);
        let covering = self.covering_power(heat_demand, cop_now);
        let pid = self.controller.step_unchecked(p.t_setpoint_c - self.temperature_c, dt);
        let cap = self.capacity_for(heat_demand, cop_now, flex_offset);
        let local = (covering + pid).clamp(0.0, cap);
        self.local_command = local;
        let requested = local + flex_offset;
        let mut cmd = requested.clamp(0.0, cap);
        // Saturate-and-hold at the storage bounds.
        if self.temperature_c <= p.t_min_c && cmd < covering {
            cmd = covering.min(cap);
        }
        if self.temperature_c >= p.t_max_c && cmd > covering {
            cmd = covering;
        }
        let mut saturated = (cmd - requested).abs() > 1e-12;

        let c_th = p.heat_capacity_kwh_per_k * 3600.0;
        let block = self.power;
        let this = &*self;
        let [y, temp, e_heat, e_dem, e_el] = rk4(
            [
                self.power.y,
                self.temperature_c,
                self.meter.heat_supplied_kwh,
                self.meter.heat_demand_kwh,
                self.meter.electric_kwh,
            ],
            dt,
            |s| {
                let cop = this.cop_at(s[1], ambient_c);
                let heat = this.heat_output(s[0], cop);
                [
                    block.derivative(cmd, s[0]),
                    (heat - heat_demand) / c_th,
                    heat / 3600.0,
                    heat_demand / 3600.0,
                    s[0] / 3600.0,
                ]
            },
        );
        let mut temp = temp;
        if temp < p.t_min_c {
            temp = p.t_min_c;
            saturated = true;
        } else if temp > p.t_max_c {
            temp = p.t_max_c;
            saturated = true;
        }
        self.power.y = y.max(0.0);
        self.temperature_c = temp;
        self.meter = HeatMeter { heat_supplied_kwh: e_heat, heat_demand_kwh: e_dem, electric_kwh: e_el };
        HeatPumpStep {
            p_el: self.power.y,
            temperature_c: temp,
            saturated,
            element_active: self.power.y > p.p_el_max_kw + 1e-12,
        }
    }

    /// Reactive power drawn at the current electric power (kVAr).
    pub fn q_el(&self) -> f64 {
        self.power.y * self.params.q_per_p()
    }
}
