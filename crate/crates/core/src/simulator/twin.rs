use std::sync::Arc;

use serde::Serialize;

use super::scenario::{PlantKind, Scenario};
use crate::error::{Error, Result};
use crate::model::{BatteryStorage, ElectricVehicle, HeatPumpSystem, PvInverter};
use crate::network::{check_line_limits, solve_power_flow, Injection, LineViolation, PccReading};

/// Dynamic state of one prosumer's devices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsumerState {
    pub pv: Option<PvInverter>,
    pub battery: Option<BatteryStorage>,
    pub heat_pump: Option<HeatPumpSystem>,
    pub vehicles: Vec<ElectricVehicle>,
}

/// Complete dynamic state of the cell. Cloning yields an independent twin.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinState {
    /// Seconds relative to the flexibility request.
    pub t: f64,
    pub prosumers: Vec<ProsumerState>,
    /// Accumulated saturation per plant since the last reset.
    pub saturated: Vec<bool>,
}

/// End-of-step reading of one controllable plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantSample {
    pub kind: PlantKind,
    /// kW for active-power plants, kVAr for inverters; consumption positive.
    pub power: f64,
    /// SOC for BES/BEV, storage temperature (°C) for EHP, AC active power
    /// (kW) for inverters.
    pub state: f64,
    /// Apparent power (kVA) for inverters, otherwise |power|.
    pub apparent: f64,
    pub connected: bool,
    pub saturated: bool,
}

/// Electrical picture of the cell at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub pcc: PccReading,
    pub plants: Vec<PlantSample>,
    pub violations: Vec<LineViolation>,
    pub injections: Vec<Injection>,
    pub losses_kw: f64,
    pub losses_kvar: f64,
    pub max_line_loading: f64,
    /// Set when the power flow failed; `pcc` is then NaN.
    pub solver_error: Option<String>,
}

impl Measurement {
    pub fn is_feasible(&self) -> bool {
        self.solver_error.is_none() && self.violations.is_empty()
    }
}

/// Snapshot taken right before the flexibility request plus the frozen
/// reference powers all deltas are measured against. Advancing moves the
/// snapshot; the reference powers never change.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub snapshot: TwinState,
    pub reference_powers: Arc<Vec<f64>>,
    pub reference_pcc: PccReading,
    /// Dispatch steps applied since the request.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub state: TwinState,
    pub measurement: Measurement,
}

/// The digital twin: a scenario plus the integration loop.
#[derive(Debug, Clone)]
pub struct Twin {
    pub scenario: Arc<Scenario>,
}

impl Twin {
    pub fn new(scenario: Scenario) -> Self {
        Self { scenario: Arc::new(scenario) }
    }

    pub fn from_arc(scenario: Arc<Scenario>) -> Self {
        Self { scenario }
    }

    pub fn n_plants(&self) -> usize {
        self.scenario.n_plants()
    }

    /// Initial conditions at `t`.
    pub fn initial_state(&self, t: f64) -> TwinState {
        let prosumers = self
            .scenario
            .prosumers
            .iter()
            .map(|p| ProsumerState {
                pv: p.pv.map(|(params, _)| PvInverter::new(params).expect("validated")),
                battery: p.battery.map(|(params, _)| BatteryStorage::new(params).expect("validated")),
                heat_pump: p.heat_pump.map(|(params, _)| HeatPumpSystem::new(params).expect("validated")),
                vehicles: p
                    .vehicles
                    .iter()
                    .map(|v| ElectricVehicle::new(v.params, v.schedule.clone()).expect("validated"))
                    .collect(),
            })
            .collect();
        TwinState { t, prosumers, saturated: vec![false; self.n_plants()] }
    }

    /// Integrates `duration` seconds with the dispatch offsets held constant.
    pub fn advance(&self, state: &mut TwinState, offsets: &[f64], duration: f64) -> Result<()> {
        if offsets.len() != self.n_plants() {
            return Err(Error::parameter(
                "dispatch vector",
                format!("expected {} entries, got {}", self.n_plants(), offsets.len()),
            ));
        }
        if !(duration >= 0.0) {
            return Err(Error::parameter("duration", "must be >= 0"));
        }
        let dt = self.scenario.dt();
        let n = (duration / dt).round() as usize;
        let t0 = state.t;
        for k in 0..n {
            let t = t0 + k as f64 * dt;
            self.substep(state, offsets, t, dt);
        }
        state.t = t0 + n as f64 * dt;
        Ok(())
    }

    fn substep(&self, state: &mut TwinState, offsets: &[f64], t: f64, dt: f64) {
        let sc = &*self.scenario;
        let at = sc.clock.at(t);
        let irradiance = sc.irradiance.value_at(at.absolute);
        let ambient = sc.ambient.value_at(at.absolute);
        for (p, ps) in sc.prosumers.iter().zip(state.prosumers.iter_mut()) {
            let hh = p.household.sample(at.absolute);
            let mut p_ac = 0.0;
            if let (Some((_, idx)), Some(inv)) = (p.pv, ps.pv.as_mut()) {
                let s = inv.step_unchecked(offsets[idx], irradiance, dt);
                p_ac = s.p_ac;
                state.saturated[idx] |= s.saturated;
            }
            if let (Some((_, idx)), Some(bes)) = (p.battery, ps.battery.as_mut()) {
                let local = p_ac - hh.p_kw;
                let s = bes.step_unchecked(local + offsets[idx], dt);
                state.saturated[idx] |= s.saturated;
            }
            if let (Some((_, idx)), Some(hp)) = (p.heat_pump, ps.heat_pump.as_mut()) {
                let s = hp.step_unchecked(hh.heat_kw, ambient, offsets[idx], dt);
                state.saturated[idx] |= s.saturated;
            }
            for (v, ev) in p.vehicles.iter().zip(ps.vehicles.iter_mut()) {
                let s = ev.step_unchecked(offsets[v.plant], &at, dt);
                state.saturated[v.plant] |= s.saturated && offsets[v.plant] != 0.0;
            }
        }
    }

    /// Local (undispatched) setpoint of every plant in the given state.
    pub fn local_commands(&self, state: &TwinState) -> Vec<f64> {
        let sc = &*self.scenario;
        let at = sc.clock.at(state.t);
        let irradiance = sc.irradiance.value_at(at.absolute);
        let ambient = sc.ambient.value_at(at.absolute);
        let mut out = vec![0.0; self.n_plants()];
        for (p, ps) in sc.prosumers.iter().zip(&state.prosumers) {
            let hh = p.household.sample(at.absolute);
            let p_ac = ps
                .pv
                .as_ref()
                .map(|inv| inv.dc_power(irradiance).min(inv.params.s_rated_kva))
                .unwrap_or(0.0);
            if let (Some((_, idx)), Some(_)) = (p.battery, ps.battery.as_ref()) {
                out[idx] = p_ac - hh.p_kw;
            }
            if let (Some((_, idx)), Some(hp)) = (p.heat_pump, ps.heat_pump.as_ref()) {
                out[idx] = hp.local_command_preview(hh.heat_kw, ambient);
            }
            for (v, ev) in p.vehicles.iter().zip(&ps.vehicles) {
                out[v.plant] = if ev.schedule.is_connected(&at) && ev.soc < 1.0 { ev.params.p_rated_kw } else { 0.0 };
            }
        }
        out
    }

    /// Box bounds on the dispatch offsets that keep every plant's setpoint
    /// within its physical power window, given the local commands in `state`.
    pub fn dispatch_bounds(&self, state: &TwinState) -> Vec<(f64, f64)> {
        let sc = &*self.scenario;
        let at = sc.clock.at(state.t);
        let local = self.local_commands(state);
        let mut out = vec![(0.0, 0.0); self.n_plants()];
        for (p, ps) in sc.prosumers.iter().zip(&state.prosumers) {
            if let (Some((params, idx)), Some(inv)) = (p.pv, ps.pv.as_ref()) {
                let (lo, hi) = crate::model::q_capability(params.s_rated_kva, params.q_fraction_limit, inv.p_ac);
                out[idx] = (lo, hi);
            }
            if let Some((params, idx)) = p.battery {
                out[idx] = (-params.p_max_discharge_kw - local[idx], params.p_max_charge_kw - local[idx]);
            }
            if let Some((params, idx)) = p.heat_pump {
                out[idx] = (-local[idx], params.p_total_max() - local[idx]);
            }
            for (v, ev) in p.vehicles.iter().zip(&ps.vehicles) {
                out[v.plant] = if ev.schedule.is_connected(&at) {
                    let (lo, hi) = ev.power_window();
                    (lo - local[v.plant], hi - local[v.plant])
                } else {
                    (0.0, 0.0)
                };
            }
        }
        for b in &mut out {
            if b.0 > b.1 {
                *b = (0.0, 0.0);
            }
        }
        out
    }

    /// Solves the network for the current state.
    pub fn measure(&self, state: &TwinState) -> Measurement {
        let sc = &*self.scenario;
        let at = sc.clock.at(state.t);
        let mut injections = vec![Injection::default(); sc.topology.n_buses()];
        let mut plants = vec![
            PlantSample {
                kind: PlantKind::Bes,
                power: 0.0,
                state: 0.0,
                apparent: 0.0,
                connected: true,
                saturated: false,
            };
            self.n_plants()
        ];
        for (p, ps) in sc.prosumers.iter().zip(&state.prosumers) {
            let hh = p.household.sample(at.absolute);
            let inj = &mut injections[p.bus];
            inj.p_kw += hh.p_kw;
            inj.q_kvar += hh.q_kvar;
            if let (Some((_, idx)), Some(inv)) = (p.pv, ps.pv.as_ref()) {
                inj.p_kw -= inv.p_ac;
                inj.q_kvar += inv.q.y;
                plants[idx] = PlantSample {
                    kind: PlantKind::Inverter,
                    power: inv.q.y,
                    state: inv.p_ac,
                    apparent: inv.p_ac.hypot(inv.q.y),
                    connected: true,
                    saturated: state.saturated[idx],
                };
            }
            if let (Some((_, idx)), Some(bes)) = (p.battery, ps.battery.as_ref()) {
                inj.p_kw += bes.power.y;
                plants[idx] = PlantSample {
                    kind: PlantKind::Bes,
                    power: bes.power.y,
                    state: bes.soc,
                    apparent: bes.power.y.abs(),
                    connected: true,
                    saturated: state.saturated[idx],
                };
            }
            if let (Some((_, idx)), Some(hp)) = (p.heat_pump, ps.heat_pump.as_ref()) {
                inj.p_kw += hp.power.y;
                inj.q_kvar += hp.q_el();
                plants[idx] = PlantSample {
                    kind: PlantKind::Ehp,
                    power: hp.power.y,
                    state: hp.temperature_c,
                    apparent: hp.power.y.hypot(hp.q_el()),
                    connected: true,
                    saturated: state.saturated[idx],
                };
            }
            for (v, ev) in p.vehicles.iter().zip(&ps.vehicles) {
                inj.p_kw += ev.power.y;
                plants[v.plant] = PlantSample {
                    kind: sc.plants[v.plant].kind,
                    power: ev.power.y,
                    state: ev.soc,
                    apparent: ev.power.y.abs(),
                    connected: ev.connected,
                    saturated: state.saturated[v.plant],
                };
            }
        }
        match solve_power_flow(&sc.topology, &injections) {
            Ok(pf) => {
                let violations = check_line_limits(&pf.line_currents_a, &sc.topology);
                let max_line_loading = pf
                    .line_currents_a
                    .iter()
                    .zip(sc.topology.lines())
                    .map(|(i, l)| i / l.i_max_a)
                    .fold(0.0, f64::max);
                Measurement {
                    pcc: pf.pcc(state.t),
                    plants,
                    violations,
                    injections,
                    losses_kw: pf.losses_kw,
                    losses_kvar: pf.losses_kvar,
                    max_line_loading,
                    solver_error: None,
                }
            }
            Err(e) => Measurement {
                pcc: PccReading { p_kw: f64::NAN, q_kvar: f64::NAN, t_s: state.t },
                plants,
                violations: Vec::new(),
                injections,
                losses_kw: f64::NAN,
                losses_kvar: f64::NAN,
                max_line_loading: f64::NAN,
                solver_error: Some(e.to_string()),
            },
        }
    }

    /// Simulates `duration` seconds under local control only, starting from
    /// the scenario's initial conditions, and captures the reference.
    pub fn run_warmup(&self, duration: f64) -> Result<ReferenceState> {
        if !(duration >= 0.0) {
            return Err(Error::parameter("warm-up duration", "must be >= 0"));
        }
        let mut state = self.initial_state(-duration);
        let zeros = vec![0.0; self.n_plants()];
        let chunk = self.scenario.dispatch_step();
        let mut remaining = duration;
        while remaining > 1e-9 {
            let d = remaining.min(chunk);
            self.advance(&mut state, &zeros, d)?;
            remaining -= d;
        }
        state.t = 0.0;
        self.reference_from(state)
    }

    /// Captures the reference powers of `state` (which becomes the snapshot).
    pub fn reference_from(&self, mut state: TwinState) -> Result<ReferenceState> {
        state.saturated.iter_mut().for_each(|s| *s = false);
        let m = self.measure(&state);
        if let Some(e) = m.solver_error {
            return Err(Error::config("reference state", e));
        }
        Ok(ReferenceState {
            reference_powers: Arc::new(m.plants.iter().map(|p| p.power).collect()),
            reference_pcc: m.pcc,
            snapshot: state,
            step: 0,
        })
    }

    /// Restores the snapshot, applies `offsets` for one dispatch step of
    /// `dt_step` seconds and measures the network at the end of the step.
    /// The reference itself is untouched.
    pub fn evaluate_dispatch(&self, reference: &ReferenceState, offsets: &[f64], dt_step: f64) -> Result<Evaluation> {
        let mut state = reference.snapshot.clone();
        state.saturated.iter_mut().for_each(|s| *s = false);
        self.advance(&mut state, offsets, dt_step)?;
        let measurement = self.measure(&state);
        Ok(Evaluation { state, measurement })
    }

    /// Moves the snapshot one dispatch step forward under `offsets`, keeping
    /// the original reference powers.
    pub fn advance_reference(&self, reference: &ReferenceState, offsets: &[f64]) -> Result<ReferenceState> {
        let eval = self.evaluate_dispatch(reference, offsets, self.scenario.dispatch_step())?;
        Ok(self.advance_with(reference, eval))
    }

    /// Like [`Twin::advance_reference`] but reuses an evaluation already made
    /// for the accepted vector.
    pub fn advance_with(&self, reference: &ReferenceState, eval: Evaluation) -> ReferenceState {
        ReferenceState {
            snapshot: eval.state,
            reference_powers: reference.reference_powers.clone(),
            reference_pcc: reference.reference_pcc,
            step: reference.step + 1,
        }
    }
}
