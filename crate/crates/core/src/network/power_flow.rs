//! Balanced backward/forward sweep on the single-phase equivalent.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::topology::GridTopology;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const TOLERANCE_PU: f64 = 1e-8;
pub const COLLAPSE_PU: f64 = 0.5;

static WORST_BALANCE: AtomicU64 = AtomicU64::new(0);
static SOLVES: AtomicUsize = AtomicUsize::new(0);

/// Worst relative power-balance residual of any converged solve in this
/// process, and the number of such solves.
pub fn balance_monitor() -> (f64, usize) {
    (f64::from_bits(WORST_BALANCE.load(Ordering::Relaxed)), SOLVES.load(Ordering::Relaxed))
}

/// Relative mismatch between PCC power and injections plus losses.
pub fn balance_residual(injections: &[Injection], pcc_kw: f64, pcc_kvar: f64, losses_kw: f64, losses_kvar: f64) -> f64 {
    let inj: Complex64 = injections.iter().map(|i| Complex64::new(i.p_kw, i.q_kvar)).sum();
    let scale: f64 = injections.iter().map(|i| i.p_kw.hypot(i.q_kvar)).sum::<f64>() + losses_kw.hypot(losses_kvar);
    let residual = (Complex64::new(pcc_kw, pcc_kvar) - inj - Complex64::new(losses_kw, losses_kvar)).norm();
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

/// Bus injection, consumption positive (kW, kVAr, three-phase totals).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Injection {
    pub p_kw: f64,
    pub q_kvar: f64,
}

/// Power drawn from the superior grid at the PCC, consumption positive.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PccReading {
    pub p_kw: f64,
    pub q_kvar: f64,
    pub t_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    /// Complex bus voltages in p.u. of the phase nominal.
    pub voltages_pu: Vec<Complex64>,
    /// Phase current magnitude per line, in input line order (A).
    pub line_currents_a: Vec<f64>,
    pub pcc_kw: f64,
    pub pcc_kvar: f64,
    pub losses_kw: f64,
    pub losses_kvar: f64,
    pub sweeps: usize,
}

impl PowerFlowSolution {
    pub fn pcc(&self, t_s: f64) -> PccReading {
        PccReading { p_kw: self.pcc_kw, q_kvar: self.pcc_kvar, t_s }
    }
}

pub fn solve_power_flow(topology: &GridTopology, injections: &[Injection]) -> Result<PowerFlowSolution> {
    let n = topology.n_buses();
    if injections.len() != n {
        return Err(Error::parameter(
            "injections",
            format!("expected {n} bus injections, got {}", injections.len()),
        ));
    }
    let v_base = topology.v_phase;
    let lines = topology.lines();
    // Per-phase complex power in VA.
    let s_phase: Vec<Complex64> = injections
        .iter()
        .map(|i| Complex64::new(i.p_kw, i.q_kvar) * (1000.0 / 3.0))
        .collect();
    let z: Vec<Complex64> = lines.iter().map(|l| Complex64::new(l.r_ohm, l.x_ohm)).collect();

    let mut v = vec![Complex64::new(v_base, 0.0); n];
    let mut bus_current = vec![Complex64::new(0.0, 0.0); n];
    let mut line_current = vec![Complex64::new(0.0, 0.0); lines.len()];
    let mut sweeps = 0;
    let mut mismatch = f64::INFINITY;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        // Backward: accumulate downstream currents into each feeding line.
        for (b, cur) in bus_current.iter_mut().enumerate() {
            *cur = (s_phase[b] / v[b]).conj();
        }
        for &b in topology.order.iter().rev() {
            if let Some(k) = topology.parent_line[b] {
                line_current[k] = bus_current[b];
                let up = topology.line_upstream[k];
                let ib = bus_current[b];
                bus_current[up] += ib;
            }
        }
        // Forward: voltage drops from the slack outwards.
        mismatch = 0.0;
        for &b in topology.order.iter().skip(1) {
            let k = topology.parent_line[b].expect("non-slack bus has a feeding line");
            let up = topology.line_upstream[k];
            let new_v = v[up] - z[k] * line_current[k];
            mismatch = mismatch.max((new_v - v[b]).norm() / v_base);
            v[b] = new_v;
        }
        if mismatch < TOLERANCE_PU {
            break;
        }
    }
    if !(mismatch < TOLERANCE_PU) {
        return Err(Error::NonConvergence { sweeps, mismatch });
    }
    if let Some(b) = (0..n).find(|&b| v[b].norm() / v_base < COLLAPSE_PU) {
        return Err(Error::VoltageCollapse {
            bus: topology.bus_id(b).to_string(),
            magnitude_pu: v[b].norm() / v_base,
        });
    }
    // Final backward pass on converged voltages so currents and losses are
    // consistent with the reported PCC power.
    for (b, cur) in bus_current.iter_mut().enumerate() {
        *cur = (s_phase[b] / v[b]).conj();
    }
    for &b in topology.order.iter().rev() {
        if let Some(k) = topology.parent_line[b] {
            line_current[k] = bus_current[b];
            let up = topology.line_upstream[k];
            let ib = bus_current[b];
            bus_current[up] += ib;
        }
    }
    let slack = topology.slack;
    let s_pcc = v[slack] * bus_current[slack].conj() * 3.0 / 1000.0;
    let losses: Complex64 = line_current
        .iter()
        .zip(&z)
        .map(|(i, z)| z * i.norm_sqr() * 3.0 / 1000.0)
        .sum();
    let residual = balance_residual(injections, s_pcc.re, s_pcc.im, losses.re, losses.im);
    // Non-negative floats order like their bit patterns.
    WORST_BALANCE.fetch_max(residual.to_bits(), Ordering::Relaxed);
    SOLVES.fetch_add(1, Ordering::Relaxed);
    Ok(PowerFlowSolution {
        voltages_pu: v.iter().map(|x| x / v_base).collect(),
        line_currents_a: line_current.iter().map(|i| i.norm()).collect(),
        pcc_kw: s_pcc.re,
        pcc_kvar: s_pcc.im,
        losses_kw: losses.re,
        losses_kvar: losses.im,
        sweeps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineViolation {
    pub line: usize,
    pub line_id: String,
    pub current_a: f64,
    pub limit_a: f64,
    pub loading: f64,
}

pub fn check_line_limits(currents_a: &[f64], topology: &GridTopology) -> Vec<LineViolation> {
    topology
        .lines()
        .iter()
        .zip(currents_a)
        .enumerate()
        .filter(|(_, (l, &i))| i > l.i_max_a)
        .map(|(k, (l, &i))| LineViolation {
            line: k,
            line_id: l.id.clone(),
            current_a: i,
            limit_a: l.i_max_a,
            loading: i / l.i_max_a,
        })
        .collect()
}
