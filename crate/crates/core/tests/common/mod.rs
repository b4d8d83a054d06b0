//! Helpers shared by the integration tests: an independent Gauss-Seidel
//! power flow and scenario loaders.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;

use flexcell::network::{Bus, GridTopology, Injection, Line, TopologySpec};
use flexcell::simulator::{ReferenceState, Scenario, Twin};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn load(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).expect("bundled scenario loads")
}

/// Twin of a bundled scenario after its configured warm-up.
pub fn warmed(name: &str) -> (Twin, ReferenceState) {
    let scenario = load(name);
    let warmup = scenario.file.simulation.warmup_s;
    let twin = Twin::new(scenario);
    let reference = twin.run_warmup(warmup).expect("warm-up succeeds");
    (twin, reference)
}

/// Radial feeder on `n` buses where bus k > 0 hangs off a random earlier bus.
pub fn random_radial<R: Rng>(rng: &mut R, n: usize) -> TopologySpec {
    let buses = (0..n).map(|i| Bus { id: format!("n{i}"), nominal_voltage_v: 400.0 }).collect();
    let lines = (1..n)
        .map(|k| Line {
            id: format!("e{k}"),
            from_bus: format!("n{}", rng.gen_range(0..k)),
            to_bus: format!("n{k}"),
            r_ohm: rng.gen_range(0.01..0.12),
            x_ohm: rng.gen_range(0.005..0.06),
            i_max_a: 270.0,
        })
        .collect();
    TopologySpec { pcc_bus: "n0".into(), transformer_kva: 160.0, buses, lines }
}

pub fn random_injections<R: Rng>(rng: &mut R, n: usize) -> Vec<Injection> {
    let mut inj: Vec<Injection> = (0..n)
        .map(|_| Injection { p_kw: rng.gen_range(-15.0..25.0), q_kvar: rng.gen_range(-6.0..6.0) })
        .collect();
    inj[0] = Injection::default();
    inj
}

/// Per-unit bus voltages by nodal Gauss-Seidel iteration on the admittance
/// matrix. Bus 0 of the spec must be the slack.
pub fn gauss_seidel(spec: &TopologySpec, injections: &[Injection]) -> Vec<Complex64> {
    let n = spec.buses.len();
    let v_base = spec.buses[0].nominal_voltage_v / 3f64.sqrt();
    let index = |id: &str| spec.buses.iter().position(|b| b.id == id).unwrap();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for l in &spec.lines {
        let (a, b) = (index(&l.from_bus), index(&l.to_bus));
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(l.r_ohm, l.x_ohm);
        y[a][a] += ys;
        y[b][b] += ys;
        y[a][b] -= ys;
        y[b][a] -= ys;
    }
    // Generation convention, per phase, VA.
    let s: Vec<Complex64> = injections.iter().map(|i| -Complex64::new(i.p_kw, i.q_kvar) * (1000.0 / 3.0)).collect();
    let mut v = vec![Complex64::new(v_base, 0.0); n];
    for _ in 0..200_000 {
        let mut change: f64 = 0.0;
        for i in 1..n {
            let mut sum = (s[i] / v[i]).conj();
            for j in 0..n {
                if j != i {
                    sum -= y[i][j] * v[j];
                }
            }
            let new = sum / y[i][i];
            change = change.max((new - v[i]).norm());
            v[i] = new;
        }
        if change / v_base < 1e-13 {
            break;
        }
    }
    v.iter().map(|x| x / v_base).collect()
}

pub fn topology(spec: TopologySpec) -> GridTopology {
    GridTopology::new(spec).expect("valid random feeder")
}
