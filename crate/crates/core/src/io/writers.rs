//! CSV and JSON result files. Numbers are written with nine significant
//! digits in plain decimal notation so output is byte-stable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::dispatch::{DispatchRun, Technology};
use crate::error::{Error, Result};
use crate::optimizer::IterationRecord;
use crate::simulator::{Scenario, SimulationTrace};

const SIGNIFICANT: i32 = 9;

/// Formats `x` with nine significant digits, without exponent.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT - 1 - magnitude).clamp(0, 40) as usize;
    let s = format!("{x:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let to_err = |e: csv::Error| Error::Serialization(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn dispatch_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "t_s",
        "p_pcc_kw",
        "q_pcc_kvar",
        "dp_target_kw",
        "dq_target_kvar",
        "dp_realized_kw",
        "dq_realized_kvar",
    ]
    .map(String::from)
    .to_vec();
    for t in Technology::ALL {
        h.push(format!("share_p_{}", t.label()));
    }
    for t in Technology::ALL {
        h.push(format!("share_q_{}", t.label()));
    }
    h.extend(["shares_relative", "cost_eur", "total_cost_eur", "of", "tracking_failure"].map(String::from));
    h
}

/// One row per dispatch step.
pub fn write_dispatch_csv(run: &DispatchRun, path: &Path) -> Result<()> {
    let rows = run
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                format_number(r.t_s),
                format_number(r.pcc.p_kw),
                format_number(r.pcc.q_kvar),
                format_number(run.request.dp_kw),
                format_number(run.request.dq_kvar),
                format_number(r.dp_realized_kw),
                format_number(r.dq_realized_kvar),
            ];
            row.extend(r.shares.p.iter().map(|v| format_number(*v)));
            row.extend(r.shares.q.iter().map(|v| format_number(*v)));
            row.push(flag(r.shares.p_relative && r.shares.q_relative).into());
            row.push(format_number(r.cost_eur));
            row.push(format_number(r.total_cost_eur));
            row.push(format_number(r.of));
            row.push(flag(r.tracking_failure).into());
            row
        })
        .collect();
    write_csv(path, dispatch_header(), rows)
}

/// Accepted dispatch vector per step, one column per plant.
pub fn write_vectors_csv(run: &DispatchRun, path: &Path) -> Result<()> {
    let mut header = vec!["t_s".to_string()];
    header.extend(run.scenario.plants.iter().map(|p| p.id.clone()));
    let rows = run
        .records
        .iter()
        .map(|r| std::iter::once(format_number(r.t_s)).chain(r.offsets.iter().map(|v| format_number(*v))).collect())
        .collect();
    write_csv(path, header, rows)
}

pub fn iteration_log_header() -> Vec<String> {
    ["iteration", "local_of", "global_of", "step_size", "accepted", "local_feasible"]
        .map(String::from)
        .to_vec()
}

pub fn write_iteration_log_csv(log: &[IterationRecord], path: &Path) -> Result<()> {
    let rows = log
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                format_number(r.local_of),
                format_number(r.global_of),
                format_number(r.step_size),
                flag(r.accepted).into(),
                flag(r.local_feasible).into(),
            ]
        })
        .collect();
    write_csv(path, iteration_log_header(), rows)
}

pub fn trace_header(scenario: &Scenario) -> Vec<String> {
    let mut h: Vec<String> = ["t_s", "p_pcc_kw", "q_pcc_kvar", "losses_kw", "max_line_loading", "violations"]
        .map(String::from)
        .to_vec();
    for p in &scenario.plants {
        h.push(format!("{}_power", p.id));
        h.push(format!("{}_state", p.id));
    }
    h
}

pub fn write_trace_csv(scenario: &Scenario, trace: &SimulationTrace, path: &Path) -> Result<()> {
    let rows = trace
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                format_number(r.t_s),
                format_number(r.pcc.p_kw),
                format_number(r.pcc.q_kvar),
                format_number(r.losses_kw),
                format_number(r.max_line_loading),
                r.violations.to_string(),
            ];
            for s in &r.plants {
                row.push(format_number(s.power));
                row.push(format_number(s.state));
            }
            row
        })
        .collect();
    write_csv(path, trace_header(scenario), rows)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub seed: u64,
    pub dp_kw: f64,
    pub dq_kvar: f64,
    pub final_of: f64,
    pub mean_tracking_error: f64,
    pub total_cost_eur: f64,
    pub tracking_failures: usize,
}

impl RunSummary {
    pub fn of_run(run: &DispatchRun) -> Self {
        Self {
            steps: run.records.len(),
            seed: run.config.seed,
            dp_kw: run.request.dp_kw,
            dq_kvar: run.request.dq_kvar,
            final_of: run.final_of(),
            mean_tracking_error: run.mean_tracking_error(),
            total_cost_eur: run.total_cost_eur(),
            tracking_failures: run.records.iter().filter(|r| r.tracking_failure).count(),
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Serialization(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0), "1.00000000");
        assert_eq!(format_number(-5.123456789123), "-5.12345679");
        assert_eq!(format_number(12345.6789012), "12345.6789");
        assert_eq!(format_number(0.00123456789123), "0.00123456789");
        assert_eq!(format_number(1.5e12), "1500000000000");
        assert_eq!(format_number(-1e-30), "-0.00000000000000000000000000000100000000");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn golden_headers() {
        assert_eq!(
            dispatch_header().join(","),
            "t_s,p_pcc_kw,q_pcc_kvar,dp_target_kw,dq_target_kvar,dp_realized_kw,dq_realized_kvar,\
             share_p_inverter,share_p_bes,share_p_ehp,share_p_bev,\
             share_q_inverter,share_q_bes,share_q_ehp,share_q_bev,\
             shares_relative,cost_eur,total_cost_eur,of,tracking_failure"
        );
        assert_eq!(
            iteration_log_header().join(","),
            "iteration,local_of,global_of,step_size,accepted,local_feasible"
        );
    }

    #[test]
    fn iteration_log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/log.csv");
        let log = [IterationRecord {
            iteration: 0,
            local_of: 0.25,
            global_of: 0.25,
            step_size: 1.0,
            accepted: true,
            local_feasible: true,
        }];
        write_iteration_log_csv(&log, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "iteration,local_of,global_of,step_size,accepted,local_feasible\n0,0.250000000,0.250000000,1.00000000,1,1\n"
        );
    }
}
