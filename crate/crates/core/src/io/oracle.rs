//! Exhaustive grid search over the dispatch box of a small scenario, used to
//! check the optimizer on problems where the optimum can be enumerated.

use serde::Serialize;

use crate::dispatch::score_offsets;
use crate::error::{Error, Result};
use crate::optimizer::{CostTable, FlexibilityRequest, ObjectiveTerms, Score};
use crate::par::{self, Execution};
use crate::simulator::{ReferenceState, Twin};

pub const MAX_ORACLE_PLANTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub x: Vec<f64>,
    pub score: Score,
    pub terms: ObjectiveTerms,
    pub evaluations: usize,
}

/// Grid points of one axis: multiples of `resolution` inside the range plus
/// both end points.
pub fn axis_points(lo: f64, hi: f64, resolution: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let first = (lo / resolution).ceil() as i64;
    let last = (hi / resolution).floor() as i64;
    let mut pts = vec![lo];
    pts.extend((first..=last).map(|k| k as f64 * resolution).filter(|&v| v > lo && v < hi));
    pts.push(hi);
    pts
}

/// Evaluates every grid point of the first dispatch step through the same
/// twin and objective the optimizer uses and returns the best one.
pub fn run_oracle(
    twin: &Twin,
    reference: &ReferenceState,
    request: &FlexibilityRequest,
    costs: &CostTable,
    resolution: f64,
    exec: Execution,
) -> Result<OracleResult> {
    let n = twin.n_plants();
    if n > MAX_ORACLE_PLANTS {
        return Err(Error::config(
            "prosumers",
            format!("the oracle enumerates at most {MAX_ORACLE_PLANTS} plants, the scenario has {n}"),
        ));
    }
    if !(resolution > 0.0) {
        return Err(Error::parameter("resolution", "must be > 0"));
    }
    let axes: Vec<Vec<f64>> = twin
        .dispatch_bounds(&reference.snapshot)
        .iter()
        .map(|&(lo, hi)| axis_points(lo, hi, resolution))
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let point = |mut k: usize| -> Vec<f64> {
        axes.iter()
            .map(|axis| {
                let v = axis[k % axis.len()];
                k /= axis.len();
                v
            })
            .collect()
    };
    let scored = par::map_range(exec, total, |k| {
        let x = point(k);
        score_offsets(twin, reference, request, costs, &x).map(|(terms, score, _, _)| (terms, score))
    });
    let mut best: Option<(usize, ObjectiveTerms, Score)> = None;
    for (k, r) in scored.into_iter().enumerate() {
        let (terms, score) = r?;
        let better = match &best {
            None => true,
            Some((_, _, b)) => (score.feasible && !b.feasible) || (score.feasible == b.feasible && score.value < b.value),
        };
        if better {
            best = Some((k, terms, score));
        }
    }
    let (k, terms, score) = best.expect("the grid has at least one point");
    Ok(OracleResult { x: point(k), score, terms, evaluations: total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_includes_zero_and_end_points() {
        let a = axis_points(-0.12, 0.1, 0.05);
        assert_eq!(a.len(), 6);
        assert_eq!(a[0], -0.12);
        assert_eq!(*a.last().unwrap(), 0.1);
        assert!(a.contains(&0.0));
        assert_eq!(axis_points(2.0, 2.0, 0.05), vec![2.0]);
    }
}
