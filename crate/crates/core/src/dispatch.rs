//! Continuous flexibility provision: one Basin Hopping run per dispatch step,
//! each warm-started from the vector accepted in the step before.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::PccReading;
use crate::optimizer::{
    basin_hopping, objective, target_pcc, BasinHoppingConfig, BasinHoppingResult, CostTable, FlexibilityRequest,
    IterationRecord, ObjectiveTerms, Score, EUR_PER_COST_UNIT,
};
use crate::par;
use crate::simulator::{Measurement, PlantKind, PlantSample, ReferenceState, Scenario, Twin};

/// Targets smaller than this are treated as zero when computing shares.
const ZERO_TARGET: f64 = 1e-9;

/// Technology classes used for reporting; V1G and V2G vehicles form one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    Inverter,
    Bes,
    Ehp,
    Bev,
}

impl Technology {
    pub const ALL: [Technology; 4] = [Technology::Inverter, Technology::Bes, Technology::Ehp, Technology::Bev];

    pub fn of(kind: PlantKind) -> Self {
        match kind {
            PlantKind::Inverter => Technology::Inverter,
            PlantKind::Bes => Technology::Bes,
            PlantKind::Ehp => Technology::Ehp,
            PlantKind::BevV1g | PlantKind::BevV2g => Technology::Bev,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Technology::Inverter => "inverter",
            Technology::Bes => "bes",
            Technology::Ehp => "ehp",
            Technology::Bev => "bev",
        }
    }
}

/// Change of active and reactive power per technology class against the
/// reference (kW, kVAr; consumption positive).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TechnologyDeltas {
    pub p: [f64; 4],
    pub q: [f64; 4],
}

/// Flexibility provided per class relative to the requested change. When a
/// target component is zero the matching values are absolute kW or kVAr.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TechnologyShares {
    pub p: [f64; 4],
    pub q: [f64; 4],
    pub p_relative: bool,
    pub q_relative: bool,
}

impl TechnologyShares {
    pub fn p_of(&self, tech: Technology) -> f64 {
        self.p[tech.index()]
    }

    pub fn q_of(&self, tech: Technology) -> f64 {
        self.q[tech.index()]
    }
}

/// Splits the plant deltas into active and reactive parts per class.
pub fn technology_deltas(scenario: &Scenario, plants: &[PlantSample], reference_powers: &[f64]) -> TechnologyDeltas {
    let mut out = TechnologyDeltas::default();
    for ((info, sample), r0) in scenario.plants.iter().zip(plants).zip(reference_powers) {
        let delta = sample.power - r0;
        let t = Technology::of(info.kind).index();
        match info.kind {
            PlantKind::Inverter => out.q[t] += delta,
            PlantKind::Ehp => {
                out.p[t] += delta;
                let q_per_p = scenario.prosumers[info.prosumer]
                    .heat_pump
                    .map(|(hp, _)| hp.q_per_p())
                    .unwrap_or(0.0);
                out.q[t] += delta * q_per_p;
            }
            _ => out.p[t] += delta,
        }
    }
    out
}

/// Shares of the requested flexibility carried by each class.
pub fn technology_shares(deltas: &TechnologyDeltas, request: &FlexibilityRequest) -> TechnologyShares {
    let scale = |target: f64, values: &[f64; 4]| -> ([f64; 4], bool) {
        if target.abs() < ZERO_TARGET {
            (*values, false)
        } else {
            (values.map(|v| v / target), true)
        }
    };
    let (p, p_relative) = scale(request.dp_kw, &deltas.p);
    let (q, q_relative) = scale(request.dq_kvar, &deltas.q);
    TechnologyShares { p, q, p_relative, q_relative }
}

/// Outcome of one dispatch step.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// End of the step, seconds after the reference instant.
    pub t_s: f64,
    pub offsets: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub pcc: PccReading,
    pub target: PccReading,
    pub dp_realized_kw: f64,
    pub dq_realized_kvar: f64,
    pub terms: ObjectiveTerms,
    pub of: f64,
    /// Plant cost only, in EUR.
    pub cost_eur: f64,
    /// Plant cost plus all penalty terms, in EUR.
    pub total_cost_eur: f64,
    pub deltas: TechnologyDeltas,
    pub shares: TechnologyShares,
    pub plants: Vec<PlantSample>,
    pub max_line_loading: f64,
    pub line_violations: usize,
    pub within_bounds: bool,
    /// The PCC penalty still outweighs the plant cost at the end of the step.
    pub tracking_failure: bool,
    pub evaluations: usize,
    pub acceptance_rate: f64,
    pub first_candidate: Vec<f64>,
    pub log: Vec<IterationRecord>,
}

impl StepRecord {
    pub fn p_error_kw(&self) -> f64 {
        self.pcc.p_kw - self.target.p_kw
    }

    pub fn q_error_kvar(&self) -> f64 {
        self.pcc.q_kvar - self.target.q_kvar
    }
}

#[derive(Debug, Clone)]
pub struct DispatchRun {
    pub scenario: Arc<Scenario>,
    pub request: FlexibilityRequest,
    pub config: BasinHoppingConfig,
    pub costs: CostTable,
    pub reference_pcc: PccReading,
    pub records: Vec<StepRecord>,
}

impl DispatchRun {
    pub fn final_of(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.of)
    }

    /// Mean Euclidean distance between realized and target PCC exchange.
    pub fn mean_tracking_error(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.records.iter().map(|r| r.p_error_kw().hypot(r.q_error_kvar())).sum();
        sum / self.records.len() as f64
    }

    pub fn total_cost_eur(&self) -> f64 {
        self.records.iter().map(|r| r.cost_eur).sum()
    }
}

/// Objective of `offsets` for the step starting at `reference`.
pub fn score_offsets(
    twin: &Twin,
    reference: &ReferenceState,
    request: &FlexibilityRequest,
    costs: &CostTable,
    offsets: &[f64],
) -> Result<(ObjectiveTerms, Score, Measurement, crate::simulator::TwinState)> {
    let n_lines = twin.scenario.topology.lines().len();
    let eval = twin.evaluate_dispatch(reference, offsets, twin.scenario.dispatch_step())?;
    let (terms, score) = objective(&eval.measurement, reference, request, costs, n_lines);
    Ok((terms, score, eval.measurement, eval.state))
}

/// Runs Basin Hopping for the step starting at `reference`.
pub fn optimize_step(
    twin: &Twin,
    reference: &ReferenceState,
    request: &FlexibilityRequest,
    costs: &CostTable,
    config: &BasinHoppingConfig,
    x0: &[f64],
) -> BasinHoppingResult {
    let bounds = twin.dispatch_bounds(&reference.snapshot);
    let f = |x: &[f64]| -> Score {
        match score_offsets(twin, reference, request, costs, x) {
            Ok((_, score, _, _)) => score,
            Err(_) => Score { value: f64::INFINITY, feasible: false },
        }
    };
    basin_hopping(&f, x0, &bounds, config)
}

/// Per-step seeds derived from the master seed.
pub fn step_seeds(master: u64, steps: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..steps).map(|_| rng.next_u64()).collect()
}

/// Serves `request` step by step from the warmed-up `reference`. Deltas are
/// always measured against the powers captured in `reference`.
pub fn run_dispatch(
    twin: &Twin,
    reference: &ReferenceState,
    request: &FlexibilityRequest,
    config: &BasinHoppingConfig,
    costs: &CostTable,
) -> Result<DispatchRun> {
    config.validate()?;
    costs.validate()?;
    let n = twin.n_plants();
    if n == 0 {
        return Err(Error::config("prosumers", "the scenario has no controllable plants to dispatch"));
    }
    let dt_step = twin.scenario.dispatch_step();
    let steps = request.steps(dt_step)?;
    if !(request.start_s >= 0.0) {
        return Err(Error::config("request.start_s", "must be >= 0"));
    }
    let mut reference = reference.clone();
    if request.start_s > 0.0 {
        let mut state = reference.snapshot.clone();
        twin.advance(&mut state, &vec![0.0; n], request.start_s)?;
        reference = twin.reference_from(state)?;
    }
    let base = reference.clone();
    let seeds = step_seeds(config.seed, steps);
    let mut previous = vec![0.0; n];
    let mut records = Vec::with_capacity(steps);

    for (step, &seed) in seeds.iter().enumerate() {
        let step_config = BasinHoppingConfig { seed, ..*config };
        let result = optimize_step(twin, &reference, request, costs, &step_config, &previous);
        let bounds = twin.dispatch_bounds(&reference.snapshot);
        let (terms, score, measurement, state) = score_offsets(twin, &reference, request, costs, &result.x)?;
        if let Some(reason) = &measurement.solver_error {
            return Err(Error::DispatchAborted {
                step,
                reason: format!("accepted vector {:?} fails the power flow: {reason}", result.x),
            });
        }
        let within_bounds = result
            .x
            .iter()
            .zip(&bounds)
            .all(|(x, (lo, hi))| *x >= lo - 1e-12 && *x <= hi + 1e-12);
        let deltas = technology_deltas(&twin.scenario, &measurement.plants, &base.reference_powers);
        let target = target_pcc(&base, request);
        records.push(StepRecord {
            step,
            t_s: state.t,
            offsets: result.x.clone(),
            bounds,
            pcc: measurement.pcc,
            target,
            dp_realized_kw: measurement.pcc.p_kw - base.reference_pcc.p_kw,
            dq_realized_kvar: measurement.pcc.q_kvar - base.reference_pcc.q_kvar,
            terms,
            of: score.value,
            cost_eur: terms.plant_cost * EUR_PER_COST_UNIT,
            total_cost_eur: terms.total() * EUR_PER_COST_UNIT,
            deltas,
            shares: technology_shares(&deltas, request),
            plants: measurement.plants.clone(),
            max_line_loading: measurement.max_line_loading,
            line_violations: measurement.violations.len(),
            within_bounds,
            tracking_failure: terms.pcc_p_penalty + terms.pcc_q_penalty > terms.plant_cost,
            evaluations: result.evaluations,
            acceptance_rate: result.acceptance_rate,
            first_candidate: result.first_candidate.clone(),
            log: result.log,
        });
        reference = twin.advance_with(&reference, crate::simulator::Evaluation { state, measurement });
        previous = result.x;
    }

    Ok(DispatchRun {
        scenario: twin.scenario.clone(),
        request: *request,
        config: *config,
        costs: *costs,
        reference_pcc: base.reference_pcc,
        records,
    })
}

/// Optimizes the first dispatch step once per temperature, all from the zero
/// vector and with the same seed.
pub fn sweep_temperature(
    twin: &Twin,
    reference: &ReferenceState,
    request: &FlexibilityRequest,
    config: &BasinHoppingConfig,
    costs: &CostTable,
    temperatures: &[f64],
) -> Result<Vec<(f64, BasinHoppingResult)>> {
    if twin.n_plants() == 0 {
        return Err(Error::config("prosumers", "the scenario has no controllable plants to dispatch"));
    }
    let configs: Vec<BasinHoppingConfig> = temperatures
        .iter()
        .map(|&temperature| BasinHoppingConfig { temperature, ..*config })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let zeros = vec![0.0; twin.n_plants()];
    let results = par::map(config.execution, &configs, |c| optimize_step(twin, reference, request, costs, c, &zeros));
    Ok(temperatures.iter().copied().zip(results).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_follow_the_definition() {
        let req = FlexibilityRequest::new(5.0, 1.0, 15.0);
        let all_bes = TechnologyDeltas { p: [0.0, 5.0, 0.0, 0.0], q: [1.0, 0.0, 0.0, 0.0] };
        let s = technology_shares(&all_bes, &req);
        assert_eq!(s.p_of(Technology::Bes), 1.0);
        assert_eq!(s.p_of(Technology::Bev), 0.0);
        assert_eq!(s.q_of(Technology::Inverter), 1.0);

        let mixed = TechnologyDeltas { p: [0.0, 6.0, 0.0, -1.0], q: [0.0; 4] };
        let s = technology_shares(&mixed, &req);
        assert!((s.p_of(Technology::Bes) - 1.2).abs() < 1e-12);
        assert!((s.p_of(Technology::Bev) + 0.2).abs() < 1e-12);
        assert!(s.p_relative);
    }

    #[test]
    fn zero_target_reports_absolute_values() {
        let req = FlexibilityRequest::new(0.0, 2.0, 15.0);
        let d = TechnologyDeltas { p: [0.0, 0.3, 0.0, 0.0], q: [1.0, 0.0, 0.0, 0.0] };
        let s = technology_shares(&d, &req);
        assert!(!s.p_relative);
        assert_eq!(s.p_of(Technology::Bes), 0.3);
        assert!(s.q_relative);
        assert_eq!(s.q_of(Technology::Inverter), 0.5);
    }

    #[test]
    fn step_seeds_are_reproducible_and_distinct() {
        let a = step_seeds(9, 5);
        assert_eq!(a, step_seeds(9, 5));
        assert_ne!(a, step_seeds(10, 5));
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
    }
}
