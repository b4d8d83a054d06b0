use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metropolis::{adapt_step_size, metropolis_accept, AcceptanceCounters, MetropolisState};
use super::nelder_mead::{clamp_to, nelder_mead, LocalResult, NelderMeadSettings};
use super::objective::Score;
use crate::error::{Error, Result};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinHoppingConfig {
    pub temperature: f64,
    pub n_iter: usize,
    /// Half-width of the uniform random step (kW, kVAr).
    pub initial_step: f64,
    pub target_accept_rate: f64,
    /// Iterations between step-size adjustments.
    pub adjust_interval: usize,
    pub adjust_factor: f64,
    pub seed: u64,
    pub local: NelderMeadSettings,
    pub execution: Execution,
}

impl Default for BasinHoppingConfig {
    fn default() -> Self {
        Self {
            temperature: 0.5,
            n_iter: 50,
            initial_step: 1.0,
            target_accept_rate: 0.5,
            adjust_interval: 10,
            adjust_factor: 0.9,
            seed: 42,
            local: NelderMeadSettings::default(),
            execution: Execution::Parallel,
        }
    }
}

impl BasinHoppingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::config("optimizer.temperature", "must be > 0"));
        }
        if self.n_iter < 1 {
            return Err(Error::config("optimizer.n_iter", "must be >= 1"));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::config("optimizer.initial_step", "must be > 0"));
        }
        if !(self.target_accept_rate > 0.0 && self.target_accept_rate < 1.0) {
            return Err(Error::config("optimizer.target_accept_rate", "must be in (0, 1)"));
        }
        if self.adjust_interval < 1 {
            return Err(Error::config("optimizer.adjust_interval", "must be >= 1"));
        }
        if !(self.adjust_factor > 0.0 && self.adjust_factor < 1.0) {
            return Err(Error::config("optimizer.adjust_factor", "must be in (0, 1)"));
        }
        if self.local.max_evals < 1 {
            return Err(Error::config("optimizer.local.max_evals", "must be >= 1"));
        }
        Ok(())
    }
}

/// One row of the iteration log. Iteration 0 is the local search from the
/// warm start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub local_of: f64,
    pub global_of: f64,
    pub step_size: f64,
    pub accepted: bool,
    pub local_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinHoppingResult {
    pub x: Vec<f64>,
    pub score: Score,
    pub log: Vec<IterationRecord>,
    /// The first point handed to the objective.
    pub first_candidate: Vec<f64>,
    pub evaluations: usize,
    pub acceptance_rate: f64,
    pub final_step: f64,
    pub state: MetropolisState,
}

/// Global minimization by random hops between local Nelder-Mead minima with
/// Metropolis acceptance and adaptive step size.
pub fn basin_hopping<F>(f: &F, x0: &[f64], bounds: &[(f64, f64)], config: &BasinHoppingConfig) -> BasinHoppingResult
where
    F: Fn(&[f64]) -> Score + Sync,
{
    let counter = AtomicUsize::new(0);
    let counted = |x: &[f64]| {
        counter.fetch_add(1, Ordering::Relaxed);
        f(x)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let first_candidate = clamp_to(x0, bounds);
    let free: Vec<usize> = (0..bounds.len()).filter(|&i| bounds[i].1 > bounds[i].0).collect();

    let local = |x: &[f64]| -> LocalResult { nelder_mead(&counted, x, bounds, &config.local, config.execution) };

    let start = local(&first_candidate);
    let mut state = MetropolisState {
        current: start.x.clone(),
        current_value: start.score.value,
        best: start.x.clone(),
        best_value: start.score.value,
        best_feasible: start.score.feasible,
        counters: AcceptanceCounters::default(),
        total: AcceptanceCounters::default(),
    };
    let mut step = config.initial_step;
    let mut log = vec![IterationRecord {
        iteration: 0,
        local_of: start.score.value,
        global_of: state.best_value,
        step_size: step,
        accepted: true,
        local_feasible: start.score.feasible,
    }];

    for iteration in 1..=config.n_iter {
        let mut trial = state.current.clone();
        for &i in &free {
            trial[i] += rng.gen_range(-step..=step);
        }
        let trial = clamp_to(&trial, bounds);
        let candidate = local(&trial);
        let delta = candidate.score.value - state.current_value;
        let accepted = metropolis_accept(delta, config.temperature, &mut rng);
        state.counters.record(accepted);
        state.total.record(accepted);
        if accepted {
            state.current = candidate.x.clone();
            state.current_value = candidate.score.value;
        }
        // Infeasible candidates never become the global best, unless nothing
        // feasible has been seen at all.
        let improves = if candidate.score.feasible {
            !state.best_feasible || candidate.score.value < state.best_value
        } else {
            !state.best_feasible && candidate.score.value < state.best_value
        };
        if improves {
            state.best = candidate.x.clone();
            state.best_value = candidate.score.value;
            state.best_feasible = candidate.score.feasible;
        }
        log.push(IterationRecord {
            iteration,
            local_of: candidate.score.value,
            global_of: state.best_value,
            step_size: step,
            accepted,
            local_feasible: candidate.score.feasible,
        });
        if iteration % config.adjust_interval == 0 {
            step = adapt_step_size(
                &mut state.counters,
                step,
                config.target_accept_rate,
                config.adjust_factor,
            );
        }
    }

    BasinHoppingResult {
        x: state.best.clone(),
        score: Score { value: state.best_value, feasible: state.best_feasible },
        log,
        first_candidate,
        evaluations: counter.load(Ordering::Relaxed),
        acceptance_rate: state.total.rate(),
        final_step: step,
        state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starting_at_the_optimum_stays_there() {
        let f = |x: &[f64]| Score::feasible(x.iter().map(|v| v * v).sum());
        let cfg = BasinHoppingConfig { n_iter: 20, execution: Execution::Sequential, ..Default::default() };
        let r = basin_hopping(&f, &[0.0; 3], &[(-5.0, 5.0); 3], &cfg);
        assert_eq!(r.score.value, 0.0);
        assert_eq!(r.x, vec![0.0; 3]);
        for w in r.log.windows(2) {
            assert!(w[1].local_of - r.log[0].local_of >= 0.0);
        }
    }

    #[test]
    fn finds_the_deeper_basin() {
        let f = |x: &[f64]| Score::feasible(((x[0] + 2.0).powi(2)).min((x[0] - 2.0).powi(2) + 0.1));
        for seed in 0..5 {
            let cfg = BasinHoppingConfig {
                n_iter: 50,
                initial_step: 3.0,
                seed,
                execution: Execution::Sequential,
                ..Default::default()
            };
            let r = basin_hopping(&f, &[2.0], &[(-10.0, 10.0)], &cfg);
            assert!((r.x[0] + 2.0).abs() < 1e-3, "seed {seed}: {:?}", r.x);
            assert!(r.score.value < 1e-6);
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let f = |x: &[f64]| Score::feasible((x[0] * 3.0).sin() + 0.1 * x[0] * x[0] + (x[1] - 1.0).powi(2));
        let cfg = BasinHoppingConfig { n_iter: 30, seed: 7, ..Default::default() };
        let a = basin_hopping(&f, &[4.0, 0.0], &[(-8.0, 8.0); 2], &cfg);
        let b = basin_hopping(&f, &[4.0, 0.0], &[(-8.0, 8.0); 2], &cfg);
        assert_eq!(a.log, b.log);
        assert_eq!(a.x, b.x);
        for w in a.log.windows(2) {
            assert!(w[1].global_of <= w[0].global_of);
        }
        assert_eq!(a.first_candidate, vec![4.0, 0.0]);
    }

    #[test]
    fn infeasible_candidates_never_become_best() {
        // A deep but infeasible well left of -3.
        let f = |x: &[f64]| {
            if x[0] < -3.0 {
                Score { value: -10.0, feasible: false }
            } else {
                Score::feasible(x[0].abs())
            }
        };
        let cfg = BasinHoppingConfig {
            n_iter: 30,
            initial_step: 4.0,
            seed: 3,
            execution: Execution::Sequential,
            ..Default::default()
        };
        let r = basin_hopping(&f, &[1.0], &[(-8.0, 8.0)], &cfg);
        assert!(r.log.iter().any(|rec| !rec.local_feasible));
        assert!(r.score.feasible);
        assert!(r.x[0] >= -3.0);
        assert!(r.log.iter().all(|rec| rec.global_of >= 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(BasinHoppingConfig::default().validate().is_ok());
        let bad = BasinHoppingConfig { temperature: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = BasinHoppingConfig { target_accept_rate: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
