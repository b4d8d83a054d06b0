use rand::Rng;
use serde::Serialize;

/// Metropolis acceptance of a move that changes the objective by `delta`.
/// A uniform variate is drawn only when `delta > 0`.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    let p = acceptance_probability(delta, temperature);
    rng.gen::<f64>() < p
}

pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / temperature).exp()
    }
}

/// Acceptance tally since the last step-size adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct AcceptanceCounters {
    pub trials: usize,
    pub accepted: usize,
}

impl AcceptanceCounters {
    pub fn record(&mut self, accepted: bool) {
        self.trials += 1;
        self.accepted += accepted as usize;
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.accepted as f64 / self.trials as f64
        }
    }
}

/// Chain state of the Basin Hopping walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetropolisState {
    pub current: Vec<f64>,
    pub current_value: f64,
    pub best: Vec<f64>,
    pub best_value: f64,
    pub best_feasible: bool,
    pub counters: AcceptanceCounters,
    pub total: AcceptanceCounters,
}

/// Step-size rule aiming at `target` acceptance: widen the step when too
/// many moves are accepted, narrow it when too few. `factor` < 1.
pub fn adapt_step_size(counters: &mut AcceptanceCounters, step: f64, target: f64, factor: f64) -> f64 {
    let rate = counters.rate();
    *counters = AcceptanceCounters::default();
    if rate > target {
        step / factor
    } else if rate < target {
        step * factor
    } else {
        step
    }
}
