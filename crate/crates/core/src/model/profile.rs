use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DAY: f64 = 86_400.0;

/// Wall-clock position of the simulation. Simulation time `t` is measured in
/// seconds relative to the flexibility request (negative during warm-up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    /// Seconds after midnight of the request day at `t = 0`.
    pub start_second_of_day: f64,
    /// Weekday of the request day, Monday = 0.
    pub start_weekday: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instant {
    /// Seconds since midnight of the request day (may be negative).
    pub absolute: f64,
    pub second_of_day: f64,
    /// Day index relative to the request day.
    pub day: i64,
    pub weekday: u32,
}

impl Clock {
    pub fn at(&self, t: f64) -> Instant {
        let absolute = self.start_second_of_day + t;
        let day = (absolute / DAY).floor();
        let second_of_day = absolute - day * DAY;
        let weekday = (self.start_weekday as i64 + day as i64).rem_euclid(7) as u32;
        Instant { absolute, second_of_day, day: day as i64, weekday }
    }
}

/// Uniformly sampled time series, linearly interpolated. The first sample is
/// at `origin_s` seconds after midnight of the request day. A repeating
/// profile wraps with period `step_s · values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub step_s: f64,
    #[serde(default)]
    pub origin_s: f64,
    #[serde(default)]
    pub repeat: bool,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Self { step_s: DAY, origin_s: 0.0, repeat: true, values: vec![value] }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if !(self.step_s > 0.0) {
            return Err(Error::config(format!("{path}.step_s"), "must be > 0"));
        }
        if self.values.is_empty() {
            return Err(Error::config(format!("{path}.values"), "must not be empty"));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("{path}.values[{i}]"), "must be finite"));
        }
        Ok(())
    }

    /// Checks that the profile covers `[from, to]` (absolute seconds).
    pub fn check_coverage(&self, path: &str, from: f64, to: f64) -> Result<()> {
        if self.repeat {
            return Ok(());
        }
        let end = self.origin_s + self.step_s * (self.values.len() - 1) as f64;
        if from < self.origin_s - 1e-9 || to > end + 1e-9 {
            return Err(Error::config(
                path.to_string(),
                format!(
                    "profile covers [{}, {}] s but the run needs [{from}, {to}] s",
                    self.origin_s, end
                ),
            ));
        }
        Ok(())
    }

    /// Value at absolute time `t` (seconds after midnight of the request day).
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let pos = (t - self.origin_s) / self.step_s;
        if self.repeat {
            let pos = pos.rem_euclid(n as f64);
            let i = (pos.floor() as usize).min(n - 1);
            let frac = pos - i as f64;
            let a = self.values[i];
            let b = self.values[(i + 1) % n];
            a + (b - a) * frac
        } else {
            if pos <= 0.0 {
                return self.values[0];
            }
            if pos >= (n - 1) as f64 {
                return self.values[n - 1];
            }
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            self.values[i] + (self.values[i + 1] - self.values[i]) * frac
        }
    }
}
