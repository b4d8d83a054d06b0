//! Linear transfer-function blocks and the PID controller used by the device
//! models. All blocks advance on a fixed step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One explicit classical Runge-Kutta step of `x' = f(x)` with the inputs
/// held constant over the step.
pub fn rk4<const N: usize>(x: [f64; N], dt: f64, f: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let add = |a: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        let mut out = *a;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = f(&x);
    let k2 = f(&add(&x, &k1, 0.5 * dt));
    let k3 = f(&add(&x, &k2, 0.5 * dt));
    let k4 = f(&add(&x, &k3, dt));
    let mut out = x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// `y' = (c·u − y) / T`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderBlock {
    pub gain: f64,
    pub time_constant: f64,
    pub y: f64,
}

impl FirstOrderBlock {
    pub fn new(gain: f64, time_constant: f64, y0: f64) -> Result<Self> {
        if !(time_constant > 0.0) {
            return Err(Error::parameter("time_constant", format!("must be > 0, got {time_constant}")));
        }
        Ok(Self { gain, time_constant, y: y0 })
    }

    /// Largest step accepted by [`FirstOrderBlock::step`].
    pub fn max_step(&self) -> f64 {
        self.time_constant / 5.0
    }

    pub fn check_step(&self, dt: f64) -> Result<()> {
        if !(self.time_constant > 0.0) {
            return Err(Error::parameter("time_constant", format!("must be > 0, got {}", self.time_constant)));
        }
        if !(dt > 0.0) {
            return Err(Error::parameter("dt", format!("must be > 0, got {dt}")));
        }
        if dt > self.max_step() * (1.0 + 1e-12) {
            return Err(Error::parameter(
                "dt",
                format!("{dt} s exceeds T/5 = {} s", self.max_step()),
            ));
        }
        Ok(())
    }

    /// Time derivative for input `u` at output `y`.
    #[inline]
    pub fn derivative(&self, u: f64, y: f64) -> f64 {
        (self.gain * u - y) / self.time_constant
    }

    pub fn step(&mut self, u: f64, dt: f64) -> Result<f64> {
        self.check_step(dt)?;
        let [y] = rk4([self.y], dt, |s| [self.derivative(u, s[0])]);
        self.y = y;
        Ok(y)
    }
}

/// `y'' = ω²(k·u − y) − 2ζω·y'`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderBlock {
    pub gain: f64,
    pub natural_frequency: f64,
    pub damping: f64,
    pub y: f64,
    pub dy: f64,
}

impl SecondOrderBlock {
    pub fn new(gain: f64, natural_frequency: f64, damping: f64) -> Result<Self> {
        if !(natural_frequency > 0.0) {
            return Err(Error::parameter("natural_frequency", "must be > 0"));
        }
        if !(damping >= 0.0) {
            return Err(Error::parameter("damping", "must be >= 0"));
        }
        Ok(Self { gain, natural_frequency, damping, y: 0.0, dy: 0.0 })
    }

    pub fn step(&mut self, u: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::parameter("dt", "must be > 0"));
        }
        let (w, z, k) = (self.natural_frequency, self.damping, self.gain);
        let [y, dy] = rk4([self.y, self.dy], dt, |s| {
            [s[1], w * w * (k * u - s[0]) - 2.0 * z * w * s[1]]
        });
        self.y = y;
        self.dy = dy;
        Ok(y)
    }
}

/// Pure dead time on a fixed grid: the output is the input from
/// `round(dead_time / dt)` steps earlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayBlock {
    pub dead_time: f64,
    pub dt: f64,
    buffer: Vec<f64>,
    head: usize,
}

impl DelayBlock {
    pub fn new(dead_time: f64, dt: f64, initial: f64) -> Result<Self> {
        if !(dead_time >= 0.0) {
            return Err(Error::parameter("dead_time", "must be >= 0"));
        }
        if !(dt > 0.0) {
            return Err(Error::parameter("dt", "must be > 0"));
        }
        let len = (dead_time / dt - 1e-9).ceil().max(0.0) as usize;
        Ok(Self { dead_time, dt, buffer: vec![initial; len], head: 0 })
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn step(&mut self, u: f64) -> f64 {
        if self.buffer.is_empty() {
            return u;
        }
        let out = std::mem::replace(&mut self.buffer[self.head], u);
        self.head = (self.head + 1) % self.buffer.len();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self { kp: 1.0, ki: 0.1, kd: 0.0 }
    }
}

/// PID controller with output clamping and conditional-integration
/// anti-windup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidController {
    pub gains: PidGains,
    pub lo: f64,
    pub hi: f64,
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub output: f64,
}

impl PidController {
    pub fn new(gains: PidGains, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::parameter("output limits", format!("lo {lo} > hi {hi}")));
        }
        Ok(Self { gains, lo, hi, integral: 0.0, prev_error: None, output: lo.max(0.0).min(hi) })
    }

    pub fn step(&mut self, error: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::parameter("dt", "must be > 0"));
        }
        Ok(self.step_unchecked(error, dt))
    }

    pub(crate) fn step_unchecked(&mut self, error: f64, dt: f64) -> f64 {
        let PidGains { kp, ki, kd } = self.gains;
        let derivative = match self.prev_error {
            Some(prev) => (error - prev) / dt,
            None => 0.0,
        };
        self.prev_error = Some(error);
        let candidate_integral = self.integral + error * dt;
        let unclamped = kp * error + ki * candidate_integral + kd * derivative;
        let out = unclamped.clamp(self.lo, self.hi);
        // Only integrate when the output is not saturated.
        if out == unclamped {
            self.integral = candidate_integral;
        }
        self.output = out;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_matches_analytic_step_response() {
        let mut b = FirstOrderBlock::new(1.0, 10.0, 0.0).unwrap();
        for _ in 0..100 {
            b.step(1.0, 0.1).unwrap();
        }
        let exact = 1.0 - (-1.0f64).exp();
        assert!((b.y - exact).abs() < 1e-9, "{} vs {exact}", b.y);
    }

    #[test]
    fn first_order_zero_equilibrium_and_steady_state() {
        let mut b = FirstOrderBlock::new(3.0, 0.5, 0.0).unwrap();
        for _ in 0..1000 {
            b.step(0.0, 0.1).unwrap();
        }
        assert_eq!(b.y, 0.0);

        let mut b = FirstOrderBlock::new(2.0, 5.0, 0.0).unwrap();
        for _ in 0..10_000 {
            b.step(3.0, 1.0).unwrap();
        }
        assert!((b.y - 6.0).abs() < 1e-9);
    }

    #[test]
    fn first_order_rejects_bad_parameters() {
        assert!(FirstOrderBlock::new(1.0, 0.0, 0.0).is_err());
        assert!(FirstOrderBlock::new(1.0, -1.0, 0.0).is_err());
        let mut b = FirstOrderBlock::new(1.0, 1.0, 0.0).unwrap();
        assert!(b.step(1.0, 0.0).is_err());
        assert!(b.step(1.0, -0.1).is_err());
        assert!(b.step(1.0, 0.5).is_err());
        assert!(b.step(1.0, 0.2).is_ok());
    }

    #[test]
    fn first_order_converges_monotonically() {
        let mut b = FirstOrderBlock::new(1.5, 2.0, -1.0).unwrap();
        let mut prev = b.y;
        for _ in 0..500 {
            let y = b.step(2.0, 0.1).unwrap();
            assert!(y >= prev && y <= 3.0);
            prev = y;
        }
    }

    #[test]
    fn second_order_settles_at_gain_times_input() {
        let mut b = SecondOrderBlock::new(2.0, 1.0, 0.7).unwrap();
        for _ in 0..5000 {
            b.step(1.5, 0.01).unwrap();
        }
        assert!((b.y - 3.0).abs() < 1e-6);
        assert!(SecondOrderBlock::new(1.0, 0.0, 0.5).is_err());
        assert!(SecondOrderBlock::new(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn delay_is_exact_on_grid() {
        let mut d = DelayBlock::new(0.3, 0.1, 0.0).unwrap();
        assert_eq!(d.len(), 3);
        let inputs: Vec<f64> = (1..=10).map(f64::from).collect();
        let outputs: Vec<f64> = inputs.iter().map(|&u| d.step(u)).collect();
        assert_eq!(&outputs[..3], &[0.0, 0.0, 0.0]);
        assert_eq!(&outputs[3..], &inputs[..7]);

        let mut none = DelayBlock::new(0.0, 0.1, 0.0).unwrap();
        assert_eq!(none.step(4.0), 4.0);
    }

    #[test]
    fn pid_examples() {
        let mut p = PidController::new(PidGains { kp: 1.0, ki: 0.0, kd: 0.0 }, -10.0, 10.0).unwrap();
        assert_eq!(p.step(0.5, 0.1).unwrap(), 0.5);

        let mut p = PidController::new(PidGains { kp: 2.0, ki: 0.3, kd: 0.1 }, -10.0, 10.0).unwrap();
        for _ in 0..10 {
            assert_eq!(p.step(0.0, 0.1).unwrap(), 0.0);
        }

        let mut p = PidController::new(PidGains { kp: 10.0, ki: 1.0, kd: 0.0 }, 0.0, 1.0).unwrap();
        assert_eq!(p.step(5.0, 0.1).unwrap(), 1.0);
        assert_eq!(p.integral, 0.0);
        assert!(p.step(1.0, 0.0).is_err());
    }
}
