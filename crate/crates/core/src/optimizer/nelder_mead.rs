//! Downhill simplex with box bounds applied at evaluation time: the simplex
//! may leave the box, the objective only ever sees clamped points.

use serde::{Deserialize, Serialize};

use super::objective::Score;
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelderMeadSettings {
    pub max_evals: usize,
    /// Simplex size (max coordinate distance to the best vertex).
    pub xtol: f64,
    /// Spread of objective values across the simplex.
    pub ftol: f64,
    /// Edge length of the initial simplex.
    pub initial_simplex: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadSettings {
    fn default() -> Self {
        Self {
            max_evals: 200,
            xtol: 1e-4,
            ftol: 1e-8,
            initial_simplex: 0.25,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalResult {
    /// Best point, already clamped to the bounds.
    pub x: Vec<f64>,
    pub score: Score,
    pub evals: usize,
    pub converged: bool,
    /// Stopped on the evaluation budget rather than on tolerance.
    pub budget_exhausted: bool,
}

pub fn clamp_to(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect()
}

struct Vertex {
    x: Vec<f64>,
    score: Score,
}

/// Minimizes `f` from `x0` within `bounds`. Dimensions with an empty range
/// are held at their bound. The first evaluation is always `x0` (clamped).
pub fn nelder_mead<F>(f: &F, x0: &[f64], bounds: &[(f64, f64)], settings: &NelderMeadSettings, exec: Execution) -> LocalResult
where
    F: Fn(&[f64]) -> Score + Sync,
{
    assert_eq!(x0.len(), bounds.len(), "x0 and bounds differ in length");
    let start = clamp_to(x0, bounds);
    let free: Vec<usize> = (0..start.len()).filter(|&i| bounds[i].1 > bounds[i].0).collect();
    let n = free.len();
    let embed = |z: &[f64]| -> Vec<f64> {
        let mut x = start.clone();
        for (k, &i) in free.iter().enumerate() {
            x[i] = z[k].clamp(bounds[i].0, bounds[i].1);
        }
        x
    };
    let eval = |z: &[f64]| -> Score { f(&embed(z)) };

    let z0: Vec<f64> = free.iter().map(|&i| start[i]).collect();
    let s0 = eval(&z0);
    let mut evals = 1;
    if n == 0 {
        return LocalResult { x: start, score: s0, evals, converged: true, budget_exhausted: false };
    }

    // Initial simplex: step along each free axis, towards the interior.
    let h = settings.initial_simplex;
    let points: Vec<Vec<f64>> = free
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let (lo, hi) = bounds[i];
            let mut z = z0.clone();
            let up = z0[k] + h;
            let down = z0[k] - h;
            z[k] = if up <= hi {
                up
            } else if down >= lo {
                down
            } else if hi - z0[k] >= z0[k] - lo {
                hi
            } else {
                lo
            };
            z
        })
        .collect();
    let scores = par::map(exec, &points, |z| eval(z));
    evals += n;
    let mut simplex: Vec<Vertex> = std::iter::once(Vertex { x: z0, score: s0 })
        .chain(points.into_iter().zip(scores).map(|(x, score)| Vertex { x, score }))
        .collect();

    let (alpha, gamma, rho, sigma) = (settings.reflection, settings.expansion, settings.contraction, settings.shrink);
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.score.value.total_cmp(&b.score.value));
        let best = &simplex[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = simplex[1..]
            .iter()
            .map(|v| (v.score.value - best.score.value).abs())
            .fold(0.0, f64::max);
        if size <= settings.xtol && spread <= settings.ftol {
            converged = true;
            break;
        }
        if evals >= settings.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(&v.x) {
                *c += x / n as f64;
            }
        }
        let worst = &simplex[n];
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.x).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(alpha);
        let sr = eval(&xr);
        evals += 1;
        let f_best = simplex[0].score.value;
        let f_second = simplex[n - 1].score.value;
        let f_worst = simplex[n].score.value;

        if sr.value < f_best {
            let xe = along(alpha * gamma);
            let se = eval(&xe);
            evals += 1;
            simplex[n] = if se.value < sr.value { Vertex { x: xe, score: se } } else { Vertex { x: xr, score: sr } };
            continue;
        }
        if sr.value < f_second {
            simplex[n] = Vertex { x: xr, score: sr };
            continue;
        }
        let (xc, sc) = if sr.value < f_worst {
            let xc = along(alpha * rho);
            let sc = eval(&xc);
            (xc, sc)
        } else {
            let xc = along(-rho);
            let sc = eval(&xc);
            (xc, sc)
        };
        evals += 1;
        let threshold = if sr.value < f_worst { sr.value } else { f_worst };
        if sc.value <= threshold {
            simplex[n] = Vertex { x: xc, score: sc };
            continue;
        }
        // Shrink towards the best vertex.
        let best_x = simplex[0].x.clone();
        let shrunk: Vec<Vec<f64>> = simplex[1..]
            .iter()
            .map(|v| best_x.iter().zip(&v.x).map(|(b, x)| b + sigma * (x - b)).collect())
            .collect();
        let scores = par::map(exec, &shrunk, |z| eval(z));
        evals += n;
        for (slot, (x, score)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(scores)) {
            *slot = Vertex { x, score };
        }
    }
    simplex.sort_by(|a, b| a.score.value.total_cmp(&b.score.value));
    let best = &simplex[0];
    LocalResult {
        x: embed(&best.x),
        score: best.score,
        evals,
        converged,
        budget_exhausted: !converged,
    }
}
