//! Simultaneous-perturbation stochastic approximation with standard
//! power-law gain schedules and two evaluations per step.

use alloc::{format, string::String, vec::Vec};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, ChaCha8Rng};

/// Step length aimed for on the first iteration when the gain `a` is
/// calibrated automatically.
pub const FIRST_STEP_TARGET: f64 = 0.1;

/// Gain schedules and run length. `a_k = a / (A + k)^alpha` scales the
/// update, `c_k = c / k^gamma` the perturbation; `a = None` calibrates the
/// update gain from one gradient probe, `big_a = None` uses a tenth of the
/// iteration budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub a: Option<f64>,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub big_a: Option<f64>,
    pub max_iters: u32,
    pub record_every: u32,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: None,
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            big_a: None,
            max_iters: 100,
            record_every: 1,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.a {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::input(format!(
                    "update gain must be finite and nonnegative, got {a}"
                )));
            }
        }
        if !self.c.is_finite() || self.c <= 0.0 {
            return Err(Error::input(format!(
                "perturbation size must be positive, got {}",
                self.c
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::input("alpha must be positive"));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::input("gamma must be positive"));
        }
        if let Some(big_a) = self.big_a {
            if !big_a.is_finite() || big_a < 0.0 {
                return Err(Error::input("stability offset must be nonnegative"));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::input("iteration budget must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::input("record cadence must be positive"));
        }
        Ok(())
    }

    fn stability_offset(&self) -> f64 {
        self.big_a.unwrap_or(0.1 * self.max_iters as f64)
    }
}

/// Loss evaluated at the current iterate, captured on the recording grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpsaRecord {
    pub iteration: u32,
    pub loss: f64,
    /// Loss evaluations spent so far, this record's own included.
    pub evaluations: u64,
    pub params: Vec<f64>,
}

/// Why a run stopped before its iteration budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaAbort {
    pub iteration: u32,
    pub reason: String,
}

/// Everything a finished (or aborted) run reports.
#[derive(Clone, Debug, PartialEq)]
pub struct SpsaTrace {
    pub records: Vec<SpsaRecord>,
    pub final_params: Vec<f64>,
    pub evaluations: u64,
    pub aborted: Option<SpsaAbort>,
}

fn bernoulli_directions(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Minimizes `loss` over `initial.len()` parameters. The closure receives
/// the evaluation RNG so stochastic losses stay reproducible; evaluation
/// failures abort with the iteration prepended, while non-finite loss
/// values end the run early with the abort noted in the trace.
pub fn minimize<F>(initial: &[f64], cfg: &SpsaConfig, mut loss: F) -> Result<SpsaTrace>
where
    F: FnMut(&[f64], &mut ChaCha8Rng) -> Result<f64>,
{
    cfg.validate()?;
    if initial.is_empty() {
        return Err(Error::input("there are no parameters to optimize"));
    }
    if initial.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("initial parameters must be finite"));
    }

    let mut perturb_rng = stream(cfg.seed, 0);
    let mut eval_rng = stream(cfg.seed, 1);
    let dim = initial.len();
    let big_a = cfg.stability_offset();

    let mut theta = initial.to_vec();
    let mut evaluations: u64 = 0;
    let mut records = Vec::new();

    let mut eval =
        |params: &[f64], evaluations: &mut u64, rng: &mut ChaCha8Rng, iter: u32| -> Result<f64> {
            *evaluations += 1;
            loss(params, rng).map_err(|e| e.prefixed(&format!("iteration {iter}")))
        };

    let abort = |iteration: u32,
                 value: f64,
                 records: Vec<SpsaRecord>,
                 theta: Vec<f64>,
                 evaluations: u64| {
        Ok(SpsaTrace {
            records,
            final_params: theta,
            evaluations,
            aborted: Some(SpsaAbort {
                iteration,
                reason: format!("loss became non-finite ({value})"),
            }),
        })
    };

    // Baseline at the starting point.
    let f0 = eval(&theta, &mut evaluations, &mut eval_rng, 0)?;
    if !f0.is_finite() {
        return abort(0, f0, records, theta, evaluations);
    }
    records.push(SpsaRecord {
        iteration: 0,
        loss: f0,
        evaluations,
        params: theta.clone(),
    });

    // Calibrate the update gain from one gradient probe if none was given.
    let a = match cfg.a {
        Some(a) => a,
        None => {
            let delta = bernoulli_directions(dim, &mut perturb_rng);
            let up: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + cfg.c * d).collect();
            let dn: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - cfg.c * d).collect();
            let fp = eval(&up, &mut evaluations, &mut eval_rng, 0)?;
            let fm = eval(&dn, &mut evaluations, &mut eval_rng, 0)?;
            if !fp.is_finite() || !fm.is_finite() {
                return abort(0, if fp.is_finite() { fm } else { fp }, records, theta, evaluations);
            }
            let grad_mag = ((fp - fm) / (2.0 * cfg.c)).abs();
            if grad_mag > 1e-12 {
                FIRST_STEP_TARGET * (big_a + 1.0).powf(cfg.alpha) / grad_mag
            } else {
                FIRST_STEP_TARGET
            }
        }
    };

    for k in 1..=cfg.max_iters {
        let a_k = a / (big_a + k as f64).powf(cfg.alpha);
        let c_k = cfg.c / (k as f64).powf(cfg.gamma);
        let delta = bernoulli_directions(dim, &mut perturb_rng);
        let up: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + c_k * d).collect();
        let dn: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - c_k * d).collect();
        let fp = eval(&up, &mut evaluations, &mut eval_rng, k)?;
        let fm = eval(&dn, &mut evaluations, &mut eval_rng, k)?;
        if !fp.is_finite() || !fm.is_finite() {
            return abort(k, if fp.is_finite() { fm } else { fp }, records, theta, evaluations);
        }
        let scale = (fp - fm) / (2.0 * c_k);
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t -= a_k * scale / d;
        }

        if k % cfg.record_every == 0 || k == cfg.max_iters {
            let f = eval(&theta, &mut evaluations, &mut eval_rng, k)?;
            if !f.is_finite() {
                return abort(k, f, records, theta, evaluations);
            }
            records.push(SpsaRecord {
                iteration: k,
                loss: f,
                evaluations,
                params: theta.clone(),
            });
        }
    }

    Ok(SpsaTrace {
        records,
        final_params: theta,
        evaluations,
        aborted: None,
    })
}
