//! Distance to monotonicity as a `(1 + τ)`-multiplicative interval.
//!
//! Each iteration runs the improved estimator with `τ̄ = qτ` and
//! `δ̄ = τ̄/2^j`, turns the estimate into `b = 1 − estimate/n` and brackets
//! `ε_f` by `[(b − δ̄)/(1 + τ̄), (b + δ̄)/(1 − τ̄)]`. The loop stops once the
//! bracket is tight enough, or once its upper end drops below `1/n`, which
//! certifies `ε_f = 0` because `ε_f` is a multiple of `1/n`.

use crate::error::{Error, Result};
use crate::estimator::{amplify_median, run_with, Overrides, ParameterSet};
use crate::oracle::{RandomnessLedger, SequenceOracle};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    /// `q` in `τ̄ = qτ`.
    pub q: f64,
    pub trials: u32,
    pub max_iterations: u32,
    pub c2: f64,
    /// Upper bound below which `ε_f` is declared 0; `None` means `1/n`.
    pub zero_floor: Option<f64>,
    pub overrides: Overrides,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            q: 0.125,
            trials: 9,
            max_iterations: 12,
            c2: 8.0,
            zero_floor: None,
            overrides: Overrides::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub eps_low: f64,
    pub eps_high: f64,
    pub iterations: u32,
    pub final_delta_bar: f64,
    pub converged: bool,
    pub total_queries: u64,
    pub distinct_queries: u64,
}

pub fn estimate_distance(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    tau: f64,
) -> Result<DistanceEstimate> {
    estimate_distance_with(oracle, ledger, tau, &DistanceConfig::default())
}

pub fn estimate_distance_with(
    oracle: &SequenceOracle,
    ledger: &RandomnessLedger,
    tau: f64,
    cfg: &DistanceConfig,
) -> Result<DistanceEstimate> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Precondition(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    if !(cfg.q > 0.0 && cfg.q < 1.0) {
        return Err(Error::Precondition(format!(
            "q must lie in (0, 1), got {}",
            cfg.q
        )));
    }
    let n = oracle.n() as f64;
    let floor = cfg.zero_floor.unwrap_or(1.0 / n);
    let tau_bar = cfg.q * tau;
    let (q0, d0) = (oracle.total_queries(), oracle.distinct_queries());
    let mut best: Option<(f64, f64)> = None;
    let mut delta_bar = tau_bar;
    for j in 1..=cfg.max_iterations {
        delta_bar = tau_bar / 2f64.powi(j as i32);
        let params =
            ParameterSet::improved(oracle.n(), oracle.valbound(), tau_bar, delta_bar, cfg.c2)?
                .with_overrides(&cfg.overrides);
        let iter_ledger = ledger.derive("distance-iteration", j as u64);
        let est = amplify_median(&iter_ledger, cfg.trials, |l| {
            run_with(oracle, l, params.clone())
        })?
        .estimate;
        let b = 1.0 - est / n;
        let b1 = ((b - delta_bar) / (1.0 + tau_bar)).max(0.0);
        let b2 = ((b + delta_bar) / (1.0 - tau_bar)).min(1.0);
        let done = |converged| DistanceEstimate {
            eps_low: b1.min(b2),
            eps_high: b2,
            iterations: j,
            final_delta_bar: delta_bar,
            converged,
            total_queries: oracle.total_queries() - q0,
            distinct_queries: oracle.distinct_queries() - d0,
        };
        if b2 < floor {
            return Ok(DistanceEstimate {
                eps_low: 0.0,
                ..done(true)
            });
        }
        if b1 > 0.0 && b2 / b1 <= 1.0 + tau {
            return Ok(done(true));
        }
        if best.is_none_or(|(l, h)| b2 - b1 < h - l) {
            best = Some((b1.min(b2), b2));
        }
    }
    let (lo, hi) = best.unwrap_or((0.0, 1.0));
    Ok(DistanceEstimate {
        eps_low: lo,
        eps_high: hi,
        iterations: cfg.max_iterations,
        final_delta_bar: delta_bar,
        converged: false,
        total_queries: oracle.total_queries() - q0,
        distinct_queries: oracle.distinct_queries() - d0,
    })
}
