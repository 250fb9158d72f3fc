//! Server-count control for the signaling queue.
//!
//! The adaptive policy minimizes a drift-plus-penalty objective each step:
//! the backlog drift pushes capacity toward the offered load, a utility
//! reward (weighted by `v`) favors configurations that keep service
//! quality high, and a per-server cost (weighted by `w`) resists
//! overprovisioning. Minimization is exact: every candidate count from 1
//! to `c_max` is evaluated and ties go to the smaller count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resilience::{utility, UtilityParams};

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("server cap must be at least 1, got {0}")]
    BadServerCap(u32),
    #[error("penalty weight must be non-negative and finite, got {0}")]
    BadPenaltyWeight(f64),
}

/// How the per-step server count is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlPolicy {
    /// Keep the service model's configured server count every step.
    Fixed,
    /// Re-optimize the count every step via the drift-plus-penalty rule.
    Adaptive,
}

/// Weights and search bound of the adaptive policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Utility reward weight. Larger values chase service quality.
    pub v: f64,
    /// Per-server cost weight. Larger values resist scaling out.
    pub w: f64,
    /// Largest server count the controller may pick.
    pub c_max: u32,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            v: 1.0,
            w: 1.0,
            c_max: 10,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.c_max == 0 {
            return Err(ControllerError::BadServerCap(self.c_max));
        }
        for weight in [self.v, self.w] {
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(ControllerError::BadPenaltyWeight(weight));
            }
        }
        Ok(())
    }
}

/// One-step quadratic backlog drift for a candidate capacity.
///
/// `queue_len * (lambda - c mu) + (lambda - c mu)^2 / 2`: the first term
/// rewards draining an existing backlog, the second penalizes any gap
/// between capacity and load.
pub fn lyapunov_drift(queue_len: f64, lambda: f64, servers: u32, mu: f64) -> f64 {
    let gap = lambda - f64::from(servers) * mu;
    queue_len * gap + 0.5 * gap * gap
}

/// Full objective: drift minus the weighted utility of the candidate
/// configuration, plus the weighted server cost. Utility is evaluated at
/// the current backlog with the candidate count.
pub fn lyapunov_objective(
    queue_len: f64,
    lambda: f64,
    servers: u32,
    mu: f64,
    cfg: &ControllerConfig,
    params: &UtilityParams,
) -> f64 {
    lyapunov_drift(queue_len, lambda, servers, mu)
        - cfg.v * utility(lambda, queue_len, servers, mu, params)
        + cfg.w * f64::from(servers)
}

/// Picks the server count minimizing [`lyapunov_objective`].
///
/// Scans candidates in ascending order with a strict improvement test, so
/// equal objectives keep the smaller count. Callers validate `cfg` up
/// front; a zero cap is treated as 1.
pub fn decide_servers(
    queue_len: f64,
    lambda: f64,
    mu: f64,
    cfg: &ControllerConfig,
    params: &UtilityParams,
) -> u32 {
    let cap = cfg.c_max.max(1);
    let mut best_c = 1;
    let mut best = lyapunov_objective(queue_len, lambda, 1, mu, cfg, params);
    for c in 2..=cap {
        let obj = lyapunov_objective(queue_len, lambda, c, mu, cfg, params);
        if obj < best {
            best = obj;
            best_c = c;
        }
    }
    best_c
}
