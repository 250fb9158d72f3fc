//! Service utility and resilience scoring for storm traces.
//!
//! Utility blends two logistic terms: one falls as offered arrivals push
//! past a fraction of deployed capacity, the other falls as the backlog
//! grows toward its tolerable maximum. A run's resilience is scored
//! against its own baseline utility over three phases: absorption (from
//! the first utility drop to the end of the scheduled disturbance),
//! adaptation (from the disturbance end until utility holds above the
//! recovery threshold), and a recovery-time term that discounts slow
//! returns to normal. Each phase contributes a ratio in [0, 1], combined
//! by weights that sum to one, so the overall score stays in [0, 1].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::StormProfile;

/// Utility drops below `DISRUPTION_THRESHOLD * u_des` mark the disruption.
pub const DISRUPTION_THRESHOLD: f64 = 0.95;
/// Recovery requires utility at or above `RECOVERY_THRESHOLD * u_des`.
pub const RECOVERY_THRESHOLD: f64 = 0.95;
/// Steps utility must hold above the recovery threshold to count.
pub const RECOVERY_HOLD_STEPS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum ResilienceError {
    #[error("utility weights must be non-negative and sum to 1, got w_a {w_a}, w_b {w_b}")]
    BadUtilityWeights { w_a: f64, w_b: f64 },
    #[error("sigmoid steepness must be positive and finite, got {0}")]
    BadSteepness(f64),
    #[error("midpoint fraction must be in (0, 1], got {0}")]
    BadMidpointFraction(f64),
    #[error("queue tolerance must be positive and finite, got {0}")]
    BadQueueTolerance(f64),
    #[error("phase weights must be non-negative and sum to 1, got {w1} + {w2} + {w3}")]
    BadPhaseWeights { w1: f64, w2: f64, w3: f64 },
    #[error("desired recovery window must be positive and finite, got {0} s")]
    BadRecoveryWindow(f64),
    #[error("trace has {got} utility samples but the profile horizon is {expected} steps")]
    TraceLengthMismatch { got: usize, expected: u64 },
    #[error("baseline utility must be positive, got {0}")]
    BadBaseline(f64),
    #[error("step width must be positive and finite, got {0} s")]
    BadStep(f64),
}

/// Parameters of the two-sigmoid utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityParams {
    /// Weight of the arrival-rate term.
    pub w_a: f64,
    /// Weight of the queue-length term.
    pub w_b: f64,
    /// Steepness of the arrival-rate sigmoid.
    pub k_a: f64,
    /// Steepness of the queue-length sigmoid.
    pub k_b: f64,
    /// Arrival midpoint as a fraction of aggregate capacity.
    pub m_frac_a: f64,
    /// Queue midpoint as a fraction of `l_q_max`.
    pub m_frac_b: f64,
    /// Queue length at which service is considered fully degraded.
    pub l_q_max: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            w_a: 0.5,
            w_b: 0.5,
            k_a: 0.1,  // gentle slope in arrivals
            k_b: 0.05, // even gentler in backlog
            m_frac_a: 0.75,
            m_frac_b: 0.5,
            l_q_max: 500.0,
        }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<(), ResilienceError> {
        let finite = self.w_a.is_finite() && self.w_b.is_finite();
        if !finite || self.w_a < 0.0 || self.w_b < 0.0 || (self.w_a + self.w_b - 1.0).abs() > 1e-9 {
            return Err(ResilienceError::BadUtilityWeights {
                w_a: self.w_a,
                w_b: self.w_b,
            });
        }
        for k in [self.k_a, self.k_b] {
            if !(k.is_finite() && k > 0.0) {
                return Err(ResilienceError::BadSteepness(k));
            }
        }
        for m in [self.m_frac_a, self.m_frac_b] {
            if !(m.is_finite() && m > 0.0 && m <= 1.0) {
                return Err(ResilienceError::BadMidpointFraction(m));
            }
        }
        if !(self.l_q_max.is_finite() && self.l_q_max > 0.0) {
            return Err(ResilienceError::BadQueueTolerance(self.l_q_max));
        }
        Ok(())
    }
}

/// Phase weights and the desired recovery window of the resilience score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResilienceWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    /// Recovery within this many seconds earns the full time credit.
    pub delta_t_des_s: f64,
}

impl Default for ResilienceWeights {
    fn default() -> Self {
        Self {
            w1: 0.4,
            w2: 0.4,
            w3: 0.2,
            delta_t_des_s: 100.0,
        }
    }
}

impl ResilienceWeights {
    pub fn validate(&self) -> Result<(), ResilienceError> {
        let ws = [self.w1, self.w2, self.w3];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0)
            || (ws.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(ResilienceError::BadPhaseWeights {
                w1: self.w1,
                w2: self.w2,
                w3: self.w3,
            });
        }
        if !(self.delta_t_des_s.is_finite() && self.delta_t_des_s > 0.0) {
            return Err(ResilienceError::BadRecoveryWindow(self.delta_t_des_s));
        }
        Ok(())
    }
}

/// Disturbance phase boundaries detected on a utility trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseBounds {
    /// First step where utility fell below the disruption threshold.
    pub t0_step: u64,
    /// End of the scheduled disturbance.
    pub td_step: u64,
    /// First step of sustained recovery; the horizon when none was seen.
    pub tr_step: u64,
    pub disrupted: bool,
    pub recovered: bool,
}

/// Resilience score and its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResilienceReport {
    pub phases: PhaseBounds,
    pub u_des: f64,
    pub absorption_ratio: f64,
    pub adaptation_ratio: f64,
    pub t_rec: f64,
    pub p: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + x.exp())
}

/// Service utility in [0, 1] for one step.
///
/// `u = w_a / (1 + exp(k_a (lambda - m_a))) + w_b / (1 + exp(k_b (l_q - m_b)))`
/// with midpoints `m_a = m_frac_a * servers * mu` and
/// `m_b = m_frac_b * l_q_max`. Callers validate `params` once up front.
pub fn utility(lambda: f64, queue_len: f64, servers: u32, mu: f64, params: &UtilityParams) -> f64 {
    let m_a = params.m_frac_a * f64::from(servers) * mu;
    let m_b = params.m_frac_b * params.l_q_max;
    let u_a = logistic(params.k_a * (lambda - m_a));
    let u_b = logistic(params.k_b * (queue_len - m_b));
    params.w_a * u_a + params.w_b * u_b
}

/// Baseline utility: the score at the normal arrival rate with an empty
/// queue and the run's baseline server count.
pub fn desired_utility(
    lambda_normal: f64,
    baseline_servers: u32,
    mu: f64,
    params: &UtilityParams,
) -> f64 {
    utility(lambda_normal, 0.0, baseline_servers, mu, params)
}

/// Locates the disruption, disturbance-end and recovery steps on a
/// utility trace.
///
/// Disruption is the first step at or before the scheduled disturbance end
/// where utility falls below [`DISRUPTION_THRESHOLD`] of baseline.
/// Recovery is the first step from the disturbance end whose utility holds
/// at or above [`RECOVERY_THRESHOLD`] of baseline for
/// [`RECOVERY_HOLD_STEPS`] consecutive steps. A trace that never dips
/// reports `t0 = td = tr` at the scheduled storm start with both flags
/// reflecting the quiet run.
pub fn detect_phases(
    u: &[f64],
    u_des: f64,
    profile: &StormProfile,
) -> Result<PhaseBounds, ResilienceError> {
    if u.len() as u64 != profile.horizon_steps {
        return Err(ResilienceError::TraceLengthMismatch {
            got: u.len(),
            expected: profile.horizon_steps,
        });
    }
    if !(u_des.is_finite() && u_des > 0.0) {
        return Err(ResilienceError::BadBaseline(u_des));
    }
    let horizon = profile.horizon_steps;
    let td = profile.disturbance_end_step().min(horizon - 1);
    let disruption = DISRUPTION_THRESHOLD * u_des;
    let t0 = (0..=td).find(|&t| u[t as usize] < disruption);

    let Some(t0) = t0 else {
        let anchor = profile.disturbance_start_step().min(horizon - 1);
        return Ok(PhaseBounds {
            t0_step: anchor,
            td_step: anchor,
            tr_step: anchor,
            disrupted: false,
            recovered: true,
        });
    };

    let recovery = RECOVERY_THRESHOLD * u_des;
    let held = |t: u64| -> bool {
        let end = t + RECOVERY_HOLD_STEPS as u64;
        end <= horizon && (t..end).all(|i| u[i as usize] >= recovery)
    };
    let tr = (td..horizon).find(|&t| held(t));
    Ok(PhaseBounds {
        t0_step: t0,
        td_step: td,
        tr_step: tr.unwrap_or(horizon),
        disrupted: true,
        recovered: tr.is_some(),
    })
}

/// Trapezoidal integral of evenly spaced samples.
fn trapezoid(values: &[f64], step_s: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    step_s * (values[0] / 2.0 + interior + values[values.len() - 1] / 2.0)
}

/// Ratio of the utility integral to the baseline integral over an
/// inclusive step range, clamped to [0, 1]. Zero-length ranges yield the
/// full ratio: nothing was lost over an empty window.
fn phase_ratio(u: &[f64], from: u64, to: u64, u_des: f64, step_s: f64) -> f64 {
    if to <= from {
        return 1.0;
    }
    let got = trapezoid(&u[from as usize..=to as usize], step_s);
    let want = u_des * (to - from) as f64 * step_s;
    (got / want).clamp(0.0, 1.0)
}

/// Scores a utility trace against its baseline.
///
/// The absorption and adaptation terms compare the trapezoidal utility
/// integral with the baseline integral over their phase windows; the
/// recovery term credits 1 when recovery arrived within the desired
/// window and decays as the inverse of the actual time otherwise. An
/// unrecovered run integrates adaptation through the end of the horizon.
pub fn resilience_score(
    u: &[f64],
    u_des: f64,
    profile: &StormProfile,
    step_s: f64,
    weights: &ResilienceWeights,
) -> Result<ResilienceReport, ResilienceError> {
    weights.validate()?;
    if !(step_s.is_finite() && step_s > 0.0) {
        return Err(ResilienceError::BadStep(step_s));
    }
    let phases = detect_phases(u, u_des, profile)?;

    let (absorption_ratio, adaptation_ratio, t_rec) = if !phases.disrupted {
        (1.0, 1.0, 1.0)
    } else {
        let absorption = phase_ratio(u, phases.t0_step, phases.td_step, u_des, step_s);
        let adapt_end = phases.tr_step.min(profile.horizon_steps - 1);
        let adaptation = phase_ratio(u, phases.td_step, adapt_end, u_des, step_s);
        let elapsed_s = (phases.tr_step - phases.t0_step) as f64 * step_s;
        let t_rec = if elapsed_s <= weights.delta_t_des_s {
            1.0
        } else {
            weights.delta_t_des_s / elapsed_s
        };
        (absorption, adaptation, t_rec)
    };

    let p = weights.w1 * absorption_ratio + weights.w2 * adaptation_ratio + weights.w3 * t_rec;
    Ok(ResilienceReport {
        phases,
        u_des,
        absorption_ratio,
        adaptation_ratio,
        t_rec,
        p,
    })
}
