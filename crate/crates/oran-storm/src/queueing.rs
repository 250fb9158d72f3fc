//! Queueing models of the attachment pipeline.
//!
//! Attachments are served sequentially: one user's handshake must finish
//! before the next begins, so the service time of a single attachment is
//! the sum over handshake messages of node processing plus the one-way
//! transport delay of the deployment. Its reciprocal is the service rate
//! used by the analytic M/M/1 formulas and, scaled by a server count, by
//! the clamped fluid recurrence that tracks congestion transients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol_delay::DelayParams;

/// Errors from queueing computations.
#[derive(Debug, Error, PartialEq)]
pub enum QueueingError {
    #[error("arrival rate {lambda} UEs/s reaches service rate {mu} UEs/s; the queue has no steady state")]
    Unstable { lambda: f64, mu: f64 },
    #[error("arrival rate must be non-negative and finite, got {0} UEs/s")]
    BadArrivalRate(f64),
    #[error("service rate must be positive and finite, got {0} UEs/s")]
    BadServiceRate(f64),
    #[error("attachment service time must be positive, got {0} s")]
    BadServiceTime(f64),
    #[error("UE index must be at least 1")]
    ZeroUe,
    #[error("server count must be at least 1")]
    ZeroServers,
    #[error(transparent)]
    Protocol(#[from] crate::protocol_delay::ProtocolError),
}

/// Deployment shape: integrated baseband or a split with a centralized unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Monolithic,
    OpenRan,
}

impl Architecture {
    /// One-way transport delay between the radio unit and the node that
    /// terminates the handshake for this deployment.
    pub fn oneway_delay_s(self, params: &DelayParams) -> f64 {
        match self {
            Architecture::Monolithic => params.d_ru_bbu_s,
            Architecture::OpenRan => params.d_ru_cu_s,
        }
    }
}

/// Attachment service capacity: per-server rate, server count, deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceModel {
    pub architecture: Architecture,
    pub mu_per_server: f64,
    pub servers: u32,
}

impl ServiceModel {
    pub fn validate(&self) -> Result<(), QueueingError> {
        if !(self.mu_per_server.is_finite() && self.mu_per_server > 0.0) {
            return Err(QueueingError::BadServiceRate(self.mu_per_server));
        }
        if self.servers == 0 {
            return Err(QueueingError::ZeroServers);
        }
        Ok(())
    }

    /// Aggregate service rate across all servers.
    pub fn total_rate(&self) -> f64 {
        self.mu_per_server * f64::from(self.servers)
    }
}

/// Steady-state M/M/1 figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mm1Metrics {
    /// Utilization lambda / mu.
    pub rho: f64,
    /// Mean number in the system, rho / (1 - rho).
    pub l_s: f64,
    /// Mean time in the system, 1 / (mu - lambda), seconds.
    pub w_s: f64,
}

/// Queue state after one fluid step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueState {
    pub t: u64,
    /// Backlogged attachments (fluid, non-negative).
    pub queue_len: f64,
    /// Backlog divided by aggregate service rate, seconds.
    pub wait_s: f64,
    pub servers: u32,
}

impl QueueState {
    /// Empty queue at time zero with the model's baseline servers.
    pub fn empty(servers: u32) -> Self {
        Self {
            t: 0,
            queue_len: 0.0,
            wait_s: 0.0,
            servers,
        }
    }
}

/// Time one attachment occupies the pipeline: the processing of every
/// handshake message plus one transport hop per message.
pub fn attachment_time_s(params: &DelayParams, arch: Architecture) -> Result<f64, QueueingError> {
    params.validate()?;
    let oneway = arch.oneway_delay_s(params);
    let total: f64 = params
        .per_message_processing_s
        .iter()
        .map(|t_p| t_p + oneway)
        .sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(QueueingError::BadServiceTime(total));
    }
    Ok(total)
}

/// Attachment completion time of the n-th queued user when handshakes are
/// served strictly one after another.
pub fn nth_ue_delay(
    n: u64,
    params: &DelayParams,
    arch: Architecture,
) -> Result<f64, QueueingError> {
    if n == 0 {
        return Err(QueueingError::ZeroUe);
    }
    Ok(n as f64 * attachment_time_s(params, arch)?)
}

/// Attachments per second a single pipeline sustains: the reciprocal of
/// one attachment's service time.
pub fn service_rate(params: &DelayParams, arch: Architecture) -> Result<f64, QueueingError> {
    Ok(1.0 / attachment_time_s(params, arch)?)
}

/// Steady-state M/M/1 metrics. An offered load at or above the service
/// rate has no steady state and is reported as [`QueueingError::Unstable`].
pub fn mm1_metrics(lambda: f64, mu: f64) -> Result<Mm1Metrics, QueueingError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(QueueingError::BadArrivalRate(lambda));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(QueueingError::BadServiceRate(mu));
    }
    if lambda >= mu {
        return Err(QueueingError::Unstable { lambda, mu });
    }
    let rho = lambda / mu;
    Ok(Mm1Metrics {
        rho,
        l_s: rho / (1.0 - rho),
        w_s: 1.0 / (mu - lambda),
    })
}

/// Offered load per unit of aggregate capacity, lambda / (c * mu).
/// Values above 1 are meaningful and signal an unstable overload.
pub fn mmc_utilization(lambda: f64, model: &ServiceModel) -> Result<f64, QueueingError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(QueueingError::BadArrivalRate(lambda));
    }
    model.validate()?;
    Ok(lambda / model.total_rate())
}

/// Smallest server count whose aggregate rate covers `lambda_storm`.
pub fn servers_required(lambda_storm: f64, mu: f64) -> Result<u32, QueueingError> {
    if !(lambda_storm.is_finite() && lambda_storm >= 0.0) {
        return Err(QueueingError::BadArrivalRate(lambda_storm));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(QueueingError::BadServiceRate(mu));
    }
    let mut c = (lambda_storm / mu).ceil().max(1.0) as u32;
    // Float division can land an ulp past an exact integer quotient; settle
    // on the smallest c with c * mu >= lambda by direct comparison.
    while c > 1 && f64::from(c - 1) * mu >= lambda_storm {
        c -= 1;
    }
    Ok(c)
}

/// One step of the clamped fluid recurrence:
/// `L(t+1) = max(0, L(t) + (lambda - c * mu) * step_s)`, with the wait
/// estimate `W = L / (c * mu)`. `step_s` is the step width in seconds.
pub fn queue_step(
    state: &QueueState,
    lambda_t: f64,
    model: &ServiceModel,
    step_s: f64,
) -> Result<QueueState, QueueingError> {
    if !(lambda_t.is_finite() && lambda_t >= 0.0) {
        return Err(QueueingError::BadArrivalRate(lambda_t));
    }
    model.validate()?;
    let rate = model.total_rate();
    let queue_len = (state.queue_len + (lambda_t - rate) * step_s).max(0.0);
    Ok(QueueState {
        t: state.t + 1,
        queue_len,
        wait_s: queue_len / rate,
        servers: model.servers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_attachment_time_per_architecture() {
        let params = DelayParams::default();
        let mono = nth_ue_delay(1, &params, Architecture::Monolithic).unwrap();
        let open = nth_ue_delay(1, &params, Architecture::OpenRan).unwrap();
        assert!(close(mono, 0.03075, 1e-12)); // 30 ms processing + 3 x 0.25 ms
        assert!(close(open, 0.03525, 1e-12)); // 30 ms processing + 3 x 1.75 ms
    }

    #[test]
    fn nth_delay_scales_linearly() {
        let params = DelayParams::default();
        let fifth = nth_ue_delay(5, &params, Architecture::OpenRan).unwrap();
        assert!(close(fifth, 5.0 * 0.03525, 1e-12));
        assert_eq!(
            nth_ue_delay(0, &params, Architecture::OpenRan),
            Err(QueueingError::ZeroUe)
        );
    }

    #[test]
    fn service_rates_for_default_processing() {
        let params = DelayParams::default();
        let mu_mono = service_rate(&params, Architecture::Monolithic).unwrap();
        let mu_open = service_rate(&params, Architecture::OpenRan).unwrap();
        assert!(close(mu_mono, 32.520325203252032, 1e-9));
        assert!(close(mu_open, 28.368794326241137, 1e-9));
    }

    #[test]
    fn mm1_half_load_metrics() {
        let m = mm1_metrics(16.26, 32.52).unwrap();
        assert!(close(m.rho, 0.5, 1e-12));
        assert!(close(m.l_s, 1.0, 1e-12));
        assert!(close(m.w_s, 0.0615006150061500, 1e-12));
    }

    #[test]
    fn mm1_high_load_metrics() {
        let m = mm1_metrics(29.27, 32.52).unwrap();
        assert!(close(m.w_s, 1.0 / 3.25, 1e-12));
        let m = mm1_metrics(2.837, 28.37).unwrap();
        assert!(close(m.l_s, 0.1 / 0.9, 1e-12));
    }

    #[test]
    fn mm1_rejects_saturation_and_bad_inputs() {
        assert!(matches!(
            mm1_metrics(32.52, 32.52),
            Err(QueueingError::Unstable { .. })
        ));
        assert!(matches!(
            mm1_metrics(40.0, 32.52),
            Err(QueueingError::Unstable { .. })
        ));
        assert!(mm1_metrics(-1.0, 32.52).is_err());
        assert!(mm1_metrics(1.0, 0.0).is_err());
    }

    #[test]
    fn utilization_can_exceed_one() {
        let model = ServiceModel {
            architecture: Architecture::OpenRan,
            mu_per_server: 28.37,
            servers: 8,
        };
        let rho = mmc_utilization(200.0, &model).unwrap();
        assert!(close(rho, 200.0 / (8.0 * 28.37), 1e-12));
        let single = ServiceModel {
            servers: 1,
            ..model
        };
        assert!(mmc_utilization(200.0, &single).unwrap() > 1.0);
    }

    #[test]
    fn required_servers_cover_the_storm() {
        assert_eq!(servers_required(200.0, 28.37).unwrap(), 8);
        assert_eq!(servers_required(200.0, 25.0).unwrap(), 8); // exact quotient
        assert_eq!(servers_required(10.0, 28.37).unwrap(), 1);
        assert_eq!(servers_required(0.0, 28.37).unwrap(), 1);
    }

    #[test]
    fn queue_step_accumulates_overload() {
        let model = ServiceModel {
            architecture: Architecture::OpenRan,
            mu_per_server: 28.37,
            servers: 1,
        };
        let next = queue_step(&QueueState::empty(1), 200.0, &model, 1.0).unwrap();
        assert!(close(next.queue_len, 171.63, 1e-12));
        assert!(close(next.wait_s, 171.63 / 28.37, 1e-12));
        assert_eq!(next.t, 1);
    }

    #[test]
    fn queue_step_clamps_at_zero() {
        let model = ServiceModel {
            architecture: Architecture::Monolithic,
            mu_per_server: 32.52,
            servers: 1,
        };
        let state = QueueState {
            t: 9,
            queue_len: 5.0,
            wait_s: 5.0 / 32.52,
            servers: 1,
        };
        let next = queue_step(&state, 10.0, &model, 1.0).unwrap();
        assert_eq!(next.queue_len, 0.0);
        assert_eq!(next.wait_s, 0.0);
        assert_eq!(next.t, 10);
    }

    #[test]
    fn wait_is_zero_exactly_when_queue_is_empty() {
        let model = ServiceModel {
            architecture: Architecture::OpenRan,
            mu_per_server: 28.37,
            servers: 2,
        };
        let mut state = QueueState::empty(2);
        for (step, lambda) in [(0u64, 100.0), (1, 0.0), (2, 30.0), (3, 200.0)] {
            state = queue_step(&state, lambda, &model, 1.0).unwrap();
            assert_eq!(state.t, step + 1);
            assert_eq!(state.wait_s == 0.0, state.queue_len == 0.0);
        }
    }
}
