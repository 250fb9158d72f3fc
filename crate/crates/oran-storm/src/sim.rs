//! Discrete-time storm simulation and a stochastic cross-check.
//!
//! [`run`] plays an arrival profile against the fluid queue one step at a
//! time. Each step picks a server count (constant, or re-optimized by the
//! adaptive controller), advances the backlog, and records the resulting
//! service utility; [`analyze`] then scores the whole trace. The
//! event-driven oracle in [`mm1_event_oracle`] estimates the same
//! steady-state waiting figures from sampled arrivals so the analytic
//! formulas can be checked against an independent mechanism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{decide_servers, ControlPolicy, ControllerConfig, ControllerError};
use crate::protocol_delay::DelayParams;
use crate::queueing::{
    queue_step, service_rate, Architecture, QueueState, QueueingError, ServiceModel,
};
use crate::resilience::{
    desired_utility, resilience_score, utility, ResilienceError, ResilienceReport,
    ResilienceWeights, UtilityParams,
};
use crate::scenario::{arrival_rate, ScenarioError, StormProfile};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Queueing(#[from] QueueingError),
    #[error(transparent)]
    Resilience(#[from] ResilienceError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("step width must be positive and finite, got {0} s")]
    BadStepWidth(f64),
    #[error("oracle needs at least {min} arrivals, got {got}")]
    TooFewArrivals { got: u64, min: u64 },
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub profile: StormProfile,
    /// Per-server rate, baseline server count and deployment shape.
    pub service: ServiceModel,
    pub policy: ControlPolicy,
    /// Adaptive-policy weights; ignored under the fixed policy.
    pub controller: ControllerConfig,
    pub utility: UtilityParams,
    pub resilience: ResilienceWeights,
    /// Step width in seconds.
    pub step_s: f64,
    /// Random seed; only the stochastic oracle draws from it.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let params = DelayParams::default();
        let architecture = Architecture::OpenRan;
        Self {
            profile: StormProfile::default(),
            service: ServiceModel {
                architecture,
                mu_per_server: service_rate(&params, architecture)
                    .expect("default delay parameters are valid"),
                servers: 1,
            },
            policy: ControlPolicy::Fixed,
            controller: ControllerConfig::default(),
            utility: UtilityParams::default(),
            resilience: ResilienceWeights::default(),
            step_s: 1.0,
            seed: 1,
        }
    }
}

/// Hex SHA-256 of the config's canonical JSON form. Identical configs
/// hash identically, so traces and summaries can be tied to the exact
/// parameter set that produced them.
pub fn config_hash(cfg: &SimConfig) -> String {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.profile.validate()?;
        self.service.validate()?;
        self.controller.validate()?;
        self.utility.validate()?;
        self.resilience.validate()?;
        if !(self.step_s.is_finite() && self.step_s > 0.0) {
            return Err(SimError::BadStepWidth(self.step_s));
        }
        Ok(())
    }

    /// Server count used for the baseline utility: the configured count
    /// under the fixed policy, the controller's quiet-load choice under
    /// the adaptive one.
    pub fn baseline_servers(&self) -> u32 {
        match self.policy {
            ControlPolicy::Fixed => self.service.servers,
            ControlPolicy::Adaptive => decide_servers(
                0.0,
                self.profile.lambda_normal,
                self.service.mu_per_server,
                &self.controller,
                &self.utility,
            ),
        }
    }
}

/// One recorded simulation step. `queue_len`, `wait_s` and `utility`
/// reflect the state after the step's arrivals and service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimStep {
    pub t: u64,
    pub lambda: f64,
    pub servers: u32,
    pub queue_len: f64,
    pub wait_s: f64,
    pub utility: f64,
}

/// A full simulation trace plus the baseline it is scored against and
/// the identity of the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub steps: Vec<SimStep>,
    pub baseline_servers: u32,
    pub u_des: f64,
    pub config_hash: String,
    pub architecture: Architecture,
    pub mu_per_server: f64,
}

impl SimTrace {
    /// Step with the largest backlog; the earliest one on ties.
    pub fn peak_queue(&self) -> Option<&SimStep> {
        self.steps.iter().reduce(|best, s| {
            if s.queue_len > best.queue_len {
                s
            } else {
                best
            }
        })
    }

    /// First step at or after `from` whose backlog is empty.
    pub fn first_empty_after(&self, from: u64) -> Option<u64> {
        self.steps
            .iter()
            .skip(from as usize)
            .find(|s| s.queue_len == 0.0)
            .map(|s| s.t)
    }

    pub fn utilities(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.utility).collect()
    }

    /// Renders the trace as CSV, one row per step, floats with nine
    /// fractional digits of scientific notation so values survive a
    /// round trip through text.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lambda,c,queue_len,wait_s,utility\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{:.9e},{},{:.9e},{:.9e},{:.9e}\n",
                s.t, s.lambda, s.servers, s.queue_len, s.wait_s, s.utility
            ));
        }
        out
    }
}

/// Runs the fluid simulation over the profile's horizon.
pub fn run(cfg: &SimConfig) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    let mu = cfg.service.mu_per_server;
    let baseline_servers = cfg.baseline_servers();
    let u_des = desired_utility(
        cfg.profile.lambda_normal,
        baseline_servers,
        mu,
        &cfg.utility,
    );
    let mut state = QueueState::empty(baseline_servers);
    let mut steps = Vec::with_capacity(cfg.profile.horizon_steps as usize);
    for t in 0..cfg.profile.horizon_steps {
        let lambda = arrival_rate(&cfg.profile, t)?;
        let servers = match cfg.policy {
            ControlPolicy::Fixed => cfg.service.servers,
            ControlPolicy::Adaptive => {
                decide_servers(state.queue_len, lambda, mu, &cfg.controller, &cfg.utility)
            }
        };
        let model = ServiceModel {
            servers,
            ..cfg.service
        };
        state = queue_step(&state, lambda, &model, cfg.step_s)?;
        let u = utility(lambda, state.queue_len, servers, mu, &cfg.utility);
        steps.push(SimStep {
            t,
            lambda,
            servers,
            queue_len: state.queue_len,
            wait_s: state.wait_s,
            utility: u,
        });
    }
    Ok(SimTrace {
        steps,
        baseline_servers,
        u_des,
        config_hash: config_hash(cfg),
        architecture: cfg.service.architecture,
        mu_per_server: mu,
    })
}

/// Scores a finished trace against its baseline utility.
pub fn analyze(trace: &SimTrace, cfg: &SimConfig) -> Result<ResilienceReport, SimError> {
    let report = resilience_score(
        &trace.utilities(),
        trace.u_des,
        &cfg.profile,
        cfg.step_s,
        &cfg.resilience,
    )?;
    Ok(report)
}

/// Steady-state estimates from the event-driven oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    /// Mean time in system, seconds.
    pub mean_wait_s: f64,
    /// Mean number in system via Little's law.
    pub mean_system_size: f64,
    /// Arrivals that contributed after warmup.
    pub samples: u64,
}

/// Minimum arrivals accepted by [`mm1_event_oracle`].
pub const ORACLE_MIN_ARRIVALS: u64 = 100;

/// Event-driven single-server queue with exponential interarrival and
/// service times, reduced to the waiting-time recurrence: each arrival's
/// service begins at the later of its arrival and the previous departure.
/// The first tenth of the arrivals warm the queue up and are discarded.
pub fn mm1_event_oracle(
    lambda: f64,
    mu: f64,
    arrivals: u64,
    seed: u64,
) -> Result<OracleEstimate, SimError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(QueueingError::BadArrivalRate(lambda).into());
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(QueueingError::BadServiceRate(mu).into());
    }
    if lambda >= mu {
        return Err(QueueingError::Unstable { lambda, mu }.into());
    }
    if arrivals < ORACLE_MIN_ARRIVALS {
        return Err(SimError::TooFewArrivals {
            got: arrivals,
            min: ORACLE_MIN_ARRIVALS,
        });
    }
    let interarrival = Exp::new(lambda).expect("validated above");
    let service = Exp::new(mu).expect("validated above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = arrivals / 10;
    let mut arrival = 0.0_f64;
    let mut departure = 0.0_f64;
    let mut total_wait = 0.0_f64;
    for i in 0..arrivals {
        arrival += interarrival.sample(&mut rng);
        departure = arrival.max(departure) + service.sample(&mut rng);
        if i >= warmup {
            total_wait += departure - arrival;
        }
    }
    let samples = arrivals - warmup;
    let mean_wait_s = total_wait / samples as f64;
    Ok(OracleEstimate {
        mean_wait_s,
        mean_system_size: lambda * mean_wait_s,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queueing::mm1_metrics;

    const MU_OPEN: f64 = 28.368794326241137;

    fn quiet_config() -> SimConfig {
        SimConfig {
            profile: StormProfile::constant(20.0, 100).unwrap(),
            ..SimConfig::default()
        }
    }

    #[test]
    fn quiet_run_keeps_queue_empty_and_scores_one() {
        let cfg = quiet_config();
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.steps.len(), 100);
        assert!(trace.steps.iter().all(|s| s.queue_len == 0.0));
        assert!(trace.steps.iter().all(|s| s.utility == trace.u_des));
        let report = analyze(&trace, &cfg).unwrap();
        assert_eq!(report.p, 1.0);
    }

    #[test]
    fn storm_peak_matches_the_excess_arrival_sum() {
        let cfg = SimConfig::default();
        let trace = run(&cfg).unwrap();
        let peak = trace.peak_queue().unwrap();
        // Every step whose arrivals exceed the single-server rate adds its
        // excess to the backlog: ramps contribute 1190 and 990 - 9 mu on
        // top of the plateau's 12000 - 60 mu, for 19 + 60 ramp-and-plateau
        // steps of service spent against 14180 offered arrivals.
        let expected = 14180.0 - 79.0 * MU_OPEN;
        assert_eq!(peak.t, 108);
        assert!((peak.queue_len - expected).abs() < 1e-6);
    }

    #[test]
    fn fixed_policy_records_the_configured_servers() {
        let mut cfg = SimConfig::default();
        cfg.service.servers = 4;
        let trace = run(&cfg).unwrap();
        assert!(trace.steps.iter().all(|s| s.servers == 4));
        assert_eq!(trace.baseline_servers, 4);
    }

    #[test]
    fn adaptive_policy_scales_out_and_back() {
        let cfg = SimConfig {
            policy: ControlPolicy::Adaptive,
            controller: ControllerConfig {
                v: 1000.0,
                w: 1.0,
                c_max: 10,
            },
            ..SimConfig::default()
        };
        let trace = run(&cfg).unwrap();
        let fixed = run(&SimConfig::default()).unwrap();
        let peak_adaptive = trace.peak_queue().unwrap().queue_len;
        let peak_fixed = fixed.peak_queue().unwrap().queue_len;
        assert!(peak_adaptive < peak_fixed / 10.0);
        assert!(trace.steps.iter().map(|s| s.servers).max().unwrap() >= 7);
        assert_eq!(trace.steps.last().unwrap().servers, 1);
        let adaptive_p = analyze(&trace, &cfg).unwrap().p;
        let fixed_p = analyze(&fixed, &SimConfig::default()).unwrap().p;
        assert!(adaptive_p > fixed_p);
    }

    #[test]
    fn identical_configs_yield_identical_traces() {
        let cfg = SimConfig::default();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config_hash.len(), 64);
        let other = SimConfig {
            step_s: 0.5,
            ..SimConfig::default()
        };
        assert_ne!(config_hash(&cfg), config_hash(&other));
    }

    #[test]
    fn oracle_agrees_with_analytic_half_load() {
        let lambda = 0.5 * MU_OPEN;
        let est = mm1_event_oracle(lambda, MU_OPEN, 200_000, 42).unwrap();
        let exact = mm1_metrics(lambda, MU_OPEN).unwrap();
        assert!((est.mean_wait_s - exact.w_s).abs() / exact.w_s < 0.03);
        assert!((est.mean_system_size - exact.l_s).abs() / exact.l_s < 0.03);
    }

    #[test]
    fn oracle_is_seed_deterministic() {
        let a = mm1_event_oracle(10.0, 28.37, 50_000, 7).unwrap();
        let b = mm1_event_oracle(10.0, 28.37, 50_000, 7).unwrap();
        let c = mm1_event_oracle(10.0, 28.37, 50_000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn oracle_rejects_saturation_and_tiny_runs() {
        assert!(matches!(
            mm1_event_oracle(30.0, 28.37, 10_000, 1),
            Err(SimError::Queueing(QueueingError::Unstable { .. }))
        ));
        assert!(matches!(
            mm1_event_oracle(10.0, 28.37, 50, 1),
            Err(SimError::TooFewArrivals { .. })
        ));
    }

    #[test]
    fn invalid_step_width_is_rejected() {
        let cfg = SimConfig {
            step_s: 0.0,
            ..SimConfig::default()
        };
        assert!(matches!(run(&cfg), Err(SimError::BadStepWidth(_))));
    }
}
