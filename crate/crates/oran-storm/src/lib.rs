//! Discrete-time models of initial attachment signaling in disaggregated
//! radio access networks.
//!
//! The crate quantifies how splitting the baseband between a distributed
//! unit and a centralized unit changes control-plane latency, and how the
//! attachment pipeline behaves when a signaling storm pushes arrivals far
//! past the sustainable rate. It provides:
//!
//! - byte-accurate wire sizes and per-message delay budgets for the
//!   three-way attachment handshake ([`protocol_delay`]);
//! - analytic single- and multi-server queue formulas plus a clamped
//!   fluid recurrence for congestion transients ([`queueing`]);
//! - piecewise-linear storm arrival profiles ([`scenario`]);
//! - a two-sigmoid service utility and a weighted resilience index over
//!   absorption, adaptation and recovery phases ([`resilience`]);
//! - a drift-plus-penalty controller that adapts server capacity to load
//!   ([`controller`]);
//! - a deterministic step simulator tying the pieces together, plus a
//!   stochastic single-queue estimator used to cross-check the analytic
//!   formulas ([`sim`]);
//! - TOML-driven experiment configuration and the command-line front end
//!   ([`config`], [`experiments`], [`cli`]).
//!
//! All internal quantities are SI (seconds, bits per second, meters);
//! the configuration layer accepts the more convenient milliseconds and
//! megabits per second and converts on load.

pub mod cli;
pub mod config;
pub mod controller;
pub mod experiments;
pub mod protocol_delay;
pub mod queueing;
pub mod resilience;
pub mod scenario;
pub mod sim;

pub use controller::{decide_servers, ControlPolicy, ControllerConfig};
pub use protocol_delay::{
    total_f1_delay, wire_size, Bound, DelayParams, MessageName, MessageSpec, OverheadStack,
    SecurityProtocol, WireSizeCalibration,
};
pub use queueing::{
    mm1_metrics, nth_ue_delay, queue_step, servers_required, service_rate, Architecture,
    Mm1Metrics, QueueState, ServiceModel,
};
pub use resilience::{
    resilience_score, utility, ResilienceReport, ResilienceWeights, UtilityParams,
};
pub use scenario::StormProfile;
pub use sim::{
    analyze, config_hash, mm1_event_oracle, run, OracleEstimate, SimConfig, SimStep, SimTrace,
};
