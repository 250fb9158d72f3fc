//! Named reproduction experiments and parameter sweeps.
//!
//! Each experiment renders a CSV table and a JSON summary from a resolved
//! config. Built-in names cover the analytic load and processing tables,
//! the wire-size rate sweep, the utilization sweep, single storm runs and
//! the fixed-versus-adaptive storm comparison; config files can add or
//! shadow entries with `[[experiment]]` tables.

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentKind, ExperimentSpec, FileConfig};
use crate::controller::ControlPolicy;
use crate::protocol_delay::{
    transmission_delay, wire_size_calibrated, Bound, MessageName, MessageSpec, OverheadStack,
    ProtocolError, SecurityProtocol, WireSizeCalibration,
};
use crate::queueing::{mm1_metrics, service_rate, Architecture};
use crate::resilience::ResilienceReport;
use crate::sim::{analyze, config_hash, run, SimError, SimTrace};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("cannot encode results: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown experiment {0:?}; `list` shows the available names")]
    UnknownExperiment(String),
    #[error(
        "sweep parameter must be one of transmission_rate, rho, proc_time_total, \
         servers, V, W; got {0:?}"
    )]
    UnknownParameter(String),
    #[error("sweep requires at least one value")]
    NoValues,
    #[error("server counts must be positive integers, got {0}")]
    BadServerValue(f64),
}

impl ExperimentError {
    /// True for errors the caller caused with bad input rather than
    /// failures of a valid run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            ExperimentError::Config(_)
                | ExperimentError::UnknownExperiment(_)
                | ExperimentError::UnknownParameter(_)
                | ExperimentError::NoValues
                | ExperimentError::BadServerValue(_)
        )
    }
}

/// Finished artifacts of one experiment.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub name: String,
    pub kind: ExperimentKind,
    pub csv: String,
    pub summary: serde_json::Value,
    /// Resilience score, for experiment kinds that produce one.
    pub p: Option<f64>,
}

/// Utilization levels of the analytic load table.
pub const LOAD_LEVELS: [f64; 4] = [0.1, 0.5, 0.9, 0.95];
/// Total processing times (ms) of the analytic processing table.
pub const PROC_TOTALS_MS: [f64; 4] = [10.0, 30.0, 50.0, 100.0];
/// Arrival rate (UEs/s) the processing table holds constant.
pub const PROC_TABLE_LAMBDA: f64 = 15.0;
/// Link rates (Mbit/s) of the wire-size delay sweep.
pub const RATE_GRID_MBPS: [f64; 7] = [100.0, 250.0, 500.0, 1000.0, 2500.0, 5000.0, 10000.0];

fn rho_grid() -> Vec<f64> {
    (1..=19).map(|i| f64::from(i) * 0.05).collect()
}

fn overrides(text: &str) -> toml::Value {
    toml::from_str(text).expect("builtin override tables parse")
}

/// The storm-comparison members: fixed capacities bracketing the storm
/// and the two adaptive weightings at opposite ends of the
/// quality-versus-cost trade.
pub fn storm_members() -> Vec<ExperimentSpec> {
    let fixed = |name: &str, servers: u32| ExperimentSpec {
        name: name.to_owned(),
        kind: ExperimentKind::StormFigs,
        overrides: overrides(&format!(
            "[service]\nservers = {servers}\n[controller]\nmode = \"fixed\"\n"
        )),
    };
    let adaptive = |name: &str, v: f64, w: f64| ExperimentSpec {
        name: name.to_owned(),
        kind: ExperimentKind::StormFigs,
        overrides: overrides(&format!(
            "[controller]\nmode = \"adaptive\"\nv = {v:.1}\nw = {w:.1}\n"
        )),
    };
    vec![
        fixed("storm-fixed-c1", 1),
        fixed("storm-fixed-c2", 2),
        fixed("storm-fixed-c4", 4),
        fixed("storm-fixed-c6", 6),
        adaptive("storm-adaptive-utility-first", 1000.0, 1.0),
        adaptive("storm-adaptive-cost-averse", 1.0, 1000.0),
    ]
}

/// Experiments available without any config file.
pub fn built_in_experiments() -> Vec<ExperimentSpec> {
    let mut all = vec![
        ExperimentSpec::plain("table5", ExperimentKind::Table5),
        ExperimentSpec::plain("table6", ExperimentKind::Table6),
        ExperimentSpec::plain("table7", ExperimentKind::Table7),
        ExperimentSpec::plain("fig4", ExperimentKind::Fig4),
        ExperimentSpec::plain("fig5", ExperimentKind::Fig5),
        ExperimentSpec::plain("storm", ExperimentKind::StormFigs),
    ];
    all.extend(storm_members());
    all
}

/// All selectable experiments: config-file entries first, then the
/// built-ins they do not shadow.
pub fn available_experiments(cfg: &FileConfig) -> Vec<ExperimentSpec> {
    let mut all = cfg.experiment.clone();
    for builtin in built_in_experiments() {
        if !all.iter().any(|e| e.name == builtin.name) {
            all.push(builtin);
        }
    }
    all
}

/// Looks an experiment up by name, config entries shadowing built-ins.
pub fn find_experiment(cfg: &FileConfig, name: &str) -> Result<ExperimentSpec, ExperimentError> {
    available_experiments(cfg)
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| ExperimentError::UnknownExperiment(name.to_owned()))
}

fn arch_name(arch: Architecture) -> &'static str {
    match arch {
        Architecture::Monolithic => "monolithic",
        Architecture::OpenRan => "open_ran",
    }
}

fn message_name(name: MessageName) -> &'static str {
    match name {
        MessageName::RrcSetupRequest => "rrc_setup_request",
        MessageName::RrcSetup => "rrc_setup",
        MessageName::RrcSetupComplete => "rrc_setup_complete",
    }
}

fn security_name(sec: SecurityProtocol) -> &'static str {
    match sec {
        SecurityProtocol::None => "none",
        SecurityProtocol::Tls => "tls",
        SecurityProtocol::Ipsec => "ipsec",
    }
}

fn policy_name(policy: ControlPolicy) -> &'static str {
    match policy {
        ControlPolicy::Fixed => "fixed",
        ControlPolicy::Adaptive => "adaptive",
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.9e}")
}

fn opt_fmt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Serialize)]
struct Summary<T: Serialize> {
    name: String,
    kind: ExperimentKind,
    config_hash: String,
    effective_config: FileConfig,
    results: T,
}

fn summarize<T: Serialize>(
    name: &str,
    kind: ExperimentKind,
    effective: &FileConfig,
    results: T,
) -> Result<serde_json::Value, ExperimentError> {
    let hash = config_hash(&effective.resolve()?.sim);
    Ok(serde_json::to_value(Summary {
        name: name.to_owned(),
        kind,
        config_hash: hash,
        effective_config: effective.clone(),
        results,
    })?)
}

/// Resolves an experiment's overrides and dispatches on its kind.
pub fn run_experiment(
    base: &FileConfig,
    spec: &ExperimentSpec,
) -> Result<RunArtifacts, ExperimentError> {
    let effective = base.with_overrides(&spec.overrides)?;
    match spec.kind {
        ExperimentKind::Table5 => load_table(&spec.name, &effective),
        ExperimentKind::Table6 => processing_table(&spec.name, &effective),
        ExperimentKind::Table7 => storm_comparison(&spec.name, &effective),
        ExperimentKind::Fig4 => rate_delay_sweep(&spec.name, &effective),
        ExperimentKind::Fig5 => utilization_sweep(&spec.name, &effective),
        ExperimentKind::StormFigs | ExperimentKind::Custom => {
            storm_run(&spec.name, spec.kind, &effective)
        }
    }
}

#[derive(Debug, Serialize)]
struct LoadRow {
    architecture: &'static str,
    mu_per_s: f64,
    rho: f64,
    lambda_per_s: f64,
    l_s: f64,
    w_ms: f64,
}

/// Both deployments at the four reference utilization levels, from the
/// exact analytic formulas.
fn load_table(name: &str, cfg: &FileConfig) -> Result<RunArtifacts, ExperimentError> {
    let params = cfg.delays.to_params();
    let mut rows = Vec::new();
    for arch in [Architecture::Monolithic, Architecture::OpenRan] {
        let mu = service_rate(&params, arch).map_err(SimError::from)?;
        for rho in LOAD_LEVELS {
            let lambda = rho * mu;
            let m = mm1_metrics(lambda, mu).map_err(SimError::from)?;
            rows.push(LoadRow {
                architecture: arch_name(arch),
                mu_per_s: mu,
                rho,
                lambda_per_s: lambda,
                l_s: m.l_s,
                w_ms: m.w_s * 1e3,
            });
        }
    }
    let mut csv = String::from("architecture,mu,rho,lambda,l_s,w_ms\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.architecture,
            fmt(r.mu_per_s),
            fmt(r.rho),
            fmt(r.lambda_per_s),
            fmt(r.l_s),
            fmt(r.w_ms)
        ));
    }
    Ok(RunArtifacts {
        name: name.to_owned(),
        kind: ExperimentKind::Table5,
        csv,
        summary: summarize(name, ExperimentKind::Table5, cfg, rows)?,
        p: None,
    })
}

#[derive(Debug, Serialize)]
struct ProcRow {
    proc_total_ms: f64,
    architecture: &'static str,
    mu_per_s: f64,
    stable: bool,
    /// Metrics from two-decimal rounded rate and utilization, the
    /// precision the published figures carry.
    l_s: Option<f64>,
    w_ms: Option<f64>,
    /// Same metrics without intermediate rounding.
    l_s_exact: Option<f64>,
    w_ms_exact: Option<f64>,
}

/// Performance across total processing times at a constant arrival rate.
/// Published comparison values round the service rate and utilization to
/// two decimals before deriving queue length and delay; the exact columns
/// skip that quantization.
fn processing_table(name: &str, cfg: &FileConfig) -> Result<RunArtifacts, ExperimentError> {
    let base = cfg.delays.to_params();
    let current_total: f64 = base.per_message_processing_s.iter().sum();
    let lambda = PROC_TABLE_LAMBDA;
    let mut rows = Vec::new();
    for total_ms in PROC_TOTALS_MS {
        let scale = total_ms / 1e3 / current_total;
        let mut params = base.clone();
        for t in &mut params.per_message_processing_s {
            *t *= scale;
        }
        for arch in [Architecture::Monolithic, Architecture::OpenRan] {
            let mu = service_rate(&params, arch).map_err(SimError::from)?;
            let mu_q = round2(mu);
            let row = if lambda < mu_q && lambda < mu {
                let rho_q = round2(lambda / mu_q);
                let exact = mm1_metrics(lambda, mu).map_err(SimError::from)?;
                ProcRow {
                    proc_total_ms: total_ms,
                    architecture: arch_name(arch),
                    mu_per_s: mu,
                    stable: true,
                    l_s: Some(rho_q / (1.0 - rho_q)),
                    w_ms: Some(1e3 / (mu_q - lambda)),
                    l_s_exact: Some(exact.l_s),
                    w_ms_exact: Some(exact.w_s * 1e3),
                }
            } else {
                ProcRow {
                    proc_total_ms: total_ms,
                    architecture: arch_name(arch),
                    mu_per_s: mu,
                    stable: false,
                    l_s: None,
                    w_ms: None,
                    l_s_exact: None,
                    w_ms_exact: None,
                }
            };
            rows.push(row);
        }
    }
    let mut csv =
        String::from("proc_total_ms,architecture,mu,stable,l_s,w_ms,l_s_exact,w_ms_exact\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt(r.proc_total_ms),
            r.architecture,
            fmt(r.mu_per_s),
            r.stable,
            opt_fmt(r.l_s),
            opt_fmt(r.w_ms),
            opt_fmt(r.l_s_exact),
            opt_fmt(r.w_ms_exact)
        ));
    }
    Ok(RunArtifacts {
        name: name.to_owned(),
        kind: ExperimentKind::Table6,
        csv,
        summary: summarize(name, ExperimentKind::Table6, cfg, rows)?,
        p: None,
    })
}

#[derive(Debug, Serialize)]
struct StormMemberRow {
    name: String,
    policy: &'static str,
    servers: u32,
    max_servers: u32,
    v: f64,
    w: f64,
    p: f64,
    absorption_ratio: f64,
    adaptation_ratio: f64,
    t_rec: f64,
    recovered: bool,
    peak_queue: f64,
    peak_wait_s: f64,
    config_hash: String,
}

/// Runs every storm-comparison member against this config's scenario.
fn storm_comparison(name: &str, cfg: &FileConfig) -> Result<RunArtifacts, ExperimentError> {
    let mut rows = Vec::new();
    for member in storm_members() {
        let effective = cfg.with_overrides(&member.overrides)?;
        let settings = effective.resolve()?;
        let trace = run(&settings.sim)?;
        let report = analyze(&trace, &settings.sim)?;
        let peak = trace.peak_queue().expect("horizon is at least one step");
        rows.push(StormMemberRow {
            name: member.name,
            policy: policy_name(settings.sim.policy),
            servers: settings.sim.service.servers,
            max_servers: trace.steps.iter().map(|s| s.servers).max().unwrap_or(0),
            v: settings.sim.controller.v,
            w: settings.sim.controller.w,
            p: report.p,
            absorption_ratio: report.absorption_ratio,
            adaptation_ratio: report.adaptation_ratio,
            t_rec: report.t_rec,
            recovered: report.phases.recovered,
            peak_queue: peak.queue_len,
            peak_wait_s: peak.wait_s,
            config_hash: trace.config_hash.clone(),
        });
    }
    let mut csv = String::from(
        "name,policy,servers,max_servers,v,w,p,absorption_ratio,adaptation_ratio,\
         t_rec,recovered,peak_queue,peak_wait_s\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.name,
            r.policy,
            r.servers,
            r.max_servers,
            fmt(r.v),
            fmt(r.w),
            fmt(r.p),
            fmt(r.absorption_ratio),
            fmt(r.adaptation_ratio),
            fmt(r.t_rec),
            r.recovered,
            fmt(r.peak_queue),
            fmt(r.peak_wait_s)
        ));
    }
    Ok(RunArtifacts {
        name: name.to_owned(),
        kind: ExperimentKind::Table7,
        csv,
        summary: summarize(name, ExperimentKind::Table7, cfg, rows)?,
        p: None,
    })
}

#[derive(Debug, Serialize)]
struct SizeDelayRow {
    rate_mbps: f64,
    message: &'static str,
    security: &'static str,
    size_min_bytes: u32,
    size_max_bytes: u32,
    delay_min_us: f64,
    delay_max_us: f64,
}

/// Transmission delay of every message and security wrapping across the
/// link-rate grid. The config picks the IP version and whether sizes are
/// calibrated; all security protocols are swept regardless of the
/// configured one, mirroring the published delay figure.
fn rate_delay_sweep(name: &str, cfg: &FileConfig) -> Result<RunArtifacts, ExperimentError> {
    let settings = cfg.resolve()?;
    let cal = if settings.calibrated {
        WireSizeCalibration::standard()
    } else {
        WireSizeCalibration::none()
    };
    let mut rows = Vec::new();
    for &rate_mbps in &RATE_GRID_MBPS {
        let rate_bps = rate_mbps * 1e6;
        for sec in [
            SecurityProtocol::None,
            SecurityProtocol::Tls,
            SecurityProtocol::Ipsec,
        ] {
            for msg_name in MessageName::ALL {
                let msg = MessageSpec::standard(msg_name);
                let mut stack = OverheadStack::for_message(msg_name);
                stack.ip_bytes = settings.ip_bytes;
                let size_min = wire_size_calibrated(&msg, &stack, sec, Bound::Min, &cal)?;
                let size_max = wire_size_calibrated(&msg, &stack, sec, Bound::Max, &cal)?;
                rows.push(SizeDelayRow {
                    rate_mbps,
                    message: message_name(msg_name),
                    security: security_name(sec),
                    size_min_bytes: size_min,
                    size_max_bytes: size_max,
                    delay_min_us: transmission_delay(size_min, rate_bps)? * 1e6,
                    delay_max_us: transmission_delay(size_max, rate_bps)? * 1e6,
                });
            }
        }
    }
    let mut csv = String::from(
        "rate_mbps,message,security,size_min_bytes,size_max_bytes,delay_min_us,delay_max_us\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt(r.rate_mbps),
            r.message,
            r.security,
            r.size_min_bytes,
            r.size_max_bytes,
            fmt(r.delay_min_us),
            fmt(r.delay_max_us)
        ));
    }
    Ok(RunArtifacts {
        name: name.to_owned(),
        kind: ExperimentKind::Fig4,
        csv,
        summary: summarize(name, ExperimentKind::Fig4, cfg, rows)?,
        p: None,
    })
}

#[derive(Debug, Serialize)]
struct UtilizationRow {
    rho: f64,
    architecture: &'static str,
    lambda_per_s: f64,
    l_s: f64,
    w_ms: f64,
}

/// Mean delay and queue size for both deployments as utilization climbs.
fn utilization_sweep(name: &str, cfg: &FileConfig) -> Result<RunArtifacts, ExperimentError> {
    let params = cfg.delays.to_params();
    let mut rows = Vec::new();
    for rho in rho_grid() {
        for arch in [Architecture::Monolithic, Architecture::OpenRan] {
            let mu = service_rate(&params, arch).map_err(SimError::from)?;
            let lambda = rho * mu;
            let m = mm1_metrics(lambda, mu).map_err(SimError::from)?;
            rows.push(UtilizationRow {
                rho,
                architecture: arch_name(arch),
                lambda_per_s: lambda,
                l_s: m.l_s,
                w_ms: m.w_s * 1e3,
            });
        }
    }
    let mut csv = String::from("rho,architecture,lambda,l_s,w_ms\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(r.rho),
            r.architecture,
            fmt(r.lambda_per_s),
            fmt(r.l_s),
            fmt(r.w_ms)
        ));
    }
    Ok(RunArtifacts {
        name: name.to_owned(),
        kind: ExperimentKind::Fig5,
        csv,
        summary: summarize(name, ExperimentKind::Fig5, cfg, rows)?,
        p: None,
    })
}

#[derive(Debug, Serialize)]
struct StormRunResults {
    architecture: &'static str,
    mu_per_s: f64,
    policy: &'static str,
    baseline_servers: u32,
    max_servers: u32,
    u_des: f64,
    peak_step: u64,
    peak_queue: f64,
    peak_wait_s: f64,
    drained_at_step: Option<u64>,
    report: ResilienceReport,
}

fn storm_results(
    trace: &SimTrace,
    report: &ResilienceReport,
    policy: ControlPolicy,
) -> StormRunResults {
    let peak = trace.peak_queue().expect("horizon is at least one step");
    StormRunResults {
        architecture: arch_name(trace.architecture),
        mu_per_s: trace.mu_per_server,
        policy: policy_name(policy),
        baseline_servers: trace.baseline_servers,
        max_servers: trace.steps.iter().map(|s| s.servers).max().unwrap_or(0),
        u_des: trace.u_des,
        peak_step: peak.t,
        peak_queue: peak.queue_len,
        peak_wait_s: peak.wait_s,
        drained_at_step: trace.first_empty_after(peak.t),
        report: *report,
    }
}

/// One simulation of the configured scenario: full step trace as CSV,
/// peak and resilience summary as JSON.
fn storm_run(
    name: &str,
    kind: ExperimentKind,
    cfg: &FileConfig,
) -> Result<RunArtifacts, ExperimentError> {
    let settings = cfg.resolve()?;
    let trace = run(&settings.sim)?;
    let report = analyze(&trace, &settings.sim)?;
    let results = storm_results(&trace, &report, settings.sim.policy);
    Ok(RunArtifacts {
        name: name.to_owned(),
        kind,
        csv: trace.to_csv(),
        summary: summarize(name, kind, cfg, results)?,
        p: Some(report.p),
    })
}

/// Parameters [`sweep`] can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Link rate in Mbit/s; reports per-message transmission delays.
    TransmissionRate,
    /// M/M/1 utilization of the configured deployment.
    Rho,
    /// Total processing time in ms, split across messages as configured.
    ProcTimeTotal,
    /// Fixed server count on the configured storm.
    Servers,
    /// Adaptive utility weight on the configured storm.
    V,
    /// Adaptive server-cost weight on the configured storm.
    W,
}

impl std::str::FromStr for SweepParameter {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transmission_rate" => Ok(Self::TransmissionRate),
            "rho" => Ok(Self::Rho),
            "proc_time_total" => Ok(Self::ProcTimeTotal),
            "servers" => Ok(Self::Servers),
            "V" | "v" => Ok(Self::V),
            "W" | "w" => Ok(Self::W),
            other => Err(ExperimentError::UnknownParameter(other.to_owned())),
        }
    }
}

fn positive_integer(value: f64) -> Result<u32, ExperimentError> {
    if value.fract() != 0.0 || value < 1.0 || value > f64::from(u32::MAX) {
        return Err(ExperimentError::BadServerValue(value));
    }
    Ok(value as u32)
}

fn storm_sweep_row(cfg: &FileConfig, value: f64) -> Result<String, ExperimentError> {
    let settings = cfg.resolve()?;
    let trace = run(&settings.sim)?;
    let report = analyze(&trace, &settings.sim)?;
    let peak = trace.peak_queue().expect("horizon is at least one step");
    let max_servers = trace.steps.iter().map(|s| s.servers).max().unwrap_or(0);
    Ok(format!(
        "{},{},{},{},{},{}\n",
        fmt(value),
        fmt(peak.queue_len),
        fmt(peak.wait_s),
        max_servers,
        trace
            .first_empty_after(peak.t)
            .map(|t| t.to_string())
            .unwrap_or_default(),
        fmt(report.p)
    ))
}

/// Reruns the config while varying one parameter; one CSV row per value.
pub fn sweep(
    base: &FileConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<String, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::NoValues);
    }
    let mut csv = String::new();
    match parameter {
        SweepParameter::TransmissionRate => {
            csv.push_str(
                "transmission_rate_mbps,d_t_setup_request_max_us,d_t_setup_max_us,\
                 d_t_setup_complete_max_us,d_t_total_max_us\n",
            );
            for &rate_mbps in values {
                let mut cfg = base.clone();
                cfg.delays.transmission_rate_mbps = rate_mbps;
                let settings = cfg.resolve()?;
                let cal = if settings.calibrated {
                    WireSizeCalibration::standard()
                } else {
                    WireSizeCalibration::none()
                };
                let mut delays_us = Vec::with_capacity(3);
                for msg_name in MessageName::ALL {
                    let msg = MessageSpec::standard(msg_name);
                    let mut stack = OverheadStack::for_message(msg_name);
                    stack.ip_bytes = settings.ip_bytes;
                    let size =
                        wire_size_calibrated(&msg, &stack, settings.security, Bound::Max, &cal)?;
                    delays_us.push(
                        transmission_delay(size, settings.delay_params.transmission_rate_bps)?
                            * 1e6,
                    );
                }
                let total: f64 = delays_us.iter().sum();
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt(rate_mbps),
                    fmt(delays_us[0]),
                    fmt(delays_us[1]),
                    fmt(delays_us[2]),
                    fmt(total)
                ));
            }
        }
        SweepParameter::Rho => {
            csv.push_str("rho,lambda,l_s,w_ms\n");
            let settings = base.resolve()?;
            let mu = settings.sim.service.mu_per_server;
            for &rho in values {
                let lambda = rho * mu;
                let m = mm1_metrics(lambda, mu).map_err(SimError::from)?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt(rho),
                    fmt(lambda),
                    fmt(m.l_s),
                    fmt(m.w_s * 1e3)
                ));
            }
        }
        SweepParameter::ProcTimeTotal => {
            csv.push_str("proc_time_total_ms,mu,stable,l_s,w_ms\n");
            for &total_ms in values {
                let mut cfg = base.clone();
                let current: f64 = cfg.delays.per_message_processing_ms.iter().sum();
                let scale = total_ms / current;
                for t in &mut cfg.delays.per_message_processing_ms {
                    *t *= scale;
                }
                let settings = cfg.resolve()?;
                let mu = settings.sim.service.mu_per_server;
                let lambda = settings.sim.profile.lambda_normal;
                match mm1_metrics(lambda, mu) {
                    Ok(m) => csv.push_str(&format!(
                        "{},{},true,{},{}\n",
                        fmt(total_ms),
                        fmt(mu),
                        fmt(m.l_s),
                        fmt(m.w_s * 1e3)
                    )),
                    Err(_) => csv.push_str(&format!("{},{},false,,\n", fmt(total_ms), fmt(mu))),
                }
            }
        }
        SweepParameter::Servers => {
            csv.push_str("servers,peak_queue,peak_wait_s,max_servers,drained_at_step,p\n");
            for &value in values {
                let servers = positive_integer(value)?;
                let mut cfg = base.clone();
                cfg.service.servers = servers;
                cfg.controller.mode = ControlPolicy::Fixed;
                csv.push_str(&storm_sweep_row(&cfg, value)?);
            }
        }
        SweepParameter::V => {
            csv.push_str("v,peak_queue,peak_wait_s,max_servers,drained_at_step,p\n");
            for &value in values {
                let mut cfg = base.clone();
                cfg.controller.v = value;
                cfg.controller.mode = ControlPolicy::Adaptive;
                csv.push_str(&storm_sweep_row(&cfg, value)?);
            }
        }
        SweepParameter::W => {
            csv.push_str("w,peak_queue,peak_wait_s,max_servers,drained_at_step,p\n");
            for &value in values {
                let mut cfg = base.clone();
                cfg.controller.w = value;
                cfg.controller.mode = ControlPolicy::Adaptive;
                csv.push_str(&storm_sweep_row(&cfg, value)?);
            }
        }
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within(published: f64, computed: f64, rel: f64) -> bool {
        (computed - published).abs() / published.abs() <= rel
    }

    fn get_rows(summary: &serde_json::Value) -> &Vec<serde_json::Value> {
        summary["results"].as_array().expect("results array")
    }

    #[test]
    fn load_table_matches_the_published_operating_points() {
        let cfg = FileConfig::default();
        let spec = find_experiment(&cfg, "table5").unwrap();
        let art = run_experiment(&cfg, &spec).unwrap();
        let rows = get_rows(&art.summary);
        assert_eq!(rows.len(), 8);
        let half = &rows[1];
        assert_eq!(half["architecture"], "monolithic");
        assert!(within(16.26, half["lambda_per_s"].as_f64().unwrap(), 0.005));
        assert!(within(1.0, half["l_s"].as_f64().unwrap(), 0.005));
        assert!(within(61.50, half["w_ms"].as_f64().unwrap(), 0.005));
        let open_peak = &rows[7];
        assert_eq!(open_peak["architecture"], "open_ran");
        assert!(within(705.0, open_peak["w_ms"].as_f64().unwrap(), 0.005));
    }

    #[test]
    fn processing_table_flags_the_unstable_row() {
        let cfg = FileConfig::default();
        let spec = find_experiment(&cfg, "table6").unwrap();
        let art = run_experiment(&cfg, &spec).unwrap();
        let rows = get_rows(&art.summary);
        assert_eq!(rows.len(), 8);
        let mono50 = rows
            .iter()
            .find(|r| r["proc_total_ms"] == 50.0 && r["architecture"] == "monolithic")
            .unwrap();
        assert!(within(212.76, mono50["w_ms"].as_f64().unwrap(), 0.005));
        assert!(within(3.17, mono50["l_s"].as_f64().unwrap(), 0.005));
        for r in rows.iter().filter(|r| r["proc_total_ms"] == 100.0) {
            assert_eq!(r["stable"], false);
            assert!(r["w_ms"].is_null());
        }
        assert!(art.csv.contains(",false,,,,"));
    }

    #[test]
    fn storm_comparison_covers_all_members() {
        let cfg = FileConfig::default();
        let spec = find_experiment(&cfg, "table7").unwrap();
        let art = run_experiment(&cfg, &spec).unwrap();
        let rows = get_rows(&art.summary);
        assert_eq!(rows.len(), 6);
        let names: Vec<_> = rows.iter().map(|r| r["name"].as_str().unwrap()).collect();
        assert_eq!(names[0], "storm-fixed-c1");
        assert_eq!(names[5], "storm-adaptive-cost-averse");
        for r in rows {
            let p = r["p"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn storm_run_emits_the_step_trace() {
        let cfg = FileConfig::default();
        let spec = find_experiment(&cfg, "storm").unwrap();
        let art = run_experiment(&cfg, &spec).unwrap();
        assert!(art.csv.starts_with("t,lambda,c,queue_len,wait_s,utility\n"));
        assert_eq!(art.csv.lines().count(), 601);
        assert!(art.p.is_some());
        assert_eq!(art.summary["results"]["policy"], "fixed");
    }

    #[test]
    fn storm_member_lookup_and_overrides_work() {
        let cfg = FileConfig::default();
        let spec = find_experiment(&cfg, "storm-fixed-c4").unwrap();
        let art = run_experiment(&cfg, &spec).unwrap();
        assert_eq!(art.summary["results"]["baseline_servers"], 4);
        assert!(matches!(
            find_experiment(&cfg, "no-such-thing"),
            Err(ExperimentError::UnknownExperiment(_))
        ));
    }

    #[test]
    fn config_experiments_shadow_builtins() {
        let mut cfg = FileConfig::default();
        cfg.experiment.push(ExperimentSpec {
            name: "storm".into(),
            kind: ExperimentKind::Custom,
            overrides: overrides("[service]\nservers = 3\n"),
        });
        let spec = find_experiment(&cfg, "storm").unwrap();
        assert_eq!(spec.kind, ExperimentKind::Custom);
        let available = available_experiments(&cfg);
        assert_eq!(available.iter().filter(|e| e.name == "storm").count(), 1);
    }

    #[test]
    fn rate_sweep_covers_messages_and_wrappings() {
        let cfg = FileConfig::default();
        let spec = find_experiment(&cfg, "fig4").unwrap();
        let art = run_experiment(&cfg, &spec).unwrap();
        let rows = get_rows(&art.summary);
        assert_eq!(rows.len(), RATE_GRID_MBPS.len() * 3 * 3);
        let gbit = rows
            .iter()
            .find(|r| {
                r["rate_mbps"] == 1000.0
                    && r["message"] == "rrc_setup_request"
                    && r["security"] == "tls"
            })
            .unwrap();
        assert_eq!(gbit["size_max_bytes"], 139);
        assert!(within(1.112, gbit["delay_max_us"].as_f64().unwrap(), 1e-6));
    }

    #[test]
    fn sweep_rho_reproduces_the_published_delay_column() {
        let base =
            crate::config::from_toml_str("[service]\narchitecture = \"monolithic\"\n").unwrap();
        let csv = sweep(&base, SweepParameter::Rho, &[0.1, 0.5, 0.9, 0.95]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        let w_ms: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        for (got, want) in w_ms.iter().zip([34.16, 61.50, 307.7, 613.5]) {
            assert!(within(want, *got, 0.005), "{got} vs {want}");
        }
    }

    #[test]
    fn sweep_servers_shrinks_the_peak() {
        let base = FileConfig::default();
        let csv = sweep(&base, SweepParameter::Servers, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        let peaks: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let base = FileConfig::default();
        assert!(matches!(
            sweep(&base, SweepParameter::Servers, &[]),
            Err(ExperimentError::NoValues)
        ));
        assert!(matches!(
            sweep(&base, SweepParameter::Servers, &[2.5]),
            Err(ExperimentError::BadServerValue(_))
        ));
        assert!(matches!(
            "queue_depth".parse::<SweepParameter>(),
            Err(ExperimentError::UnknownParameter(_))
        ));
    }
}
