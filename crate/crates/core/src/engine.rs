//! Orchestration: the alternating optimization loop, the three reference
//! pipelines, and seeded Monte-Carlo sweeps.
//!
//! One outer iteration optimizes the surface phases for the frozen
//! association and precoder, refreshes the candidate rate matrix, re-runs
//! the auction, and re-derives zero-forcing precoders and rates. The outer
//! objective is not guaranteed monotone (the auction optimizes a proxy), so
//! the loop tracks the best state seen and returns it; the iteration trace
//! ends with the committed state.
//!
//! Trials are paired across methods and sweep values: trial t always runs
//! on seed base + t, and channel synthesis draws per-link substreams, so a
//! method comparison at equal seed sees identical channels.

use std::fmt;

use rayon::prelude::*;

use crate::assoc::{auction_associate, nearest_associate, rssi_associate, AssocError};
use crate::channel::{ChannelError, ChannelSet, ConfigError, ScenarioConfig, TAG_RANDOM_PHASES};
use crate::irs_opt::{
    compute_b_vectors, f6_at_optimal_aux, optimize_phases, IrsOptError, PhaseVector,
};
use crate::numerics::{inner, norm_sq, Rng};
use crate::phy::{
    candidate_rate_matrix, precoders_for, rate_report, sinr_all, AssociationMap, PhyError,
    PrecoderSet, RateReport,
};

#[derive(Debug)]
pub enum EngineError {
    Config(ConfigError),
    Channel(ChannelError),
    Phy(PhyError),
    IrsOpt(IrsOptError),
    Assoc(AssocError),
    /// Repair could not restore a usable precoder.
    RepairFailed(String),
    /// A reported state failed the feasibility audit.
    InvariantViolated(String),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::Config(e) => write!(f, "{e}"),
            EngineError::Channel(e) => write!(f, "{e}"),
            EngineError::Phy(e) => write!(f, "{e}"),
            EngineError::IrsOpt(e) => write!(f, "{e}"),
            EngineError::Assoc(e) => write!(f, "{e}"),
            EngineError::RepairFailed(msg) => write!(f, "association repair failed: {msg}"),
            EngineError::InvariantViolated(msg) => write!(f, "state audit failed: {msg}"),
        }
    }
}

impl std::error::Error for EngineError {}

impl From<ConfigError> for EngineError {
    fn from(e: ConfigError) -> Self {
        EngineError::Config(e)
    }
}
impl From<ChannelError> for EngineError {
    fn from(e: ChannelError) -> Self {
        EngineError::Channel(e)
    }
}
impl From<PhyError> for EngineError {
    fn from(e: PhyError) -> Self {
        EngineError::Phy(e)
    }
}
impl From<IrsOptError> for EngineError {
    fn from(e: IrsOptError) -> Self {
        EngineError::IrsOpt(e)
    }
}
impl From<AssocError> for EngineError {
    fn from(e: AssocError) -> Self {
        EngineError::Assoc(e)
    }
}

// ── methods ─────────────────────────────────────────────────────────────

/// The compared pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Alternating phase optimization and auction association.
    Proposed,
    /// Random phases, strongest-signal association.
    RpbfRssi,
    /// Random phases, nearest-BS association.
    RpbfNbua,
    /// No surface at all; even user split, the blocked BS stays dark.
    NoIrs,
}

impl Method {
    pub fn all() -> [Method; 4] {
        [Method::Proposed, Method::RpbfRssi, Method::RpbfNbua, Method::NoIrs]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::RpbfRssi => "rpbf_rssi",
            Method::RpbfNbua => "rpbf_nbua",
            Method::NoIrs => "no_irs",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "rpbf_rssi" => Ok(Method::RpbfRssi),
            "rpbf_nbua" => Ok(Method::RpbfNbua),
            "no_irs" => Ok(Method::NoIrs),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

// ── iteration trace ─────────────────────────────────────────────────────

/// State summary of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub sum_rate: f64,
    /// Final surrogate value of the phase step (sum of assisted-cell SINRs
    /// at iteration 0, before any phase step has run).
    pub f6_final: f64,
    pub association: Vec<usize>,
    pub phase_fingerprint: u64,
    /// Frobenius-norm-squared of each BS precoder, for power-cap audits.
    pub power_used: Vec<f64>,
}

/// Outer-loop trace. Record 0 is the initial state; if the last iteration
/// is not the best one, a final record re-committing the best state is
/// appended so the trace always ends at the returned state.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

// ── precoder repair ─────────────────────────────────────────────────────

/// Zero-forcing with association repair: on a rank failure at one BS, move
/// its weakest user to the least-loaded other BS (or swap in a strong user
/// if the BS serves only one) and retry. Persistent failure is an error.
fn precoders_with_repair(
    channels: &ChannelSet,
    phi: &PhaseVector,
    assoc: &mut AssociationMap,
    cfg: &ScenarioConfig,
) -> Result<PrecoderSet, EngineError> {
    let attempts = (cfg.bs_count * cfg.user_count).max(4);
    let mut last_err = String::new();
    for _ in 0..attempts {
        match precoders_for(channels, phi, assoc, cfg) {
            Ok(p) => return Ok(p),
            Err(PhyError::RankDeficientBs { bs, source }) => {
                last_err = format!("BS {bs}: {source}");
                repair_rank_failure(channels, phi, assoc, cfg, bs)?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(EngineError::RepairFailed(last_err))
}

fn repair_rank_failure(
    channels: &ChannelSet,
    phi: &PhaseVector,
    assoc: &mut AssociationMap,
    cfg: &ScenarioConfig,
    bs: usize,
) -> Result<(), EngineError> {
    let strength =
        |s: usize, k: usize| -> f64 { norm_sq(&channels.user_channel(cfg, phi, s, k)) };
    let served: Vec<usize> = assoc.served_by(bs).to_vec();
    if served.len() >= 2 {
        // drop the weakest user onto the least-loaded other BS
        let weakest = *served
            .iter()
            .min_by(|&&a, &&b| strength(bs, a).partial_cmp(&strength(bs, b)).unwrap())
            .unwrap();
        let target = (0..cfg.bs_count)
            .filter(|&s| s != bs)
            .min_by_key(|&s| assoc.served_by(s).len())
            .ok_or_else(|| EngineError::RepairFailed("single-BS layout".into()))?;
        assoc.reassign(weakest, target).map_err(EngineError::Phy)?;
    } else {
        // lone degenerate user: swap in the strongest user from a BS that
        // can spare one, then move the degenerate user there
        let lone = served[0];
        let candidate = (0..cfg.user_count)
            .filter(|&k| k != lone && assoc.served_by(assoc.bs_of(k)).len() >= 2)
            .max_by(|&a, &b| strength(bs, a).partial_cmp(&strength(bs, b)).unwrap())
            .ok_or_else(|| EngineError::RepairFailed("no spare user to swap in".into()))?;
        let donor = assoc.bs_of(candidate);
        assoc.reassign(candidate, bs).map_err(EngineError::Phy)?;
        assoc.reassign(lone, donor).map_err(EngineError::Phy)?;
    }
    Ok(())
}

// ── state audit ─────────────────────────────────────────────────────────

/// Verify the feasibility contract of a reported state: codebook phases,
/// one BS per user with every BS loaded (structural in the types, checked
/// anyway), and the per-BS power cap.
pub fn audit_state(
    cfg: &ScenarioConfig,
    assoc: &AssociationMap,
    phi: &PhaseVector,
    precoders: &PrecoderSet,
) -> Result<(), String> {
    let levels = 1u32 << cfg.phase_bits;
    if phi.len() != cfg.irs_elements {
        return Err(format!("phase vector length {} != N {}", phi.len(), cfg.irs_elements));
    }
    if phi.indices().iter().any(|&i| i >= levels) {
        return Err("phase index outside the codebook".into());
    }
    if assoc.user_count() != cfg.user_count || assoc.bs_count() != cfg.bs_count {
        return Err("association shape mismatch".into());
    }
    let mut seen = vec![0usize; cfg.user_count];
    for s in 0..cfg.bs_count {
        if assoc.served_by(s).is_empty() {
            return Err(format!("BS {s} serves no user"));
        }
        for &k in assoc.served_by(s) {
            seen[k] += 1;
        }
    }
    if seen.iter().any(|&n| n != 1) {
        return Err("a user is not served exactly once".into());
    }
    let p = cfg.tx_power_watts();
    for (s, w) in precoders.per_bs.iter().enumerate() {
        let used = w.frobenius_norm().powi(2);
        if used > p * (1.0 + 1e-9) {
            return Err(format!("BS {s} exceeds its power cap: {used} > {p}"));
        }
    }
    Ok(())
}

// ── proposed pipeline ───────────────────────────────────────────────────

/// Alternating optimization of phases and association from a fresh channel
/// realization. Returns the best observed state and the full trace.
pub fn run_alternating(
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<(RateReport, IterationTrace), EngineError> {
    cfg.validate()?;
    let channels = ChannelSet::synthesize(cfg, seed)?;
    let mut phi = PhaseVector::all_zero(cfg.irs_elements, cfg.phase_bits);
    let mut assoc = rssi_associate(&channels, &phi, cfg);
    let mut precoders = precoders_with_repair(&channels, &phi, &mut assoc, cfg)?;

    let evaluate = |assoc: &AssociationMap,
                    phi: &PhaseVector,
                    precoders: &PrecoderSet|
     -> Result<RateReport, EngineError> {
        let sinrs = sinr_all(&channels, phi, assoc, precoders, cfg.noise_watts(), cfg);
        Ok(rate_report(&sinrs, cfg.bandwidth_hz, cfg.total_tx_power_watts())?)
    };

    let initial_f6 = {
        let served = assoc.served_by(cfg.irs_assisted_bs);
        let h_r: Vec<&[num_complex::Complex64]> =
            served.iter().map(|&k| channels.h_r[k].as_slice()).collect();
        let b = compute_b_vectors(&h_r, &channels.g, &precoders.per_bs[cfg.irs_assisted_bs]);
        f6_at_optimal_aux(&b, &phi.units(), cfg.noise_watts())
    };

    let report = evaluate(&assoc, &phi, &precoders)?;
    audit_state(cfg, &assoc, &phi, &precoders).map_err(EngineError::InvariantViolated)?;
    let mut records = vec![IterationRecord {
        iteration: 0,
        sum_rate: report.sum_rate,
        f6_final: initial_f6,
        association: assoc.assignment().to_vec(),
        phase_fingerprint: phi.fingerprint(),
        power_used: precoders
            .per_bs
            .iter()
            .map(|w| w.frobenius_norm().powi(2))
            .collect(),
    }];
    let mut best_report = report.clone();
    let mut best_index = 0usize;
    let mut prev_sum = report.sum_rate;
    let mut converged = false;

    for iteration in 1..=cfg.max_outer_iters {
        // phase step for the frozen association and precoder
        let opt = optimize_phases(
            &channels,
            &precoders.per_bs[cfg.irs_assisted_bs],
            &assoc,
            cfg,
            &phi,
        )?;
        phi = opt.phases;

        // association step on the refreshed candidate rates
        let rates = candidate_rate_matrix(&channels, &phi, cfg);
        let (new_assoc, _) = auction_associate(&rates, cfg.epsilon)?;
        assoc = new_assoc;

        precoders = precoders_with_repair(&channels, &phi, &mut assoc, cfg)?;
        let report = evaluate(&assoc, &phi, &precoders)?;
        audit_state(cfg, &assoc, &phi, &precoders).map_err(EngineError::InvariantViolated)?;

        records.push(IterationRecord {
            iteration,
            sum_rate: report.sum_rate,
            f6_final: opt.f6_final,
            association: assoc.assignment().to_vec(),
            phase_fingerprint: phi.fingerprint(),
            power_used: precoders
                .per_bs
                .iter()
                .map(|w| w.frobenius_norm().powi(2))
                .collect(),
        });
        if report.sum_rate > best_report.sum_rate {
            best_report = report.clone();
            best_index = records.len() - 1;
        }
        let delta = (report.sum_rate - prev_sum).abs();
        if delta <= cfg.outer_tol * prev_sum.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        prev_sum = report.sum_rate;
    }

    // commit the best state as the final record when the loop ended lower
    if best_index != records.len() - 1 {
        let mut commit = records[best_index].clone();
        commit.iteration = records.len();
        records.push(commit);
    }
    Ok((best_report, IterationTrace { records, converged }))
}

// ── baselines ───────────────────────────────────────────────────────────

/// One-shot reference evaluation for the given method on the same channel
/// realization that `run_alternating` would see for this seed.
pub fn run_baseline(
    cfg: &ScenarioConfig,
    seed: u64,
    method: Method,
) -> Result<RateReport, EngineError> {
    cfg.validate()?;
    let channels = ChannelSet::synthesize(cfg, seed)?;
    match method {
        Method::Proposed => Ok(run_alternating(cfg, seed)?.0),
        Method::RpbfRssi | Method::RpbfNbua => {
            let mut rng = Rng::substream(seed, TAG_RANDOM_PHASES);
            let phi = PhaseVector::random(cfg.irs_elements, cfg.phase_bits, &mut rng);
            let mut assoc = if method == Method::RpbfRssi {
                rssi_associate(&channels, &phi, cfg)
            } else {
                nearest_associate(&channels.user_positions, cfg)
            };
            let precoders = precoders_with_repair(&channels, &phi, &mut assoc, cfg)?;
            let sinrs = sinr_all(&channels, &phi, &assoc, &precoders, cfg.noise_watts(), cfg);
            Ok(rate_report(&sinrs, cfg.bandwidth_hz, cfg.total_tx_power_watts())?)
        }
        Method::NoIrs => no_irs_report(cfg, &channels),
    }
}

/// Without the surface the assisted BS has no usable links at all: its
/// users see zero signal and it transmits nothing. There is no association
/// logic: users are ranked by their strongest direct link and dealt
/// round-robin across BSs in index order, so each BS serves an even share.
fn no_irs_report(cfg: &ScenarioConfig, channels: &ChannelSet) -> Result<RateReport, EngineError> {
    let s_count = cfg.bs_count;
    let k_count = cfg.user_count;
    let strength = |s: usize, k: usize| -> f64 {
        if s == cfg.irs_assisted_bs {
            0.0
        } else {
            norm_sq(&channels.h_d[s][k])
        }
    };
    let mut order: Vec<usize> = (0..k_count).collect();
    order.sort_by(|&a, &b| {
        let sa = (0..s_count).map(|s| strength(s, a)).fold(0.0f64, f64::max);
        let sb = (0..s_count).map(|s| strength(s, b)).fold(0.0f64, f64::max);
        sb.partial_cmp(&sa).unwrap().then(a.cmp(&b))
    });
    let mut assignment = vec![usize::MAX; k_count];
    for (rank, &k) in order.iter().enumerate() {
        assignment[k] = rank % s_count;
    }
    let assoc = AssociationMap::from_assignment(assignment, s_count).map_err(EngineError::Phy)?;

    // per-BS evaluation: dark BS contributes zero-SINR users
    let mut sinrs = vec![0.0; k_count];
    for s in 0..s_count {
        if s == cfg.irs_assisted_bs {
            continue;
        }
        let rows: Vec<Vec<num_complex::Complex64>> = assoc
            .served_by(s)
            .iter()
            .map(|&k| channels.h_d[s][k].clone())
            .collect();
        let h = crate::numerics::CMat::from_rows(&rows);
        let w = crate::phy::zf_precoder(&h, cfg.tx_power_watts()).map_err(EngineError::Phy)?;
        let served = assoc.served_by(s);
        for (col_k, &k) in served.iter().enumerate() {
            let hk = &channels.h_d[s][k];
            let signal = inner(hk, &w.column(col_k)).norm_sqr();
            let mut interference = 0.0;
            for (col_j, &j) in served.iter().enumerate() {
                if j != k {
                    interference += inner(hk, &w.column(col_j)).norm_sqr();
                }
            }
            sinrs[k] = signal / (interference + cfg.noise_watts());
        }
    }
    Ok(rate_report(&sinrs, cfg.bandwidth_hz, cfg.total_tx_power_watts())?)
}

// ── Monte-Carlo aggregation ─────────────────────────────────────────────

/// Aggregate statistics of one method over paired trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub method: Method,
    pub mean_sum_rate: f64,
    /// Population standard deviation (zero for a single trial).
    pub std_sum_rate: f64,
    pub mean_energy_efficiency: f64,
}

/// Run `trials` paired trials: trial t evaluates every method on seed
/// base + t. Cells run in parallel and are merged in trial order, so the
/// output is independent of thread count.
pub fn monte_carlo(
    cfg: &ScenarioConfig,
    base_seed: u64,
    trials: usize,
    methods: &[Method],
) -> Result<Vec<MethodStats>, EngineError> {
    assert!(trials >= 1, "need at least one trial");
    let per_trial: Vec<Vec<RateReport>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = base_seed.wrapping_add(t as u64);
            methods
                .iter()
                .map(|&m| run_baseline(cfg, seed, m))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let n = trials as f64;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let rates: Vec<f64> = per_trial.iter().map(|t| t[mi].sum_rate).collect();
            let ees: Vec<f64> = per_trial.iter().map(|t| t[mi].energy_efficiency).collect();
            let mean = rates.iter().sum::<f64>() / n;
            let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
            MethodStats {
                method,
                mean_sum_rate: mean,
                std_sum_rate: var.sqrt(),
                mean_energy_efficiency: ees.iter().sum::<f64>() / n,
            }
        })
        .collect())
}

// ── parameter sweeps ────────────────────────────────────────────────────

/// Sweepable scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Antennas,
    IrsElements,
    TxPowerDbm,
    Users,
    PhaseBits,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Antennas => "M",
            SweepParam::IrsElements => "N",
            SweepParam::TxPowerDbm => "Ps",
            SweepParam::Users => "K",
            SweepParam::PhaseBits => "b",
        }
    }

    /// Derive a config with this parameter set to `value`; integer-valued
    /// parameters reject fractional inputs.
    pub fn apply(&self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, ConfigError> {
        let mut out = cfg.clone();
        let as_count = |field: &'static str| -> Result<usize, ConfigError> {
            if value.fract() != 0.0 || !(1.0..=1e6).contains(&value) {
                Err(ConfigError {
                    field,
                    message: format!("expected a positive integer, got {value}"),
                })
            } else {
                Ok(value as usize)
            }
        };
        match self {
            SweepParam::Antennas => out.antennas = as_count("antennas")?,
            SweepParam::IrsElements => out.irs_elements = as_count("irs_elements")?,
            SweepParam::TxPowerDbm => out.tx_power_dbm = value,
            SweepParam::Users => out.user_count = as_count("user_count")?,
            SweepParam::PhaseBits => out.phase_bits = as_count("phase_bits")? as u8,
        }
        out.validate()?;
        Ok(out)
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "M" => Ok(SweepParam::Antennas),
            "N" => Ok(SweepParam::IrsElements),
            "Ps" => Ok(SweepParam::TxPowerDbm),
            "K" => Ok(SweepParam::Users),
            "b" => Ok(SweepParam::PhaseBits),
            other => Err(format!("unknown sweep parameter `{other}` (expected M|N|Ps|K|b)")),
        }
    }
}

/// One sweep point: derived-config errors are carried, not fatal.
#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<Vec<MethodStats>, String>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

/// Run `monte_carlo` at every sweep value with the same seed schedule.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    trials: usize,
    base_seed: u64,
    methods: &[Method],
) -> SweepResult {
    let rows = values
        .iter()
        .map(|&value| {
            let outcome = param
                .apply(cfg, value)
                .map_err(|e| e.to_string())
                .and_then(|derived| {
                    monte_carlo(&derived, base_seed, trials, methods).map_err(|e| e.to_string())
                });
            SweepRow { value, outcome }
        })
        .collect();
    SweepResult { param, rows }
}
