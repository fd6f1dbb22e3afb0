//! Shared scenario builders for the benchmarks.

use simirs_core::channel::{ChannelSet, ScenarioConfig};
use simirs_core::irs_opt::PhaseVector;
use simirs_core::phy::{precoders_for, AssociationMap, PrecoderSet};

/// Desk-scale scenario with one synthesized realization and its zero-phase
/// precoders, ready to drive individual stages.
pub struct BenchScenario {
    pub cfg: ScenarioConfig,
    pub channels: ChannelSet,
    pub assoc: AssociationMap,
    pub phi: PhaseVector,
    pub precoders: PrecoderSet,
}

pub fn desk_scenario(seed: u64) -> BenchScenario {
    let cfg = ScenarioConfig::desk();
    let channels = ChannelSet::synthesize(&cfg, seed).expect("synthesis");
    let assoc = simirs_core::assoc::rssi_associate(
        &channels,
        &PhaseVector::all_zero(cfg.irs_elements, cfg.phase_bits),
        &cfg,
    );
    let phi = PhaseVector::all_zero(cfg.irs_elements, cfg.phase_bits);
    let precoders = precoders_for(&channels, &phi, &assoc, &cfg).expect("precoders");
    BenchScenario {
        cfg,
        channels,
        assoc,
        phi,
        precoders,
    }
}

/// Paper-scale configuration (heavier arrays) for the synthesis benchmark.
pub fn paper_scale_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::desk();
    cfg.user_count = 10;
    cfg.antennas = 30;
    cfg.irs_elements = 60;
    cfg.phase_bits = 8;
    cfg.bs_positions = vec![[0.0, 0.0], [400.0, 0.0]];
    cfg.irs_position = [200.0, 30.0];
    cfg.user_region_center = [200.0, 0.0];
    cfg.user_region_radius = 50.0;
    cfg.sigma_c_db = 8.7;
    cfg
}
