//! JSON configuration document: the scenario fields plus CLI-only extras.

use serde::{Deserialize, Serialize};
use simirs_core::ScenarioConfig;

/// One convergence-figure variant: the trace is re-run with these overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceVariant {
    pub user_count: usize,
    pub phase_bits: u8,
}

/// On-disk configuration. Field names mirror the scenario parameters;
/// powers are dBm and antenna gains dBi, converted once at load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub bs_count: usize,
    pub user_count: usize,
    pub antennas: usize,
    pub irs_elements: usize,
    pub phase_bits: u8,
    pub bandwidth_hz: f64,
    pub noise_power_dbm: f64,
    pub tx_power_dbm: f64,
    pub carrier_freq_hz: f64,
    pub bs_positions: Vec<[f64; 2]>,
    pub irs_position: [f64; 2],
    pub irs_assisted_bs: usize,
    pub user_region_center: [f64; 2],
    pub user_region_radius: f64,
    pub nlos_paths: usize,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub sigma_c_db: f64,
    pub xi_t_dbi: f64,
    pub xi_r_dbi: f64,
    pub element_spacing_ratio: f64,
    pub epsilon: f64,
    pub nlos_penalty_db: f64,
    pub max_outer_iters: usize,
    pub max_fp_iters: usize,
    pub fp_tol: f64,
    pub outer_tol: f64,
    /// Optional list of (K, b) overrides for the convergence command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_variants: Option<Vec<ConvergenceVariant>>,
}

impl ConfigDoc {
    pub fn to_scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            bs_count: self.bs_count,
            user_count: self.user_count,
            antennas: self.antennas,
            irs_elements: self.irs_elements,
            phase_bits: self.phase_bits,
            bandwidth_hz: self.bandwidth_hz,
            noise_power_dbm: self.noise_power_dbm,
            tx_power_dbm: self.tx_power_dbm,
            carrier_freq_hz: self.carrier_freq_hz,
            bs_positions: self.bs_positions.clone(),
            irs_position: self.irs_position,
            irs_assisted_bs: self.irs_assisted_bs,
            user_region_center: self.user_region_center,
            user_region_radius: self.user_region_radius,
            nlos_paths: self.nlos_paths,
            kappa_a: self.kappa_a,
            kappa_b: self.kappa_b,
            sigma_c_db: self.sigma_c_db,
            xi_t_dbi: self.xi_t_dbi,
            xi_r_dbi: self.xi_r_dbi,
            element_spacing_ratio: self.element_spacing_ratio,
            epsilon: self.epsilon,
            nlos_penalty_db: self.nlos_penalty_db,
            max_outer_iters: self.max_outer_iters,
            max_fp_iters: self.max_fp_iters,
            fp_tol: self.fp_tol,
            outer_tol: self.outer_tol,
        }
    }

    /// Variants for the convergence traces; defaults to the config's own
    /// user count and resolution.
    pub fn variants(&self) -> Vec<ConvergenceVariant> {
        self.convergence_variants.clone().unwrap_or_else(|| {
            vec![ConvergenceVariant {
                user_count: self.user_count,
                phase_bits: self.phase_bits,
            }]
        })
    }
}
