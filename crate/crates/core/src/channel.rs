//! Scenario configuration and random channel synthesis.
//!
//! The geometry is 2-D: base stations and the reflecting surface are fixed,
//! users are dropped uniformly in a disk. All uniform linear arrays run
//! along the y-axis with their broadside facing the scene along x, and
//! steering angles are measured from broadside, so
//! `sin(theta) = dy / distance` for a link in the plane.
//!
//! Each random link draws from its own substream derived from the master
//! seed, so a sweep over array sizes (M, N) reuses the exact same path gains
//! and user drops; only the deterministic steering vectors change length.
//! That keeps paired-seed comparisons across sweep values meaningful.

use std::fmt;

use num_complex::Complex64;

use crate::irs_opt::PhaseVector;
use crate::numerics::{CMat, Rng};

// substream tags for per-link random streams
const TAG_USER_POSITIONS: u64 = 0x01;
const TAG_BS_IRS: u64 = 0x02;
const TAG_IRS_USER: u64 = 0x1000;
const TAG_BS_USER: u64 = 0x2000;
/// Reserved for callers drawing random codebook phases (kept distinct from
/// every synthesis stream).
pub const TAG_RANDOM_PHASES: u64 = 0x8000;

/// Configuration error with the offending field spelled out.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field,
        message: message.into(),
    }
}

/// Errors from channel synthesis.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    /// A link of zero length cannot have a path loss.
    ZeroDistance { description: String },
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::ZeroDistance { description } => {
                write!(f, "zero-length link: {description}")
            }
        }
    }
}

impl std::error::Error for ChannelError {}

/// All geometry, radio and algorithm parameters for one experiment.
///
/// Powers are stored in dBm and antenna gains in dBi as configured; the
/// accessors below convert to linear units once, and every consumer works in
/// watts and linear amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of base stations (S).
    pub bs_count: usize,
    /// Number of single-antenna users (K).
    pub user_count: usize,
    /// Antennas per base station (M), must exceed K.
    pub antennas: usize,
    /// Reflecting elements at the surface (N).
    pub irs_elements: usize,
    /// Phase shifter resolution in bits (b); codebook size is 2^b.
    pub phase_bits: u8,
    /// Bandwidth per BS in Hz.
    pub bandwidth_hz: f64,
    /// Noise power in dBm.
    pub noise_power_dbm: f64,
    /// Per-BS transmit power in dBm.
    pub tx_power_dbm: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq_hz: f64,
    /// BS positions in metres.
    pub bs_positions: Vec<[f64; 2]>,
    /// Surface position in metres.
    pub irs_position: [f64; 2],
    /// Index of the IRS-assisted BS (its direct links are blocked).
    pub irs_assisted_bs: usize,
    /// Centre of the user drop disk.
    pub user_region_center: [f64; 2],
    /// Radius of the user drop disk in metres.
    pub user_region_radius: f64,
    /// Number of NLoS paths in the BS-IRS channel (G_p).
    pub nlos_paths: usize,
    /// Path-loss intercept in dB.
    pub kappa_a: f64,
    /// Path-loss exponent.
    pub kappa_b: f64,
    /// Shadowing standard deviation in dB.
    pub sigma_c_db: f64,
    /// Transmit antenna gain in dBi.
    pub xi_t_dbi: f64,
    /// Receive antenna gain in dBi.
    pub xi_r_dbi: f64,
    /// Element spacing over wavelength (d / lambda).
    pub element_spacing_ratio: f64,
    /// Auction bidding increment.
    pub epsilon: f64,
    /// Extra attenuation applied to NLoS paths in dB.
    pub nlos_penalty_db: f64,
    /// Cap on outer alternating iterations.
    pub max_outer_iters: usize,
    /// Cap on fractional-programming rounds per phase optimization.
    pub max_fp_iters: usize,
    /// Relative tolerance for the fractional-programming loop.
    pub fp_tol: f64,
    /// Relative tolerance for the outer alternating loop.
    pub outer_tol: f64,
}

impl ScenarioConfig {
    /// Desk-scale profile: small enough that exhaustive oracles and full
    /// test suites run in seconds. The cell is compact (120 m between BSs,
    /// users spread across a wide angular sector) and lightly loaded
    /// (K = 4 against 8 antennas) so that zero-forcing keeps its spatial
    /// headroom; the 400 m layout with more users needs the paper-scale
    /// 30-antenna arrays for that.
    pub fn desk() -> Self {
        ScenarioConfig {
            bs_count: 2,
            user_count: 4,
            antennas: 8,
            irs_elements: 16,
            phase_bits: 3,
            bandwidth_hz: 100e6,
            noise_power_dbm: -117.0,
            tx_power_dbm: 30.0,
            carrier_freq_hz: 28e9,
            bs_positions: vec![[0.0, 0.0], [120.0, 0.0]],
            irs_position: [60.0, 60.0],
            irs_assisted_bs: 0,
            user_region_center: [60.0, 0.0],
            user_region_radius: 25.0,
            nlos_paths: 5,
            kappa_a: 72.0,
            kappa_b: 2.92,
            sigma_c_db: 4.0,
            xi_t_dbi: 9.82,
            xi_r_dbi: 0.0,
            element_spacing_ratio: 0.5,
            epsilon: 0.2,
            nlos_penalty_db: 10.0,
            max_outer_iters: 20,
            max_fp_iters: 50,
            fp_tol: 1e-4,
            outer_tol: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.bs_count < 1 {
            return Err(cfg_err("bs_count", "need at least one base station"));
        }
        if self.user_count < self.bs_count {
            return Err(cfg_err(
                "user_count",
                format!(
                    "need at least one user per BS: K={} < S={}",
                    self.user_count, self.bs_count
                ),
            ));
        }
        if self.antennas <= self.user_count {
            return Err(cfg_err(
                "antennas",
                format!(
                    "antennas must exceed the user count: M={} <= K={}",
                    self.antennas, self.user_count
                ),
            ));
        }
        if self.irs_elements < 1 {
            return Err(cfg_err("irs_elements", "need at least one element"));
        }
        if self.phase_bits < 1 || self.phase_bits > 16 {
            return Err(cfg_err("phase_bits", "resolution must be in 1..=16 bits"));
        }
        if !(self.epsilon > 0.0) {
            return Err(cfg_err("epsilon", "auction increment must be positive"));
        }
        if self.bs_positions.len() != self.bs_count {
            return Err(cfg_err(
                "bs_positions",
                format!(
                    "expected {} positions, got {}",
                    self.bs_count,
                    self.bs_positions.len()
                ),
            ));
        }
        if self.irs_assisted_bs >= self.bs_count {
            return Err(cfg_err("irs_assisted_bs", "index out of range"));
        }
        if !(self.user_region_radius > 0.0) {
            return Err(cfg_err("user_region_radius", "radius must be positive"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(cfg_err("bandwidth_hz", "bandwidth must be positive"));
        }
        if self.sigma_c_db < 0.0 {
            return Err(cfg_err("sigma_c_db", "shadowing std must be nonnegative"));
        }
        if self.nlos_penalty_db < 0.0 {
            return Err(cfg_err("nlos_penalty_db", "penalty must be nonnegative"));
        }
        if !(self.element_spacing_ratio > 0.0) {
            return Err(cfg_err("element_spacing_ratio", "spacing must be positive"));
        }
        if self.max_outer_iters < 1 || self.max_fp_iters < 1 {
            return Err(cfg_err("max_outer_iters", "iteration caps must be >= 1"));
        }
        if !(self.fp_tol > 0.0) || !(self.outer_tol > 0.0) {
            return Err(cfg_err("fp_tol", "tolerances must be positive"));
        }
        let finite = |x: f64| x.is_finite();
        if !finite(self.noise_power_dbm)
            || !finite(self.tx_power_dbm)
            || !finite(self.carrier_freq_hz)
            || !self.bs_positions.iter().all(|p| finite(p[0]) && finite(p[1]))
            || !finite(self.irs_position[0])
            || !finite(self.irs_position[1])
        {
            return Err(cfg_err("positions", "all powers and positions must be finite"));
        }
        Ok(())
    }

    /// Non-fatal configuration notes (currently only the auction optimality
    /// condition, which is checked but deliberately not enforced).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let bound = 1.0 / self.bs_count as f64;
        if self.epsilon >= bound {
            out.push(format!(
                "epsilon = {} is not below 1/S = {}; the auction keeps its \
                 epsilon-optimality guarantee but may lose exactness on integer rates",
                self.epsilon, bound
            ));
        }
        out
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    pub fn tx_power_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    /// Total transmit power across all BSs, in watts.
    pub fn total_tx_power_watts(&self) -> f64 {
        self.bs_count as f64 * self.tx_power_watts()
    }

    /// Transmit antenna gain as a linear amplitude factor.
    pub fn xi_t_amplitude(&self) -> f64 {
        dbi_to_amplitude(self.xi_t_dbi)
    }

    /// Receive antenna gain as a linear amplitude factor.
    pub fn xi_r_amplitude(&self) -> f64 {
        dbi_to_amplitude(self.xi_r_dbi)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// dBi gains scale power by 10^(dBi/10); channel entries carry the square
/// root as an amplitude factor.
pub fn dbi_to_amplitude(dbi: f64) -> f64 {
    10f64.powf(dbi / 20.0)
}

// ── geometry helpers ────────────────────────────────────────────────────

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Steering angle of the link `from -> to` for a y-aligned ULA at `from`,
/// measured from broadside: sin(theta) = dy / distance.
fn steering_angle(from: [f64; 2], to: [f64; 2]) -> f64 {
    let d = distance(from, to);
    ((to[1] - from[1]) / d).clamp(-1.0, 1.0).asin()
}

// ── sampling operations ─────────────────────────────────────────────────

/// Drop K users uniformly over the configured disk (area-uniform).
pub fn place_users(cfg: &ScenarioConfig, rng: &mut Rng) -> Vec<[f64; 2]> {
    let [cx, cy] = cfg.user_region_center;
    (0..cfg.user_count)
        .map(|_| {
            let r = cfg.user_region_radius * rng.uniform().sqrt();
            let theta = std::f64::consts::TAU * rng.uniform();
            [cx + r * theta.cos(), cy + r * theta.sin()]
        })
        .collect()
}

/// Distance-dependent path loss in dB with log-normal shadowing:
/// kappa_a + 10 * kappa_b * log10(d) + N(0, sigma_c^2).
pub fn pathloss_db(d: f64, rng: &mut Rng, cfg: &ScenarioConfig) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::ZeroDistance {
            description: format!("path loss undefined at distance {d}"),
        });
    }
    let shadow = if cfg.sigma_c_db == 0.0 {
        0.0
    } else {
        cfg.sigma_c_db * rng.standard_normal()
    };
    Ok(cfg.kappa_a + 10.0 * cfg.kappa_b * d.log10() + shadow)
}

/// ULA array response: n-th entry exp(j 2 pi (d/lambda) (n-1) sin(theta)).
pub fn ula_response(n: usize, theta: f64, spacing_ratio: f64) -> Vec<Complex64> {
    let step = std::f64::consts::TAU * spacing_ratio * theta.sin();
    (0..n)
        .map(|i| Complex64::from_polar(1.0, step * i as f64))
        .collect()
}

/// One propagation path of a geometric channel.
#[derive(Debug, Clone, Copy)]
pub struct PathGain {
    pub gain: Complex64,
    pub aoa: f64,
    pub aod: f64,
}

/// Assemble sum_g gain_g * a_N^H(aoa_g) a_M(aod_g): an N x M sum of
/// rank-one terms. Pure; the random wrappers below draw the paths.
pub fn assemble_geometric(paths: &[PathGain], n: usize, m: usize, spacing_ratio: f64) -> CMat {
    let mut out = CMat::zeros(n, m);
    for path in paths {
        let a_n = ula_response(n, path.aoa, spacing_ratio);
        let a_m = ula_response(m, path.aod, spacing_ratio);
        for i in 0..n {
            let left = path.gain * a_n[i].conj();
            for j in 0..m {
                out[(i, j)] += left * a_m[j];
            }
        }
    }
    out
}

/// Draw the BS-IRS geometric channel: one LoS path whose angles follow the
/// deployment geometry plus `nlos_paths` paths with uniform angles, each
/// attenuated by `nlos_penalty_db`. Shadowing is drawn once for the link.
pub fn synth_bs_irs_channel(cfg: &ScenarioConfig, rng: &mut Rng) -> Result<CMat, ChannelError> {
    let bs = cfg.bs_positions[cfg.irs_assisted_bs];
    let irs = cfg.irs_position;
    let d = distance(bs, irs);
    if d == 0.0 {
        return Err(ChannelError::ZeroDistance {
            description: "BS and IRS are co-located".into(),
        });
    }
    let kappa = pathloss_db(d, rng, cfg)?;
    let gain_scale = cfg.xi_t_amplitude() * cfg.xi_r_amplitude();

    let mut paths = Vec::with_capacity(cfg.nlos_paths + 1);
    let los_gain = rng
        .complex_gaussian(10f64.powf(-0.1 * kappa))
        .expect("variance is nonnegative");
    paths.push(PathGain {
        gain: los_gain * gain_scale,
        aoa: steering_angle(irs, bs),
        aod: steering_angle(bs, irs),
    });
    let half_pi = std::f64::consts::FRAC_PI_2;
    for _ in 0..cfg.nlos_paths {
        let aoa = rng.uniform_range(-half_pi, half_pi);
        let aod = rng.uniform_range(-half_pi, half_pi);
        let gain = rng
            .complex_gaussian(10f64.powf(-0.1 * (kappa + cfg.nlos_penalty_db)))
            .expect("variance is nonnegative");
        paths.push(PathGain {
            gain: gain * gain_scale,
            aoa,
            aod,
        });
    }
    Ok(assemble_geometric(
        &paths,
        cfg.irs_elements,
        cfg.antennas,
        cfg.element_spacing_ratio,
    ))
}

/// Single-path channel from an x-aligned ULA at `array_pos` to a user:
/// alpha * xi_t * xi_r * a_len(theta).
fn synth_single_path(
    cfg: &ScenarioConfig,
    array_pos: [f64; 2],
    user_pos: [f64; 2],
    len: usize,
    rng: &mut Rng,
) -> Result<Vec<Complex64>, ChannelError> {
    let d = distance(array_pos, user_pos);
    if d == 0.0 {
        return Err(ChannelError::ZeroDistance {
            description: "user is co-located with the array".into(),
        });
    }
    let kappa = pathloss_db(d, rng, cfg)?;
    let alpha = rng
        .complex_gaussian(10f64.powf(-0.1 * kappa))
        .expect("variance is nonnegative");
    let scale = alpha * cfg.xi_t_amplitude() * cfg.xi_r_amplitude();
    let theta = steering_angle(array_pos, user_pos);
    Ok(ula_response(len, theta, cfg.element_spacing_ratio)
        .into_iter()
        .map(|a| scale * a)
        .collect())
}

/// IRS-to-user channel of length N.
pub fn synth_irs_user_channel(
    cfg: &ScenarioConfig,
    user_pos: [f64; 2],
    rng: &mut Rng,
) -> Result<Vec<Complex64>, ChannelError> {
    synth_single_path(cfg, cfg.irs_position, user_pos, cfg.irs_elements, rng)
}

/// Direct BS-to-user channel of length M.
pub fn synth_bs_user_channel(
    cfg: &ScenarioConfig,
    bs_pos: [f64; 2],
    user_pos: [f64; 2],
    rng: &mut Rng,
) -> Result<Vec<Complex64>, ChannelError> {
    synth_single_path(cfg, bs_pos, user_pos, cfg.antennas, rng)
}

/// Composite reflected channel h_r * diag(e^{j phi}) * G, length M.
pub fn effective_channel(h_r: &[Complex64], phi: &PhaseVector, g: &CMat) -> Vec<Complex64> {
    assert_eq!(h_r.len(), g.rows(), "h_r length must match G rows");
    assert_eq!(phi.len(), g.rows(), "phase count must match G rows");
    let m = g.cols();
    let mut out = vec![Complex64::ZERO; m];
    for n in 0..g.rows() {
        let w = h_r[n] * phi.unit(n);
        let row = g.row(n);
        for j in 0..m {
            out[j] += w * row[j];
        }
    }
    out
}

// ── one full realization ────────────────────────────────────────────────

/// All channels of one random realization.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// BS-IRS channel of the assisted BS, N x M.
    pub g: CMat,
    /// IRS-user channels, one length-N vector per user.
    pub h_r: Vec<Vec<Complex64>>,
    /// Direct BS-user channels indexed [bs][user]; empty vector for the
    /// assisted BS, whose direct links are blocked.
    pub h_d: Vec<Vec<Vec<Complex64>>>,
    /// User drop for this realization.
    pub user_positions: Vec<[f64; 2]>,
}

impl ChannelSet {
    /// Synthesize every channel of a realization from the master seed.
    /// Every link uses its own substream, so the draws for any one link do
    /// not depend on the array sizes of the others.
    pub fn synthesize(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet, ChannelError> {
        let mut pos_rng = Rng::substream(seed, TAG_USER_POSITIONS);
        let user_positions = place_users(cfg, &mut pos_rng);

        let mut g_rng = Rng::substream(seed, TAG_BS_IRS);
        let g = synth_bs_irs_channel(cfg, &mut g_rng)?;

        let mut h_r = Vec::with_capacity(cfg.user_count);
        for (k, &pos) in user_positions.iter().enumerate() {
            let mut rng = Rng::substream(seed, TAG_IRS_USER + k as u64);
            h_r.push(synth_irs_user_channel(cfg, pos, &mut rng)?);
        }

        let mut h_d = Vec::with_capacity(cfg.bs_count);
        for s in 0..cfg.bs_count {
            if s == cfg.irs_assisted_bs {
                h_d.push(Vec::new());
                continue;
            }
            let mut per_user = Vec::with_capacity(cfg.user_count);
            for (k, &pos) in user_positions.iter().enumerate() {
                let mut rng = Rng::substream(seed, TAG_BS_USER + (s as u64) * 4096 + k as u64);
                per_user.push(synth_bs_user_channel(cfg, cfg.bs_positions[s], pos, &mut rng)?);
            }
            h_d.push(per_user);
        }

        Ok(ChannelSet {
            g,
            h_r,
            h_d,
            user_positions,
        })
    }

    /// Channel row seen by user `k` from BS `s`: the reflected composite for
    /// the assisted BS, the direct link otherwise.
    pub fn user_channel(
        &self,
        cfg: &ScenarioConfig,
        phi: &PhaseVector,
        s: usize,
        k: usize,
    ) -> Vec<Complex64> {
        if s == cfg.irs_assisted_bs {
            effective_channel(&self.h_r[k], phi, &self.g)
        } else {
            self.h_d[s][k].clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irs_opt::PhaseVector;
    use crate::numerics::inner;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::desk()
    }

    #[test]
    fn validate_catches_m_le_k() {
        let mut c = cfg();
        c.antennas = c.user_count;
        let err = c.validate().unwrap_err();
        assert_eq!(err.field, "antennas");
    }

    #[test]
    fn warn_on_large_epsilon() {
        let mut c = cfg();
        c.epsilon = 0.6;
        assert_eq!(c.warnings().len(), 1);
        c.epsilon = 0.2;
        assert!(c.warnings().is_empty());
    }

    #[test]
    fn users_degenerate_disk() {
        let mut c = cfg();
        c.user_region_radius = f64::MIN_POSITIVE;
        let mut rng = Rng::new(1);
        for p in place_users(&c, &mut rng) {
            assert!(distance(p, c.user_region_center) < 1e-6);
        }
    }

    #[test]
    fn users_mean_distance_matches_disk_uniformity() {
        // area-uniform disk of radius R has mean center distance 2R/3
        let mut c = cfg();
        c.user_count = 100_000;
        c.antennas = 100_001; // keep M > K for validity, irrelevant here
        c.user_region_radius = 50.0;
        let mut rng = Rng::new(99);
        let mean: f64 = place_users(&c, &mut rng)
            .iter()
            .map(|&p| distance(p, c.user_region_center))
            .sum::<f64>()
            / 100_000.0;
        assert!(
            (mean - 2.0 * 50.0 / 3.0).abs() < 0.5,
            "mean distance {mean}"
        );
    }

    #[test]
    fn users_reproducible() {
        let c = cfg();
        let a = place_users(&c, &mut Rng::new(7));
        let b = place_users(&c, &mut Rng::new(7));
        assert_eq!(a, b);
    }

    #[test]
    fn pathloss_reference_values() {
        let mut c = cfg();
        c.sigma_c_db = 0.0;
        let mut rng = Rng::new(1);
        assert!((pathloss_db(1.0, &mut rng, &c).unwrap() - 72.0).abs() < 1e-12);
        assert!((pathloss_db(100.0, &mut rng, &c).unwrap() - 130.4).abs() < 1e-12);
        assert!(pathloss_db(0.0, &mut rng, &c).is_err());
    }

    #[test]
    fn steering_vector_properties() {
        // boresight -> all ones
        for v in ula_response(5, 0.0, 0.5) {
            assert!((v - Complex64::ONE).norm() < 1e-15);
        }
        // forced half-wavelength endfire: [1, -1]
        let v = ula_response(2, std::f64::consts::FRAC_PI_2, 0.5);
        assert!((v[0] - Complex64::ONE).norm() < 1e-12);
        assert!((v[1] + Complex64::ONE).norm() < 1e-12);
        // unit modulus everywhere
        let mut rng = Rng::new(3);
        for _ in 0..50 {
            let theta = rng.uniform_range(-1.5, 1.5);
            for e in ula_response(16, theta, 0.5) {
                assert!((e.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geometric_assembly_single_path() {
        // one unit-gain path: outer product of steering vectors, Frobenius
        // norm sqrt(N*M)
        let paths = [PathGain {
            gain: Complex64::ONE,
            aoa: 0.3,
            aod: -0.7,
        }];
        let g = assemble_geometric(&paths, 4, 6, 0.5);
        assert!((g.frobenius_norm() - (4.0f64 * 6.0).sqrt()).abs() < 1e-10);
        // rank one: every 2x2 minor vanishes
        for i in 1..4 {
            for j in 1..6 {
                let det = g[(0, 0)] * g[(i, j)] - g[(0, j)] * g[(i, 0)];
                assert!(det.norm() < 1e-12);
            }
        }
        // scaled gain scales the norm linearly
        let paths2 = [PathGain {
            gain: Complex64::new(0.0, 2.5),
            aoa: 0.3,
            aod: -0.7,
        }];
        let g2 = assemble_geometric(&paths2, 4, 6, 0.5);
        assert!((g2.frobenius_norm() - 2.5 * (24.0f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn synthesized_channels_deterministic() {
        let c = cfg();
        let a = ChannelSet::synthesize(&c, 42).unwrap();
        let b = ChannelSet::synthesize(&c, 42).unwrap();
        assert_eq!(a.g, b.g);
        assert_eq!(a.h_r, b.h_r);
        assert_eq!(a.h_d, b.h_d);
        assert_eq!(a.user_positions, b.user_positions);
    }

    #[test]
    fn direct_draws_do_not_depend_on_array_sizes() {
        // same seed, different N: direct-link channels must be identical and
        // the IRS-user path gains must agree elementwise where they overlap
        let mut small = cfg();
        small.irs_elements = 4;
        let mut large = cfg();
        large.irs_elements = 32;
        let a = ChannelSet::synthesize(&small, 5).unwrap();
        let b = ChannelSet::synthesize(&large, 5).unwrap();
        assert_eq!(a.h_d, b.h_d);
        assert_eq!(a.user_positions, b.user_positions);
        for k in 0..small.user_count {
            // first element of a single-path channel is the raw gain
            assert_eq!(a.h_r[k][0], b.h_r[k][0]);
        }
    }

    #[test]
    fn irs_user_norm_matches_single_path_model() {
        // || alpha * xi * a_N || = |alpha| * xi * sqrt(N)
        let c = cfg();
        let set = ChannelSet::synthesize(&c, 11).unwrap();
        let xi = c.xi_t_amplitude() * c.xi_r_amplitude();
        for h in &set.h_r {
            let alpha_amp = h[0].norm() / xi; // entry 0 of the steering vector is 1
            let norm = crate::numerics::norm_sq(h).sqrt();
            assert!((norm - alpha_amp * xi * (c.irs_elements as f64).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn effective_channel_matches_triple_loop() {
        let c = cfg();
        let set = ChannelSet::synthesize(&c, 13).unwrap();
        let mut rng = Rng::new(77);
        let phi = PhaseVector::random(c.irs_elements, c.phase_bits, &mut rng);
        let fast = effective_channel(&set.h_r[0], &phi, &set.g);
        // independent brute-force evaluation of h_r * diag(e^{j phi}) * G
        for (m, &val) in fast.iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for n in 0..c.irs_elements {
                acc += set.h_r[0][n] * phi.unit(n) * set.g[(n, m)];
            }
            assert!((val - acc).norm() < 1e-12);
        }
    }

    #[test]
    fn effective_channel_zero_phases_is_plain_product() {
        let c = cfg();
        let set = ChannelSet::synthesize(&c, 17).unwrap();
        let phi = PhaseVector::all_zero(c.irs_elements, c.phase_bits);
        let eff = effective_channel(&set.h_r[2], &phi, &set.g);
        for (m, &val) in eff.iter().enumerate() {
            let want = inner(&set.h_r[2], &set.g.column(m));
            assert!((val - want).norm() < 1e-12);
        }
    }

    #[test]
    fn effective_channel_norm_invariant_to_global_phase() {
        let mut c = cfg();
        c.phase_bits = 4;
        let set = ChannelSet::synthesize(&c, 19).unwrap();
        let mut rng = Rng::new(5);
        let phi = PhaseVector::random(c.irs_elements, c.phase_bits, &mut rng);
        let base = crate::numerics::norm_sq(&effective_channel(&set.h_r[1], &phi, &set.g));
        for shift in 1..16u32 {
            let shifted = PhaseVector::new(
                phi.indices().iter().map(|&i| (i + shift) % 16).collect(),
                c.phase_bits,
            );
            let rotated = crate::numerics::norm_sq(&effective_channel(&set.h_r[1], &shifted, &set.g));
            assert!((base - rotated).abs() < 1e-9 * base.max(1e-30));
        }
    }

    #[test]
    fn effective_channel_linear_in_h_r() {
        let c = cfg();
        let set = ChannelSet::synthesize(&c, 23).unwrap();
        let phi = PhaseVector::all_zero(c.irs_elements, c.phase_bits);
        let sum: Vec<Complex64> = set.h_r[0]
            .iter()
            .zip(&set.h_r[1])
            .map(|(a, b)| a + b)
            .collect();
        let lhs = effective_channel(&sum, &phi, &set.g);
        let e0 = effective_channel(&set.h_r[0], &phi, &set.g);
        let e1 = effective_channel(&set.h_r[1], &phi, &set.g);
        for m in 0..c.antennas {
            assert!((lhs[m] - (e0[m] + e1[m])).norm() < 1e-12);
        }
    }
}
