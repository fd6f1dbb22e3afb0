//! System-performance arithmetic: zero-forcing precoding, SINR, rates,
//! candidate rate matrix for the association step, energy efficiency.

use std::fmt;

use num_complex::Complex64;

use crate::channel::{ChannelSet, ScenarioConfig};
use crate::irs_opt::PhaseVector;
use crate::numerics::{inner, norm_sq, pseudo_inverse, CMat, NumericsError};

#[derive(Debug, Clone, PartialEq)]
pub enum PhyError {
    /// A BS channel matrix lost row rank; carries the BS index for repair.
    RankDeficientBs { bs: usize, source: NumericsError },
    /// Association that violates the one-BS-per-user / nonempty-BS contract.
    InvalidAssociation(String),
    /// Non-positive power or other bad argument.
    BadArgument(String),
}

impl fmt::Display for PhyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhyError::RankDeficientBs { bs, source } => {
                write!(f, "rank-deficient channel matrix at BS {bs}: {source}")
            }
            PhyError::InvalidAssociation(msg) => write!(f, "invalid association: {msg}"),
            PhyError::BadArgument(msg) => write!(f, "bad argument: {msg}"),
        }
    }
}

impl std::error::Error for PhyError {}

// ── association map ─────────────────────────────────────────────────────

/// Complete user-to-BS assignment: every user on exactly one BS, every BS
/// serving at least one user. Served sets are kept in ascending user order,
/// which also fixes precoder column order.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMap {
    assignment: Vec<usize>,
    served: Vec<Vec<usize>>,
}

impl AssociationMap {
    pub fn from_assignment(assignment: Vec<usize>, bs_count: usize) -> Result<Self, PhyError> {
        let mut served = vec![Vec::new(); bs_count];
        for (k, &s) in assignment.iter().enumerate() {
            if s >= bs_count {
                return Err(PhyError::InvalidAssociation(format!(
                    "user {k} assigned to nonexistent BS {s}"
                )));
            }
            served[s].push(k);
        }
        for (s, q) in served.iter().enumerate() {
            if q.is_empty() {
                return Err(PhyError::InvalidAssociation(format!("BS {s} serves no user")));
            }
        }
        Ok(AssociationMap { assignment, served })
    }

    pub fn user_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn bs_count(&self) -> usize {
        self.served.len()
    }

    /// Serving BS of user `k`.
    pub fn bs_of(&self, k: usize) -> usize {
        self.assignment[k]
    }

    /// Users served by BS `s`, ascending.
    pub fn served_by(&self, s: usize) -> &[usize] {
        &self.served[s]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Move user `k` to BS `to`, keeping the donor nonempty.
    pub fn reassign(&mut self, k: usize, to: usize) -> Result<(), PhyError> {
        let from = self.assignment[k];
        if from == to {
            return Ok(());
        }
        if self.served[from].len() == 1 {
            return Err(PhyError::InvalidAssociation(format!(
                "cannot move the last user off BS {from}"
            )));
        }
        self.served[from].retain(|&u| u != k);
        self.assignment[k] = to;
        let pos = self.served[to].partition_point(|&u| u < k);
        self.served[to].insert(pos, k);
        Ok(())
    }
}

// ── rate matrix ─────────────────────────────────────────────────────────

/// Dense S x K matrix of real coefficients (rates, strengths, scores).
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    bs_count: usize,
    user_count: usize,
    values: Vec<f64>,
}

impl RateMatrix {
    pub fn new(bs_count: usize, user_count: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), bs_count * user_count);
        RateMatrix {
            bs_count,
            user_count,
            values,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let s = rows.len();
        let k = if s == 0 { 0 } else { rows[0].len() };
        let mut values = Vec::with_capacity(s * k);
        for row in rows {
            assert_eq!(row.len(), k);
            values.extend_from_slice(row);
        }
        RateMatrix {
            bs_count: s,
            user_count: k,
            values,
        }
    }

    pub fn bs_count(&self) -> usize {
        self.bs_count
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    pub fn at(&self, s: usize, k: usize) -> f64 {
        self.values[s * self.user_count + k]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Total value of an assignment under this matrix.
    pub fn total(&self, assoc: &AssociationMap) -> f64 {
        assoc
            .assignment()
            .iter()
            .enumerate()
            .map(|(k, &s)| self.at(s, k))
            .sum()
    }
}

// ── precoders ───────────────────────────────────────────────────────────

/// Per-BS precoding matrices; column order matches the served set.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub per_bs: Vec<CMat>,
}

/// Zero-forcing precoder for one BS: W = c * H+ with c chosen so that
/// ||W||_F^2 = P exactly. H*W is then a positive multiple of the identity,
/// so intra-cell streams are nulled.
pub fn zf_precoder(h: &CMat, power_watts: f64) -> Result<CMat, PhyError> {
    if !(power_watts > 0.0) {
        return Err(PhyError::BadArgument(format!(
            "transmit power must be positive, got {power_watts}"
        )));
    }
    let pinv = pseudo_inverse(h).map_err(|source| PhyError::RankDeficientBs { bs: 0, source })?;
    let scale = power_watts.sqrt() / pinv.frobenius_norm();
    Ok(pinv.scale(Complex64::new(scale, 0.0)))
}

/// Build ZF precoders for every BS under the given association and phases.
pub fn precoders_for(
    channels: &ChannelSet,
    phi: &PhaseVector,
    assoc: &AssociationMap,
    cfg: &ScenarioConfig,
) -> Result<PrecoderSet, PhyError> {
    let mut per_bs = Vec::with_capacity(cfg.bs_count);
    for s in 0..cfg.bs_count {
        let rows: Vec<Vec<Complex64>> = assoc
            .served_by(s)
            .iter()
            .map(|&k| channels.user_channel(cfg, phi, s, k))
            .collect();
        let h = CMat::from_rows(&rows);
        let w = zf_precoder(&h, cfg.tx_power_watts()).map_err(|e| match e {
            PhyError::RankDeficientBs { source, .. } => PhyError::RankDeficientBs { bs: s, source },
            other => other,
        })?;
        per_bs.push(w);
    }
    Ok(PrecoderSet { per_bs })
}

// ── SINR and rates ──────────────────────────────────────────────────────

/// Per-user SINR under the current association and precoders. Interference
/// is intra-cell only; neighbouring BSs occupy orthogonal bands.
pub fn sinr_all(
    channels: &ChannelSet,
    phi: &PhaseVector,
    assoc: &AssociationMap,
    precoders: &PrecoderSet,
    noise_watts: f64,
    cfg: &ScenarioConfig,
) -> Vec<f64> {
    let mut out = vec![0.0; assoc.user_count()];
    for s in 0..assoc.bs_count() {
        let served = assoc.served_by(s);
        let w = &precoders.per_bs[s];
        for (col_k, &k) in served.iter().enumerate() {
            let h = channels.user_channel(cfg, phi, s, k);
            let signal = inner(&h, &w.column(col_k)).norm_sqr();
            let mut interference = 0.0;
            for (col_j, &j) in served.iter().enumerate() {
                if j != k {
                    interference += inner(&h, &w.column(col_j)).norm_sqr();
                }
            }
            out[k] = signal / (interference + noise_watts);
        }
    }
    out
}

/// Per-user and aggregate rate figures for one system state.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Linear SINR per user.
    pub sinr: Vec<f64>,
    /// Achievable rate per user in bit/s.
    pub rate: Vec<f64>,
    /// Total rate in bit/s.
    pub sum_rate: f64,
    /// Sum rate divided by total transmit power, bit/s/W.
    pub energy_efficiency: f64,
}

pub fn rate_report(
    sinrs: &[f64],
    bandwidth_hz: f64,
    total_tx_power_watts: f64,
) -> Result<RateReport, PhyError> {
    if !(total_tx_power_watts > 0.0) {
        return Err(PhyError::BadArgument(format!(
            "total transmit power must be positive, got {total_tx_power_watts}"
        )));
    }
    debug_assert!(sinrs.iter().all(|&g| g >= 0.0));
    let rate: Vec<f64> = sinrs
        .iter()
        .map(|&g| bandwidth_hz * (1.0 + g).log2())
        .collect();
    let sum_rate = rate.iter().sum();
    Ok(RateReport {
        sinr: sinrs.to_vec(),
        rate,
        sum_rate,
        energy_efficiency: sum_rate / total_tx_power_watts,
    })
}

/// Interference-free equal-load rate proxy used as the constant auction
/// coefficients: R[s][k] = B log2(1 + (P/ceil(K/S)) ||h_k^s||^2 / sigma^2).
pub fn candidate_rate_matrix(
    channels: &ChannelSet,
    phi: &PhaseVector,
    cfg: &ScenarioConfig,
) -> RateMatrix {
    let equal_load = cfg.user_count.div_ceil(cfg.bs_count) as f64;
    let power_share = cfg.tx_power_watts() / equal_load;
    let noise = cfg.noise_watts();
    let mut values = Vec::with_capacity(cfg.bs_count * cfg.user_count);
    for s in 0..cfg.bs_count {
        for k in 0..cfg.user_count {
            let h = channels.user_channel(cfg, phi, s, k);
            let snr = power_share * norm_sq(&h) / noise;
            values.push(cfg.bandwidth_hz * (1.0 + snr).log2());
        }
    }
    RateMatrix::new(cfg.bs_count, cfg.user_count, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSet;
    use crate::numerics::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn association_invariants() {
        let a = AssociationMap::from_assignment(vec![0, 1, 1, 0], 2).unwrap();
        assert_eq!(a.served_by(0), &[0, 3]);
        assert_eq!(a.served_by(1), &[1, 2]);
        assert!(AssociationMap::from_assignment(vec![0, 0], 2).is_err());
        assert!(AssociationMap::from_assignment(vec![0, 5], 2).is_err());
    }

    #[test]
    fn reassign_keeps_order_and_nonemptiness() {
        let mut a = AssociationMap::from_assignment(vec![0, 1, 1, 0], 2).unwrap();
        a.reassign(1, 0).unwrap();
        assert_eq!(a.served_by(0), &[0, 1, 3]);
        assert_eq!(a.served_by(1), &[2]);
        assert!(a.reassign(2, 0).is_err(), "would empty BS 1");
    }

    #[test]
    fn zf_single_user_is_matched_filter() {
        // one user with a unit-norm channel, P = 1 W: w = h^H and |h w|^2 = 1
        let h = CMat::from_vec(1, 4, vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let w = zf_precoder(&h, 1.0).unwrap();
        let gain = inner(h.row(0), &w.column(0));
        assert!((gain.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((w.frobenius_norm().powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zf_orthonormal_rows() {
        let h = CMat::from_vec(
            2,
            4,
            vec![
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        let w = zf_precoder(&h, 2.0).unwrap();
        let prod = h.mul(&w);
        // H W = I on the diagonal (unit streams), zero off-diagonal
        assert!((prod[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((prod[(1, 1)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(prod[(0, 1)].norm() < 1e-14 && prod[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn zf_nulling_and_power_on_random_instances() {
        let mut rng = Rng::new(31);
        for _ in 0..25 {
            let data: Vec<_> = (0..3 * 8).map(|_| rng.complex_gaussian(1.0).unwrap()).collect();
            let h = CMat::from_vec(3, 8, data);
            let p = 2.5;
            let w = zf_precoder(&h, p).unwrap();
            assert!((w.frobenius_norm().powi(2) - p).abs() / p < 1e-9);
            for k in 0..3 {
                let own = inner(h.row(k), &w.column(k)).norm_sqr();
                for j in 0..3 {
                    if j != k {
                        let leak = inner(h.row(k), &w.column(j)).norm_sqr();
                        assert!(leak / own < 1e-10, "leakage {leak} vs signal {own}");
                    }
                }
            }
        }
    }

    #[test]
    fn zf_stream_directions_invariant_to_row_scaling() {
        let mut rng = Rng::new(37);
        let data: Vec<_> = (0..2 * 6).map(|_| rng.complex_gaussian(1.0).unwrap()).collect();
        let h = CMat::from_vec(2, 6, data.clone());
        let scaled = CMat::from_vec(2, 6, data.iter().map(|z| z * 3.0).collect());
        let w1 = zf_precoder(&h, 1.0).unwrap();
        let w2 = zf_precoder(&scaled, 1.0).unwrap();
        for j in 0..2 {
            let c1 = w1.column(j);
            let c2 = w2.column(j);
            let n1 = norm_sq(&c1).sqrt();
            let n2 = norm_sq(&c2).sqrt();
            // normalized columns match up to a positive real factor
            let overlap = crate::numerics::inner_h(&c1, &c2).norm() / (n1 * n2);
            assert!((overlap - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sinr_matches_scalar_oracle() {
        let cfg = ScenarioConfig::desk();
        let channels = ChannelSet::synthesize(&cfg, 3).unwrap();
        let phi = PhaseVector::all_zero(cfg.irs_elements, cfg.phase_bits);
        let assoc = AssociationMap::from_assignment(vec![0, 1, 1, 0], 2).unwrap();
        let pre = precoders_for(&channels, &phi, &assoc, &cfg).unwrap();
        let fast = sinr_all(&channels, &phi, &assoc, &pre, cfg.noise_watts(), &cfg);
        // independent scalar-loop evaluation
        for k in 0..cfg.user_count {
            let s = assoc.bs_of(k);
            let h = channels.user_channel(&cfg, &phi, s, k);
            let served = assoc.served_by(s);
            let own_col = served.iter().position(|&u| u == k).unwrap();
            let mut sig = Complex64::ZERO;
            for (i, hv) in h.iter().enumerate() {
                sig += hv * pre.per_bs[s][(i, own_col)];
            }
            let mut denom = cfg.noise_watts();
            for (col, &u) in served.iter().enumerate() {
                if u == k {
                    continue;
                }
                let mut cross = Complex64::ZERO;
                for (i, hv) in h.iter().enumerate() {
                    cross += hv * pre.per_bs[s][(i, col)];
                }
                denom += cross.norm_sqr();
            }
            let want = sig.norm_sqr() / denom;
            assert!(
                (fast[k] - want).abs() <= 1e-9 * want.max(1e-30),
                "user {k}: {} vs {}",
                fast[k],
                want
            );
        }
    }

    #[test]
    fn rate_report_reference_points() {
        let r = rate_report(&[1.0], 100e6, 1.0).unwrap();
        assert!((r.rate[0] - 1e8).abs() < 1e-3);
        let r = rate_report(&[3.0], 1.0, 1.0).unwrap();
        assert!((r.rate[0] - 2.0).abs() < 1e-12);
        let r = rate_report(&[0.0, 0.0], 1e8, 2.0).unwrap();
        assert_eq!(r.sum_rate, 0.0);
        assert_eq!(r.energy_efficiency, 0.0);
        assert!(rate_report(&[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn rates_monotone_in_sinr() {
        let mut rng = Rng::new(41);
        for _ in 0..100 {
            let a = rng.uniform_range(0.0, 50.0);
            let b = a + rng.uniform_range(0.0, 10.0);
            let r = rate_report(&[a, b], 1e6, 1.0).unwrap();
            assert!(r.rate[1] >= r.rate[0]);
        }
    }

    #[test]
    fn candidate_matrix_monotone_in_channel_strength() {
        let cfg = ScenarioConfig::desk();
        let channels = ChannelSet::synthesize(&cfg, 9).unwrap();
        let phi = PhaseVector::all_zero(cfg.irs_elements, cfg.phase_bits);
        let r = candidate_rate_matrix(&channels, &phi, &cfg);
        // entries ordered like the squared channel norms, per BS
        for s in 0..cfg.bs_count {
            let strengths: Vec<f64> = (0..cfg.user_count)
                .map(|k| norm_sq(&channels.user_channel(&cfg, &phi, s, k)))
                .collect();
            for a in 0..cfg.user_count {
                for b in 0..cfg.user_count {
                    if strengths[a] >= strengths[b] {
                        assert!(r.at(s, a) >= r.at(s, b) - 1e-12);
                    }
                }
            }
        }
        // zero channel -> zero rate
        let zero = vec![Complex64::ZERO; 4];
        assert_eq!(norm_sq(&zero), 0.0);
    }
}
