//! Discrete passive-beamforming optimization for a fixed association.
//!
//! The chain works on the users served by the IRS-assisted BS. SINRs are
//! pulled out of the logarithm with auxiliary multipliers `lambda`, the
//! resulting sum of ratios is linearized by the quadratic transform with
//! auxiliaries `y`, and the remaining quadratic form in the unit-modulus
//! phase vector is maximized one element at a time against the discrete
//! codebook. Every step has a closed form, so each update is monotone in
//! its own objective.
//!
//! The multiplier update `lambda = sinr` is the stationary point of the
//! dual objective with natural logarithms; the traced objective therefore
//! carries a `B / ln 2` factor so that at the stationary point it equals
//! the served users' sum rate in bit/s.

use std::f64::consts::{LN_2, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::channel::{ChannelSet, ScenarioConfig};
use crate::numerics::{inner_h, CMat};
use crate::phy::AssociationMap;

#[derive(Debug, Clone, PartialEq)]
pub enum IrsOptError {
    /// The assisted BS must serve at least one user before its surface can
    /// be optimized.
    NoServedUsers { bs: usize },
}

impl fmt::Display for IrsOptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrsOptError::NoServedUsers { bs } => {
                write!(f, "assisted BS {bs} serves no user; association is infeasible")
            }
        }
    }
}

impl std::error::Error for IrsOptError {}

// ── phase vector ────────────────────────────────────────────────────────

/// IRS reflection state: one index into the 2^b-entry phase codebook per
/// element, unit amplitude everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseVector {
    indices: Vec<u32>,
    bits: u8,
}

impl PhaseVector {
    pub fn new(indices: Vec<u32>, bits: u8) -> Self {
        assert!((1..=16).contains(&bits), "phase resolution out of range");
        let levels = 1u32 << bits;
        assert!(
            indices.iter().all(|&i| i < levels),
            "phase index out of codebook range"
        );
        PhaseVector { indices, bits }
    }

    pub fn all_zero(n: usize, bits: u8) -> Self {
        PhaseVector::new(vec![0; n], bits)
    }

    pub fn random(n: usize, bits: u8, rng: &mut crate::numerics::Rng) -> Self {
        let levels = 1usize << bits;
        PhaseVector::new(
            (0..n).map(|_| rng.uniform_index(levels) as u32).collect(),
            bits,
        )
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn set_index(&mut self, n: usize, index: u32) {
        assert!(index < (1u32 << self.bits));
        self.indices[n] = index;
    }

    /// Realized phase of element `n` in radians.
    pub fn phase(&self, n: usize) -> f64 {
        TAU * self.indices[n] as f64 / (1u64 << self.bits) as f64
    }

    /// Unit phasor e^{j phi_n} of element `n`.
    pub fn unit(&self, n: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(n))
    }

    /// All element phasors.
    pub fn units(&self) -> Vec<Complex64> {
        (0..self.len()).map(|n| self.unit(n)).collect()
    }

    /// The b-bit codebook as unit phasors: entry i is e^{j 2 pi i / 2^b}.
    pub fn codebook_units(bits: u8) -> Vec<Complex64> {
        assert!((1..=16).contains(&bits));
        let levels = 1u64 << bits;
        (0..levels)
            .map(|i| Complex64::from_polar(1.0, TAU * i as f64 / levels as f64))
            .collect()
    }

    /// Stable fingerprint of the phase state.
    pub fn fingerprint(&self) -> u64 {
        let bytes = std::iter::once(self.bits)
            .chain(self.indices.iter().flat_map(|i| i.to_le_bytes()));
        crate::numerics::fnv1a(bytes)
    }
}

// ── fractional-programming building blocks ──────────────────────────────

/// Composite per-pair vectors for users m, j served by the assisted BS.
///
/// Entries are the elementwise conjugate of diag(h_r[m]) G w_j, so that
/// `phi^H b[m][j]` equals the conjugate of the composite link gain
/// `h_r diag(e^{j phi}) G w_j`. Magnitudes (and thus the objective) are
/// unchanged, and the optimized phase indices drive the physical surface
/// directly instead of its mirror image.
#[derive(Debug, Clone)]
pub struct BVectors {
    pub pairs: Vec<Vec<Vec<Complex64>>>,
    pub elements: usize,
}

impl BVectors {
    pub fn user_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn at(&self, m: usize, j: usize) -> &[Complex64] {
        &self.pairs[m][j]
    }
}

/// Build the b-vectors from the served users' IRS channels (in served-set
/// order) and the assisted BS precoder (columns in the same order).
pub fn compute_b_vectors(h_r: &[&[Complex64]], g: &CMat, w: &CMat) -> BVectors {
    let users = h_r.len();
    assert_eq!(w.cols(), users, "precoder columns must match served users");
    assert_eq!(w.rows(), g.cols(), "precoder rows must match G columns");
    let n = g.rows();
    // g_w[j] = G * w_j, length N
    let g_w: Vec<Vec<Complex64>> = (0..users).map(|j| g.mul_vec(&w.column(j))).collect();
    let pairs = (0..users)
        .map(|m| {
            assert_eq!(h_r[m].len(), n, "h_r length must match G rows");
            (0..users)
                .map(|j| (0..n).map(|i| (h_r[m][i] * g_w[j][i]).conj()).collect())
                .collect()
        })
        .collect();
    BVectors { pairs, elements: n }
}

/// SINR of each served user as a function of the current phases, evaluated
/// through the b-vectors: |phi^H b_mm|^2 / (sum_{j != m} |phi^H b_mj|^2 + n0).
pub fn fp_sinrs(b: &BVectors, phi_units: &[Complex64], noise_watts: f64) -> Vec<f64> {
    let users = b.user_count();
    (0..users)
        .map(|m| {
            let signal = inner_h(phi_units, b.at(m, m)).norm_sqr();
            let mut interference = 0.0;
            for j in 0..users {
                if j != m {
                    interference += inner_h(phi_units, b.at(m, j)).norm_sqr();
                }
            }
            signal / (interference + noise_watts)
        })
        .collect()
}

/// Closed-form multiplier update: the dual objective is stationary at
/// lambda_m = sinr_m.
pub fn update_lambda(sinrs: &[f64]) -> Vec<f64> {
    sinrs.to_vec()
}

/// Closed-form auxiliary update of the quadratic transform:
/// y_m = sqrt(1 + lambda_m) phi^H b_mm / (sum_j |phi^H b_mj|^2 + n0).
pub fn update_y(
    phi_units: &[Complex64],
    b: &BVectors,
    lambda: &[f64],
    noise_watts: f64,
) -> Vec<Complex64> {
    let users = b.user_count();
    (0..users)
        .map(|m| {
            let num = (1.0 + lambda[m]).sqrt() * inner_h(phi_units, b.at(m, m));
            let mut denom = noise_watts;
            for j in 0..users {
                denom += inner_h(phi_units, b.at(m, j)).norm_sqr();
            }
            num / denom
        })
        .collect()
}

/// Quadratic-transform surrogate value
/// f6 = sum_m [ 2 sqrt(1+lambda_m) Re{y_m^* phi^H b_mm}
///              - |y_m|^2 (sum_j |phi^H b_mj|^2 + n0) ].
pub fn surrogate_value(
    phi_units: &[Complex64],
    y: &[Complex64],
    b: &BVectors,
    lambda: &[f64],
    noise_watts: f64,
) -> f64 {
    let users = b.user_count();
    let mut total = 0.0;
    for m in 0..users {
        let cross = (y[m].conj() * inner_h(phi_units, b.at(m, m))).re;
        let mut power = noise_watts;
        for j in 0..users {
            power += inner_h(phi_units, b.at(m, j)).norm_sqr();
        }
        total += 2.0 * (1.0 + lambda[m]).sqrt() * cross - y[m].norm_sqr() * power;
    }
    total
}

/// Quadratic form of the surrogate in phi: U = sum_m |y_m|^2 sum_j b b^H,
/// v = sum_m sqrt(1+lambda_m) y_m^* b_mm, C = -sum_m |y_m|^2 n0. U is
/// assembled Hermitian exactly (upper triangle mirrored).
pub fn build_quadratic(
    y: &[Complex64],
    lambda: &[f64],
    b: &BVectors,
    noise_watts: f64,
) -> (CMat, Vec<Complex64>, f64) {
    let n = b.elements;
    let users = b.user_count();
    let mut u = CMat::zeros(n, n);
    let mut v = vec![Complex64::ZERO; n];
    let mut c = 0.0;
    for m in 0..users {
        let weight = y[m].norm_sqr();
        if weight != 0.0 {
            for j in 0..users {
                let bv = b.at(m, j);
                for row in 0..n {
                    let left = weight * bv[row];
                    for col in row..n {
                        u[(row, col)] += left * bv[col].conj();
                    }
                }
            }
        }
        let coeff = (1.0 + lambda[m]).sqrt() * y[m].conj();
        for (vi, bi) in v.iter_mut().zip(b.at(m, m)) {
            *vi += coeff * bi;
        }
        c -= weight * noise_watts;
    }
    // mirror the upper triangle; diagonal becomes exactly real
    for row in 0..n {
        u[(row, row)] = Complex64::new(u[(row, row)].re, 0.0);
        for col in row + 1..n {
            u[(col, row)] = u[(row, col)].conj();
        }
    }
    (u, v, c)
}

/// Surrogate evaluated through the quadratic form:
/// f7 = -phi^H U phi + 2 Re{phi^H v} + C. Equals `surrogate_value` for the
/// same (y, lambda, b).
pub fn quadratic_value(phi_units: &[Complex64], u: &CMat, v: &[Complex64], c: f64) -> f64 {
    let uq = inner_h(phi_units, &u.mul_vec(phi_units)).re;
    let lin = inner_h(phi_units, v).re;
    -uq + 2.0 * lin + c
}

/// Best codebook phase for element `n` with all others fixed: the argmax of
/// Re{theta^* d_n} with d_n = v_n - sum_{j != n} u_nj theta_j, which is the
/// codebook entry at minimum circular distance from the phase of d_n. Ties
/// go to the smaller index; a vanishing d_n keeps the incumbent.
pub fn element_update(
    n: usize,
    phi_units: &[Complex64],
    incumbent: u32,
    u: &CMat,
    v: &[Complex64],
    codebook: &[Complex64],
) -> u32 {
    let mut d = v[n];
    for j in 0..phi_units.len() {
        if j != n {
            d -= u[(n, j)] * phi_units[j];
        }
    }
    if d == Complex64::ZERO {
        return incumbent;
    }
    let mut best = 0u32;
    let mut best_val = f64::NEG_INFINITY;
    for (i, theta) in codebook.iter().enumerate() {
        let val = (theta.conj() * d).re;
        if val > best_val {
            best_val = val;
            best = i as u32;
        }
    }
    best
}

// ── full optimization loop ──────────────────────────────────────────────

/// Auxiliary state of one fractional-programming round.
#[derive(Debug, Clone)]
pub struct FpState {
    pub lambda: Vec<f64>,
    pub y: Vec<Complex64>,
    pub u: CMat,
    pub v: Vec<Complex64>,
    pub c: f64,
}

/// Result of one phase optimization.
#[derive(Debug, Clone)]
pub struct PhaseOptResult {
    pub phases: PhaseVector,
    /// Dual objective in bit/s after every update step (multiplier/auxiliary
    /// refresh and each element update). Nondecreasing by construction.
    pub trace: Vec<f64>,
    /// Final raw surrogate value (dimensionless).
    pub f6_final: f64,
    /// Fractional-programming rounds executed.
    pub rounds: usize,
}

/// Dual objective in bit/s for the current multipliers and surrogate value:
/// (B / ln 2) * (sum_m [ln(1 + lambda_m) - lambda_m] + f6). At the
/// stationary multipliers this is exactly the served users' sum rate.
/// ln_1p keeps the shift accurate when the multipliers are tiny, where
/// ln(1 + l) - l would cancel catastrophically.
pub fn dual_objective_bits(bandwidth_hz: f64, lambda: &[f64], f6: f64) -> f64 {
    let shift: f64 = lambda.iter().map(|&l| l.ln_1p() - l).sum();
    bandwidth_hz / LN_2 * (shift + f6)
}

/// Surrogate value at the optimal auxiliaries for the current phases; equals
/// the sum of the served users' SINRs.
pub fn f6_at_optimal_aux(b: &BVectors, phi_units: &[Complex64], noise_watts: f64) -> f64 {
    fp_sinrs(b, phi_units, noise_watts).iter().sum()
}

/// Deterministic start set for the discrete search: the caller's phases, a
/// start aligned to the diagonal composite terms, two opposite phase
/// ramps, and two scattered starts from a fixed stream. Single-start
/// coordinate sweeps stall in codebook-local optima on a measurable
/// fraction of instances; the spread of starts covers them.
fn candidate_starts(init: &PhaseVector, b: &BVectors) -> Vec<PhaseVector> {
    let n = init.len();
    let bits = init.bits();
    let levels = 1u32 << bits;
    let codebook = PhaseVector::codebook_units(bits);

    // align each element with the summed diagonal terms
    let aligned: Vec<u32> = (0..n)
        .map(|i| {
            let drive: Complex64 = (0..b.user_count()).map(|m| b.at(m, m)[i]).sum();
            if drive == Complex64::ZERO {
                return 0;
            }
            let mut best = 0u32;
            let mut best_val = f64::NEG_INFINITY;
            for (idx, theta) in codebook.iter().enumerate() {
                let val = (theta.conj() * drive).re;
                if val > best_val {
                    best_val = val;
                    best = idx as u32;
                }
            }
            best
        })
        .collect();
    let ramp_up: Vec<u32> = (0..n).map(|i| (i as u32) % levels).collect();
    let ramp_down: Vec<u32> = (0..n).map(|i| (levels - 1) * (i as u32) % levels).collect();
    // instance-independent scattered starts from a fixed internal stream
    let mut scatter_rng = crate::numerics::Rng::new(0x05ca_77e2);
    let scatter_a = PhaseVector::random(n, bits, &mut scatter_rng);
    let scatter_b = PhaseVector::random(n, bits, &mut scatter_rng);

    let mut starts = vec![
        init.clone(),
        PhaseVector::new(aligned, bits),
        PhaseVector::new(ramp_up, bits),
        PhaseVector::new(ramp_down, bits),
        scatter_a,
        scatter_b,
    ];
    starts.dedup();
    starts
}

/// One fractional-programming run from a single start: multipliers refresh
/// once per round, auxiliaries refresh after every element move so the
/// surrogate stays tangent to the true ratio objective.
fn fp_run(
    b: &BVectors,
    outer_sums: &[CMat],
    cfg: &ScenarioConfig,
    start: PhaseVector,
) -> PhaseOptResult {
    let noise = cfg.noise_watts();
    let codebook = PhaseVector::codebook_units(start.bits());
    let users = b.user_count();

    let mut phases = start;
    let mut units = phases.units();
    let mut trace = Vec::new();
    let mut state = FpState {
        lambda: Vec::new(),
        y: Vec::new(),
        u: CMat::zeros(b.elements, b.elements),
        v: Vec::new(),
        c: 0.0,
    };
    let rebuild = |state: &mut FpState| {
        state.u = CMat::zeros(b.elements, b.elements);
        for m in 0..users {
            let w = state.y[m].norm_sqr();
            if w != 0.0 {
                state.u = state.u.add(&outer_sums[m].scale(Complex64::new(w, 0.0)));
            }
        }
        state.v = vec![Complex64::ZERO; b.elements];
        state.c = 0.0;
        for m in 0..users {
            let coeff = (1.0 + state.lambda[m]).sqrt() * state.y[m].conj();
            for (vi, bi) in state.v.iter_mut().zip(b.at(m, m)) {
                *vi += coeff * bi;
            }
            state.c -= state.y[m].norm_sqr() * noise;
        }
    };

    let mut rounds = 0;
    let mut prev_round_obj = f64::NAN;
    for _ in 0..cfg.max_fp_iters {
        rounds += 1;
        // joint multiplier/auxiliary refresh; recorded together because the
        // dual objective is only comparable once both are at closed form
        state.lambda = update_lambda(&fp_sinrs(b, &units, noise));
        state.y = update_y(&units, b, &state.lambda, noise);
        rebuild(&mut state);
        trace.push(dual_objective_bits(
            cfg.bandwidth_hz,
            &state.lambda,
            surrogate_value(&units, &state.y, b, &state.lambda, noise),
        ));

        for n in 0..phases.len() {
            let chosen =
                element_update(n, &units, phases.indices()[n], &state.u, &state.v, &codebook);
            phases.set_index(n, chosen);
            units[n] = phases.unit(n);
            state.y = update_y(&units, b, &state.lambda, noise);
            rebuild(&mut state);
            trace.push(dual_objective_bits(
                cfg.bandwidth_hz,
                &state.lambda,
                surrogate_value(&units, &state.y, b, &state.lambda, noise),
            ));
        }

        let round_obj = *trace.last().expect("trace is nonempty");
        if rounds > 1 {
            let delta = (round_obj - prev_round_obj).abs();
            if delta <= cfg.fp_tol * prev_round_obj.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        prev_round_obj = round_obj;
    }

    let f6_final = surrogate_value(&units, &state.y, b, &state.lambda, noise);
    PhaseOptResult {
        phases,
        trace,
        f6_final,
        rounds,
    }
}

/// Optimize the discrete phases for a fixed association and precoder.
///
/// Runs the fractional-programming loop from each deterministic start and
/// keeps the best final objective; ties keep the caller's start, so a
/// warm start at an optimum is returned unchanged. The reported trace is
/// the winning run's and is nondecreasing at every recorded step.
pub fn optimize_phases(
    channels: &ChannelSet,
    w_assisted: &CMat,
    assoc: &AssociationMap,
    cfg: &ScenarioConfig,
    init: &PhaseVector,
) -> Result<PhaseOptResult, IrsOptError> {
    let served = assoc.served_by(cfg.irs_assisted_bs);
    if served.is_empty() {
        return Err(IrsOptError::NoServedUsers {
            bs: cfg.irs_assisted_bs,
        });
    }
    let h_r: Vec<&[Complex64]> = served.iter().map(|&k| channels.h_r[k].as_slice()).collect();
    let b = compute_b_vectors(&h_r, &channels.g, w_assisted);

    // y-independent outer-product sums, one per served user; the running
    // quadratic model is their |y_m|^2-weighted sum
    let outer_sums: Vec<CMat> = (0..b.user_count())
        .map(|m| {
            let mut s = CMat::zeros(b.elements, b.elements);
            for j in 0..b.user_count() {
                let bv = b.at(m, j);
                for row in 0..b.elements {
                    for col in row..b.elements {
                        s[(row, col)] += bv[row] * bv[col].conj();
                    }
                }
            }
            for row in 0..b.elements {
                s[(row, row)] = Complex64::new(s[(row, row)].re, 0.0);
                for col in row + 1..b.elements {
                    s[(col, row)] = s[(row, col)].conj();
                }
            }
            s
        })
        .collect();

    let mut best: Option<PhaseOptResult> = None;
    for start in candidate_starts(init, &b) {
        let run = fp_run(&b, &outer_sums, cfg, start);
        let run_obj = *run.trace.last().expect("trace is nonempty");
        let improves = match &best {
            None => true,
            Some(cur) => run_obj > *cur.trace.last().expect("trace is nonempty"),
        };
        if improves {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}
