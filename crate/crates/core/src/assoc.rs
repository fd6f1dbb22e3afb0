//! User association: the two-phase auction over the min-cost-flow
//! reformulation, its epsilon-complementary-slackness certificate, an
//! exhaustive small-instance oracle, and the two baseline rules.
//!
//! Phase 1 runs a forward auction in which each BS bids for its best user
//! until every BS holds exactly one user. Phase 2 hands out the remaining
//! users: each picks the BS maximizing rate minus BS price, BS prices rise
//! by at most their headroom below the virtual-source price `mu`, and a
//! displaced incumbent re-enters the queue. Once a BS price reaches `mu` it
//! absorbs users without displacement, which is what lets BSs serve more
//! than one user.
//!
//! On the slackness conditions: the third one is stated for BSs that absorb
//! virtual-source flow, i.e. BSs serving more than one user must sit at the
//! maximum BS price. Read literally for every BS it would force all BS
//! prices equal, which contradicts the flow structure, so the checker
//! implements the flow-absorbing form.

use std::fmt;

use crate::channel::{distance, ChannelSet, ScenarioConfig};
use crate::irs_opt::PhaseVector;
use crate::numerics::norm_sq;
use crate::phy::{candidate_rate_matrix, AssociationMap, RateMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum AssocError {
    /// More BSs than users makes the nonempty-BS constraint infeasible.
    Infeasible { bs_count: usize, user_count: usize },
    /// The rate matrix carried NaN or infinities.
    NonFiniteRates,
    /// Epsilon must be positive for the auction to terminate.
    BadEpsilon(f64),
    /// Instance too large for the exhaustive oracle.
    OracleTooLarge { bs_count: usize, user_count: usize },
}

impl fmt::Display for AssocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssocError::Infeasible { bs_count, user_count } => write!(
                f,
                "infeasible association: {bs_count} BSs cannot all be loaded by {user_count} users"
            ),
            AssocError::NonFiniteRates => write!(f, "rate matrix contains non-finite entries"),
            AssocError::BadEpsilon(e) => write!(f, "epsilon must be positive, got {e}"),
            AssocError::OracleTooLarge { bs_count, user_count } => write!(
                f,
                "exact oracle refuses {bs_count}x{user_count}: enumeration too large"
            ),
        }
    }
}

impl std::error::Error for AssocError {}

/// Dual prices and the assignment pairs left by the auction.
#[derive(Debug, Clone)]
pub struct AuctionState {
    /// BS prices pi_s.
    pub prices_bs: Vec<f64>,
    /// User prices p_k.
    pub prices_user: Vec<f64>,
    /// Virtual source price mu.
    pub mu: f64,
    /// Assignment pairs (s, k).
    pub pairs: Vec<(usize, usize)>,
}

/// Two-phase auction association.
///
/// Phase 1 assigns one user to every BS through ascending user prices;
/// phase 2 assigns the remaining users through ascending BS prices capped
/// at `mu`. Tie-breaks take the lowest index. The returned map is complete
/// and every BS serves at least one user.
pub fn auction_associate(
    rates: &RateMatrix,
    epsilon: f64,
) -> Result<(AssociationMap, AuctionState), AssocError> {
    let s_count = rates.bs_count();
    let k_count = rates.user_count();
    if s_count > k_count {
        return Err(AssocError::Infeasible {
            bs_count: s_count,
            user_count: k_count,
        });
    }
    if !rates.is_finite() {
        return Err(AssocError::NonFiniteRates);
    }
    if !(epsilon > 0.0) {
        return Err(AssocError::BadEpsilon(epsilon));
    }

    let mut p = vec![0.0f64; k_count]; // user prices
    let mut owner: Vec<Option<usize>> = vec![None; k_count]; // user -> BS
    let mut holding: Vec<Option<usize>> = vec![None; s_count]; // BS -> its phase-1 user

    // Phase 1: every BS wins exactly one user. Each bid raises the target
    // user's price by at least epsilon, so this terminates.
    while let Some(s) = (0..s_count).find(|&s| holding[s].is_none()) {
        let mut best_k = 0;
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for k in 0..k_count {
            let value = rates.at(s, k) - p[k];
            if value > best {
                second = best;
                best = value;
                best_k = k;
            } else if value > second {
                second = value;
            }
        }
        if k_count == 1 {
            second = f64::NEG_INFINITY;
        }
        let bid = if second == f64::NEG_INFINITY {
            // unique candidate: any price seals the win
            rates.at(s, best_k) + epsilon
        } else {
            rates.at(s, best_k) - second + epsilon
        };
        p[best_k] = bid;
        if let Some(loser) = owner[best_k] {
            holding[loser] = None;
        }
        owner[best_k] = Some(s);
        holding[s] = Some(best_k);
    }

    // BS prices enter phase 2 as the phase-1 profits, which makes the
    // assigned pairs satisfy pi_s + p_k = R_sk exactly. The source price
    // sits one increment above the best of them.
    let mut pi: Vec<f64> = (0..s_count)
        .map(|s| {
            let k = holding[s].expect("phase 1 assigns every BS");
            rates.at(s, k) - p[k]
        })
        .collect();
    let mu = pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + epsilon;

    // Phase 2: place the remaining users. served[s] tracks all users held
    // by s; displacement only happens while a BS is below mu, in which case
    // it holds exactly one user.
    let mut served: Vec<Vec<usize>> = vec![Vec::new(); s_count];
    for s in 0..s_count {
        served[s].push(holding[s].unwrap());
    }
    while let Some(k) = (0..k_count).find(|&k| owner[k].is_none()) {
        let mut best_s = 0;
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for s in 0..s_count {
            let value = rates.at(s, k) - pi[s];
            if value > best {
                second = best;
                best = value;
                best_s = s;
            } else if value > second {
                second = value;
            }
        }
        if s_count == 1 {
            second = f64::NEG_INFINITY;
        }
        let margin = if second == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            best - second + epsilon
        };
        let headroom = mu - pi[best_s];
        // take the smaller price rise; land exactly on mu when the headroom
        // binds so later visits see zero headroom rather than rounding dust
        let delta = if headroom <= margin {
            pi[best_s] = mu;
            headroom
        } else {
            pi[best_s] += margin;
            margin
        };
        p[k] = best - delta;
        owner[k] = Some(best_s);
        served[best_s].push(k);
        if delta > 0.0 {
            debug_assert_eq!(
                served[best_s].len(),
                2,
                "displacement from a multi-user BS"
            );
            let incumbent = served[best_s][0];
            served[best_s].remove(0);
            owner[incumbent] = None;
        }
    }

    let assignment: Vec<usize> = owner.into_iter().map(|s| s.expect("all users placed")).collect();
    let map = AssociationMap::from_assignment(assignment, s_count)
        .expect("auction output is complete and loads every BS");
    let pairs = map
        .assignment()
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, k))
        .collect();
    Ok((
        map,
        AuctionState {
            prices_bs: pi,
            prices_user: p,
            mu,
            pairs,
        },
    ))
}

// ── slackness certificate ───────────────────────────────────────────────

/// One violated slackness condition.
#[derive(Debug, Clone, PartialEq)]
pub struct CsViolation {
    pub condition: &'static str,
    pub bs: usize,
    pub user: Option<usize>,
    pub detail: String,
}

impl fmt::Display for CsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at BS {}", self.condition, self.bs)?;
        if let Some(k) = self.user {
            write!(f, ", user {k}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Check the epsilon-complementary-slackness conditions for an assignment
/// and dual prices: (i) pi_s + p_k >= R_sk - eps for every pair, (ii)
/// pi_s + p_k = R_sk on assigned pairs, (iii) every BS serving more than
/// one user sits at the maximum BS price. The source price mu must also
/// dominate every BS price (dual feasibility of the flow form).
pub fn epsilon_cs_check(
    pairs: &[(usize, usize)],
    prices_bs: &[f64],
    prices_user: &[f64],
    mu: f64,
    rates: &RateMatrix,
    epsilon: f64,
) -> Result<(), Vec<CsViolation>> {
    const TOL: f64 = 1e-9;
    let mut violations = Vec::new();
    for (s, &pi) in prices_bs.iter().enumerate() {
        if mu < pi - TOL {
            violations.push(CsViolation {
                condition: "source price cover (25c)",
                bs: s,
                user: None,
                detail: format!("mu = {mu} below pi = {pi}"),
            });
        }
    }
    for s in 0..rates.bs_count() {
        for k in 0..rates.user_count() {
            let lhs = prices_bs[s] + prices_user[k];
            let rhs = rates.at(s, k) - epsilon;
            if lhs < rhs - TOL {
                violations.push(CsViolation {
                    condition: "price cover (26a)",
                    bs: s,
                    user: Some(k),
                    detail: format!("pi + p = {lhs} < R - eps = {rhs}"),
                });
            }
        }
    }
    let mut load = vec![0usize; rates.bs_count()];
    for &(s, k) in pairs {
        load[s] += 1;
        let lhs = prices_bs[s] + prices_user[k];
        let rhs = rates.at(s, k);
        if (lhs - rhs).abs() > TOL {
            violations.push(CsViolation {
                condition: "tightness on assignment (26b)",
                bs: s,
                user: Some(k),
                detail: format!("pi + p = {lhs} != R = {rhs}"),
            });
        }
    }
    let max_pi = prices_bs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for (s, &n) in load.iter().enumerate() {
        if n > 1 && prices_bs[s] < max_pi - TOL {
            violations.push(CsViolation {
                condition: "absorbing price (26c)",
                bs: s,
                user: None,
                detail: format!("pi = {} below max pi = {max_pi}", prices_bs[s]),
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

// ── exhaustive oracle ───────────────────────────────────────────────────

const ORACLE_MAX_USERS: usize = 12;
const ORACLE_MAX_BS: usize = 4;

/// Enumerate every surjective user-to-BS map and return the one with the
/// largest total, ties broken lexicographically by assignment vector.
/// Refuses instances beyond 4 BSs or 12 users.
pub fn exact_oracle(rates: &RateMatrix) -> Result<AssociationMap, AssocError> {
    let s_count = rates.bs_count();
    let k_count = rates.user_count();
    if s_count > k_count {
        return Err(AssocError::Infeasible {
            bs_count: s_count,
            user_count: k_count,
        });
    }
    if k_count > ORACLE_MAX_USERS || s_count > ORACLE_MAX_BS {
        return Err(AssocError::OracleTooLarge {
            bs_count: s_count,
            user_count: k_count,
        });
    }
    let mut assignment = vec![0usize; k_count];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        // surjectivity: every BS loaded
        let mut seen = vec![false; s_count];
        for &s in &assignment {
            seen[s] = true;
        }
        if seen.iter().all(|&b| b) {
            let total: f64 = assignment
                .iter()
                .enumerate()
                .map(|(k, &s)| rates.at(s, k))
                .sum();
            // strict improvement keeps the lexicographically first maximum
            if best.as_ref().is_none_or(|(t, _)| total > *t) {
                best = Some((total, assignment.clone()));
            }
        }
        // next assignment vector in lexicographic order (last user fastest)
        let mut pos = k_count;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            if assignment[pos] + 1 < s_count {
                assignment[pos] += 1;
                for a in assignment.iter_mut().skip(pos + 1) {
                    *a = 0;
                }
                break;
            }
            if pos == 0 {
                let (_, vec) = best.expect("at least one surjective map exists");
                return Ok(AssociationMap::from_assignment(vec, s_count)
                    .expect("oracle output is surjective"));
            }
        }
    }
}

// ── baseline association rules ──────────────────────────────────────────

/// Move users onto empty BSs, each time picking the (user, empty BS) move
/// with the smallest score loss among users whose donor keeps a user.
fn repair_empty_bs(assignment: &mut [usize], score: &RateMatrix) {
    let s_count = score.bs_count();
    loop {
        let mut load = vec![0usize; s_count];
        for &s in assignment.iter() {
            load[s] += 1;
        }
        let Some(empty) = (0..s_count).find(|&s| load[s] == 0) else {
            return;
        };
        let mut best_user = None;
        let mut best_loss = f64::INFINITY;
        for (k, &cur) in assignment.iter().enumerate() {
            if load[cur] < 2 {
                continue;
            }
            let loss = score.at(cur, k) - score.at(empty, k);
            if loss < best_loss {
                best_loss = loss;
                best_user = Some(k);
            }
        }
        let k = best_user.expect("K >= S guarantees a donor exists");
        assignment[k] = empty;
    }
}

/// Received-signal-strength association: each user takes the BS with the
/// strongest channel (the reflected composite for the assisted BS), then
/// empty BSs are repaired by the cheapest rate-proxy move.
pub fn rssi_associate(
    channels: &ChannelSet,
    phi: &PhaseVector,
    cfg: &ScenarioConfig,
) -> AssociationMap {
    let proxy = candidate_rate_matrix(channels, phi, cfg);
    let mut assignment = Vec::with_capacity(cfg.user_count);
    for k in 0..cfg.user_count {
        let mut best_s = 0;
        let mut best = f64::NEG_INFINITY;
        for s in 0..cfg.bs_count {
            let strength = norm_sq(&channels.user_channel(cfg, phi, s, k));
            if strength > best {
                best = strength;
                best_s = s;
            }
        }
        assignment.push(best_s);
    }
    repair_empty_bs(&mut assignment, &proxy);
    AssociationMap::from_assignment(assignment, cfg.bs_count)
        .expect("repair loads every BS")
}

/// Nearest-BS association; the assisted BS counts as the reflected path
/// length BS -> IRS -> user. Empty BSs are repaired by the smallest added
/// distance.
pub fn nearest_associate(positions: &[[f64; 2]], cfg: &ScenarioConfig) -> AssociationMap {
    let dist_to = |s: usize, k: usize| -> f64 {
        if s == cfg.irs_assisted_bs {
            distance(cfg.bs_positions[s], cfg.irs_position)
                + distance(cfg.irs_position, positions[k])
        } else {
            distance(cfg.bs_positions[s], positions[k])
        }
    };
    let mut assignment = Vec::with_capacity(positions.len());
    for k in 0..positions.len() {
        let mut best_s = 0;
        let mut best = f64::INFINITY;
        for s in 0..cfg.bs_count {
            let d = dist_to(s, k);
            if d < best {
                best = d;
                best_s = s;
            }
        }
        assignment.push(best_s);
    }
    // negative distance as the score so that "loss" is added path length
    let score = RateMatrix::new(
        cfg.bs_count,
        positions.len(),
        (0..cfg.bs_count)
            .flat_map(|s| (0..positions.len()).map(move |k| (s, k)))
            .map(|(s, k)| -dist_to(s, k))
            .collect(),
    );
    repair_empty_bs(&mut assignment, &score);
    AssociationMap::from_assignment(assignment, cfg.bs_count)
        .expect("repair loads every BS")
}
