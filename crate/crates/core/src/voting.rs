//! Sincere voting: thresholds, per-signal ballots, vote maps over the signal
//! line, vote shares by state, and the voting-subgame equilibria.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::beliefs::{kappa_tilde, posterior_from_pooled, Distortion};
use crate::costly::{optimal_distortion, CostError, CostSpec};
use crate::model::{signal_mass, ModelParams, State};
use crate::scalar::{half, lit, two, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T> {
    /// `π̃ = 1/(1+β)`: posterior above which a voter prefers policy 1.
    pub pi_tilde: T,
    /// `κ̃ = (β+Δ)/(β+1)`: trust level flipping the direction of distortion.
    pub kappa_tilde: T,
    /// `s* = σ²ln((1−q)/(βq))/(2μ)`: signal at which a Bayesian voter switches.
    pub s_star: T,
}

pub fn thresholds<T: Scalar>(params: &ModelParams<T>) -> Thresholds<T> {
    let (q, beta) = (params.q(), params.beta());
    let sig2 = params.sigma() * params.sigma();
    Thresholds {
        pi_tilde: T::one() / (T::one() + beta),
        kappa_tilde: kappa_tilde(params),
        s_star: sig2 * ((T::one() - q) / (beta * q)).ln() / (two::<T>() * params.mu()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vote {
    Policy0,
    Policy1,
    Indifferent,
}

pub fn sincere_vote<T: Scalar>(pi: T, pi_tilde: T) -> Vote {
    if pi > pi_tilde {
        Vote::Policy1
    } else if pi < pi_tilde {
        Vote::Policy0
    } else {
        Vote::Indifferent
    }
}

/// A voter's belief that policy 1 will be enacted, as a function of her signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaProfile<T> {
    Constant(T),
    /// `neg` for `s < 0`, `pos` for `s ≥ 0`.
    SignStep { neg: T, pos: T },
    /// `κ` equals the voter's own posterior.
    Trust,
}

impl<T: Scalar> KappaProfile<T> {
    pub fn is_valid(&self) -> bool {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        match *self {
            KappaProfile::Constant(k) => unit(k),
            KappaProfile::SignStep { neg, pos } => unit(neg) && unit(pos),
            KappaProfile::Trust => true,
        }
    }
}

impl<T: Scalar> fmt::Display for KappaProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaProfile::Constant(k) => write!(f, "constant:{k}"),
            KappaProfile::SignStep { neg, pos } => write!(f, "step:{neg},{pos}"),
            KappaProfile::Trust => write!(f, "trust"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VotingError {
    #[error("unresolved vote boundary in [{lo}, {hi}]: {detail}")]
    UnresolvedBoundary { lo: f64, hi: f64, detail: String },
    #[error("trust beliefs did not settle at s = {s} (last kappa {kappa}, posterior {pi})")]
    TrustNotConverged { s: f64, kappa: f64, pi: f64 },
    #[error("invalid kappa profile")]
    InvalidKappa,
    #[error("{0}")]
    Cost(Box<CostError>),
}

impl From<CostError> for VotingError {
    fn from(e: CostError) -> Self {
        VotingError::Cost(Box::new(e))
    }
}

/// Everything a voter ends up with at one signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoterState<T> {
    pub kappa: T,
    pub mu_tilde: Distortion<T>,
    pub pi: T,
    pub vote: Vote,
}

const TRUST_ITERATIONS: usize = 200;

/// Resolves `κ` from the profile, the optimal distortion under `cost`, the
/// resulting posterior and the sincere ballot at signal `s`.
///
/// Under `Trust`, `κ` must equal the posterior it induces. The fixed point is
/// found by iterating `κ ← π(s, μ̃*(κ))` from the trusting start `κ = 1` for
/// `s > 0` and `κ = 0` for `s < 0` (the signal-indicated policy is expected to
/// win).
pub fn resolve_voter<T: Scalar>(
    params: &ModelParams<T>,
    cost: &CostSpec<T>,
    profile: &KappaProfile<T>,
    s: T,
) -> Result<VoterState<T>, VotingError> {
    let pooled = params.q();
    let pi_tilde = T::one() / (T::one() + params.beta());
    let settle = |kappa: T| -> Result<(Distortion<T>, T), VotingError> {
        let m = optimal_distortion(params, s, kappa, cost)?;
        Ok((m, posterior_from_pooled(params, pooled, s, m)))
    };
    let (kappa, mu_tilde, pi) = match *profile {
        KappaProfile::Constant(k) => {
            let (m, pi) = settle(k)?;
            (k, m, pi)
        }
        KappaProfile::SignStep { neg, pos } => {
            let k = if s < T::zero() { neg } else { pos };
            let (m, pi) = settle(k)?;
            (k, m, pi)
        }
        KappaProfile::Trust => {
            let mut kappa = if s > T::zero() {
                T::one()
            } else if s < T::zero() {
                T::zero()
            } else {
                pooled
            };
            let tol = lit::<T>(1e-13);
            let mut last = None;
            for _ in 0..TRUST_ITERATIONS {
                let (m, pi) = settle(kappa)?;
                if (pi - kappa).abs() <= tol {
                    last = Some((pi, m, pi));
                    break;
                }
                kappa = pi;
            }
            match last {
                Some(v) => v,
                None => {
                    let (_, pi) = settle(kappa)?;
                    return Err(VotingError::TrustNotConverged {
                        s: s.to_f64().unwrap_or(f64::NAN),
                        kappa: kappa.to_f64().unwrap_or(f64::NAN),
                        pi: pi.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
    };
    Ok(VoterState {
        kappa,
        mu_tilde,
        pi,
        vote: sincere_vote(pi, pi_tilde),
    })
}

/// Closed signal interval; infinite endpoints allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

/// Partition of the signal line by ballot.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMap<T> {
    /// Signals voting for policy 1, sorted and disjoint.
    pub policy1: Vec<Interval<T>>,
    /// Signals at exact indifference (split 50/50 in share arithmetic).
    pub indifferent: Vec<Interval<T>>,
}

pub const BOUNDARY_GRID_POINTS: usize = 4096;
const BOUNDARY_TOLERANCE: f64 = 1e-11;
const BOUNDARY_MAX_DEPTH: usize = 16;

/// Maps the signal line to ballots.
///
/// Ballots are evaluated on a 4096-point grid over `±(μ + 8σ)`; every change
/// of ballot between neighbours is refined by bisection to `1e-11` in `s`.
/// The ballot at each grid end is assumed to persist to infinity.
pub fn decision_boundary<T: Scalar>(
    params: &ModelParams<T>,
    cost: &CostSpec<T>,
    profile: &KappaProfile<T>,
) -> Result<VoteMap<T>, VotingError> {
    if !profile.is_valid() {
        return Err(VotingError::InvalidKappa);
    }
    if !cost.is_valid() {
        return Err(CostError::InvalidCost(cost.level().and_then(|v| v.to_f64()).unwrap_or(f64::NAN)).into());
    }
    let span = params.mu() + lit::<T>(8.0) * params.sigma();
    let n = BOUNDARY_GRID_POINTS;
    let step = two::<T>() * span / lit::<T>((n - 1) as f64);
    let grid: Vec<T> = (0..n).map(|i| -span + step * lit::<T>(i as f64)).collect();
    let vote_at = |s: T| resolve_voter(params, cost, profile, s).map(|v| v.vote);
    let votes = grid
        .par_iter()
        .map(|&s| vote_at(s))
        .collect::<Result<Vec<_>, _>>()?;

    // (start of segment, ballot on the segment)
    let mut segments: Vec<(T, Vote)> = vec![(T::neg_infinity(), votes[0])];
    for i in 0..n - 1 {
        if votes[i] != votes[i + 1] {
            let found = refine_transitions(&vote_at, grid[i], grid[i + 1], votes[i], votes[i + 1], 0)?;
            segments.extend(found);
        }
    }

    let mut map = VoteMap {
        policy1: Vec::new(),
        indifferent: Vec::new(),
    };
    for (k, &(start, vote)) in segments.iter().enumerate() {
        let end = segments.get(k + 1).map_or(T::infinity(), |&(next, _)| next);
        let target = match vote {
            Vote::Policy1 => &mut map.policy1,
            Vote::Indifferent => &mut map.indifferent,
            Vote::Policy0 => continue,
        };
        match target.last_mut() {
            Some(last) if last.hi >= start => last.hi = end,
            _ => target.push(Interval { lo: start, hi: end }),
        }
    }
    Ok(map)
}

/// Locates every ballot change inside `(lo, hi)` given the ballots at the ends.
fn refine_transitions<T: Scalar>(
    vote_at: &impl Fn(T) -> Result<Vote, VotingError>,
    mut lo: T,
    cell_hi: T,
    vote_lo: Vote,
    vote_hi: Vote,
    depth: usize,
) -> Result<Vec<(T, Vote)>, VotingError> {
    if depth > BOUNDARY_MAX_DEPTH {
        return Err(VotingError::UnresolvedBoundary {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: cell_hi.to_f64().unwrap_or(f64::NAN),
            detail: format!("more than {BOUNDARY_MAX_DEPTH} ballot changes in one grid cell"),
        });
    }
    let tol = lit::<T>(BOUNDARY_TOLERANCE);
    let mut hi = cell_hi;
    let mut right = vote_hi;
    while hi - lo > tol {
        let mid = (lo + hi) * half();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = vote_at(mid)?;
        if v == vote_lo {
            lo = mid;
        } else {
            hi = mid;
            right = v;
        }
    }
    let point = (lo + hi) * half();
    let mut out = vec![(point, right)];
    if right != vote_hi {
        out.extend(refine_transitions(vote_at, hi, cell_hi, right, vote_hi, depth + 1)?);
    }
    Ok(out)
}

/// Share of voters casting a ballot for policy 1, by state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteShares<T> {
    pub share_policy1_state0: T,
    pub share_policy1_state1: T,
}

impl<T: Scalar> VoteShares<T> {
    pub fn policy1_share(&self, state: State) -> T {
        match state {
            State::Mild => self.share_policy1_state0,
            State::Severe => self.share_policy1_state1,
        }
    }
}

/// Integrates a vote map against the signal distribution of each state.
pub fn shares_from_map<T: Scalar>(params: &ModelParams<T>, map: &VoteMap<T>) -> VoteShares<T> {
    let share = |state: State| {
        let firm: T = map
            .policy1
            .iter()
            .fold(T::zero(), |acc, iv| acc + signal_mass(iv.lo, iv.hi, state, params));
        let split: T = map
            .indifferent
            .iter()
            .fold(T::zero(), |acc, iv| acc + signal_mass(iv.lo, iv.hi, state, params));
        firm + split * half()
    };
    VoteShares {
        share_policy1_state0: share(State::Mild),
        share_policy1_state1: share(State::Severe),
    }
}

pub fn vote_shares<T: Scalar>(
    params: &ModelParams<T>,
    cost: &CostSpec<T>,
    profile: &KappaProfile<T>,
) -> Result<VoteShares<T>, VotingError> {
    let map = decision_boundary(params, cost, profile)?;
    Ok(shares_from_map(params, &map))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubgameKind {
    AlwaysPolicy0,
    AlwaysPolicy1,
    /// The state-matching policy wins in both states.
    Informative,
}

impl fmt::Display for SubgameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SubgameKind::AlwaysPolicy0 => "always_policy0",
            SubgameKind::AlwaysPolicy1 => "always_policy1",
            SubgameKind::Informative => "informative",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgameOutcome<T> {
    pub kind: SubgameKind,
    pub kappa_star: KappaProfile<T>,
    pub exists: bool,
    pub condition: String,
}

/// Voting-subgame equilibria after split platforms, with split pairs off path
/// (platform-pooled belief equal to the prior).
pub fn subgame_equilibria<T: Scalar>(params: &ModelParams<T>) -> Vec<SubgameOutcome<T>> {
    subgame_equilibria_at(params, params.q())
}

/// Voting-subgame equilibria for a given platform-pooled belief `π̂`.
///
/// With `Δ > 1` the outcome is unique. With `Δ ≤ 1` the informative outcome
/// always exists, alongside policy 1 always winning when `π̂ ≥ π̃` and policy
/// 0 always winning when `π̂ ≤ π̃`. An outcome where the mismatched policy
/// always wins never exists.
pub fn subgame_equilibria_at<T: Scalar>(params: &ModelParams<T>, pooled: T) -> Vec<SubgameOutcome<T>> {
    let pi_tilde = thresholds(params).pi_tilde;
    let zero = T::zero();
    let inactive = SubgameOutcome {
        kind: SubgameKind::AlwaysPolicy0,
        kappa_star: KappaProfile::Constant(zero),
        exists: true,
        condition: format!("pooled belief {pooled} <= pi_tilde {pi_tilde}"),
    };
    if params.delta() > T::one() {
        if pooled <= pi_tilde {
            vec![inactive]
        } else {
            vec![SubgameOutcome {
                kind: SubgameKind::Informative,
                kappa_star: KappaProfile::SignStep {
                    neg: zero,
                    pos: pooled,
                },
                exists: true,
                condition: format!("pooled belief {pooled} > pi_tilde {pi_tilde}"),
            }]
        }
    } else {
        let mut out = vec![SubgameOutcome {
            kind: SubgameKind::Informative,
            kappa_star: KappaProfile::SignStep {
                neg: zero,
                pos: T::one(),
            },
            exists: true,
            condition: "delta <= 1: trust tracks the signal".to_string(),
        }];
        if pooled >= pi_tilde {
            out.push(SubgameOutcome {
                kind: SubgameKind::AlwaysPolicy1,
                kappa_star: KappaProfile::Constant(T::one()),
                exists: true,
                condition: format!("pooled belief {pooled} >= pi_tilde {pi_tilde}"),
            });
        }
        if pooled <= pi_tilde {
            out.push(inactive);
        }
        out
    }
}
