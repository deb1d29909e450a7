//! Platform choice and full-game equilibrium classification.

use std::fmt;

use thiserror::Error;

use crate::costly::{c_hat, gamma_hat, CostError, CostSpec, ThresholdSolution};
use crate::model::{ModelParams, Policy, State};
use crate::scalar::{half, Scalar};
use crate::voting::{vote_shares, KappaProfile, VoteShares, VotingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlatformRule {
    /// Each candidate proposes the policy matching the state.
    MatchState,
    /// Both candidates propose the same policy in every state.
    Pool(Policy),
}

impl fmt::Display for PlatformRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlatformRule::MatchState => f.write_str("match_state"),
            PlatformRule::Pool(p) => write!(f, "pool({})", p.index()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlatformError {
    #[error("exact tie in state {0}")]
    Tie(u8),
    #[error("the mismatched policy wins in both states")]
    Inverted,
}

/// Candidates' symmetric pure best response to the voting outcome after
/// split platforms.
pub fn platform_equilibrium<T: Scalar>(shares: &VoteShares<T>) -> Result<PlatformRule, PlatformError> {
    let h = half::<T>();
    let mut winners = [Policy::Zero; 2];
    for state in State::ALL {
        let share = shares.policy1_share(state);
        if share == h {
            return Err(PlatformError::Tie(state.index()));
        }
        winners[state.index() as usize] = if share > h { Policy::One } else { Policy::Zero };
    }
    match winners {
        [Policy::Zero, Policy::One] => Ok(PlatformRule::MatchState),
        [Policy::Zero, Policy::Zero] => Ok(PlatformRule::Pool(Policy::Zero)),
        [Policy::One, Policy::One] => Ok(PlatformRule::Pool(Policy::One)),
        [Policy::One, Policy::Zero] => Err(PlatformError::Inverted),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumEntry<T> {
    pub platform_rule: PlatformRule,
    pub kappa_star: KappaProfile<T>,
    /// How voters distort in this equilibrium.
    pub mu_tilde_rule: String,
    pub efficient: bool,
}

/// Critical cost level reported alongside a costly classification.
#[derive(Debug, Clone, PartialEq)]
pub struct CostThreshold<T> {
    /// `"gamma_hat"` or `"c_hat"`.
    pub name: &'static str,
    pub solution: Option<ThresholdSolution<T>>,
    /// Set when no threshold exists (state-1 share never reaches one half).
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport<T> {
    pub equilibria: Vec<EquilibriumEntry<T>>,
    pub unique: bool,
    pub regime: CostSpec<T>,
    pub threshold: Option<CostThreshold<T>>,
    /// State-1 policy-1 share among voters who expect policy 0 (`κ = 0`).
    pub inactive_share: T,
}

impl<T: Scalar> EquilibriumReport<T> {
    /// True when the only equilibrium is both candidates proposing policy 0.
    pub fn is_inactive(&self) -> bool {
        self.unique
            && self.equilibria.len() == 1
            && self.equilibria[0].platform_rule == PlatformRule::Pool(Policy::Zero)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error("{platform} under kappa profile {kappa}")]
    Platform { platform: PlatformError, kappa: String },
}

fn rule_text<T: Scalar>(cost: &CostSpec<T>, rule: PlatformRule) -> String {
    match (cost, rule) {
        (CostSpec::Free, PlatformRule::MatchState) => {
            "free: infinite for s > 0, zero for s < 0 (distort toward the trusted policy)".into()
        }
        (CostSpec::Free, _) => "free: zero for s > 0, infinite for s < 0".into(),
        (CostSpec::Fixed(_), _) => "fixed: zero for s >= s_plus, infinite on [s_minus, 0), mu otherwise".into(),
        (CostSpec::Quadratic(_), _) => "quadratic: interior first-order condition, below mu for s > 0".into(),
    }
}

fn entry<T: Scalar>(cost: &CostSpec<T>, rule: PlatformRule, kappa_star: KappaProfile<T>) -> EquilibriumEntry<T> {
    EquilibriumEntry {
        platform_rule: rule,
        kappa_star,
        mu_tilde_rule: rule_text(cost, rule),
        efficient: rule == PlatformRule::MatchState,
    }
}

fn rule_under<T: Scalar>(
    params: &ModelParams<T>,
    cost: &CostSpec<T>,
    kappa: KappaProfile<T>,
) -> Result<(PlatformRule, VoteShares<T>), ClassifyError> {
    let shares = vote_shares(params, cost, &kappa)?;
    let rule = platform_equilibrium(&shares).map_err(|platform| ClassifyError::Platform {
        platform,
        kappa: kappa.to_string(),
    })?;
    Ok((rule, shares))
}

/// Classifies the equilibria of the full game.
///
/// Without costs, the candidate voter beliefs are trust (`κ` tracks the
/// posterior) and distrust (`κ = 0`); each yields a platform rule and distinct
/// rules are reported. With fixed or quadratic costs (only `Δ > 1`) voters
/// expecting policy 0 are checked for a state-1 majority: below the critical
/// cost they never produce one and the inactive equilibrium is unique.
pub fn classify<T: Scalar>(
    params: &ModelParams<T>,
    cost: &CostSpec<T>,
) -> Result<EquilibriumReport<T>, ClassifyError> {
    if !cost.is_valid() {
        let level = cost.level().and_then(|v| v.to_f64()).unwrap_or(f64::NAN);
        return Err(CostError::InvalidCost(level).into());
    }
    let distrust = KappaProfile::Constant(T::zero());
    match cost {
        CostSpec::Free => {
            let (trusting, _) = rule_under(params, cost, KappaProfile::Trust)?;
            let (distrusting, shares) = rule_under(params, cost, distrust)?;
            let mut equilibria = Vec::new();
            if trusting == PlatformRule::MatchState {
                equilibria.push(entry(cost, trusting, KappaProfile::Trust));
            }
            let pool_kappa = |rule| match rule {
                PlatformRule::Pool(Policy::One) => KappaProfile::Constant(T::one()),
                _ => distrust,
            };
            for rule in [trusting, distrusting] {
                if rule != PlatformRule::MatchState && !equilibria.iter().any(|e| e.platform_rule == rule) {
                    equilibria.push(entry(cost, rule, pool_kappa(rule)));
                }
            }
            Ok(EquilibriumReport {
                unique: equilibria.len() == 1,
                equilibria,
                regime: *cost,
                threshold: None,
                inactive_share: shares.share_policy1_state1,
            })
        }
        CostSpec::Fixed(_) | CostSpec::Quadratic(_) => {
            if params.delta() <= T::one() {
                return Err(CostError::UnsupportedRegime(format!(
                    "{} costs are classified only for delta > 1 (delta = {})",
                    cost.name(),
                    params.delta()
                ))
                .into());
            }
            let (rule, shares) = rule_under(params, cost, distrust)?;
            let threshold = critical_cost(params, cost)?;
            let (equilibria, unique) = match rule {
                PlatformRule::Pool(Policy::Zero) => (vec![entry(cost, rule, distrust)], true),
                _ => (vec![entry(cost, PlatformRule::MatchState, KappaProfile::Trust)], false),
            };
            Ok(EquilibriumReport {
                equilibria,
                unique,
                regime: *cost,
                threshold: Some(threshold),
                inactive_share: shares.share_policy1_state1,
            })
        }
    }
}

/// Classification without the critical-cost search, for callers that only
/// need the outcome at one cost level.
pub fn classify_outcome<T: Scalar>(
    params: &ModelParams<T>,
    cost: &CostSpec<T>,
) -> Result<PlatformRule, ClassifyError> {
    match cost {
        CostSpec::Free => {
            let report = classify(params, cost)?;
            Ok(report.equilibria[0].platform_rule)
        }
        _ => {
            if params.delta() <= T::one() {
                return Err(CostError::UnsupportedRegime(format!(
                    "{} costs are classified only for delta > 1",
                    cost.name()
                ))
                .into());
            }
            Ok(rule_under(params, cost, KappaProfile::Constant(T::zero()))?.0)
        }
    }
}

fn critical_cost<T: Scalar>(params: &ModelParams<T>, cost: &CostSpec<T>) -> Result<CostThreshold<T>, ClassifyError> {
    let (name, result) = match cost {
        CostSpec::Fixed(_) => ("gamma_hat", gamma_hat(params)),
        _ => ("c_hat", c_hat(params)),
    };
    match result {
        Ok(solution) => Ok(CostThreshold {
            name,
            solution: Some(solution),
            note: None,
        }),
        Err(CostError::NoThreshold(note)) => Ok(CostThreshold {
            name,
            solution: None,
            note: Some(note),
        }),
        Err(e) => Err(e.into()),
    }
}

/// Value of holding office for candidates who also care about policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfficeValue<T>(T);

impl<T: Scalar> OfficeValue<T> {
    pub fn new(v: T) -> Option<Self> {
        (v > T::zero() && v.is_finite()).then_some(OfficeValue(v))
    }

    pub fn get(&self) -> T {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotivationOutcome {
    /// Whether the state-matching equilibrium survives policy motivation.
    pub efficient_exists: bool,
    /// Pooling on policy 0 remains an equilibrium regardless.
    pub inactive_persists: bool,
}

/// Policy-motivated candidates keep proposing the state-matching policy iff
/// `β ≥ V/2`.
pub fn policy_motivation_threshold<T: Scalar>(beta: T, office_value: OfficeValue<T>) -> MotivationOutcome {
    MotivationOutcome {
        efficient_exists: beta >= office_value.get() * half(),
        inactive_persists: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(delta: f64) -> ModelParams<f64> {
        ModelParams::new(0.25, 1.0, delta, 1.0, 1.0).unwrap()
    }

    fn shares(s0: f64, s1: f64) -> VoteShares<f64> {
        VoteShares {
            share_policy1_state0: s0,
            share_policy1_state1: s1,
        }
    }

    #[test]
    fn platform_rules() {
        assert_eq!(platform_equilibrium(&shares(0.2, 0.8)), Ok(PlatformRule::MatchState));
        assert_eq!(platform_equilibrium(&shares(0.0, 0.0)), Ok(PlatformRule::Pool(Policy::Zero)));
        assert_eq!(platform_equilibrium(&shares(0.9, 0.7)), Ok(PlatformRule::Pool(Policy::One)));
        assert_eq!(platform_equilibrium(&shares(0.2, 0.5)), Err(PlatformError::Tie(1)));
        assert_eq!(platform_equilibrium(&shares(0.8, 0.2)), Err(PlatformError::Inverted));
    }

    #[test]
    fn free_catastrophic_is_unique_inactive() {
        let r = classify(&params(2.0), &CostSpec::Free).unwrap();
        assert!(r.unique && r.is_inactive());
        assert_eq!(r.equilibria[0].kappa_star, KappaProfile::Constant(0.0));
        assert!(!r.equilibria[0].efficient);
    }

    #[test]
    fn free_mild_has_two_equilibria() {
        let r = classify(&params(0.5), &CostSpec::Free).unwrap();
        assert!(!r.unique);
        let rules: Vec<_> = r.equilibria.iter().map(|e| e.platform_rule).collect();
        assert_eq!(rules, vec![PlatformRule::MatchState, PlatformRule::Pool(Policy::Zero)]);
        assert!(r.equilibria[0].efficient);
        assert_eq!(r.equilibria[0].kappa_star, KappaProfile::Trust);
    }

    #[test]
    fn unit_delta_has_no_efficient_equilibrium() {
        let r = classify(&params(1.0), &CostSpec::Free).unwrap();
        assert!(r.is_inactive());
    }

    #[test]
    fn fixed_cost_flips_at_gamma_hat() {
        let p = params(2.0);
        let g = gamma_hat(&p).unwrap().value;
        let below = classify(&p, &CostSpec::Fixed(0.5 * g)).unwrap();
        assert!(below.is_inactive());
        assert_eq!(below.threshold.as_ref().unwrap().name, "gamma_hat");
        let above = classify(&p, &CostSpec::Fixed(2.0 * g)).unwrap();
        assert!(!above.is_inactive());
        assert_eq!(above.equilibria[0].platform_rule, PlatformRule::MatchState);
    }

    #[test]
    fn costly_regimes_need_large_losses() {
        let err = classify(&params(0.5), &CostSpec::Fixed(0.1)).unwrap_err();
        assert!(matches!(err, ClassifyError::Cost(CostError::UnsupportedRegime(_))));
    }

    #[test]
    fn motivation_examples() {
        let v = |x: f64| OfficeValue::new(x).unwrap();
        assert!(policy_motivation_threshold(1.0, v(2.0)).efficient_exists);
        assert!(!policy_motivation_threshold(1.0, v(3.0)).efficient_exists);
        assert!(policy_motivation_threshold(5.0, v(1.0)).efficient_exists);
        assert!(policy_motivation_threshold(1.0, v(3.0)).inactive_persists);
        assert_eq!(OfficeValue::new(0.0), None);
    }
}
