//! Model primitives: parameters, realized policy utility and the Gaussian
//! signal technology.
//!
//! Signals are drawn from `N((2ω − 1)·μ, σ²)`, so the severe state centers at
//! `+μ` and any `s > 0` is evidence for `ω = 1`. The log-likelihood ratio of
//! the two states is then `2μs/σ²`.

use std::fmt;

use crate::kv::{KvError, KvRecord};
use crate::scalar::{half, lit, std_normal_cdf, two, Scalar};

/// Binary state of the world: mild (`0`) or severe (`1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Mild,
    Severe,
}

impl State {
    pub const ALL: [State; 2] = [State::Mild, State::Severe];

    pub fn index(self) -> u8 {
        match self {
            State::Mild => 0,
            State::Severe => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(State::Mild),
            1 => Some(State::Severe),
            _ => None,
        }
    }

    /// `2ω − 1`: the sign of the signal mean.
    pub fn signed<T: Scalar>(self) -> T {
        match self {
            State::Mild => -T::one(),
            State::Severe => T::one(),
        }
    }
}

/// A policy platform, `p ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Zero,
    One,
}

impl Policy {
    pub fn index(self) -> u8 {
        match self {
            Policy::Zero => 0,
            Policy::One => 1,
        }
    }

    /// The policy that is optimal in `state`.
    pub fn matching(state: State) -> Self {
        match state {
            State::Mild => Policy::Zero,
            State::Severe => Policy::One,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PolicyProfile {
    pub p1: Policy,
    pub p2: Policy,
}

impl PolicyProfile {
    pub fn is_split(&self) -> bool {
        self.p1 != self.p2
    }
}

/// Symmetric candidate strategy: probability of proposing policy 1 in each state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateMixing<T> {
    pub rho0: T,
    pub rho1: T,
}

impl<T: Scalar> CandidateMixing<T> {
    pub fn new(rho0: T, rho1: T) -> Option<Self> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        (unit(rho0) && unit(rho1)).then_some(Self { rho0, rho1 })
    }

    /// Pure strategies: a split platform pair is off the equilibrium path and
    /// carries no information about the state.
    pub fn off_path() -> Self {
        Self {
            rho0: T::zero(),
            rho1: T::zero(),
        }
    }

    /// `(ρ₀(1−ρ₀), ρ₁(1−ρ₁))`, the likelihoods of observing a split pair.
    pub fn split_weights(&self) -> (T, T) {
        (
            self.rho0 * (T::one() - self.rho0),
            self.rho1 * (T::one() - self.rho1),
        )
    }

    /// True when neither state can produce a split pair on path.
    pub fn is_degenerate(&self) -> bool {
        let (b, a) = self.split_weights();
        a == T::zero() && b == T::zero()
    }
}

/// Unvalidated parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams<T> {
    pub q: T,
    pub beta: T,
    pub delta: T,
    pub mu: T,
    pub sigma: T,
}

impl<T: Scalar> RawParams<T> {
    pub fn new(q: T, beta: T, delta: T, mu: T, sigma: T) -> Self {
        Self {
            q,
            beta,
            delta,
            mu,
            sigma,
        }
    }

    pub fn validate(&self) -> Result<ModelParams<T>, ValidationError<T>> {
        validate(*self)
    }

    /// Reads the five primitive keys from a key-value record.
    pub fn from_kv(rec: &KvRecord) -> Result<Self, KvError> {
        let get = |k: &str| rec.require_number(k).map(lit::<T>);
        Ok(Self {
            q: get("q")?,
            beta: get("beta")?,
            delta: get("delta")?,
            mu: get("mu")?,
            sigma: get("sigma")?,
        })
    }

    pub fn to_kv(&self) -> KvRecord {
        let mut rec = KvRecord::default();
        for (k, v) in [
            ("q", self.q),
            ("beta", self.beta),
            ("delta", self.delta),
            ("mu", self.mu),
            ("sigma", self.sigma),
        ] {
            // shortest round-trip text for the double value
            rec.insert(k, format!("{:?}", v.to_f64().unwrap_or(f64::NAN)));
        }
        rec
    }
}

/// Parameters `(q, β, Δ, μ, σ)` that satisfy every range constraint and both
/// standing assumptions: `q < 1/(1+β)` and `μ ≥ μ^Bayes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    q: T,
    beta: T,
    delta: T,
    mu: T,
    sigma: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(q: T, beta: T, delta: T, mu: T, sigma: T) -> Result<Self, ValidationError<T>> {
        validate(RawParams::new(q, beta, delta, mu, sigma))
    }

    /// Builds parameters without checking the two standing assumptions.
    ///
    /// Range constraints are still the caller's responsibility; this exists for
    /// exploring the model outside its maintained domain (boundary studies,
    /// belief-layer arithmetic at even priors).
    pub fn new_unchecked(q: T, beta: T, delta: T, mu: T, sigma: T) -> Self {
        Self {
            q,
            beta,
            delta,
            mu,
            sigma,
        }
    }

    pub fn q(&self) -> T {
        self.q
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn delta(&self) -> T {
        self.delta
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn raw(&self) -> RawParams<T> {
        RawParams::new(self.q, self.beta, self.delta, self.mu, self.sigma)
    }

    pub fn with_mu(&self, mu: T) -> Self {
        Self { mu, ..*self }
    }

    pub fn with_sigma(&self, sigma: T) -> Self {
        Self { sigma, ..*self }
    }

    pub fn with_delta(&self, delta: T) -> Self {
        Self { delta, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation<T> {
    /// A primitive outside its domain (or not finite).
    Range {
        field: &'static str,
        value: T,
        bound: &'static str,
    },
    /// `q < 1/(1+β)` fails; `bound` is `1/(1+β)`.
    Assumption1 { q: T, bound: T },
    /// `μ ≥ μ^Bayes` fails; `bound` is `μ^Bayes`.
    Assumption2 { mu: T, bound: T },
}

impl<T: Scalar> fmt::Display for Violation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Range {
                field,
                value,
                bound,
            } => write!(f, "range: {field} = {value} violates {bound}"),
            Violation::Assumption1 { q, bound } => {
                write!(f, "assumption1: q = {q} must be < 1/(1+beta) = {bound}")
            }
            Violation::Assumption2 { mu, bound } => {
                write!(f, "assumption2: mu = {mu} must be >= mu_bayes = {bound}")
            }
        }
    }
}

impl<T> Violation<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Range { .. } => "range",
            Violation::Assumption1 { .. } => "assumption1",
            Violation::Assumption2 { .. } => "assumption2",
        }
    }
}

/// Every constraint the tuple violates, in a stable order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError<T> {
    pub violations: Vec<Violation<T>>,
}

impl<T: Scalar> fmt::Display for ValidationError<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl<T: Scalar> std::error::Error for ValidationError<T> {}

/// Checks ranges, then both assumptions, collecting every violation.
///
/// Assumption checks need a well-formed `q` and `β` (and `σ` for the second),
/// so they are skipped when those primitives are themselves out of range.
pub fn validate<T: Scalar>(raw: RawParams<T>) -> Result<ModelParams<T>, ValidationError<T>> {
    let mut violations = Vec::new();
    let mut range = |field, value: T, ok: bool, bound| {
        if !ok {
            violations.push(Violation::Range {
                field,
                value,
                bound,
            });
        }
        ok
    };
    let zero = T::zero();
    let q_ok = range(
        "q",
        raw.q,
        raw.q.is_finite() && raw.q > zero && raw.q < T::one(),
        "0 < q < 1",
    );
    let beta_ok = range(
        "beta",
        raw.beta,
        raw.beta.is_finite() && raw.beta > zero,
        "beta > 0",
    );
    range(
        "delta",
        raw.delta,
        raw.delta.is_finite() && raw.delta > zero,
        "delta > 0",
    );
    let mu_ok = range("mu", raw.mu, raw.mu.is_finite() && raw.mu > zero, "mu > 0");
    let sigma_ok = range(
        "sigma",
        raw.sigma,
        raw.sigma.is_finite() && raw.sigma > zero,
        "sigma > 0",
    );

    if q_ok && beta_ok {
        let bound = T::one() / (T::one() + raw.beta);
        if raw.q >= bound {
            violations.push(Violation::Assumption1 { q: raw.q, bound });
        } else if mu_ok && sigma_ok {
            if let Some(mb) = mu_bayes(raw.q, raw.beta, raw.sigma) {
                if raw.mu < mb {
                    violations.push(Violation::Assumption2 {
                        mu: raw.mu,
                        bound: mb,
                    });
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(ModelParams::new_unchecked(
            raw.q, raw.beta, raw.delta, raw.mu, raw.sigma,
        ))
    } else {
        Err(ValidationError { violations })
    }
}

/// Realized policy utility `u(p, ω)`.
pub fn utility<T: Scalar>(p: Policy, omega: State, params: &ModelParams<T>) -> T {
    match omega {
        State::Mild => -lit::<T>(p.index() as f64),
        State::Severe => {
            let wrong = if p == Policy::One { T::zero() } else { T::one() };
            -params.delta - params.beta * wrong
        }
    }
}

/// Lowest informativeness at which Bayesian voters aggregate information:
/// `σ·sqrt(ln((1−q)/(βq)) / 2)`.
///
/// Returns `None` when `(1−q)/(βq) < 1`, i.e. outside Assumption 1.
pub fn mu_bayes<T: Scalar>(q: T, beta: T, sigma: T) -> Option<T> {
    let log_odds = ((T::one() - q) / (beta * q)).ln();
    if log_odds.is_nan() || log_odds < T::zero() {
        return None;
    }
    Some(sigma * (log_odds * half()).sqrt())
}

/// `ln f(s | ω=1) − ln f(s | ω=0) = 2μs/σ²`.
pub fn signal_log_likelihood_ratio<T: Scalar>(s: T, mu: T, sigma: T) -> T {
    two::<T>() * mu * s / (sigma * sigma)
}

/// Mean of the signal distribution in `omega`.
pub fn signal_mean<T: Scalar>(omega: State, params: &ModelParams<T>) -> T {
    omega.signed::<T>() * params.mu
}

/// `P(signal ≤ s | ω)`.
pub fn signal_cdf<T: Scalar>(s: T, omega: State, params: &ModelParams<T>) -> T {
    std_normal_cdf((s - signal_mean(omega, params)) / params.sigma)
}

/// `P(lo < signal ≤ hi | ω)`, computed on whichever tail avoids cancellation.
/// Infinite endpoints are allowed.
pub fn signal_mass<T: Scalar>(lo: T, hi: T, omega: State, params: &ModelParams<T>) -> T {
    if hi <= lo {
        return T::zero();
    }
    let m = signal_mean(omega, params);
    let z_lo = (lo - m) / params.sigma;
    let z_hi = (hi - m) / params.sigma;
    if z_lo >= T::zero() {
        std_normal_cdf(-z_lo) - std_normal_cdf(-z_hi)
    } else {
        std_normal_cdf(z_hi) - std_normal_cdf(z_lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams<f64> {
        ModelParams::new(0.25, 1.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn validate_accepts_reference_tuple() {
        let p = RawParams::new(0.25, 1.0, 2.0, 1.0, 1.0).validate().unwrap();
        assert_eq!(p.q(), 0.25);
        // μ^Bayes = 0 at (1−q)/(βq) = 1 is only reachable on the Assumption 1
        // boundary, so q = 0.5 with β = 1 is rejected by the first assumption.
        let err = RawParams::new(0.5, 1.0, 2.0, 0.1, 1.0).validate().unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert_eq!(err.violations[0].kind(), "assumption1");
    }

    #[test]
    fn validate_flags_assumption1() {
        let err = RawParams::new(0.6, 1.0, 2.0, 1.0, 1.0).validate().unwrap_err();
        assert_eq!(
            err.violations,
            vec![Violation::Assumption1 { q: 0.6, bound: 0.5 }]
        );
    }

    #[test]
    fn validate_reports_every_violation() {
        let err = RawParams::new(1.5, -1.0, 0.0, f64::NAN, 1.0)
            .validate()
            .unwrap_err();
        let kinds: Vec<_> = err
            .violations
            .iter()
            .map(|v| match v {
                Violation::Range { field, .. } => *field,
                _ => "other",
            })
            .collect();
        assert_eq!(kinds, vec!["q", "beta", "delta", "mu"]);
    }

    #[test]
    fn validate_flags_assumption2_with_bound() {
        let err = RawParams::new(0.25f64, 1.0, 2.0, 0.5, 1.0).validate().unwrap_err();
        match err.violations.as_slice() {
            [Violation::Assumption2 { mu, bound }] => {
                assert_eq!(*mu, 0.5);
                assert!((bound - 0.741_151_903_683_755_6).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn utility_table() {
        let p = base();
        assert_eq!(utility(Policy::Zero, State::Mild, &p), 0.0);
        assert_eq!(utility(Policy::One, State::Mild, &p), -1.0);
        assert_eq!(utility(Policy::Zero, State::Severe, &p), -3.0);
        assert_eq!(utility(Policy::One, State::Severe, &p), -2.0);
    }

    #[test]
    fn mu_bayes_values() {
        assert_eq!(mu_bayes(0.5, 1.0, 1.0), Some(0.0));
        let m = mu_bayes(0.25, 1.0, 1.0).unwrap();
        assert!((m - (3f64.ln() / 2.0).sqrt()).abs() < 1e-15);
        assert!((m - 0.7411).abs() < 1e-4);
        let m2 = mu_bayes(0.25f64, 1.0, 2.0).unwrap();
        assert!((m2 - 1.4823).abs() < 1e-4);
        assert_eq!(mu_bayes(0.6, 1.0, 1.0), None);
    }

    #[test]
    fn llr_values() {
        assert_eq!(signal_log_likelihood_ratio(0.0, 1.0, 1.0), 0.0);
        assert_eq!(signal_log_likelihood_ratio(0.5, 1.0, 1.0), 1.0);
        assert_eq!(signal_log_likelihood_ratio(-0.5, 1.0, 1.0), -1.0);
    }

    #[test]
    fn cdf_values() {
        let p = base();
        assert!((signal_cdf(1.0, State::Severe, &p) - 0.5).abs() < 1e-15);
        assert!((signal_cdf(-1.0, State::Mild, &p) - 0.5).abs() < 1e-15);
        assert!((signal_cdf(0.0, State::Severe, &p) - 0.158_655_253_931_457).abs() < 1e-12);
    }

    #[test]
    fn mass_uses_stable_tail() {
        let p = base();
        let m = signal_mass(9.0, f64::INFINITY, State::Mild, &p);
        assert!(m > 0.0 && m < 1e-20);
        let whole = signal_mass(f64::NEG_INFINITY, f64::INFINITY, State::Severe, &p);
        assert!((whole - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kv_round_trip() {
        let raw = RawParams::new(0.25, 1.0, 2.0, 1.0, 1.0);
        let text = raw.to_kv().render();
        let back = RawParams::<f64>::from_kv(&KvRecord::parse(&text).unwrap()).unwrap();
        assert_eq!(raw, back);
    }
}
