//! Costly belief distortion.
//!
//! Two regimes: a fixed cost `γ` paid whenever `μ̃ ≠ μ`, and the asymmetric
//! quadratic cost
//!
//! ```text
//! C(μ̃) = c/2 · (μ̃ − μ)²              μ̃ ≥ μ
//! C(μ̃) = c/2 · ((μ/μ̃)(μ̃ − μ))²       μ̃ < μ
//! ```
//!
//! which charges equal amounts for equal relative distortions up and down.
//! All quantities here assume split platforms are off path, so the belief
//! before the private signal is the prior `q`.

use std::fmt;

use thiserror::Error;

use crate::beliefs::{
    anticipatory_utility, au_derivative_from_pooled, distortion_incentive, is_indifferent,
    optimal_distortion_free, posterior_from_pooled, Distortion,
};
use crate::model::{signal_mass, ModelParams, State};
use crate::scalar::{half, lit, two, Scalar};
use crate::voting::{self, KappaProfile};

/// Distortion-cost regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostSpec<T> {
    Free,
    Fixed(T),
    Quadratic(T),
}

impl<T: Scalar> CostSpec<T> {
    pub fn is_valid(&self) -> bool {
        match *self {
            CostSpec::Free => true,
            CostSpec::Fixed(g) => g.is_finite() && g >= T::zero(),
            CostSpec::Quadratic(c) => c.is_finite() && c >= T::zero(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostSpec::Free => "free",
            CostSpec::Fixed(_) => "fixed",
            CostSpec::Quadratic(_) => "quadratic",
        }
    }

    pub fn level(&self) -> Option<T> {
        match *self {
            CostSpec::Free => None,
            CostSpec::Fixed(v) | CostSpec::Quadratic(v) => Some(v),
        }
    }
}

impl<T: Scalar> fmt::Display for CostSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostSpec::Free => write!(f, "free"),
            CostSpec::Fixed(g) => write!(f, "fixed:{g}"),
            CostSpec::Quadratic(c) => write!(f, "quadratic:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("cost level must be finite and nonnegative, got {0}")]
    InvalidCost(f64),
    #[error("log argument {argument} is not positive while computing {what}")]
    DomainError { what: &'static str, argument: f64 },
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("no threshold: {0}")]
    NoThreshold(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error(transparent)]
    Voting(#[from] voting::VotingError),
}

/// Fixed-cost distortion thresholds for a given `κ` and `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedCostThresholds<T> {
    pub gamma_plus: T,
    pub gamma_minus: T,
    /// Voters with `s ≥ s⁺` ignore their signal. Present iff `γ < γ⁺`.
    pub s_plus: Option<T>,
    /// Voters with `s ∈ [s⁻, 0)` treat their signal as conclusive. Present iff `γ < γ⁻`.
    pub s_minus: Option<T>,
    /// Largest gap between a closed form and the direct indifference root.
    pub closed_form_gap: T,
    pub warnings: Vec<String>,
}

/// `(γ⁺, γ⁻) = ((1−q)(β+Δ−(β+1)κ), q(β+Δ−(β+1)κ))`: the largest gains from
/// distorting good and bad news respectively.
pub fn gamma_bounds<T: Scalar>(params: &ModelParams<T>, kappa: T) -> (T, T) {
    let incentive = distortion_incentive(params, kappa);
    let q = params.q();
    ((T::one() - q) * incentive, q * incentive)
}

fn log_signal<T: Scalar>(params: &ModelParams<T>, argument: T, what: &'static str) -> Result<T, CostError> {
    if !(argument > T::zero()) {
        return Err(CostError::DomainError {
            what,
            argument: argument.to_f64().unwrap_or(f64::NAN),
        });
    }
    let sig2 = params.sigma() * params.sigma();
    Ok(sig2 * argument.ln() / (two::<T>() * params.mu()))
}

/// Closed forms without the runtime cross-check.
///
/// `s⁺ = σ²/(2μ)·ln(1 + γ/(q((1−q)D − γ)))` and
/// `s⁻ = σ²/(2μ)·ln(γ(1−q)/(q(D − γ)))` with `D = β+Δ−(β+1)κ`.
pub fn closed_form_signals<T: Scalar>(
    params: &ModelParams<T>,
    kappa: T,
    gamma: T,
) -> Result<(Option<T>, Option<T>), CostError> {
    if !(gamma.is_finite() && gamma >= T::zero()) {
        return Err(CostError::InvalidCost(gamma.to_f64().unwrap_or(f64::NAN)));
    }
    let (g_plus, g_minus) = gamma_bounds(params, kappa);
    let q = params.q();
    let incentive = distortion_incentive(params, kappa);
    let s_plus = if gamma < g_plus {
        let arg = T::one() + gamma / (q * ((T::one() - q) * incentive - gamma));
        Some(log_signal(params, arg, "s_plus")?)
    } else {
        None
    };
    let s_minus = if gamma < g_minus {
        if gamma == T::zero() {
            Some(T::neg_infinity())
        } else {
            let arg = gamma * (T::one() - q) / (q * (incentive - gamma));
            Some(log_signal(params, arg, "s_minus")?)
        }
    } else {
        None
    };
    Ok((s_plus, s_minus))
}

/// Payoff of a voter at signal `s` choosing `mu_tilde` under `cost`.
/// Infinite for the symbolic endpoints under quadratic cost.
pub fn objective<T: Scalar>(
    params: &ModelParams<T>,
    s: T,
    kappa: T,
    cost: &CostSpec<T>,
    mu_tilde: Distortion<T>,
) -> T {
    let pi = posterior_from_pooled(params, params.q(), s, mu_tilde);
    let au = anticipatory_utility(params, pi, kappa);
    let penalty = match *cost {
        CostSpec::Free => T::zero(),
        CostSpec::Fixed(g) => {
            if mu_tilde == Distortion::Finite(params.mu()) {
                T::zero()
            } else {
                g
            }
        }
        CostSpec::Quadratic(c) => distortion_cost(c, params.mu(), mu_tilde),
    };
    au - penalty
}

/// Indifference gap at `s` for the corner on the side of `s`: positive when
/// distorting (and paying `γ`) beats updating honestly.
fn corner_gain<T: Scalar>(params: &ModelParams<T>, s: T, kappa: T, gamma: T) -> T {
    let corner = if s > T::zero() {
        Distortion::Zero
    } else {
        Distortion::Infinity
    };
    let fixed = CostSpec::Fixed(gamma);
    objective(params, s, kappa, &fixed, corner)
        - objective(params, s, kappa, &fixed, Distortion::Finite(params.mu()))
}

/// Solves the indifference equations by bisection on `s`, independently of
/// the closed forms. Requires `β+Δ−(β+1)κ > 0`.
pub fn direct_indifference_signals<T: Scalar>(
    params: &ModelParams<T>,
    kappa: T,
    gamma: T,
) -> (Option<T>, Option<T>) {
    let (g_plus, g_minus) = gamma_bounds(params, kappa);
    let gain = |s: T| corner_gain(params, s, kappa, gamma);
    let scale = params.sigma() * params.sigma() / params.mu();
    // gain rises with s on both sides of zero
    let s_plus = (gamma < g_plus).then(|| {
        if gamma == T::zero() {
            return T::zero();
        }
        let mut hi = scale;
        while gain(hi) < T::zero() && hi < lit(1e200) {
            hi = hi * two();
        }
        bisect_sign(T::zero(), hi, gain)
    });
    let s_minus = (gamma < g_minus).then(|| {
        if gamma == T::zero() {
            return T::neg_infinity();
        }
        let mut lo = -scale;
        while gain(lo) > T::zero() && lo > lit(-1e200) {
            lo = lo * two();
        }
        bisect_sign(lo, T::zero(), gain)
    });
    (s_plus, s_minus)
}

/// Bisection for the sign change of an increasing `f` on `[lo, hi]`, run to
/// floating-point resolution.
fn bisect_sign<T: Scalar>(mut lo: T, mut hi: T, f: impl Fn(T) -> T) -> T {
    for _ in 0..400 {
        let mid = (lo + hi) * half();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) * half()
}

/// Thresholds of the fixed-cost distortion rule, with each closed form checked
/// against the direct indifference root.
///
/// When a closed form misses its root by more than `1e-8` the numerical root
/// is used instead and the residual is recorded in `warnings`.
pub fn indifference_signals<T: Scalar>(
    params: &ModelParams<T>,
    kappa: T,
    gamma: T,
) -> Result<FixedCostThresholds<T>, CostError> {
    let (gamma_plus, gamma_minus) = gamma_bounds(params, kappa);
    let (closed_plus, closed_minus) = closed_form_signals(params, kappa, gamma)?;
    let (direct_plus, direct_minus) = direct_indifference_signals(params, kappa, gamma);
    let tol: T = lit(1e-8);
    let mut warnings = Vec::new();
    let mut gap = T::zero();
    let mut reconcile = |name: &str, closed: Option<T>, direct: Option<T>| match (closed, direct) {
        (Some(c), Some(d)) if c.is_finite() && d.is_finite() => {
            let diff = (c - d).abs();
            gap = gap.max(diff);
            if diff > tol * T::one().max(d.abs()) {
                warnings.push(format!(
                    "{name}: closed form {c} differs from indifference root {d} by {diff}"
                ));
                Some(d)
            } else {
                Some(c)
            }
        }
        (c, _) => c,
    };
    let s_plus = reconcile("s_plus", closed_plus, direct_plus);
    let s_minus = reconcile("s_minus", closed_minus, direct_minus);
    Ok(FixedCostThresholds {
        gamma_plus,
        gamma_minus,
        s_plus,
        s_minus,
        closed_form_gap: gap,
        warnings,
    })
}

/// Fixed-cost optimal distortion: `0` for `s ≥ s⁺`, `∞` for `s ∈ [s⁻, 0)`,
/// `μ` otherwise. When the incentive is reversed (`κ > κ̃`, only possible for
/// `Δ < 1`) the cost-free corner is compared directly against honest updating.
pub fn optimal_distortion_fixed<T: Scalar>(
    params: &ModelParams<T>,
    s: T,
    kappa: T,
    gamma: T,
) -> Result<Distortion<T>, CostError> {
    let honest = Distortion::Finite(params.mu());
    let incentive = distortion_incentive(params, kappa);
    if s == T::zero() || is_indifferent(params, incentive) {
        return Ok(honest);
    }
    if incentive < T::zero() {
        let corner = optimal_distortion_free(params, s, kappa);
        let fixed = CostSpec::Fixed(gamma);
        let gain = objective(params, s, kappa, &fixed, corner)
            - objective(params, s, kappa, &fixed, honest);
        return Ok(if gain > T::zero() { corner } else { honest });
    }
    let (s_plus, s_minus) = closed_form_signals(params, kappa, gamma)?;
    Ok(if s > T::zero() {
        match s_plus {
            Some(sp) if s >= sp => Distortion::Zero,
            _ => honest,
        }
    } else {
        match s_minus {
            Some(sm) if s >= sm => Distortion::Infinity,
            _ => honest,
        }
    })
}

/// State-1 share voting for policy 1 under fixed cost `γ` with `κ = 0`:
/// `Φ((s⁺₀−μ)/σ) − Φ((s*−μ)/σ)` when `s⁺₀ > s*`, else `0`.
pub fn fixed_cost_policy1_share<T: Scalar>(params: &ModelParams<T>, gamma: T) -> Result<T, CostError> {
    let (s_plus, _) = closed_form_signals(params, T::zero(), gamma)?;
    let s_star = voting::thresholds(params).s_star;
    let upper = s_plus.unwrap_or(T::infinity());
    Ok(signal_mass(s_star, upper, State::Severe, params))
}

/// One bracket of a threshold bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketStep<T> {
    pub lo: T,
    pub hi: T,
    /// State-1 policy-1 share at the midpoint evaluated in this step.
    pub share: T,
}

/// A critical cost level together with how well it solves `V₀ = 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSolution<T> {
    pub value: T,
    pub share: T,
    /// `|V₀(value) − 1/2|`.
    pub achieved: T,
    pub history: Vec<BracketStep<T>>,
}

/// `γ̂`: the fixed cost at which half the voters vote for policy 1 in the
/// severe state. Inactivity is the unique equilibrium iff `γ < γ̂`.
pub fn gamma_hat<T: Scalar>(params: &ModelParams<T>) -> Result<ThresholdSolution<T>, CostError> {
    require_catastrophic(params)?;
    let (g_plus, _) = gamma_bounds(params, T::zero());
    let target = half::<T>();
    let share = |g: T| fixed_cost_policy1_share(params, g);
    let sup = share(g_plus)?;
    if sup <= target {
        return Err(CostError::NoThreshold(format!(
            "policy-1 share never exceeds 1/2 for gamma in [0, {g_plus}]: supremum {sup}"
        )));
    }
    let (mut lo, mut hi) = (T::zero(), g_plus);
    let mut history = Vec::new();
    let mut best = (hi, sup);
    for _ in 0..200 {
        let mid = (lo + hi) * half();
        let v = share(mid)?;
        history.push(BracketStep { lo, hi, share: v });
        if (v - target).abs() < (best.1 - target).abs() {
            best = (mid, v);
        }
        if (v - target).abs() <= lit(1e-13) || mid <= lo || mid >= hi {
            break;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdSolution {
        value: best.0,
        share: best.1,
        achieved: (best.1 - target).abs(),
        history,
    })
}

fn require_catastrophic<T: Scalar>(params: &ModelParams<T>) -> Result<(), CostError> {
    if params.delta() > T::one() {
        Ok(())
    } else {
        Err(CostError::UnsupportedRegime(format!(
            "cost thresholds are defined for delta > 1, got delta = {}",
            params.delta()
        )))
    }
}

/// Asymmetric quadratic distortion cost; `+∞` at the symbolic endpoints.
pub fn distortion_cost<T: Scalar>(c: T, mu: T, mu_tilde: Distortion<T>) -> T {
    match mu_tilde {
        Distortion::Zero | Distortion::Infinity => {
            if c > T::zero() {
                T::infinity()
            } else {
                T::zero()
            }
        }
        Distortion::Finite(m) => {
            let dev = if m >= mu { m - mu } else { mu / m * (m - mu) };
            c * half() * dev * dev
        }
    }
}

/// `∂C/∂μ̃`: `c(μ̃−μ)` above `μ`, `c(μ/μ̃)³(μ̃−μ)` below.
pub fn distortion_cost_slope<T: Scalar>(c: T, mu: T, mu_tilde: T) -> T {
    if mu_tilde >= mu {
        c * (mu_tilde - mu)
    } else {
        let r = mu / mu_tilde;
        c * r * r * r * (mu_tilde - mu)
    }
}

/// Interior optimum of the quadratic-cost objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticSolution<T> {
    pub mu_tilde: T,
    /// `|∂W/∂μ̃|` at the returned point.
    pub residual: T,
    /// Number of interior local maxima found on the scanned side.
    pub local_maxima: usize,
}

/// First-order condition `∂W/∂μ̃` under quadratic cost.
pub fn quadratic_foc<T: Scalar>(params: &ModelParams<T>, s: T, kappa: T, c: T, mu_tilde: T) -> T {
    au_derivative_from_pooled(params, params.q(), s, mu_tilde, kappa)
        - distortion_cost_slope(c, params.mu(), mu_tilde)
}

const FOC_SCAN_PER_DECADE: usize = 64;

/// Maximizes `AU − C` over `μ̃ ∈ (0, ∞)` under quadratic cost `c > 0`.
///
/// The sign of the first-order condition at `μ` fixes the side of the optimum
/// (below `μ` when `s·(β+Δ−(β+1)κ) > 0`). That side is scanned on a geometric
/// grid for every downward crossing of the FOC; each crossing is refined by
/// bisection and the crossing with the highest payoff is returned. The
/// objective is not concave everywhere for small `c`, so more than one local
/// maximum can exist.
pub fn solve_quadratic_distortion<T: Scalar>(
    params: &ModelParams<T>,
    s: T,
    kappa: T,
    c: T,
) -> Result<QuadraticSolution<T>, CostError> {
    if !(c.is_finite() && c > T::zero()) {
        return Err(CostError::InvalidCost(c.to_f64().unwrap_or(f64::NAN)));
    }
    if !s.is_finite() {
        return Err(CostError::SolverFailure(format!("signal {s} is not finite")));
    }
    let mu = params.mu();
    let foc = |m: T| quadratic_foc(params, s, kappa, c, m);
    let at_mu = foc(mu);
    if s == T::zero() || at_mu == T::zero() {
        return Ok(QuadraticSolution {
            mu_tilde: mu,
            residual: T::zero(),
            local_maxima: 1,
        });
    }
    let below = at_mu < T::zero();
    let ten: T = lit(10.0);

    // far end of the bracket: FOC must point back toward μ there
    let mut decades = 1usize;
    let mut far = if below { mu / ten } else { mu * ten };
    loop {
        let v = foc(far);
        let ok = if below { v > T::zero() } else { v < T::zero() };
        if ok {
            break;
        }
        decades += 1;
        if decades > 300 {
            return Err(CostError::SolverFailure(format!(
                "no bracket for s = {s}, c = {c}: FOC {v} at {far}"
            )));
        }
        far = if below { far / ten } else { far * ten };
    }

    // grid from the far end toward μ, ascending in μ̃
    let n = decades * FOC_SCAN_PER_DECADE;
    let (lo_end, hi_end) = if below { (far, mu) } else { (mu, far) };
    let ratio = (hi_end / lo_end).ln() / lit::<T>(n as f64);
    let grid: Vec<T> = (0..=n)
        .map(|i| {
            if i == n {
                hi_end
            } else {
                lo_end * (ratio * lit::<T>(i as f64)).exp()
            }
        })
        .collect();
    let values: Vec<T> = grid.iter().map(|&m| foc(m)).collect();

    let mut best: Option<(T, T, T)> = None; // (payoff, μ̃, residual)
    let mut maxima = 0usize;
    let cost = CostSpec::Quadratic(c);
    for i in 0..n {
        let (a, b) = (values[i], values[i + 1]);
        // downward crossing: W rises then falls
        if a > T::zero() && b <= T::zero() {
            maxima += 1;
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            for _ in 0..300 {
                let mid = (lo + hi) * half();
                if mid <= lo || mid >= hi {
                    break;
                }
                if foc(mid) > T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (flo, fhi) = (foc(lo).abs(), foc(hi).abs());
            let (root, residual) = if flo <= fhi { (lo, flo) } else { (hi, fhi) };
            let payoff = objective(params, s, kappa, &cost, Distortion::Finite(root));
            if best.is_none_or(|(w, _, _)| payoff > w) {
                best = Some((payoff, root, residual));
            }
        }
    }
    let (_, root, residual) = best.ok_or_else(|| {
        CostError::SolverFailure(format!("no FOC crossing found for s = {s}, c = {c}"))
    })?;
    let tol = lit::<T>(1e-10) * T::one().max(c * mu);
    if !(residual <= tol) {
        return Err(CostError::SolverFailure(format!(
            "FOC residual {residual} above {tol} at mu_tilde = {root} (s = {s}, c = {c})"
        )));
    }
    Ok(QuadraticSolution {
        mu_tilde: root,
        residual,
        local_maxima: maxima,
    })
}

/// Analytic optimal distortion under any cost regime.
pub fn optimal_distortion<T: Scalar>(
    params: &ModelParams<T>,
    s: T,
    kappa: T,
    cost: &CostSpec<T>,
) -> Result<Distortion<T>, CostError> {
    match *cost {
        CostSpec::Free => Ok(optimal_distortion_free(params, s, kappa)),
        CostSpec::Fixed(g) => optimal_distortion_fixed(params, s, kappa, g),
        CostSpec::Quadratic(c) if c == T::zero() => Ok(optimal_distortion_free(params, s, kappa)),
        CostSpec::Quadratic(c) => {
            solve_quadratic_distortion(params, s, kappa, c).map(|sol| Distortion::Finite(sol.mu_tilde))
        }
    }
}

/// State-1 share voting for policy 1 under quadratic cost `c` with `κ = 0`.
pub fn quadratic_cost_policy1_share<T: Scalar>(params: &ModelParams<T>, c: T) -> Result<T, CostError> {
    let shares = voting::vote_shares(params, &CostSpec::Quadratic(c), &KappaProfile::Constant(T::zero()))?;
    Ok(shares.share_policy1_state1)
}

/// `ĉ`: the quadratic cost level at which half the voters vote for policy 1 in
/// the severe state. Bisection in `ln c`, relying on the share being
/// increasing in `c`.
pub fn c_hat<T: Scalar>(params: &ModelParams<T>) -> Result<ThresholdSolution<T>, CostError> {
    require_catastrophic(params)?;
    let target = half::<T>();
    let share = |c: T| quadratic_cost_policy1_share(params, c);
    let four: T = lit(4.0);
    let mut history = Vec::new();

    let mut lo = T::one();
    let mut v_lo = share(lo)?;
    history.push(BracketStep { lo, hi: lo, share: v_lo });
    while v_lo >= target {
        lo = lo / four;
        if lo < lit(1e-12) {
            return Err(CostError::NoThreshold(format!(
                "policy-1 share stays at or above 1/2 down to c = {lo}"
            )));
        }
        v_lo = share(lo)?;
        history.push(BracketStep { lo, hi: lo, share: v_lo });
    }
    let mut hi = lo * four;
    let mut v_hi = share(hi)?;
    history.push(BracketStep { lo: hi, hi, share: v_hi });
    while v_hi <= target {
        lo = hi;
        v_lo = v_hi;
        hi = hi * four;
        if hi > lit(1e12) {
            return Err(CostError::NoThreshold(format!(
                "policy-1 share stays at or below 1/2 up to c = {hi} (last {v_hi})"
            )));
        }
        v_hi = share(hi)?;
        history.push(BracketStep { lo: hi, hi, share: v_hi });
    }

    let mut best = if (v_lo - target).abs() < (v_hi - target).abs() {
        (lo, v_lo)
    } else {
        (hi, v_hi)
    };
    for _ in 0..120 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        let v = share(mid)?;
        history.push(BracketStep { lo, hi, share: v });
        if (v - target).abs() < (best.1 - target).abs() {
            best = (mid, v);
        }
        if (v - target).abs() <= lit(1e-10) {
            break;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdSolution {
        value: best.0,
        share: best.1,
        achieved: (best.1 - target).abs(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pinned() -> ModelParams<f64> {
        ModelParams::new(0.3, 1.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gamma_bound_examples() {
        let (gp, gm) = gamma_bounds(&pinned(), 0.0);
        assert!((gp - 2.1).abs() < 1e-15);
        assert!((gm - 0.9).abs() < 1e-15);
        let even = ModelParams::new_unchecked(0.5, 1.0, 2.0, 1.0, 1.0);
        let (gp, gm) = gamma_bounds(&even, 0.0);
        assert_eq!(gp, gm);
        let heavy = ModelParams::new_unchecked(0.7, 0.2, 2.0, 1.0, 1.0);
        let (gp, gm) = gamma_bounds(&heavy, 0.0);
        assert!(gm > gp);
    }

    #[test]
    fn s_plus_reference_value() {
        let t = indifference_signals(&pinned(), 0.0, 0.5).unwrap();
        let expected = (1.0f64 + 0.5 / (0.3 * (3.0 * 0.7 - 0.5))).ln() / 2.0;
        let sp = t.s_plus.unwrap();
        assert!((sp - expected).abs() < 1e-14);
        assert!((sp - 0.356_883_233_881_340_6).abs() < 1e-12);
        assert!(t.warnings.is_empty(), "{:?}", t.warnings);
        assert!(t.closed_form_gap < 1e-8);
    }

    #[test]
    fn s_minus_vanishes_at_gamma_minus() {
        let p = pinned();
        let (_, gm) = gamma_bounds(&p, 0.0);
        let (_, sm) = closed_form_signals(&p, 0.0, gm * (1.0 - 1e-12)).unwrap();
        assert!(sm.unwrap().abs() < 1e-9);
        let (_, sm) = closed_form_signals(&p, 0.0, gm).unwrap();
        assert_eq!(sm, None);
    }

    #[test]
    fn small_gamma_limits() {
        let p = pinned();
        let (sp, sm) = closed_form_signals(&p, 0.0, 1e-12).unwrap();
        assert!(sp.unwrap() > 0.0 && sp.unwrap() < 1e-10);
        assert!(sm.unwrap() < -10.0);
        let (sp, sm) = closed_form_signals(&p, 0.0, 0.0).unwrap();
        assert_eq!(sp, Some(0.0));
        assert_eq!(sm, Some(f64::NEG_INFINITY));
    }

    #[test]
    fn thresholds_absent_above_bounds() {
        let t = indifference_signals(&pinned(), 0.0, 5.0).unwrap();
        assert_eq!(t.s_plus, None);
        assert_eq!(t.s_minus, None);
        assert!(matches!(
            closed_form_signals(&pinned(), 0.0, -1.0),
            Err(CostError::InvalidCost(_))
        ));
    }

    #[test]
    fn fixed_rule_matches_thresholds() {
        let p = pinned();
        let t = indifference_signals(&p, 0.0, 0.5).unwrap();
        let (sp, sm) = (t.s_plus.unwrap(), t.s_minus.unwrap());
        let honest = Distortion::Finite(1.0);
        assert_eq!(optimal_distortion_fixed(&p, sp + 1e-9, 0.0, 0.5).unwrap(), Distortion::Zero);
        assert_eq!(optimal_distortion_fixed(&p, sp - 1e-9, 0.0, 0.5).unwrap(), honest);
        assert_eq!(optimal_distortion_fixed(&p, sm + 1e-9, 0.0, 0.5).unwrap(), Distortion::Infinity);
        assert_eq!(optimal_distortion_fixed(&p, sm - 1e-9, 0.0, 0.5).unwrap(), honest);
        assert_eq!(optimal_distortion_fixed(&p, 0.0, 0.0, 0.5).unwrap(), honest);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(distortion_cost(2.0, 1.0, Distortion::Finite(1.0)), 0.0);
        assert_eq!(distortion_cost(2.0, 1.0, Distortion::Finite(2.0)), 1.0);
        let up = distortion_cost(2.0, 1.0, Distortion::Finite(3.0));
        let down = distortion_cost(2.0, 1.0, Distortion::Finite(1.0f64 / 3.0));
        assert_eq!(up, 4.0);
        assert!((down - 4.0).abs() < 1e-14);
        assert_eq!(distortion_cost(2.0, 1.0, Distortion::Zero), f64::INFINITY);
        assert_eq!(distortion_cost(2.0, 1.0, Distortion::Infinity), f64::INFINITY);
    }

    #[test]
    fn cost_slope_matches_finite_difference() {
        for &m in &[0.3f64, 0.8, 1.4, 3.0] {
            let h = 1e-6;
            let fd = (distortion_cost(2.0, 1.0, Distortion::Finite(m + h))
                - distortion_cost(2.0, 1.0, Distortion::Finite(m - h)))
                / (2.0 * h);
            assert!((fd - distortion_cost_slope(2.0, 1.0, m)).abs() < 1e-6);
        }
    }

    #[test]
    fn quadratic_zero_signal_and_limits() {
        let p = pinned();
        assert_eq!(solve_quadratic_distortion(&p, 0.0, 0.0, 2.0).unwrap().mu_tilde, 1.0);
        for s in [1e6, -1e6] {
            let m = solve_quadratic_distortion(&p, s, 0.0, 2.0).unwrap().mu_tilde;
            assert!((m - 1.0).abs() < 1e-6, "s = {s}: {m}");
        }
    }

    #[test]
    fn quadratic_direction() {
        let p = pinned();
        let up = solve_quadratic_distortion(&p, -0.5, 0.0, 2.0).unwrap();
        let down = solve_quadratic_distortion(&p, 0.5, 0.0, 2.0).unwrap();
        assert!(up.mu_tilde > 1.0);
        assert!(down.mu_tilde < 1.0);
        assert!(down.residual <= 1e-10 && up.residual <= 1e-10);
    }

    #[test]
    fn quadratic_rejects_bad_cost() {
        assert!(solve_quadratic_distortion(&pinned(), 0.5, 0.0, 0.0).is_err());
        assert!(solve_quadratic_distortion(&pinned(), 0.5, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn fixed_share_is_zero_without_cost() {
        assert_eq!(fixed_cost_policy1_share(&pinned(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_hat_solves_half_share() {
        let sol = gamma_hat(&pinned()).unwrap();
        assert!(sol.achieved <= 1e-9);
        assert!(sol.value > 0.0 && sol.value < 2.1);
        assert!(!sol.history.is_empty());
    }

    #[test]
    fn thresholds_require_catastrophic_losses() {
        let mild = ModelParams::new(0.3, 1.0, 0.5, 1.0, 1.0).unwrap();
        assert!(matches!(gamma_hat(&mild), Err(CostError::UnsupportedRegime(_))));
        assert!(matches!(c_hat(&mild), Err(CostError::UnsupportedRegime(_))));
    }

    #[test]
    fn gamma_hat_absent_at_bayes_boundary() {
        let mb = crate::model::mu_bayes(0.3, 1.0, 1.0).unwrap();
        let p = ModelParams::new(0.3, 1.0, 2.0, mb, 1.0).unwrap();
        assert!(matches!(gamma_hat(&p), Err(CostError::NoThreshold(_))));
    }
}
