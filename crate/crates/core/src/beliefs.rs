//! Voter cognition: posteriors under a distorted informativeness parameter,
//! anticipatory utility, and the cost-free optimal distortion.
//!
//! `κ` enters every function here as an already-realized probability. How a
//! voter's `κ` depends on her signal is resolved by the voting layer.

use std::fmt;

use crate::model::{CandidateMixing, ModelParams};
use crate::scalar::{lit, logistic, logit, two, Scalar};

/// Perceived informativeness `μ̃ ∈ [0, +∞]`.
///
/// The endpoints are symbolic: `Zero` ignores the signal, `Infinity` treats any
/// nonzero signal as conclusive. `Finite` holds a strictly positive value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distortion<T> {
    Zero,
    Finite(T),
    Infinity,
}

impl<T: Scalar> Distortion<T> {
    /// Wraps a raw value, mapping `0` and `+∞` onto the symbolic endpoints.
    pub fn from_value(v: T) -> Self {
        if v <= T::zero() {
            Distortion::Zero
        } else if v.is_infinite() {
            Distortion::Infinity
        } else {
            Distortion::Finite(v)
        }
    }

    pub fn value(&self) -> T {
        match *self {
            Distortion::Zero => T::zero(),
            Distortion::Finite(v) => v,
            Distortion::Infinity => T::infinity(),
        }
    }

    pub fn is_endpoint(&self) -> bool {
        !matches!(self, Distortion::Finite(_))
    }
}

impl<T: Scalar> fmt::Display for Distortion<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distortion::Zero => write!(f, "zero"),
            Distortion::Finite(v) => write!(f, "{v}"),
            Distortion::Infinity => write!(f, "infinity"),
        }
    }
}

/// Realized beliefs of one voter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefPair<T> {
    pub pi: T,
    pub kappa: T,
}

/// `π̂`: posterior on the severe state from a split platform pair alone.
/// Falls back to the prior when split pairs are off path.
pub fn pooled_belief<T: Scalar>(q: T, mixing: &CandidateMixing<T>) -> T {
    let (b, a) = mixing.split_weights();
    if mixing.is_degenerate() {
        return q;
    }
    let num = q * a;
    num / (num + (T::one() - q) * b)
}

/// Posterior `π(s, p, μ̃)`, computed as `logistic(logit π̂ + 2μ̃s/σ²)`.
pub fn posterior<T: Scalar>(
    params: &ModelParams<T>,
    mixing: &CandidateMixing<T>,
    s: T,
    mu_tilde: Distortion<T>,
) -> T {
    let pooled = pooled_belief(params.q(), mixing);
    posterior_from_pooled(params, pooled, s, mu_tilde)
}

/// Same as [`posterior`] with the platform-pooled belief given directly.
pub fn posterior_from_pooled<T: Scalar>(
    params: &ModelParams<T>,
    pooled: T,
    s: T,
    mu_tilde: Distortion<T>,
) -> T {
    if s == T::zero() {
        return pooled;
    }
    match mu_tilde {
        Distortion::Zero => pooled,
        Distortion::Infinity => {
            if pooled <= T::zero() || pooled >= T::one() {
                pooled
            } else if s > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        }
        Distortion::Finite(m) => {
            let llr = two::<T>() * m * s / (params.sigma() * params.sigma());
            logistic(logit(pooled) + llr)
        }
    }
}

/// `AU = −κ[πΔ + (1−π)] − (1−κ)π(Δ+β)`.
pub fn anticipatory_utility<T: Scalar>(params: &ModelParams<T>, pi: T, kappa: T) -> T {
    let (d, b) = (params.delta(), params.beta());
    -kappa * (pi * d + (T::one() - pi)) - (T::one() - kappa) * (pi * (d + b))
}

/// `β + Δ − κ(1+β)`: minus the slope of anticipatory utility in `π`.
pub fn distortion_incentive<T: Scalar>(params: &ModelParams<T>, kappa: T) -> T {
    params.beta() + params.delta() - kappa * (T::one() + params.beta())
}

/// `κ̃ = (β+Δ)/(β+1)`.
pub fn kappa_tilde<T: Scalar>(params: &ModelParams<T>) -> T {
    (params.beta() + params.delta()) / (params.beta() + T::one())
}

/// Incentive values this close to zero are treated as exact indifference, so
/// `κ = κ̃` computed in floating point still selects `μ̃ = μ`.
pub(crate) fn is_indifferent<T: Scalar>(params: &ModelParams<T>, incentive: T) -> bool {
    incentive.abs() <= lit::<T>(16.0) * T::epsilon() * (params.beta() + params.delta() + T::one())
}

/// `∂AU/∂μ̃` at a finite distortion:
/// `−(β+Δ−κ(1+β))·(2s/σ²)·π(1−π)`.
pub fn au_derivative<T: Scalar>(
    params: &ModelParams<T>,
    mixing: &CandidateMixing<T>,
    s: T,
    mu_tilde: T,
    kappa: T,
) -> T {
    let pooled = pooled_belief(params.q(), mixing);
    au_derivative_from_pooled(params, pooled, s, mu_tilde, kappa)
}

pub(crate) fn au_derivative_from_pooled<T: Scalar>(
    params: &ModelParams<T>,
    pooled: T,
    s: T,
    mu_tilde: T,
    kappa: T,
) -> T {
    let sig2 = params.sigma() * params.sigma();
    let x = logit(pooled) + two::<T>() * mu_tilde * s / sig2;
    // π(1−π) without cancellation near the extremes
    let spread = logistic(x) * logistic(-x);
    -distortion_incentive(params, kappa) * two::<T>() * s / sig2 * spread
}

/// Cost-free optimal distortion.
///
/// | case                              | `μ̃*`                          |
/// |-----------------------------------|-------------------------------|
/// | `s = 0` or `κ = κ̃`                | `μ`                           |
/// | `κ < κ̃` (always when `Δ > 1`)     | `∞` if `s < 0`, `0` if `s > 0` |
/// | `κ > κ̃` (only when `Δ < 1`)       | `0` if `s < 0`, `∞` if `s > 0` |
///
/// `Δ = 1` with `κ = 1` is the `κ = κ̃` row: anticipatory utility is flat.
pub fn optimal_distortion_free<T: Scalar>(
    params: &ModelParams<T>,
    s: T,
    kappa: T,
) -> Distortion<T> {
    let incentive = distortion_incentive(params, kappa);
    if s == T::zero() || is_indifferent(params, incentive) {
        return Distortion::Finite(params.mu());
    }
    // AU moves against s·incentive as μ̃ grows
    if (s > T::zero()) == (incentive > T::zero()) {
        Distortion::Zero
    } else {
        Distortion::Infinity
    }
}

/// Posterior at the cost-free optimal distortion.
pub fn optimal_belief_free<T: Scalar>(
    params: &ModelParams<T>,
    mixing: &CandidateMixing<T>,
    s: T,
    kappa: T,
) -> T {
    posterior(params, mixing, s, optimal_distortion_free(params, s, kappa))
}
