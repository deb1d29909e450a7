//! Monte-Carlo elections with brute-force belief choice.
//!
//! Nothing here calls the analytic distortion solvers: posteriors come from
//! Gaussian log-densities, anticipatory utility from the primitive payoffs,
//! and the distortion from a grid search. The results serve as an oracle for
//! the analytic vote shares.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::beliefs::Distortion;
use crate::costly::CostSpec;
use crate::kv::fmt_number;
use crate::model::{utility, ModelParams, Policy, State};
use crate::voting::{KappaProfile, VoteShares};

type P = ModelParams<f64>;

/// Log-spaced grid of finite distortions `μ·r`, `r ∈ [min_ratio, max_ratio]`,
/// plus the symbolic endpoints in the free and fixed regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuTildeGrid {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub points: usize,
}

impl Default for MuTildeGrid {
    fn default() -> Self {
        MuTildeGrid {
            min_ratio: 1e-6,
            max_ratio: 1e6,
            points: 241,
        }
    }
}

impl MuTildeGrid {
    pub fn is_valid(&self) -> bool {
        self.points >= 64 && self.min_ratio > 0.0 && self.max_ratio > self.min_ratio && self.max_ratio.is_finite()
    }

    fn values(&self, mu: f64) -> Vec<f64> {
        let (a, b) = (self.min_ratio.ln(), self.max_ratio.ln());
        let n = self.points;
        (0..n)
            .map(|i| mu * (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_voters: usize,
    pub seed: u64,
    pub grid: MuTildeGrid,
    pub states: Vec<State>,
    /// Maximum number of traced voters per state.
    pub trace_cap: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_voters: 10_000,
            seed: 0,
            grid: MuTildeGrid::default(),
            states: State::ALL.to_vec(),
            trace_cap: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Policy(Policy),
    Tie,
}

impl std::fmt::Display for Winner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Winner::Policy(p) => write!(f, "policy{}", p.index()),
            Winner::Tie => f.write_str("tie"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTally {
    pub state: State,
    pub n: usize,
    /// Ballots for policy 1, including indifferent voters whose coin chose it.
    pub policy1_count: usize,
    pub policy0_count: usize,
    /// Voters who were exactly indifferent.
    pub indifferent_count: usize,
    pub share: f64,
    pub stderr: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub state: State,
    pub voter: usize,
    pub s: f64,
    pub kappa: f64,
    pub mu_tilde: Distortion<f64>,
    pub pi: f64,
    pub ballot: Policy,
    pub indifferent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub tallies: Vec<StateTally>,
    pub trace: Vec<TraceRow>,
}

impl SimResult {
    pub fn tally(&self, state: State) -> Option<&StateTally> {
        self.tallies.iter().find(|t| t.state == state)
    }

    /// Whether every simulated state lies within `k` binomial standard errors
    /// of the analytic share. The standard error uses the analytic share, so a
    /// degenerate share (0 or 1) must be matched exactly.
    pub fn agrees_with(&self, analytic: &VoteShares<f64>, k: f64) -> bool {
        self.tallies.iter().all(|t| {
            let p = analytic.policy1_share(t.state);
            let se = (p * (1.0 - p) / t.n as f64).sqrt();
            (t.share - p).abs() <= k * se
        })
    }

    /// `state,n,policy1_count,share,stderr` table, one row per state.
    pub fn to_table(&self) -> String {
        let mut out = String::from("state,n,policy1_count,share,stderr,winner\n");
        for t in &self.tallies {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                t.state.index(),
                t.n,
                t.policy1_count,
                fmt_number(t.share),
                fmt_number(t.stderr),
                t.winner
            );
        }
        out
    }

    pub fn trace_table(&self) -> String {
        let mut out = String::from("state,voter,s,kappa,mu_tilde,pi,ballot,indifferent\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.state.index(),
                r.voter,
                fmt_number(r.s),
                fmt_number(r.kappa),
                fmt_distortion(r.mu_tilde),
                fmt_number(r.pi),
                r.ballot.index(),
                r.indifferent
            );
        }
        out
    }
}

pub fn fmt_distortion(d: Distortion<f64>) -> String {
    match d {
        Distortion::Zero => "0".into(),
        Distortion::Infinity => "inf".into(),
        Distortion::Finite(v) => fmt_number(v),
    }
}

/// Draws a signal `s ~ N((2ω−1)μ, σ²)`.
pub fn sample_signal<R: Rng + ?Sized>(omega: State, params: &P, rng: &mut R) -> f64 {
    let mean = if omega == State::Severe { params.mu() } else { -params.mu() };
    Normal::new(mean, params.sigma())
        .expect("validated sigma")
        .sample(rng)
}

/// `ln f(s | mean m) − ln f(s | mean −m)` for Gaussian densities with common
/// `σ`. The normalising constants cancel; the difference of squared
/// standardized residuals is factored to stay exact for large `m`.
fn ln_density_ratio(s: f64, m: f64, sigma: f64) -> f64 {
    let (above, below) = ((s + m) / sigma, (s - m) / sigma);
    0.5 * (above - below) * (above + below)
}

/// Belief in the severe state after reading `s` as if signals had
/// informativeness `mu_tilde`, from a prior of `q`.
fn belief(params: &P, s: f64, mu_tilde: Distortion<f64>) -> f64 {
    let q = params.q();
    match mu_tilde {
        Distortion::Zero => q,
        Distortion::Infinity => {
            if s > 0.0 {
                1.0
            } else if s < 0.0 {
                0.0
            } else {
                q
            }
        }
        Distortion::Finite(m) => {
            let sig = params.sigma();
            let log_odds = q.ln() - (1.0 - q).ln() + ln_density_ratio(s, m, sig);
            if log_odds >= 0.0 {
                1.0 / (1.0 + (-log_odds).exp())
            } else {
                let e = log_odds.exp();
                e / (1.0 + e)
            }
        }
    }
}

fn expected_payoff(params: &P, policy: Policy, pi: f64) -> f64 {
    pi * utility(policy, State::Severe, params) + (1.0 - pi) * utility(policy, State::Mild, params)
}

fn anticipated(params: &P, pi: f64, kappa: f64) -> f64 {
    kappa * expected_payoff(params, Policy::One, pi) + (1.0 - kappa) * expected_payoff(params, Policy::Zero, pi)
}

fn penalty(params: &P, cost: &CostSpec<f64>, mu_tilde: Distortion<f64>) -> f64 {
    let mu = params.mu();
    match *cost {
        CostSpec::Free => 0.0,
        CostSpec::Fixed(g) => {
            if mu_tilde == Distortion::Finite(mu) {
                0.0
            } else {
                g
            }
        }
        CostSpec::Quadratic(c) => match mu_tilde {
            Distortion::Finite(m) if m >= mu => 0.5 * c * (m - mu) * (m - mu),
            Distortion::Finite(m) if m > 0.0 => {
                let d = mu / m * (m - mu);
                0.5 * c * d * d
            }
            _ if c == 0.0 => 0.0,
            _ => f64::INFINITY,
        },
    }
}

fn payoff(params: &P, s: f64, kappa: f64, cost: &CostSpec<f64>, mu_tilde: Distortion<f64>) -> f64 {
    anticipated(params, belief(params, s, mu_tilde), kappa) - penalty(params, cost, mu_tilde)
}

const TIE_TOLERANCE: f64 = 1e-12;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Grid argmax of `AU − cost` over `μ̃`.
///
/// Candidates are `μ`, then `Zero` and `Infinity` (free and fixed regimes
/// only), then the grid. A later candidate must beat the incumbent by more
/// than a relative `1e-12`, so exact ties resolve to honest updating. A finite
/// winner is polished by golden-section search in `ln μ̃` over its
/// neighbouring grid cells.
pub fn brute_force_distortion(
    params: &P,
    s: f64,
    kappa: f64,
    cost: &CostSpec<f64>,
    grid: &MuTildeGrid,
) -> Distortion<f64> {
    let mu = params.mu();
    let w = |m: Distortion<f64>| payoff(params, s, kappa, cost, m);
    let beats = |a: f64, b: f64| a > b + TIE_TOLERANCE * (1.0 + b.abs());

    let mut best = Distortion::Finite(mu);
    let mut best_w = w(best);
    if !matches!(cost, CostSpec::Quadratic(_)) {
        for end in [Distortion::Zero, Distortion::Infinity] {
            let v = w(end);
            if beats(v, best_w) {
                best = end;
                best_w = v;
            }
        }
    }
    let values = grid.values(mu);
    let mut best_idx = None;
    for (i, &m) in values.iter().enumerate() {
        let v = w(Distortion::Finite(m));
        if beats(v, best_w) {
            best = Distortion::Finite(m);
            best_w = v;
            best_idx = Some(i);
        }
    }
    if !matches!(cost, CostSpec::Quadratic(_)) {
        return best;
    }
    // bracket around the grid winner, or around μ when honesty won
    let (lo, hi) = match best_idx {
        Some(i) => (values[i.saturating_sub(1)], values[(i + 1).min(values.len() - 1)]),
        None => {
            let k = values.partition_point(|&m| m < mu);
            let above = values.partition_point(|&m| m <= mu);
            (values[k.saturating_sub(1)], values[above.min(values.len() - 1)])
        }
    };
    let f = |x: f64| w(Distortion::Finite(x.exp()));
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = (0.5 * (a + b)).exp();
    let v = w(Distortion::Finite(x));
    if beats(v, best_w) {
        Distortion::Finite(x)
    } else {
        best
    }
}

/// The brute-force payoff, exposed for near-tie diagnostics.
pub fn brute_force_payoff(params: &P, s: f64, kappa: f64, cost: &CostSpec<f64>, mu_tilde: Distortion<f64>) -> f64 {
    payoff(params, s, kappa, cost, mu_tilde)
}

struct Voter {
    s: f64,
    kappa: f64,
    mu_tilde: Distortion<f64>,
    pi: f64,
    ballot: Policy,
    indifferent: bool,
}

fn resolve(params: &P, cost: &CostSpec<f64>, profile: &KappaProfile<f64>, grid: &MuTildeGrid, s: f64) -> (f64, Distortion<f64>, f64) {
    let settle = |k: f64| {
        let m = brute_force_distortion(params, s, k, cost, grid);
        (m, belief(params, s, m))
    };
    match *profile {
        KappaProfile::Constant(k) => {
            let (m, pi) = settle(k);
            (k, m, pi)
        }
        KappaProfile::SignStep { neg, pos } => {
            let k = if s < 0.0 { neg } else { pos };
            let (m, pi) = settle(k);
            (k, m, pi)
        }
        KappaProfile::Trust => {
            // self-consistent trust: κ equals the posterior it induces
            let mut k = if s > 0.0 {
                1.0
            } else if s < 0.0 {
                0.0
            } else {
                params.q()
            };
            let (mut m, mut pi) = settle(k);
            for _ in 0..100 {
                if (pi - k).abs() <= 1e-12 {
                    break;
                }
                k = pi;
                (m, pi) = settle(k);
            }
            (pi, m, pi)
        }
    }
}

fn voter_rng(seed: u64, state: State, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((state.index() as u64) << 48) | i as u64);
    rng
}

fn run_voter(params: &P, cost: &CostSpec<f64>, profile: &KappaProfile<f64>, config: &SimConfig, state: State, i: usize) -> Voter {
    let mut rng = voter_rng(config.seed, state, i);
    let s = sample_signal(state, params, &mut rng);
    let (kappa, mu_tilde, pi) = resolve(params, cost, profile, &config.grid, s);
    let pi_tilde = 1.0 / (1.0 + params.beta());
    let indifferent = pi == pi_tilde;
    let ballot = if indifferent {
        if rng.random_bool(0.5) {
            Policy::One
        } else {
            Policy::Zero
        }
    } else if pi > pi_tilde {
        Policy::One
    } else {
        Policy::Zero
    };
    Voter {
        s,
        kappa,
        mu_tilde,
        pi,
        ballot,
        indifferent,
    }
}

/// Simulates `n_voters` sincere voters in each configured state.
///
/// Each voter draws from its own ChaCha stream derived from the seed, state
/// and voter index, so results do not depend on thread scheduling.
pub fn simulate_election(
    params: &P,
    cost: &CostSpec<f64>,
    profile: &KappaProfile<f64>,
    config: &SimConfig,
) -> SimResult {
    let mut tallies = Vec::with_capacity(config.states.len());
    let mut trace = Vec::new();
    for &state in &config.states {
        let (ones, ties) = (0..config.n_voters)
            .into_par_iter()
            .map(|i| {
                let v = run_voter(params, cost, profile, config, state, i);
                ((v.ballot == Policy::One) as usize, v.indifferent as usize)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let n = config.n_voters;
        let share = if n == 0 { 0.0 } else { ones as f64 / n as f64 };
        let winner = if 2 * ones > n {
            Winner::Policy(Policy::One)
        } else if 2 * ones < n {
            Winner::Policy(Policy::Zero)
        } else {
            Winner::Tie
        };
        tallies.push(StateTally {
            state,
            n,
            policy1_count: ones,
            policy0_count: n - ones,
            indifferent_count: ties,
            share,
            stderr: if n == 0 { 0.0 } else { (share * (1.0 - share) / n as f64).sqrt() },
            winner,
        });
        let traced: Vec<TraceRow> = (0..config.trace_cap.min(config.n_voters))
            .into_par_iter()
            .map(|i| {
                let v = run_voter(params, cost, profile, config, state, i);
                TraceRow {
                    state,
                    voter: i,
                    s: v.s,
                    kappa: v.kappa,
                    mu_tilde: v.mu_tilde,
                    pi: v.pi,
                    ballot: v.ballot,
                    indifferent: v.indifferent,
                }
            })
            .collect();
        trace.extend(traced);
    }
    SimResult { tallies, trace }
}
