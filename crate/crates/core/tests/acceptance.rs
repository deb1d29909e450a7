//! Acceptance suite: nine criteria, one PASS/FAIL line each.

use std::process::{Command, ExitCode};
use std::time::Instant;

use inaction::beliefs::{optimal_distortion_free, posterior_from_pooled, Distortion};
use inaction::costly::{
    c_hat, distortion_cost, fixed_cost_policy1_share, gamma_bounds, gamma_hat, indifference_signals, objective,
    quadratic_cost_policy1_share, solve_quadratic_distortion, CostSpec,
};
use inaction::equilibrium::{classify, PlatformRule};
use inaction::harness::{brute_force_distortion, brute_force_payoff, simulate_election, MuTildeGrid, SimConfig};
use inaction::model::{mu_bayes, ModelParams, Policy, State};
use inaction::voting::{resolve_voter, thresholds, vote_shares, KappaProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type P = ModelParams<f64>;
type Outcome = Result<String, String>;

/// Parameters satisfying both assumptions with `Δ` drawn from `[lo, hi)`.
fn draw_params(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> P {
    loop {
        let beta = rng.random_range(0.2..4.0);
        let q = rng.random_range(0.02..0.97 / (1.0 + beta));
        let sigma = rng.random_range(0.5..2.0);
        let mu = mu_bayes(q, beta, sigma).unwrap() * rng.random_range(1.0..3.0);
        let delta = rng.random_range(lo..hi);
        if let Ok(p) = ModelParams::new(q, beta, delta, mu, sigma) {
            return p;
        }
    }
}

fn pinned() -> P {
    ModelParams::new(0.25, 1.0, 2.0, 1.0, 1.0).unwrap()
}

fn figure() -> P {
    ModelParams::new(0.3, 1.0, 2.0, 1.0, 1.0).unwrap()
}

fn signal_grid(p: &P, n: usize) -> Vec<f64> {
    let w = p.mu() + 4.0 * p.sigma();
    (0..n).map(|i| -w + 2.0 * w * i as f64 / (n - 1) as f64).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn free_distortion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let grid = MuTildeGrid::default();
    let (draws, mut exact, mut near) = (600, 0, 0);
    for _ in 0..draws {
        let p = draw_params(&mut rng, 0.1, 3.0);
        let kappa = rng.random_range(0.0..=1.0);
        let s = rng.random_range(-4.0..4.0) * p.sigma();
        let analytic = optimal_distortion_free(&p, s, kappa);
        let brute = brute_force_distortion(&p, s, kappa, &CostSpec::Free, &grid);
        if analytic == brute {
            exact += 1;
            continue;
        }
        let gap = (brute_force_payoff(&p, s, kappa, &CostSpec::Free, analytic)
            - brute_force_payoff(&p, s, kappa, &CostSpec::Free, brute))
        .abs();
        ensure(gap <= 1e-9, || {
            format!("{p:?} s={s} kappa={kappa}: analytic {analytic} vs brute {brute}, |dW|={gap:e}")
        })?;
        near += 1;
    }
    Ok(format!("{draws} draws, {exact} exact endpoint matches, {near} near-indifference within 1e-9"))
}

fn bayesian_boundary() -> Outcome {
    let (q, beta, delta, sigma) = (0.25f64, 1.0, 0.5, 1.0);
    let mu = mu_bayes(q, beta, sigma).unwrap();
    let p = ModelParams::new(q, beta, delta, mu, sigma).map_err(|e| e.to_string())?;
    let kappa = KappaProfile::Constant(thresholds(&p).kappa_tilde);
    let analytic = vote_shares(&p, &CostSpec::Free, &kappa).map_err(|e| e.to_string())?;
    let v = analytic.share_policy1_state1;
    ensure((v - 0.5).abs() <= 1e-9, || format!("analytic share {v}"))?;
    let cfg = SimConfig {
        n_voters: 100_000,
        seed: 2,
        states: vec![State::Severe],
        ..SimConfig::default()
    };
    let sim = simulate_election(&p, &CostSpec::Free, &kappa, &cfg);
    let t = sim.tally(State::Severe).unwrap();
    let se = (0.25 / t.n as f64).sqrt();
    let z = (t.share - 0.5) / se;
    ensure(z.abs() <= 3.0, || format!("simulated share {} (z = {z})", t.share))?;
    Ok(format!("mu = mu_bayes = {mu:.12}: analytic |V-1/2| = {:.1e}, simulated {} (z = {z:.2})", (v - 0.5).abs(), t.share))
}

fn inactive_uniqueness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let draws = 200;
    for k in 0..draws {
        let p = draw_params(&mut rng, 1.0 + 1e-6, 4.0);
        let report = classify(&p, &CostSpec::Free).map_err(|e| e.to_string())?;
        ensure(
            report.unique
                && report.equilibria.len() == 1
                && report.equilibria[0].platform_rule == PlatformRule::Pool(Policy::Zero),
            || format!("{p:?}: {report:?}"),
        )?;
        let cfg = SimConfig {
            n_voters: 1_000,
            seed: k,
            ..SimConfig::default()
        };
        let sim = simulate_election(&p, &CostSpec::Free, &KappaProfile::Constant(0.0), &cfg);
        for t in &sim.tallies {
            ensure(t.policy1_count == 0, || format!("{p:?}: {} policy-1 votes in state {:?}", t.policy1_count, t.state))?;
        }
    }
    Ok(format!("{draws} draws with delta > 1: unique pool(0), zero simulated policy-1 votes"))
}

fn fixed_indifference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_w: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..200 {
        let p = draw_params(&mut rng, 0.1, 4.0);
        // keep the distortion incentive positive
        let kappa = rng.random_range(0.0..thresholds(&p).kappa_tilde.min(1.0));
        let (gp, gm) = gamma_bounds(&p, kappa);
        let gamma = rng.random_range(0.02..0.98) * gp.max(gm);
        let fx = indifference_signals(&p, kappa, gamma).map_err(|e| e.to_string())?;
        ensure(fx.warnings.is_empty(), || format!("{p:?} kappa={kappa} gamma={gamma}: {:?}", fx.warnings))?;
        worst_gap = worst_gap.max(fx.closed_form_gap);
        let cost = CostSpec::Fixed(gamma);
        let honest = Distortion::Finite(p.mu());
        for (s, corner) in [(fx.s_plus, Distortion::Zero), (fx.s_minus, Distortion::Infinity)] {
            let Some(s) = s else { continue };
            let analytic = (objective(&p, s, kappa, &cost, honest) - objective(&p, s, kappa, &cost, corner)).abs();
            let independent =
                (brute_force_payoff(&p, s, kappa, &cost, honest) - brute_force_payoff(&p, s, kappa, &cost, corner)).abs();
            worst_w = worst_w.max(analytic).max(independent);
            checked += 1;
        }
    }
    ensure(worst_w <= 1e-10, || format!("payoff gap {worst_w:e}"))?;
    ensure(worst_gap <= 1e-8, || format!("closed form gap {worst_gap:e}"))?;
    Ok(format!("{checked} indifference points: max |dW| = {worst_w:.1e}, max closed-form gap = {worst_gap:.1e}"))
}

fn gamma_threshold() -> Outcome {
    let mut lines = Vec::new();
    for p in [pinned(), figure()] {
        let g = gamma_hat(&p).map_err(|e| e.to_string())?;
        let v0 = fixed_cost_policy1_share(&p, g.value).map_err(|e| e.to_string())?;
        ensure((v0 - 0.5).abs() <= 1e-9, || format!("q={}: V0(gamma_hat) = {v0}", p.q()))?;
        let below = classify(&p, &CostSpec::Fixed(0.5 * g.value)).map_err(|e| e.to_string())?;
        let above = classify(&p, &CostSpec::Fixed(1.5 * g.value)).map_err(|e| e.to_string())?;
        ensure(below.is_inactive(), || format!("q={}: inactive expected below gamma_hat", p.q()))?;
        ensure(!above.is_inactive(), || format!("q={}: inactive above gamma_hat", p.q()))?;
        lines.push(format!("q={} gamma_hat={:.9} |V0-1/2|={:.1e}", p.q(), g.value, (v0 - 0.5).abs()));
    }
    Ok(lines.join("; ") + "; classification flips between 0.5 and 1.5 gamma_hat")
}

fn quadratic_suite() -> Outcome {
    for lambda in [2.0, 3.0, 10.0] {
        let up = distortion_cost(2.0, 1.0, Distortion::Finite(lambda));
        let down = distortion_cost(2.0, 1.0, Distortion::Finite(1.0 / lambda));
        ensure(up == down, || format!("C({lambda}) = {up} but C(1/{lambda}) = {down}"))?;
    }
    let p = figure();
    let grid = signal_grid(&p, 801);
    let mut curves = Vec::new();
    let mut worst: f64 = 0.0;
    for c in [2.0, 8.0] {
        let mut curve = Vec::with_capacity(grid.len());
        for &s in &grid {
            let sol = solve_quadratic_distortion(&p, s, 0.0, c).map_err(|e| e.to_string())?;
            worst = worst.max(sol.residual);
            let m = sol.mu_tilde;
            let direction = (p.mu() - m).signum();
            let expected = if s == 0.0 { 0.0 } else { s.signum() };
            ensure(
                (direction == expected) || (s == 0.0 && m == p.mu()),
                || format!("c={c} s={s}: mu_tilde={m}"),
            )?;
            curve.push(m);
        }
        for (side, values) in [("s>0", positive(&grid, &curve)), ("s<0", negative(&grid, &curve))] {
            let turns = values.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count();
            ensure(turns == 1, || format!("c={c} {side}: {turns} turning points"))?;
        }
        curves.push(curve);
    }
    ensure(worst <= 1e-10, || format!("FOC residual {worst:e}"))?;
    for (i, &s) in grid.iter().enumerate() {
        let (d2, d8) = ((curves[0][i] - p.mu()).abs(), (curves[1][i] - p.mu()).abs());
        ensure(d8 <= d2, || format!("s={s}: |mu-mu_tilde| {d8} at c=8 exceeds {d2} at c=2"))?;
    }
    Ok(format!(
        "symmetry exact at 2, 3, 10; 801-point curves at c=2, 8: max residual {worst:.1e}, one turning point per side, distortion shrinks with c"
    ))
}

fn positive(grid: &[f64], values: &[f64]) -> Vec<f64> {
    grid.iter().zip(values).filter(|(s, _)| **s > 0.0).map(|(_, v)| *v).collect()
}

fn negative(grid: &[f64], values: &[f64]) -> Vec<f64> {
    grid.iter().zip(values).filter(|(s, _)| **s < 0.0).map(|(_, v)| *v).collect()
}

fn c_threshold() -> Outcome {
    let mut lines = Vec::new();
    for p in [figure(), pinned()] {
        let ch = c_hat(&p).map_err(|e| e.to_string())?;
        ensure(ch.achieved <= 1e-6, || format!("q={}: |V0(c_hat)-1/2| = {}", p.q(), ch.achieved))?;
        for k in 0..8 {
            let c = ch.value * 10f64.powf(-1.0 + 2.0 * k as f64 / 7.0);
            let v0 = quadratic_cost_policy1_share(&p, c).map_err(|e| e.to_string())?;
            let lhs = (c - ch.value).signum();
            let rhs = (v0 - 0.5).signum();
            ensure(lhs == rhs, || format!("q={} c={c}: V0={v0}", p.q()))?;
        }
        lines.push(format!("q={} c_hat={:.9} |V0-1/2|={:.1e}", p.q(), ch.value, ch.achieved));
    }
    Ok(lines.join("; ") + "; sign condition holds at 8 points in [c_hat/10, 10 c_hat]")
}

fn belief_curves() -> Outcome {
    let p = figure();
    let grid = signal_grid(&p, 801);
    let kappa = KappaProfile::Constant(0.0);
    let bayes = |s: f64| posterior_from_pooled(&p, p.q(), s, Distortion::Finite(p.mu()));

    let gamma = 0.5;
    let fx = indifference_signals(&p, 0.0, gamma).map_err(|e| e.to_string())?;
    let (sp, sm) = (fx.s_plus.unwrap(), fx.s_minus.unwrap());
    let (mut zeroed, mut pooled) = (0, 0);
    for &s in &grid {
        let pi = resolve_voter(&p, &CostSpec::Fixed(gamma), &kappa, s).map_err(|e| e.to_string())?.pi;
        let expected = if s >= sm && s < 0.0 {
            zeroed += 1;
            0.0
        } else if s >= sp {
            pooled += 1;
            p.q()
        } else {
            bayes(s)
        };
        ensure(pi == expected, || format!("fixed s={s}: pi={pi}, expected {expected}"))?;
    }
    ensure(zeroed > 0 && pooled > 0, || "fixed-cost bands are empty on the grid".into())?;

    let mut detail = vec![format!("fixed gamma=0.5: forced to 0 on [{sm:.4}, 0), to q on [{sp:.4}, inf)")];
    for c in [2.0, 8.0] {
        let dev = grid
            .iter()
            .map(|&s| {
                resolve_voter(&p, &CostSpec::Quadratic(c), &kappa, s)
                    .map(|v| (v.pi - bayes(s)).abs())
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let zero = grid.iter().position(|&s| s == 0.0).unwrap();
        let (last, n) = (dev.len() - 1, dev.len());
        ensure(dev[zero] <= 1e-4 && dev[0] <= 1e-4 && dev[last] <= 1e-4, || {
            format!("c={c}: deviation {:e} at s=0, {:e} / {:e} at the ends", dev[zero], dev[0], dev[last])
        })?;
        for (side, range) in [("s<0", 1..zero), ("s>0", zero + 1..n - 1)] {
            let (arg, max) = range
                .clone()
                .map(|i| (i, dev[i]))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            ensure(max > dev[zero].max(dev[0]).max(dev[last]) && range.contains(&arg), || {
                format!("c={c} {side}: no interior maximum")
            })?;
            detail.push(format!("c={c} {side}: max deviation {max:.4} at s={:.3}", grid[arg]));
        }
    }
    Ok(detail.join("; "))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_inaction");
    let pinned_flags = ["--q", "0.25", "--beta", "1", "--delta", "2", "--mu", "1", "--sigma", "1"];
    let mut runs = 0;
    for cmd in ["classify", "thresholds"] {
        for format in ["csv", "jsonl"] {
            let mut args = vec![cmd, "--format", format];
            args.extend(pinned_flags);
            let outputs: Vec<Vec<u8>> = (0..3)
                .map(|_| {
                    let out = Command::new(bin).args(&args).output().expect("run binary");
                    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                    out.stdout
                })
                .collect();
            let mut in_process = Vec::new();
            let code = inaction::cli::run(
                std::iter::once("inaction").chain(args.iter().copied()),
                &mut in_process,
                &mut std::io::sink(),
            );
            ensure(code == 0, || format!("{cmd} exited {code} in process"))?;
            ensure(outputs.iter().all(|o| *o == outputs[0]) && in_process == outputs[0], || {
                format!("{cmd} --format {format} output differs between runs")
            })?;
            runs += 4;
        }
    }
    Ok(format!("classify and thresholds byte-identical across {runs} runs (binary and in-process, csv and jsonl)"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("free-distortion oracle", free_distortion_oracle),
        ("Bayesian boundary share", bayesian_boundary),
        ("inactive uniqueness", inactive_uniqueness),
        ("fixed-cost indifference", fixed_indifference),
        ("critical fixed cost", gamma_threshold),
        ("quadratic cost and distortion curve", quadratic_suite),
        ("critical quadratic cost", c_threshold),
        ("belief distortion curves", belief_curves),
        ("output determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
