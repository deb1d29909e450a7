use rayon::prelude::*;

use super::output::{render, Cell, Echo, Table};
use super::{Artifacts, CliError, Command, CurveArgs, Layered, Settings, SimArgs, SweepArgs};
use crate::beliefs::{posterior_from_pooled, Distortion};
use crate::costly::{c_hat, gamma_bounds, gamma_hat, indifference_signals, CostError, CostSpec};
use crate::equilibrium::{classify, classify_outcome, PlatformRule};
use crate::harness::{simulate_election, MuTildeGrid, SimConfig, Winner};
use crate::kv::fmt_number;
use crate::model::{mu_bayes, validate, ModelParams, RawParams, State, Violation};
use crate::voting::{resolve_voter, thresholds, vote_shares, KappaProfile, Vote};

type P = ModelParams<f64>;

pub(super) fn dispatch(command: &Command, settings: &Settings, layer: &Layered) -> Result<Artifacts, CliError> {
    let mut echo = base_echo(command, settings);
    let mut files = Vec::new();
    let table = match command {
        Command::Check => check(settings),
        Command::Classify => classify_table(&params(settings)?, settings),
        Command::Thresholds => thresholds_table(&params(settings)?, settings),
        Command::DistortionCurve(args) => {
            let p = params(settings)?;
            let grid = curve_grid(&p, args, layer, &mut echo)?;
            distortion_curve(&p, settings, &grid)
        }
        Command::BeliefCurve(args) => {
            let p = params(settings)?;
            let grid = curve_grid(&p, args, layer, &mut echo)?;
            belief_curve(&p, settings, &grid)
        }
        Command::VoteShare => vote_share(&params(settings)?, settings),
        Command::Sweep(args) => sweep(settings, args, layer, &mut echo),
        Command::Simulate(args) => simulate(&params(settings)?, settings, args, layer, &mut echo, &mut files),
    }?;
    Ok(Artifacts {
        main: render(&table, settings.format, &echo),
        files,
    })
}

fn params(settings: &Settings) -> Result<P, CliError> {
    Ok(validate(settings.raw)?)
}

fn base_echo(command: &Command, s: &Settings) -> Echo {
    let mut echo = vec![("command".to_string(), command.name().to_string())];
    for (k, v) in [
        ("q", s.raw.q),
        ("beta", s.raw.beta),
        ("delta", s.raw.delta),
        ("mu", s.raw.mu),
        ("sigma", s.raw.sigma),
    ] {
        echo.push((k.into(), fmt_number(v)));
    }
    echo.push(("cost".into(), s.cost_text.clone()));
    echo.push(("kappa".into(), s.kappa_text.clone()));
    echo.push(("format".into(), s.format.name().into()));
    echo
}

fn kappa_level(profile: &KappaProfile<f64>) -> f64 {
    match *profile {
        KappaProfile::Constant(k) => k,
        _ => 0.0,
    }
}

fn check(settings: &Settings) -> Result<Table, CliError> {
    let raw = settings.raw;
    let mut t = Table::new(&["check", "status", "value", "bound", "detail"]);
    let violations = match validate(raw) {
        Ok(_) => Vec::new(),
        Err(e) => e.violations,
    };
    for v in &violations {
        if let Violation::Range { field, value, bound } = v {
            t.push(vec![
                format!("range:{field}").into(),
                "violated".into(),
                Cell::Num(*value),
                Cell::Missing,
                (*bound).into(),
            ]);
        }
    }
    let a1 = violations.iter().any(|v| matches!(v, Violation::Assumption1 { .. }));
    t.push(vec![
        "assumption1".into(),
        if a1 { "violated" } else { "ok" }.into(),
        Cell::Num(raw.q),
        Cell::Num(1.0 / (1.0 + raw.beta)),
        "q < 1/(1+beta)".into(),
    ]);
    let a2 = violations.iter().any(|v| matches!(v, Violation::Assumption2 { .. }));
    t.push(vec![
        "assumption2".into(),
        if a2 { "violated" } else { "ok" }.into(),
        Cell::Num(raw.mu),
        Cell::opt(mu_bayes(raw.q, raw.beta, raw.sigma)),
        "mu >= mu_bayes".into(),
    ]);
    Ok(t)
}

fn classify_table(p: &P, settings: &Settings) -> Result<Table, CliError> {
    let report = classify(p, &settings.cost)?;
    let mut t = Table::new(&[
        "regime",
        "platform_rule",
        "kappa_star",
        "efficient",
        "unique",
        "mu_tilde_rule",
        "threshold",
        "threshold_value",
        "threshold_achieved",
        "inactive_share",
    ]);
    let (name, value, achieved) = match &report.threshold {
        Some(th) => (
            Cell::from(th.name),
            Cell::opt(th.solution.as_ref().map(|s| s.value)),
            Cell::opt(th.solution.as_ref().map(|s| s.achieved)),
        ),
        None => (Cell::Missing, Cell::Missing, Cell::Missing),
    };
    for e in &report.equilibria {
        t.push(vec![
            cost_label(&report.regime).into(),
            e.platform_rule.to_string().into(),
            e.kappa_star.to_string().into(),
            e.efficient.into(),
            report.unique.into(),
            e.mu_tilde_rule.clone().into(),
            name.clone(),
            value.clone(),
            achieved.clone(),
            Cell::Num(report.inactive_share),
        ]);
    }
    Ok(t)
}

fn thresholds_table(p: &P, settings: &Settings) -> Result<Table, CliError> {
    let mut t = Table::new(&["name", "value", "achieved"]);
    let mut row = |name: &str, value: Cell, achieved: Cell| t.push(vec![name.into(), value, achieved]);
    let th = thresholds(p);
    row("pi_tilde", th.pi_tilde.into(), Cell::Missing);
    row("kappa_tilde", th.kappa_tilde.into(), Cell::Missing);
    row("s_star", th.s_star.into(), Cell::Missing);
    row("mu_bayes", Cell::opt(mu_bayes(p.q(), p.beta(), p.sigma())), Cell::Missing);
    let kappa = kappa_level(&settings.kappa);
    let (gp, gm) = gamma_bounds(p, kappa);
    row("gamma_plus", gp.into(), Cell::Missing);
    row("gamma_minus", gm.into(), Cell::Missing);
    if let CostSpec::Fixed(g) = settings.cost {
        let fx = indifference_signals(p, kappa, g)?;
        row("s_plus", Cell::opt(fx.s_plus), Cell::Missing);
        row("s_minus", Cell::opt(fx.s_minus), Cell::Missing);
        row("closed_form_gap", fx.closed_form_gap.into(), Cell::Missing);
    }
    if p.delta() > 1.0 {
        match gamma_hat(p) {
            Ok(s) => row("gamma_hat", s.value.into(), s.achieved.into()),
            Err(CostError::NoThreshold(_)) => row("gamma_hat", Cell::Missing, Cell::Missing),
            Err(e) => return Err(e.into()),
        }
        if let CostSpec::Quadratic(_) = settings.cost {
            match c_hat(p) {
                Ok(s) => row("c_hat", s.value.into(), s.achieved.into()),
                Err(CostError::NoThreshold(_)) => row("c_hat", Cell::Missing, Cell::Missing),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(t)
}

fn curve_grid(p: &P, args: &CurveArgs, layer: &Layered, echo: &mut Echo) -> Result<Vec<f64>, CliError> {
    let half_width = p.mu() + 4.0 * p.sigma();
    let lo = layer.number(args.s_min, "s_min")?.unwrap_or(-half_width);
    let hi = layer.number(args.s_max, "s_max")?.unwrap_or(half_width);
    let n = layer.count(args.points, "points")?.unwrap_or(801);
    if n < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::Usage(format!(
            "signal grid needs finite s_min < s_max and at least 2 points (got {lo}, {hi}, {n})"
        )));
    }
    echo.push(("s_min".into(), fmt_number(lo)));
    echo.push(("s_max".into(), fmt_number(hi)));
    echo.push(("points".into(), n.to_string()));
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn vote_name(v: Vote) -> &'static str {
    match v {
        Vote::Policy0 => "policy0",
        Vote::Policy1 => "policy1",
        Vote::Indifferent => "indifferent",
    }
}

fn distortion_curve(p: &P, settings: &Settings, grid: &[f64]) -> Result<Table, CliError> {
    let states = grid
        .par_iter()
        .map(|&s| resolve_voter(p, &settings.cost, &settings.kappa, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["s", "kappa", "mu_tilde", "pi", "vote"]);
    for (&s, v) in grid.iter().zip(&states) {
        t.push(vec![
            s.into(),
            v.kappa.into(),
            v.mu_tilde.value().into(),
            v.pi.into(),
            vote_name(v.vote).into(),
        ]);
    }
    Ok(t)
}

fn belief_curve(p: &P, settings: &Settings, grid: &[f64]) -> Result<Table, CliError> {
    let states = grid
        .par_iter()
        .map(|&s| resolve_voter(p, &settings.cost, &settings.kappa, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["s", "pi_bayes", "pi_distorted", "mu_tilde"]);
    for (&s, v) in grid.iter().zip(&states) {
        let bayes = posterior_from_pooled(p, p.q(), s, Distortion::Finite(p.mu()));
        t.push(vec![s.into(), bayes.into(), v.pi.into(), v.mu_tilde.value().into()]);
    }
    Ok(t)
}

fn winner_name(share: f64) -> &'static str {
    if share > 0.5 {
        "policy1"
    } else if share < 0.5 {
        "policy0"
    } else {
        "tie"
    }
}

fn vote_share(p: &P, settings: &Settings) -> Result<Table, CliError> {
    let shares = vote_shares(p, &settings.cost, &settings.kappa)?;
    let mut t = Table::new(&["state", "share_policy1", "winner"]);
    for state in State::ALL {
        let share = shares.policy1_share(state);
        t.push(vec![Cell::Int(state.index() as i64), share.into(), winner_name(share).into()]);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
struct Axis {
    name: String,
    values: Vec<f64>,
}

const AXIS_NAMES: &[&str] = &["q", "beta", "delta", "mu", "sigma", "gamma", "c"];

fn parse_axis(text: &str) -> Result<Axis, CliError> {
    let bad = |why: &str| CliError::Usage(format!("axis `{text}`: {why} (expected name:min:max:steps)"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [name, lo, hi, steps] = parts.as_slice() else {
        return Err(bad("wrong number of fields"));
    };
    if !AXIS_NAMES.contains(name) {
        return Err(bad("unknown parameter"));
    }
    let lo: f64 = lo.parse().map_err(|_| bad("min is not a number"))?;
    let hi: f64 = hi.parse().map_err(|_| bad("max is not a number"))?;
    let steps: usize = steps.parse().map_err(|_| bad("steps is not an integer"))?;
    if steps < 2 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad("steps must be at least 2 and bounds finite"));
    }
    Ok(Axis {
        name: name.to_string(),
        values: (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    })
}

fn cost_label(cost: &CostSpec<f64>) -> String {
    match cost.level() {
        Some(v) => format!("{}:{}", cost.name(), fmt_number(v)),
        None => cost.name().to_string(),
    }
}

fn sweep_point(raw: RawParams<f64>, cost: CostSpec<f64>, kappa: &KappaProfile<f64>) -> (Vec<Cell>, String) {
    let p = match validate(raw) {
        Ok(p) => p,
        Err(e) => return (vec![Cell::Missing; 3], format!("validation: {e}")),
    };
    let shares = match vote_shares(&p, &cost, kappa) {
        Ok(s) => s,
        Err(e) => return (vec![Cell::Missing; 3], format!("error: {e}")),
    };
    let outcome = match classify_outcome(&p, &cost) {
        Ok(PlatformRule::Pool(policy)) => format!("pool({})", policy.index()),
        Ok(PlatformRule::MatchState) => "match_state".into(),
        Err(e) => format!("unclassified: {e}"),
    };
    (
        vec![
            shares.share_policy1_state0.into(),
            shares.share_policy1_state1.into(),
            outcome.into(),
        ],
        "ok".into(),
    )
}

fn sweep(settings: &Settings, args: &SweepArgs, layer: &Layered, echo: &mut Echo) -> Result<Table, CliError> {
    let texts: Vec<String> = if args.axes.is_empty() {
        layer
            .text(None, "axis")
            .map(|t| t.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    } else {
        args.axes.clone()
    };
    if texts.is_empty() {
        return Err(CliError::Usage("sweep needs at least one --axis name:min:max:steps".into()));
    }
    let axes = texts.iter().map(|t| parse_axis(t)).collect::<Result<Vec<_>, _>>()?;
    if axes.iter().any(|a| a.name == "gamma") && axes.iter().any(|a| a.name == "c") {
        return Err(CliError::Usage("gamma and c axes cannot be combined".into()));
    }
    echo.push(("axis".into(), texts.join(";")));

    // row-major cross product, last axis fastest
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut k| {
            let mut coords = vec![0.0; axes.len()];
            for (j, a) in axes.iter().enumerate().rev() {
                coords[j] = a.values[k % a.values.len()];
                k /= a.values.len();
            }
            coords
        })
        .collect();

    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|coords| {
            let mut raw = settings.raw;
            let mut cost = settings.cost;
            for (a, &v) in axes.iter().zip(coords) {
                match a.name.as_str() {
                    "q" => raw.q = v,
                    "beta" => raw.beta = v,
                    "delta" => raw.delta = v,
                    "mu" => raw.mu = v,
                    "sigma" => raw.sigma = v,
                    "gamma" => cost = CostSpec::Fixed(v),
                    _ => cost = CostSpec::Quadratic(v),
                }
            }
            let (results, status) = sweep_point(raw, cost, &settings.kappa);
            let mut row: Vec<Cell> = coords.iter().map(|&v| Cell::Num(v)).collect();
            row.extend([raw.q, raw.beta, raw.delta, raw.mu, raw.sigma].map(Cell::Num));
            row.push(cost_label(&cost).into());
            row.extend(results);
            row.push(status.into());
            row
        })
        .collect();

    let mut columns: Vec<String> = axes.iter().map(|a| format!("axis_{}", a.name)).collect();
    columns.extend(
        [
            "q",
            "beta",
            "delta",
            "mu",
            "sigma",
            "cost",
            "share_policy1_state0",
            "share_policy1_state1",
            "outcome",
            "status",
        ]
        .map(String::from),
    );
    Ok(Table { columns, rows })
}

fn simulate(
    p: &P,
    settings: &Settings,
    args: &SimArgs,
    layer: &Layered,
    echo: &mut Echo,
    files: &mut Vec<(std::path::PathBuf, String)>,
) -> Result<Table, CliError> {
    let n_voters = layer.count(args.n_voters, "n_voters")?.unwrap_or(10_000);
    if n_voters == 0 {
        return Err(CliError::Usage("n_voters must be at least 1".into()));
    }
    let states = match layer.text(args.state.as_deref(), "state").as_deref() {
        None | Some("both") => State::ALL.to_vec(),
        Some("0") => vec![State::Mild],
        Some("1") => vec![State::Severe],
        Some(other) => return Err(CliError::Usage(format!("state must be 0, 1 or both, got `{other}`"))),
    };
    let trace_path = layer.text(args.trace.as_ref().and_then(|p| p.to_str()), "trace");
    let default_cap = if trace_path.is_some() { 1000 } else { 0 };
    let trace_cap = layer.count(args.trace_cap, "trace_cap")?.unwrap_or(default_cap);
    let defaults = MuTildeGrid::default();
    let grid = MuTildeGrid {
        min_ratio: layer.number(args.grid_min, "grid_min")?.unwrap_or(defaults.min_ratio),
        max_ratio: layer.number(args.grid_max, "grid_max")?.unwrap_or(defaults.max_ratio),
        points: layer.count(args.grid_points, "grid_points")?.unwrap_or(defaults.points),
    };
    if !grid.is_valid() {
        return Err(CliError::Usage(
            "mu_tilde grid needs at least 64 points and 0 < grid_min < grid_max".into(),
        ));
    }
    let config = SimConfig {
        n_voters,
        seed: settings.seed,
        grid,
        states,
        trace_cap,
    };
    echo.push(("seed".into(), settings.seed.to_string()));
    echo.push(("n_voters".into(), n_voters.to_string()));
    echo.push((
        "state".into(),
        match config.states.as_slice() {
            [s] => s.index().to_string(),
            _ => "both".into(),
        },
    ));
    echo.push(("grid_min".into(), fmt_number(grid.min_ratio)));
    echo.push(("grid_max".into(), fmt_number(grid.max_ratio)));
    echo.push(("grid_points".into(), grid.points.to_string()));
    echo.push(("trace_cap".into(), trace_cap.to_string()));

    let analytic = vote_shares(p, &settings.cost, &settings.kappa)?;
    let result = simulate_election(p, &settings.cost, &settings.kappa, &config);

    let mut t = Table::new(&[
        "state",
        "n",
        "policy1_count",
        "share",
        "stderr",
        "winner",
        "analytic_share",
        "z_score",
    ]);
    for tally in &result.tallies {
        let a = analytic.policy1_share(tally.state);
        let se = (a * (1.0 - a) / tally.n as f64).sqrt();
        let z = if se > 0.0 {
            Cell::Num((tally.share - a) / se)
        } else if tally.share == a {
            Cell::Num(0.0)
        } else {
            Cell::Missing
        };
        let winner = match tally.winner {
            Winner::Policy(pol) => format!("policy{}", pol.index()),
            Winner::Tie => "tie".into(),
        };
        t.push(vec![
            Cell::Int(tally.state.index() as i64),
            Cell::Int(tally.n as i64),
            Cell::Int(tally.policy1_count as i64),
            tally.share.into(),
            tally.stderr.into(),
            winner.into(),
            a.into(),
            z,
        ]);
    }
    if let Some(path) = trace_path {
        let mut trace = Table::new(&["state", "voter", "s", "kappa", "mu_tilde", "pi", "ballot", "indifferent"]);
        for r in &result.trace {
            trace.push(vec![
                Cell::Int(r.state.index() as i64),
                Cell::Int(r.voter as i64),
                r.s.into(),
                r.kappa.into(),
                r.mu_tilde.value().into(),
                r.pi.into(),
                Cell::Int(r.ballot.index() as i64),
                r.indifferent.into(),
            ]);
        }
        files.push((path.into(), render(&trace, settings.format, echo)));
    }
    Ok(t)
}
