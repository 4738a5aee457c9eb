//! Subcommands. Each renders its result to a string; `main` decides where it goes.

use rayon::prelude::*;
use ridegame::dynamics::{alternating_br, classify_trajectory, BRTrajectory, Classification};
use ridegame::equilibria::{
    compare_regimes, duopoly_b_equilibrium, duopoly_u_ne, ec_endpoints, monopoly_optimal, security_value, verify_ec,
    verify_eps_ec, verify_eps_ne, Candidate, ComparisonTable, EcReport, Market, Equilibrium, EpsReport, EquilibriumResult,
    MonopolyOutcome, Regime, SecurityValue, SymmetricNe, Thresholds,
};
use ridegame::simulate::simulate_platform;
use ridegame::wardrop::Game;
use ridegame::MarketParams;
use serde::Serialize;

use crate::config::{ScenarioConfig, SweepSpec, SweepVar};
use crate::output::{to_json, Cell, Format, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Wardrop splits and payoffs at the configured price pairs.
    We,
    /// Monopoly and duopoly prices and payoffs across ρ.
    SweepRho,
    /// Alternating best-response trajectory.
    Br,
    /// Event-driven simulation of one platform.
    Simulate,
    /// Duopoly equilibrium and its verification reports.
    Equilibria,
    /// Prices and payoffs of the four market structures.
    Compare,
    /// Checks the shape assumptions on f.
    ValidateModel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::We => "we",
            Command::SweepRho => "sweep-rho",
            Command::Br => "br",
            Command::Simulate => "simulate",
            Command::Equilibria => "equilibria",
            Command::Compare => "compare",
            Command::ValidateModel => "validate-model",
        }
    }

    pub fn default_format(self) -> Format {
        match self {
            Command::We | Command::SweepRho | Command::Br | Command::Compare => Format::Csv,
            Command::Simulate | Command::Equilibria | Command::ValidateModel => Format::Json,
        }
    }
}

/// Rendered output plus an error to report after the output is written.
#[derive(Debug)]
pub struct Emitted {
    pub body: String,
    pub failure: Option<CliError>,
}

impl From<String> for Emitted {
    fn from(body: String) -> Self {
        Self { body, failure: None }
    }
}

pub fn run(cmd: Command, cfg: &ScenarioConfig, format: Format) -> Result<Emitted, CliError> {
    match cmd {
        Command::We => cmd_we(cfg, format).map(Into::into),
        Command::SweepRho => cmd_sweep_rho(cfg, format).map(Into::into),
        Command::Br => cmd_br(cfg, format).map(Into::into),
        Command::Simulate => cmd_simulate(cfg, format).map(Into::into),
        Command::Equilibria => cmd_equilibria(cfg, format).map(Into::into),
        Command::Compare => cmd_compare(cfg, format).map(Into::into),
        Command::ValidateModel => cmd_validate_model(cfg, format),
    }
}

fn var_name(v: SweepVar) -> &'static str {
    match v {
        SweepVar::E => "e",
        SweepVar::Beta => "beta",
        SweepVar::Alpha => "alpha",
        SweepVar::Rho => "rho",
    }
}

pub fn cmd_we(cfg: &ScenarioConfig, format: Format) -> Result<String, CliError> {
    let model = cfg.price_model()?;
    let points: Vec<(Option<f64>, MarketParams)> = match &cfg.sweep {
        Some(s) => s.values().into_iter().map(|v| (Some(v), s.apply(&cfg.market, v))).collect(),
        None => vec![(None, cfg.market.clone())],
    };
    let rows: Vec<Result<Vec<Vec<Cell>>, CliError>> = points
        .par_iter()
        .map(|(v, market)| {
            market.validate()?;
            let game = Game::new(market, &model, cfg.metric);
            let mut out = Vec::new();
            for &[phi1, phi2] in &cfg.we.prices {
                let split = game.split(phi1, phi2)?;
                let (m1, m2) = game.payoffs(phi1, phi2)?;
                let mut row: Vec<Cell> = v.iter().map(|&x| Cell::Num(x)).collect();
                row.extend(
                    [phi1, phi2, split.lambda1, split.lambda2, split.gap, m1, m2].into_iter().map(Cell::Num),
                );
                out.push(row);
            }
            Ok(out)
        })
        .collect();
    let mut header = Vec::new();
    if let Some(s) = &cfg.sweep {
        header.push(var_name(s.variable));
    }
    header.extend(["phi1", "phi2", "lambda1", "lambda2", "gap", "m1", "m2"]);
    let mut table = Table::new(header);
    for r in rows {
        for row in r? {
            table.push(row);
        }
    }
    table.render(format)
}

fn default_rho_sweep() -> SweepSpec {
    SweepSpec { variable: SweepVar::Rho, start: 0.02, stop: 1.4, steps: 70 }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::DriverScarce => "driver_scarce",
        Regime::Intermediate => "intermediate",
        Regime::PassengerScarce => "passenger_scarce",
        Regime::Saturated => "saturated",
    }
}

pub fn cmd_sweep_rho(cfg: &ScenarioConfig, format: Format) -> Result<String, CliError> {
    let model = cfg.price_model()?;
    let spec = cfg.sweep.clone().unwrap_or_else(default_rho_sweep);
    if !matches!(spec.variable, SweepVar::Rho | SweepVar::E) {
        return Err(CliError::Config("sweep-rho needs sweep.variable = \"rho\" or \"e\"".into()));
    }
    let thresholds = Thresholds::new(&model)?;
    let rows: Vec<Result<Vec<Cell>, CliError>> = spec
        .values()
        .par_iter()
        .map(|&v| {
            let market = spec.apply(&cfg.market, v);
            let t = compare_regimes(&market, &model)?;
            let regime = Regime::classify(&market, &model, &thresholds);
            let row = |m| t.row(m);
            use Market::*;
            Ok(vec![
                Cell::Num(market.rho()),
                Cell::Text(regime_name(regime).into()),
                Cell::Num(row(Monopoly).price_low),
                Cell::Num(row(Monopoly).payoff),
                Cell::Num(row(DuopolyU).price_low),
                Cell::Num(row(DuopolyU).payoff),
                Cell::Num(row(DuopolyB).price_low),
                Cell::Num(row(DuopolyB).price_high),
                Cell::Num(row(DuopolyB).payoff),
                Cell::Num(row(Cooperative).price_low),
                Cell::Num(row(Cooperative).payoff),
            ])
        })
        .collect();
    let mut table = Table::new(vec![
        "rho",
        "regime",
        "monopoly_price",
        "monopoly_payoff",
        "duopoly_u_price",
        "duopoly_u_payoff",
        "duopoly_b_price_low",
        "duopoly_b_price_high",
        "duopoly_b_payoff",
        "cooperative_price",
        "cooperative_payoff",
    ]);
    for r in rows {
        table.push(r?);
    }
    table.render(format)
}

#[derive(Serialize)]
struct BrReport {
    trajectory: BRTrajectory,
    classification: Classification,
}

pub fn cmd_br(cfg: &ScenarioConfig, format: Format) -> Result<String, CliError> {
    let model = cfg.price_model()?;
    let m = &cfg.market;
    let o = &cfg.br;
    let traj = alternating_br(m, &model, cfg.metric, (o.init[0], o.init[1]), o.iters, m.beta, m.alpha)?;
    match format {
        Format::Csv => {
            let mut table = Table::new(vec!["iter", "player", "price", "payoff"]);
            for p in &traj.points {
                table.push(vec![
                    Cell::Int(p.iteration as u64),
                    Cell::Int(p.player as u64),
                    Cell::Num(p.price),
                    Cell::Num(p.payoff),
                ]);
            }
            table.to_csv()
        }
        Format::Json => {
            let classification = classify_trajectory(&traj, o.burn_in, o.tol)?;
            to_json(&BrReport { trajectory: traj, classification })
        }
    }
}

pub fn cmd_simulate(cfg: &ScenarioConfig, format: Format) -> Result<String, CliError> {
    let model = cfg.price_model()?;
    let o = &cfg.simulate;
    let lambda = o.lambda.unwrap_or(cfg.market.lambda_total);
    let est = simulate_platform(&cfg.market, &model, lambda, o.phi, o.horizon()?, cfg.seed)?;
    match format {
        Format::Json => to_json(&est),
        Format::Csv => {
            let mut table = Table::new(vec!["n", "time_fraction", "snapshots"]);
            let len = est.n_marginal.len().max(est.n_snapshots.len());
            for n in 0..len {
                table.push(vec![
                    Cell::Int(n as u64),
                    Cell::Num(est.n_marginal.get(n).copied().unwrap_or(0.0)),
                    Cell::Int(est.n_snapshots.get(n).copied().unwrap_or(0)),
                ]);
            }
            table.to_csv()
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EquilibriaReport {
    pub rho: f64,
    pub thresholds: Thresholds,
    pub monopoly: MonopolyOutcome,
    pub duopoly_u: SymmetricNe,
    pub duopoly_b: EquilibriumResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ec: Option<EcReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_ec: Option<EcReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub security: Option<SecurityValue>,
    /// Deviation check of the limit equilibrium at the configured β > 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_ne: Option<EpsReport>,
}

pub fn equilibria_report(cfg: &ScenarioConfig) -> Result<EquilibriaReport, CliError> {
    let model = cfg.price_model()?;
    let m = &cfg.market;
    let o = &cfg.equilibria;
    let duopoly_b = duopoly_b_equilibrium(m, &model, o.eps)?;
    let (mut ec, mut eps_ec, mut security, mut eps_ne) = (None, None, None, None);
    match &duopoly_b.equilibrium {
        Equilibrium::MixedNE { .. } => {
            let interval = ec_endpoints(m, &model)?;
            ec = Some(verify_ec(m, &model, interval, o.grid)?);
            security = Some(security_value(m, &model)?);
            if let (Some(eps), Some(beta)) = (o.eps_ec, o.eps_ec_beta) {
                eps_ec = Some(verify_eps_ec(m, &model, interval, eps, beta, o.grid)?);
            }
        }
        Equilibrium::PureNE { price, .. } if m.beta > 0.0 => {
            let cand = Candidate::Pure(*price);
            eps_ne = Some(verify_eps_ne(m, &model, cfg.metric, &cand, o.eps, m.beta, m.alpha, 2000)?);
        }
        _ => {}
    }
    Ok(EquilibriaReport {
        rho: m.rho(),
        thresholds: Thresholds::new(&model)?,
        monopoly: monopoly_optimal(m, &model)?,
        duopoly_u: duopoly_u_ne(m, &model)?,
        duopoly_b,
        ec,
        eps_ec,
        security,
        eps_ne,
    })
}

pub fn cmd_equilibria(cfg: &ScenarioConfig, format: Format) -> Result<String, CliError> {
    if format != Format::Json {
        return Err(CliError::Config("equilibria emits JSON only".into()));
    }
    to_json(&equilibria_report(cfg)?)
}

fn market_name(m: Market) -> &'static str {
    match m {
        Market::Monopoly => "monopoly",
        Market::DuopolyU => "duopoly_u",
        Market::DuopolyB => "duopoly_b",
        Market::Cooperative => "cooperative",
    }
}

pub fn cmd_compare(cfg: &ScenarioConfig, format: Format) -> Result<String, CliError> {
    let model = cfg.price_model()?;
    let t: ComparisonTable = compare_regimes(&cfg.market, &model)?;
    match format {
        Format::Json => to_json(&t),
        Format::Csv => {
            let mut table = Table::new(vec!["market", "price_low", "price_high", "payoff"]);
            for r in &t.rows {
                table.push(vec![
                    Cell::Text(market_name(r.market).into()),
                    Cell::Num(r.price_low),
                    Cell::Num(r.price_high),
                    Cell::Num(r.payoff),
                ]);
            }
            table.to_csv()
        }
    }
}

/// Reports every check; fails with a regime error when an assumption does not hold.
pub fn cmd_validate_model(cfg: &ScenarioConfig, format: Format) -> Result<Emitted, CliError> {
    let model = cfg.price_model()?;
    let report = model.validate_assumptions(10_000);
    let body = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut table = Table::new(vec!["check", "passed", "first_violation"]);
            for c in &report.checks {
                table.push(vec![
                    Cell::Text(c.name.clone()),
                    Cell::Text(c.passed.to_string()),
                    c.first_violation.map(Cell::Num).unwrap_or(Cell::Text(String::new())),
                ]);
            }
            table.to_csv()?
        }
    };
    let failure = (!report.all_passed()).then(|| {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        CliError::Regime(format!("model violates: {}", failed.join(", ")))
    });
    Ok(Emitted { body, failure })
}
