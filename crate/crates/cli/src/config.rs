//! Scenario files.
//!
//! A scenario is a TOML document. Every section is optional; omitted values
//! fall back to the defaults below (Λ = 1, e = 0.5, quadratic f with a = 0.1
//! and φ_h = 9, blocking metric).
//!
//! ```toml
//! seed = 7
//! metric = "blocking"            # unavailability | blocking | delay
//! output = "out/run.csv"         # optional
//!
//! [market]
//! Lambda = 2.0
//! eta = 1.0
//! p = 0.0
//! nu = 1.0
//! beta = 0.0
//! alpha = 0.0
//! N_bar = 50
//!
//! [model]
//! family = "quadratic"           # quadratic | linear | sqrt | tabulated
//! a = 0.1
//! phi_h = 9.0
//!
//! [model_table]                  # optional: tabulated f from a CSV with columns phi,f
//! path = "f.csv"
//! phi_h = 9.0
//!
//! [sweep]                        # optional
//! variable = "rho"               # e | beta | alpha | rho
//! start = 0.02
//! stop = 1.4
//! steps = 70
//!
//! [we]
//! prices = [[5.0, 5.0], [6.0, 4.0]]
//!
//! [br]
//! init = [5.0, 5.0]
//! iters = 40
//! burn_in = 20
//! tol = 0.01
//!
//! [simulate]
//! phi = 5.0
//! lambda = 2.0                   # defaults to Lambda
//! events = 1000000               # or: time = 1e5
//!
//! [equilibria]
//! eps = 0.01
//! grid = 200
//! eps_ec = 0.2                   # optional, with eps_ec_beta
//! eps_ec_beta = 0.001
//! ```

use std::path::{Path, PathBuf};

use ridegame::simulate::Horizon;
use ridegame::{MarketParams, PriceModel, QosMetric};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_metric")]
    pub metric: QosMetric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_market")]
    pub market: MarketParams,
    #[serde(default = "default_model")]
    pub model: PriceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_table: Option<TableRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub we: WeOptions,
    #[serde(default)]
    pub br: BrOptions,
    #[serde(default)]
    pub simulate: SimulateOptions,
    #[serde(default)]
    pub equilibria: EquilibriaOptions,
}

fn default_metric() -> QosMetric {
    QosMetric::Blocking
}

fn default_market() -> MarketParams {
    MarketParams::with_rates(1.0, 0.5)
}

fn default_model() -> PriceModel {
    PriceModel::quadratic(0.1, 9.0)
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            metric: default_metric(),
            output: None,
            market: default_market(),
            model: default_model(),
            model_table: None,
            sweep: None,
            we: WeOptions::default(),
            br: BrOptions::default(),
            simulate: SimulateOptions::default(),
            equilibria: EquilibriaOptions::default(),
        }
    }
}

/// Tabulated sensitivity read from a CSV file with header `phi,f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRef {
    pub path: PathBuf,
    pub phi_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    E,
    Beta,
    Alpha,
    Rho,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        ridegame::numeric::linspace(self.start, self.stop, self.steps)
    }

    /// Market parameters with the swept variable set to `v`.
    pub fn apply(&self, market: &MarketParams, v: f64) -> MarketParams {
        let mut m = market.clone();
        match self.variable {
            SweepVar::E => m.eta = v * (1.0 - m.p),
            SweepVar::Rho => m.eta = v * m.lambda_total * (1.0 - m.p),
            SweepVar::Beta => m.beta = v,
            SweepVar::Alpha => m.alpha = v,
        }
        m
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(format!("sweep: {msg}")));
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return bad("range must be finite");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        let (lo, hi) = (self.start.min(self.stop), self.start.max(self.stop));
        match self.variable {
            SweepVar::E | SweepVar::Rho if lo <= 0.0 => bad("range must be positive"),
            SweepVar::Beta if lo < 0.0 => bad("beta must be non-negative"),
            SweepVar::Alpha if lo < 0.0 || hi >= 1.0 => bad("alpha must lie in [0, 1)"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeOptions {
    pub prices: Vec<[f64; 2]>,
}

impl Default for WeOptions {
    fn default() -> Self {
        Self { prices: vec![[5.0, 5.0]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BrOptions {
    pub init: [f64; 2],
    pub iters: usize,
    pub burn_in: usize,
    pub tol: f64,
}

impl Default for BrOptions {
    fn default() -> Self {
        Self { init: [5.0, 5.0], iters: 40, burn_in: 20, tol: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateOptions {
    pub phi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self { phi: 5.0, lambda: None, events: None, time: None }
    }
}

impl SimulateOptions {
    pub fn horizon(&self) -> Result<Horizon, CliError> {
        match (self.events, self.time) {
            (Some(_), Some(_)) => Err(CliError::Config("simulate: give events or time, not both".into())),
            (Some(n), None) => Ok(Horizon::Events(n)),
            (None, Some(t)) => Ok(Horizon::Time(t)),
            (None, None) => Ok(Horizon::Events(1_000_000)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriaOptions {
    pub eps: f64,
    pub grid: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_ec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_ec_beta: Option<f64>,
}

impl Default for EquilibriaOptions {
    fn default() -> Self {
        Self { eps: 0.01, grid: 200, eps_ec: None, eps_ec_beta: None }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads, parses and validates a scenario file; relative table paths
    /// resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(table) = &mut cfg.model_table {
            if table.path.is_relative() {
                if let Some(dir) = path.parent() {
                    table.path = dir.join(&table.path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.market.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.model.check_structure().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(t) = &self.model_table {
            if !t.path.exists() {
                return Err(CliError::Config(format!("model table {} does not exist", t.path.display())));
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if self.br.iters < 2 || self.br.burn_in >= self.br.iters {
            return Err(CliError::Config("br: need iters >= 2 and burn_in < iters".into()));
        }
        if self.equilibria.grid < 2 {
            return Err(CliError::Config("equilibria: grid must be at least 2".into()));
        }
        if self.equilibria.eps_ec.is_some() != self.equilibria.eps_ec_beta.is_some() {
            return Err(CliError::Config("equilibria: eps_ec and eps_ec_beta go together".into()));
        }
        self.simulate.horizon()?;
        Ok(())
    }

    /// The sensitivity model, reading the table file if one is referenced.
    pub fn price_model(&self) -> Result<PriceModel, CliError> {
        let Some(t) = &self.model_table else {
            return Ok(self.model.clone());
        };
        let mut reader = csv::Reader::from_path(&t.path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", t.path.display())))?;
        let (mut phi, mut f) = (Vec::new(), Vec::new());
        for row in reader.deserialize::<(f64, f64)>() {
            let (x, y) = row.map_err(|e| CliError::Config(format!("{}: {e}", t.path.display())))?;
            phi.push(x);
            f.push(y);
        }
        PriceModel::tabulated(phi, f, t.phi_h).map_err(|e| CliError::Config(e.to_string()))
    }
}
