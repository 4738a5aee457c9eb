//! Monopoly and duopoly equilibria in the infinite-patience limit, plus grid
//! verifiers for equilibrium cycles and ε-equilibria at small β.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numeric::{bisect, golden_max, last_true, linspace};
use crate::queueing::MarketParams;
use crate::sensitivity::PriceModel;
use crate::wardrop::{Game, QosMetric};
use crate::{Error, Result};

/// Points sampled when asserting that a threshold function is strictly decreasing.
const MONOTONE_SAMPLES: usize = 20;
const ROOT_TOL: f64 = 1e-12;
const GOLDEN_TOL: f64 = 1e-10;
const MONOPOLY_GRID: usize = 10_000;
const SECURITY_GRID: usize = 300;
const MIXED_CELLS: usize = 512;
/// Slack when deciding whether a grid point lies in an interval.
const MEMBER_TOL: f64 = 1e-12;

/// Threshold functions `c₁f(φ) + c₂φf′(φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdKind {
    /// `f + φf′`, the monopoly threshold.
    Dm,
    /// `f + 2φf′`, the blocking-duopoly threshold.
    Db,
    /// `2f + φf′`, the unavailability-duopoly threshold.
    Du,
}

impl ThresholdKind {
    fn coefficients(self) -> (f64, f64) {
        match self {
            ThresholdKind::Dm => (1.0, 1.0),
            ThresholdKind::Db => (1.0, 2.0),
            ThresholdKind::Du => (2.0, 1.0),
        }
    }
}

pub fn threshold_value(kind: ThresholdKind, model: &PriceModel, phi: f64) -> f64 {
    let (c1, c2) = kind.coefficients();
    c1 * model.f(phi) + c2 * model.phi_f_prime(phi)
}

/// `max{φ ∈ [0, φ_h] : d(φ) ≥ 0}`.
pub fn threshold_root(kind: ThresholdKind, model: &PriceModel) -> Result<f64> {
    let d = |phi| threshold_value(kind, model, phi);
    let samples: Vec<f64> = linspace(0.0, model.phi_h, MONOTONE_SAMPLES).iter().map(|&p| d(p)).collect();
    if samples.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::NotDecreasing(format!("threshold {kind:?}")));
    }
    if d(model.phi_h) >= 0.0 {
        return Ok(model.phi_h);
    }
    Ok(bisect(d, 0.0, model.phi_h, ROOT_TOL, 200))
}

/// The three threshold prices `φ_m`, `φ_b`, `φ_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub phi_m: f64,
    pub phi_b: f64,
    pub phi_u: f64,
}

impl Thresholds {
    pub fn new(model: &PriceModel) -> Result<Self> {
        Ok(Self {
            phi_m: threshold_root(ThresholdKind::Dm, model)?,
            phi_b: threshold_root(ThresholdKind::Db, model)?,
            phi_u: threshold_root(ThresholdKind::Du, model)?,
        })
    }
}

/// High-price band payoff `m(φ) = (Λf(φ) − e)φ`.
pub fn m_value(params: &MarketParams, model: &PriceModel, phi: f64) -> f64 {
    (params.lambda_total * model.f(phi) - params.e()) * phi
}

/// Monopoly payoff with demand `Λ/2`: `eφ` below `f⁻¹(2ρ)`, `(Λ/2)f(φ)φ` otherwise.
pub fn monopoly_payoff(params: &MarketParams, model: &PriceModel, phi: f64) -> f64 {
    let inv_two_rho = model.inverse(2.0 * params.rho());
    if phi < inv_two_rho {
        params.e() * phi
    } else {
        0.5 * params.lambda_total * model.f(phi) * phi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonopolyOutcome {
    pub price: f64,
    pub payoff: f64,
    /// Argmax of the payoff over a uniform grid, as a cross-check.
    pub grid_price: f64,
    pub grid_payoff: f64,
    pub grid_step: f64,
}

pub fn monopoly_optimal(params: &MarketParams, model: &PriceModel) -> Result<MonopolyOutcome> {
    params.validate()?;
    let phi_m = threshold_root(ThresholdKind::Dm, model)?;
    let rho = params.rho();
    let price = if rho <= model.f(phi_m) / 2.0 { model.inverse(2.0 * rho) } else { phi_m };
    let grid = linspace(0.0, model.phi_h, MONOPOLY_GRID);
    let (mut grid_price, mut grid_payoff) = (0.0, f64::NEG_INFINITY);
    for &p in &grid {
        let v = monopoly_payoff(params, model, p);
        if v > grid_payoff {
            grid_price = p;
            grid_payoff = v;
        }
    }
    Ok(MonopolyOutcome {
        price,
        payoff: monopoly_payoff(params, model, price),
        grid_price,
        grid_payoff,
        grid_step: grid[1] - grid[0],
    })
}

/// Regime of the blocking duopoly, by driver-passenger ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `ρ ≤ f(φ_m)/2`.
    DriverScarce,
    /// `f(φ_m)/2 < ρ ≤ f(φ_b)/2`.
    Intermediate,
    /// `f(φ_b)/2 < ρ < 1`.
    PassengerScarce,
    /// `ρ ≥ 1`.
    Saturated,
}

impl Regime {
    pub fn classify(params: &MarketParams, model: &PriceModel, th: &Thresholds) -> Self {
        let rho = params.rho();
        if rho >= 1.0 {
            Regime::Saturated
        } else if rho > model.f(th.phi_b) / 2.0 {
            Regime::PassengerScarce
        } else if rho > model.f(th.phi_m) / 2.0 {
            Regime::Intermediate
        } else {
            Regime::DriverScarce
        }
    }
}

/// Symmetric pure equilibrium price and per-platform payoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricNe {
    pub price: f64,
    pub payoff: f64,
}

/// Symmetric NE of the duopoly under the unavailability metric.
pub fn duopoly_u_ne(params: &MarketParams, model: &PriceModel) -> Result<SymmetricNe> {
    params.validate()?;
    let phi_u = threshold_root(ThresholdKind::Du, model)?;
    let rho = params.rho();
    let price = if rho <= model.f(phi_u) / 2.0 { model.inverse(2.0 * rho) } else { phi_u };
    // Both platforms receive Λ/2, so the payoff is the monopoly payoff at that price.
    Ok(SymmetricNe { price, payoff: monopoly_payoff(params, model, price) })
}

/// The symmetric mixed equilibrium `σ*` supported on `[φ_L*, φ_R*]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    pub phi_l: f64,
    pub phi_r: f64,
    /// Expected payoff `m(φ_R*)`.
    pub mean_payoff: f64,
    pub e: f64,
    pub lambda_total: f64,
    pub model: PriceModel,
}

impl MixedStrategy {
    pub fn new(params: &MarketParams, model: &PriceModel) -> Result<Self> {
        let (phi_l, phi_r) = ec_endpoints(params, model)?;
        Ok(Self {
            phi_l,
            phi_r,
            mean_payoff: m_value(params, model, phi_r),
            e: params.e(),
            lambda_total: params.lambda_total,
            model: model.clone(),
        })
    }

    /// `σ*([φ_L*, φ])`; domain error outside the support.
    pub fn cdf(&self, phi: f64) -> Result<f64> {
        if phi < self.phi_l - MEMBER_TOL || phi > self.phi_r + MEMBER_TOL {
            return Err(Error::Domain { phi, phi_h: self.phi_r });
        }
        Ok(self.cdf_total(phi))
    }

    /// CDF extended by 0 below and 1 above the support.
    pub fn cdf_total(&self, phi: f64) -> f64 {
        if phi <= self.phi_l {
            return 0.0;
        }
        if phi >= self.phi_r {
            return 1.0;
        }
        let (e, lam) = (self.e, self.lambda_total);
        let f_r = self.model.f(self.phi_r);
        let num = e * (phi + self.phi_r) - lam * f_r * self.phi_r;
        let den = 2.0 * e * phi - lam * self.model.f(phi) * phi;
        (num / den).clamp(0.0, 1.0)
    }

    fn m(&self, phi: f64) -> f64 {
        (self.lambda_total * self.model.f(phi) - self.e) * phi
    }

    /// Payoff of a pure price against `σ*` at β = 0.
    pub fn payoff_against(&self, phi: f64) -> f64 {
        if phi < self.phi_l {
            self.e * phi
        } else if phi > self.phi_r {
            self.m(phi).max(0.0)
        } else {
            let s = self.cdf_total(phi);
            self.m(phi) * s + self.e * phi * (1.0 - s)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Equilibrium {
    PureNE { price: f64, payoff: f64 },
    MixedNE { strategy: MixedStrategy },
    /// `(δ, δ)` is an ε-equilibrium; any smaller δ works too, so δ is not unique.
    EpsNE { price: f64, eps: f64, payoff: f64, unique: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub regime: Regime,
    pub equilibrium: Equilibrium,
}

/// Symmetric equilibrium of the blocking duopoly at β = 0.
pub fn duopoly_b_equilibrium(params: &MarketParams, model: &PriceModel, eps: f64) -> Result<EquilibriumResult> {
    params.validate()?;
    let th = Thresholds::new(model)?;
    let regime = Regime::classify(params, model, &th);
    let rho = params.rho();
    let lam = params.lambda_total;
    let equilibrium = match regime {
        Regime::DriverScarce | Regime::Intermediate => {
            let price = model.inverse(2.0 * rho);
            Equilibrium::PureNE { price, payoff: 0.5 * lam * model.f(price) * price }
        }
        Regime::PassengerScarce => Equilibrium::MixedNE { strategy: MixedStrategy::new(params, model)? },
        Regime::Saturated => {
            if !(eps > 0.0) {
                return Err(Error::InvalidParams("eps must be positive when rho >= 1".into()));
            }
            // Λf(φ)φ increases up to φ_m, so its running sup on [0, δ] is its value at min(δ, φ_m).
            let g = |phi: f64| lam * model.f(phi) * phi;
            let delta = if g(th.phi_m) < eps {
                model.phi_h
            } else {
                last_true(|d| g(d) < eps, 0.0, th.phi_m, ROOT_TOL)
            };
            Equilibrium::EpsNE { price: delta, eps, payoff: 0.5 * g(delta), unique: false }
        }
    };
    Ok(EquilibriumResult { regime, equilibrium })
}

fn check_mixed_regime(params: &MarketParams, model: &PriceModel) -> Result<()> {
    params.validate()?;
    let phi_b = threshold_root(ThresholdKind::Db, model)?;
    let rho = params.rho();
    let lo = model.f(phi_b) / 2.0;
    if rho > lo && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::Regime(format!("rho = {rho} outside ({lo}, 1)")))
    }
}

/// Support `(φ_L*, φ_R*)`: `φ_R*` maximizes `m`, and `φ_L* = m(φ_R*)/e`.
pub fn ec_endpoints(params: &MarketParams, model: &PriceModel) -> Result<(f64, f64)> {
    check_mixed_regime(params, model)?;
    let (phi_r, m_r) = golden_max(|p| m_value(params, model, p), 0.0, model.phi_h, GOLDEN_TOL);
    Ok((m_r / params.e(), phi_r))
}

pub fn mixed_ne_cdf(params: &MarketParams, model: &PriceModel, phi: f64) -> Result<f64> {
    MixedStrategy::new(params, model)?.cdf(phi)
}

/// Payoff of price `φ` against the mixed strategy `σ`.
pub fn mixed_payoff(phi: f64, sigma: &MixedStrategy) -> f64 {
    sigma.payoff_against(phi)
}

/// Outcome of one equilibrium-cycle condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionOutcome {
    pub passed: bool,
    /// Prices at which the condition first fails.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityOutcome {
    pub passed: bool,
    pub tested: usize,
    pub refuted: usize,
    /// A sub-interval that satisfies both conditions, if any.
    pub witness: Option<(f64, f64)>,
}

/// Grid verification of the equilibrium-cycle conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcReport {
    pub interval: (f64, f64),
    pub eps: f64,
    pub beta: f64,
    pub grid_n: usize,
    pub stability: ConditionOutcome,
    pub cyclicity: ConditionOutcome,
    pub minimality: MinimalityOutcome,
}

impl EcReport {
    pub fn passed(&self) -> bool {
        self.stability.passed && self.cyclicity.passed && self.minimality.passed
    }
}

/// Payoffs `M(x, y)` for every grid price `x` against every opponent column `y`.
struct PayoffTable {
    points: Vec<f64>,
    /// Index into `points` of each opponent column.
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl PayoffTable {
    fn build(points: Vec<f64>, cols: Vec<usize>, payoff: impl Fn(f64, f64) -> Result<f64> + Sync) -> Result<Self> {
        let nc = cols.len();
        let rows: Vec<Result<Vec<f64>>> = points
            .par_iter()
            .map(|&x| cols.iter().map(|&j| payoff(x, points[j])).collect())
            .collect();
        let mut values = Vec::with_capacity(points.len() * nc);
        for r in rows {
            values.extend(r?);
        }
        Ok(Self { points, cols, values })
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols.len() + col]
    }

    /// Checks stability and cyclicity for `[c, d]` with slack `eps`.
    ///
    /// Opponents range over `[c + eps, d − eps]`, deviations over `[c, d]` and
    /// outside actions over the complement of `[c − eps, d + eps]`.
    fn conditions(&self, c: f64, d: f64, eps: f64) -> (ConditionOutcome, ConditionOutcome) {
        let inside = |x: f64| x >= c - MEMBER_TOL && x <= d + MEMBER_TOL;
        let outside = |x: f64| x < c - eps - MEMBER_TOL || x > d + eps + MEMBER_TOL;
        let opp: Vec<usize> = (0..self.cols.len())
            .filter(|&k| {
                let y = self.points[self.cols[k]];
                y >= c + eps - MEMBER_TOL && y <= d - eps + MEMBER_TOL
            })
            .collect();
        let mut best_in = vec![f64::NEG_INFINITY; self.cols.len()];
        let mut best_out = vec![f64::NEG_INFINITY; self.cols.len()];
        for (i, &x) in self.points.iter().enumerate() {
            let is_in = inside(x);
            let is_out = outside(x);
            if !is_in && !is_out {
                continue;
            }
            for &k in &opp {
                let v = self.at(i, k);
                if is_in && v > best_in[k] {
                    best_in[k] = v;
                }
                if is_out && v > best_out[k] {
                    best_out[k] = v;
                }
            }
        }

        let stability = match opp.iter().find(|&&k| !(best_in[k] > best_out[k])) {
            Some(&k) => ConditionOutcome { passed: false, witness: Some(vec![self.points[self.cols[k]]]) },
            None => ConditionOutcome { passed: true, witness: None },
        };

        let mut cyclicity = ConditionOutcome { passed: true, witness: None };
        'pairs: for &k1 in &opp {
            for &k2 in &opp {
                // Player 1 at column k1 against k2, player 2 at k2 against k1.
                let cur1 = self.at(self.cols[k1], k2);
                let cur2 = self.at(self.cols[k2], k1);
                let p1 = best_in[k2] > cur1 && best_in[k2] > best_out[k2];
                let p2 = best_in[k1] > cur2 && best_in[k1] > best_out[k1];
                if !(p1 || p2) {
                    cyclicity = ConditionOutcome {
                        passed: false,
                        witness: Some(vec![self.points[self.cols[k1]], self.points[self.cols[k2]]]),
                    };
                    break 'pairs;
                }
            }
        }
        (stability, cyclicity)
    }
}

/// Number of endpoints in the sub-interval family used for minimality.
const FAMILY: usize = 20;

/// Grid verification of the three cycle conditions.
fn verify_cycle(
    model: &PriceModel,
    interval: (f64, f64),
    eps: f64,
    grid_n: usize,
    payoff: impl Fn(f64, f64) -> Result<f64> + Sync,
) -> Result<(ConditionOutcome, ConditionOutcome, MinimalityOutcome)> {
    let (a, b) = interval;
    if !(a < b) || a < 0.0 || b > model.phi_h {
        return Err(Error::InvalidParams(format!("interval ({a}, {b}) is not inside [0, phi_h]")));
    }
    let inner = linspace(a, b, grid_n);
    let outer_n = (10 * grid_n).max(2000);
    let mut points = inner.clone();
    points.extend(linspace(0.0, model.phi_h, outer_n).into_iter().filter(|&x| x < a || x > b));
    let cols: Vec<usize> = (0..grid_n).filter(|&i| inner[i] >= a + eps - MEMBER_TOL && inner[i] <= b - eps + MEMBER_TOL).collect();
    let table = PayoffTable::build(points, cols.clone(), payoff)?;

    let (stability, cyclicity) = table.conditions(a, b, eps);

    // Sub-intervals with endpoints on a FAMILY-point subset of the opponent range.
    let family: Vec<usize> = if cols.len() >= 2 {
        let m = FAMILY.min(cols.len());
        (0..m).map(|k| cols[(k * (cols.len() - 1)) / (m - 1)]).collect()
    } else {
        Vec::new()
    };
    let (mut tested, mut refuted, mut witness) = (0, 0, None);
    for (i, &lo) in family.iter().enumerate() {
        for &hi in &family[i + 1..] {
            let (c, d) = (inner[lo], inner[hi]);
            if eps == 0.0 && c == a && d == b {
                continue;
            }
            tested += 1;
            let (s, cy) = table.conditions(c, d, 0.0);
            if s.passed && cy.passed {
                witness.get_or_insert((c, d));
            } else {
                refuted += 1;
            }
        }
    }
    let minimality = MinimalityOutcome { passed: tested > 0 && refuted == tested, tested, refuted, witness };
    Ok((stability, cyclicity, minimality))
}

/// Checks whether `interval` is an equilibrium cycle of the β = 0 blocking duopoly.
pub fn verify_ec(params: &MarketParams, model: &PriceModel, interval: (f64, f64), grid_n: usize) -> Result<EcReport> {
    params.validate()?;
    let mut idp = params.clone();
    idp.beta = 0.0;
    let game = Game::new(&idp, model, QosMetric::Blocking);
    let (stability, cyclicity, minimality) = verify_cycle(model, interval, 0.0, grid_n, |x, y| game.payoff(x, y))?;
    Ok(EcReport { interval, eps: 0.0, beta: 0.0, grid_n, stability, cyclicity, minimality })
}

/// Checks the ε-relaxed cycle conditions with payoffs at abandonment rate `beta`.
///
/// Minimality tests sub-intervals of `[a + ε, b − ε]` against the unrelaxed
/// stability and cyclicity conditions.
pub fn verify_eps_ec(
    params: &MarketParams,
    model: &PriceModel,
    interval: (f64, f64),
    eps: f64,
    beta: f64,
    grid_n: usize,
) -> Result<EcReport> {
    check_mixed_regime(params, model)?;
    let p = params.clone().with_beta(beta);
    let game = Game::new(&p, model, QosMetric::Blocking);
    let (stability, cyclicity, minimality) = verify_cycle(model, interval, eps, grid_n, |x, y| game.payoff(x, y))?;
    Ok(EcReport { interval, eps, beta, grid_n, stability, cyclicity, minimality })
}

/// Strategy profile whose ε-equilibrium property is checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Candidate {
    Pure(f64),
    Mixed(MixedStrategy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsReport {
    pub eps: f64,
    /// Payoff of each player at the candidate profile.
    pub candidate_payoff: f64,
    /// Largest deviation gain per player (equal by symmetry of the game).
    pub gains: [f64; 2],
    /// Most profitable deviation found.
    pub best_deviation: f64,
    pub passed: bool,
    /// Bound on the quadrature error against a mixed opponent (0 for pure).
    pub quadrature_bound: f64,
}

/// Largest unilateral deviation gain against a symmetric candidate profile.
///
/// Deviations are searched on a uniform grid of `grid_n` prices plus the
/// candidate, then refined by golden-section around the best grid point.
pub fn verify_eps_ne(
    params: &MarketParams,
    model: &PriceModel,
    metric: QosMetric,
    candidate: &Candidate,
    eps: f64,
    beta: f64,
    alpha: f64,
    grid_n: usize,
) -> Result<EpsReport> {
    let p = params.clone().with_beta(beta).with_alpha(alpha);
    p.validate()?;
    let game = Game::new(&p, model, metric);
    let phi_h = model.phi_h;

    // Mixed opponents: midpoint prices with Lebesgue–Stieltjes weights.
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match candidate {
        Candidate::Pure(phi) => (vec![*phi], vec![1.0]),
        Candidate::Mixed(s) => {
            let t = linspace(s.phi_l, s.phi_r, MIXED_CELLS + 1);
            (0..MIXED_CELLS)
                .map(|k| (0.5 * (t[k] + t[k + 1]), s.cdf_total(t[k + 1]) - s.cdf_total(t[k])))
                .unzip()
        }
    };
    let against = |x: f64| -> Result<f64> {
        let mut total = 0.0;
        for (&y, &w) in nodes.iter().zip(&weights) {
            if w > 0.0 {
                total += w * game.payoff(x, y)?;
            }
        }
        Ok(total)
    };

    let base = {
        let mut total = 0.0;
        for (&x, &w) in nodes.iter().zip(&weights) {
            if w > 0.0 {
                total += w * against(x)?;
            }
        }
        total
    };

    let mut grid = linspace(0.0, phi_h, grid_n.max(2));
    grid.extend(nodes.iter().copied());
    let values: Vec<Result<f64>> = grid.par_iter().map(|&x| against(x)).collect();
    let (mut best_x, mut best_v) = (grid[0], f64::NEG_INFINITY);
    for (&x, v) in grid.iter().zip(values) {
        let v = v?;
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    let h = phi_h / (grid_n.max(2) - 1) as f64;
    let lo = (best_x - h).max(0.0);
    let hi = (best_x + h).min(phi_h);
    let (rx, rv) = golden_max(|x| against(x).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-9);
    if rv > best_v {
        best_x = rx;
        best_v = rv;
    }

    let gain = (best_v - base).max(0.0);
    let quadrature_bound = match candidate {
        Candidate::Pure(_) => 0.0,
        Candidate::Mixed(_) => {
            let spread = nodes
                .iter()
                .map(|&y| game.payoff(best_x, y))
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            weights.iter().cloned().fold(0.0, f64::max) * (spread.1 - spread.0)
        }
    };
    Ok(EpsReport {
        eps,
        candidate_payoff: base,
        gains: [gain, gain],
        best_deviation: best_x,
        passed: gain <= eps,
        quadrature_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityValue {
    pub value: f64,
    pub strategy: f64,
    /// Max-min over a uniform grid of the β = 0 payoff.
    pub grid_value: f64,
    pub grid_strategy: f64,
    pub grid_step: f64,
}

pub fn security_value(params: &MarketParams, model: &PriceModel) -> Result<SecurityValue> {
    let (_, phi_r) = ec_endpoints(params, model)?;
    let mut idp = params.clone();
    idp.beta = 0.0;
    let game = Game::new(&idp, model, QosMetric::Blocking);
    let grid = linspace(0.0, model.phi_h, SECURITY_GRID);
    let (mut grid_value, mut grid_strategy) = (f64::NEG_INFINITY, 0.0);
    for &x in &grid {
        let mut worst = f64::INFINITY;
        for &y in &grid {
            worst = worst.min(game.payoff(x, y)?);
        }
        if worst > grid_value {
            grid_value = worst;
            grid_strategy = x;
        }
    }
    Ok(SecurityValue {
        value: m_value(params, model, phi_r),
        strategy: phi_r,
        grid_value,
        grid_strategy,
        grid_step: grid[1] - grid[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Market {
    Monopoly,
    DuopolyU,
    DuopolyB,
    Cooperative,
}

/// One market structure: price range (equal ends for a pure price) and per-platform payoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub market: Market,
    pub price_low: f64,
    pub price_high: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub price_b_le_monopoly: bool,
    pub monopoly_le_price_u: bool,
    pub payoff_b_le_monopoly: bool,
    pub payoff_u_le_monopoly: bool,
}

impl Dominance {
    pub fn all(&self) -> bool {
        self.price_b_le_monopoly && self.monopoly_le_price_u && self.payoff_b_le_monopoly && self.payoff_u_le_monopoly
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rho: f64,
    pub rows: Vec<RegimeRow>,
    pub dominance: Dominance,
}

impl ComparisonTable {
    pub fn row(&self, market: Market) -> &RegimeRow {
        self.rows.iter().find(|r| r.market == market).expect("every market has a row")
    }
}

/// Prices and payoffs of all four market structures at β = 0.
pub fn compare_regimes(params: &MarketParams, model: &PriceModel) -> Result<ComparisonTable> {
    let mono = monopoly_optimal(params, model)?;
    let u = duopoly_u_ne(params, model)?;
    let (b_low, b_high, b_payoff) = match duopoly_b_equilibrium(params, model, 1e-9)?.equilibrium {
        Equilibrium::PureNE { price, payoff } => (price, price, payoff),
        Equilibrium::MixedNE { strategy } => (strategy.phi_l, strategy.phi_r, strategy.mean_payoff),
        // Prices and payoffs vanish as ρ → 1 and are reported as zero beyond.
        Equilibrium::EpsNE { .. } => (0.0, 0.0, 0.0),
    };
    // The pooled system sees demand Λ and drivers 2e: the monopoly operation at (2Λ, 2e).
    let mut pooled = params.clone();
    pooled.lambda_total *= 2.0;
    pooled.eta *= 2.0;
    let coop = monopoly_optimal(&pooled, model)?;

    let slack = 1e-12;
    let dominance = Dominance {
        price_b_le_monopoly: b_high <= mono.price + slack,
        monopoly_le_price_u: mono.price <= u.price + slack,
        payoff_b_le_monopoly: b_payoff <= mono.payoff + slack,
        payoff_u_le_monopoly: u.payoff <= mono.payoff + slack,
    };
    let row = |market, lo, hi, payoff| RegimeRow { market, price_low: lo, price_high: hi, payoff };
    Ok(ComparisonTable {
        rho: params.rho(),
        rows: vec![
            row(Market::Monopoly, mono.price, mono.price, mono.payoff),
            row(Market::DuopolyU, u.price, u.price, u.payoff),
            row(Market::DuopolyB, b_low, b_high, b_payoff),
            row(Market::Cooperative, coop.price, coop.price, 0.5 * coop.payoff),
        ],
        dominance,
    })
}
