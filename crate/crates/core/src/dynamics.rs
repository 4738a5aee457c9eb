//! Best responses and alternating best-response dynamics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{ec_endpoints, threshold_root, ThresholdKind};
use crate::numeric::{golden_max, linspace};
use crate::queueing::MarketParams;
use crate::sensitivity::PriceModel;
use crate::wardrop::{Game, QosMetric};
use crate::{Error, Result};

pub const BR_GRID: usize = 2000;
const REFINE_TOL: f64 = 1e-9;
/// Relative slack under which two payoffs count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub price: f64,
    pub payoff: f64,
    /// Payoff is zero at every candidate; the price is then 0.
    pub zero_payoff: bool,
    /// At β = 0 a maximizer may not exist and the result is the grid supremum.
    pub supremum: bool,
}

/// Prices where the payoff has kinks, clipped to `[0, φ_h]`.
fn landmarks(params: &MarketParams, model: &PriceModel) -> Vec<f64> {
    let rho = params.rho();
    let mut out = vec![model.inverse(2.0 * rho), model.inverse(rho)];
    for kind in [ThresholdKind::Dm, ThresholdKind::Db] {
        if let Ok(x) = threshold_root(kind, model) {
            out.push(x);
        }
    }
    if let Ok((l, r)) = ec_endpoints(params, model) {
        out.extend([l, r]);
    }
    out.retain(|x| x.is_finite() && *x >= 0.0 && *x <= model.phi_h);
    out
}

/// Replaces `best` when `v` is larger, or tied at a larger price.
fn better(x: f64, v: f64, best: (f64, f64)) -> bool {
    let tie = (v - best.1).abs() <= TIE_TOL * v.abs().max(best.1.abs()).max(1.0);
    if tie {
        x > best.0
    } else {
        v > best.1
    }
}

/// Best response under a game whose β and α are already set.
pub fn best_response_in(game: &Game, phi_opp: f64, grid_n: usize) -> Result<BestResponse> {
    let phi_h = game.model.phi_h;
    let mut cands = linspace(0.0, phi_h, grid_n.max(2));
    cands.push(phi_opp.clamp(0.0, phi_h));
    cands.extend(landmarks(game.params, game.model));
    let values: Vec<Result<f64>> = cands.par_iter().map(|&x| game.payoff(x, phi_opp)).collect();

    let mut best = (0.0, f64::NEG_INFINITY);
    let mut all_zero = true;
    for (&x, v) in cands.iter().zip(values) {
        let v = v?;
        all_zero &= v == 0.0;
        if better(x, v, best) {
            best = (x, v);
        }
    }
    let supremum = game.params.beta == 0.0;
    if all_zero {
        return Ok(BestResponse { price: 0.0, payoff: 0.0, zero_payoff: true, supremum });
    }

    let h = phi_h / (grid_n.max(2) - 1) as f64;
    let (lo, hi) = ((best.0 - h).max(0.0), (best.0 + h).min(phi_h));
    let (rx, rv) = golden_max(|x| game.payoff(x, phi_opp).unwrap_or(f64::NEG_INFINITY), lo, hi, REFINE_TOL);
    if rv > best.1 && !better(best.0, best.1, (rx, rv)) {
        best = (rx, rv);
    }
    Ok(BestResponse { price: best.0, payoff: best.1, zero_payoff: false, supremum })
}

/// Argmax over `[0, φ_h]` of the own payoff against `phi_opp`, WE recomputed per candidate.
pub fn best_response(
    params: &MarketParams,
    model: &PriceModel,
    metric: QosMetric,
    phi_opp: f64,
    beta: f64,
    alpha: f64,
) -> Result<BestResponse> {
    if params.lambda_total == 0.0 {
        // No passengers: every price earns nothing.
        return Ok(BestResponse { price: 0.0, payoff: 0.0, zero_payoff: true, supremum: beta == 0.0 });
    }
    let p = params.clone().with_beta(beta).with_alpha(alpha);
    p.validate()?;
    best_response_in(&Game::new(&p, model, metric), phi_opp, BR_GRID)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BRPoint {
    pub iteration: usize,
    /// Acting platform, 1 or 2.
    pub player: u8,
    pub price: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BRTrajectory {
    pub points: Vec<BRPoint>,
    pub params: MarketParams,
    pub metric: QosMetric,
    pub beta: f64,
    pub alpha: f64,
    pub init: (f64, f64),
}

impl BRTrajectory {
    pub fn prices(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.price).collect()
    }
}

/// Platforms take turns best-responding, platform 1 first.
pub fn alternating_br(
    params: &MarketParams,
    model: &PriceModel,
    metric: QosMetric,
    init: (f64, f64),
    iters: usize,
    beta: f64,
    alpha: f64,
) -> Result<BRTrajectory> {
    if iters < 2 {
        return Err(Error::InvalidParams(format!("iters = {iters}, need at least 2")));
    }
    let p = params.clone().with_beta(beta).with_alpha(alpha);
    p.validate()?;
    let game = Game::new(&p, model, metric);
    let mut prices = [init.0, init.1];
    let mut points = Vec::with_capacity(iters);
    for iteration in 0..iters {
        let me = iteration % 2;
        let br = best_response_in(&game, prices[1 - me], BR_GRID)?;
        prices[me] = br.price;
        points.push(BRPoint { iteration, player: me as u8 + 1, price: br.price, payoff: br.payoff });
    }
    Ok(BRTrajectory { points, params: p, metric, beta, alpha, init })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classification {
    Converged { point: f64 },
    Oscillating { min: f64, max: f64, period: usize },
}

/// Converged if the post-burn-in prices span less than `tol`, else Oscillating.
pub fn classify_trajectory(traj: &BRTrajectory, burn_in: usize, tol: f64) -> Result<Classification> {
    classify_prices(&traj.prices(), burn_in, tol)
}

pub fn classify_prices(prices: &[f64], burn_in: usize, tol: f64) -> Result<Classification> {
    if burn_in >= prices.len() {
        return Err(Error::InsufficientLength { burn_in, len: prices.len() });
    }
    let tail = &prices[burn_in..];
    let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min < tol {
        return Ok(Classification::Converged { point: *tail.last().unwrap() });
    }
    Ok(Classification::Oscillating { min, max, period: period_estimate(tail) })
}

/// Smallest lag whose autocorrelation is within 1% of the best lag's.
fn period_estimate(x: &[f64]) -> usize {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if n < 4 || var == 0.0 {
        return 1;
    }
    let acf: Vec<f64> = (1..=n / 2)
        .map(|lag| (0..n - lag).map(|i| c[i] * c[i + lag]).sum::<f64>() / ((n - lag) as f64 * var))
        .collect();
    let top = acf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    acf.iter().position(|&a| a >= top - 0.01 * top.abs()).unwrap() + 1
}
