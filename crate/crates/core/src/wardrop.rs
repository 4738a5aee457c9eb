//! Wardrop equilibrium splits of the passenger stream between two platforms.
//!
//! Passengers join the platform with the better quality of service until the
//! two QoS values balance, or everybody joins one platform if they never do.

use serde::{Deserialize, Serialize};

use crate::queueing::{MarketParams, Platform};
use crate::sensitivity::PriceModel;
use crate::{Error, Result};

pub const DEFAULT_WE_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;
/// Slack allowed before a non-monotone QoS gap is reported.
const MONOTONE_SLACK: f64 = 1e-12;

/// Quality-of-service metric passengers equalize across platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QosMetric {
    /// Probability that no driver is waiting.
    Unavailability,
    /// Probability that a passenger is not served (no driver or price rejected).
    Blocking,
    /// Scaled expected pick-up delay.
    Delay,
}

impl QosMetric {
    pub fn eval(self, platform: &Platform) -> f64 {
        match self {
            QosMetric::Unavailability => platform.unavailability(),
            QosMetric::Blocking => platform.blocking(),
            QosMetric::Delay => platform.pickup_delay(),
        }
    }
}

/// Passenger rates `(λ₁, λ₂)` with `λ₁ + λ₂ = Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WardropSplit {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `|Q₁(λ₁) − Q₂(λ₂)|` at the returned split.
    pub gap: f64,
    /// True when one platform receives every passenger.
    pub boundary: bool,
}

impl WardropSplit {
    fn swapped(self) -> Self {
        Self { lambda1: self.lambda2, lambda2: self.lambda1, ..self }
    }
}

/// Split `Λ` into two rates that add back to `Λ` exactly in floating point.
pub fn exact_split(total: f64, lambda1: f64) -> (f64, f64) {
    let l1 = lambda1.clamp(0.0, total);
    if l1 >= 0.5 * total {
        (l1, total - l1)
    } else {
        let l2 = total - l1;
        (total - l2, l2)
    }
}

/// Prices delimiting the infinite-patience bands: `f⁻¹(2ρ)` and `f⁻¹(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub inv_two_rho: f64,
    pub inv_rho: f64,
}

impl Bands {
    pub fn new(params: &MarketParams, model: &PriceModel) -> Self {
        let rho = params.rho();
        Self { inv_two_rho: model.inverse(2.0 * rho), inv_rho: model.inverse(rho) }
    }
}

/// The pricing game between two symmetric platforms under one QoS metric.
#[derive(Debug, Clone)]
pub struct Game<'a> {
    pub params: &'a MarketParams,
    pub model: &'a PriceModel,
    pub metric: QosMetric,
    pub bands: Bands,
    idp: MarketParams,
}

impl<'a> Game<'a> {
    pub fn new(params: &'a MarketParams, model: &'a PriceModel, metric: QosMetric) -> Self {
        let mut idp = params.clone();
        idp.beta = 0.0;
        Self { params, model, metric, bands: Bands::new(params, model), idp }
    }

    fn platform(&self, lambda: f64, phi: f64) -> Platform<'_> {
        Platform::priced(self.params, self.model, lambda, phi)
    }

    fn idp_platform(&self, lambda: f64, phi: f64) -> Platform<'_> {
        Platform::priced(&self.idp, self.model, lambda, phi)
    }

    /// Split at the current β: bisection for β > 0, closed forms at β = 0.
    pub fn split(&self, phi1: f64, phi2: f64) -> Result<WardropSplit> {
        if self.params.beta > 0.0 {
            self.solve_we(phi1, phi2, DEFAULT_WE_TOL)
        } else {
            Ok(self.we_idp(phi1, phi2))
        }
    }

    /// Revenue rates of both platforms at the split.
    pub fn payoffs(&self, phi1: f64, phi2: f64) -> Result<(f64, f64)> {
        let s = self.split(phi1, phi2)?;
        Ok((
            self.platform(s.lambda1, phi1).revenue_rate(),
            self.platform(s.lambda2, phi2).revenue_rate(),
        ))
    }

    /// Revenue of a platform pricing at `own` against an opponent at `opp`.
    pub fn payoff(&self, own: f64, opp: f64) -> Result<f64> {
        Ok(self.payoffs(own, opp)?.0)
    }

    /// Bisection on `g(λ) = Q₁(λ) − Q₂(Λ − λ)`; needs β > 0.
    pub fn solve_we(&self, phi1: f64, phi2: f64, tol: f64) -> Result<WardropSplit> {
        if self.params.beta <= 0.0 {
            return Err(Error::Regime("solve_we needs beta > 0; use we_idp".into()));
        }
        let total = self.params.lambda_total;
        if phi1 == phi2 {
            let half = 0.5 * total;
            return Ok(WardropSplit { lambda1: half, lambda2: total - half, gap: 0.0, boundary: false });
        }
        if phi1 < phi2 {
            return Ok(self.solve_we(phi2, phi1, tol)?.swapped());
        }
        let g = |l1: f64| {
            let (a, b) = exact_split(total, l1);
            self.metric.eval(&self.platform(a, phi1)) - self.metric.eval(&self.platform(b, phi2))
        };
        let g0 = g(0.0);
        if g0 >= 0.0 {
            return Ok(WardropSplit { lambda1: 0.0, lambda2: total, gap: g0.abs(), boundary: true });
        }
        let g1 = g(total);
        if g1 <= 0.0 {
            return Ok(WardropSplit { lambda1: total, lambda2: 0.0, gap: g1.abs(), boundary: true });
        }
        let (mut lo, mut hi, mut g_lo, mut g_hi) = (0.0, total, g0, g1);
        let mut best = (0.5 * total, f64::INFINITY);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let g_mid = g(mid);
            if g_mid < g_lo - MONOTONE_SLACK || g_mid > g_hi + MONOTONE_SLACK {
                return Err(Error::MonotonicityViolation { lo, hi, g_lo, g_hi });
            }
            if g_mid.abs() < best.1 {
                best = (mid, g_mid.abs());
            }
            if g_mid == 0.0 || ((hi - lo) <= tol && g_mid.abs() <= tol) || mid == lo || mid == hi {
                break;
            }
            if g_mid < 0.0 {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
                g_hi = g_mid;
            }
        }
        let (l1, l2) = exact_split(total, best.0);
        Ok(WardropSplit { lambda1: l1, lambda2: l2, gap: best.1, boundary: false })
    }

    /// Closed-form split in the infinite-patience limit (β treated as 0).
    pub fn we_idp(&self, phi1: f64, phi2: f64) -> WardropSplit {
        let total = self.params.lambda_total;
        let (f1, f2) = (self.model.f(phi1), self.model.f(phi2));
        let lambda1 = match self.metric {
            _ if phi1 == phi2 => 0.5 * total,
            _ if phi1 < phi2 => return self.we_idp(phi2, phi1).swapped(),
            QosMetric::Unavailability => total * f2 / (f1 + f2),
            QosMetric::Blocking => self.blocking_high(phi1),
            QosMetric::Delay if self.params.alpha == 0.0 => self.blocking_high(phi1),
            QosMetric::Delay => self.delay_high(phi1, phi2),
        };
        let (l1, l2) = exact_split(total, lambda1);
        let q1 = self.metric.eval(&self.idp_platform(l1, phi1));
        let q2 = self.metric.eval(&self.idp_platform(l2, phi2));
        WardropSplit {
            lambda1: l1,
            lambda2: l2,
            gap: (q1 - q2).abs(),
            boundary: l1 == 0.0 || l2 == 0.0,
        }
    }

    /// Rate of the higher-priced platform under blocking.
    fn blocking_high(&self, phi_high: f64) -> f64 {
        let total = self.params.lambda_total;
        if phi_high < self.bands.inv_two_rho {
            0.5 * total
        } else if phi_high < self.bands.inv_rho {
            total - self.params.e() / self.model.f(phi_high)
        } else {
            0.0
        }
    }

    /// Rate of the higher-priced platform under the pick-up delay metric.
    fn delay_high(&self, phi_high: f64, phi_low: f64) -> f64 {
        let lt = self.lambda_tilde(phi_high, phi_low);
        if phi_high < self.bands.inv_rho {
            return lt;
        }
        let (f_high, f_low) = (self.model.f(phi_high), self.model.f(phi_low));
        match alpha_bar_for(self.params, f_high, f_low) {
            Ok(bar) if self.params.alpha > bar => lt,
            _ => 0.0,
        }
    }

    /// Minimizer of the squared delay gap over `λ ∈ [0, Λ]` for the high-price platform.
    ///
    /// The gap is non-decreasing in λ, so on flat stretches the search moves
    /// toward the sign change.
    pub fn lambda_tilde(&self, phi_high: f64, phi_low: f64) -> f64 {
        let total = self.params.lambda_total;
        let g = |l: f64| {
            let (a, b) = exact_split(total, l);
            self.idp_platform(a, phi_high).pickup_delay() - self.idp_platform(b, phi_low).pickup_delay()
        };
        let keep_left = |g1: f64, g2: f64| {
            let (h1, h2) = (g1 * g1, g2 * g2);
            h1 < h2 || (h1 == h2 && g1 > 0.0)
        };
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let (mut a, mut b) = (0.0, total);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let (mut g1, mut g2) = (g(x1), g(x2));
        let mut iters = 0;
        while b - a > 1e-10 && iters < 500 {
            if keep_left(g1, g2) {
                b = x2;
                x2 = x1;
                g2 = g1;
                x1 = b - INV_PHI * (b - a);
                g1 = g(x1);
            } else {
                a = x1;
                x1 = x2;
                g1 = g2;
                x2 = a + INV_PHI * (b - a);
                g2 = g(x2);
            }
            iters += 1;
        }
        let mut best = (x1, g1);
        for cand in [(x2, g2), (a, g(a)), (b, g(b))] {
            if keep_left(cand.1, best.1) {
                best = cand;
            }
        }
        best.0
    }
}

/// Threshold `ᾱ` from the acceptance probabilities `f(φ₁)`, `f(φ₂)`.
pub fn alpha_bar_for(params: &MarketParams, f1: f64, f2: f64) -> Result<f64> {
    let rho = params.rho();
    let e = params.e();
    let den_factor = rho - f2;
    if den_factor == 0.0 {
        return Err(Error::DivisionByZero("f(phi2) equals rho in alpha_bar".into()));
    }
    let u = e / (params.lambda_total * f2);
    let mut s = 0.0;
    let mut un = 1.0;
    for n in 1..=params.n_bar {
        un *= u;
        s += un / n as f64;
    }
    Ok((rho - f1) / (den_factor * s))
}

pub fn alpha_bar(params: &MarketParams, model: &PriceModel, phi1: f64, phi2: f64) -> Result<f64> {
    alpha_bar_for(params, model.f(phi1), model.f(phi2))
}

pub fn solve_we(
    params: &MarketParams,
    model: &PriceModel,
    metric: QosMetric,
    phi1: f64,
    phi2: f64,
    tol: f64,
) -> Result<WardropSplit> {
    Game::new(params, model, metric).solve_we(phi1, phi2, tol)
}

pub fn we_idp(params: &MarketParams, model: &PriceModel, metric: QosMetric, phi1: f64, phi2: f64) -> WardropSplit {
    Game::new(params, model, metric).we_idp(phi1, phi2)
}

pub fn payoffs_at_we(
    params: &MarketParams,
    model: &PriceModel,
    metric: QosMetric,
    phi1: f64,
    phi2: f64,
) -> Result<(f64, f64)> {
    Game::new(params, model, metric).payoffs(phi1, phi2)
}
