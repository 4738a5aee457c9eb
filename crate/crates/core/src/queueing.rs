//! Stationary quantities of one platform.
//!
//! A platform is a two-station network. Waiting drivers `n` are served by
//! accepted passengers (rate `λf(φ)`) or abandon (rate `nβ`); drivers on a ride
//! `r` finish at rate `rν` and rejoin the queue with probability `p`. The chain
//! has the product form `π(n, r) = C·μ_n·(e/ν)^r/r!` with
//! `μ_n = Π_{a=1..n} e/(λf(φ) + aβ)` and `e = η/(1 − p)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::sensitivity::PriceModel;
use crate::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-12;
pub const DEFAULT_N_BAR: usize = 50;

/// Largest number of series terms summed before giving up on certification.
const MAX_TERMS: usize = 50_000_000;

/// Market-wide parameters shared by both platforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Aggregate passenger arrival rate Λ.
    #[serde(rename = "Lambda", alias = "lambda_total")]
    pub lambda_total: f64,
    /// Driver arrival rate η.
    pub eta: f64,
    /// Probability that a driver rejoins the queue after a ride.
    #[serde(default)]
    pub p: f64,
    /// Ride completion rate ν.
    #[serde(default = "one")]
    pub nu: f64,
    /// Abandonment rate β; zero is the infinite-patience limit.
    #[serde(default)]
    pub beta: f64,
    /// No-ride delay parameter α for the pick-up delay metric.
    #[serde(default)]
    pub alpha: f64,
    /// Waiting-driver cutoff N̄ in the pick-up time model.
    #[serde(rename = "N_bar", alias = "n_bar", default = "default_n_bar")]
    pub n_bar: usize,
}

fn one() -> f64 {
    1.0
}

fn default_n_bar() -> usize {
    DEFAULT_N_BAR
}

impl MarketParams {
    pub fn new(lambda_total: f64, eta: f64, p: f64, nu: f64, beta: f64) -> Self {
        Self { lambda_total, eta, p, nu, beta, alpha: 0.0, n_bar: DEFAULT_N_BAR }
    }

    /// Parameters described by Λ and the effective driver rate `e` directly
    /// (`η = e`, `p = 0`, `ν = 1`, `β = 0`).
    pub fn with_rates(lambda_total: f64, e: f64) -> Self {
        Self::new(lambda_total, e, 0.0, 1.0, 0.0)
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_n_bar(mut self, n_bar: usize) -> Self {
        self.n_bar = n_bar;
        self
    }

    /// Effective driver arrival rate `e = η/(1 − p)`.
    pub fn e(&self) -> f64 {
        self.eta / (1.0 - self.p)
    }

    /// Driver-passenger ratio `ρ = e/Λ`.
    pub fn rho(&self) -> f64 {
        self.e() / self.lambda_total
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.lambda_total.is_finite() && self.lambda_total > 0.0) {
            return bad(format!("Lambda must be positive, got {}", self.lambda_total));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1), got {}", self.p));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        if self.n_bar == 0 {
            return bad("N_bar must be at least 1".into());
        }
        Ok(())
    }

    /// Default truncation `ceil(10·max(e/ν, e/(β + 1e−9), 10))`.
    pub fn default_truncation(&self) -> usize {
        let e = self.e();
        (10.0 * (e / self.nu).max(e / (self.beta + 1e-9)).max(10.0)).ceil() as usize
    }
}

/// The normalizing series `Σ_{n≥0} μ_n`, kept in log scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub divergent: bool,
    /// `ln Σ μ_n` (infinite when divergent).
    pub ln_value: f64,
    /// Certified bound on the omitted tail relative to the sum.
    pub rel_tail_bound: f64,
    pub terms_used: usize,
    /// `(Σ_{n=1..N̄} μ_n/n) / Σ μ_n`, used by the pick-up delay metric.
    pub pickup_ratio: f64,
}

impl SeriesResult {
    pub fn value(&self) -> f64 {
        if self.divergent {
            f64::INFINITY
        } else {
            self.ln_value.exp()
        }
    }

    pub fn tail_bound(&self) -> f64 {
        self.rel_tail_bound * self.value()
    }
}

/// Sum `Σ μ_n` for service rate `x = λf` at driver rate `e` and abandonment `β`.
pub fn series_at_rate(e: f64, x: f64, beta: f64, n_bar: usize, rel_tol: f64) -> SeriesResult {
    if beta == 0.0 {
        if x <= e {
            return SeriesResult {
                divergent: true,
                ln_value: f64::INFINITY,
                rel_tail_bound: 0.0,
                terms_used: 0,
                pickup_ratio: 0.0,
            };
        }
        let r = e / x;
        let mut pick = 0.0;
        let mut rn = 1.0;
        for n in 1..=n_bar {
            rn *= r;
            pick += rn / n as f64;
        }
        return SeriesResult {
            divergent: false,
            ln_value: -(1.0 - r).ln(),
            rel_tail_bound: 0.0,
            terms_used: 0,
            pickup_ratio: (1.0 - r) * pick,
        };
    }

    // Terms are kept relative to `exp(ln_scale)` and rescaled before they overflow.
    const BIG: f64 = 1e250;
    let ln_big = BIG.ln();
    let mut ln_scale = 0.0;
    let mut term = 1.0;
    let mut acc = 1.0;
    let mut pick = 0.0;
    let mut n = 0usize;
    let mut rel_tail = f64::INFINITY;
    while n < MAX_TERMS {
        n += 1;
        term *= e / (x + n as f64 * beta);
        if term > BIG {
            term /= BIG;
            acc /= BIG;
            pick /= BIG;
            ln_scale += ln_big;
        }
        acc += term;
        if n <= n_bar {
            pick += term / n as f64;
        }
        let ratio = e / (x + (n + 1) as f64 * beta);
        if ratio < 1.0 {
            let tail = term * ratio / (1.0 - ratio);
            if tail <= rel_tol * acc && n >= n_bar {
                rel_tail = tail / acc;
                break;
            }
        }
    }
    SeriesResult {
        divergent: false,
        ln_value: ln_scale + acc.ln(),
        rel_tail_bound: rel_tail,
        terms_used: n + 1,
        pickup_ratio: pick / acc,
    }
}

/// One platform at arrival rate `λ`, acceptance probability `f` and price `φ`.
#[derive(Debug, Clone, Copy)]
pub struct Platform<'a> {
    pub params: &'a MarketParams,
    pub lambda: f64,
    pub accept: f64,
    pub price: f64,
}

impl<'a> Platform<'a> {
    pub fn priced(params: &'a MarketParams, model: &PriceModel, lambda: f64, phi: f64) -> Self {
        Self { params, lambda, accept: model.f(phi), price: phi }
    }

    pub fn with_acceptance(params: &'a MarketParams, lambda: f64, accept: f64, price: f64) -> Self {
        Self { params, lambda, accept, price }
    }

    /// Matched service rate `λf(φ)`.
    pub fn service_rate(&self) -> f64 {
        self.lambda * self.accept
    }

    pub fn series(&self, rel_tol: f64) -> SeriesResult {
        series_at_rate(
            self.params.e(),
            self.service_rate(),
            self.params.beta,
            self.params.n_bar,
            rel_tol,
        )
    }

    /// Probability that no driver is waiting.
    pub fn unavailability(&self) -> f64 {
        let e = self.params.e();
        let x = self.service_rate();
        if self.params.beta == 0.0 {
            if e < x {
                1.0 - e / x
            } else {
                0.0
            }
        } else {
            (-self.series(DEFAULT_REL_TOL).ln_value).exp()
        }
    }

    /// Fraction of passengers that are blocked, `𝒰f + 1 − f`.
    pub fn blocking(&self) -> f64 {
        let f = self.accept;
        self.unavailability() * f + (1.0 - f)
    }

    /// Scaled expected pick-up delay `α E[W]`.
    pub fn pickup_delay(&self) -> f64 {
        let alpha = self.params.alpha;
        let f = self.accept;
        if self.params.beta == 0.0 {
            let e = self.params.e();
            let x = self.service_rate();
            if e < x {
                let r = e / x;
                let mut s = 0.0;
                let mut rn = 1.0;
                for n in 1..=self.params.n_bar {
                    rn *= r;
                    s += rn / n as f64;
                }
                1.0 - f + f * (1.0 - r) * (1.0 + alpha * s)
            } else {
                1.0 - f
            }
        } else {
            let s = self.series(DEFAULT_REL_TOL);
            let u = (-s.ln_value).exp();
            u * f + (1.0 - f) + alpha * f * s.pickup_ratio
        }
    }

    /// Long-run matching revenue per unit time.
    pub fn revenue_rate(&self) -> f64 {
        let x = self.service_rate();
        if x == 0.0 {
            return 0.0;
        }
        if self.params.beta == 0.0 {
            let e = self.params.e();
            if e < x {
                e * self.price
            } else {
                x * self.price
            }
        } else {
            x * self.price * (1.0 - self.unavailability())
        }
    }

    /// Product-form `π(n, r)` on `[0, n_max] × [0, r_max]`.
    pub fn joint_stationary(&self, n_max: usize, r_max: usize) -> Result<StationaryGrid> {
        let params = self.params;
        if params.beta <= 0.0 {
            return Err(Error::Regime("joint_stationary needs beta > 0".into()));
        }
        let e = params.e();
        let x = self.service_rate();
        let series = self.series(DEFAULT_REL_TOL);

        let mut ln_mu = vec![0.0; n_max + 1];
        for n in 1..=n_max {
            ln_mu[n] = ln_mu[n - 1] + e.ln() - (x + n as f64 * params.beta).ln();
        }
        let c = e / params.nu;
        let mut poisson = vec![0.0; r_max + 1];
        poisson[0] = (-c).exp();
        for r in 1..=r_max {
            poisson[r] = poisson[r - 1] * c / r as f64;
        }
        let probs_n: Vec<f64> = ln_mu.iter().map(|l| (l - series.ln_value).exp()).collect();

        let ratio_n = e / (x + (n_max + 1) as f64 * params.beta);
        let tail_n = if ratio_n < 1.0 {
            probs_n[n_max] * ratio_n / (1.0 - ratio_n)
        } else {
            (1.0 - probs_n.iter().sum::<f64>()).max(0.0)
        };
        let ratio_r = c / (r_max + 1) as f64;
        let tail_r = if ratio_r < 1.0 {
            poisson[r_max] * ratio_r / (1.0 - ratio_r)
        } else {
            (1.0 - poisson.iter().sum::<f64>()).max(0.0)
        };
        let omitted = tail_n + tail_r + series.rel_tail_bound;
        let limit = 1e-10;
        if omitted > limit {
            return Err(Error::TruncationTooSmall { omitted, limit });
        }

        let mut probs = Vec::with_capacity((n_max + 1) * (r_max + 1));
        for pn in &probs_n {
            for pr in &poisson {
                probs.push(pn * pr);
            }
        }
        Ok(StationaryGrid { n_max, r_max, probs, omitted_mass: omitted })
    }

    /// Stationary vector of the truncated generator, solved directly.
    pub fn ctmc_oracle(&self, n_max: usize, r_max: usize) -> Result<StationaryGrid> {
        if self.params.beta <= 0.0 {
            return Err(Error::Regime("ctmc_oracle needs beta > 0".into()));
        }
        let q = truncated_generator(self.params, self.service_rate(), n_max, r_max);
        let size = q.nrows();
        let mut a = q.transpose();
        for j in 0..size {
            a[(size - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(size);
        b[size - 1] = 1.0;
        let sol = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular("truncated generator".into()))?;
        Ok(StationaryGrid { n_max, r_max, probs: sol.iter().copied().collect(), omitted_mass: 0.0 })
    }
}

/// Generator of the chain on `[0, n_max] × [0, r_max]`, state `(n, r)` at
/// index `n·(r_max + 1) + r`. Transitions leaving the box are dropped.
pub fn truncated_generator(params: &MarketParams, service_rate: f64, n_max: usize, r_max: usize) -> DMatrix<f64> {
    let cols = r_max + 1;
    let size = (n_max + 1) * cols;
    let idx = |n: usize, r: usize| n * cols + r;
    let mut q = DMatrix::zeros(size, size);
    for n in 0..=n_max {
        for r in 0..=r_max {
            let from = idx(n, r);
            let mut moves: Vec<(usize, f64)> = Vec::with_capacity(4);
            if n < n_max {
                moves.push((idx(n + 1, r), params.eta));
            }
            if n > 0 && r < r_max {
                moves.push((idx(n - 1, r + 1), service_rate + n as f64 * params.beta));
            }
            if r > 0 {
                let done = r as f64 * params.nu;
                if n < n_max {
                    moves.push((idx(n + 1, r - 1), done * params.p));
                }
                moves.push((idx(n, r - 1), done * (1.0 - params.p)));
            }
            let mut out = 0.0;
            for (to, rate) in moves {
                q[(from, to)] += rate;
                out += rate;
            }
            q[(from, from)] = -out;
        }
    }
    q
}

/// Stationary probabilities on a rectangular truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryGrid {
    pub n_max: usize,
    pub r_max: usize,
    /// Row-major, `probs[n·(r_max + 1) + r]`.
    pub probs: Vec<f64>,
    /// Certified bound on the probability outside the box.
    pub omitted_mass: f64,
}

impl StationaryGrid {
    pub fn get(&self, n: usize, r: usize) -> f64 {
        self.probs[n * (self.r_max + 1) + r]
    }

    pub fn marginal_n(&self) -> Vec<f64> {
        self.probs.chunks(self.r_max + 1).map(|row| row.iter().sum()).collect()
    }

    pub fn marginal_r(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.r_max + 1];
        for row in self.probs.chunks(self.r_max + 1) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &StationaryGrid) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn mu_series(params: &MarketParams, model: &PriceModel, lambda: f64, phi: f64, rel_tol: f64) -> SeriesResult {
    Platform::priced(params, model, lambda, phi).series(rel_tol)
}

pub fn unavailability(params: &MarketParams, model: &PriceModel, lambda: f64, phi: f64) -> f64 {
    Platform::priced(params, model, lambda, phi).unavailability()
}

pub fn blocking(params: &MarketParams, model: &PriceModel, lambda: f64, phi: f64) -> f64 {
    Platform::priced(params, model, lambda, phi).blocking()
}

pub fn pickup_delay_qos(params: &MarketParams, model: &PriceModel, lambda: f64, phi: f64) -> f64 {
    Platform::priced(params, model, lambda, phi).pickup_delay()
}

pub fn revenue_rate(params: &MarketParams, model: &PriceModel, lambda: f64, phi: f64) -> f64 {
    Platform::priced(params, model, lambda, phi).revenue_rate()
}

pub fn joint_stationary(
    params: &MarketParams,
    model: &PriceModel,
    lambda: f64,
    phi: f64,
    n_max: usize,
    r_max: usize,
) -> Result<StationaryGrid> {
    Platform::priced(params, model, lambda, phi).joint_stationary(n_max, r_max)
}

pub fn ctmc_oracle(
    params: &MarketParams,
    model: &PriceModel,
    lambda: f64,
    phi: f64,
    n_max: usize,
    r_max: usize,
) -> Result<StationaryGrid> {
    Platform::priced(params, model, lambda, phi).ctmc_oracle(n_max, r_max)
}
