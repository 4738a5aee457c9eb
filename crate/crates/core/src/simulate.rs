//! Event-driven simulation of the driver queue of one platform, a coupled
//! pair of platforms that differ only in passenger rate, and a duopoly whose
//! passenger stream is split by the Wardrop equilibrium.
//!
//! Random streams: every run seeds `ChaCha8Rng` from the 64-bit seed. A
//! single-platform run uses stream 0, duopoly platform `i` uses stream `i`,
//! and a coupled run draws every shared clock and coin from stream 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::queueing::{MarketParams, Platform};
use crate::sensitivity::PriceModel;
use crate::wardrop::{Game, QosMetric, WardropSplit};
use crate::{Error, Result};

pub const DEFAULT_BATCHES: usize = 32;
pub const DEFAULT_WARMUP: f64 = 0.1;
/// Waiting-driver count beyond which a run is declared non-stationary.
pub const DEFAULT_TRANSIENT_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Horizon {
    /// Number of events, warm-up included.
    Events(u64),
    /// Simulated time, warm-up included.
    Time(f64),
}

impl Horizon {
    fn validate(self) -> Result<()> {
        let ok = match self {
            Horizon::Events(n) => n > 0,
            Horizon::Time(t) => t.is_finite() && t > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("horizon must be positive, got {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub batches: usize,
    /// Fraction of the horizon discarded before measuring.
    pub warmup_fraction: f64,
    /// Spacing of the state snapshots used for goodness-of-fit tests;
    /// defaults to `2/ν`.
    pub snapshot_interval: Option<f64>,
    pub transient_cap: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            batches: DEFAULT_BATCHES,
            warmup_fraction: DEFAULT_WARMUP,
            snapshot_interval: None,
            transient_cap: DEFAULT_TRANSIENT_CAP,
        }
    }
}

/// Point estimate with a 95% batch-means half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl Estimate {
    /// True when `target` lies within `k` half-widths of the estimate.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.half_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimates {
    pub lambda: f64,
    pub phi: f64,
    pub seed: u64,
    /// Fraction of passenger arrivals that find no waiting driver.
    pub u_hat: Estimate,
    /// Fraction of time with no waiting driver.
    pub u_time_hat: Estimate,
    /// Fraction of passengers not served.
    pub b_hat: Estimate,
    /// Per-arrival delay cost: 1 if not served, else `α/n` for `n ≤ N̄` waiting drivers.
    pub d_hat: Estimate,
    pub revenue_rate_hat: Estimate,
    /// Time-weighted distribution of the waiting-driver count after warm-up.
    pub n_marginal: Vec<f64>,
    /// Waiting-driver counts at equally spaced snapshot times after warm-up.
    pub n_snapshots: Vec<u64>,
    pub events: u64,
    pub arrivals: u64,
    /// Total simulated time.
    pub horizon: f64,
    /// Simulated time after warm-up.
    pub measured_time: f64,
    /// The queue exceeded the transient cap and the run stopped early.
    pub transient: bool,
}

#[derive(Debug, Clone, Default)]
struct BatchAcc {
    time: f64,
    time_empty: f64,
    arrivals: u64,
    arrivals_empty: u64,
    blocked: u64,
    delay: f64,
    revenue: f64,
}

fn student_quantile(batches: usize) -> f64 {
    let dof = (batches.max(2) - 1) as f64;
    StudentsT::new(0.0, 1.0, dof).expect("positive dof").inverse_cdf(0.975)
}

/// Ratio estimate `Σ num / Σ den` with half-width from per-batch ratios.
fn ratio_estimate(parts: &[(f64, f64)], t: f64) -> Option<Estimate> {
    let den: f64 = parts.iter().map(|p| p.1).sum();
    if den <= 0.0 {
        return None;
    }
    let value = parts.iter().map(|p| p.0).sum::<f64>() / den;
    let ratios: Vec<f64> = parts.iter().filter(|p| p.1 > 0.0).map(|p| p.0 / p.1).collect();
    let k = ratios.len();
    if k < 2 {
        return Some(Estimate { value, half_width: f64::INFINITY });
    }
    let mean = ratios.iter().sum::<f64>() / k as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    Some(Estimate { value, half_width: t * (var / k as f64).sqrt() })
}

fn exp_time(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

fn check_rates(params: &MarketParams, lambda: f64, accept: f64) -> Result<()> {
    let finite = [params.eta, params.nu, params.beta, params.p, lambda, accept].iter().all(|v| v.is_finite());
    if !finite || lambda < 0.0 || params.eta < 0.0 || params.nu <= 0.0 || params.beta < 0.0 {
        return Err(Error::InvalidParams("simulation rates must be finite and non-negative, with nu > 0".into()));
    }
    if !(0.0..1.0).contains(&params.p) || !(0.0..=1.0).contains(&accept) {
        return Err(Error::InvalidParams("need 0 <= p < 1 and 0 <= f <= 1".into()));
    }
    Ok(())
}

/// Simulates one platform with the default options.
pub fn simulate_platform(
    params: &MarketParams,
    model: &PriceModel,
    lambda: f64,
    phi: f64,
    horizon: Horizon,
    seed: u64,
) -> Result<SimEstimates> {
    let accept = model.eval_f(phi)?;
    simulate_with(params, lambda, accept, phi, horizon, seed, 0, &SimOptions::default())
}

/// Simulates one platform with acceptance probability `accept`, drawing from `stream`.
pub fn simulate_with(
    params: &MarketParams,
    lambda: f64,
    accept: f64,
    phi: f64,
    horizon: Horizon,
    seed: u64,
    stream: u64,
    opts: &SimOptions,
) -> Result<SimEstimates> {
    check_rates(params, lambda, accept)?;
    horizon.validate()?;
    if opts.batches < 2 || !(0.0..1.0).contains(&opts.warmup_fraction) {
        return Err(Error::InvalidParams("need at least 2 batches and warm-up fraction in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let (warm_events, warm_time) = match horizon {
        Horizon::Events(n) => ((n as f64 * opts.warmup_fraction) as u64, f64::INFINITY),
        Horizon::Time(t) => (u64::MAX, t * opts.warmup_fraction),
    };
    let batch_of = |events: u64, t: f64| -> usize {
        let frac = match horizon {
            Horizon::Events(n) => (events - warm_events) as f64 / (n - warm_events) as f64,
            Horizon::Time(h) => (t - warm_time) / (h - warm_time),
        };
        ((frac * opts.batches as f64) as usize).min(opts.batches - 1)
    };
    let snap_dt = opts.snapshot_interval.unwrap_or(2.0 / params.nu);

    let (eta, beta, nu, p) = (params.eta, params.beta, params.nu, params.p);
    let (alpha, n_bar) = (params.alpha, params.n_bar);
    let mut n: usize = 0;
    let mut r: usize = 0;
    let mut t = 0.0;
    let mut events: u64 = 0;
    let mut measuring = false;
    let mut measure_start = 0.0;
    let mut next_snap = 0.0;
    let mut batches = vec![BatchAcc::default(); opts.batches];
    let mut hist: Vec<f64> = Vec::new();
    let mut snaps: Vec<u64> = Vec::new();
    let mut arrivals: u64 = 0;
    let mut transient = false;

    loop {
        if !measuring {
            let started = match horizon {
                Horizon::Events(_) => events >= warm_events,
                Horizon::Time(_) => t >= warm_time,
            };
            if started {
                measuring = true;
                measure_start = t;
                next_snap = t;
            }
        }
        let rate = lambda + eta + n as f64 * beta + r as f64 * nu;
        if rate == 0.0 {
            break;
        }
        let mut dt = exp_time(&mut rng, rate);
        let mut last = false;
        if let Horizon::Time(h) = horizon {
            if t + dt >= h {
                dt = h - t;
                last = true;
            }
        }
        let b = if measuring { Some(batch_of(events, t)) } else { None };
        if let Some(b) = b {
            let acc = &mut batches[b];
            acc.time += dt;
            if n == 0 {
                acc.time_empty += dt;
            }
            if hist.len() <= n {
                hist.resize(n + 1, 0.0);
            }
            hist[n] += dt;
            while next_snap < t + dt {
                if snaps.len() <= n {
                    snaps.resize(n + 1, 0);
                }
                snaps[n] += 1;
                next_snap += snap_dt;
            }
        }
        t += dt;
        if last {
            break;
        }

        let u = rng.gen::<f64>() * rate;
        if u < lambda {
            let accepted = rng.gen::<f64>() < accept;
            let served = accepted && n > 0;
            if let Some(b) = b {
                let acc = &mut batches[b];
                arrivals += 1;
                acc.arrivals += 1;
                if n == 0 {
                    acc.arrivals_empty += 1;
                }
                if served {
                    acc.revenue += phi;
                    if n <= n_bar {
                        acc.delay += alpha / n as f64;
                    }
                } else {
                    acc.blocked += 1;
                    acc.delay += 1.0;
                }
            }
            if served {
                n -= 1;
                r += 1;
            }
        } else if u < lambda + eta {
            n += 1;
        } else if u < lambda + eta + n as f64 * beta {
            // An impatient driver leaves for an off-platform ride.
            n -= 1;
            r += 1;
        } else {
            r -= 1;
            if rng.gen::<f64>() < p {
                n += 1;
            }
        }
        events += 1;
        if n > opts.transient_cap {
            transient = true;
            break;
        }
        if let Horizon::Events(h) = horizon {
            if events >= h {
                break;
            }
        }
    }

    let tq = student_quantile(opts.batches);
    let time_parts: Vec<(f64, f64)> = batches.iter().map(|b| (b.time_empty, b.time)).collect();
    let zero = Estimate { value: 0.0, half_width: 0.0 };
    let u_time_hat = ratio_estimate(&time_parts, tq).unwrap_or(zero);
    let per_arrival = |g: fn(&BatchAcc) -> f64| {
        let parts: Vec<(f64, f64)> = batches.iter().map(|b| (g(b), b.arrivals as f64)).collect();
        ratio_estimate(&parts, tq)
    };
    // Without arrivals the arrival-seen fraction falls back to the time average.
    let u_hat = per_arrival(|b| b.arrivals_empty as f64).unwrap_or(u_time_hat);
    let b_hat = per_arrival(|b| b.blocked as f64).unwrap_or(zero);
    let d_hat = per_arrival(|b| b.delay).unwrap_or(zero);
    let rev_parts: Vec<(f64, f64)> = batches.iter().map(|b| (b.revenue, b.time)).collect();
    let revenue_rate_hat = ratio_estimate(&rev_parts, tq).unwrap_or(zero);

    let measured_time = if measuring { t - measure_start } else { 0.0 };
    if measured_time > 0.0 {
        hist.iter_mut().for_each(|h| *h /= measured_time);
    }
    Ok(SimEstimates {
        lambda,
        phi,
        seed,
        u_hat,
        u_time_hat,
        b_hat,
        d_hat,
        revenue_rate_hat,
        n_marginal: hist,
        n_snapshots: snaps,
        events,
        arrivals,
        horizon: t,
        measured_time,
        transient,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of `observed` counts against `probs`.
///
/// Adjacent cells are merged left to right until each expects at least 5
/// counts; the remaining mass, including `1 − Σ probs`, forms the last cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParams("no observations".into()));
    }
    let len = observed.len().max(probs.len());
    let obs = |i: usize| observed.get(i).copied().unwrap_or(0) as f64;
    let prob = |i: usize| probs.get(i).copied().unwrap_or(0.0);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    let mut used_p = 0.0;
    for i in 0..len {
        o += obs(i);
        e += prob(i) * total as f64;
        used_p += prob(i);
        let remaining = (1.0 - used_p).max(0.0) * total as f64;
        if e >= 5.0 && remaining >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    e += (1.0 - used_p).max(0.0) * total as f64;
    cells.push((o, e));
    if cells.len() < 2 {
        return Err(Error::InvalidParams("fewer than two cells after merging".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p_value = ChiSquared::new(dof as f64).expect("positive dof").sf(statistic);
    Ok(ChiSquareResult { statistic, dof, p_value })
}

/// Dominance check of two systems driven by shared randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub seed: u64,
    pub events: u64,
    /// Epochs with `n_hi > n_lo`.
    pub n_violations: u64,
    /// Epochs with `n_hi + r_hi > n_lo + r_lo`.
    pub z_violations: u64,
    /// Epochs where the two states differ at all.
    pub differing_epochs: u64,
    pub final_hi: (usize, usize),
    pub final_lo: (usize, usize),
}

impl CouplingReport {
    pub fn violations(&self) -> u64 {
        self.n_violations + self.z_violations
    }
}

/// Runs two systems at passenger rates `lambda_lo ≤ lambda_hi` on shared clocks.
///
/// The high-rate system sees every passenger; the low-rate system keeps each
/// with probability `lambda_lo / lambda_hi`. Driver arrivals, acceptance coins
/// and rejoin coins are shared. Impatience and ride clocks run for
/// `max(n_hi, n_lo)` and `max(r_hi, r_lo)` drivers, and clock `k` belongs to
/// every system that has more than `k` drivers in that state.
pub fn simulate_coupled(
    params: &MarketParams,
    model: &PriceModel,
    lambda_lo: f64,
    lambda_hi: f64,
    phi: f64,
    horizon: Horizon,
    seed: u64,
) -> Result<CouplingReport> {
    let accept = model.eval_f(phi)?;
    check_rates(params, lambda_hi, accept)?;
    horizon.validate()?;
    if params.beta <= 0.0 {
        return Err(Error::Regime("simulate_coupled needs beta > 0".into()));
    }
    if !(0.0 <= lambda_lo && lambda_lo <= lambda_hi) {
        return Err(Error::InvalidParams(format!("need 0 <= lambda_lo <= lambda_hi, got {lambda_lo}, {lambda_hi}")));
    }
    let keep = if lambda_hi > 0.0 { lambda_lo / lambda_hi } else { 0.0 };
    let (eta, beta, nu, p) = (params.eta, params.beta, params.nu, params.p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hi, mut lo) = ((0usize, 0usize), (0usize, 0usize));
    let (mut t, mut events) = (0.0, 0u64);
    let mut report = CouplingReport {
        lambda_lo,
        lambda_hi,
        seed,
        events: 0,
        n_violations: 0,
        z_violations: 0,
        differing_epochs: 0,
        final_hi: hi,
        final_lo: lo,
    };
    loop {
        let n_max = hi.0.max(lo.0);
        let r_max = hi.1.max(lo.1);
        let rate = lambda_hi + eta + n_max as f64 * beta + r_max as f64 * nu;
        if rate == 0.0 {
            break;
        }
        t += exp_time(&mut rng, rate);
        if let Horizon::Time(h) = horizon {
            if t >= h {
                break;
            }
        }
        let u = rng.gen::<f64>() * rate;
        if u < lambda_hi {
            let accepted = rng.gen::<f64>() < accept;
            let in_lo = rng.gen::<f64>() < keep;
            if accepted {
                if hi.0 > 0 {
                    hi = (hi.0 - 1, hi.1 + 1);
                }
                if in_lo && lo.0 > 0 {
                    lo = (lo.0 - 1, lo.1 + 1);
                }
            }
        } else if u < lambda_hi + eta {
            hi.0 += 1;
            lo.0 += 1;
        } else if u < lambda_hi + eta + n_max as f64 * beta {
            let k = rng.gen_range(0..n_max);
            if k < hi.0 {
                hi = (hi.0 - 1, hi.1 + 1);
            }
            if k < lo.0 {
                lo = (lo.0 - 1, lo.1 + 1);
            }
        } else {
            let k = rng.gen_range(0..r_max);
            let rejoin = rng.gen::<f64>() < p;
            for s in [&mut hi, &mut lo] {
                if k < s.1 {
                    s.1 -= 1;
                    if rejoin {
                        s.0 += 1;
                    }
                }
            }
        }
        events += 1;
        if hi.0 > lo.0 {
            report.n_violations += 1;
        }
        if hi.0 + hi.1 > lo.0 + lo.1 {
            report.z_violations += 1;
        }
        if hi != lo {
            report.differing_epochs += 1;
        }
        if let Horizon::Events(h) = horizon {
            if events >= h {
                break;
            }
        }
    }
    report.events = events;
    report.final_hi = hi;
    report.final_lo = lo;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuopolySim {
    pub metric: QosMetric,
    pub prices: (f64, f64),
    pub split: WardropSplit,
    pub analytic_qos: (f64, f64),
    pub analytic_payoffs: (f64, f64),
    pub platforms: (SimEstimates, SimEstimates),
    pub qos: (Estimate, Estimate),
    /// `Q₁ − Q₂` with the half-widths combined in quadrature.
    pub qos_gap: Estimate,
}

fn qos_estimate(metric: QosMetric, s: &SimEstimates) -> Estimate {
    match metric {
        QosMetric::Unavailability => s.u_hat,
        QosMetric::Blocking => s.b_hat,
        QosMetric::Delay => s.d_hat,
    }
}

/// Splits `Λ` by the Wardrop equilibrium at `(φ₁, φ₂)` and simulates each platform.
pub fn simulate_duopoly(
    params: &MarketParams,
    model: &PriceModel,
    phi1: f64,
    phi2: f64,
    metric: QosMetric,
    horizon: Horizon,
    seed: u64,
) -> Result<DuopolySim> {
    if params.beta <= 0.0 {
        return Err(Error::Regime("simulate_duopoly needs beta > 0".into()));
    }
    params.validate()?;
    let game = Game::new(params, model, metric);
    let split = game.split(phi1, phi2)?;
    let (f1, f2) = (model.eval_f(phi1)?, model.eval_f(phi2)?);
    let opts = SimOptions::default();
    let (a, b) = rayon::join(
        || simulate_with(params, split.lambda1, f1, phi1, horizon, seed, 1, &opts),
        || simulate_with(params, split.lambda2, f2, phi2, horizon, seed, 2, &opts),
    );
    let (a, b) = (a?, b?);
    let p1 = Platform::priced(params, model, split.lambda1, phi1);
    let p2 = Platform::priced(params, model, split.lambda2, phi2);
    let qos = (qos_estimate(metric, &a), qos_estimate(metric, &b));
    let qos_gap = Estimate {
        value: qos.0.value - qos.1.value,
        half_width: qos.0.half_width.hypot(qos.1.half_width),
    };
    Ok(DuopolySim {
        metric,
        prices: (phi1, phi2),
        split,
        analytic_qos: (metric.eval(&p1), metric.eval(&p2)),
        analytic_payoffs: (p1.revenue_rate(), p2.revenue_rate()),
        platforms: (a, b),
        qos,
        qos_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queueing;
    use proptest::prelude::*;

    fn quad() -> PriceModel {
        PriceModel::quadratic(0.1, 9.0)
    }

    /// e = 1 with p = 0.5, so η = 0.5.
    fn base(beta: f64) -> MarketParams {
        MarketParams::new(2.0, 0.5, 0.5, 1.0, beta)
    }

    /// Product-form marginal of the waiting-driver count by direct products.
    fn pf_marginal(e: f64, x: f64, beta: f64, len: usize) -> Vec<f64> {
        let mut mu = vec![1.0];
        let mut total = 1.0;
        for n in 1..2000 {
            let next = mu[n - 1] * e / (x + n as f64 * beta);
            mu.push(next);
            total += next;
        }
        mu.iter().take(len).map(|m| m / total).collect()
    }

    #[test]
    fn matches_analytics() {
        let p = base(1.0);
        let s = simulate_platform(&p, &quad(), 2.0, 5.0, Horizon::Events(1_000_000), 7).unwrap();
        let u = queueing::unavailability(&p, &quad(), 2.0, 5.0);
        let b = queueing::blocking(&p, &quad(), 2.0, 5.0);
        let m = queueing::revenue_rate(&p, &quad(), 2.0, 5.0);
        assert!(s.u_hat.covers(u, 3.0), "{:?} vs {u}", s.u_hat);
        assert!(s.b_hat.covers(b, 3.0), "{:?} vs {b}", s.b_hat);
        assert!(s.revenue_rate_hat.covers(m, 3.0), "{:?} vs {m}", s.revenue_rate_hat);
        // Revenue recombined from simulated components.
        let recombined = 2.0 * 0.75 * 5.0 * (1.0 - s.u_hat.value);
        assert!((s.revenue_rate_hat.value - recombined).abs() <= 3.0 * s.revenue_rate_hat.half_width.hypot(7.5 * s.u_hat.half_width));
        // PASTA: arrivals see the time average.
        let gap = (s.u_hat.value - s.u_time_hat.value).abs();
        assert!(gap <= 3.0 * s.u_hat.half_width.hypot(s.u_time_hat.half_width));
        assert!(!s.transient);
        assert!(s.u_hat.half_width > 0.0);
    }

    #[test]
    fn delay_estimate_matches_metric() {
        let p = base(0.5).with_alpha(0.3);
        let s = simulate_platform(&p, &quad(), 2.0, 5.0, Horizon::Events(400_000), 3).unwrap();
        let d = queueing::pickup_delay_qos(&p, &quad(), 2.0, 5.0);
        assert!(s.d_hat.covers(d, 3.0), "{:?} vs {d}", s.d_hat);
    }

    #[test]
    fn no_passengers() {
        let p = base(1.0);
        let s = simulate_platform(&p, &quad(), 0.0, 5.0, Horizon::Events(300_000), 11).unwrap();
        assert_eq!(s.revenue_rate_hat.value, 0.0);
        assert_eq!(s.arrivals, 0);
        // Waiting drivers form a Poisson(e/β) population.
        let empty = (-1.0f64).exp();
        assert_eq!(s.u_hat, s.u_time_hat);
        assert!(s.u_hat.covers(empty, 3.0), "{:?} vs {empty}", s.u_hat);
    }

    #[test]
    fn histogram_fits_product_form() {
        for (beta, seed) in [(0.5, 1), (1.0, 2), (2.0, 3)] {
            let p = base(beta);
            let s = simulate_platform(&p, &quad(), 2.0, 5.0, Horizon::Time(200_000.0), seed).unwrap();
            let probs = pf_marginal(1.0, 1.5, beta, 200);
            let chi = chi_square_gof(&s.n_snapshots, &probs).unwrap();
            assert!(chi.p_value > 1e-3, "beta {beta}: {chi:?}");
            let tv: f64 = s.n_marginal.iter().zip(&probs).map(|(a, b)| (a - b).abs()).sum();
            assert!(tv < 0.02, "beta {beta}: tv {tv}");
        }
    }

    #[test]
    fn chi_square_rejects_wrong_law() {
        let p = base(1.0);
        let s = simulate_platform(&p, &quad(), 2.0, 5.0, Horizon::Time(100_000.0), 5).unwrap();
        let wrong = pf_marginal(1.0, 1.5, 2.0, 200);
        assert!(chi_square_gof(&s.n_snapshots, &wrong).unwrap().p_value < 1e-6);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = base(1.0);
        let a = simulate_platform(&p, &quad(), 2.0, 5.0, Horizon::Events(20_000), 99).unwrap();
        let b = simulate_platform(&p, &quad(), 2.0, 5.0, Horizon::Events(20_000), 99).unwrap();
        let c = simulate_platform(&p, &quad(), 2.0, 5.0, Horizon::Events(20_000), 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.u_hat, c.u_hat);
    }

    #[test]
    fn time_horizon_stops_on_time() {
        let s = simulate_platform(&base(1.0), &quad(), 2.0, 5.0, Horizon::Time(1000.0), 4).unwrap();
        assert!((s.horizon - 1000.0).abs() < 1e-9);
        assert!((s.measured_time - 900.0).abs() < 5.0);
    }

    #[test]
    fn transience_is_flagged() {
        let p = MarketParams::new(1.0, 2.0, 0.0, 1.0, 0.0);
        let opts = SimOptions { transient_cap: 500, ..SimOptions::default() };
        let s = simulate_with(&p, 1.0, 0.5, 5.0, Horizon::Events(1_000_000), 1, 0, &opts).unwrap();
        assert!(s.transient);
        assert!(s.events < 1_000_000);
    }

    #[test]
    fn invalid_inputs() {
        assert!(simulate_platform(&base(1.0), &quad(), 2.0, 5.0, Horizon::Events(0), 1).is_err());
        assert!(simulate_platform(&base(1.0), &quad(), -1.0, 5.0, Horizon::Events(10), 1).is_err());
        assert!(simulate_platform(&base(1.0), &quad(), 1.0, 20.0, Horizon::Events(10), 1).is_err());
        assert!(simulate_coupled(&base(0.0), &quad(), 1.0, 2.0, 0.0, Horizon::Events(10), 1).is_err());
        assert!(simulate_coupled(&base(1.0), &quad(), 2.0, 1.0, 0.0, Horizon::Events(10), 1).is_err());
    }

    #[test]
    fn coupling_equal_rates_gives_identical_paths() {
        let r = simulate_coupled(&base(1.0), &quad(), 1.5, 1.5, 0.0, Horizon::Events(100_000), 3).unwrap();
        assert_eq!(r.differing_epochs, 0);
        assert_eq!(r.violations(), 0);
    }

    #[test]
    fn coupling_dominance() {
        let r = simulate_coupled(&base(1.0), &quad(), 1.0, 2.0, 0.0, Horizon::Events(100_000), 8).unwrap();
        assert_eq!(r.violations(), 0, "{r:?}");
        assert!(r.differing_epochs > 0);
    }

    #[test]
    fn symmetric_duopoly() {
        let p = MarketParams::new(2.0, 0.5, 0.5, 1.0, 0.5);
        let d = simulate_duopoly(&p, &quad(), 5.0, 5.0, QosMetric::Blocking, Horizon::Events(300_000), 2).unwrap();
        assert_eq!(d.split.lambda1, 1.0);
        assert_eq!(d.split.lambda2, 1.0);
        assert!(d.qos_gap.covers(0.0, 3.0), "{:?}", d.qos_gap);
    }

    #[test]
    fn unavailability_split_balances() {
        let p = MarketParams::new(2.0, 0.5, 0.5, 1.0, 0.7);
        let d = simulate_duopoly(&p, &quad(), 3.0, 7.0, QosMetric::Unavailability, Horizon::Events(400_000), 5).unwrap();
        assert!(d.split.lambda1 != d.split.lambda2);
        assert!(d.qos_gap.covers(0.0, 3.0), "{:?}", d.qos_gap);
        assert!(d.platforms.0.revenue_rate_hat.covers(d.analytic_payoffs.0, 3.0));
        assert!(d.platforms.1.revenue_rate_hat.covers(d.analytic_payoffs.1, 3.0));
    }

    #[test]
    fn band_prices_track_limit_payoffs() {
        // Λ = 2, e = 1; both prices in the middle band.
        let p = MarketParams::new(2.0, 0.5, 0.5, 1.0, 0.02);
        let model = quad();
        let (x, y) = (6.0, 5.0);
        let d = simulate_duopoly(&p, &model, x, y, QosMetric::Blocking, Horizon::Events(1_000_000), 13).unwrap();
        let limit = Game::new(&p.clone().with_beta(0.0), &model, QosMetric::Blocking).payoffs(x, y).unwrap();
        let est = (&d.platforms.0.revenue_rate_hat, &d.platforms.1.revenue_rate_hat);
        assert!(est.0.covers(d.analytic_payoffs.0, 3.0), "{:?} {:?}", est.0, d.analytic_payoffs);
        assert!(est.1.covers(d.analytic_payoffs.1, 3.0), "{:?} {:?}", est.1, d.analytic_payoffs);
        // The pre-limit payoffs approach the limit table slowly; check it analytically at small β.
        let tiny = p.clone().with_beta(1e-5);
        let near = Game::new(&tiny, &model, QosMetric::Blocking).payoffs(x, y).unwrap();
        assert!((near.0 - limit.0).abs() < 0.05 * limit.0, "{near:?} {limit:?}");
        assert!((near.1 - limit.1).abs() < 0.05 * limit.1, "{near:?} {limit:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn estimates_are_probabilities(seed in any::<u64>(), lambda in 0.0f64..3.0, beta in 0.1f64..2.0) {
            let s = simulate_platform(&base(beta), &quad(), lambda, 4.0, Horizon::Events(5_000), seed).unwrap();
            for e in [s.u_hat, s.u_time_hat, s.b_hat] {
                prop_assert!((0.0..=1.0).contains(&e.value));
            }
            let mass: f64 = s.n_marginal.iter().sum();
            prop_assert!((mass - 1.0).abs() < 1e-9);
        }

        #[test]
        fn coupled_never_violates(seed in any::<u64>(), lo in 0.0f64..2.0, extra in 0.0f64..2.0, p in 0.0f64..0.9) {
            let params = MarketParams::new(2.0, 0.5, p, 1.0, 0.8);
            let r = simulate_coupled(&params, &quad(), lo, lo + extra, 3.0, Horizon::Events(5_000), seed).unwrap();
            prop_assert_eq!(r.violations(), 0);
        }
    }
}
