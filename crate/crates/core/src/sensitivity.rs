//! Price sensitivity: the probability `f(φ)` that a passenger accepts price `φ`.

use serde::{Deserialize, Serialize};

use crate::numeric::{bisect, linspace};
use crate::{Error, Result};

/// Parametric family of the sensitivity function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// `f(φ) = 1 − (aφ)²`.
    Quadratic { a: f64 },
    /// `f(φ) = 1 − slope·φ`.
    Linear { slope: f64 },
    /// `f(φ) = 1 − √(φ/scale)`.
    Sqrt { scale: f64 },
    /// Monotone cubic (Fritsch–Carlson) interpolation through `(phi[k], f[k])`.
    Tabulated { phi: Vec<f64>, f: Vec<f64> },
}

/// A sensitivity function on the action space `[0, φ_h]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    #[serde(flatten)]
    pub family: Family,
    pub phi_h: f64,
}

/// One pass/fail line of [`PriceModel::validate_assumptions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// First grid point where the property fails.
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub grid_points: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const STRICT: f64 = 1e-12;

impl PriceModel {
    pub fn quadratic(a: f64, phi_h: f64) -> Self {
        Self { family: Family::Quadratic { a }, phi_h }
    }

    pub fn linear(slope: f64, phi_h: f64) -> Self {
        Self { family: Family::Linear { slope }, phi_h }
    }

    pub fn sqrt(scale: f64, phi_h: f64) -> Self {
        Self { family: Family::Sqrt { scale }, phi_h }
    }

    /// Tabulated model; the table must start at `φ = 0` and cover `[0, φ_h]`.
    pub fn tabulated(phi: Vec<f64>, f: Vec<f64>, phi_h: f64) -> Result<Self> {
        let model = Self { family: Family::Tabulated { phi, f }, phi_h };
        model.check_structure()?;
        Ok(model)
    }

    /// Structural checks that do not involve the shape assumptions on `f`.
    pub fn check_structure(&self) -> Result<()> {
        if !(self.phi_h.is_finite() && self.phi_h > 0.0) {
            return Err(Error::InvalidParams(format!("phi_h must be positive, got {}", self.phi_h)));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        match &self.family {
            Family::Quadratic { a } => positive("a", *a),
            Family::Linear { slope } => positive("slope", *slope),
            Family::Sqrt { scale } => positive("scale", *scale),
            Family::Tabulated { phi, f } => {
                if phi.len() < 2 || phi.len() != f.len() {
                    return Err(Error::InvalidParams(
                        "tabulated model needs at least two (phi, f) pairs of equal length".into(),
                    ));
                }
                if phi[0] != 0.0 {
                    return Err(Error::InvalidParams("tabulated grid must start at phi = 0".into()));
                }
                if phi.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParams("tabulated grid must be strictly increasing".into()));
                }
                if phi[phi.len() - 1] < self.phi_h {
                    return Err(Error::InvalidParams("tabulated grid must cover [0, phi_h]".into()));
                }
                Ok(())
            }
        }
    }

    /// `f(φ)` without domain checks.
    pub fn f(&self, phi: f64) -> f64 {
        match &self.family {
            Family::Quadratic { a } => 1.0 - (a * phi) * (a * phi),
            Family::Linear { slope } => 1.0 - slope * phi,
            Family::Sqrt { scale } => 1.0 - (phi.max(0.0) / scale).sqrt(),
            Family::Tabulated { phi: xs, f: ys } => pchip_eval(xs, ys, phi),
        }
    }

    /// `f′(φ)` without domain checks. The square-root family returns `−∞` at 0.
    pub fn f_prime(&self, phi: f64) -> f64 {
        match &self.family {
            Family::Quadratic { a } => -2.0 * a * a * phi,
            Family::Linear { slope } => -slope,
            Family::Sqrt { scale } => {
                if phi <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -0.5 / (phi * scale).sqrt()
                }
            }
            Family::Tabulated { phi: xs, .. } => {
                let lo = xs[0];
                let hi = xs[xs.len() - 1];
                let h = 1e-6 * self.phi_h.max(1.0);
                let a = (phi - h).max(lo);
                let b = (phi + h).min(hi);
                (self.f(b) - self.f(a)) / (b - a)
            }
        }
    }

    /// `φ·f′(φ)`, finite at 0 for every family.
    pub fn phi_f_prime(&self, phi: f64) -> f64 {
        match &self.family {
            Family::Quadratic { a } => -2.0 * (a * phi) * (a * phi),
            Family::Linear { slope } => -slope * phi,
            Family::Sqrt { scale } => -0.5 * (phi.max(0.0) / scale).sqrt(),
            Family::Tabulated { .. } => {
                if phi == 0.0 {
                    0.0
                } else {
                    phi * self.f_prime(phi)
                }
            }
        }
    }

    fn check_domain(&self, phi: f64) -> Result<()> {
        if (0.0..=self.phi_h).contains(&phi) {
            Ok(())
        } else {
            Err(Error::Domain { phi, phi_h: self.phi_h })
        }
    }

    /// `f(φ)` with the domain and positivity checks.
    pub fn eval_f(&self, phi: f64) -> Result<f64> {
        self.check_domain(phi)?;
        let value = self.f(phi);
        if value > 0.0 && value <= 1.0 {
            Ok(value)
        } else {
            Err(Error::NonPositive { phi, value })
        }
    }

    /// `f′(φ)` with the domain check.
    pub fn eval_f_prime(&self, phi: f64) -> Result<f64> {
        self.check_domain(phi)?;
        Ok(self.f_prime(phi))
    }

    /// Extended inverse: `φ_h` below `f(φ_h)`, the root of `f(φ) = x` on
    /// `[f(φ_h), 1]`, and 0 above 1.
    pub fn inverse(&self, x: f64) -> f64 {
        if x > 1.0 {
            return 0.0;
        }
        let f_h = self.f(self.phi_h);
        if x <= f_h {
            // x == f(φ_h) lands on φ_h as well (closed branch).
            return self.phi_h;
        }
        let root = match &self.family {
            Family::Quadratic { a } => (1.0 - x).sqrt() / a,
            Family::Linear { slope } => (1.0 - x) / slope,
            Family::Sqrt { scale } => scale * (1.0 - x) * (1.0 - x),
            Family::Tabulated { .. } => bisect(|p| self.f(p) - x, 0.0, self.phi_h, 1e-14, 200),
        };
        root.clamp(0.0, self.phi_h)
    }

    /// Alias of [`PriceModel::inverse`].
    pub fn eval_f_inverse(&self, x: f64) -> f64 {
        self.inverse(x)
    }

    /// Grid checks of positivity, `f(0) = 1`, strict decrease and strict concavity.
    pub fn validate_assumptions(&self, grid_points: usize) -> ValidationReport {
        let n = grid_points.max(3);
        let grid = linspace(0.0, self.phi_h, n);
        let vals: Vec<f64> = grid.iter().map(|&p| self.f(p)).collect();

        let positivity = grid
            .iter()
            .zip(&vals)
            .find(|(_, &v)| !(v > 0.0 && v <= 1.0))
            .map(|(&p, _)| p);
        let at_zero = if (vals[0] - 1.0).abs() <= STRICT { None } else { Some(0.0) };
        let decrease = (1..n).find(|&k| !(vals[k] - vals[k - 1] < -STRICT)).map(|k| grid[k]);
        let concavity = (1..n - 1)
            .find(|&k| !(vals[k + 1] - 2.0 * vals[k] + vals[k - 1] < -STRICT))
            .map(|k| grid[k]);

        let check = |name: &str, v: Option<f64>| Check {
            name: name.to_string(),
            passed: v.is_none(),
            first_violation: v,
        };
        ValidationReport {
            grid_points: n,
            checks: vec![
                check("positivity", positivity),
                check("f(0)=1", at_zero),
                check("strictly_decreasing", decrease),
                check("strictly_concave", concavity),
            ],
        }
    }
}

/// Fritsch–Carlson slope at node `k`.
fn pchip_slope(xs: &[f64], ys: &[f64], k: usize) -> f64 {
    let n = xs.len();
    let secant = |i: usize| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    if n == 2 {
        return secant(0);
    }
    let end_slope = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if d.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            d
        }
    };
    if k == 0 {
        return end_slope(xs[1] - xs[0], xs[2] - xs[1], secant(0), secant(1));
    }
    if k == n - 1 {
        return end_slope(
            xs[n - 1] - xs[n - 2],
            xs[n - 2] - xs[n - 3],
            secant(n - 2),
            secant(n - 3),
        );
    }
    let (d0, d1) = (secant(k - 1), secant(k));
    if d0 * d1 <= 0.0 {
        return 0.0;
    }
    let (h0, h1) = (xs[k] - xs[k - 1], xs[k + 1] - xs[k]);
    let w1 = 2.0 * h1 + h0;
    let w2 = h1 + 2.0 * h0;
    (w1 + w2) / (w1 / d0 + w2 / d1)
}

fn pchip_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let x = x.clamp(xs[0], xs[n - 1]);
    let k = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        i if i >= n => n - 2,
        i => i - 1,
    };
    let h = xs[k + 1] - xs[k];
    let t = (x - xs[k]) / h;
    let (m0, m1) = (pchip_slope(xs, ys, k), pchip_slope(xs, ys, k + 1));
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * ys[k] + h10 * h * m0 + h01 * ys[k + 1] + h11 * h * m1
}
