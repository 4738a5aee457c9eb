//! Scalar root finding and one-dimensional optimization.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bisection for a sign change of `g` on `[lo, hi]`.
///
/// `g(lo)` and `g(hi)` must have opposite signs (or one of them be zero).
/// Stops once the bracket is narrower than `tol` or after `max_iter` halvings,
/// and returns the midpoint of the final bracket.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64 {
    let mut g_lo = g(lo);
    if g_lo == 0.0 {
        return lo;
    }
    if g(hi) == 0.0 {
        return hi;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest point of `[lo, hi]` where a non-increasing `pred` still holds.
///
/// `pred(lo)` must be true and `pred(hi)` false. Returns the left end of the
/// final bracket, so the returned point always satisfies `pred`.
pub fn last_true(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    lo
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(x_max, f_max)`. Exact for unimodal `f` up to the bracket tolerance.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    golden_by(f, a, b, tol, |f1, f2| f1 > f2)
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    golden_by(f, a, b, tol, |f1, f2| f1 < f2)
}

/// Golden-section search where `keep_left(f(x1), f(x2))` decides which side survives.
fn golden_by(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    keep_left: impl Fn(f64, f64) -> bool,
) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while b - a > tol && iters < 500 {
        if keep_left(f1, f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iters += 1;
    }
    let candidates = [(x1, f1), (x2, f2), (a, f(a)), (b, f(b))];
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if keep_left(c.1, best.1) {
            best = *c;
        }
    }
    best
}

/// `n` evenly spaced points covering `[a, b]` including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            let mut out: Vec<f64> = (0..n).map(|k| a + h * k as f64).collect();
            out[n - 1] = b;
            out
        }
    }
}
