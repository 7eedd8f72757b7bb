//! Scalar bracketing root finders shared by the phase and inference code.

/// Bisection on a bracket `[lo, hi]` whose endpoint values differ in sign.
///
/// `f_lo` is `f(lo)`. Runs until the bracket cannot be split further in double
/// precision and returns the midpoint of the final bracket.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
}

/// Outcome of [`bisect_increasing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectResult {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Root of a nondecreasing function on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
///
/// Stops when the bracket is narrower than `x_tol` or after `max_iter` halvings.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> BisectResult {
    let mut iterations = 0;
    while hi - lo > x_tol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    BisectResult { root: 0.5 * (lo + hi), lo, hi, iterations }
}

/// Newton steps from `x` that are kept only while they stay inside `[lo, hi]`
/// and reduce `|f|`.
pub(crate) fn newton_polish<F, D>(f: F, df: D, mut x: f64, lo: f64, hi: f64, steps: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut fx = f(x);
    for _ in 0..steps {
        if fx == 0.0 {
            break;
        }
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let fn_ = f(next);
        if fn_.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}
