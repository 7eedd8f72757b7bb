//! One-dimensional quadrature.

/// Composite Simpson rule with `intervals` (rounded up to even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
///
/// The interval is first split into `pieces` equal panels so that narrow
/// features are not missed by the initial three-point estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let per = tol / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            adaptive_step(&f, lo, hi, fa, fm, fb, whole, per, 40)
        })
        .sum()
}
