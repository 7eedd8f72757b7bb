//! Model definition, the free-energy surface and its one-dimensional reduction.
//!
//! The magnetization vector of the p-tensor Curie-Weiss Potts model concentrates
//! around maximizers of
//!
//! ```text
//! H(t) = beta * sum_r t_r^p + h * t_1 - sum_r t_r log t_r
//! ```
//!
//! on the probability simplex. Every maximizer is a permutation of the ray point
//! `x_s = ((1 + (q-1)s)/q, (1-s)/q, ..., (1-s)/q)`, so most of the analysis runs
//! on `f(s) = H(x_s)` and the scalar function `k(x) = beta x^p - x log x`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible `s`; `f''` and higher derivatives blow up at `s = 1`.
pub const S_MAX: f64 = 1.0 - 1e-9;

/// Highest derivative order available in closed form.
pub const MAX_ORDER: u32 = 6;

/// Parameters `(p, q, beta, h)` of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Interaction order.
    pub p: u32,
    /// Number of colors.
    pub q: u32,
    pub beta: f64,
    pub h: f64,
}

impl ModelSpec {
    pub fn new(p: u32, q: u32, beta: f64, h: f64) -> Result<Self> {
        let spec = ModelSpec { p, q, beta, h };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter(format!("p must be at least 2, got {}", self.p)));
        }
        if self.q < 2 {
            return Err(Error::InvalidParameter(format!("q must be at least 2, got {}", self.q)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.h.is_finite() && self.h >= 0.0) {
            return Err(Error::InvalidParameter(format!("h must be finite and >= 0, got {}", self.h)));
        }
        Ok(())
    }

    pub fn with_beta(self, beta: f64) -> Self {
        ModelSpec { beta, ..self }
    }

    pub fn with_h(self, h: f64) -> Self {
        ModelSpec { h, ..self }
    }

    pub(crate) fn qf(&self) -> f64 {
        self.q as f64
    }
}

/// A length-q probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Entries must be non-negative and sum to one within `1e-12`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Shape(format!("probability vector needs at least 2 entries, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("probability vector entries must be finite and non-negative".into()));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probability vector sums to {total}, not 1")));
        }
        Ok(ProbVector(values))
    }

    pub fn from_counts(counts: &[u32]) -> Result<Self> {
        let n: u64 = counts.iter().map(|&c| c as u64).sum();
        if n == 0 {
            return Err(Error::Domain("counts sum to zero".into()));
        }
        let nf = n as f64;
        ProbVector::new(counts.iter().map(|&c| c as f64 / nf).collect())
    }

    pub fn uniform(q: u32) -> Self {
        ProbVector(vec![1.0 / q as f64; q as usize])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `sum_r v_r^p`.
    pub fn p_norm_pow(&self, p: u32) -> f64 {
        self.0.iter().map(|v| v.powi(p as i32)).sum()
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The direction `u = (1-q, 1, ..., 1)`.
pub fn u_vector(q: u32) -> Vec<f64> {
    let mut u = vec![1.0; q as usize];
    u[0] = 1.0 - q as f64;
    u
}

fn entropy_term(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// n-th derivative of `beta x^p - x log x` without argument checks.
#[inline]
pub(crate) fn k_raw(beta: f64, p: u32, x: f64, n: u32) -> f64 {
    let poly = if n <= p {
        let mut c = beta;
        for j in 0..n {
            c *= (p - j) as f64;
        }
        c * x.powi((p - n) as i32)
    } else {
        0.0
    };
    let ent = match n {
        0 => entropy_term(x),
        1 => -x.ln() - 1.0,
        _ => {
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            sign * factorial(n - 2) * x.powi(-(n as i32 - 1))
        }
    };
    poly + ent
}

/// n-th derivative of `k(x) = beta x^p - x log x` for `n <= 6`.
pub fn k_deriv(spec: &ModelSpec, x: f64, order: u32) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("k is evaluated at x > 0, got {x}")));
    }
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("derivative order {order} above {MAX_ORDER}")));
    }
    Ok(k_raw(spec.beta, spec.p, x, order))
}

/// Coordinates `(a, b)` of the ray point: first entry and each of the others.
#[inline]
pub(crate) fn ray_coords(q: f64, s: f64) -> (f64, f64) {
    ((1.0 + (q - 1.0) * s) / q, (1.0 - s) / q)
}

/// n-th derivative of `f(s) = H(x_s)` without argument checks.
#[inline]
pub(crate) fn f_raw(spec: &ModelSpec, s: f64, n: u32) -> f64 {
    let q = spec.qf();
    let (a, b) = ray_coords(q, s);
    let (beta, p) = (spec.beta, spec.p);
    match n {
        0 => (q - 1.0) * k_raw(beta, p, b, 0) + k_raw(beta, p, a, 0) + spec.h * a,
        1 => {
            // log(a/b) via log1p keeps f' accurate near s = 0.
            let log_ratio = ((q - 1.0) * s).ln_1p() - (-s).ln_1p();
            let poly = beta * p as f64 * (a.powi(p as i32 - 1) - b.powi(p as i32 - 1));
            (q - 1.0) / q * (poly - log_ratio + spec.h)
        }
        _ => {
            let c_a = ((q - 1.0) / q).powi(n as i32);
            let c_b = (q - 1.0) * (-1.0 / q).powi(n as i32);
            c_a * k_raw(beta, p, a, n) + c_b * k_raw(beta, p, b, n)
        }
    }
}

pub(crate) fn check_s(q: u32, s: f64) -> Result<()> {
    let lower = -1.0 / (q as f64 - 1.0);
    if !s.is_finite() || s <= lower || s > S_MAX {
        return Err(Error::Domain(format!("s must lie in ({lower}, {S_MAX}], got {s}")));
    }
    Ok(())
}

/// n-th derivative of `f(s)` for `n <= 6`.
///
/// Accepts `s` in `(-1/(q-1), 1 - 1e-9]`; negative values are used by plug-in
/// estimates built from data whose first coordinate is below the others.
pub fn f_deriv(spec: &ModelSpec, s: f64, order: u32) -> Result<f64> {
    check_s(spec.q, s)?;
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("derivative order {order} above {MAX_ORDER}")));
    }
    Ok(f_raw(spec, s, order))
}

/// `f` and its first six derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SDerivatives {
    pub s: f64,
    pub values: [f64; 7],
}

impl SDerivatives {
    pub fn at(spec: &ModelSpec, s: f64) -> Result<Self> {
        check_s(spec.q, s)?;
        let mut values = [0.0; 7];
        for (n, v) in values.iter_mut().enumerate() {
            *v = f_raw(spec, s, n as u32);
        }
        Ok(SDerivatives { s, values })
    }
}

/// `H(v) = beta sum v_r^p + h v_1 - sum v_r log v_r`, with `0 log 0 = 0`.
pub fn negative_free_energy(spec: &ModelSpec, v: &ProbVector) -> Result<f64> {
    if v.len() != spec.q as usize {
        return Err(Error::Shape(format!("expected {} coordinates, got {}", spec.q, v.len())));
    }
    let xs = v.as_slice();
    let poly: f64 = xs.iter().map(|x| x.powi(spec.p as i32)).sum();
    let ent: f64 = xs.iter().map(|&x| entropy_term(x)).sum();
    Ok(spec.beta * poly + spec.h * xs[0] + ent)
}

pub fn x_of_s(q: u32, s: f64) -> Result<ProbVector> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q must be at least 2, got {q}")));
    }
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!("s must lie in [0, 1), got {s}")));
    }
    let (a, b) = ray_coords(q as f64, s);
    let mut v = vec![b; q as usize];
    v[0] = a;
    Ok(ProbVector(v))
}

/// Inverse of [`x_of_s`]: `s = 1 - q v_2`.
pub fn s_of_x(v: &ProbVector) -> Result<f64> {
    let xs = v.as_slice();
    let rest = &xs[1..];
    if rest.iter().any(|x| (x - rest[0]).abs() > 1e-9) {
        return Err(Error::Shape("coordinates 2..q are not equal".into()));
    }
    Ok(1.0 - xs.len() as f64 * xs[1])
}

/// Quadratic form `Q(t)` of the Hessian of `H` at `x_s`, restricted to the
/// zero-sum hyperplane.
pub fn quadratic_form(spec: &ModelSpec, s: f64, t: &[f64]) -> Result<f64> {
    check_s(spec.q, s)?;
    if t.len() != spec.q as usize {
        return Err(Error::Shape(format!("expected {} coordinates, got {}", spec.q, t.len())));
    }
    let sum: f64 = t.iter().sum();
    if sum.abs() > 1e-10 {
        return Err(Error::Domain(format!("t must sum to zero, sums to {sum}")));
    }
    let (a, b) = ray_coords(spec.qf(), s);
    let k2a = k_raw(spec.beta, spec.p, a, 2);
    let k2b = k_raw(spec.beta, spec.p, b, 2);
    let tail = &t[1..];
    let sq: f64 = tail.iter().map(|x| x * x).sum();
    let lin: f64 = tail.iter().sum();
    Ok(k2b * sq + k2a * lin * lin)
}

/// `sum_r k''(m_r) t_r^2`, the Hessian of `H` at an arbitrary interior point.
pub fn hessian_diagonal_form(spec: &ModelSpec, m: &[f64], t: &[f64]) -> Result<f64> {
    if m.len() != t.len() {
        return Err(Error::Shape("m and t differ in length".into()));
    }
    if m.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("Hessian needs strictly positive coordinates".into()));
    }
    Ok(m.iter().zip(t).map(|(&x, &y)| k_raw(spec.beta, spec.p, x, 2) * y * y).sum())
}

/// Limiting covariance of `sqrt(N)(X - x_s)` at a non-degenerate maximizer.
pub fn sigma_matrix(spec: &ModelSpec, s: f64) -> Result<DMatrix<f64>> {
    check_s(spec.q, s)?;
    let f2 = f_raw(spec, s, 2);
    if !(f2 < 0.0) {
        return Err(Error::Classification(format!("covariance needs f''(s) < 0, got {f2}")));
    }
    let q = spec.q as usize;
    let qf = spec.qf();
    let (a, b) = ray_coords(qf, s);
    let rho = k_raw(spec.beta, spec.p, a, 2) / k_raw(spec.beta, spec.p, b, 2);
    let scale = 1.0 / (-qf * qf / (qf - 1.0) * f2);
    Ok(DMatrix::from_fn(q, q, |i, j| {
        let v = match (i, j) {
            (0, 0) => qf - 1.0,
            (0, _) | (_, 0) => -1.0,
            _ if i == j => 1.0 + (qf - 2.0) * rho,
            _ => -rho,
        };
        scale * v
    }))
}
