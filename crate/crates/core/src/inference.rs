//! Maximum-likelihood estimation of `h` (given `beta`) and of `beta` (given
//! `h`), and confidence sets that account for the critical curve.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exact::{CouplingProfile, FieldProfile};
use crate::limits::{bhat_limit, hhat_limit, ScalarLaw};
use crate::model::{f_raw, ModelSpec, ProbVector, S_MAX};
use crate::phase::{classify_point, PhaseStructure, PhaseTag, CLASS_TOL};

/// Largest parameter value tried when widening the bracket.
pub const BRACKET_CAP: f64 = 64.0;
/// Residual below which a root counts as converged.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationResult {
    pub estimate: f64,
    pub observed_statistic: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub converged: bool,
    /// The non-negativity constraint is active (estimate pinned at 0).
    pub boundary: bool,
    /// `|u(estimate) - observed_statistic|`.
    pub residual: f64,
}

/// Root of the increasing map `u - observed` over `[0, 64]`.
fn solve_monotone<U: Fn(f64) -> f64>(u: U, observed: f64) -> EstimationResult {
    let g = |x: f64| u(x) - observed;
    let g0 = g(0.0);
    if g0 >= 0.0 {
        return EstimationResult {
            estimate: 0.0,
            observed_statistic: observed,
            iterations: 0,
            bracket: (0.0, 0.0),
            converged: g0 <= RESIDUAL_TOL,
            boundary: true,
            residual: g0,
        };
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut g_hi = g(hi);
    while g_hi < 0.0 {
        if hi >= BRACKET_CAP {
            return EstimationResult {
                estimate: hi,
                observed_statistic: observed,
                iterations: 0,
                bracket: (lo, hi),
                converged: false,
                boundary: false,
                residual: -g_hi,
            };
        }
        lo = hi;
        hi *= 2.0;
        g_hi = g(hi);
    }
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    assert!(g_lo <= 0.0 && g_hi >= 0.0, "estimating function lost its sign pattern on [{lo}, {hi}]");
    let (estimate, residual) = if -g_lo <= g_hi { (lo, -g_lo) } else { (hi, g_hi) };
    EstimationResult {
        estimate,
        observed_statistic: observed,
        iterations,
        bracket: (lo, hi),
        converged: residual <= RESIDUAL_TOL,
        boundary: false,
        residual,
    }
}

/// `h` solving `u_{N,1}(beta, h) = observed_x1` on a prepared profile.
pub fn mle_h_with(profile: &FieldProfile, observed_x1: f64) -> Result<EstimationResult> {
    if !(observed_x1 > 0.0 && observed_x1 < 1.0) {
        return Err(Error::InvalidParameter(format!("observed X_1 must lie in (0, 1), got {observed_x1}")));
    }
    Ok(solve_monotone(|h| profile.u1(h), observed_x1))
}

/// `h` solving `u_{N,1}(beta, h) = observed_x1`; `spec.h` is ignored.
pub fn mle_h(spec: &ModelSpec, observed_x1: f64, n: u32) -> Result<EstimationResult> {
    mle_h_with(&FieldProfile::new(spec, n)?, observed_x1)
}

/// `beta` solving `u_{N,p}(beta, h) = observed_pnorm` on a prepared profile.
pub fn mle_beta_with(profile: &CouplingProfile, spec: &ModelSpec, observed_pnorm: f64) -> Result<EstimationResult> {
    let floor = spec.qf().powi(1 - spec.p as i32);
    if !(observed_pnorm > floor && observed_pnorm <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "observed ||X||_p^p must lie in ({floor}, 1], got {observed_pnorm}"
        )));
    }
    Ok(solve_monotone(|b| profile.up(b), observed_pnorm))
}

/// `beta` solving `u_{N,p}(beta, h) = observed_pnorm`; `spec.beta` is ignored.
pub fn mle_beta(spec: &ModelSpec, observed_pnorm: f64, n: u32) -> Result<EstimationResult> {
    mle_beta_with(&CouplingProfile::new(spec, n)?, spec, observed_pnorm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CiMethod {
    Plain,
    Augmented,
    TwoStep,
}

impl CiMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CiMethod::Plain => "plain",
            CiMethod::Augmented => "augmented",
            CiMethod::TwoStep => "two_step",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceSet {
    pub estimate: f64,
    pub interval: (f64, f64),
    /// At most one point of the closure of the critical set.
    pub appended_points: Vec<f64>,
    pub level: f64,
    pub method: CiMethod,
}

impl ConfidenceSet {
    pub fn contains(&self, x: f64) -> bool {
        (self.interval.0 <= x && x <= self.interval.1) || self.appended_points.contains(&x)
    }

    pub fn width(&self) -> f64 {
        self.interval.1 - self.interval.0
    }
}

/// Which parameter is estimated; the other one is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Axis {
    /// Estimate `h` with `beta` known.
    Field,
    /// Estimate `beta` with `h` known.
    Coupling,
}

fn z_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(1.0 - alpha / 2.0))
}

/// `-f''_{beta,0}(1 - q X_q)` from the data; an error when not positive.
fn plug_in_curvature(spec: &ModelSpec, beta: f64, data: &ProbVector) -> Result<f64> {
    let q = spec.q as usize;
    if data.len() != q {
        return Err(Error::Shape(format!("data has {} coordinates, expected {q}", data.len())));
    }
    let s = 1.0 - spec.qf() * data[q - 1];
    let lower = -1.0 / (spec.qf() - 1.0);
    if !(s > lower && s <= S_MAX) {
        return Err(Error::Domain(format!("plug-in s = {s} leaves the ray domain")));
    }
    let f2 = f_raw(&spec.with_beta(beta).with_h(0.0), s, 2);
    if !(f2 < 0.0) {
        return Err(Error::Degenerate(format!("plug-in f'' = {f2} is not negative; the interval has no width")));
    }
    Ok(-f2)
}

fn check_regular(spec: &ModelSpec, beta: f64, h: f64, force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    let class = classify_point(&spec.with_beta(beta).with_h(h), CLASS_TOL);
    if class.tag != PhaseTag::Regular {
        return Err(Error::Classification(format!(
            "({beta}, {h}) is {}; the plain interval assumes a regular point",
            class.tag.as_str()
        )));
    }
    Ok(())
}

/// Plain interval for `h` around a given estimate.
pub fn ci_h_from(spec: &ModelSpec, estimate: f64, data: &ProbVector, n: u32, alpha: f64) -> Result<ConfidenceSet> {
    let z = z_quantile(alpha)?;
    let q = spec.qf();
    let half = q / (q - 1.0) * (plug_in_curvature(spec, spec.beta, data)? / n as f64).sqrt() * z;
    Ok(ConfidenceSet {
        estimate,
        interval: (estimate - half, estimate + half),
        appended_points: Vec::new(),
        level: 1.0 - alpha,
        method: CiMethod::Plain,
    })
}

/// Plain `(1 - alpha)` interval for `h` with `beta = spec.beta` known.
///
/// Fails with a classification error when `(beta, h_hat)` is not regular,
/// unless `force` is set.
pub fn ci_h(spec: &ModelSpec, data: &ProbVector, n: u32, alpha: f64, force: bool) -> Result<ConfidenceSet> {
    let est = mle_h(spec, data[0], n)?;
    if !est.converged && !est.boundary {
        return Err(Error::NonConvergence(format!("h estimate did not converge (residual {})", est.residual)));
    }
    check_regular(spec, spec.beta, est.estimate, force)?;
    ci_h_from(spec, est.estimate, data, n, alpha)
}

/// Plain interval for `beta` around a given estimate.
pub fn ci_beta_from(spec: &ModelSpec, estimate: f64, data: &ProbVector, n: u32, alpha: f64) -> Result<ConfidenceSet> {
    if spec.h == 0.0 {
        return Err(Error::InvalidParameter("the interval for beta needs h != 0".into()));
    }
    let z = z_quantile(alpha)?;
    let (p, q) = (spec.p as f64, spec.qf());
    let gap = data[0].powi(spec.p as i32 - 1) - data[1].powi(spec.p as i32 - 1);
    if gap.abs() < 1e-9 {
        return Err(Error::Degenerate(format!("X_1^(p-1) - X_2^(p-1) = {gap} is too small")));
    }
    let curv = plug_in_curvature(spec, estimate, data)?;
    let half = q * curv.sqrt() / ((n as f64).sqrt() * p * (q - 1.0) * gap.abs()) * z;
    Ok(ConfidenceSet {
        estimate,
        interval: (estimate - half, estimate + half),
        appended_points: Vec::new(),
        level: 1.0 - alpha,
        method: CiMethod::Plain,
    })
}

/// Plain `(1 - alpha)` interval for `beta` with `h = spec.h != 0` known.
pub fn ci_beta(spec: &ModelSpec, data: &ProbVector, n: u32, alpha: f64, force: bool) -> Result<ConfidenceSet> {
    if spec.h == 0.0 {
        return Err(Error::InvalidParameter("the interval for beta needs h != 0".into()));
    }
    let est = mle_beta(spec, data.p_norm_pow(spec.p), n)?;
    if !est.converged && !est.boundary {
        return Err(Error::NonConvergence(format!("beta estimate did not converge (residual {})", est.residual)));
    }
    check_regular(spec, est.estimate, spec.h, force)?;
    ci_beta_from(spec, est.estimate, data, n, alpha)
}

/// The point of the closure of the critical set on the slice through the known
/// parameter: `S(beta)` on the field axis, `T(h)` on the coupling axis.
pub fn critical_slice(structure: &PhaseStructure, spec: &ModelSpec, axis: Axis) -> Result<Option<f64>> {
    match axis {
        Axis::Field => structure.critical_h_for_beta(spec.beta),
        Axis::Coupling => {
            if spec.h > 0.0 {
                structure.critical_beta_for_h(spec.h)
            } else {
                Ok(None)
            }
        }
    }
}

/// Adds the critical point of the slice when the interval misses it.
pub fn augment_ci(cs: &ConfidenceSet, structure: &PhaseStructure, spec: &ModelSpec, axis: Axis) -> Result<ConfidenceSet> {
    let mut out = cs.clone();
    out.method = CiMethod::Augmented;
    out.appended_points.clear();
    if let Some(x) = critical_slice(structure, spec, axis)? {
        if !(cs.interval.0 <= x && x <= cs.interval.1) {
            out.appended_points.push(x);
        }
    }
    Ok(out)
}

/// Outcome of the test of "the parameter lies on the critical slice".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceTest {
    pub null_value: f64,
    pub tag: PhaseTag,
    pub rate: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

fn rate_for(tag: PhaseTag) -> f64 {
    match tag {
        PhaseTag::SpecialTypeI => 0.75,
        PhaseTag::SpecialTypeII => 5.0 / 6.0,
        _ => 0.5,
    }
}

/// Two-sided p-value of `x` under `law`.
fn two_sided_p(law: &ScalarLaw, x: f64) -> f64 {
    (2.0 * law.cdf(x).min(1.0 - law.cdf_left(x))).min(1.0)
}

/// Two-step confidence set: test whether the unknown parameter equals the
/// critical value of its slice using the limit law of the estimator there;
/// keep only that value on acceptance, else fall back to the plain interval.
pub fn two_step_ci(
    spec: &ModelSpec,
    structure: &PhaseStructure,
    data: &ProbVector,
    n: u32,
    alpha: f64,
    axis: Axis,
) -> Result<(ConfidenceSet, Option<SliceTest>)> {
    z_quantile(alpha)?;
    let est = match axis {
        Axis::Field => mle_h(spec, data[0], n)?,
        Axis::Coupling => mle_beta(spec, data.p_norm_pow(spec.p), n)?,
    };
    if !est.converged && !est.boundary {
        return Err(Error::NonConvergence(format!("estimate did not converge (residual {})", est.residual)));
    }
    let plain = || match axis {
        Axis::Field => ci_h_from(spec, est.estimate, data, n, alpha),
        Axis::Coupling => ci_beta_from(spec, est.estimate, data, n, alpha),
    };
    let Some(null_value) = critical_slice(structure, spec, axis)? else {
        return Ok((ConfidenceSet { method: CiMethod::TwoStep, ..plain()? }, None));
    };
    let null_spec = match axis {
        Axis::Field => spec.with_h(null_value),
        Axis::Coupling => spec.with_beta(null_value),
    };
    let class = classify_point(&null_spec, CLASS_TOL);
    let law = match axis {
        Axis::Field => hhat_limit(&class)?,
        Axis::Coupling => bhat_limit(&class)?,
    };
    let rate = rate_for(class.tag);
    let statistic = (n as f64).powf(rate) * (est.estimate - null_value);
    let p_value = two_sided_p(&law, statistic);
    let test = SliceTest { null_value, tag: class.tag, rate, statistic, p_value, rejected: p_value < alpha };
    let cs = if test.rejected {
        ConfidenceSet { method: CiMethod::TwoStep, ..plain()? }
    } else {
        ConfidenceSet {
            estimate: est.estimate,
            interval: (null_value, null_value),
            appended_points: vec![null_value],
            level: 1.0 - alpha,
            method: CiMethod::TwoStep,
        }
    };
    Ok((cs, Some(test)))
}
