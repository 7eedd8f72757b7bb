//! Global maximizers of the free energy, phase classification and the landmark
//! objects of the phase diagram.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{f_raw, k_raw, ray_coords, x_of_s, ModelSpec, ProbVector, S_MAX};
use crate::roots::{bisect, newton_polish};

/// Cells of the uniform scan grid on `[0, 1 - 1e-9]`.
pub const GRID_CELLS: usize = 4096;
/// Absolute tolerance in f-value for treating two maxima as tied.
pub const TIE_TOL: f64 = 1e-9;
/// Tolerance on `|f''|` (and `|f''''|`) for the special classes.
pub const CLASS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationaryKind {
    LocalMax,
    LocalMin,
    /// `f'` touches zero without changing sign.
    Inflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub s: f64,
    pub f_value: f64,
    /// `f''` at `s`.
    pub f2: f64,
    pub kind: StationaryKind,
}

/// Global maximizers of `f` and of `H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximizerSet {
    /// Sorted global maximizers of `f`.
    pub s_values: Vec<f64>,
    pub f_values: Vec<f64>,
    /// `f''` at each entry of `s_values`.
    pub f2_values: Vec<f64>,
    /// Every global maximizer of `H`.
    pub vectors: Vec<ProbVector>,
    /// The ray parameter of each entry of `vectors`.
    pub vector_s: Vec<f64>,
    /// Indices into `vectors`, ascending in the first coordinate.
    pub ordering_by_first_coord: Vec<usize>,
    /// Indices into `vectors`, ascending in `sum_r m_r^p`.
    pub ordering_by_p_norm: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseTag {
    Regular,
    StronglyCritical,
    WeaklyCritical,
    SpecialTypeI,
    SpecialTypeII,
}

impl PhaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseTag::Regular => "Regular",
            PhaseTag::StronglyCritical => "StronglyCritical",
            PhaseTag::WeaklyCritical => "WeaklyCritical",
            PhaseTag::SpecialTypeI => "SpecialTypeI",
            PhaseTag::SpecialTypeII => "SpecialTypeII",
        }
    }

    pub fn is_special(&self) -> bool {
        matches!(self, PhaseTag::SpecialTypeI | PhaseTag::SpecialTypeII)
    }

    pub fn is_critical(&self) -> bool {
        matches!(self, PhaseTag::StronglyCritical | PhaseTag::WeaklyCritical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointClass {
    pub spec: ModelSpec,
    pub tag: PhaseTag,
    pub witness: MaximizerSet,
    pub warnings: Vec<String>,
}

impl PointClass {
    /// True at `(beta_c, 0)`, where `x_0` ties with the permutations of a positive maximizer.
    pub fn is_beta_c_point(&self) -> bool {
        self.tag == PhaseTag::StronglyCritical && self.spec.h == 0.0 && self.witness.s_values[0] == 0.0
    }

    /// The unique maximizer for the non-critical classes.
    pub fn unique_maximizer(&self) -> Option<(f64, &ProbVector)> {
        if self.witness.vectors.len() == 1 {
            Some((self.witness.vector_s[0], &self.witness.vectors[0]))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialType {
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialPoint {
    pub beta_tilde: f64,
    pub h_tilde: f64,
    pub s_pq: f64,
    pub kind: SpecialType,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalCurveSample {
    pub h: f64,
    pub beta: f64,
    pub s_low: f64,
    pub s_high: f64,
}

fn grid_point(i: usize, cells: usize) -> f64 {
    S_MAX * i as f64 / cells as f64
}

/// Roots of `f''` on `[0, 1 - 1e-9]`. `f''` does not depend on `h`.
fn second_derivative_roots(spec: &ModelSpec, cells: usize) -> Vec<f64> {
    let g2 = |s: f64| f_raw(spec, s, 2);
    let g3 = |s: f64| f_raw(spec, s, 3);
    let mut roots = Vec::new();
    let mut s_a = 0.0;
    let mut v_a = g2(s_a);
    let mut d_a = g3(s_a);
    for i in 0..cells {
        let s_b = grid_point(i + 1, cells);
        let v_b = g2(s_b);
        let d_b = g3(s_b);
        if v_a == 0.0 {
            roots.push(s_a);
        } else if v_a * v_b < 0.0 {
            roots.push(bisect(g2, s_a, s_b, v_a));
        } else if v_b != 0.0 && (v_a < 0.0) == (d_a > 0.0 && d_b < 0.0) && d_a * d_b < 0.0 {
            // f'' keeps its sign at both ends but has an interior extremum that
            // may cross zero: a hump when negative, a dip when positive.
            let m = bisect(g3, s_a, s_b, d_a);
            let v_m = g2(m);
            if v_m == 0.0 {
                roots.push(m);
            } else if (v_m < 0.0) != (v_a < 0.0) {
                roots.push(bisect(g2, s_a, m, v_a));
                roots.push(bisect(g2, m, s_b, v_m));
            }
        }
        s_a = s_b;
        v_a = v_b;
        d_a = d_b;
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    roots
}

/// All roots of `f'` on `[0, 1 - 1e-9]` with a custom scan resolution.
pub fn find_stationary_points_with(spec: &ModelSpec, cells: usize) -> Vec<StationaryPoint> {
    let g1 = |s: f64| f_raw(spec, s, 1);
    let g2 = |s: f64| f_raw(spec, s, 2);
    let mut breaks = vec![0.0];
    breaks.extend(second_derivative_roots(spec, cells).into_iter().filter(|&r| r > 0.0 && r < S_MAX));
    breaks.push(S_MAX);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let vals: Vec<f64> = breaks.iter().map(|&s| g1(s)).collect();

    let mut out: Vec<StationaryPoint> = Vec::new();
    let mut push = |s: f64, kind: StationaryKind| {
        if out.last().map_or(true, |p| (p.s - s).abs() > 1e-10) {
            out.push(StationaryPoint { s, f_value: f_raw(spec, s, 0), f2: g2(s), kind });
        }
    };
    // f' is monotone between consecutive breakpoints, so each piece holds at most one root.
    for w in 0..breaks.len() - 1 {
        let (lo, hi) = (breaks[w], breaks[w + 1]);
        let (v_lo, v_hi) = (vals[w], vals[w + 1]);
        if v_lo == 0.0 {
            let before = if w == 0 { 1.0 } else { vals[w - 1].signum() };
            let after = v_hi.signum();
            let kind = if before > 0.0 && after < 0.0 {
                StationaryKind::LocalMax
            } else if after > 0.0 && (w == 0 || before < 0.0) {
                StationaryKind::LocalMin
            } else {
                StationaryKind::Inflection
            };
            push(lo, kind);
        } else if v_hi != 0.0 && (v_lo < 0.0) != (v_hi < 0.0) {
            let r = bisect(g1, lo, hi, v_lo);
            let r = newton_polish(g1, g2, r, lo, hi, 3);
            let kind = if v_lo > 0.0 { StationaryKind::LocalMax } else { StationaryKind::LocalMin };
            push(r, kind);
        }
    }
    out
}

/// All roots of `f'` on `[0, 1 - 1e-9]`, including `s = 0` whenever `h = 0`.
pub fn find_stationary_points(spec: &ModelSpec) -> Vec<StationaryPoint> {
    find_stationary_points_with(spec, GRID_CELLS)
}

/// Local maxima of `f` achieving the global maximum within `tie_tol`.
pub fn global_maximizers_1d(spec: &ModelSpec, tie_tol: f64) -> Vec<StationaryPoint> {
    let maxima: Vec<StationaryPoint> = find_stationary_points(spec)
        .into_iter()
        .filter(|p| p.kind == StationaryKind::LocalMax)
        .collect();
    let top = maxima.iter().map(|p| p.f_value).fold(f64::NEG_INFINITY, f64::max);
    let best: Vec<StationaryPoint> = maxima.into_iter().filter(|p| p.f_value >= top - tie_tol).collect();
    debug_assert!(!best.is_empty() && best.len() <= 2, "unexpected maximizer count {}", best.len());
    best
}

fn permutations_of_ray(q: u32, s: f64) -> Vec<ProbVector> {
    let base = x_of_s(q, s).expect("maximizer lies on the ray").into_vec();
    (0..q as usize)
        .map(|j| {
            let mut v = vec![base[1]; q as usize];
            v[j] = base[0];
            ProbVector::new(v).expect("permutation of a probability vector")
        })
        .collect()
}

fn expand_maximizers(spec: &ModelSpec, pts: &[StationaryPoint]) -> MaximizerSet {
    let mut vectors = Vec::new();
    let mut vector_s = Vec::new();
    for pt in pts {
        if pt.s == 0.0 {
            vectors.push(ProbVector::uniform(spec.q));
            vector_s.push(0.0);
        } else if spec.h == 0.0 {
            for v in permutations_of_ray(spec.q, pt.s) {
                vectors.push(v);
                vector_s.push(pt.s);
            }
        } else {
            vectors.push(x_of_s(spec.q, pt.s).expect("maximizer lies on the ray"));
            vector_s.push(pt.s);
        }
    }
    let mut by_first: Vec<usize> = (0..vectors.len()).collect();
    by_first.sort_by(|&i, &j| vectors[i][0].total_cmp(&vectors[j][0]));
    let norms: Vec<f64> = vectors.iter().map(|v| v.p_norm_pow(spec.p)).collect();
    let mut by_norm: Vec<usize> = (0..vectors.len()).collect();
    by_norm.sort_by(|&i, &j| norms[i].total_cmp(&norms[j]));
    MaximizerSet {
        s_values: pts.iter().map(|p| p.s).collect(),
        f_values: pts.iter().map(|p| p.f_value).collect(),
        f2_values: pts.iter().map(|p| p.f2).collect(),
        vectors,
        vector_s,
        ordering_by_first_coord: by_first,
        ordering_by_p_norm: by_norm,
    }
}

/// Every global maximizer of `H`, with both orderings filled in.
pub fn full_maximizer_set(spec: &ModelSpec) -> MaximizerSet {
    expand_maximizers(spec, &global_maximizers_1d(spec, TIE_TOL))
}

/// Five-way classification of `(beta, h)`.
pub fn classify_point(spec: &ModelSpec, tol_class: f64) -> PointClass {
    let pts = global_maximizers_1d(spec, TIE_TOL);
    let witness = expand_maximizers(spec, &pts);
    let mut warnings = Vec::new();
    let tag = if pts.len() >= 2 {
        PhaseTag::StronglyCritical
    } else {
        let pt = pts[0];
        let f2 = pt.f2.abs();
        if f2 > tol_class && f2 < 10.0 * tol_class {
            warnings.push(format!("|f''(s*)| = {f2:.3e} is within a factor 10 of the classification tolerance"));
        }
        if f2 <= tol_class {
            let f4 = f_raw(spec, pt.s, 4);
            if f4 > tol_class {
                warnings.push(format!("f''''(s*) = {f4:.3e} is positive at a degenerate maximizer"));
            }
            if f4.abs() <= tol_class {
                PhaseTag::SpecialTypeII
            } else {
                PhaseTag::SpecialTypeI
            }
        } else if spec.h == 0.0 && pt.s > 0.0 {
            PhaseTag::WeaklyCritical
        } else {
            PhaseTag::Regular
        }
    };
    PointClass { spec: *spec, tag, witness, warnings }
}

fn beta_c_predicate(p: u32, q: u32, beta: f64) -> bool {
    let spec = ModelSpec { p, q, beta, h: 0.0 };
    if f_raw(&spec, 0.0, 2) > 0.0 {
        return true;
    }
    let f0 = f_raw(&spec, 0.0, 0);
    find_stationary_points(&spec)
        .iter()
        .any(|pt| pt.kind == StationaryKind::LocalMax && pt.s > 0.0 && pt.f_value >= f0)
}

/// Smallest `beta` at which `f_{beta,0}` attains its maximum at some `s > 0`.
pub fn compute_beta_c(p: u32, q: u32) -> Result<f64> {
    ModelSpec::new(p, q, 0.0, 0.0)?;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !beta_c_predicate(p, q, hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonConvergence("no positive maximizer found below beta = 1e6".into()));
        }
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if beta_c_predicate(p, q, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `sup f''_{beta,0}` on `[0, 1 - 1e-9]` and the largest point attaining it.
pub fn sup_second_derivative(p: u32, q: u32, beta: f64) -> (f64, f64) {
    let spec = ModelSpec { p, q, beta, h: 0.0 };
    let g2 = |s: f64| f_raw(&spec, s, 2);
    let g3 = |s: f64| f_raw(&spec, s, 3);
    let mut cands = Vec::new();
    if g3(0.0) <= 0.0 {
        cands.push(0.0);
    }
    let mut s_a = 0.0;
    let mut d_a = g3(s_a);
    for i in 0..GRID_CELLS {
        let s_b = grid_point(i + 1, GRID_CELLS);
        let d_b = g3(s_b);
        if d_a > 0.0 && d_b <= 0.0 {
            cands.push(if d_b == 0.0 { s_b } else { bisect(g3, s_a, s_b, d_a) });
        }
        s_a = s_b;
        d_a = d_b;
    }
    if cands.is_empty() {
        cands.push(0.0);
    }
    let best = cands.iter().map(|&s| g2(s)).fold(f64::NEG_INFINITY, f64::max);
    let scale = best.abs().max(1.0);
    let arg = cands
        .iter()
        .copied()
        .filter(|&s| g2(s) >= best - 1e-12 * scale)
        .fold(0.0, f64::max);
    (best, arg)
}

/// The unique special point `(beta~, h~)` together with `s_{p,q}` and its type.
pub fn compute_special_point(p: u32, q: u32) -> Result<SpecialPoint> {
    ModelSpec::new(p, q, 0.0, 0.0)?;
    let w = |beta: f64| sup_second_derivative(p, q, beta).0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while w(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonConvergence("sup f'' stays negative below beta = 1e6".into()));
        }
    }
    while hi - lo > 1e-15 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if w(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta_tilde = 0.5 * (lo + hi);
    let (_, s_pq) = sup_second_derivative(p, q, beta_tilde);
    let (a, b) = ray_coords(q as f64, s_pq);
    let h_tilde = (k_raw(beta_tilde, p, b, 1) - k_raw(beta_tilde, p, a, 1)).max(0.0);
    let spec = ModelSpec { p, q, beta: beta_tilde, h: h_tilde };
    let f4 = f_raw(&spec, s_pq, 4);
    let kind = if f4.abs() <= CLASS_TOL { SpecialType::II } else { SpecialType::I };
    Ok(SpecialPoint { beta_tilde, h_tilde, s_pq, kind })
}

/// Outermost local maxima of `f`, split at `s_pq`.
fn outer_maxima(spec: &ModelSpec, s_split: f64) -> (Option<StationaryPoint>, Option<StationaryPoint>) {
    let maxima: Vec<StationaryPoint> = find_stationary_points(spec)
        .into_iter()
        .filter(|p| p.kind == StationaryKind::LocalMax)
        .collect();
    let low = maxima.iter().copied().filter(|p| p.s < s_split).min_by(|a, b| a.s.total_cmp(&b.s));
    let high = maxima.iter().copied().filter(|p| p.s >= s_split).max_by(|a, b| a.s.total_cmp(&b.s));
    (low, high)
}

/// Signed advantage of the high maximum over the low one; +-1 when only one side exists.
fn tie_gap(spec: &ModelSpec, s_split: f64) -> f64 {
    match outer_maxima(spec, s_split) {
        (Some(l), Some(u)) => u.f_value - l.f_value,
        (Some(_), None) => -1.0,
        (None, Some(_)) => 1.0,
        (None, None) => f64::NAN,
    }
}

/// Where a point was moved by [`PhaseStructure::snap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SnapTarget {
    SpecialPoint,
    CriticalCurve,
    CriticalRay,
}

/// Landmarks of the `(beta, h)` phase diagram for fixed `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseStructure {
    pub p: u32,
    pub q: u32,
    pub beta_c: f64,
    pub special: SpecialPoint,
}

impl PhaseStructure {
    pub fn compute(p: u32, q: u32) -> Result<Self> {
        let beta_c = compute_beta_c(p, q)?;
        let special = compute_special_point(p, q)?;
        Ok(PhaseStructure { p, q, beta_c, special })
    }

    fn spec(&self, beta: f64, h: f64) -> ModelSpec {
        ModelSpec { p: self.p, q: self.q, beta, h }
    }

    /// True when the strongly critical curve has positive length.
    pub fn has_curve(&self) -> bool {
        self.special.h_tilde > 1e-12
    }

    /// Curve point `beta = phi(h)` for `0 <= h < h~`.
    pub fn phi(&self, h: f64) -> Result<CriticalCurveSample> {
        self.phi_below(h, self.beta_c + 1e-6)
    }

    fn phi_below(&self, h: f64, start_hi: f64) -> Result<CriticalCurveSample> {
        if !self.has_curve() {
            return Err(Error::Domain("the strongly critical curve is empty for this (p, q)".into()));
        }
        if !(h >= 0.0 && h < self.special.h_tilde) {
            return Err(Error::Domain(format!("h must lie in [0, {}), got {h}", self.special.h_tilde)));
        }
        let split = self.special.s_pq;
        let gap = |beta: f64| tie_gap(&self.spec(beta, h), split);
        let mut lo = self.special.beta_tilde;
        if !(gap(lo) < 0.0) {
            return Err(Error::NonConvergence(format!("no low-side advantage at beta~ for h = {h}")));
        }
        let mut hi = start_hi;
        let mut step = (hi - lo).max(1e-6);
        let mut tries = 0;
        while !(gap(hi) > 0.0) {
            lo = lo.max(hi);
            step *= 2.0;
            hi += step;
            tries += 1;
            if tries > 60 {
                return Err(Error::NonConvergence(format!("no bracket for the curve at h = {h}")));
            }
        }
        while hi - lo > 1e-14 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let beta = 0.5 * (lo + hi);
        match outer_maxima(&self.spec(beta, h), split) {
            (Some(l), Some(u)) => Ok(CriticalCurveSample { h, beta, s_low: l.s, s_high: u.s }),
            _ => Err(Error::NonConvergence(format!("fewer than two local maxima at the curve point h = {h}"))),
        }
    }

    /// `n` curve samples on the uniform grid `h_i = i h~ / n`, `i = 0..n`.
    pub fn curve(&self, n: usize) -> Result<Vec<CriticalCurveSample>> {
        if !self.has_curve() {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(n);
        let mut hi = self.beta_c + 1e-6;
        for i in 0..n {
            let h = self.special.h_tilde * i as f64 / n as f64;
            let sample = self.phi_below(h, hi)?;
            hi = sample.beta + 1e-9;
            out.push(sample);
        }
        Ok(out)
    }

    /// `S(beta)`: the `h` with `(beta, h)` in the closure of the critical set.
    pub fn critical_h_for_beta(&self, beta: f64) -> Result<Option<f64>> {
        if beta >= self.beta_c {
            return Ok(Some(0.0));
        }
        if !self.has_curve() || beta < self.special.beta_tilde {
            return Ok(None);
        }
        if beta == self.special.beta_tilde {
            return Ok(Some(self.special.h_tilde));
        }
        let split = self.special.s_pq;
        let gap = |h: f64| tie_gap(&self.spec(beta, h), split);
        let (mut lo, mut hi) = (0.0, self.special.h_tilde);
        if !(gap(lo) < 0.0 && gap(hi) > 0.0) {
            return Err(Error::NonConvergence(format!("curve crossing at beta = {beta} is not bracketed")));
        }
        while hi - lo > 1e-14 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    /// `T(h)` for `h > 0`: the `beta` with `(beta, h)` in the closure of the critical set.
    pub fn critical_beta_for_h(&self, h: f64) -> Result<Option<f64>> {
        if !(h > 0.0) {
            return Err(Error::Domain("T(h) is defined for h > 0".into()));
        }
        if !self.has_curve() || h > self.special.h_tilde {
            return Ok(None);
        }
        if h == self.special.h_tilde {
            return Ok(Some(self.special.beta_tilde));
        }
        Ok(Some(self.phi(h)?.beta))
    }

    /// Moves `(beta, h)` onto the nearest landmark within `tol` in each coordinate.
    pub fn snap(&self, beta: f64, h: f64, tol: f64) -> Result<Option<(f64, f64, SnapTarget)>> {
        let sp = self.special;
        if (beta - sp.beta_tilde).abs() <= tol && (h - sp.h_tilde).abs() <= tol {
            return Ok(Some((sp.beta_tilde, sp.h_tilde, SnapTarget::SpecialPoint)));
        }
        if self.has_curve() && h >= 0.0 && h < sp.h_tilde {
            let c = self.phi(h)?;
            if (c.beta - beta).abs() <= tol {
                return Ok(Some((c.beta, h, SnapTarget::CriticalCurve)));
            }
        }
        if h.abs() <= tol && beta >= self.beta_c - tol {
            return Ok(Some((beta.max(self.beta_c), 0.0, SnapTarget::CriticalRay)));
        }
        Ok(None)
    }
}

/// One cell of a phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCell {
    pub beta: f64,
    pub h: f64,
    pub tag: PhaseTag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub p: u32,
    pub q: u32,
    pub cells: Vec<PhaseCell>,
    pub landmarks: PhaseStructure,
    pub curve: Vec<CriticalCurveSample>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Classification on a `resolution x resolution` grid (endpoints included)
/// together with the landmarks and `curve_samples` points of the curve.
pub fn phase_diagram(
    p: u32,
    q: u32,
    beta_range: (f64, f64),
    h_range: (f64, f64),
    resolution: usize,
    curve_samples: usize,
) -> Result<PhaseDiagram> {
    ModelSpec::new(p, q, beta_range.0, h_range.0)?;
    ModelSpec::new(p, q, beta_range.1, h_range.1)?;
    if resolution == 0 || beta_range.0 > beta_range.1 || h_range.0 > h_range.1 {
        return Err(Error::InvalidParameter("empty phase-diagram rectangle".into()));
    }
    let betas = linspace(beta_range.0, beta_range.1, resolution);
    let hs = linspace(h_range.0, h_range.1, resolution);
    let cells: Vec<PhaseCell> = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| {
            let (beta, h) = (betas[idx / resolution], hs[idx % resolution]);
            let tag = classify_point(&ModelSpec { p, q, beta, h }, CLASS_TOL).tag;
            PhaseCell { beta, h, tag }
        })
        .collect();
    let landmarks = PhaseStructure::compute(p, q)?;
    let curve = landmarks.curve(curve_samples)?;
    Ok(PhaseDiagram { p, q, cells, landmarks, curve })
}
