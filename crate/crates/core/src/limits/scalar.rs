//! One-dimensional limit laws: Gaussians, half-normals, polynomially tilted
//! laws, their squares, generalized chi-squares, atom mixtures and the
//! composed distribution functions of the estimators.

use rand::distributions::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, simpson};
use crate::sampler::{stream_rng, BLOCK};

/// `ln(1e-14)`: drop of the log-density from its peak at which a tilted law is truncated.
pub const TAIL_LOG: f64 = -32.236_191_301_916_64;
/// Initial number of Simpson panels for a tilted law.
pub const BASE_INTERVALS: usize = 4096;
/// Relative Richardson error accepted for the normalization of a tilted law.
pub const RICHARDSON_TOL: f64 = 1e-12;
/// Nodes in the table behind a composed law.
pub const COMPOSED_NODES: usize = 1025;
/// Standard deviations covered by the practical range of Gaussian laws.
const GAUSS_SPAN: f64 = 9.0;
const MAX_INTERVALS: usize = 1 << 20;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Smallest `x` in `[lo, hi]` with `cdf(x) >= u`, by bisection.
fn invert_cdf<F: Fn(f64) -> f64>(cdf: F, u: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Density proportional to `exp(lead x^degree + linear x)` with `degree` in {4, 6}
/// and `lead < 0`, truncated where the log-density has dropped by `ln(1e-14)`.
#[derive(Debug, Clone)]
pub struct TiltedLaw {
    degree: u32,
    lead: f64,
    linear: f64,
    mode: f64,
    log_peak: f64,
    lo: f64,
    hi: f64,
    intervals: usize,
    /// `integral of exp(P(x) - P(mode))` over `[lo, hi]`.
    norm: f64,
    cdf_nodes: Vec<f64>,
    mean: f64,
    second_moment: f64,
}

impl TiltedLaw {
    pub fn new(degree: u32, lead: f64, linear: f64) -> Result<Self> {
        Self::with_intervals(degree, lead, linear, BASE_INTERVALS)
    }

    /// As [`TiltedLaw::new`], starting the panel doubling at `intervals` (rounded up to even).
    pub fn with_intervals(degree: u32, lead: f64, linear: f64, intervals: usize) -> Result<Self> {
        if degree != 4 && degree != 6 {
            return Err(Error::InvalidParameter(format!("tilted laws have degree 4 or 6, got {degree}")));
        }
        if !(lead < 0.0) || !lead.is_finite() {
            return Err(Error::InvalidParameter(format!("leading coefficient must be negative, got {lead}")));
        }
        if !linear.is_finite() {
            return Err(Error::InvalidParameter("linear coefficient must be finite".into()));
        }
        let r = -linear / (degree as f64 * lead);
        let mode = r.signum() * r.abs().powf(1.0 / (degree - 1) as f64);
        let mut law = TiltedLaw {
            degree,
            lead,
            linear,
            mode,
            log_peak: 0.0,
            lo: mode,
            hi: mode,
            intervals: (intervals.max(2) + 1) & !1,
            norm: 0.0,
            cdf_nodes: Vec::new(),
            mean: 0.0,
            second_moment: 0.0,
        };
        law.log_peak = law.exponent(mode);
        law.lo = law.edge(-1.0);
        law.hi = law.edge(1.0);
        law.integrate()?;
        Ok(law)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn lead(&self) -> f64 {
        self.lead
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn exponent(&self, x: f64) -> f64 {
        self.lead * x.powi(self.degree as i32) + self.linear * x
    }

    fn rel(&self, x: f64) -> f64 {
        (self.exponent(x) - self.log_peak).exp()
    }

    /// Point on side `dir` of the mode where the log-density is `TAIL_LOG` below its peak.
    fn edge(&self, dir: f64) -> f64 {
        let drop = |x: f64| self.exponent(x) - self.log_peak - TAIL_LOG;
        let mut step = 1.0;
        let mut far = self.mode + dir * step;
        while drop(far) > 0.0 {
            step *= 2.0;
            far = self.mode + dir * step;
        }
        let (mut near, mut far) = (self.mode, far);
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if mid == near || mid == far {
                break;
            }
            if drop(mid) > 0.0 {
                near = mid;
            } else {
                far = mid;
            }
        }
        far
    }

    fn integrate(&mut self) -> Result<()> {
        let mut n = self.intervals;
        loop {
            let h = (self.hi - self.lo) / n as f64;
            let nodes: Vec<f64> = (0..=n).map(|i| self.rel(self.lo + h * i as f64)).collect();
            let mut cum = Vec::with_capacity(n + 1);
            cum.push(0.0);
            let (mut total, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let a = self.lo + h * i as f64;
                let m = a + 0.5 * h;
                let b = a + h;
                let fm = self.rel(m);
                total += h / 6.0 * (nodes[i] + 4.0 * fm + nodes[i + 1]);
                m1 += h / 6.0 * (a * nodes[i] + 4.0 * m * fm + b * nodes[i + 1]);
                m2 += h / 6.0 * (a * a * nodes[i] + 4.0 * m * m * fm + b * b * nodes[i + 1]);
                cum.push(total);
            }
            let coarse: f64 = (0..n / 2)
                .map(|j| 2.0 * h / 6.0 * (nodes[2 * j] + 4.0 * nodes[2 * j + 1] + nodes[2 * j + 2]))
                .sum();
            if (total - coarse).abs() / 15.0 <= RICHARDSON_TOL * total {
                self.intervals = n;
                self.norm = total;
                self.cdf_nodes = cum.into_iter().map(|c| c / total).collect();
                self.mean = m1 / total;
                self.second_moment = m2 / total;
                return Ok(());
            }
            if n >= MAX_INTERVALS {
                return Err(Error::NonConvergence(format!(
                    "tilted-law normalization did not meet the Richardson check at {n} panels"
                )));
            }
            n *= 2;
        }
    }

    /// Log of the normalizing constant `integral of exp(P(x)) dx`.
    pub fn log_normalization(&self) -> f64 {
        self.log_peak + self.norm.ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.rel(x) / self.norm
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let h = (self.hi - self.lo) / self.intervals as f64;
        let i = (((x - self.lo) / h) as usize).min(self.intervals - 1);
        let a = self.lo + h * i as f64;
        let part = (x - a) / 6.0 * (self.rel(a) + 4.0 * self.rel(0.5 * (a + x)) + self.rel(x)) / self.norm;
        (self.cdf_nodes[i] + part).clamp(self.cdf_nodes[i], self.cdf_nodes[i + 1])
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            return self.hi;
        }
        let i = self.cdf_nodes.partition_point(|&c| c < u).clamp(1, self.intervals);
        let h = (self.hi - self.lo) / self.intervals as f64;
        let a = self.lo + h * (i - 1) as f64;
        invert_cdf(|x| self.cdf(x), u, a, a + h)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }
}

/// Law of `scale * X^2` for a symmetric tilted law `X`.
#[derive(Debug, Clone)]
pub struct SquaredLaw {
    base: TiltedLaw,
    scale: f64,
}

impl SquaredLaw {
    pub fn new(base: TiltedLaw, scale: f64) -> Result<Self> {
        if base.linear != 0.0 {
            return Err(Error::InvalidParameter("squared laws need a symmetric base law".into()));
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        Ok(SquaredLaw { base, scale })
    }

    pub fn base(&self) -> &TiltedLaw {
        &self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn root(&self, y: f64) -> f64 {
        (y / self.scale).sqrt()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let r = self.root(y);
        self.base.pdf(r) / (self.scale * r)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let r = self.root(y);
        (self.base.cdf(r) - self.base.cdf(-r)).clamp(0.0, 1.0)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let r = self.base.quantile(0.5 + 0.5 * u.clamp(0.0, 1.0));
        self.scale * r * r
    }

    pub fn mean(&self) -> f64 {
        self.scale * self.base.second_moment
    }
}

#[derive(Debug, Clone)]
enum ChiSqRepr {
    /// `scale` times a chi-square with `dof` degrees of freedom.
    Exact { scale: f64, dof: usize, law: ChiSquared },
    /// Sorted Monte-Carlo draws with a Gaussian kernel density.
    Sampled { sorted: Vec<f64>, bandwidth: f64 },
}

/// Law of `sum_i lambda_i Z_i^2` for i.i.d. standard normals `Z_i`.
#[derive(Debug, Clone)]
pub struct GenChiSq {
    weights: Vec<f64>,
    repr: ChiSqRepr,
}

/// Draws used when the weights are not all equal.
pub const CHISQ_MC_DRAWS: usize = 200_000;
const ISOTROPY_TOL: f64 = 1e-10;

impl GenChiSq {
    /// Zero weights are dropped; equal weights give the exact scaled chi-square.
    pub fn new(weights: &[f64], seed: u64) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("chi-square weights must be finite and non-negative".into()));
        }
        let top = weights.iter().cloned().fold(0.0, f64::max);
        let kept: Vec<f64> = weights.iter().cloned().filter(|&w| w > ISOTROPY_TOL * top).collect();
        if kept.is_empty() {
            return Err(Error::Degenerate("all chi-square weights vanish".into()));
        }
        let isotropic = kept.iter().all(|&w| (w - top).abs() <= ISOTROPY_TOL * top);
        let repr = if isotropic {
            let law = ChiSquared::new(kept.len() as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            ChiSqRepr::Exact { scale: top, dof: kept.len(), law }
        } else {
            let mut sorted = draw_weighted_chisq(&kept, CHISQ_MC_DRAWS, seed);
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len() as f64;
            let mean = sorted.iter().sum::<f64>() / n;
            let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            ChiSqRepr::Sampled { sorted, bandwidth: 1.06 * sd * n.powf(-0.2) }
        };
        Ok(GenChiSq { weights: kept, repr })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, ChiSqRepr::Exact { .. })
    }

    pub fn pdf(&self, y: f64) -> f64 {
        match &self.repr {
            ChiSqRepr::Exact { scale, law, .. } => {
                if y <= 0.0 {
                    0.0
                } else {
                    law.pdf(y / scale) / scale
                }
            }
            ChiSqRepr::Sampled { sorted, bandwidth } => {
                // Reflected at zero so that no mass leaks onto the negative axis.
                if y < 0.0 {
                    return 0.0;
                }
                let z = std_normal();
                let lo = sorted.partition_point(|&s| s < y - 10.0 * bandwidth);
                let hi = sorted.partition_point(|&s| s <= y + 10.0 * bandwidth);
                let k: f64 = sorted[lo..hi].iter().map(|&s| z.pdf((y - s) / bandwidth)).sum();
                let refl: f64 = sorted[..sorted.partition_point(|&s| s <= 10.0 * bandwidth - y)]
                    .iter()
                    .map(|&s| z.pdf((y + s) / bandwidth))
                    .sum();
                (k + refl) / (sorted.len() as f64 * bandwidth)
            }
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match &self.repr {
            ChiSqRepr::Exact { scale, law, .. } => law.cdf(y / scale),
            ChiSqRepr::Sampled { sorted, .. } => sorted.partition_point(|&s| s <= y) as f64 / sorted.len() as f64,
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.repr {
            ChiSqRepr::Exact { .. } => {
                let (_, hi) = self.range();
                invert_cdf(|y| self.cdf(y), u, 0.0, hi)
            }
            ChiSqRepr::Sampled { sorted, .. } => {
                let i = ((u * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
                sorted[i - 1]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn range(&self) -> (f64, f64) {
        match &self.repr {
            ChiSqRepr::Exact { scale, dof, .. } => (0.0, scale * (*dof as f64 + 80.0)),
            ChiSqRepr::Sampled { sorted, bandwidth } => (0.0, sorted[sorted.len() - 1] + 10.0 * bandwidth),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let z = std_normal();
        self.weights.iter().map(|w| w * z.sample(rng).powi(2)).sum()
    }
}

fn draw_weighted_chisq(weights: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let z = std_normal();
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let len = BLOCK.min(n - b * BLOCK);
            (0..len).map(|_| weights.iter().map(|w| w * z.sample(&mut rng).powi(2)).sum()).collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Atom of an [`MixtureLaw`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AtomAt {
    NegInf,
    At(f64),
    PosInf,
}

/// Weighted continuous components plus point masses, possibly at `-inf`/`+inf`.
#[derive(Debug, Clone)]
pub struct MixtureLaw {
    components: Vec<(f64, ScalarLaw)>,
    atoms: Vec<(AtomAt, f64)>,
}

/// Tolerance on the total mass of a mixture.
pub const MASS_TOL: f64 = 1e-12;

impl MixtureLaw {
    pub fn new(components: Vec<(f64, ScalarLaw)>, atoms: Vec<(AtomAt, f64)>) -> Result<Self> {
        let weights = components.iter().map(|c| c.0).chain(atoms.iter().map(|a| a.1));
        let mut total = 0.0;
        for w in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("mixture weight {w} is not a probability")));
            }
            total += w;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidParameter(format!("mixture masses sum to {total}")));
        }
        if atoms.iter().any(|a| matches!(a.0, AtomAt::At(x) if !x.is_finite())) {
            return Err(Error::InvalidParameter("finite atoms need finite locations".into()));
        }
        Ok(MixtureLaw { components, atoms })
    }

    pub fn components(&self) -> &[(f64, ScalarLaw)] {
        &self.components
    }

    pub fn atoms(&self) -> &[(AtomAt, f64)] {
        &self.atoms
    }

    /// Sum of all component weights and atom masses.
    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.0).sum::<f64>() + self.atoms.iter().map(|a| a.1).sum::<f64>()
    }

    fn atom_mass(&self, pred: impl Fn(AtomAt) -> bool) -> f64 {
        self.atoms.iter().filter(|a| pred(a.0)).map(|a| a.1).sum()
    }

    fn infinite_mass(&self) -> f64 {
        self.atom_mass(|a| !matches!(a, AtomAt::At(_)))
    }

    fn cdf_with(&self, x: f64, inclusive: bool) -> f64 {
        let cont: f64 = self.components.iter().map(|(w, law)| w * law.cdf(x)).sum();
        let atoms = self.atom_mass(|a| match a {
            AtomAt::NegInf => true,
            AtomAt::PosInf => false,
            AtomAt::At(l) => l < x || (inclusive && l == x),
        });
        (cont + atoms).clamp(0.0, 1.0)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut u: f64 = rng.gen();
        for (w, law) in &self.components {
            if u < *w {
                return law.draw(rng);
            }
            u -= w;
        }
        for (at, m) in &self.atoms {
            if u < *m {
                return at.value();
            }
            u -= m;
        }
        // Rounding left a sliver of mass: fall back to the last entry.
        match (self.atoms.last(), self.components.last()) {
            (Some((at, _)), _) => at.value(),
            (None, Some((_, law))) => law.draw(rng),
            (None, None) => unreachable!("mixtures are never empty"),
        }
    }
}

impl AtomAt {
    pub fn value(&self) -> f64 {
        match self {
            AtomAt::NegInf => f64::NEG_INFINITY,
            AtomAt::At(x) => *x,
            AtomAt::PosInf => f64::INFINITY,
        }
    }
}

/// Which argument the outer cdf of a composed law receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// `t -> R(-mu(t))`, a distribution function when the tilt slope is negative.
    Negated,
    /// `t -> R(mu(t))`, the composition as literally written; decreasing in `t`.
    Literal,
}

/// Distribution function `G(t) = R(-mu(t))` where `R` is the cdf of the
/// symmetric tilted law and `mu(t)` is the mean of the same law with linear
/// coefficient `slope * t`.
#[derive(Debug, Clone)]
pub struct ComposedLaw {
    outer: TiltedLaw,
    slope: f64,
    t_lo: f64,
    t_hi: f64,
    table_t: Vec<f64>,
    /// `-mu(t)` at the table nodes.
    table_g: Vec<f64>,
    /// `d(-mu)/dt = -slope Var_t` at the table nodes.
    table_dg: Vec<f64>,
}

impl ComposedLaw {
    pub fn new(degree: u32, lead: f64, slope: f64) -> Result<Self> {
        if !(slope < 0.0) {
            return Err(Error::InvalidParameter(format!("composed laws need a negative tilt slope, got {slope}")));
        }
        let outer = TiltedLaw::new(degree, lead, 0.0)?;
        let g = |t: f64| -> Result<f64> { Ok(-TiltedLaw::new(degree, lead, slope * t)?.mean()) };
        let (lo, hi) = outer.range();
        let t_lo = Self::solve(&g, lo, -1.0)?;
        let t_hi = Self::solve(&g, hi, 1.0)?;
        let table_t: Vec<f64> =
            (0..COMPOSED_NODES).map(|i| t_lo + (t_hi - t_lo) * i as f64 / (COMPOSED_NODES - 1) as f64).collect();
        let inner: Vec<TiltedLaw> =
            table_t.par_iter().map(|&t| TiltedLaw::new(degree, lead, slope * t)).collect::<Result<_>>()?;
        let table_g = inner.iter().map(|l| -l.mean()).collect();
        let table_dg = inner.iter().map(|l| -slope * l.variance()).collect();
        Ok(ComposedLaw { outer, slope, t_lo, t_hi, table_t, table_g, table_dg })
    }

    /// The `t` on side `dir` of zero with `g(t) = target`; `g` is increasing.
    fn solve(g: &impl Fn(f64) -> Result<f64>, target: f64, dir: f64) -> Result<f64> {
        let mut far = dir;
        let mut tries = 0;
        while (g(far)? - target) * dir < 0.0 {
            far *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::NonConvergence("composed-law support is not bracketed".into()));
            }
        }
        let (mut a, mut b) = if dir < 0.0 { (far, 0.0) } else { (0.0, far) };
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if g(mid)? < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    pub fn outer(&self) -> &TiltedLaw {
        &self.outer
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    fn inner(&self, t: f64) -> TiltedLaw {
        TiltedLaw::new(self.outer.degree, self.outer.lead, self.slope * t).expect("inner law parameters were validated")
    }

    /// Mean of the inner law at tilt parameter `t`.
    pub fn inner_mean(&self, t: f64) -> f64 {
        self.inner(t).mean()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.cdf_oriented(t, Orientation::Negated)
    }

    /// The composition under either orientation; only `Negated` is a distribution function.
    pub fn cdf_oriented(&self, t: f64, orientation: Orientation) -> f64 {
        let mu = self.inner_mean(t);
        match orientation {
            Orientation::Negated => self.outer.cdf(-mu),
            Orientation::Literal => self.outer.cdf(mu),
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        let inner = self.inner(t);
        self.outer.pdf(-inner.mean()) * (-self.slope * inner.variance())
    }

    fn table_pdf(&self) -> Vec<f64> {
        self.table_g.iter().zip(&self.table_dg).map(|(&g, &dg)| self.outer.pdf(g) * dg).collect()
    }

    fn table_integral(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let h = (self.t_hi - self.t_lo) / (COMPOSED_NODES - 1) as f64;
        let pdf = self.table_pdf();
        let mut s = 0.0;
        for i in 0..(COMPOSED_NODES - 1) / 2 {
            let (a, m, b) = (2 * i, 2 * i + 1, 2 * i + 2);
            s += h / 3.0
                * (weight(self.table_t[a]) * pdf[a] + 4.0 * weight(self.table_t[m]) * pdf[m] + weight(self.table_t[b]) * pdf[b]);
        }
        s
    }

    /// `integral of pdf` by Simpson's rule on the table nodes.
    pub fn pdf_integral(&self) -> f64 {
        self.table_integral(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.table_integral(|t| t) / self.pdf_integral()
    }

    /// Quantile from the cubic Hermite interpolant of `-mu` on the table.
    pub fn quantile(&self, u: f64) -> f64 {
        let x = self.outer.quantile(u.clamp(0.0, 1.0));
        let last = COMPOSED_NODES - 1;
        if x <= self.table_g[0] {
            return self.t_lo;
        }
        if x >= self.table_g[last] {
            return self.t_hi;
        }
        let k = self.table_g.partition_point(|&g| g <= x).clamp(1, last) - 1;
        let (t0, t1) = (self.table_t[k], self.table_t[k + 1]);
        let h = t1 - t0;
        let (g0, g1, d0, d1) = (self.table_g[k], self.table_g[k + 1], self.table_dg[k], self.table_dg[k + 1]);
        let herm = |t: f64| {
            let s = (t - t0) / h;
            let (s2, s3) = (s * s, s * s * s);
            (2.0 * s3 - 3.0 * s2 + 1.0) * g0
                + (s3 - 2.0 * s2 + s) * h * d0
                + (-2.0 * s3 + 3.0 * s2) * g1
                + (s3 - s2) * h * d1
        };
        invert_cdf(herm, x, t0, t1)
    }
}

/// A one-dimensional limit law.
#[derive(Debug, Clone)]
pub enum ScalarLaw {
    Normal { mean: f64, sd: f64 },
    HalfNormalPlus { sd: f64 },
    HalfNormalMinus { sd: f64 },
    Tilted(TiltedLaw),
    Squared(SquaredLaw),
    GeneralizedChiSq(GenChiSq),
    Mixture(MixtureLaw),
    Composed(ComposedLaw),
}

fn check_sd(sd: f64) -> Result<()> {
    if sd > 0.0 && sd.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("standard deviation must be positive, got {sd}")))
    }
}

impl ScalarLaw {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        check_sd(variance.sqrt())?;
        if !mean.is_finite() {
            return Err(Error::InvalidParameter("normal mean must be finite".into()));
        }
        Ok(ScalarLaw::Normal { mean, sd: variance.sqrt() })
    }

    pub fn half_normal_plus(variance: f64) -> Result<Self> {
        check_sd(variance.sqrt())?;
        Ok(ScalarLaw::HalfNormalPlus { sd: variance.sqrt() })
    }

    pub fn half_normal_minus(variance: f64) -> Result<Self> {
        check_sd(variance.sqrt())?;
        Ok(ScalarLaw::HalfNormalMinus { sd: variance.sqrt() })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ScalarLaw::Normal { .. } => "Normal",
            ScalarLaw::HalfNormalPlus { .. } => "HalfNormalPlus",
            ScalarLaw::HalfNormalMinus { .. } => "HalfNormalMinus",
            ScalarLaw::Tilted(t) if t.degree == 4 => "QuarticTilt",
            ScalarLaw::Tilted(_) => "SexticTilt",
            ScalarLaw::Squared(_) => "SquaredTilt",
            ScalarLaw::GeneralizedChiSq(_) => "GeneralizedChiSq",
            ScalarLaw::Mixture(_) => "AtomMixture",
            ScalarLaw::Composed(_) => "Composed",
        }
    }

    /// Interval outside which the law has (numerically) no continuous mass.
    pub fn range(&self) -> (f64, f64) {
        match self {
            ScalarLaw::Normal { mean, sd } => (mean - GAUSS_SPAN * sd, mean + GAUSS_SPAN * sd),
            ScalarLaw::HalfNormalPlus { sd } => (0.0, GAUSS_SPAN * sd),
            ScalarLaw::HalfNormalMinus { sd } => (-GAUSS_SPAN * sd, 0.0),
            ScalarLaw::Tilted(t) => t.range(),
            ScalarLaw::Squared(s) => {
                let (lo, hi) = s.base.range();
                (0.0, s.scale * lo.abs().max(hi.abs()).powi(2))
            }
            ScalarLaw::GeneralizedChiSq(g) => g.range(),
            ScalarLaw::Mixture(m) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (_, law) in &m.components {
                    let (a, b) = law.range();
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                for (at, _) in &m.atoms {
                    if let AtomAt::At(x) = at {
                        lo = lo.min(*x);
                        hi = hi.max(*x);
                    }
                }
                if lo > hi {
                    (0.0, 0.0)
                } else {
                    (lo, hi)
                }
            }
            ScalarLaw::Composed(c) => c.range(),
        }
    }

    /// Density of the continuous part; atoms contribute nothing.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            ScalarLaw::Normal { mean, sd } => Normal::new(*mean, *sd).expect("validated").pdf(x),
            ScalarLaw::HalfNormalPlus { sd } => {
                if x < 0.0 {
                    0.0
                } else {
                    2.0 * std_normal().pdf(x / sd) / sd
                }
            }
            ScalarLaw::HalfNormalMinus { sd } => {
                if x > 0.0 {
                    0.0
                } else {
                    2.0 * std_normal().pdf(x / sd) / sd
                }
            }
            ScalarLaw::Tilted(t) => t.pdf(x),
            ScalarLaw::Squared(s) => s.pdf(x),
            ScalarLaw::GeneralizedChiSq(g) => g.pdf(x),
            ScalarLaw::Mixture(m) => m.components.iter().map(|(w, law)| w * law.pdf(x)).sum(),
            ScalarLaw::Composed(c) => c.pdf(x),
        }
    }

    /// `P(X <= x)`, with atoms at `-inf` always and at `+inf` never included.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ScalarLaw::Normal { mean, sd } => Normal::new(*mean, *sd).expect("validated").cdf(x),
            ScalarLaw::HalfNormalPlus { sd } => {
                if x <= 0.0 {
                    0.0
                } else {
                    erf(x / (sd * std::f64::consts::SQRT_2))
                }
            }
            ScalarLaw::HalfNormalMinus { sd } => {
                if x >= 0.0 {
                    1.0
                } else {
                    1.0 - erf(-x / (sd * std::f64::consts::SQRT_2))
                }
            }
            ScalarLaw::Tilted(t) => t.cdf(x),
            ScalarLaw::Squared(s) => s.cdf(x),
            ScalarLaw::GeneralizedChiSq(g) => g.cdf(x),
            ScalarLaw::Mixture(m) => m.cdf_with(x, true),
            ScalarLaw::Composed(c) => c.cdf(x),
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            ScalarLaw::Mixture(m) => m.cdf_with(x, false),
            _ => self.cdf(x),
        }
    }

    /// Smallest `x` with `cdf(x) >= u`; infinite when `u` falls in an infinite atom.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            ScalarLaw::Normal { mean, sd } => {
                let (lo, hi) = self.range();
                Normal::new(*mean, *sd).expect("validated").inverse_cdf(u).clamp(lo, hi)
            }
            ScalarLaw::HalfNormalPlus { sd } => sd * std_normal().inverse_cdf(0.5 + 0.5 * u).min(GAUSS_SPAN),
            ScalarLaw::HalfNormalMinus { sd } => -sd * std_normal().inverse_cdf(1.0 - 0.5 * u).min(GAUSS_SPAN),
            ScalarLaw::Tilted(t) => t.quantile(u),
            ScalarLaw::Squared(s) => s.quantile(u),
            ScalarLaw::GeneralizedChiSq(g) => g.quantile(u),
            ScalarLaw::Mixture(m) => {
                let neg = m.atom_mass(|a| a == AtomAt::NegInf);
                let pos = m.atom_mass(|a| a == AtomAt::PosInf);
                if u <= neg && neg > 0.0 {
                    return f64::NEG_INFINITY;
                }
                if u > 1.0 - pos {
                    return f64::INFINITY;
                }
                let (lo, hi) = self.range();
                let (lo, hi) = (lo - 1.0, hi + 1.0);
                invert_cdf(|x| self.cdf(x), u, lo, hi)
            }
            ScalarLaw::Composed(c) => c.quantile(u),
        }
    }

    /// Expectation; `None` when mass sits at an infinite atom.
    pub fn mean(&self) -> Option<f64> {
        match self {
            ScalarLaw::Normal { mean, .. } => Some(*mean),
            ScalarLaw::HalfNormalPlus { sd } => Some(sd * (2.0 / std::f64::consts::PI).sqrt()),
            ScalarLaw::HalfNormalMinus { sd } => Some(-sd * (2.0 / std::f64::consts::PI).sqrt()),
            ScalarLaw::Tilted(t) => Some(t.mean()),
            ScalarLaw::Squared(s) => Some(s.mean()),
            ScalarLaw::GeneralizedChiSq(g) => Some(g.mean()),
            ScalarLaw::Mixture(m) => {
                if m.infinite_mass() > 0.0 {
                    return None;
                }
                let mut acc = 0.0;
                for (w, law) in &m.components {
                    acc += w * law.mean()?;
                }
                for (at, w) in &m.atoms {
                    acc += w * at.value();
                }
                Some(acc)
            }
            ScalarLaw::Composed(c) => Some(c.mean()),
        }
    }

    /// Numerical `integral of pdf` plus all atom masses.
    ///
    /// Laws with an integrable singularity at zero are integrated after the
    /// substitution `y = r^2`.
    pub fn total_mass(&self) -> f64 {
        let (lo, hi) = self.range();
        match self {
            ScalarLaw::Normal { .. } | ScalarLaw::HalfNormalPlus { .. } | ScalarLaw::HalfNormalMinus { .. } => {
                adaptive_simpson(|x| self.pdf(x), lo, hi, 1e-13, 32)
            }
            ScalarLaw::Tilted(_) => adaptive_simpson(|x| self.pdf(x), lo, hi, 1e-13, 64),
            ScalarLaw::Squared(_) | ScalarLaw::GeneralizedChiSq(_) => {
                adaptive_simpson(|r| 2.0 * r * self.pdf(r * r), 1e-150, hi.sqrt(), 1e-13, 64)
            }
            ScalarLaw::Mixture(m) => {
                m.components.iter().map(|(w, law)| w * law.total_mass()).sum::<f64>()
                    + m.atoms.iter().map(|a| a.1).sum::<f64>()
            }
            ScalarLaw::Composed(c) => c.pdf_integral(),
        }
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ScalarLaw::Normal { mean, sd } => mean + sd * std_normal().sample(rng),
            ScalarLaw::HalfNormalPlus { sd } => sd * std_normal().sample(rng).abs(),
            ScalarLaw::HalfNormalMinus { sd } => -sd * std_normal().sample(rng).abs(),
            ScalarLaw::GeneralizedChiSq(g) => g.draw(rng),
            ScalarLaw::Mixture(m) => m.draw(rng),
            _ => self.quantile(rng.gen()),
        }
    }

    /// `n` i.i.d. draws; block `b` of [`BLOCK`] draws uses RNG stream `b`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let blocks = n.div_ceil(BLOCK);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(seed, b as u64);
                let len = BLOCK.min(n - b * BLOCK);
                (0..len).map(|_| self.draw(&mut rng)).collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>()
            .concat()
    }

    /// `(x, pdf, cdf)` on `points` equally spaced abscissae over the practical range.
    pub fn density_table(&self, points: usize) -> Vec<[f64; 3]> {
        let (lo, hi) = self.range();
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                [x, self.pdf(x), self.cdf(x)]
            })
            .collect()
    }

    /// JSON descriptor `{kind, params, normalization, grid_spec}`.
    pub fn describe(&self) -> Value {
        let (params, normalization, grid) = match self {
            ScalarLaw::Normal { mean, sd } => (json!({"mean": mean, "variance": sd * sd}), json!(1.0), Value::Null),
            ScalarLaw::HalfNormalPlus { sd } | ScalarLaw::HalfNormalMinus { sd } => {
                (json!({"variance": sd * sd}), json!(1.0), Value::Null)
            }
            ScalarLaw::Tilted(t) => (
                json!({"degree": t.degree, "lead": t.lead, "linear": t.linear}),
                json!({"log_normalization": t.log_normalization()}),
                json!({"lo": t.lo, "hi": t.hi, "intervals": t.intervals}),
            ),
            ScalarLaw::Squared(s) => (
                json!({"scale": s.scale, "base": ScalarLaw::Tilted(s.base.clone()).describe()}),
                json!({"log_normalization": s.base.log_normalization()}),
                json!({"lo": s.base.lo, "hi": s.base.hi, "intervals": s.base.intervals}),
            ),
            ScalarLaw::GeneralizedChiSq(g) => (
                json!({"weights": g.weights, "exact": g.is_exact()}),
                json!(1.0),
                match &g.repr {
                    ChiSqRepr::Exact { .. } => Value::Null,
                    ChiSqRepr::Sampled { sorted, bandwidth } => json!({"draws": sorted.len(), "bandwidth": bandwidth}),
                },
            ),
            ScalarLaw::Mixture(m) => {
                let comps: Vec<Value> =
                    m.components.iter().map(|(w, law)| json!({"weight": w, "law": law.describe()})).collect();
                let atoms: Vec<Value> = m
                    .atoms
                    .iter()
                    .map(|(at, w)| match at {
                        AtomAt::NegInf => json!({"at": "-inf", "mass": w}),
                        AtomAt::PosInf => json!({"at": "+inf", "mass": w}),
                        AtomAt::At(x) => json!({"at": x, "mass": w}),
                    })
                    .collect();
                (json!({"components": comps, "atoms": atoms}), json!(m.total_weight()), Value::Null)
            }
            ScalarLaw::Composed(c) => (
                json!({
                    "degree": c.outer.degree,
                    "lead": c.outer.lead,
                    "slope": c.slope,
                    "orientation": "Negated",
                }),
                json!({"pdf_integral": c.pdf_integral()}),
                json!({"lo": c.t_lo, "hi": c.t_hi, "nodes": COMPOSED_NODES, "inner_intervals": c.outer.intervals}),
            ),
        };
        json!({"kind": self.kind(), "params": params, "normalization": normalization, "grid_spec": grid})
    }
}

impl Serialize for ScalarLaw {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.describe().serialize(serializer)
    }
}

/// `sup_x |F_n(x) - F(x)|`, checking both sides of every jump of either cdf.
pub fn ks_distance(samples: &[f64], law: &ScalarLaw) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("KS distance needs at least one sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("samples contain NaN".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let (below, at) = (i as f64 / n, j as f64 / n);
        d = d.max((law.cdf_left(x) - below).abs()).max((law.cdf(x) - at).abs());
        i = j;
    }
    Ok(d)
}

/// Asymptotic p-value of a KS distance `d` from `n` samples (Stephens' correction).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub se: f64,
    pub draws: usize,
}

/// Composite Simpson estimate of `integral of pdf` for a law without atoms, on
/// `intervals` panels over its range. Useful as a second opinion next to
/// [`ScalarLaw::total_mass`].
pub fn simpson_mass(law: &ScalarLaw, intervals: usize) -> f64 {
    let (lo, hi) = law.range();
    simpson(|x| law.pdf(x), lo, hi, intervals)
}
