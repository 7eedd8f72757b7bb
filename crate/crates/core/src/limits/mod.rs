//! Limiting distributions of the magnetization, of `||X||_p^p` and of the
//! maximum-likelihood estimators, per phase class.

pub mod scalar;
pub mod vector;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distributions::Distribution;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub use scalar::{
    ks_distance, ks_p_value, AtomAt, ComposedLaw, GenChiSq, MixtureLaw, MonteCarloEstimate, Orientation, ScalarLaw,
    SquaredLaw, TiltedLaw,
};
pub use vector::{rank_of, GaussianComponent, VectorLaw};

use crate::error::{Error, Result};
use crate::model::{f_raw, k_raw, ray_coords, sigma_matrix, u_vector, ModelSpec, ProbVector};
use crate::phase::{PhaseTag, PointClass};
use crate::sampler::{stream_rng, BLOCK};

/// Leading coefficient of the sextic law.
pub const SEXTIC_LEAD: f64 = -32.0 / 15.0;
/// Seed for the Monte-Carlo parts of law construction.
pub const LAW_SEED: u64 = 0x5eed_1a77;

fn require(class: &PointClass, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Classification(format!("{what} is not available at a {} point", class.tag.as_str())))
    }
}

fn ip(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pow_vec(m: &ProbVector, e: u32) -> Vec<f64> {
    m.as_slice().iter().map(|x| x.powi(e as i32)).collect()
}

/// `P Sigma(s) P^T` for the maximizer `m`, where `P` moves the ray's first
/// coordinate to the position of the largest entry of `m`.
pub fn permuted_sigma(spec: &ModelSpec, s: f64, m: &ProbVector) -> Result<DMatrix<f64>> {
    let mut sigma = sigma_matrix(spec, s)?;
    if s > 0.0 {
        let j = (0..m.len()).max_by(|&i, &k| m[i].total_cmp(&m[k])).expect("non-empty vector");
        if j != 0 {
            sigma.swap_rows(0, j);
            sigma.swap_columns(0, j);
        }
    }
    Ok(sigma)
}

fn tilt_vector(spec: &ModelSpec, m: &ProbVector, beta_bar: f64, h_bar: f64) -> DVector<f64> {
    let p = spec.p;
    let mut v = DVector::from_iterator(m.len(), pow_vec(m, p - 1).into_iter().map(|x| beta_bar * p as f64 * x));
    v[0] += h_bar;
    v
}

/// Gaussian limit of `sqrt(N)(X - m_*)` under `(beta + beta_bar/sqrt(N), h + h_bar/sqrt(N))`.
pub fn gaussian_limit_regular(class: &PointClass, beta_bar: f64, h_bar: f64) -> Result<VectorLaw> {
    require(class, class.tag == PhaseTag::Regular, "the Gaussian limit")?;
    let (s, m) = class.unique_maximizer().expect("regular points have one maximizer");
    let sigma = sigma_matrix(&class.spec, s)?;
    let mean = &sigma * tilt_vector(&class.spec, m, beta_bar, h_bar);
    Ok(VectorLaw::GaussianSimplex(GaussianComponent::new(mean, sigma)?))
}

/// `ln tau(m)` for a maximizer on the ray at `s`.
fn log_tau(spec: &ModelSpec, s: f64, m: &ProbVector) -> Result<f64> {
    let f2 = f_raw(spec, s, 2);
    let (_, b) = ray_coords(spec.qf(), s);
    let k2b = k_raw(spec.beta, spec.p, b, 2);
    if !(f2 < 0.0 && k2b < 0.0) {
        return Err(Error::Classification(format!("tau needs f'' < 0 and k''(b) < 0, got {f2} and {k2b}")));
    }
    let prod: f64 = m.as_slice().iter().map(|x| x.ln()).sum();
    Ok(0.5 * (-(-f2).ln() + (2.0 - spec.qf()) * (-k2b).ln() - prod))
}

/// Asymptotic mass of each maximizer in `class.witness.vectors`, in that order.
pub fn mixture_weights(class: &PointClass) -> Result<Vec<f64>> {
    require(class, class.tag.is_critical(), "mixture weights")?;
    let w = &class.witness;
    let logs: Vec<f64> =
        w.vectors.iter().zip(&w.vector_s).map(|(m, &s)| log_tau(&class.spec, s, m)).collect::<Result<_>>()?;
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|r| r / total).collect())
}

/// Conditional Gaussian limits around each maximizer at a critical point,
/// weighted by [`mixture_weights`].
pub fn critical_local_limits(class: &PointClass, beta_bar: f64, h_bar: f64) -> Result<VectorLaw> {
    let weights = mixture_weights(class)?;
    let w = &class.witness;
    let comps = w
        .vectors
        .iter()
        .zip(&w.vector_s)
        .map(|(m, &s)| {
            let cov = permuted_sigma(&class.spec, s, m)?;
            let mean = &cov * tilt_vector(&class.spec, m, beta_bar, h_bar);
            GaussianComponent::new(mean, cov)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorLaw::mixture(weights, comps)
}

fn type1_site(class: &PointClass) -> Result<(f64, &ProbVector, f64)> {
    require(class, class.tag == PhaseTag::SpecialTypeI, "the quartic law")?;
    let (s, m) = class.unique_maximizer().expect("special points have one maximizer");
    let f4 = f_raw(&class.spec, s, 4);
    if !(f4 < 0.0) {
        return Err(Error::Classification(format!("quartic law needs f''''(s) < 0, got {f4}")));
    }
    Ok((s, m, f4))
}

fn quartic_lead(spec: &ModelSpec, f4: f64) -> f64 {
    spec.qf().powi(4) * f4 / 24.0
}

/// `p <m^{p-1}, u>`, the tilt per unit of `beta_bar`.
fn beta_tilt_slope(spec: &ModelSpec, m: &ProbVector) -> f64 {
    spec.p as f64 * ip(&pow_vec(m, spec.p - 1), &u_vector(spec.q))
}

/// Law of `T` at a type-I special point under `N^{-3/4}` perturbations.
pub fn quartic_law(class: &PointClass, beta_bar: f64, h_bar: f64) -> Result<ScalarLaw> {
    let (_, m, f4) = type1_site(class)?;
    let spec = &class.spec;
    let linear = beta_bar * beta_tilt_slope(spec, m) + h_bar * (1.0 - spec.qf());
    Ok(ScalarLaw::Tilted(TiltedLaw::new(4, quartic_lead(spec, f4), linear)?))
}

/// Law of the `u`-coefficient at the type-II special point.
pub fn sextic_law(h_bar: f64) -> Result<ScalarLaw> {
    Ok(ScalarLaw::Tilted(TiltedLaw::new(6, SEXTIC_LEAD, -h_bar)?))
}

/// Gaussian limit of the `V` part at a type-I special point (rank `q - 2`).
pub fn v_limit_covariance(class: &PointClass) -> Result<VectorLaw> {
    let (s, _, _) = type1_site(class)?;
    let spec = &class.spec;
    let q = spec.q as usize;
    let qf = spec.qf();
    let (_, b) = ray_coords(qf, s);
    let scale = 1.0 / (-(qf - 1.0) * k_raw(spec.beta, spec.p, b, 2));
    let cov = DMatrix::from_fn(q, q, |i, j| match (i, j) {
        (0, _) | (_, 0) => 0.0,
        _ if i == j => scale * (qf - 2.0),
        _ => -scale,
    });
    Ok(VectorLaw::GaussianSimplex(GaussianComponent::new(DVector::zeros(q), cov)?))
}

/// Joint limit `T u + V` at a type-I special point.
pub fn type1_limit(class: &PointClass, beta_bar: f64, h_bar: f64) -> Result<VectorLaw> {
    let t = quartic_law(class, beta_bar, h_bar)?;
    let v = match v_limit_covariance(class)? {
        VectorLaw::GaussianSimplex(g) => g,
        _ => unreachable!("v_limit_covariance returns a single Gaussian"),
    };
    Ok(VectorLaw::ProductTV { t, u: u_vector(class.spec.q), v })
}

/// `P(chi^2_{q-1} <= q - 1)`.
pub fn gamma1_exact(q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q must be at least 2, got {q}")));
    }
    let law = ChiSquared::new((q - 1) as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(law.cdf((q - 1) as f64))
}

/// `P(W^T W <= (1-q)/k''(1/q))` for `W ~ N(0, Sigma(0))`, by simulation
/// through the eigen-decomposition of `Sigma(0)`.
pub fn gamma1_monte_carlo(spec: &ModelSpec, draws: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let sigma = sigma_matrix(spec, 0.0)?;
    let eig = SymmetricEigen::new(sigma);
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let threshold = (1.0 - spec.qf()) / k_raw(spec.beta, spec.p, 1.0 / spec.qf(), 2);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let hits: usize = (0..draws.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let len = BLOCK.min(draws - b * BLOCK);
            (0..len)
                .filter(|_| {
                    // W^T W is invariant under the orthogonal change of basis.
                    let ww: f64 = roots.iter().map(|l| l * z.sample(&mut rng).powi(2)).sum();
                    ww <= threshold
                })
                .count()
        })
        .sum();
    let value = hits as f64 / draws as f64;
    Ok(MonteCarloEstimate { value, se: (value * (1.0 - value) / draws as f64).sqrt(), draws })
}

/// `P(T^2 <= E T^2)` for a symmetric tilted law.
fn mass_within_rms(law: &TiltedLaw) -> f64 {
    let r = law.second_moment().sqrt();
    law.cdf(r) - law.cdf(-r)
}

/// `alpha = P(T_{0,0}^2 <= E T_{0,0}^2)` at a type-I special point.
pub fn alpha(class: &PointClass) -> Result<f64> {
    let (_, _, f4) = type1_site(class)?;
    Ok(mass_within_rms(&TiltedLaw::new(4, quartic_lead(&class.spec, f4), 0.0)?))
}

/// `gamma_2 = P(F_0^2 <= E F_0^2)`.
pub fn gamma2() -> Result<f64> {
    Ok(mass_within_rms(&TiltedLaw::new(6, SEXTIC_LEAD, 0.0)?))
}

fn is_small_type1(spec: &ModelSpec) -> bool {
    spec.q == 2 && (spec.p == 2 || spec.p == 3)
}

/// One maximizer with its ray parameter and `f''`.
struct Site<'a> {
    s: f64,
    f2: f64,
    m: &'a ProbVector,
}

fn site(class: &PointClass, idx: usize) -> Site<'_> {
    let s = class.witness.vector_s[idx];
    Site { s, f2: f_raw(&class.spec, s, 2), m: &class.witness.vectors[idx] }
}

fn h_variance(spec: &ModelSpec, f2: f64) -> f64 {
    let q = spec.qf();
    -q * q * f2 / ((q - 1.0) * (q - 1.0))
}

/// `-q^2 f'' / ((q-1)(1 + (q-2) rho))`, the variance on the side of the
/// maximizers whose first coordinate is small.
fn h_variance_rotated(spec: &ModelSpec, s: f64, f2: f64) -> Result<f64> {
    let q = spec.qf();
    let (a, b) = ray_coords(q, s);
    let rho = k_raw(spec.beta, spec.p, a, 2) / k_raw(spec.beta, spec.p, b, 2);
    let denom = (q - 1.0) * (1.0 + (q - 2.0) * rho);
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!("1 + (q-2) rho = {} is not positive", denom / (q - 1.0))));
    }
    Ok(-q * q * f2 / denom)
}

fn beta_variance(spec: &ModelSpec, f2: f64, gap: f64) -> Result<f64> {
    if gap.abs() < 1e-12 {
        return Err(Error::Degenerate("m_1^{p-1} and m_2^{p-1} coincide".into()));
    }
    let (p, q) = (spec.p as f64, spec.qf());
    Ok(-q * q * f2 / (p * p * (q - 1.0) * (q - 1.0) * gap * gap))
}

/// `m_1^{p-1} - m_2^{p-1}`.
fn first_gap(spec: &ModelSpec, m: &ProbVector) -> f64 {
    m[0].powi(spec.p as i32 - 1) - m[1].powi(spec.p as i32 - 1)
}

fn mixture(components: Vec<(f64, ScalarLaw)>, atoms: Vec<(AtomAt, f64)>) -> Result<ScalarLaw> {
    Ok(ScalarLaw::Mixture(MixtureLaw::new(components, atoms)?))
}

fn two_sited(order: &[usize]) -> Result<(usize, usize)> {
    if order.len() != 2 {
        return Err(Error::Classification(format!(
            "expected two maximizers off the critical ray, found {}",
            order.len()
        )));
    }
    Ok((order[0], order[1]))
}

/// Limit of the rescaled `h`-estimator (`beta` known).
///
/// Rates: `N^{1/2}` at regular and critical points, `N^{3/4}` at type I and
/// `N^{5/6}` at type II.
pub fn hhat_limit(class: &PointClass) -> Result<ScalarLaw> {
    let spec = &class.spec;
    let q = spec.qf();
    match class.tag {
        PhaseTag::Regular => ScalarLaw::normal(0.0, h_variance(spec, site(class, 0).f2)),
        PhaseTag::SpecialTypeI => {
            let (_, _, f4) = type1_site(class)?;
            Ok(ScalarLaw::Composed(ComposedLaw::new(4, quartic_lead(spec, f4), 1.0 - q)?))
        }
        PhaseTag::SpecialTypeII => Ok(ScalarLaw::Composed(ComposedLaw::new(6, SEXTIC_LEAD, -1.0)?)),
        PhaseTag::StronglyCritical if class.is_beta_c_point() => {
            let w = mixture_weights(class)?;
            let order = &class.witness.ordering_by_first_coord;
            let pq = w[order[spec.q as usize - 1]];
            let pos = site(class, order[spec.q as usize]);
            let minus = h_variance_rotated(spec, pos.s, pos.f2)?;
            mixture(
                vec![
                    ((1.0 - pq) * (q - 1.0) / (2.0 * q), ScalarLaw::half_normal_minus(minus)?),
                    ((1.0 - pq) / (2.0 * q), ScalarLaw::half_normal_plus(h_variance(spec, pos.f2))?),
                ],
                vec![(AtomAt::At(0.0), (1.0 + pq) / 2.0)],
            )
        }
        PhaseTag::StronglyCritical => {
            let w = mixture_weights(class)?;
            let (i1, i2) = two_sited(&class.witness.ordering_by_first_coord)?;
            let p1 = w[i1];
            mixture(
                vec![
                    (p1 / 2.0, ScalarLaw::half_normal_minus(h_variance(spec, site(class, i1).f2))?),
                    ((1.0 - p1) / 2.0, ScalarLaw::half_normal_plus(h_variance(spec, site(class, i2).f2))?),
                ],
                vec![(AtomAt::At(0.0), 0.5)],
            )
        }
        PhaseTag::WeaklyCritical => {
            let w = mixture_weights(class)?;
            let order = &class.witness.ordering_by_first_coord;
            let pq = w[order[spec.q as usize - 1]];
            let st = site(class, order[spec.q as usize - 1]);
            mixture(
                vec![
                    ((1.0 - pq) / 2.0, ScalarLaw::half_normal_minus(h_variance_rotated(spec, st.s, st.f2)?)?),
                    (pq / 2.0, ScalarLaw::half_normal_plus(h_variance(spec, st.f2))?),
                ],
                vec![(AtomAt::At(0.0), 0.5)],
            )
        }
    }
}

/// Limit of the rescaled `beta`-estimator (`h` known).
pub fn bhat_limit(class: &PointClass) -> Result<ScalarLaw> {
    let spec = &class.spec;
    match class.tag {
        PhaseTag::Regular => {
            let st = site(class, 0);
            if st.s == 0.0 {
                let g1 = gamma1_exact(spec.q)?;
                mixture(vec![], vec![(AtomAt::NegInf, g1), (AtomAt::PosInf, 1.0 - g1)])
            } else {
                ScalarLaw::normal(0.0, beta_variance(spec, st.f2, first_gap(spec, st.m))?)
            }
        }
        PhaseTag::SpecialTypeI if is_small_type1(spec) => {
            let a = alpha(class)?;
            mixture(vec![], vec![(AtomAt::NegInf, a), (AtomAt::PosInf, 1.0 - a)])
        }
        PhaseTag::SpecialTypeI => {
            let (_, m, f4) = type1_site(class)?;
            Ok(ScalarLaw::Composed(ComposedLaw::new(4, quartic_lead(spec, f4), beta_tilt_slope(spec, m))?))
        }
        PhaseTag::SpecialTypeII => {
            let g2 = gamma2()?;
            mixture(vec![], vec![(AtomAt::NegInf, g2), (AtomAt::PosInf, 1.0 - g2)])
        }
        PhaseTag::StronglyCritical if class.is_beta_c_point() => {
            let w = mixture_weights(class)?;
            let order = &class.witness.ordering_by_p_norm;
            let p1 = w[order[0]];
            let g1 = gamma1_exact(spec.q)?;
            let pos = site(class, *order.last().expect("non-empty"));
            let var = beta_variance(spec, pos.f2, first_gap(spec, &ray_vector(spec.q, pos.s)?))?;
            mixture(
                vec![((1.0 - p1) / 2.0, ScalarLaw::half_normal_plus(var)?)],
                vec![(AtomAt::NegInf, p1 * g1), (AtomAt::At(0.0), (1.0 + p1) / 2.0 - p1 * g1)],
            )
        }
        PhaseTag::StronglyCritical => {
            let w = mixture_weights(class)?;
            let (i1, i2) = two_sited(&class.witness.ordering_by_p_norm)?;
            let (s1, s2) = (site(class, i1), site(class, i2));
            mixture(
                vec![
                    (w[i1] / 2.0, ScalarLaw::half_normal_minus(beta_variance(spec, s1.f2, first_gap(spec, s1.m))?)?),
                    (
                        (1.0 - w[i1]) / 2.0,
                        ScalarLaw::half_normal_plus(beta_variance(spec, s2.f2, first_gap(spec, s2.m))?)?,
                    ),
                ],
                vec![(AtomAt::At(0.0), 0.5)],
            )
        }
        PhaseTag::WeaklyCritical => {
            let st = site(class, 0);
            ScalarLaw::normal(0.0, beta_variance(spec, st.f2, first_gap(spec, &ray_vector(spec.q, st.s)?))?)
        }
    }
}

fn ray_vector(q: u32, s: f64) -> Result<ProbVector> {
    crate::model::x_of_s(q, s)
}

/// `p(p-1)/(2 q^{p-2}) W^T W` with `W ~ N(0, Sigma(0))`.
fn chi_square_at_uniform(spec: &ModelSpec) -> Result<ScalarLaw> {
    let (p, q) = (spec.p as f64, spec.qf());
    let scale = p * (p - 1.0) / (2.0 * q.powi(spec.p as i32 - 2));
    let eig = SymmetricEigen::new(sigma_matrix(spec, 0.0)?);
    let weights: Vec<f64> = eig.eigenvalues.iter().map(|l| scale * l.max(0.0)).collect();
    Ok(ScalarLaw::GeneralizedChiSq(GenChiSq::new(&weights, LAW_SEED)?))
}

/// `N(beta_bar V, V)` with `V = -p^2 (q-1)^2 gap^2 / (q^2 f'')`.
fn norm_gaussian(spec: &ModelSpec, f2: f64, gap: f64, beta_bar: f64) -> Result<ScalarLaw> {
    let (p, q) = (spec.p as f64, spec.qf());
    let var = -p * p * (q - 1.0) * (q - 1.0) * gap * gap / (q * q * f2);
    ScalarLaw::normal(beta_bar * var, var)
}

/// Limit of the rescaled `||X||_p^p - ||m_*||_p^p` under a perturbed `beta`.
///
/// Rates: `N^{1/2}` (Gaussian), `N` (chi-square at the uniform vector),
/// `N^{1/4}` (type I), `N^{1/2}` (type I with `(p, q)` in {(2,2), (3,2)}) and
/// `N^{1/3}` (type II). At critical points use [`norm_p_limit_conditional`].
pub fn norm_p_limit(class: &PointClass, beta_bar: f64) -> Result<ScalarLaw> {
    let spec = &class.spec;
    match class.tag {
        PhaseTag::Regular => {
            let st = site(class, 0);
            if st.s == 0.0 {
                chi_square_at_uniform(spec)
            } else {
                norm_gaussian(spec, st.f2, first_gap(spec, st.m), beta_bar)
            }
        }
        PhaseTag::SpecialTypeI if is_small_type1(spec) => {
            let (_, _, f4) = type1_site(class)?;
            let base = TiltedLaw::new(4, quartic_lead(spec, f4), 0.0)?;
            let p = spec.p as f64;
            let scale = p * (p - 1.0) / 2f64.powi(spec.p as i32 - 2);
            Ok(ScalarLaw::Squared(SquaredLaw::new(base, scale)?))
        }
        PhaseTag::SpecialTypeI => {
            let (_, m, f4) = type1_site(class)?;
            let k = spec.p as f64 * (spec.qf() - 1.0) * first_gap(spec, m);
            // Law of -k T with T tilted by beta_bar: substitute x = -y / k.
            let lead = quartic_lead(spec, f4) / k.powi(4);
            let linear = -beta_bar * beta_tilt_slope(spec, m) / k;
            Ok(ScalarLaw::Tilted(TiltedLaw::new(4, lead, linear)?))
        }
        PhaseTag::SpecialTypeII => {
            Ok(ScalarLaw::Squared(SquaredLaw::new(TiltedLaw::new(6, SEXTIC_LEAD, 0.0)?, 3.0)?))
        }
        PhaseTag::StronglyCritical | PhaseTag::WeaklyCritical => Err(Error::Classification(
            "the norm has an atomic limit at critical points; use norm_p_limit_conditional".into(),
        )),
    }
}

/// Limit of the rescaled norm conditional on the basin of maximizer `index`
/// of a critical point.
pub fn norm_p_limit_conditional(class: &PointClass, index: usize, beta_bar: f64) -> Result<ScalarLaw> {
    require(class, class.tag.is_critical(), "the conditional norm limit")?;
    if index >= class.witness.vectors.len() {
        return Err(Error::InvalidParameter(format!("maximizer index {index} out of range")));
    }
    let spec = &class.spec;
    let st = site(class, index);
    if st.s == 0.0 {
        return chi_square_at_uniform(spec);
    }
    let xs = st.m.as_slice();
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let e = spec.p as i32 - 1;
    norm_gaussian(spec, st.f2, hi.powi(e) - lo.powi(e), beta_bar)
}

/// Positions of the masses of the atomic norm limit at a critical point:
/// `(||m_k||_p^p, p_k)` in the order of `class.witness.vectors`.
pub fn norm_p_atoms(class: &PointClass) -> Result<Vec<(f64, f64)>> {
    let w = mixture_weights(class)?;
    Ok(class.witness.vectors.iter().zip(w).map(|(m, wk)| (m.p_norm_pow(class.spec.p), wk)).collect())
}
