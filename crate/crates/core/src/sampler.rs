//! Exact and Markov-chain sampling of the magnetization vector, and the
//! rescaled fluctuation statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactLaw;
use crate::model::{u_vector, ModelSpec, ProbVector};
use crate::phase::{PhaseTag, PointClass};

/// Draws per independent RNG stream in the exact sampler.
pub const BLOCK: usize = 4096;

/// Random generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-cdf sampler over the support of an [`ExactLaw`].
#[derive(Debug, Clone)]
pub struct LawSampler<'a> {
    law: &'a ExactLaw,
    cdf: Vec<f64>,
}

impl<'a> LawSampler<'a> {
    pub fn new(law: &'a ExactLaw) -> Self {
        let mut cdf = Vec::with_capacity(law.len());
        let mut acc = 0.0;
        for &lp in law.log_probs() {
            acc += lp.exp();
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        LawSampler { law, cdf }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    /// Support indices of `n_samples` i.i.d. draws. Block `b` uses stream `b`,
    /// so the output does not depend on the number of worker threads.
    pub fn sample_indices(&self, n_samples: usize, seed: u64) -> Vec<usize> {
        let blocks = n_samples.div_ceil(BLOCK);
        let parts: Vec<Vec<usize>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(seed, b as u64);
                let len = BLOCK.min(n_samples - b * BLOCK);
                (0..len).map(|_| self.draw(&mut rng)).collect()
            })
            .collect();
        parts.concat()
    }

    pub fn sample(&self, n_samples: usize, seed: u64) -> Vec<ProbVector> {
        self.sample_indices(n_samples, seed).into_iter().map(|i| self.law.magnetization(i)).collect()
    }
}

/// `n_samples` i.i.d. magnetization vectors from `law`.
pub fn exact_sample(law: &ExactLaw, n_samples: usize, seed: u64) -> Vec<ProbVector> {
    if n_samples == 0 {
        return Vec::new();
    }
    LawSampler::new(law).sample(n_samples, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n: u32,
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("chain needs N >= 1".into()));
        }
        if self.sweeps <= self.burn_in {
            return Err(Error::InvalidParameter("sweeps must exceed burn_in".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// `beta N [((c+1)/N)^p - (c/N)^p]` for `c = 0..N`.
fn increment_table(spec: &ModelSpec, n: u32) -> Vec<f64> {
    let nf = n as f64;
    let p = spec.p as i32;
    (0..n).map(|c| spec.beta * nf * (((c + 1) as f64 / nf).powi(p) - (c as f64 / nf).powi(p))).collect()
}

fn fill_conditional(spec: &ModelSpec, incr: &[f64], others: &[u32], out: &mut [f64]) {
    let mut top = f64::NEG_INFINITY;
    for (r, o) in out.iter_mut().enumerate() {
        *o = incr[others[r] as usize] + if r == 0 { spec.h } else { 0.0 };
        top = top.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - top).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Heat-bath probabilities for the color of one site given the counts of the
/// other `N - 1` sites: proportional to the ratio of model weights after and
/// before adding the site to color `r`.
pub fn site_conditional(spec: &ModelSpec, n: u32, others: &[u32]) -> Result<Vec<f64>> {
    if others.len() != spec.q as usize {
        return Err(Error::Shape(format!("expected {} counts, got {}", spec.q, others.len())));
    }
    if others.iter().map(|&c| c as u64).sum::<u64>() + 1 != n as u64 {
        return Err(Error::Shape("counts must sum to N - 1".into()));
    }
    let incr = increment_table(spec, n);
    let mut out = vec![0.0; spec.q as usize];
    fill_conditional(spec, &incr, others, &mut out);
    Ok(out)
}

fn run_chain(spec: &ModelSpec, cfg: &ChainConfig, stream: u64) -> Vec<ProbVector> {
    let n = cfg.n as usize;
    let q = spec.q as usize;
    let incr = increment_table(spec, cfg.n);
    let mut rng = stream_rng(cfg.seed, stream);
    let mut colors: Vec<usize> = (0..n).map(|_| rng.gen_range(0..q)).collect();
    let mut counts = vec![0u32; q];
    for &c in &colors {
        counts[c] += 1;
    }
    let mut probs = vec![0.0; q];
    let mut out = Vec::with_capacity((cfg.sweeps - cfg.burn_in).div_ceil(cfg.thin));
    for sweep in 1..=cfg.sweeps {
        for color in colors.iter_mut() {
            counts[*color] -= 1;
            fill_conditional(spec, &incr, &counts, &mut probs);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut next = q - 1;
            for (r, pr) in probs.iter().enumerate() {
                acc += pr;
                if u < acc {
                    next = r;
                    break;
                }
            }
            *color = next;
            counts[next] += 1;
        }
        if sweep > cfg.burn_in && (sweep - cfg.burn_in - 1) % cfg.thin == 0 {
            out.push(ProbVector::from_counts(&counts).expect("counts sum to N"));
        }
    }
    out
}

/// Single-site heat-bath chain with a fixed scan order, started from a
/// uniformly random coloring.
pub fn gibbs_chain(spec: &ModelSpec, cfg: &ChainConfig) -> Result<Vec<ProbVector>> {
    spec.validate()?;
    cfg.validate()?;
    Ok(run_chain(spec, cfg, 0))
}

/// `n_chains` independent chains; chain `i` uses RNG stream `i`.
pub fn gibbs_chains(spec: &ModelSpec, cfg: &ChainConfig, n_chains: usize) -> Result<Vec<Vec<ProbVector>>> {
    spec.validate()?;
    cfg.validate()?;
    Ok((0..n_chains).into_par_iter().map(|i| run_chain(spec, cfg, i as u64)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleExponent {
    Half,
    Quarter,
    Sixth,
}

impl ScaleExponent {
    pub fn value(&self) -> f64 {
        match self {
            ScaleExponent::Half => 0.5,
            ScaleExponent::Quarter => 0.25,
            ScaleExponent::Sixth => 1.0 / 6.0,
        }
    }

    pub fn for_tag(tag: PhaseTag) -> Self {
        match tag {
            PhaseTag::SpecialTypeI => ScaleExponent::Quarter,
            PhaseTag::SpecialTypeII => ScaleExponent::Sixth,
            _ => ScaleExponent::Half,
        }
    }
}

/// Fluctuation statistics of one sample around its nearest maximizer.
///
/// With `d = raw - m`, `t_n = N^e <d, u> / (q(q-1))` and
/// `v_n = sqrt(N) (d - <d, u> u / (q(q-1)))`, so that
/// `d = N^{-e} t_n u + N^{-1/2} v_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledSample {
    pub raw: ProbVector,
    /// Index of the centering maximizer in the class witness.
    pub center: usize,
    /// `sqrt(N) (raw - m)`.
    pub w: Vec<f64>,
    pub t_n: f64,
    pub v_n: Vec<f64>,
    pub scale_exponent: ScaleExponent,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescales samples drawn at size `n` using the maximizers of `class`.
pub fn rescale(samples: &[ProbVector], n: u32, class: &PointClass) -> Result<Vec<RescaledSample>> {
    let q = class.spec.q as usize;
    let maxima = &class.witness.vectors;
    let exponent = ScaleExponent::for_tag(class.tag);
    let e = exponent.value();
    let nf = n as f64;
    let u = u_vector(class.spec.q);
    let uu = (q * (q - 1)) as f64;
    samples
        .iter()
        .map(|x| {
            if x.len() != q {
                return Err(Error::Shape(format!("sample has {} coordinates, expected {q}", x.len())));
            }
            let dist = |m: &ProbVector| -> f64 { x.as_slice().iter().zip(m.as_slice()).map(|(a, b)| (a - b).powi(2)).sum() };
            let center = (0..maxima.len())
                .min_by(|&i, &j| dist(&maxima[i]).total_cmp(&dist(&maxima[j])))
                .expect("maximizer set is never empty");
            let d: Vec<f64> = x.as_slice().iter().zip(maxima[center].as_slice()).map(|(a, b)| a - b).collect();
            let du = dot(&d, &u);
            let w = d.iter().map(|v| nf.sqrt() * v).collect();
            let v_n = d.iter().zip(&u).map(|(di, ui)| nf.sqrt() * (di - du * ui / uu)).collect();
            Ok(RescaledSample { raw: x.clone(), center, w, t_n: nf.powf(e) * du / uu, v_n, scale_exponent: exponent })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::magnetization_law;

    #[test]
    fn zero_samples() {
        let spec = ModelSpec::new(2, 2, 0.5, 0.1).unwrap();
        let law = magnetization_law(&spec, 10).unwrap();
        assert!(exact_sample(&law, 0, 1).is_empty());
    }

    #[test]
    fn same_seed_same_draws() {
        let spec = ModelSpec::new(3, 3, 0.9, 0.2).unwrap();
        let law = magnetization_law(&spec, 30).unwrap();
        let a = exact_sample(&law, 10_000, 42);
        let b = exact_sample(&law, 10_000, 42);
        assert_eq!(a, b);
        let c = exact_sample(&law, 10_000, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn conditional_sums_to_one() {
        let spec = ModelSpec::new(3, 3, 1.3, 0.4).unwrap();
        let p = site_conditional(&spec, 10, &[3, 4, 2]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(site_conditional(&spec, 10, &[3, 4, 3]).is_err());
    }

    #[test]
    fn chain_config_checks() {
        let bad = ChainConfig { n: 10, sweeps: 5, burn_in: 5, thin: 1, seed: 0 };
        assert!(bad.validate().is_err());
        let spec = ModelSpec::new(2, 2, 0.5, 0.0).unwrap();
        let cfg = ChainConfig { n: 10, sweeps: 25, burn_in: 5, thin: 3, seed: 7 };
        assert_eq!(gibbs_chain(&spec, &cfg).unwrap().len(), 7);
    }
}
