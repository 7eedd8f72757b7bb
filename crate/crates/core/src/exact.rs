//! Exact finite-N law of the magnetization vector.
//!
//! The color-count vector `c` is sufficient, so all sums run over the
//! `C(N+q-1, q-1)` compositions of `N` into `q` parts instead of the `q^N`
//! colorings. The unnormalized log-weight of a composition is
//!
//! ```text
//! log N! - sum_r log c_r! + N (beta sum_r (c_r/N)^p + h c_1/N)
//! ```
//!
//! and its log-sum-exp equals `log(q^N Z_N)`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ProbVector};
use crate::phase::full_maximizer_set;

/// Default bound on the number of enumerated compositions.
pub const DEFAULT_CAP: u128 = 200_000_000;

/// `C(N+q-1, q-1)`.
pub fn composition_count(n: u32, q: u32) -> u128 {
    let k = q.saturating_sub(1) as u128;
    let m = n as u128 + k;
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r * (m - k + i) / i;
    }
    r
}

/// Color counts summing to `N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Composition {
    pub counts: Vec<u32>,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Self {
        Composition { counts }
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn magnetization(&self) -> ProbVector {
        ProbVector::from_counts(&self.counts).expect("composition of a positive integer")
    }
}

/// Steps `c` to its lexicographic successor among compositions with the same
/// sum and length. Returns false after the last one, `(N, 0, ..., 0)`.
fn advance(c: &mut [u32]) -> bool {
    let q = c.len();
    let mut tail = 0;
    for i in (0..q.saturating_sub(1)).rev() {
        tail += c[i + 1];
        if tail > 0 {
            c[i] += 1;
            for x in c[i + 1..].iter_mut() {
                *x = 0;
            }
            c[q - 1] = tail - 1;
            return true;
        }
    }
    false
}

/// Lexicographic stream of all compositions of `N` into `q` parts.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u32>,
    done: bool,
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        if self.done {
            return None;
        }
        let out = Composition { counts: self.current.clone() };
        self.done = !advance(&mut self.current);
        Some(out)
    }
}

fn check_size(n: u32, q: u32, cap: u128) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q must be at least 2, got {q}")));
    }
    let count = composition_count(n, q);
    if count > cap {
        return Err(Error::TooLarge { count, cap });
    }
    Ok(())
}

/// Compositions of `N` into `q` parts, from `(0, ..., 0, N)` to `(N, 0, ..., 0)`.
pub fn compositions_iter(n: u32, q: u32, cap: u128) -> Result<Compositions> {
    check_size(n, q, cap)?;
    let mut current = vec![0; q as usize];
    current[q as usize - 1] = n;
    Ok(Compositions { current, done: false })
}

/// Tables shared by every weight evaluation at fixed `(spec, N)`.
struct WeightTable {
    n: u32,
    beta: f64,
    h: f64,
    log_fact: Vec<f64>,
    /// `(c/N)^p` for `c = 0..=N`.
    pow: Vec<f64>,
}

impl WeightTable {
    fn new(spec: &ModelSpec, n: u32) -> Self {
        let nf = n as f64;
        WeightTable {
            n,
            beta: spec.beta,
            h: spec.h,
            log_fact: (0..=n).map(|c| ln_gamma(c as f64 + 1.0)).collect(),
            pow: (0..=n).map(|c| (c as f64 / nf).powi(spec.p as i32)).collect(),
        }
    }

    /// `(log multinomial coefficient, sum_r (c_r/N)^p)`.
    ///
    /// Terms are added in ascending count order so that both values are
    /// bitwise invariant under permutations of the coordinates.
    fn parts(&self, c: &[u32], scratch: &mut Vec<u32>) -> (f64, f64) {
        scratch.clear();
        scratch.extend_from_slice(c);
        scratch.sort_unstable();
        let mut lf = 0.0;
        let mut pn = 0.0;
        for &x in scratch.iter() {
            lf += self.log_fact[x as usize];
            pn += self.pow[x as usize];
        }
        (self.log_fact[self.n as usize] - lf, pn)
    }

    fn log_weight(&self, c: &[u32], scratch: &mut Vec<u32>) -> f64 {
        let (lm, pn) = self.parts(c, scratch);
        lm + self.beta * self.n as f64 * pn + self.h * c[0] as f64
    }
}

/// Unnormalized log-weight of one composition.
pub fn log_weight(spec: &ModelSpec, n: u32, c: &Composition) -> f64 {
    WeightTable::new(spec, n).log_weight(&c.counts, &mut Vec::new())
}

/// Running log-sum-exp with weighted sums of attached values.
#[derive(Debug, Clone)]
struct Lse {
    max: f64,
    sum: f64,
    acc: Vec<f64>,
}

impl Lse {
    fn new(k: usize) -> Self {
        Lse { max: f64::NEG_INFINITY, sum: 0.0, acc: vec![0.0; k] }
    }

    fn rescale(&mut self, new_max: f64) {
        if self.max > f64::NEG_INFINITY {
            let r = (self.max - new_max).exp();
            self.sum *= r;
            for a in self.acc.iter_mut() {
                *a *= r;
            }
        }
        self.max = new_max;
    }

    fn push(&mut self, lw: f64, g: &[f64]) {
        if lw > self.max {
            self.rescale(lw);
        }
        let e = (lw - self.max).exp();
        self.sum += e;
        for (a, v) in self.acc.iter_mut().zip(g) {
            *a += e * v;
        }
    }

    fn merge(&mut self, mut other: Lse) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.rescale(other.max);
        } else {
            other.rescale(self.max);
        }
        self.sum += other.sum;
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            *a += b;
        }
    }

    fn log_total(&self) -> f64 {
        self.max + self.sum.ln()
    }

    fn mean(&self, k: usize) -> f64 {
        self.acc[k] / self.sum
    }
}

/// Parallel fold over all compositions, chunked by the first count and merged
/// in ascending order so results do not depend on the thread count.
fn fold_compositions<A, I, S, M>(spec: &ModelSpec, n: u32, cap: u128, init: I, step: S, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &[u32], f64) + Sync,
    M: Fn(&mut A, A),
{
    spec.validate()?;
    check_size(n, spec.q, cap)?;
    let table = WeightTable::new(spec, n);
    let q = spec.q as usize;
    let parts: Vec<A> = (0..=n)
        .into_par_iter()
        .map(|c1| {
            let mut acc = init();
            let mut c = vec![0u32; q];
            c[0] = c1;
            c[q - 1] += n - c1;
            let mut scratch = Vec::with_capacity(q);
            loop {
                let lw = table.log_weight(&c, &mut scratch);
                step(&mut acc, &c, lw);
                if !advance(&mut c[1..]) {
                    break;
                }
            }
            acc
        })
        .collect();
    let mut it = parts.into_iter();
    let mut total = it.next().expect("at least one chunk");
    for part in it {
        merge(&mut total, part);
    }
    Ok(total)
}

fn moments_with<G>(spec: &ModelSpec, n: u32, cap: u128, k: usize, g: G) -> Result<Lse>
where
    G: Fn(&[u32], &mut [f64]) + Sync,
{
    fold_compositions(
        spec,
        n,
        cap,
        || (Lse::new(k), vec![0.0; k]),
        |(lse, buf), c, lw| {
            g(c, buf);
            lse.push(lw, buf);
        },
        |(a, _), (b, _)| a.merge(b),
    )
    .map(|(lse, _)| lse)
}

/// `log(q^N Z_N)`, the log-sum-exp of all composition weights.
pub fn log_partition(spec: &ModelSpec, n: u32) -> Result<f64> {
    log_partition_capped(spec, n, DEFAULT_CAP)
}

pub fn log_partition_capped(spec: &ModelSpec, n: u32, cap: u128) -> Result<f64> {
    Ok(moments_with(spec, n, cap, 0, |_, _| {})?.log_total())
}

/// Partition function and the two estimating functions from one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMoments {
    pub log_partition: f64,
    /// `E[X_1]`.
    pub u1: f64,
    /// `E[sum_r X_r^p]`.
    pub up: f64,
}

pub fn exact_moments(spec: &ModelSpec, n: u32) -> Result<ExactMoments> {
    let nf = n as f64;
    let p = spec.p as i32;
    let lse = moments_with(spec, n, DEFAULT_CAP, 2, |c, out| {
        out[0] = c[0] as f64 / nf;
        out[1] = c.iter().map(|&x| (x as f64 / nf).powi(p)).sum();
    })?;
    Ok(ExactMoments { log_partition: lse.log_total(), u1: lse.mean(0), up: lse.mean(1) })
}

/// `u_{N,1} = E[X_1]`.
pub fn expect_u1(spec: &ModelSpec, n: u32) -> Result<f64> {
    Ok(exact_moments(spec, n)?.u1)
}

/// `u_{N,p} = E[sum_r X_r^p]`.
pub fn expect_up(spec: &ModelSpec, n: u32) -> Result<f64> {
    Ok(exact_moments(spec, n)?.up)
}

/// Exact expectation of `g(counts)`.
pub fn expect_functional<G>(spec: &ModelSpec, n: u32, g: G) -> Result<f64>
where
    G: Fn(&[u32]) -> f64 + Sync,
{
    let lse = moments_with(spec, n, DEFAULT_CAP, 1, |c, out| out[0] = g(c))?;
    Ok(lse.mean(0))
}

/// `log P(d(X_N, M) >= eps)` where `M` is the set of global maximizers of `H`
/// and `d` is Euclidean distance. `-inf` when the event is empty.
pub fn log_tail_prob(spec: &ModelSpec, n: u32, eps: f64) -> Result<f64> {
    let maxima: Vec<Vec<f64>> = full_maximizer_set(spec).vectors.into_iter().map(|v| v.into_vec()).collect();
    let nf = n as f64;
    let (total, tail) = fold_compositions(
        spec,
        n,
        DEFAULT_CAP,
        || (Lse::new(0), Lse::new(0)),
        |(all, sub), c, lw| {
            all.push(lw, &[]);
            let d2 = maxima
                .iter()
                .map(|m| m.iter().zip(c).map(|(mi, &ci)| (ci as f64 / nf - mi).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            if d2.sqrt() >= eps {
                sub.push(lw, &[]);
            }
        },
        |(a, b), (c, d)| {
            a.merge(c);
            b.merge(d);
        },
    )?;
    if tail.max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(tail.log_total() - total.log_total())
}

/// `P(d(X_N, M) >= eps)`.
pub fn tail_prob(spec: &ModelSpec, n: u32, eps: f64) -> Result<f64> {
    Ok(log_tail_prob(spec, n, eps)?.exp())
}

/// Normalized pmf of the color counts over the full composition support.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLaw {
    pub n: u32,
    pub q: u32,
    /// Flattened counts, `q` entries per composition, in lexicographic order.
    counts: Vec<u32>,
    log_probs: Vec<f64>,
}

pub fn magnetization_law(spec: &ModelSpec, n: u32) -> Result<ExactLaw> {
    magnetization_law_capped(spec, n, DEFAULT_CAP)
}

pub fn magnetization_law_capped(spec: &ModelSpec, n: u32, cap: u128) -> Result<ExactLaw> {
    let (counts, mut log_probs, lse) = fold_compositions(
        spec,
        n,
        cap,
        || (Vec::new(), Vec::new(), Lse::new(0)),
        |(cs, lws, lse): &mut (Vec<u32>, Vec<f64>, Lse), c, lw| {
            cs.extend_from_slice(c);
            lws.push(lw);
            lse.push(lw, &[]);
        },
        |a, b| {
            a.0.extend(b.0);
            a.1.extend(b.1);
            a.2.merge(b.2);
        },
    )?;
    let log_z = lse.log_total();
    for lp in log_probs.iter_mut() {
        *lp -= log_z;
    }
    Ok(ExactLaw { n, q: spec.q, counts, log_probs })
}

impl ExactLaw {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    /// Counts of the `i`-th composition.
    pub fn composition(&self, i: usize) -> &[u32] {
        let q = self.q as usize;
        &self.counts[i * q..(i + 1) * q]
    }

    pub fn log_prob(&self, i: usize) -> f64 {
        self.log_probs[i]
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn magnetization(&self, i: usize) -> ProbVector {
        ProbVector::from_counts(self.composition(i)).expect("composition of a positive integer")
    }

    /// The support as owned compositions.
    pub fn support(&self) -> Vec<Composition> {
        (0..self.len()).map(|i| Composition::new(self.composition(i).to_vec())).collect()
    }

    /// `|log sum_i p_i|`.
    pub fn normalization_error(&self) -> f64 {
        let m = self.log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self.log_probs.iter().map(|lp| (lp - m).exp()).sum();
        (m + s.ln()).abs()
    }

    /// `P(c_coord = j)` for `j = 0..=N`.
    pub fn marginal(&self, coord: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n as usize + 1];
        for i in 0..self.len() {
            out[self.composition(i)[coord] as usize] += self.log_probs[i].exp();
        }
        out
    }

    /// Expectation of `g(counts)` under the stored pmf.
    pub fn expect<G: Fn(&[u32]) -> f64>(&self, g: G) -> f64 {
        (0..self.len()).map(|i| self.log_probs[i].exp() * g(self.composition(i))).sum()
    }

    /// Little-endian dump: `N`, `q`, record count as `u64`, then per record
    /// `q` counts as `u32` followed by the log-probability as `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.q as u64).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for i in 0..self.len() {
            for &c in self.composition(i) {
                w.write_all(&c.to_le_bytes())?;
            }
            w.write_all(&self.log_probs[i].to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut b4 = [0u8; 4];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let n = read_u64(&mut r)?;
        let q = read_u64(&mut r)?;
        let count = read_u64(&mut r)?;
        if n == 0 || n > u32::MAX as u64 || q < 2 || q > u32::MAX as u64 {
            return Err(Error::Shape("corrupt exact-law header".into()));
        }
        if count as u128 != composition_count(n as u32, q as u32) {
            return Err(Error::Shape(format!("header declares {count} records for N = {n}, q = {q}")));
        }
        let mut counts = Vec::with_capacity(count as usize * q as usize);
        let mut log_probs = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut sum = 0u64;
            for _ in 0..q {
                r.read_exact(&mut b4)?;
                let c = u32::from_le_bytes(b4);
                sum += c as u64;
                counts.push(c);
            }
            if sum != n {
                return Err(Error::Shape("record counts do not sum to N".into()));
            }
            r.read_exact(&mut b8)?;
            log_probs.push(f64::from_le_bytes(b8));
        }
        Ok(ExactLaw { n: n as u32, q: q as u32, counts, log_probs })
    }
}

/// `h`-profile at fixed `beta`: per-`c_1` log-sums of the `h = 0` weights, so
/// that `u_{N,1}(beta, .)` costs `O(N)` per evaluation.
#[derive(Debug, Clone)]
pub struct FieldProfile {
    pub n: u32,
    log_l: Vec<f64>,
}

impl FieldProfile {
    pub fn new(spec: &ModelSpec, n: u32) -> Result<Self> {
        let base = spec.with_h(0.0);
        spec.validate()?;
        check_size(n, spec.q, DEFAULT_CAP)?;
        let table = WeightTable::new(&base, n);
        let q = spec.q as usize;
        let log_l = (0..=n)
            .into_par_iter()
            .map(|c1| {
                let mut lse = Lse::new(0);
                let mut c = vec![0u32; q];
                c[0] = c1;
                c[q - 1] += n - c1;
                let mut scratch = Vec::with_capacity(q);
                loop {
                    lse.push(table.log_weight(&c, &mut scratch), &[]);
                    if !advance(&mut c[1..]) {
                        break;
                    }
                }
                lse.log_total()
            })
            .collect();
        Ok(FieldProfile { n, log_l })
    }

    fn lse(&self, h: f64) -> Lse {
        let nf = self.n as f64;
        let mut lse = Lse::new(1);
        for (c1, l) in self.log_l.iter().enumerate() {
            lse.push(l + h * c1 as f64, &[c1 as f64 / nf]);
        }
        lse
    }

    pub fn log_partition(&self, h: f64) -> f64 {
        self.lse(h).log_total()
    }

    /// `u_{N,1}(beta, h)`.
    pub fn u1(&self, h: f64) -> f64 {
        self.lse(h).mean(0)
    }
}

/// `beta`-profile at fixed `h`: each composition reduced to
/// `(log multinomial + h c_1, sum_r (c_r/N)^p)`.
#[derive(Debug, Clone)]
pub struct CouplingProfile {
    pub n: u32,
    base: Vec<f64>,
    pnorm: Vec<f64>,
}

impl CouplingProfile {
    pub fn new(spec: &ModelSpec, n: u32) -> Result<Self> {
        let zero = spec.with_beta(0.0);
        let table = WeightTable::new(&zero, n);
        let (base, pnorm) = fold_compositions(
            &zero,
            n,
            DEFAULT_CAP,
            || (Vec::new(), Vec::new(), Vec::with_capacity(spec.q as usize)),
            |(b, pn, scratch): &mut (Vec<f64>, Vec<f64>, Vec<u32>), c, lw| {
                b.push(lw);
                pn.push(table.parts(c, scratch).1);
            },
            |a, b| {
                a.0.extend(b.0);
                a.1.extend(b.1);
            },
        )
        .map(|(b, pn, _)| (b, pn))?;
        Ok(CouplingProfile { n, base, pnorm })
    }

    fn lse(&self, beta: f64) -> Lse {
        let bn = beta * self.n as f64;
        let mut lse = Lse::new(1);
        for (b, pn) in self.base.iter().zip(&self.pnorm) {
            lse.push(b + bn * pn, &[*pn]);
        }
        lse
    }

    pub fn log_partition(&self, beta: f64) -> f64 {
        self.lse(beta).log_total()
    }

    /// `u_{N,p}(beta, h)`.
    pub fn up(&self, beta: f64) -> f64 {
        self.lse(beta).mean(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomials() {
        assert_eq!(composition_count(2, 2), 3);
        assert_eq!(composition_count(4, 3), 15);
        assert_eq!(composition_count(1000, 3), 501501);
    }

    #[test]
    fn lexicographic_small_case() {
        let all: Vec<Vec<u32>> = compositions_iter(2, 2, DEFAULT_CAP).unwrap().map(|c| c.counts).collect();
        assert_eq!(all, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let all: Vec<Composition> = compositions_iter(4, 3, DEFAULT_CAP).unwrap().collect();
        assert_eq!(all.len(), 15);
        assert!(all.windows(2).all(|w| w[0].counts < w[1].counts));
        assert!(all.iter().all(|c| c.n() == 4));
    }

    #[test]
    fn cap_is_enforced() {
        match compositions_iter(1000, 3, 1000) {
            Err(Error::TooLarge { count, cap }) => {
                assert_eq!(count, 501501);
                assert_eq!(cap, 1000);
            }
            other => panic!("expected size error, got {other:?}"),
        }
    }

    #[test]
    fn single_color_weight() {
        let spec = ModelSpec::new(3, 3, 0.7, 0.4).unwrap();
        let n = 10;
        let lw = log_weight(&spec, n, &Composition::new(vec![n, 0, 0]));
        assert!((lw - n as f64 * (0.7 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn free_model_partition() {
        let spec = ModelSpec::new(3, 3, 0.0, 0.0).unwrap();
        let lz = log_partition(&spec, 30).unwrap();
        assert!((lz - 30.0 * 3f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn law_normalizes_and_round_trips() {
        let spec = ModelSpec::new(3, 3, 1.1, 0.3).unwrap();
        let law = magnetization_law(&spec, 12).unwrap();
        assert_eq!(law.len(), 91);
        assert!(law.normalization_error() < 1e-12);
        let mut buf = Vec::new();
        law.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 91 * (3 * 4 + 8));
        let back = ExactLaw::read_binary(&buf[..]).unwrap();
        assert_eq!(back, law);
        assert!(ExactLaw::read_binary(&buf[..30]).is_err());
    }

    #[test]
    fn profiles_match_direct_sums() {
        let spec = ModelSpec::new(4, 3, 0.8, 0.35).unwrap();
        let n = 25;
        let m = exact_moments(&spec, n).unwrap();
        let fp = FieldProfile::new(&spec, n).unwrap();
        assert!((fp.u1(spec.h) - m.u1).abs() < 1e-13);
        assert!((fp.log_partition(spec.h) - m.log_partition).abs() < 1e-11);
        let cp = CouplingProfile::new(&spec, n).unwrap();
        assert!((cp.up(spec.beta) - m.up).abs() < 1e-13);
        assert!((cp.log_partition(spec.beta) - m.log_partition).abs() < 1e-11);
    }
}
