//! Multivariate Gaussian limit laws on the zero-sum hyperplane.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distributions::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use statrs::distribution::Normal;

use super::scalar::{AtomAt, MixtureLaw, ScalarLaw};
use crate::error::{Error, Result};
use crate::sampler::{stream_rng, BLOCK};

/// Relative eigenvalue threshold used for rank counts.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianComponent {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != mean.len() {
            return Err(Error::Shape(format!(
                "mean of length {} with a {}x{} covariance",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::InvalidParameter("covariance is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(cov.clone());
        let top = eig.eigenvalues.amax();
        if eig.eigenvalues.iter().any(|&l| l < -RANK_TOL * top.max(1e-300)) {
            return Err(Error::InvalidParameter("covariance is not positive semi-definite".into()));
        }
        Ok(GaussianComponent { mean, cov })
    }

    pub fn rank(&self) -> usize {
        rank_of(&self.cov)
    }

    /// `L` with `L L^T = cov`, from the clipped eigen-decomposition.
    fn factor(&self) -> DMatrix<f64> {
        let eig = SymmetricEigen::new(self.cov.clone());
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&roots)
    }
}

/// Number of eigenvalues above `RANK_TOL` times the largest.
pub fn rank_of(cov: &DMatrix<f64>) -> usize {
    let eig = SymmetricEigen::new(cov.clone());
    let top = eig.eigenvalues.amax();
    if top == 0.0 {
        return 0;
    }
    eig.eigenvalues.iter().filter(|&&l| l > RANK_TOL * top).count()
}

/// A law on `R^q`.
#[derive(Debug, Clone)]
pub enum VectorLaw {
    GaussianSimplex(GaussianComponent),
    /// Components conditional on the basin of each maximizer.
    MixtureGaussianSimplex { weights: Vec<f64>, components: Vec<GaussianComponent> },
    /// `T u + V` with `T` scalar, `V` Gaussian and the two independent.
    ProductTV { t: ScalarLaw, u: Vec<f64>, v: GaussianComponent },
}

impl VectorLaw {
    pub fn mixture(weights: Vec<f64>, components: Vec<GaussianComponent>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::Shape("one weight per component is required".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        let q = components[0].mean.len();
        if components.iter().any(|c| c.mean.len() != q) {
            return Err(Error::Shape("components differ in dimension".into()));
        }
        Ok(VectorLaw::MixtureGaussianSimplex { weights, components })
    }

    pub fn dim(&self) -> usize {
        match self {
            VectorLaw::GaussianSimplex(g) => g.mean.len(),
            VectorLaw::MixtureGaussianSimplex { components, .. } => components[0].mean.len(),
            VectorLaw::ProductTV { u, .. } => u.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            VectorLaw::GaussianSimplex(_) => "GaussianSimplex",
            VectorLaw::MixtureGaussianSimplex { .. } => "MixtureGaussianSimplex",
            VectorLaw::ProductTV { .. } => "ProductTV",
        }
    }

    /// Law of `<v, X>`.
    ///
    /// For `ProductTV` only directions orthogonal to `u` are supported, since
    /// otherwise the projection is a convolution of the tilted and Gaussian parts.
    pub fn projection(&self, v: &[f64]) -> Result<ScalarLaw> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!("direction has length {}, expected {}", v.len(), self.dim())));
        }
        let dv = DVector::from_column_slice(v);
        let project = |g: &GaussianComponent| -> (f64, f64) { (g.mean.dot(&dv), (g.cov.clone() * &dv).dot(&dv)) };
        let point_or_normal = |(m, var): (f64, f64)| -> Result<ScalarLaw> {
            if var > 0.0 {
                ScalarLaw::normal(m, var)
            } else {
                Err(Error::Degenerate("projection has zero variance".into()))
            }
        };
        match self {
            VectorLaw::GaussianSimplex(g) => point_or_normal(project(g)),
            VectorLaw::MixtureGaussianSimplex { weights, components } => {
                let mut comps = Vec::new();
                let mut atoms = Vec::new();
                for (w, g) in weights.iter().zip(components) {
                    let (m, var) = project(g);
                    if var > 0.0 {
                        comps.push((*w, ScalarLaw::normal(m, var)?));
                    } else {
                        atoms.push((AtomAt::At(m), *w));
                    }
                }
                Ok(ScalarLaw::Mixture(MixtureLaw::new(comps, atoms)?))
            }
            VectorLaw::ProductTV { u, v: g, .. } => {
                let along: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                if along.abs() > 1e-12 {
                    return Err(Error::InvalidParameter("projection of T u + V needs a direction orthogonal to u".into()));
                }
                point_or_normal(project(g))
            }
        }
    }

    /// `n` draws; block `b` of [`BLOCK`] draws uses RNG stream `b`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let factors: Vec<(DVector<f64>, DMatrix<f64>)> = match self {
            VectorLaw::GaussianSimplex(g) => vec![(g.mean.clone(), g.factor())],
            VectorLaw::MixtureGaussianSimplex { components, .. } => {
                components.iter().map(|g| (g.mean.clone(), g.factor())).collect()
            }
            VectorLaw::ProductTV { v, .. } => vec![(v.mean.clone(), v.factor())],
        };
        let z = Normal::new(0.0, 1.0).expect("unit normal");
        let q = self.dim();
        let blocks = n.div_ceil(BLOCK);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(seed, b as u64);
                let len = BLOCK.min(n - b * BLOCK);
                (0..len)
                    .map(|_| {
                        let k = match self {
                            VectorLaw::MixtureGaussianSimplex { weights, .. } => {
                                let mut u: f64 = rng.gen();
                                let mut pick = weights.len() - 1;
                                for (i, w) in weights.iter().enumerate() {
                                    if u < *w {
                                        pick = i;
                                        break;
                                    }
                                    u -= w;
                                }
                                pick
                            }
                            _ => 0,
                        };
                        let (mean, l) = &factors[k];
                        let g = DVector::from_fn(q, |_, _| z.sample(&mut rng));
                        let mut x = mean + l * g;
                        if let VectorLaw::ProductTV { t, u, .. } = self {
                            let tv = t.draw(&mut rng);
                            for (xi, ui) in x.iter_mut().zip(u) {
                                *xi += tv * ui;
                            }
                        }
                        x.iter().cloned().collect()
                    })
                    .collect::<Vec<Vec<f64>>>()
            })
            .collect::<Vec<_>>()
            .concat()
    }

    pub fn describe(&self) -> Value {
        let comp = |g: &GaussianComponent| {
            json!({
                "mean": g.mean.iter().collect::<Vec<_>>(),
                "covariance": g.cov.row_iter().map(|r| r.iter().cloned().collect::<Vec<f64>>()).collect::<Vec<_>>(),
                "rank": g.rank(),
            })
        };
        match self {
            VectorLaw::GaussianSimplex(g) => json!({"kind": self.kind(), "component": comp(g)}),
            VectorLaw::MixtureGaussianSimplex { weights, components } => json!({
                "kind": self.kind(),
                "weights": weights,
                "components": components.iter().map(comp).collect::<Vec<_>>(),
            }),
            VectorLaw::ProductTV { t, u, v } => json!({"kind": self.kind(), "t": t.describe(), "u": u, "v": comp(v)}),
        }
    }
}

impl Serialize for VectorLaw {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.describe().serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianComponent::new(DVector::zeros(2), cov).is_err());
    }

    #[test]
    fn sample_moments() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        let g = GaussianComponent::new(DVector::from_vec(vec![0.5, -0.25, -0.25]), cov).unwrap();
        assert_eq!(g.rank(), 2);
        let law = VectorLaw::GaussianSimplex(g);
        let xs = law.sample(40_000, 9);
        let n = xs.len() as f64;
        let m0 = xs.iter().map(|x| x[0]).sum::<f64>() / n;
        let v0 = xs.iter().map(|x| (x[0] - m0).powi(2)).sum::<f64>() / n;
        assert!((m0 - 0.5).abs() < 0.03);
        assert!((v0 - 2.0).abs() < 0.06);
        assert!(xs.iter().all(|x| x.iter().sum::<f64>().abs() < 1e-12));
    }
}
