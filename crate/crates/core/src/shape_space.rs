//! Linear latent shape model over SDF volumes.
//!
//! `decode(z) = mean + Σₖ zₖ · scaleₖ · basisₖ` with an orthonormal basis, so
//! codes of the training set are white (unit variance per dimension) and
//! the prior `z ~ N(0, I)` matches the training distribution to second order.
//! The basis is fitted by PCA on the `M × M` Gram matrix of centered
//! training volumes, optionally emphasizing voxels close to the mean surface.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdf::SdfVolume;

/// Voxels whose mean value satisfies `|v| < delta` get weight `weight` in the fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearSurfaceWeighting {
    pub delta: f64,
    pub weight: f64,
}

impl Default for NearSurfaceWeighting {
    fn default() -> Self {
        NearSurfaceWeighting {
            delta: 0.05,
            weight: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeSpace {
    resolution: usize,
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
    scales: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl ShapeSpace {
    /// Assembles a space from raw parts. The basis must be orthonormal.
    pub fn from_parts(resolution: usize, mean: Vec<f64>, basis: Vec<Vec<f64>>, scales: Vec<f64>) -> Result<Self> {
        let voxels = resolution * resolution * resolution;
        if mean.len() != voxels {
            return Err(Error::DimensionMismatch {
                expected: voxels,
                got: mean.len(),
            });
        }
        if basis.len() != scales.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: scales.len(),
            });
        }
        if let Some(b) = basis.iter().find(|b| b.len() != voxels) {
            return Err(Error::DimensionMismatch {
                expected: voxels,
                got: b.len(),
            });
        }
        if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("shape scales must be positive".into()));
        }
        Ok(ShapeSpace {
            resolution,
            mean,
            basis,
            scales,
        })
    }

    pub fn fit(volumes: &[SdfVolume], latent_dim: usize, weighting: Option<NearSurfaceWeighting>) -> Result<Self> {
        let m = volumes.len();
        if latent_dim == 0 {
            return Err(Error::InvalidConfig("latent dimension must be positive".into()));
        }
        if m < latent_dim + 1 {
            return Err(Error::InsufficientData {
                needed: latent_dim + 1,
                got: m,
            });
        }
        let resolution = volumes[0].resolution();
        if let Some(v) = volumes.iter().find(|v| v.resolution() != resolution) {
            return Err(Error::ResolutionMismatch {
                expected: resolution,
                got: v.resolution(),
            });
        }
        let voxels = volumes[0].len();

        let mut mean = vec![0.0; voxels];
        for v in volumes {
            axpy(1.0, v.values(), &mut mean);
        }
        mean.iter_mut().for_each(|x| *x /= m as f64);

        let centered: Vec<Vec<f64>> = volumes
            .iter()
            .map(|v| v.values().iter().zip(&mean).map(|(a, b)| a - b).collect())
            .collect();

        let voxel_weight: Option<Vec<f64>> = weighting.map(|w| {
            mean.iter()
                .map(|v| if v.abs() < w.delta { w.weight } else { 1.0 })
                .collect()
        });

        // Gram matrix of the (weighted) centered data
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
        let entries: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| match &voxel_weight {
                None => dot(&centered[i], &centered[j]),
                Some(w) => centered[i]
                    .iter()
                    .zip(&centered[j])
                    .zip(w)
                    .map(|((a, b), w)| a * b * w)
                    .sum(),
            })
            .collect();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        for (&(i, j), &e) in pairs.iter().zip(&entries) {
            gram[(i, j)] = e;
            gram[(j, i)] = e;
        }

        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(latent_dim);
        for &col in order.iter().take(latent_dim) {
            if eig.eigenvalues[col] <= 1e-12 * top || top == 0.0 {
                return Err(Error::InsufficientData {
                    needed: latent_dim,
                    got: basis.len(),
                });
            }
            // unweighted back-projection of the Gram eigenvector
            let mut b = vec![0.0; voxels];
            for (i, row) in centered.iter().enumerate() {
                axpy(eig.eigenvectors[(i, col)], row, &mut b);
            }
            for prev in &basis {
                let d = dot(&b, prev);
                axpy(-d, prev, &mut b);
            }
            let n = dot(&b, &b).sqrt();
            if n <= 1e-12 {
                return Err(Error::InsufficientData {
                    needed: latent_dim,
                    got: basis.len(),
                });
            }
            b.iter_mut().for_each(|x| *x /= n);
            let peak = b
                .iter()
                .copied()
                .fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
            if peak < 0.0 {
                b.iter_mut().for_each(|x| *x = -*x);
            }
            basis.push(b);
        }

        let scales: Vec<f64> = basis
            .iter()
            .map(|b| {
                let ss: f64 = centered.iter().map(|x| dot(b, x).powi(2)).sum();
                (ss / (m - 1) as f64).sqrt()
            })
            .collect();
        if scales.iter().any(|s| *s <= 0.0) {
            return Err(Error::InsufficientData {
                needed: latent_dim,
                got: scales.iter().filter(|s| **s > 0.0).count(),
            });
        }

        Ok(ShapeSpace {
            resolution,
            mean,
            basis,
            scales,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn latent_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.latent_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.latent_dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Decodes into a caller-owned buffer of `R³` values.
    pub fn decode_into(&self, z: &[f64], out: &mut Vec<f64>) -> Result<()> {
        self.check_dim(z)?;
        out.clear();
        out.extend_from_slice(&self.mean);
        for ((b, s), zk) in self.basis.iter().zip(&self.scales).zip(z) {
            if *zk != 0.0 {
                axpy(zk * s, b, out);
            }
        }
        Ok(())
    }

    pub fn decode(&self, z: &[f64]) -> Result<SdfVolume> {
        let mut values = Vec::with_capacity(self.mean.len());
        self.decode_into(z, &mut values)?;
        SdfVolume::new(self.resolution, values)
    }

    /// Adjoint of [`Self::decode`]: maps a voxel cotangent to a latent gradient.
    pub fn decode_vjp(&self, cotangent: &[f64]) -> Result<Vec<f64>> {
        if cotangent.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: cotangent.len(),
            });
        }
        Ok(self
            .basis
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| s * dot(b, cotangent))
            .collect())
    }

    /// Sparse variant of [`Self::decode_vjp`] for cotangents touching few voxels.
    pub fn decode_vjp_sparse(&self, cotangent: &[(usize, f64)]) -> Vec<f64> {
        self.basis
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| s * cotangent.iter().map(|&(i, c)| b[i] * c).sum::<f64>())
            .collect()
    }

    pub fn encode(&self, vol: &SdfVolume) -> Result<Vec<f64>> {
        if vol.resolution() != self.resolution {
            return Err(Error::ResolutionMismatch {
                expected: self.resolution,
                got: vol.resolution(),
            });
        }
        let centered: Vec<f64> = vol.values().iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        Ok(self
            .basis
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| dot(b, &centered) / s)
            .collect())
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.latent_dim()).map(|_| rng.sample(StandardNormal)).collect()
    }
}
