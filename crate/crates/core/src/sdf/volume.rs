use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest distance between two points of the canonical cube.
pub const CUBE_DIAMETER: f64 = 1.732_050_807_568_877_2;

/// Signed distances sampled at voxel centers of the canonical cube `[-0.5, 0.5]³`.
///
/// Voxel `(i, j, k)` sits at `-0.5 + (i + 0.5) / R` per axis and is stored at
/// `i + R * (j + R * k)`. Negative inside, positive outside.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfVolume {
    resolution: usize,
    values: Vec<f64>,
}

/// Trilinear stencil: eight voxel indices and their interpolation weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corners {
    pub index: [usize; 8],
    pub weight: [f64; 8],
}

/// Result of [`SdfVolume::sample`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub grad: Vector3<f64>,
    pub corners: Corners,
}

impl SdfVolume {
    pub fn new(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidVolume(format!("resolution {resolution} is below 2")));
        }
        let expected = resolution * resolution * resolution;
        if values.len() != expected {
            return Err(Error::InvalidVolume(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume(format!("non-finite value at voxel {i}")));
        }
        Ok(SdfVolume { resolution, values })
    }

    /// Builds a volume by evaluating `f` at every voxel center.
    pub fn from_fn<F>(resolution: usize, f: F) -> Self
    where
        F: Fn(Vector3<f64>) -> f64 + Sync,
    {
        let r = resolution;
        let plane = r * r;
        let mut values = vec![0.0; r * plane];
        values.par_chunks_mut(plane).enumerate().for_each(|(k, slab)| {
            for j in 0..r {
                for i in 0..r {
                    slab[i + r * j] = f(voxel_center(r, i, j, k));
                }
            }
        });
        SdfVolume { resolution, values }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn voxel_size(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution * (j + self.resolution * k)
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        voxel_center(self.resolution, i, j, k)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Per-axis stencil for a canonical coordinate already clamped to the cube.
    /// Returns `(base index, fraction, d(grid)/d(p))`.
    #[inline]
    fn axis(&self, c: f64) -> (usize, f64, f64) {
        let r = self.resolution;
        let u = (c + 0.5) * r as f64 - 0.5;
        let top = (r - 1) as f64;
        let (u, slope) = if u <= 0.0 {
            (0.0, 0.0)
        } else if u >= top {
            (top, 0.0)
        } else {
            (u, r as f64)
        };
        let i0 = (u.floor() as usize).min(r - 2);
        (i0, u - i0 as f64, slope)
    }

    /// Trilinear interpolation with analytic gradient and corner weights.
    ///
    /// Outside the cube the value is the interpolated value at the nearest cube
    /// point plus the Euclidean distance to the cube, which keeps sphere tracing
    /// conservative for rays that start outside the grid.
    pub fn sample(&self, p: Vector3<f64>) -> Sample {
        let q = p.map(|c| c.clamp(-0.5, 0.5));
        let (ix, fx, sx) = self.axis(q.x);
        let (iy, fy, sy) = self.axis(q.y);
        let (iz, fz, sz) = self.axis(q.z);
        let r = self.resolution;
        let base = ix + r * (iy + r * iz);
        let offs = [0, 1, r, r + 1, r * r, r * r + 1, r * r + r, r * r + r + 1];
        let mut index = [0usize; 8];
        let mut v = [0.0; 8];
        for c in 0..8 {
            index[c] = base + offs[c];
            v[c] = self.values[index[c]];
        }
        let (gx, gy, gz) = (1.0 - fx, 1.0 - fy, 1.0 - fz);
        let weight = [
            gx * gy * gz,
            fx * gy * gz,
            gx * fy * gz,
            fx * fy * gz,
            gx * gy * fz,
            fx * gy * fz,
            gx * fy * fz,
            fx * fy * fz,
        ];
        let value: f64 = (0..8).map(|c| weight[c] * v[c]).sum();

        let dx = gy * gz * (v[1] - v[0]) + fy * gz * (v[3] - v[2]) + gy * fz * (v[5] - v[4]) + fy * fz * (v[7] - v[6]);
        let dy = gx * gz * (v[2] - v[0]) + fx * gz * (v[3] - v[1]) + gx * fz * (v[6] - v[4]) + fx * fz * (v[7] - v[5]);
        let dz = gx * gy * (v[4] - v[0]) + fx * gy * (v[5] - v[1]) + gx * fy * (v[6] - v[2]) + fx * fy * (v[7] - v[3]);
        let mut grad = Vector3::new(dx * sx, dy * sy, dz * sz);

        let outside = p - q;
        let dist = outside.norm();
        let mut value = value;
        if dist > 0.0 {
            value += dist;
            grad += outside / dist;
        }
        Sample {
            value,
            grad,
            corners: Corners { index, weight },
        }
    }

    /// Value-only variant of [`Self::sample`].
    #[inline]
    pub fn sample_value(&self, p: Vector3<f64>) -> f64 {
        let q = p.map(|c| c.clamp(-0.5, 0.5));
        let (ix, fx, _) = self.axis(q.x);
        let (iy, fy, _) = self.axis(q.y);
        let (iz, fz, _) = self.axis(q.z);
        let r = self.resolution;
        let base = ix + r * (iy + r * iz);
        let v = &self.values;
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(v[base], v[base + 1], fx);
        let c10 = lerp(v[base + r], v[base + r + 1], fx);
        let c01 = lerp(v[base + r * r], v[base + r * r + 1], fx);
        let c11 = lerp(v[base + r * r + r], v[base + r * r + r + 1], fx);
        let value = lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
        let d = (p - q).norm();
        value + d
    }
}

pub fn voxel_center(resolution: usize, i: usize, j: usize, k: usize) -> Vector3<f64> {
    let r = resolution as f64;
    Vector3::new(
        -0.5 + (i as f64 + 0.5) / r,
        -0.5 + (j as f64 + 0.5) / r,
        -0.5 + (k as f64 + 0.5) / r,
    )
}
