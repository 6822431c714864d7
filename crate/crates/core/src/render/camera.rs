use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::UnitQuaternion;

/// Pinhole intrinsics. The camera looks down `+z`; pixel `(i, j)` is row `i`,
/// column `j`, and its ray passes through `((j + 0.5 - cx) / fx, (i + 0.5 - cy) / fy, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl PinholeCamera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let cam = PinholeCamera {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.width > 0
            && self.height > 0
            && (0.0..self.width as f64).contains(&self.cx)
            && (0.0..self.height as f64).contains(&self.cy);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid camera intrinsics {self:?}")))
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Ray through the pixel center scaled to unit z.
    #[inline]
    pub fn ray(&self, i: usize, j: usize) -> Vector3<f64> {
        Vector3::new(
            (j as f64 + 0.5 - self.cx) / self.fx,
            (i as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        )
    }

    /// Pixel `(row, col)` whose center ray passes closest to a camera-frame point.
    pub fn project(&self, p: Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        let col = self.fx * p.x / p.z + self.cx - 0.5;
        let row = self.fy * p.y / p.z + self.cy - 0.5;
        Some((row, col))
    }
}

/// Rigid transform `x ↦ R(orientation) x + position`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3<f64>,
    #[serde(rename = "quaternion")]
    pub orientation: UnitQuaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vector3::new(0.0, 0.0, 0.0),
        orientation: UnitQuaternion::IDENTITY,
    };

    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion) -> Self {
        Pose { position, orientation }
    }

    pub fn transform_point(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.orientation.rotate(p) + self.position
    }

    pub fn inverse_transform_point(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse_rotate(p - self.position)
    }

    pub fn inverse(&self) -> Pose {
        let q = self.orientation.conjugate();
        Pose {
            position: -q.rotate(self.position),
            orientation: q,
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.transform_point(other.position),
            orientation: UnitQuaternion::from_array_normalized(self.orientation.mul(other.orientation).to_array()),
        }
    }
}

/// Per-pixel z-depth in meters, row-major. Zero marks a missing value.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl DepthMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        DepthMap {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| **d > 0.0).count()
    }
}

/// Binary pixel mask, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    /// Pixels with positive depth.
    pub fn from_depth(depth: &DepthMap) -> Self {
        Mask {
            width: depth.width,
            height: depth.height,
            data: depth.data.iter().map(|d| *d > 0.0).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.width + j]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}
