use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::volume::SdfVolume;
use crate::error::{Error, Result};
use crate::so3::UnitQuaternion;

/// Every baked shape must stay inside `[-BAKE_LIMIT, BAKE_LIMIT]³`.
pub const BAKE_LIMIT: f64 = 0.45;

/// Rigid placement of a node inside its parent frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Offset {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rotation: UnitQuaternion,
}

impl Offset {
    pub fn translate(x: f64, y: f64, z: f64) -> Self {
        Offset {
            translation: [x, y, z],
            rotation: UnitQuaternion::IDENTITY,
        }
    }

    fn is_identity(&self) -> bool {
        *self == Offset::default()
    }

    fn to_local(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse_rotate(p - Vector3::from(self.translation))
    }

    fn to_parent(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + Vector3::from(self.translation)
    }
}

/// Constructive tree of analytic primitives in canonical coordinates.
///
/// Cylinders and tori are aligned with the local z axis. `SmoothUnion` uses
/// the quadratic polynomial smooth minimum
/// `smin(a, b) = min(a, b) - h² k / 4` with `h = max(k - |a - b|, 0) / k`,
/// which deviates from `min` by at most `k / 4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeSpec {
    Sphere {
        radius: f64,
        #[serde(default, skip_serializing_if = "Offset::is_identity")]
        offset: Offset,
    },
    Box {
        half_extents: [f64; 3],
        #[serde(default, skip_serializing_if = "Offset::is_identity")]
        offset: Offset,
    },
    Cylinder {
        radius: f64,
        half_height: f64,
        #[serde(default, skip_serializing_if = "Offset::is_identity")]
        offset: Offset,
    },
    Torus {
        major: f64,
        minor: f64,
        #[serde(default, skip_serializing_if = "Offset::is_identity")]
        offset: Offset,
    },
    Union {
        children: Vec<ShapeSpec>,
        #[serde(default, skip_serializing_if = "Offset::is_identity")]
        offset: Offset,
    },
    SmoothUnion {
        children: Vec<ShapeSpec>,
        k: f64,
        #[serde(default, skip_serializing_if = "Offset::is_identity")]
        offset: Offset,
    },
    Subtraction {
        base: Box<ShapeSpec>,
        cut: Box<ShapeSpec>,
        #[serde(default, skip_serializing_if = "Offset::is_identity")]
        offset: Offset,
    },
}

fn smooth_min(a: f64, b: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return a.min(b);
    }
    let h = (k - (a - b).abs()).max(0.0) / k;
    a.min(b) - h * h * k * 0.25
}

type Aabb = (Vector3<f64>, Vector3<f64>);

fn merge(a: Aabb, b: Aabb) -> Aabb {
    (a.0.inf(&b.0), a.1.sup(&b.1))
}

impl ShapeSpec {
    pub fn sphere(radius: f64) -> Self {
        ShapeSpec::Sphere {
            radius,
            offset: Offset::default(),
        }
    }

    pub fn cuboid(half_extents: [f64; 3]) -> Self {
        ShapeSpec::Box {
            half_extents,
            offset: Offset::default(),
        }
    }

    pub fn cylinder(radius: f64, half_height: f64) -> Self {
        ShapeSpec::Cylinder {
            radius,
            half_height,
            offset: Offset::default(),
        }
    }

    pub fn torus(major: f64, minor: f64) -> Self {
        ShapeSpec::Torus {
            major,
            minor,
            offset: Offset::default(),
        }
    }

    pub fn with_offset(mut self, o: Offset) -> Self {
        match &mut self {
            ShapeSpec::Sphere { offset, .. }
            | ShapeSpec::Box { offset, .. }
            | ShapeSpec::Cylinder { offset, .. }
            | ShapeSpec::Torus { offset, .. }
            | ShapeSpec::Union { offset, .. }
            | ShapeSpec::SmoothUnion { offset, .. }
            | ShapeSpec::Subtraction { offset, .. } => *offset = o,
        }
        self
    }

    fn offset(&self) -> &Offset {
        match self {
            ShapeSpec::Sphere { offset, .. }
            | ShapeSpec::Box { offset, .. }
            | ShapeSpec::Cylinder { offset, .. }
            | ShapeSpec::Torus { offset, .. }
            | ShapeSpec::Union { offset, .. }
            | ShapeSpec::SmoothUnion { offset, .. }
            | ShapeSpec::Subtraction { offset, .. } => offset,
        }
    }

    /// Analytic signed distance at a canonical point.
    pub fn distance(&self, p: Vector3<f64>) -> f64 {
        let p = self.offset().to_local(p);
        match self {
            ShapeSpec::Sphere { radius, .. } => p.norm() - radius,
            ShapeSpec::Box { half_extents, .. } => {
                let q = p.abs() - Vector3::from(*half_extents);
                q.sup(&Vector3::zeros()).norm() + q.max().min(0.0)
            }
            ShapeSpec::Cylinder {
                radius, half_height, ..
            } => {
                let dx = p.xy().norm() - radius;
                let dz = p.z.abs() - half_height;
                dx.max(dz).min(0.0) + dx.max(0.0).hypot(dz.max(0.0))
            }
            ShapeSpec::Torus { major, minor, .. } => (p.xy().norm() - major).hypot(p.z) - minor,
            ShapeSpec::Union { children, .. } => children.iter().map(|c| c.distance(p)).fold(f64::INFINITY, f64::min),
            ShapeSpec::SmoothUnion { children, k, .. } => {
                let mut it = children.iter().map(|c| c.distance(p));
                let first = it.next().unwrap_or(f64::INFINITY);
                it.fold(first, |a, b| smooth_min(a, b, *k))
            }
            ShapeSpec::Subtraction { base, cut, .. } => base.distance(p).max(-cut.distance(p)),
        }
    }

    /// Conservative axis-aligned bounds in the parent frame.
    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let local: Aabb = match self {
            ShapeSpec::Sphere { radius, .. } => (Vector3::repeat(-radius), Vector3::repeat(*radius)),
            ShapeSpec::Box { half_extents, .. } => {
                let h = Vector3::from(*half_extents);
                (-h, h)
            }
            ShapeSpec::Cylinder {
                radius, half_height, ..
            } => {
                let h = Vector3::new(*radius, *radius, *half_height);
                (-h, h)
            }
            ShapeSpec::Torus { major, minor, .. } => {
                let h = Vector3::new(major + minor, major + minor, *minor);
                (-h, h)
            }
            ShapeSpec::Union { children, .. } => children
                .iter()
                .map(|c| c.bounds())
                .reduce(merge)
                .unwrap_or((Vector3::zeros(), Vector3::zeros())),
            ShapeSpec::SmoothUnion { children, k, .. } => {
                let (lo, hi) = children
                    .iter()
                    .map(|c| c.bounds())
                    .reduce(merge)
                    .unwrap_or((Vector3::zeros(), Vector3::zeros()));
                let pad = Vector3::repeat(k.max(0.0) * 0.25);
                (lo - pad, hi + pad)
            }
            ShapeSpec::Subtraction { base, .. } => base.bounds(),
        };
        let off = self.offset();
        let mut out: Option<Aabb> = None;
        for c in 0..8 {
            let corner = Vector3::new(
                if c & 1 == 0 { local.0.x } else { local.1.x },
                if c & 2 == 0 { local.0.y } else { local.1.y },
                if c & 4 == 0 { local.0.z } else { local.1.z },
            );
            let w = off.to_parent(corner);
            out = Some(match out {
                None => (w, w),
                Some(b) => merge(b, (w, w)),
            });
        }
        out.expect("eight corners")
    }

    /// Largest absolute coordinate reached by [`Self::bounds`].
    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max().max(hi.abs().max())
    }

    /// Samples the analytic distance at every voxel center of an `R³` grid.
    pub fn bake(&self, resolution: usize) -> Result<SdfVolume> {
        if resolution < 8 {
            return Err(Error::InvalidConfig(format!(
                "bake resolution must be at least 8, got {resolution}"
            )));
        }
        let extent = self.extent();
        if extent > BAKE_LIMIT + 1e-12 {
            return Err(Error::SpecOutOfBounds { extent });
        }
        Ok(SdfVolume::from_fn(resolution, |p| self.distance(p)))
    }
}
