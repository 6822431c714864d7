use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::augment::AugmentParams;
use crate::error::{Error, Result};
use crate::render::PinholeCamera;
use crate::sdf::{Offset, ShapeSpec};
use crate::so3::UnitQuaternion;

/// Parametric object families with randomized proportions, all aligned with
/// the canonical z axis and contained in the bake limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    /// Open-top hollow cylinder with a torus handle.
    Mug,
    Box,
    Cylinder,
}

impl ShapeFamily {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> ShapeSpec {
        match self {
            ShapeFamily::Mug => {
                let r = rng.random_range(0.20..0.27);
                let h = rng.random_range(0.22..0.32);
                let wall = rng.random_range(0.045..0.06);
                let major = rng.random_range(0.09..0.12);
                let minor = rng.random_range(0.025..0.035);
                let body = ShapeSpec::cylinder(r, h);
                let cavity = ShapeSpec::cylinder(r - wall, h).with_offset(Offset::translate(0.0, 0.0, wall + 0.02));
                // handle ring in the xz plane, centered on the outer wall
                let handle = ShapeSpec::torus(major, minor).with_offset(Offset {
                    translation: [r, 0.0, 0.0],
                    rotation: UnitQuaternion::from_axis_angle(nalgebra::Vector3::x(), std::f64::consts::FRAC_PI_2),
                });
                ShapeSpec::Union {
                    children: vec![
                        ShapeSpec::Subtraction {
                            base: Box::new(body),
                            cut: Box::new(cavity),
                            offset: Offset::default(),
                        },
                        handle,
                    ],
                    offset: Offset::default(),
                }
            }
            ShapeFamily::Box => ShapeSpec::cuboid([
                rng.random_range(0.12..0.34),
                rng.random_range(0.12..0.34),
                rng.random_range(0.12..0.34),
            ]),
            ShapeFamily::Cylinder => ShapeSpec::cylinder(rng.random_range(0.15..0.32), rng.random_range(0.15..0.38)),
        }
    }

    /// Whether the family has a continuous rotational symmetry.
    pub fn symmetric(self) -> bool {
        matches!(self, ShapeFamily::Cylinder)
    }
}

/// Where ground-truth shapes come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeSource {
    /// Random instance of a procedural family baked at `resolution`.
    Procedural { family: ShapeFamily, resolution: usize },
    /// Latent codes drawn from the prior of a stored shape space.
    ShapeSpace { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryConfig {
    pub name: String,
    pub source: ShapeSource,
    /// Uniform metric scale range, meters.
    pub scale: (f64, f64),
    /// Uniform object distance range along the sampled pixel ray, meters.
    pub distance: (f64, f64),
    /// Object-origin depth for multi-view cameras, meters.
    #[serde(default = "default_view_distance")]
    pub view_distance: f64,
    #[serde(default = "default_camera")]
    pub camera: PinholeCamera,
    /// Mask and depth corruption; `None` renders clean data.
    #[serde(default)]
    pub augment: Option<AugmentParams>,
    /// Listed so reports can flag symmetric categories.
    #[serde(default)]
    pub symmetric: bool,
}

fn default_view_distance() -> f64 {
    0.30
}

pub fn default_camera() -> PinholeCamera {
    PinholeCamera {
        fx: 525.0,
        fy: 525.0,
        cx: 319.5,
        cy: 239.5,
        width: 640,
        height: 480,
    }
}

impl CategoryConfig {
    /// Procedural category around 6 cm objects at desk distances.
    pub fn procedural(family: ShapeFamily) -> Self {
        CategoryConfig {
            name: format!("{family:?}").to_lowercase(),
            source: ShapeSource::Procedural { family, resolution: 64 },
            scale: (0.09, 0.11),
            distance: (0.3, 0.6),
            view_distance: default_view_distance(),
            camera: default_camera(),
            augment: Some(AugmentParams::default()),
            symmetric: family.symmetric(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        let (lo, hi) = self.scale;
        let (near, far) = self.distance;
        if !(lo > 0.0 && lo <= hi && near > 0.0 && near <= far && self.view_distance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "category {:?}: need 0 < scale lo ≤ hi and 0 < near ≤ far",
                self.name
            )));
        }
        if let ShapeSource::Procedural { resolution, .. } = self.source {
            if resolution < 8 {
                return Err(Error::InvalidConfig("procedural resolution must be ≥ 8".into()));
            }
        }
        Ok(())
    }
}
