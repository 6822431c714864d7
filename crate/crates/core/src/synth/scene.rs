use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::augment::{augment_mask, flying_pixels, AugmentMeta, MaskAffine};
use super::category::{CategoryConfig, ShapeFamily, ShapeSource};
use crate::error::{Error, Result};
use crate::estimator::{Estimate, View};
use crate::io::load_shape_space;
use crate::render::{render, Mask, Pose, RenderConfig};
use crate::sdf::{SdfVolume, ShapeSpec};
use crate::shape_space::ShapeSpace;
use crate::so3::UnitQuaternion;

const MAX_TRIES: usize = 10;

/// Per-item seed from a master seed (splitmix64 of `master + (index+1)·φ`).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Ground-truth geometry of a scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GtShape {
    /// Analytic instance; the volume is baked at `resolution`.
    Procedural { spec: ShapeSpec, resolution: usize },
    /// The latent code stored in the ground-truth estimate.
    Latent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneRecord {
    pub seed: u64,
    pub gt: Estimate,
    pub gt_shape: GtShape,
    pub views: Vec<View>,
    /// One entry per view.
    pub augmentation: Vec<AugmentMeta>,
}

impl SceneRecord {
    /// Ground-truth SDF volume; latent scenes need the generating shape space.
    pub fn gt_volume(&self, space: Option<&ShapeSpace>) -> Result<SdfVolume> {
        match &self.gt_shape {
            GtShape::Procedural { spec, resolution } => spec.bake(*resolution),
            GtShape::Latent => space
                .ok_or_else(|| Error::InvalidConfig("latent ground truth needs its shape space".into()))?
                .decode(&self.gt.shape),
        }
    }
}

#[derive(Clone)]
enum Source {
    Procedural { family: ShapeFamily, resolution: usize },
    Space(Arc<ShapeSpace>),
}

/// Scene sampler for one category.
#[derive(Clone)]
pub struct Generator {
    cfg: CategoryConfig,
    source: Source,
    render: RenderConfig,
}

impl Generator {
    pub fn new(cfg: CategoryConfig) -> Result<Self> {
        cfg.validate()?;
        let source = match &cfg.source {
            ShapeSource::Procedural { family, resolution } => Source::Procedural {
                family: *family,
                resolution: *resolution,
            },
            ShapeSource::ShapeSpace { path } => Source::Space(Arc::new(load_shape_space(path)?)),
        };
        Ok(Generator {
            cfg,
            source,
            render: RenderConfig::default(),
        })
    }

    /// Uses an in-memory shape space as the shape source.
    pub fn with_shape_space(cfg: CategoryConfig, space: Arc<ShapeSpace>) -> Result<Self> {
        cfg.validate()?;
        Ok(Generator {
            cfg,
            source: Source::Space(space),
            render: RenderConfig::default(),
        })
    }

    pub fn config(&self) -> &CategoryConfig {
        &self.cfg
    }

    /// The generating shape space when ground truth is latent.
    pub fn shape_space(&self) -> Option<&Arc<ShapeSpace>> {
        match &self.source {
            Source::Space(s) => Some(s),
            Source::Procedural { .. } => None,
        }
    }

    fn sample_shape<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, GtShape, SdfVolume)> {
        match &self.source {
            Source::Procedural { family, resolution } => {
                let spec = family.sample(rng);
                let vol = spec.bake(*resolution)?;
                Ok((
                    Vec::new(),
                    GtShape::Procedural {
                        spec,
                        resolution: *resolution,
                    },
                    vol,
                ))
            }
            Source::Space(space) => {
                let z = space.sample_prior(rng);
                let vol = space.decode(&z)?;
                Ok((z, GtShape::Latent, vol))
            }
        }
    }

    fn render_view(&self, vol: &SdfVolume, gt: &Estimate, cam_pose: Pose) -> Result<View> {
        let cam = self.cfg.camera;
        let obj_c = cam_pose.inverse().compose(&gt.pose());
        let depth = render(vol, &obj_c, gt.scale, &cam, None, &self.render).depth;
        let mask = Mask::from_depth(&depth);
        View::new(depth, mask, cam, cam_pose)
    }

    /// Single view with identity camera pose: the object center lies on the ray
    /// of a uniformly drawn image point at a uniform distance.
    pub fn sample_scene<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SceneRecord> {
        let cam = self.cfg.camera;
        for _ in 0..MAX_TRIES {
            let (shape, gt_shape, vol) = self.sample_shape(rng)?;
            let u = rng.random_range(0.0..cam.width as f64);
            let v = rng.random_range(0.0..cam.height as f64);
            let dir = Vector3::new((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0).normalize();
            let distance = rng.random_range(self.cfg.distance.0..=self.cfg.distance.1);
            let gt = Estimate {
                position: dir * distance,
                orientation: UnitQuaternion::sample_uniform(rng),
                scale: rng.random_range(self.cfg.scale.0..=self.cfg.scale.1),
                shape,
            };
            let view = self.render_view(&vol, &gt, Pose::IDENTITY)?;
            if !view.mask.is_empty() {
                return Ok(SceneRecord {
                    seed: 0,
                    gt,
                    gt_shape,
                    views: vec![view],
                    augmentation: vec![AugmentMeta::default()],
                });
            }
        }
        Err(Error::DegenerateConfig(MAX_TRIES))
    }

    /// Object at the world origin seen by `k` uniformly oriented cameras, each
    /// placed so that the origin is `view_distance` ahead on its optical axis.
    pub fn sample_multiview<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<SceneRecord> {
        if k == 0 {
            return Err(Error::InvalidConfig("need at least one view".into()));
        }
        for _ in 0..MAX_TRIES {
            let (shape, gt_shape, vol) = self.sample_shape(rng)?;
            let gt = Estimate {
                position: Vector3::zeros(),
                orientation: UnitQuaternion::sample_uniform(rng),
                scale: rng.random_range(self.cfg.scale.0..=self.cfg.scale.1),
                shape,
            };
            let mut views = Vec::with_capacity(k);
            for _ in 0..k {
                let q = UnitQuaternion::sample_uniform(rng);
                let position = -q.rotate(Vector3::new(0.0, 0.0, self.cfg.view_distance));
                views.push(self.render_view(&vol, &gt, Pose::new(position, q))?);
            }
            if views.iter().all(|v| !v.mask.is_empty()) {
                return Ok(SceneRecord {
                    seed: 0,
                    gt,
                    gt_shape,
                    augmentation: vec![AugmentMeta::default(); k],
                    views,
                });
            }
        }
        Err(Error::DegenerateConfig(MAX_TRIES))
    }

    /// Applies the category's augmentation to every view.
    pub fn augment<R: Rng + ?Sized>(&self, mut rec: SceneRecord, rng: &mut R) -> SceneRecord {
        let Some(p) = self.cfg.augment else {
            return rec;
        };
        for (view, meta) in rec.views.iter_mut().zip(rec.augmentation.iter_mut()) {
            let a = MaskAffine::sample(rng, &p);
            let (d, m, mut am) = augment_mask(&view.depth, &view.mask, &a, self.cfg.distance, rng);
            let (d, blurred) = flying_pixels(&d, &m, p.blur_prob, p.blur_sigma, rng);
            am.blurred = blurred;
            view.depth = d;
            view.mask = m;
            *meta = am;
        }
        rec
    }

    /// Scene `index` of a seeded multi-view set: sampled then augmented.
    pub fn multiview_scene(&self, k: usize, master_seed: u64, index: u64) -> Result<SceneRecord> {
        let seed = derive_seed(master_seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rec = self.sample_multiview(k, &mut rng)?;
        let mut rec = self.augment(rec, &mut rng);
        rec.seed = seed;
        Ok(rec)
    }

    /// `count` multi-view scenes generated in parallel.
    pub fn generate(&self, count: usize, k: usize, master_seed: u64) -> Result<Vec<SceneRecord>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.multiview_scene(k, master_seed, i))
            .collect()
    }
}
