//! Point-to-SDF and depth losses with analytic gradients.
//!
//! Both losses are per-view means that are summed over views. The SDF loss is
//! the mean absolute interpolated distance (canonical units) at the observed
//! points mapped into the object frame. The depth loss is the mean absolute
//! difference between rendered and observed depth over pixels that are masked
//! and valid in both maps.

use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::timing::{Stage, StageTimes};
use super::view::{backproject, Estimate, View};
use crate::error::{Error, Result};
use crate::render::{backward_pixels, trace_pixels, Hit, RenderConfig};
use crate::sdf::SdfVolume;
use crate::shape_space::ShapeSpace;

/// Gradient over the optimized parameters. Orientation is the ambient
/// quaternion gradient; scale is differentiated in log space.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub position: Vector3<f64>,
    pub orientation: [f64; 4],
    pub log_scale: f64,
    pub shape: Vec<f64>,
}

impl Gradient {
    pub fn zeros(latent_dim: usize) -> Self {
        Gradient {
            position: Vector3::zeros(),
            orientation: [0.0; 4],
            log_scale: 0.0,
            shape: vec![0.0; latent_dim],
        }
    }

    pub fn add_scaled(&mut self, other: &Gradient, k: f64) {
        self.position += other.position * k;
        for i in 0..4 {
            self.orientation[i] += other.orientation[i] * k;
        }
        self.log_scale += other.log_scale * k;
        for (a, b) in self.shape.iter_mut().zip(&other.shape) {
            *a += b * k;
        }
    }
}

/// Relative weights of the two loss terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub sdf: f64,
    pub depth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { sdf: 1.0, depth: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    /// `weights.sdf · sdf + weights.depth · depth`.
    pub total: f64,
    pub sdf: f64,
    pub depth: f64,
    /// Some view had no pixel valid in both the observed and rendered depth.
    pub degenerate: bool,
    pub grad: Option<Gradient>,
}

struct PreparedView<'a> {
    view: &'a View,
    /// Back-projected observations in world coordinates.
    points: Vec<Vector3<f64>>,
    pixels: Vec<usize>,
}

/// Loss evaluator bound to a shape space and a fixed set of views.
pub struct Objective<'a> {
    space: &'a ShapeSpace,
    views: Vec<PreparedView<'a>>,
    render: RenderConfig,
}

struct Partial {
    value: f64,
    grad: Option<(Gradient, Vec<(usize, f64)>)>,
}

impl<'a> Objective<'a> {
    pub fn new(space: &'a ShapeSpace, views: &'a [View], render: RenderConfig) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let views = views
            .iter()
            .map(|view| {
                let points = backproject(view)?
                    .into_iter()
                    .map(|p| view.cam_pose.transform_point(p))
                    .collect();
                Ok(PreparedView {
                    view,
                    points,
                    pixels: view.valid_pixels(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Objective { space, views, render })
    }

    pub fn space(&self) -> &ShapeSpace {
        self.space
    }

    pub fn render_config(&self) -> &RenderConfig {
        &self.render
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    pub fn view(&self, k: usize) -> &View {
        self.views[k].view
    }

    /// World-frame observed points of view `k`.
    pub fn points(&self, k: usize) -> &[Vector3<f64>] {
        &self.views[k].points
    }

    pub fn decode(&self, est: &Estimate) -> Result<SdfVolume> {
        self.space.decode(&est.shape)
    }

    fn check(&self, est: &Estimate) -> Result<()> {
        if est.shape.len() != self.space.latent_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.latent_dim(),
                got: est.shape.len(),
            });
        }
        if !(est.scale > 0.0 && est.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("scale {} is not positive", est.scale)));
        }
        Ok(())
    }

    /// Mean |SDF| of one point set; optional pose gradient plus voxel cotangent.
    /// Mean of `s·|V(p)|`, the metric distance of each observed point to the
    /// scaled surface.
    fn sdf_term(vol: &SdfVolume, est: &Estimate, points: &[Vector3<f64>], want_grad: bool) -> Partial {
        let n = points.len() as f64;
        let rot = est.orientation.rotation_matrix();
        let rot_t = rot.transpose();
        let scale = est.scale;
        let inv_s = 1.0 / scale;
        if !want_grad {
            let value: f64 = points
                .par_iter()
                .with_min_len(256)
                .map(|x| vol.sample_value(rot_t * (x - est.position) * inv_s).abs())
                .collect::<Vec<_>>()
                .iter()
                .sum();
            return Partial {
                value: scale * value / n,
                grad: None,
            };
        }
        let per_point: Vec<_> = points
            .par_iter()
            .with_min_len(256)
            .map(|x| {
                let w = x - est.position;
                let p = rot_t * w * inv_s;
                let s = vol.sample(p);
                let sign = if s.value > 0.0 {
                    1.0
                } else if s.value < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                // d(s·V(p)) with p = Rᵀ(x - t)/s
                let g_p = s.grad * (sign / n);
                let d_pos = -(rot * g_p);
                let d_q = est.orientation.inverse_rotate_vjp(w, g_p);
                let d_log_s = scale * (s.value.abs() / n - g_p.dot(&p));
                (s.value.abs(), d_pos, d_q, d_log_s, s.corners, scale * sign / n)
            })
            .collect();
        let mut g = Gradient::zeros(0);
        let mut value = 0.0;
        let mut voxels: Vec<(usize, f64)> = Vec::with_capacity(8 * per_point.len());
        for (v, d_pos, d_q, d_log_s, corners, k) in &per_point {
            value += v;
            g.position += d_pos;
            for i in 0..4 {
                g.orientation[i] += d_q[i];
            }
            g.log_scale += d_log_s;
            if *k != 0.0 {
                for c in 0..8 {
                    voxels.push((corners.index[c], corners.weight[c] * k));
                }
            }
        }
        Partial {
            value: scale * value / n,
            grad: Some((g, voxels)),
        }
    }

    /// Depth term of one view: value, optional gradient, and whether the valid set was empty.
    fn depth_term(
        &self,
        vol: &SdfVolume,
        est: &Estimate,
        pv: &PreparedView,
        pixels: &[usize],
        want_grad: bool,
        mut timer: Option<&mut StageTimes>,
    ) -> (Partial, bool) {
        let view = pv.view;
        let pose_c = view.object_in_camera(&est.pose());
        let t0 = Instant::now();
        let hits = trace_pixels(vol, &pose_c, est.scale, &view.cam, pixels, &self.render);
        if let Some(t) = timer.as_deref_mut() {
            t.add(Stage::RenderForward, t0.elapsed());
        }

        let t0 = Instant::now();
        let w = view.cam.width;
        let valid: Vec<(usize, Hit, f64)> = pixels
            .iter()
            .zip(&hits)
            .filter_map(|(&idx, h)| {
                h.map(|h| {
                    let rendered = h.t / view.cam.ray(idx / w, idx % w).norm();
                    (idx, h, rendered - view.depth.data[idx])
                })
            })
            .collect();
        if valid.is_empty() {
            if let Some(t) = timer.as_deref_mut() {
                t.add(Stage::Losses, t0.elapsed());
            }
            let grad = want_grad.then(|| (Gradient::zeros(0), Vec::new()));
            return (Partial { value: 0.0, grad }, true);
        }
        let n = valid.len() as f64;
        let value = valid.iter().map(|(_, _, r)| r.abs()).sum::<f64>() / n;
        if let Some(t) = timer.as_deref_mut() {
            t.add(Stage::Losses, t0.elapsed());
        }
        if !want_grad {
            return (Partial { value, grad: None }, false);
        }

        let t0 = Instant::now();
        let items: Vec<(usize, Hit, f64)> = valid
            .into_iter()
            .map(|(idx, h, r)| (idx, h, r.signum() * (r != 0.0) as u8 as f64 / n))
            .collect();
        let back = backward_pixels(vol, &pose_c, est.scale, &view.cam, &items);
        // camera-frame pose gradient → world
        let cam_rot = view.cam_pose.orientation.rotation_matrix();
        let lt = view.cam_pose.orientation.conjugate().left_matrix().transpose();
        let dq = lt * nalgebra::Vector4::from(back.d_quaternion);
        let g = Gradient {
            position: cam_rot * back.d_position,
            orientation: [dq[0], dq[1], dq[2], dq[3]],
            log_scale: back.d_scale * est.scale,
            shape: Vec::new(),
        };
        if let Some(t) = timer {
            t.add(Stage::RenderBackward, t0.elapsed());
        }
        (
            Partial {
                value,
                grad: Some((g, back.d_voxels)),
            },
            false,
        )
    }

    /// Weighted total loss summed over views, with its gradient if requested.
    pub fn evaluate(
        &self,
        est: &Estimate,
        weights: LossWeights,
        want_grad: bool,
        timer: Option<&mut StageTimes>,
    ) -> Result<LossValue> {
        self.evaluate_impl(est, weights, want_grad, None, timer)
    }

    /// Like [`evaluate`](Self::evaluate) with the depth term of view `k`
    /// restricted to the pixels `subsets[k]` (row-major indices; pixels that
    /// are not masked with a valid depth are ignored).
    pub fn evaluate_on_pixels(
        &self,
        est: &Estimate,
        weights: LossWeights,
        want_grad: bool,
        subsets: &[Vec<usize>],
    ) -> Result<LossValue> {
        if subsets.len() != self.views.len() {
            return Err(Error::DimensionMismatch {
                expected: self.views.len(),
                got: subsets.len(),
            });
        }
        self.evaluate_impl(est, weights, want_grad, Some(subsets), None)
    }

    fn evaluate_impl(
        &self,
        est: &Estimate,
        weights: LossWeights,
        want_grad: bool,
        subsets: Option<&[Vec<usize>]>,
        mut timer: Option<&mut StageTimes>,
    ) -> Result<LossValue> {
        self.check(est)?;
        let t0 = Instant::now();
        let vol = self.decode(est)?;
        if let Some(t) = timer.as_deref_mut() {
            t.add(Stage::DecodeForward, t0.elapsed());
        }

        let n = self.space.latent_dim();
        let mut grad = want_grad.then(|| Gradient::zeros(n));
        let mut voxel_cot: Vec<(usize, f64)> = Vec::new();
        let (mut sdf, mut depth, mut degenerate) = (0.0, 0.0, false);

        for (k, pv) in self.views.iter().enumerate() {
            let restricted: Vec<usize>;
            let pixels = match subsets {
                None => &pv.pixels,
                Some(sets) => {
                    let view = pv.view;
                    restricted = sets[k]
                        .iter()
                        .copied()
                        .filter(|&i| i < view.depth.data.len() && view.mask.data[i] && view.depth.data[i] > 0.0)
                        .collect();
                    &restricted
                }
            };
            if weights.sdf != 0.0 {
                let t0 = Instant::now();
                let part = Self::sdf_term(&vol, est, &pv.points, want_grad);
                sdf += part.value;
                if let (Some(g), Some((pg, vox))) = (grad.as_mut(), part.grad) {
                    g.add_scaled(&pg, weights.sdf);
                    voxel_cot.extend(vox.into_iter().map(|(i, c)| (i, c * weights.sdf)));
                }
                if let Some(t) = timer.as_deref_mut() {
                    t.add(Stage::Losses, t0.elapsed());
                }
            }
            if weights.depth != 0.0 {
                let (part, empty) = self.depth_term(&vol, est, pv, pixels, want_grad, timer.as_deref_mut());
                degenerate |= empty;
                depth += part.value;
                if let (Some(g), Some((pg, vox))) = (grad.as_mut(), part.grad) {
                    g.add_scaled(&pg, weights.depth);
                    voxel_cot.extend(vox.into_iter().map(|(i, c)| (i, c * weights.depth)));
                }
            }
        }

        if let Some(g) = grad.as_mut() {
            let t0 = Instant::now();
            g.shape = self.space.decode_vjp_sparse(&voxel_cot);
            if let Some(t) = timer {
                t.add(Stage::DecodeBackward, t0.elapsed());
            }
        }

        Ok(LossValue {
            total: weights.sdf * sdf + weights.depth * depth,
            sdf,
            depth,
            degenerate,
            grad,
        })
    }
}

/// Point-to-SDF loss and its gradient.
pub fn loss_sdf(est: &Estimate, space: &ShapeSpace, views: &[View]) -> Result<(f64, Gradient)> {
    let obj = Objective::new(space, views, RenderConfig::default())?;
    let v = obj.evaluate(est, LossWeights { sdf: 1.0, depth: 0.0 }, true, None)?;
    Ok((v.sdf, v.grad.expect("gradient requested")))
}

/// Depth loss, its gradient, and the degenerate flag.
pub fn loss_depth(
    est: &Estimate,
    space: &ShapeSpace,
    views: &[View],
    render: &RenderConfig,
) -> Result<(f64, Gradient, bool)> {
    let obj = Objective::new(space, views, *render)?;
    let v = obj.evaluate(est, LossWeights { sdf: 0.0, depth: 1.0 }, true, None)?;
    Ok((v.depth, v.grad.expect("gradient requested"), v.degenerate))
}

/// `weights.sdf · L_sdf + weights.depth · L_depth` and its gradient.
pub fn loss_total(
    est: &Estimate,
    space: &ShapeSpace,
    views: &[View],
    weights: LossWeights,
    render: &RenderConfig,
) -> Result<LossValue> {
    let obj = Objective::new(space, views, *render)?;
    obj.evaluate(est, weights, true, None)
}
