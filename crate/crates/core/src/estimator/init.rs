//! Grid-scoring initialization: every cell of the orientation grid is scored by
//! the point-to-SDF loss of the mean shape placed near the point-set centroid,
//! and the scores are turned into a distribution over cells by a softmax.
//!
//! The centroid of a partial view is biased toward the camera, so by default
//! each cell first slides the shape onto the points with a few Gauss-Newton
//! steps on the translation.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::view::{backproject, Estimate, View};
use crate::error::{Error, Result};
use crate::sdf::{extract_surface_points, SdfVolume};
use crate::shape_space::ShapeSpace;
use crate::so3::{OrientationGrid, UnitQuaternion};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewSelection {
    /// Score orientations on the first view only.
    #[default]
    First,
    /// Score every view separately and keep the most confident distribution.
    Best,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Softmax temperature on the per-cell losses.
    pub beta: f64,
    pub view_selection: ViewSelection,
    /// Category prior on the metric scale, meters.
    pub scale_bounds: (f64, f64),
    /// Points used to score each cell (deterministic stride subsample).
    pub max_points: usize,
    /// Gauss-Newton steps aligning the position to the mean shape in each
    /// cell before scoring; 0 scores every cell at the centroid.
    pub align_steps: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            beta: 50.0,
            view_selection: ViewSelection::First,
            scale_bounds: (0.01, 1.0),
            max_points: 500,
            align_steps: 4,
        }
    }
}

impl InitConfig {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_bounds;
        if !(self.beta > 0.0 && lo > 0.0 && lo <= hi && self.max_points > 0) {
            return Err(Error::InvalidConfig(format!("bad init config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitResult {
    pub estimate: Estimate,
    /// Probability per grid cell; sums to one.
    pub orientation_distribution: Vec<f64>,
    pub best_cell: usize,
    /// View whose distribution was kept.
    pub view: usize,
}

impl InitResult {
    pub fn max_prob(&self) -> f64 {
        self.orientation_distribution[self.best_cell]
    }

    /// Shannon entropy of the orientation distribution, nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.orientation_distribution)
    }
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// Numerically stable softmax of `-beta * losses`.
pub fn softmax_neg(losses: &[f64], beta: f64) -> Vec<f64> {
    let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = losses.iter().map(|l| (-beta * (l - min)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

/// Range of the points projected on their dominant principal axis.
pub fn principal_extent(points: &[Vector3<f64>]) -> f64 {
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    let axis = eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned();
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = axis.dot(p);
        (lo.min(t), hi.max(t))
    });
    hi - lo
}

fn subsample(points: &[Vector3<f64>], max: usize) -> Vec<Vector3<f64>> {
    if points.len() <= max {
        return points.to_vec();
    }
    (0..max).map(|i| points[i * points.len() / max]).collect()
}

/// Per cell: translation-aligned position and mean |SDF| of the points.
fn score_cells(
    vol: &SdfVolume,
    centers: &[UnitQuaternion],
    points: &[Vector3<f64>],
    position: Vector3<f64>,
    scale: f64,
    align_steps: usize,
) -> Vec<(Vector3<f64>, f64)> {
    let n = points.len() as f64;
    // keep each step well inside the cube
    let max_step = 0.1 * scale;
    centers
        .par_iter()
        .map(|q| {
            let rot = q.rotation_matrix();
            let rt = rot.transpose();
            let mut t = position;
            for _ in 0..align_steps {
                // v(t + δ) ≈ v - a·δ with a = R ∇V / s
                let mut jtj = Matrix3::identity() * 1e-9;
                let mut jtr = Vector3::zeros();
                for x in points {
                    let s = vol.sample(rt * (x - t) / scale);
                    let a = rot * s.grad / scale;
                    jtj += a * a.transpose();
                    jtr += a * s.value;
                }
                let Some(delta) = jtj.try_inverse().map(|m| m * jtr) else {
                    break;
                };
                let len = delta.norm();
                t += if len > max_step {
                    delta * (max_step / len)
                } else {
                    delta
                };
            }
            let loss = points
                .iter()
                .map(|x| vol.sample_value(rt * (x - t) / scale).abs())
                .sum::<f64>()
                / n;
            (t, loss)
        })
        .collect()
}

/// Position, scale and orientation distribution from the observed points.
pub fn init_grid_scoring(
    views: &[View],
    space: &ShapeSpace,
    grid: &OrientationGrid,
    cfg: &InitConfig,
) -> Result<InitResult> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let per_view: Vec<Vec<Vector3<f64>>> = views
        .iter()
        .map(|v| {
            Ok(backproject(v)?
                .into_iter()
                .map(|p| v.cam_pose.transform_point(p))
                .collect())
        })
        .collect::<Result<_>>()?;
    let all: Vec<Vector3<f64>> = per_view.iter().flatten().copied().collect();
    let centroid = all.iter().sum::<Vector3<f64>>() / all.len() as f64;

    let mean_shape = vec![0.0; space.latent_dim()];
    let vol = space.decode(&mean_shape)?;
    let canonical_extent = principal_extent(&extract_surface_points(&vol)?);
    let (lo, hi) = cfg.scale_bounds;
    let scale = (principal_extent(&all) / canonical_extent).clamp(lo, hi);

    let centers = grid.centers();
    let candidates: Vec<usize> = match cfg.view_selection {
        ViewSelection::First => vec![0],
        ViewSelection::Best => (0..views.len()).collect(),
    };
    let mut best: Option<(usize, Vec<f64>, usize, Vector3<f64>)> = None;
    for k in candidates {
        let pts = subsample(&per_view[k], cfg.max_points);
        let scored = score_cells(&vol, &centers, &pts, centroid, scale, cfg.align_steps);
        let losses: Vec<f64> = scored.iter().map(|s| s.1).collect();
        let o = softmax_neg(&losses, cfg.beta);
        let cell = argmax(&o);
        if best.as_ref().is_none_or(|(_, bo, bc, _)| o[cell] > bo[*bc]) {
            best = Some((k, o, cell, scored[cell].0));
        }
    }
    let (view, orientation_distribution, best_cell, position) = best.expect("at least one view");
    Ok(InitResult {
        estimate: Estimate {
            position,
            orientation: centers[best_cell],
            scale,
            shape: mean_shape,
        },
        orientation_distribution,
        best_cell,
        view,
    })
}
