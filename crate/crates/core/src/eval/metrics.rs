//! Reconstruction and pose metrics.
//!
//! Surfaces are the zero-crossing points of the estimated and ground-truth
//! volumes mapped to world meters. With `d(a, B)` the distance from `a` to its
//! nearest neighbour in `B`:
//!
//! ```text
//! P      = mean_{e ∈ E} d(e, G)            (mm)
//! R_mean = mean_{g ∈ G} d(g, E)            (mm)
//! CD     = (P + R_mean) / 2                (mm)
//! P_1cm  = 100 · |{e : d(e, G) < 1 cm}| / |E|
//! R_1cm  = 100 · |{g : d(g, E) < 1 cm}| / |G|
//! F_1cm  = harmonic mean of P_1cm and R_1cm as fractions
//! ```

use std::collections::HashMap;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Estimate;
use crate::render::Pose;
use crate::sdf::{extract_surface_points, SdfVolume};
use crate::shape_space::ShapeSpace;
use crate::so3::geodesic_angle;

const ONE_CM: f64 = 0.01;
/// Rings searched before falling back to exhaustive search.
const MAX_RING: i64 = 12;

/// Exact nearest-neighbour distances through a uniform hash grid.
pub struct NearestNeighbors {
    points: Vec<Vector3<f64>>,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl NearestNeighbors {
    pub fn new(points: Vec<Vector3<f64>>, cell: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        assert!(cell > 0.0, "cell size must be positive");
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        Ok(NearestNeighbors { points, cell, cells })
    }

    fn key(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    /// Distance from `q` to the closest stored point.
    pub fn distance(&self, q: &Vector3<f64>) -> f64 {
        let c = Self::key(q, self.cell);
        let mut best = f64::INFINITY;
        for ring in 0i64..=MAX_RING {
            // unsearched points lie at least (ring - 1) cells away
            if ring > 0 && best <= (ring - 1) as f64 * self.cell {
                return best;
            }
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &i in ids {
                                best = best.min((self.points[i as usize] - q).norm());
                            }
                        }
                    }
                }
            }
        }
        if best <= MAX_RING as f64 * self.cell {
            best
        } else {
            self.distance_brute_force(q)
        }
    }

    /// Reference implementation by exhaustive search.
    pub fn distance_brute_force(&self, q: &Vector3<f64>) -> f64 {
        self.points.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min)
    }
}

fn nn_distances(from: &[Vector3<f64>], to: Vec<Vector3<f64>>) -> Result<Vec<f64>> {
    let nn = NearestNeighbors::new(to, 0.005)?;
    Ok(from.par_iter().with_min_len(256).map(|p| nn.distance(p)).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconMetrics {
    /// Millimeters.
    pub p: f64,
    /// Millimeters.
    pub r_mean: f64,
    /// Millimeters.
    pub cd: f64,
    /// Percent.
    pub p_1cm: f64,
    /// Percent.
    pub r_1cm: f64,
}

impl ReconMetrics {
    /// F-score at 1 cm as a fraction.
    pub fn f_1cm(&self) -> f64 {
        let (p, r) = (self.p_1cm / 100.0, self.r_1cm / 100.0);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Metrics between two world-space surface samples.
pub fn recon_metrics_points(est: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<ReconMetrics> {
    if est.is_empty() || gt.is_empty() {
        return Err(Error::NoSurface);
    }
    let d_eg = nn_distances(est, gt.to_vec())?;
    let d_ge = nn_distances(gt, est.to_vec())?;
    let mean = |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64;
    let within = |d: &[f64]| 100.0 * d.iter().filter(|x| **x < ONE_CM).count() as f64 / d.len() as f64;
    let p = mean(&d_eg) * 1e3;
    let r_mean = mean(&d_ge) * 1e3;
    Ok(ReconMetrics {
        p,
        r_mean,
        cd: 0.5 * (p + r_mean),
        p_1cm: within(&d_eg),
        r_1cm: within(&d_ge),
    })
}

/// Surface of `vol` placed by `pose` and `scale` in world meters.
pub fn world_surface(vol: &SdfVolume, pose: &Pose, scale: f64) -> Result<Vec<Vector3<f64>>> {
    Ok(extract_surface_points(vol)?
        .into_iter()
        .map(|p| pose.transform_point(p * scale))
        .collect())
}

pub fn recon_metrics(
    est: &Estimate,
    space: &ShapeSpace,
    gt_vol: &SdfVolume,
    gt_pose: &Pose,
    gt_scale: f64,
) -> Result<ReconMetrics> {
    let est_vol = space.decode(&est.shape)?;
    let e = world_surface(&est_vol, &est.pose(), est.scale)?;
    let g = world_surface(gt_vol, gt_pose, gt_scale)?;
    recon_metrics_points(&e, &g)
}

/// Success thresholds: (degrees, meters, minimum F_1cm).
pub const THRESHOLDS: [(f64, f64, f64); 4] = [(10.0, 0.02, 0.0), (5.0, 0.01, 0.0), (10.0, 0.02, 0.6), (5.0, 0.01, 0.8)];

pub fn threshold_label(i: usize) -> String {
    let (deg, m, f) = THRESHOLDS[i];
    if f > 0.0 {
        format!("{deg}°,{}cm,F≥{f}", m * 100.0)
    } else {
        format!("{deg}°,{}cm", m * 100.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseMetrics {
    /// Meters.
    pub position_error: f64,
    /// Degrees.
    pub orientation_error: f64,
    pub f_1cm: f64,
    /// Pass flags in the order of [`THRESHOLDS`].
    pub success: [bool; 4],
}

/// Pose errors against ground truth; `f_1cm` comes from the reconstruction metrics.
pub fn pose_metrics(est: &Estimate, gt: &Estimate, f_1cm: f64) -> PoseMetrics {
    let position_error = (est.position - gt.position).norm();
    let orientation_error = geodesic_angle(est.orientation, gt.orientation).to_degrees();
    let success = THRESHOLDS.map(|(deg, m, f)| orientation_error <= deg && position_error <= m && f_1cm >= f);
    PoseMetrics {
        position_error,
        orientation_error,
        f_1cm,
        success,
    }
}
