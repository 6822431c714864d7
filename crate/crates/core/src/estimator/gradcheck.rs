//! Finite-difference checks of the loss gradient.
//!
//! Rendered depth is only piecewise smooth: pixels enter and leave the valid
//! set at silhouettes and jump between surfaces at self-occlusions. The
//! analytic gradient differentiates the last tracing step with the trajectory
//! held fixed, so the reference here freezes it too. For every parameter
//! direction the depth term is restricted to pixels that hit in the base and
//! both perturbed states, keep their residual sign, and change smoothly
//! (the two one-sided differences agree to within 10%). The same
//! central difference on the unrestricted loss is reported alongside.

use serde::Serialize;

use super::loss::{Gradient, LossWeights, Objective};
use super::view::Estimate;
use crate::error::Result;
use crate::render::{render, DepthMap, Mask};
use crate::so3::UnitQuaternion;

/// Parameter groups, in the order of [`GradCheck::groups`].
pub const GROUPS: [&str; 4] = ["position", "orientation", "log_scale", "shape"];

#[derive(Clone, Debug, Serialize)]
pub struct GroupError {
    pub name: &'static str,
    /// ‖analytic − reference‖ / ‖reference‖ over the group's directions.
    pub rel_error: f64,
    /// Same against the unrestricted central difference.
    pub rel_error_unfrozen: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheck {
    pub groups: Vec<GroupError>,
    /// Directions whose analytic and reference signs agree.
    pub sign_agree: usize,
    /// Directions above the noise floor.
    pub sign_total: usize,
    pub analytic: Vec<f64>,
    pub reference: Vec<f64>,
    /// Fraction of valid depth pixels kept in the frozen set, averaged over directions.
    pub kept_fraction: f64,
}

impl GradCheck {
    pub fn max_rel_error(&self) -> f64 {
        self.groups.iter().map(|g| g.rel_error).fold(0.0, f64::max)
    }
}

/// Moves `est` by `h` along direction `k`: position axes, orientation tangent
/// basis (`normalize(q + h t)`), log scale, then shape dimensions.
pub fn perturb(est: &Estimate, k: usize, h: f64) -> Estimate {
    let mut e = est.clone();
    match k {
        0..=2 => e.position[k] += h,
        3..=5 => {
            let t = est.orientation.tangent_basis()[k - 3];
            let q = est.orientation.to_array();
            e.orientation = UnitQuaternion::from_array_normalized(std::array::from_fn(|i| q[i] + h * t[i]));
        }
        6 => e.scale *= h.exp(),
        _ => e.shape[k - 7] += h,
    }
    e
}

/// Directional derivative of the gradient along direction `k` of [`perturb`].
pub fn directional(g: &Gradient, q: UnitQuaternion, k: usize) -> f64 {
    match k {
        0..=2 => g.position[k],
        3..=5 => {
            let t = q.tangent_basis()[k - 3];
            (0..4).map(|i| g.orientation[i] * t[i]).sum()
        }
        6 => g.log_scale,
        _ => g.shape[k - 7],
    }
}

fn group_of(k: usize) -> usize {
    match k {
        0..=2 => 0,
        3..=5 => 1,
        6 => 2,
        _ => 3,
    }
}

fn depth_maps(obj: &Objective, est: &Estimate) -> Result<Vec<DepthMap>> {
    let vol = obj.decode(est)?;
    Ok((0..obj.view_count())
        .map(|k| {
            let view = obj.view(k);
            let pose = view.object_in_camera(&est.pose());
            render(&vol, &pose, est.scale, &view.cam, Some(&view.mask), obj.render_config()).depth
        })
        .collect())
}

fn smooth(d0: f64, dp: f64, dm: f64) -> bool {
    let (a, b) = (dp - d0, d0 - dm);
    (a - b).abs() <= 0.1 * a.abs().max(b.abs()) + 1e-12
}

/// Compares the analytic gradient with central differences of step `h`.
pub fn check_gradient(obj: &Objective, est: &Estimate, weights: LossWeights, h: f64) -> Result<GradCheck> {
    let dims = 7 + est.shape.len();
    let base = depth_maps(obj, est)?;
    let mut analytic = Vec::with_capacity(dims);
    let mut reference = Vec::with_capacity(dims);
    let mut unfrozen = Vec::with_capacity(dims);
    let mut kept = 0.0;

    let full = obj
        .evaluate(est, weights, true, None)?
        .grad
        .expect("gradient requested");
    for k in 0..dims {
        let (ep, em) = (perturb(est, k, h), perturb(est, k, -h));
        let (dp, dm) = (depth_maps(obj, &ep)?, depth_maps(obj, &em)?);
        let mut valid = 0usize;
        let subsets: Vec<Vec<usize>> = (0..obj.view_count())
            .map(|v| {
                let view = obj.view(v);
                let obs: &Mask = &view.mask;
                let pixels: Vec<usize> = (0..obs.data.len())
                    .filter(|&i| obs.data[i] && view.depth.data[i] > 0.0 && base[v].data[i] > 0.0)
                    .collect();
                valid += pixels.len();
                pixels
                    .into_iter()
                    .filter(|&i| {
                        let (d0, p, m, o) = (base[v].data[i], dp[v].data[i], dm[v].data[i], view.depth.data[i]);
                        p > 0.0
                            && m > 0.0
                            && smooth(d0, p, m)
                            && (d0 - o).signum() == (p - o).signum()
                            && (d0 - o).signum() == (m - o).signum()
                    })
                    .collect()
            })
            .collect();
        kept += subsets.iter().map(Vec::len).sum::<usize>() as f64 / valid.max(1) as f64;

        let g = obj
            .evaluate_on_pixels(est, weights, true, &subsets)?
            .grad
            .expect("gradient requested");
        analytic.push(directional(&g, est.orientation, k));
        let fp = obj.evaluate_on_pixels(&ep, weights, false, &subsets)?.total;
        let fm = obj.evaluate_on_pixels(&em, weights, false, &subsets)?.total;
        reference.push((fp - fm) / (2.0 * h));
        let up = obj.evaluate(&ep, weights, false, None)?.total;
        let um = obj.evaluate(&em, weights, false, None)?.total;
        unfrozen.push((up - um) / (2.0 * h));
    }
    let full_dir: Vec<f64> = (0..dims).map(|k| directional(&full, est.orientation, k)).collect();

    let mut groups = Vec::new();
    for (gi, name) in GROUPS.iter().enumerate() {
        let idx: Vec<usize> = (0..dims).filter(|k| group_of(*k) == gi).collect();
        if idx.is_empty() {
            continue;
        }
        let rel = |a: &[f64], b: &[f64]| {
            let num: f64 = idx.iter().map(|&k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();
            let den: f64 = idx.iter().map(|&k| b[k].powi(2)).sum::<f64>().sqrt();
            if den == 0.0 {
                num
            } else {
                num / den
            }
        };
        groups.push(GroupError {
            name,
            rel_error: rel(&analytic, &reference),
            rel_error_unfrozen: rel(&full_dir, &unfrozen),
        });
    }

    // sign agreement above a per-group noise floor
    let mut sign_agree = 0;
    let mut sign_total = 0;
    for k in 0..dims {
        let norm: f64 = (0..dims)
            .filter(|j| group_of(*j) == group_of(k))
            .map(|j| reference[j].powi(2))
            .sum::<f64>()
            .sqrt();
        if reference[k].abs() > 1e-3 * norm + 1e-12 {
            sign_total += 1;
            if reference[k].signum() == analytic[k].signum() {
                sign_agree += 1;
            }
        }
    }

    Ok(GradCheck {
        groups,
        sign_agree,
        sign_total,
        analytic,
        reference,
        kept_fraction: kept / dims as f64,
    })
}
