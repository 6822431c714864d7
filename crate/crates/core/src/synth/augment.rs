//! Mask and depth corruption: a random similarity transform of the mask with
//! uniform outlier depths where the new mask leaves the object, and optional
//! Gaussian blur of the masked depth to mimic flying pixels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::render::{DepthMap, Mask};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    /// Largest in-plane mask rotation, degrees.
    pub max_rot_deg: f64,
    /// Largest translation per axis, pixels.
    pub max_shift_px: f64,
    /// Mask scale is drawn from `1 ± max_scale`.
    pub max_scale: f64,
    /// Probability of blurring the depth.
    pub blur_prob: f64,
    /// Blur standard deviation, pixels.
    pub blur_sigma: f64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            max_rot_deg: 5.0,
            max_shift_px: 3.0,
            max_scale: 0.05,
            blur_prob: 0.5,
            blur_sigma: 1.0,
        }
    }
}

/// Similarity transform of the mask about its centroid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MaskAffine {
    pub angle_deg: f64,
    /// (row, column) shift in pixels.
    pub shift: [f64; 2],
    pub scale: f64,
}

impl MaskAffine {
    pub const IDENTITY: MaskAffine = MaskAffine {
        angle_deg: 0.0,
        shift: [0.0, 0.0],
        scale: 1.0,
    };

    pub fn sample<R: Rng + ?Sized>(rng: &mut R, p: &AugmentParams) -> Self {
        let sym = |rng: &mut R, m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        MaskAffine {
            angle_deg: sym(rng, p.max_rot_deg),
            shift: [sym(rng, p.max_shift_px), sym(rng, p.max_shift_px)],
            scale: 1.0 + sym(rng, p.max_scale),
        }
    }
}

/// Record of what was applied to one view.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentMeta {
    pub affine: Option<MaskAffine>,
    pub outliers: usize,
    pub dropped: usize,
    pub blurred: bool,
}

/// Warps the mask by `a` (nearest-neighbour inverse mapping).
pub fn warp_mask(mask: &Mask, a: &MaskAffine) -> Mask {
    let (w, h) = (mask.width, mask.height);
    let n = mask.count().max(1) as f64;
    let (mut ci, mut cj) = (0.0, 0.0);
    for (idx, m) in mask.data.iter().enumerate() {
        if *m {
            ci += (idx / w) as f64;
            cj += (idx % w) as f64;
        }
    }
    let (ci, cj) = (ci / n, cj / n);
    let (s, c) = a.angle_deg.to_radians().sin_cos();
    let mut out = Mask::empty(w, h);
    for i in 0..h {
        for j in 0..w {
            // inverse: undo shift, rotation and scale about the centroid
            let y = i as f64 - a.shift[0] - ci;
            let x = j as f64 - a.shift[1] - cj;
            let xs = (c * x + s * y) / a.scale + cj;
            let ys = (-s * x + c * y) / a.scale + ci;
            let (si, sj) = (ys.round(), xs.round());
            if si >= 0.0 && sj >= 0.0 && (si as usize) < h && (sj as usize) < w {
                out.data[i * w + j] = mask.get(si as usize, sj as usize);
            }
        }
    }
    out
}

/// Replaces the mask by its warp. Newly covered pixels get depths uniform in
/// `outlier_range`; uncovered ones leave the mask.
pub fn augment_mask<R: Rng + ?Sized>(
    depth: &DepthMap,
    mask: &Mask,
    a: &MaskAffine,
    outlier_range: (f64, f64),
    rng: &mut R,
) -> (DepthMap, Mask, AugmentMeta) {
    let warped = warp_mask(mask, a);
    let mut d = depth.clone();
    let mut meta = AugmentMeta {
        affine: Some(*a),
        ..AugmentMeta::default()
    };
    for idx in 0..d.data.len() {
        match (mask.data[idx], warped.data[idx]) {
            (false, true) => {
                d.data[idx] = rng.random_range(outlier_range.0..=outlier_range.1);
                meta.outliers += 1;
            }
            (true, false) => {
                d.data[idx] = 0.0;
                meta.dropped += 1;
            }
            _ => {}
        }
    }
    (d, warped, meta)
}

/// Normalized Gaussian convolution of the masked depth; pixels outside the
/// mask or with zero depth neither contribute nor change.
pub fn blur_depth(depth: &DepthMap, mask: &Mask, sigma: f64) -> DepthMap {
    let (w, h) = (depth.width, depth.height);
    let r = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let valid = |idx: usize| mask.data[idx] && depth.data[idx] > 0.0;
    let mut out = depth.clone();
    for i in 0..h {
        for j in 0..w {
            if !valid(i * w + j) {
                continue;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for di in -r..=r {
                let ii = i as isize + di;
                if ii < 0 || ii >= h as isize {
                    continue;
                }
                for dj in -r..=r {
                    let jj = j as isize + dj;
                    if jj < 0 || jj >= w as isize {
                        continue;
                    }
                    let idx = ii as usize * w + jj as usize;
                    if valid(idx) {
                        let k = kernel[(di + r) as usize] * kernel[(dj + r) as usize];
                        num += k * depth.data[idx];
                        den += k;
                    }
                }
            }
            out.data[i * w + j] = num / den;
        }
    }
    out
}

/// Blurs with probability `p`; returns whether it did.
pub fn flying_pixels<R: Rng + ?Sized>(
    depth: &DepthMap,
    mask: &Mask,
    p: f64,
    sigma: f64,
    rng: &mut R,
) -> (DepthMap, bool) {
    if p > 0.0 && rng.random_bool(p.min(1.0)) {
        (blur_depth(depth, mask, sigma), true)
    } else {
        (depth.clone(), false)
    }
}
