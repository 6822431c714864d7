//! Differentiable depth rendering of a posed, scaled SDF volume.
//!
//! The forward pass sphere-traces each pixel ray through the volume, starting
//! where the ray enters the bounding sphere of the posed cube. Once a step
//! lands on the inside of the surface the bracketing interval is refined to
//! the zero crossing of the trilinear field, so depth varies smoothly with
//! all inputs away from silhouettes.
//!
//! The backward pass differentiates only the last step: at the zero crossing
//! `F(t) = s · V(p(t)) = 0` one Newton step with the trajectory held fixed
//! gives `dt = -(∂F/∂θ) / (∂F/∂t)`, chained through the trilinear corner
//! weights (voxels), the canonical point `p = R(q)ᵀ (t d - x) / s` (pose) and
//! the metric scale `s`.

mod camera;

pub use camera::{DepthMap, Mask, PinholeCamera, Pose};

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sdf::{SdfVolume, CUBE_DIAMETER};

/// Magnitude floor for `∂F/∂t` at a hit, bounding gradients at grazing incidence.
const SLOPE_FLOOR: f64 = 1e-3;

/// Sphere-tracing parameters.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Fraction of the sampled distance advanced per step.
    pub step_factor: f64,
    pub max_steps: usize,
    /// Hit tolerance in voxels; the metric tolerance is `scale · hit_voxels / R`.
    /// It is also the minimum step length near the surface.
    pub hit_voxels: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            step_factor: 0.9,
            max_steps: 96,
            hit_voxels: 0.5,
        }
    }
}

impl RenderConfig {
    pub fn hit_epsilon(&self, scale: f64, resolution: usize) -> f64 {
        scale * self.hit_voxels / resolution as f64
    }
}

/// Where a pixel ray met the surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    /// Distance along the unit ray, meters.
    pub t: f64,
    /// Canonical-frame hit point.
    pub point: Vector3<f64>,
    pub steps: u32,
}

/// Identifies the inputs a [`Rendering`] was produced from.
#[derive(Clone, Copy, Debug, PartialEq)]
struct RenderKey {
    pose: Pose,
    scale: f64,
    camera: PinholeCamera,
    volume: u64,
}

fn volume_fingerprint(vol: &SdfVolume) -> u64 {
    // FNV-1a over the value bits
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ vol.resolution() as u64;
    for v in vol.values() {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Output of [`render`]: the depth map plus per-pixel hit records needed by
/// [`render_backward`].
#[derive(Clone, Debug)]
pub struct Rendering {
    pub depth: DepthMap,
    pub hits: Vec<Option<Hit>>,
    key: RenderKey,
}

impl Rendering {
    pub fn hit_count(&self) -> usize {
        self.hits.iter().filter(|h| h.is_some()).count()
    }
}

/// Gradients of `Σ cotangent · depth` with respect to the render inputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RenderGradients {
    pub d_position: Vector3<f64>,
    /// Ambient gradient over `(w, x, y, z)`; project to the tangent space before use.
    pub d_quaternion: [f64; 4],
    pub d_scale: f64,
    /// Sorted `(voxel index, gradient)` pairs.
    pub d_voxels: Vec<(usize, f64)>,
}

struct Tracer<'a> {
    vol: &'a SdfVolume,
    scale: f64,
    rot_t: nalgebra::Matrix3<f64>,
    position: Vector3<f64>,
    radius: f64,
    cfg: RenderConfig,
    eps: f64,
}

impl<'a> Tracer<'a> {
    fn new(vol: &'a SdfVolume, pose: &Pose, scale: f64, cfg: RenderConfig) -> Self {
        Tracer {
            vol,
            scale,
            rot_t: pose.orientation.rotation_matrix().transpose(),
            position: pose.position,
            radius: 0.5 * CUBE_DIAMETER * scale,
            cfg,
            eps: cfg.hit_epsilon(scale, vol.resolution()),
        }
    }

    #[inline]
    fn canonical(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, t: f64) -> Vector3<f64> {
        origin + dir * t
    }

    /// Traces a unit-direction ray from the camera center.
    fn trace(&self, d: Vector3<f64>) -> Option<Hit> {
        let b = d.dot(&self.position);
        let c = self.position.norm_squared() - self.radius * self.radius;
        let disc = b * b - c;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let t_exit = b + sq;
        if t_exit <= 0.0 {
            return None;
        }
        let mut t = (b - sq).max(0.0);

        let inv_s = 1.0 / self.scale;
        let origin = self.rot_t * (-self.position) * inv_s;
        let dir = self.rot_t * d * inv_s;
        let field = |t: f64| self.scale * self.vol.sample_value(self.canonical(&origin, &dir, t));

        let mut f = field(t);
        if f <= 0.0 {
            return Some(Hit {
                t,
                point: self.canonical(&origin, &dir, t),
                steps: 0,
            });
        }
        for step in 1..=self.cfg.max_steps {
            let t_next = t + (self.cfg.step_factor * f).max(self.eps);
            if t_next > t_exit {
                return None;
            }
            let f_next = field(t_next);
            if f_next <= 0.0 {
                let root = refine_root(&field, t, f, t_next, f_next);
                return Some(Hit {
                    t: root,
                    point: self.canonical(&origin, &dir, root),
                    steps: step as u32,
                });
            }
            t = t_next;
            f = f_next;
        }
        None
    }
}

/// Zero of `f` on `[a, b]` with `f(a) > 0 ≥ f(b)` (Illinois false position).
fn refine_root<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> f64 {
    if fb == 0.0 {
        return b;
    }
    let mut c = b;
    let mut side = 0i8;
    for _ in 0..60 {
        c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    c
}

/// Sphere-traced z-depth of the object seen through `cam`.
///
/// `pose` places the object in the camera frame; `scale` is the metric edge
/// length of the canonical cube. Only pixels inside `mask` are traced.
pub fn render(
    vol: &SdfVolume,
    pose: &Pose,
    scale: f64,
    cam: &PinholeCamera,
    mask: Option<&Mask>,
    cfg: &RenderConfig,
) -> Rendering {
    assert!(scale > 0.0, "render scale must be positive");
    let tracer = Tracer::new(vol, pose, scale, *cfg);
    let (w, h) = (cam.width, cam.height);
    if let Some(m) = mask {
        assert_eq!((m.width, m.height), (w, h), "mask size differs from camera");
    }
    let rows: Vec<Vec<Option<Hit>>> = (0..h)
        .into_par_iter()
        .map(|i| {
            (0..w)
                .map(|j| {
                    if mask.is_some_and(|m| !m.get(i, j)) {
                        return None;
                    }
                    tracer.trace(cam.ray(i, j).normalize())
                })
                .collect()
        })
        .collect();
    let hits: Vec<Option<Hit>> = rows.into_iter().flatten().collect();
    let mut depth = DepthMap::zeros(w, h);
    for (idx, hit) in hits.iter().enumerate() {
        if let Some(hit) = hit {
            let (i, j) = (idx / w, idx % w);
            let d = cam.ray(i, j);
            depth.data[idx] = hit.t / d.norm();
        }
    }
    Rendering {
        depth,
        hits,
        key: RenderKey {
            pose: *pose,
            scale,
            camera: *cam,
            volume: volume_fingerprint(vol),
        },
    }
}

/// Per-pixel derivative of depth, before multiplication by the cotangent.
struct PixelGrad {
    d_position: Vector3<f64>,
    d_quaternion: [f64; 4],
    d_scale: f64,
    index: [usize; 8],
    weight: [f64; 8],
}

fn pixel_gradient(vol: &SdfVolume, pose: &Pose, scale: f64, ray: Vector3<f64>, hit: &Hit) -> PixelGrad {
    let norm = ray.norm();
    let d = ray / norm;
    let dz = 1.0 / norm; // z component of the unit direction
    let s = vol.sample(hit.point);
    let rot = pose.orientation.rotation_matrix();
    let grad_world = rot * s.grad;
    // ∂F/∂t along the unit ray
    let slope = grad_world.dot(&d).min(-SLOPE_FLOOR);
    let k = -dz / slope; // d(depth)/dF for frozen t_prev

    let w = d * hit.t - pose.position;
    let d_position = -grad_world * k;
    let dq = pose.orientation.inverse_rotate_vjp(w, s.grad);
    let d_quaternion = std::array::from_fn(|i| dq[i] * k);
    let d_scale = (s.value - s.grad.dot(&hit.point)) * k;
    let weight = std::array::from_fn(|c| s.corners.weight[c] * scale * k);
    PixelGrad {
        d_position,
        d_quaternion,
        d_scale,
        index: s.corners.index,
        weight,
    }
}

/// Backward pass of [`render`] for the cotangent `∂L/∂depth` (row-major, one
/// value per pixel; misses are ignored).
pub fn render_backward(
    vol: &SdfVolume,
    pose: &Pose,
    scale: f64,
    cam: &PinholeCamera,
    rendering: &Rendering,
    cotangent: &[f64],
) -> Result<RenderGradients> {
    let key = RenderKey {
        pose: *pose,
        scale,
        camera: *cam,
        volume: volume_fingerprint(vol),
    };
    if key != rendering.key {
        return Err(Error::StaleHitInfo);
    }
    if cotangent.len() != rendering.hits.len() {
        return Err(Error::DimensionMismatch {
            expected: rendering.hits.len(),
            got: cotangent.len(),
        });
    }
    let active: Vec<(usize, Hit, f64)> = rendering
        .hits
        .iter()
        .enumerate()
        .filter_map(|(idx, h)| h.filter(|_| cotangent[idx] != 0.0).map(|h| (idx, h, cotangent[idx])))
        .collect();
    Ok(backward_pixels(vol, pose, scale, cam, &active))
}

/// Traces only the listed pixels (row-major indices); output is aligned with `pixels`.
pub(crate) fn trace_pixels(
    vol: &SdfVolume,
    pose: &Pose,
    scale: f64,
    cam: &PinholeCamera,
    pixels: &[usize],
    cfg: &RenderConfig,
) -> Vec<Option<Hit>> {
    let tracer = Tracer::new(vol, pose, scale, *cfg);
    let w = cam.width;
    pixels
        .par_iter()
        .with_min_len(64)
        .map(|&idx| tracer.trace(cam.ray(idx / w, idx % w).normalize()))
        .collect()
}

/// Accumulates gradients over `(pixel index, hit, cotangent)` triples.
pub(crate) fn backward_pixels(
    vol: &SdfVolume,
    pose: &Pose,
    scale: f64,
    cam: &PinholeCamera,
    items: &[(usize, Hit, f64)],
) -> RenderGradients {
    let w = cam.width;
    let per_pixel: Vec<PixelGrad> = items
        .par_iter()
        .with_min_len(64)
        .map(|(idx, hit, _)| pixel_gradient(vol, pose, scale, cam.ray(idx / w, idx % w), hit))
        .collect();

    let mut out = RenderGradients::default();
    if per_pixel.is_empty() {
        return out;
    }
    let mut dense = vec![0.0; vol.len()];
    for ((_, _, c), g) in items.iter().zip(&per_pixel) {
        out.d_position += g.d_position * *c;
        for k in 0..4 {
            out.d_quaternion[k] += g.d_quaternion[k] * c;
        }
        out.d_scale += g.d_scale * c;
        for (i, wt) in g.index.iter().zip(&g.weight) {
            dense[*i] += wt * c;
        }
    }
    out.d_voxels = dense
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdf::ShapeSpec;
    use crate::so3::UnitQuaternion;

    fn sphere_scene() -> (SdfVolume, Pose, PinholeCamera) {
        let vol = ShapeSpec::sphere(0.3).bake(64).unwrap();
        let pose = Pose::new(Vector3::new(0.0, 0.0, 1.0), UnitQuaternion::IDENTITY);
        let cam = PinholeCamera::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        (vol, pose, cam)
    }

    #[test]
    fn center_pixel_depth_and_corner_miss() {
        let (vol, pose, cam) = sphere_scene();
        let r = render(&vol, &pose, 1.0, &cam, None, &RenderConfig::default());
        let d = r.depth.get(240, 320);
        assert!((d - 0.7).abs() <= 2.0 / 64.0, "{d}");
        assert_eq!(r.depth.get(0, 0), 0.0);
        assert!(r.hits[0].is_none());
    }

    #[test]
    fn mask_restricts_tracing() {
        let (vol, pose, cam) = sphere_scene();
        let mut mask = Mask::empty(640, 480);
        mask.data[240 * 640 + 320] = true;
        let r = render(&vol, &pose, 1.0, &cam, Some(&mask), &RenderConfig::default());
        assert_eq!(r.hit_count(), 1);
        assert_eq!(r.depth.valid_count(), 1);
    }

    #[test]
    fn rendering_is_deterministic() {
        let (vol, pose, cam) = sphere_scene();
        let a = render(&vol, &pose, 1.0, &cam, None, &RenderConfig::default());
        let b = render(&vol, &pose, 1.0, &cam, None, &RenderConfig::default());
        assert!(a
            .depth
            .data
            .iter()
            .zip(&b.depth.data)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    fn center_only(cam: &PinholeCamera) -> Vec<f64> {
        let mut c = vec![0.0; cam.pixel_count()];
        c[240 * cam.width + 320] = 1.0;
        c
    }

    #[test]
    fn center_pixel_gradients() {
        let (vol, pose, cam) = sphere_scene();
        let cfg = RenderConfig::default();
        let r = render(&vol, &pose, 1.0, &cam, None, &cfg);
        let g = render_backward(&vol, &pose, 1.0, &cam, &r, &center_only(&cam)).unwrap();
        assert!((g.d_position.z - 1.0).abs() <= 0.1, "{:?}", g.d_position);

        // finite differences on the rendered depth
        let h = 1e-4;
        let depth_at = |pose: &Pose, s: f64| render(&vol, pose, s, &cam, None, &cfg).depth.get(240, 320);
        let mut up = pose;
        up.position.z += h;
        let mut down = pose;
        down.position.z -= h;
        let fd_z = (depth_at(&up, 1.0) - depth_at(&down, 1.0)) / (2.0 * h);
        assert!((fd_z - g.d_position.z).abs() <= 0.1 * fd_z.abs());

        let fd_s = (depth_at(&pose, 1.0 + h) - depth_at(&pose, 1.0 - h)) / (2.0 * h);
        assert!((g.d_scale - fd_s).abs() <= 0.1 * fd_s.abs(), "{} vs {fd_s}", g.d_scale);
        assert!((g.d_scale + 0.3).abs() < 0.03);
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let (vol, pose, cam) = sphere_scene();
        let r = render(&vol, &pose, 1.0, &cam, None, &RenderConfig::default());
        let g = render_backward(&vol, &pose, 1.0, &cam, &r, &vec![0.0; cam.pixel_count()]).unwrap();
        assert_eq!(g, RenderGradients::default());
    }

    #[test]
    fn stale_hit_info_is_rejected() {
        let (vol, pose, cam) = sphere_scene();
        let r = render(&vol, &pose, 1.0, &cam, None, &RenderConfig::default());
        let mut moved = pose;
        moved.position.x += 0.01;
        let c = center_only(&cam);
        assert!(matches!(
            render_backward(&vol, &moved, 1.0, &cam, &r, &c),
            Err(Error::StaleHitInfo)
        ));
        let other = ShapeSpec::sphere(0.31).bake(64).unwrap();
        assert!(matches!(
            render_backward(&other, &pose, 1.0, &cam, &r, &c),
            Err(Error::StaleHitInfo)
        ));
    }

    #[test]
    fn voxel_gradients_touch_only_hit_neighborhoods() {
        let (vol, pose, cam) = sphere_scene();
        let r = render(&vol, &pose, 1.0, &cam, None, &RenderConfig::default());
        let g = render_backward(&vol, &pose, 1.0, &cam, &r, &center_only(&cam)).unwrap();
        let hit = r.hits[240 * 640 + 320].unwrap();
        let corners = vol.sample(hit.point).corners.index;
        assert!(!g.d_voxels.is_empty());
        assert!(g.d_voxels.iter().all(|(i, _)| corners.contains(i)));
    }
}
