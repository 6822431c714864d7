use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::{DepthMap, Mask, PinholeCamera, Pose};
use crate::so3::UnitQuaternion;

/// One registered observation: depth, object mask, intrinsics and the known
/// camera-to-world pose.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub depth: DepthMap,
    pub mask: Mask,
    pub cam: PinholeCamera,
    pub cam_pose: Pose,
}

impl View {
    pub fn new(depth: DepthMap, mask: Mask, cam: PinholeCamera, cam_pose: Pose) -> Result<Self> {
        cam.validate()?;
        if (depth.width, depth.height) != (cam.width, cam.height)
            || (mask.width, mask.height) != (cam.width, cam.height)
        {
            return Err(Error::InvalidConfig(format!(
                "view images ({}x{} depth, {}x{} mask) do not match the {}x{} camera",
                depth.width, depth.height, mask.width, mask.height, cam.width, cam.height
            )));
        }
        Ok(View {
            depth,
            mask,
            cam,
            cam_pose,
        })
    }

    /// Row-major indices of masked pixels with a valid depth.
    pub fn valid_pixels(&self) -> Vec<usize> {
        (0..self.depth.data.len())
            .filter(|&i| self.mask.data[i] && self.depth.data[i] > 0.0)
            .collect()
    }

    /// Object pose in this camera's frame for an object pose in the world.
    pub fn object_in_camera(&self, object_in_world: &Pose) -> Pose {
        self.cam_pose.inverse().compose(object_in_world)
    }
}

/// Camera-frame points of all masked pixels with positive depth.
pub fn backproject(view: &View) -> Result<Vec<Vector3<f64>>> {
    let w = view.cam.width;
    let pts: Vec<Vector3<f64>> = view
        .valid_pixels()
        .into_iter()
        .map(|idx| view.cam.ray(idx / w, idx % w) * view.depth.data[idx])
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(pts)
}

/// The optimized latent state: world position, orientation, metric scale
/// (edge length of the canonical cube) and latent shape code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub position: Vector3<f64>,
    #[serde(rename = "quaternion")]
    pub orientation: UnitQuaternion,
    pub scale: f64,
    pub shape: Vec<f64>,
}

impl Estimate {
    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.orientation)
    }

    /// World point → canonical object coordinates.
    pub fn to_canonical(&self, x: Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse_rotate(x - self.position) / self.scale
    }

    /// Canonical object coordinates → world point.
    pub fn to_world(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.orientation.rotate(p * self.scale) + self.position
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> PinholeCamera {
        PinholeCamera::new(500.0, 500.0, 3.5, 2.5, 8, 6).unwrap()
    }

    #[test]
    fn principal_pixel_backprojects_on_axis() {
        let c = cam();
        let mut depth = DepthMap::zeros(8, 6);
        let mut mask = Mask::empty(8, 6);
        // pixel (2, 3): ray ((3.5 - 3.5)/fx, (2.5 - 2.5)/fy, 1)
        depth.data[2 * 8 + 3] = 1.0;
        mask.data[2 * 8 + 3] = true;
        let v = View::new(depth, mask, c, Pose::IDENTITY).unwrap();
        let pts = backproject(&v).unwrap();
        assert_eq!(pts, vec![Vector3::new(0.0, 0.0, 1.0)]);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let mut depth = DepthMap::zeros(8, 6);
        depth.data.iter_mut().for_each(|d| *d = 1.0);
        let v = View::new(depth, Mask::empty(8, 6), cam(), Pose::IDENTITY).unwrap();
        assert!(matches!(backproject(&v), Err(Error::EmptyPointSet)));
    }

    #[test]
    fn size_mismatch_is_rejected() {
        assert!(View::new(DepthMap::zeros(8, 5), Mask::empty(8, 6), cam(), Pose::IDENTITY).is_err());
    }

    #[test]
    fn canonical_roundtrip() {
        let e = Estimate {
            position: Vector3::new(0.1, 0.2, 0.5),
            orientation: UnitQuaternion::from_axis_angle(Vector3::new(1.0, -1.0, 0.3), 0.9),
            scale: 0.12,
            shape: vec![],
        };
        let x = Vector3::new(0.13, 0.18, 0.47);
        assert!((e.to_world(e.to_canonical(x)) - x).norm() < 1e-12);
        let json = serde_json::to_value(&e).unwrap();
        assert!(json.get("quaternion").is_some());
    }
}
