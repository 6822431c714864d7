use nalgebra::Vector3;

use super::volume::SdfVolume;
use crate::error::{Error, Result};

/// Zero crossings along grid edges (the vertex set marching cubes would emit).
///
/// Edges are visited x-edges first, then y, then z, each in ascending order
/// of the lower endpoint's storage index. An edge crosses when exactly one of
/// its endpoints is negative.
pub fn extract_surface_points(vol: &SdfVolume) -> Result<Vec<Vector3<f64>>> {
    let r = vol.resolution();
    let v = vol.values();
    let mut out = Vec::new();
    let strides = [1, r, r * r];
    for (axis, &stride) in strides.iter().enumerate() {
        for k in 0..r {
            for j in 0..r {
                for i in 0..r {
                    let coord = [i, j, k][axis];
                    if coord + 1 >= r {
                        continue;
                    }
                    let a_idx = vol.index(i, j, k);
                    let (a, b) = (v[a_idx], v[a_idx + stride]);
                    if (a < 0.0) == (b < 0.0) {
                        continue;
                    }
                    let t = a / (a - b);
                    let pa = vol.voxel_center(i, j, k);
                    let mut pb = pa;
                    pb[axis] += 1.0 / r as f64;
                    out.push(pa + (pb - pa) * t);
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoSurface);
    }
    Ok(out)
}
