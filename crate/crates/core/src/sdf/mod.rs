//! Discretized signed distance fields.

mod shape;
mod surface;
mod volume;

pub use shape::{Offset, ShapeSpec, BAKE_LIMIT};
pub use surface::extract_surface_points;
pub use volume::{voxel_center, Corners, Sample, SdfVolume, CUBE_DIAMETER};
