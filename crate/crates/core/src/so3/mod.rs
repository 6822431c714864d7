//! Rotations and the equal-volume SO(3) grid.

mod grid;
pub mod healpix;
mod quat;

pub use grid::{HopfCoords, OrientationGrid};
pub use quat::{geodesic_angle, UnitQuaternion};
