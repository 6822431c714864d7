//! Categorical 6D pose, scale and shape estimation by analysis-by-synthesis.
//!
//! A category is modeled by a linear latent [`ShapeSpace`] over discretized
//! signed distance volumes. Given one or more registered depth views of an
//! object, [`estimator::estimate`] scores every cell of an equal-volume
//! [`OrientationGrid`] to initialize the pose, then jointly refines position,
//! orientation, scale and latent shape by rendering the decoded volume with a
//! differentiable sphere tracer and minimizing point-to-SDF and depth losses.
//!
//! Module map:
//!
//! - [`sdf`]: volumes, trilinear sampling, procedural shapes, surface points
//! - [`so3`]: quaternions and the Hopf/HEALPix orientation grid
//! - [`shape_space`]: fit, encode, decode and the decoder adjoint
//! - [`render`]: pinhole cameras, forward and backward depth rendering
//! - [`estimator`]: views, losses, grid-scoring initialization, refinement
//! - [`synth`]: synthetic scenes, mask and depth augmentation, datasets
//! - [`eval`]: metrics, experiment runners, benchmark, plot data
//! - [`io`]: binary volume/shape-space files, PFM/PGM images, JSON records

pub mod cli;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod io;
pub mod render;
pub mod sdf;
pub mod shape_space;
pub mod so3;
pub mod synth;

pub use error::{Error, Result};
pub use estimator::{Estimate, View};
pub use render::{DepthMap, Mask, PinholeCamera, Pose};
pub use sdf::{SdfVolume, ShapeSpec};
pub use shape_space::ShapeSpace;
pub use so3::{OrientationGrid, UnitQuaternion};
