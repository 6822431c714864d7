//! Synthetic scenes: procedural or latent shapes, random poses and scales,
//! rendered depth, mask and depth corruption, and dataset files.

mod augment;
mod category;
mod dataset;
mod scene;

pub use augment::{augment_mask, blur_depth, flying_pixels, warp_mask, AugmentMeta, AugmentParams, MaskAffine};
pub use category::{default_camera, CategoryConfig, ShapeFamily, ShapeSource};
pub use dataset::{read_manifest, write_dataset, ManifestRecord, ViewEntry, ViewSet};
pub use scene::{derive_seed, Generator, GtShape, SceneRecord};
