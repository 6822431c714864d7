//! On-disk datasets.
//!
//! ```text
//! <out>/category.json
//! <out>/manifest.jsonl              one ManifestRecord per line
//! <out>/scene_0000/scene.json       the same record, pretty-printed
//! <out>/scene_0000/view_0.pfm       depth, meters
//! <out>/scene_0000/view_0.pgm       mask
//! ```
//!
//! Paths inside records are relative to the manifest directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::augment::AugmentMeta;
use super::category::CategoryConfig;
use super::scene::{GtShape, SceneRecord};
use crate::error::{Error, Result};
use crate::estimator::{Estimate, View};
use crate::io::{load_pfm, load_pgm, save_pfm, save_pgm, write_json};
use crate::render::{PinholeCamera, Pose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub depth: String,
    pub mask: String,
    pub camera: PinholeCamera,
    pub cam_pose: Pose,
    #[serde(default)]
    pub augmentation: AugmentMeta,
}

impl ViewEntry {
    pub fn load(&self, base: &Path) -> Result<View> {
        View::new(
            load_pfm(base.join(&self.depth))?,
            load_pgm(base.join(&self.mask))?,
            self.camera,
            self.cam_pose,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub scene: usize,
    pub seed: u64,
    pub gt: Estimate,
    pub gt_shape: GtShape,
    pub views: Vec<ViewEntry>,
}

/// Anything with a `views` array, such as a manifest record.
#[derive(Clone, Debug, Deserialize)]
pub struct ViewSet {
    pub views: Vec<ViewEntry>,
}

impl ViewSet {
    pub fn load(&self, base: &Path) -> Result<Vec<View>> {
        self.views.iter().map(|v| v.load(base)).collect()
    }
}

impl ManifestRecord {
    pub fn load(&self, base: &Path) -> Result<SceneRecord> {
        Ok(SceneRecord {
            seed: self.seed,
            gt: self.gt.clone(),
            gt_shape: self.gt_shape.clone(),
            views: self.views.iter().map(|v| v.load(base)).collect::<Result<_>>()?,
            augmentation: self.views.iter().map(|v| v.augmentation).collect(),
        })
    }
}

/// Writes images, per-scene JSON and the manifest; returns the manifest path.
pub fn write_dataset(dir: impl AsRef<Path>, cfg: &CategoryConfig, records: &[SceneRecord]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(dir.join("category.json"), cfg)?;
    let manifest_path = dir.join("manifest.jsonl");
    let mut manifest = String::new();
    for (i, rec) in records.iter().enumerate() {
        let scene_dir = format!("scene_{i:04}");
        let abs = dir.join(&scene_dir);
        fs::create_dir_all(&abs).map_err(|e| Error::io(&abs, e))?;
        let mut views = Vec::with_capacity(rec.views.len());
        for (k, (view, aug)) in rec.views.iter().zip(&rec.augmentation).enumerate() {
            let depth = format!("{scene_dir}/view_{k}.pfm");
            let mask = format!("{scene_dir}/view_{k}.pgm");
            save_pfm(dir.join(&depth), &view.depth)?;
            save_pgm(dir.join(&mask), &view.mask)?;
            views.push(ViewEntry {
                depth,
                mask,
                camera: view.cam,
                cam_pose: view.cam_pose,
                augmentation: *aug,
            });
        }
        let entry = ManifestRecord {
            scene: i,
            seed: rec.seed,
            gt: rec.gt.clone(),
            gt_shape: rec.gt_shape.clone(),
            views,
        };
        write_json(abs.join("scene.json"), &entry)?;
        manifest.push_str(&serde_json::to_string(&entry)?);
        manifest.push('\n');
    }
    fs::File::create(&manifest_path)
        .and_then(|mut f| f.write_all(manifest.as_bytes()))
        .map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::category::{ShapeFamily, ShapeSource};
    use crate::synth::scene::Generator;

    #[test]
    fn dataset_roundtrip() {
        let mut cfg = CategoryConfig::procedural(ShapeFamily::Box);
        cfg.source = ShapeSource::Procedural {
            family: ShapeFamily::Box,
            resolution: 24,
        };
        cfg.camera = PinholeCamera::new(105.0, 105.0, 63.5, 47.5, 128, 96).unwrap();
        let g = Generator::new(cfg.clone()).unwrap();
        let recs = g.generate(2, 2, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_dataset(dir.path(), &cfg, &recs).unwrap();
        let back = read_manifest(&manifest).unwrap();
        assert_eq!(back.len(), 2);
        let rec = back[1].load(dir.path()).unwrap();
        assert_eq!(rec.gt, recs[1].gt);
        assert_eq!(rec.views[0].mask, recs[1].views[0].mask);
        for (a, b) in rec.views[1].depth.data.iter().zip(&recs[1].views[1].depth.data) {
            assert!((a - b).abs() <= 1e-6 * b.abs());
        }
        // scene.json carries a `views` array usable as a view set
        let vs: ViewSet = crate::io::read_json(dir.path().join("scene_0000/scene.json")).unwrap();
        assert_eq!(vs.load(dir.path()).unwrap().len(), 2);
    }
}
