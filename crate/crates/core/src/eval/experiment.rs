//! Seeded experiment suites: multi-view and ablation tables.
//!
//! Every scene is generated once with the largest view count; a variant with
//! `K` views uses the first `K` cameras, so all rows compare the same objects.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{pose_metrics, recon_metrics, threshold_label, PoseMetrics, ReconMetrics, THRESHOLDS};
use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimateConfig, LossWeights, ViewSelection};
use crate::shape_space::ShapeSpace;
use crate::so3::OrientationGrid;
use crate::synth::{CategoryConfig, Generator, SceneRecord};

/// One configuration evaluated on every scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub views: usize,
    pub so3_level: u32,
    pub config: EstimateConfig,
}

#[derive(Clone)]
pub struct Experiment {
    pub generator: Generator,
    /// Shape space used for estimation.
    pub space: Arc<ShapeSpace>,
    /// Shape space that generated latent ground truth, if any.
    pub gt_space: Option<Arc<ShapeSpace>>,
    pub scenes: usize,
    pub seed: u64,
}

impl Experiment {
    pub fn new(generator: Generator, space: Arc<ShapeSpace>, scenes: usize, seed: u64) -> Self {
        let gt_space = generator.shape_space().cloned();
        Experiment {
            generator,
            space,
            gt_space,
            scenes,
            seed,
        }
    }
}

/// Defaults with the scale prior taken from the category: half the smallest
/// to twice the largest sampled scale.
pub fn category_estimate_config(cfg: &CategoryConfig, iterations: usize) -> EstimateConfig {
    let mut c = EstimateConfig::default();
    c.init.scale_bounds = (0.5 * cfg.scale.0, 2.0 * cfg.scale.1);
    c.refine.iterations = iterations;
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneResult {
    pub scene: usize,
    pub seed: u64,
    pub recon: ReconMetrics,
    pub pose: PoseMetrics,
    pub final_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub name: String,
    pub views: usize,
    pub scenes: usize,
    pub mean: ReconMetrics,
    /// Millimeters.
    pub mean_position_error: f64,
    /// Degrees.
    pub mean_orientation_error: f64,
    pub mean_f_1cm: f64,
    /// Fraction of scenes passing each pose threshold.
    pub success_rate: [f64; 4],
    /// Name of an earlier variant with the identical configuration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub same_as: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub title: String,
    pub seed: u64,
    pub rows: Vec<VariantSummary>,
    pub per_scene: BTreeMap<String, Vec<SceneResult>>,
}

impl SuiteResult {
    pub fn row(&self, name: &str) -> Option<&VariantSummary> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} (seed {})\n", self.title, self.seed);
        let _ = write!(
            s,
            "{:<18} {:>3} {:>6} {:>8} {:>8} {:>8} {:>7} {:>7} {:>8} {:>8}",
            "variant", "K", "scenes", "P mm", "R mm", "CD mm", "P1cm%", "R1cm%", "pos mm", "rot deg"
        );
        for i in 0..THRESHOLDS.len() {
            let _ = write!(s, " {:>16}", threshold_label(i));
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{:<18} {:>3} {:>6} {:>8.3} {:>8.3} {:>8.3} {:>7.2} {:>7.2} {:>8.2} {:>8.2}",
                r.name,
                r.views,
                r.scenes,
                r.mean.p,
                r.mean.r_mean,
                r.mean.cd,
                r.mean.p_1cm,
                r.mean.r_1cm,
                r.mean_position_error,
                r.mean_orientation_error
            );
            for v in r.success_rate {
                let _ = write!(s, " {:>16.3}", v);
            }
            if let Some(o) = &r.same_as {
                let _ = write!(s, "  (= {o})");
            }
            s.push('\n');
        }
        s
    }
}

/// `K`-view rows with the multi-view protocol settings.
pub fn multiview_variants(base: &EstimateConfig, so3_level: u32, k_list: &[usize]) -> Vec<Variant> {
    k_list
        .iter()
        .map(|&k| Variant {
            name: format!("K={k}"),
            views: k,
            so3_level,
            config: base.clone(),
        })
        .collect()
}

/// Ablation rows on `views` cameras. The initializer always starts from the
/// mean shape, so the mean-shape row repeats the full configuration.
pub fn ablation_variants(base: &EstimateConfig, so3_level: u32, views: usize) -> Vec<Variant> {
    let v = |name: &str, level: u32, f: &dyn Fn(&mut EstimateConfig)| {
        let mut config = base.clone();
        f(&mut config);
        Variant {
            name: name.to_string(),
            views,
            so3_level: level,
            config,
        }
    };
    vec![
        v("full", so3_level, &|_| {}),
        v("best_view", so3_level, &|c| c.init.view_selection = ViewSelection::Best),
        v("depth_only", so3_level, &|c| {
            c.refine.weights = LossWeights {
                sdf: 0.0,
                depth: c.refine.weights.depth,
            }
        }),
        v("sdf_only", so3_level, &|c| {
            c.refine.weights = LossWeights {
                sdf: c.refine.weights.sdf,
                depth: 0.0,
            }
        }),
        v("init_only", so3_level, &|c| c.skip_refine = true),
        v("no_shape_opt", so3_level, &|c| c.refine.freeze_shape = true),
        v("mean_shape_init", so3_level, &|_| {}),
        v("finer_grid", so3_level + 1, &|_| {}),
    ]
}

fn evaluate(rec: &SceneRecord, exp: &Experiment, variant: &Variant, grid: &OrientationGrid) -> Result<SceneResult> {
    let views = &rec.views[..variant.views];
    let out = estimate(views, &exp.space, grid, &variant.config)?;
    let gt_vol = rec.gt_volume(exp.gt_space.as_deref())?;
    let recon = recon_metrics(&out.estimate, &exp.space, &gt_vol, &rec.gt.pose(), rec.gt.scale)?;
    let pose = pose_metrics(&out.estimate, &rec.gt, recon.f_1cm());
    Ok(SceneResult {
        scene: 0,
        seed: rec.seed,
        recon,
        pose,
        final_loss: out.trace.iter().copied().fold(f64::NAN, f64::min),
    })
}

/// Means over scenes.
pub fn summarize(name: &str, views: usize, results: &[SceneResult], same_as: Option<String>) -> VariantSummary {
    let n = results.len() as f64;
    let mean = |f: &dyn Fn(&SceneResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    VariantSummary {
        name: name.to_string(),
        views,
        scenes: results.len(),
        mean: ReconMetrics {
            p: mean(&|r| r.recon.p),
            r_mean: mean(&|r| r.recon.r_mean),
            cd: mean(&|r| r.recon.cd),
            p_1cm: mean(&|r| r.recon.p_1cm),
            r_1cm: mean(&|r| r.recon.r_1cm),
        },
        mean_position_error: mean(&|r| r.pose.position_error * 1e3),
        mean_orientation_error: mean(&|r| r.pose.orientation_error),
        mean_f_1cm: mean(&|r| r.pose.f_1cm),
        success_rate: std::array::from_fn(|i| mean(&|r| r.pose.success[i] as u8 as f64)),
        same_as,
    }
}

/// Runs every variant on `exp.scenes` seeded scenes. Variants with identical
/// settings are computed once.
pub fn run_suite(exp: &Experiment, title: &str, variants: &[Variant]) -> Result<SuiteResult> {
    if variants.is_empty() || exp.scenes == 0 {
        return Err(Error::InvalidConfig("suite needs variants and scenes".into()));
    }
    let k_max = variants.iter().map(|v| v.views).max().unwrap_or(1);
    if variants.iter().any(|v| v.views == 0) {
        return Err(Error::InvalidConfig("variants need at least one view".into()));
    }
    // first variant with the same settings
    let keys: Vec<String> = variants
        .iter()
        .map(|v| serde_json::to_string(&(v.views, v.so3_level, &v.config)).expect("serializable"))
        .collect();
    let canonical: Vec<usize> = (0..variants.len())
        .map(|i| keys.iter().position(|k| *k == keys[i]).expect("own key"))
        .collect();
    let grids: BTreeMap<u32, OrientationGrid> = variants
        .iter()
        .map(|v| (v.so3_level, OrientationGrid::new(v.so3_level)))
        .collect();

    let per_scene: Vec<Vec<Option<SceneResult>>> = (0..exp.scenes)
        .into_par_iter()
        .map(|i| {
            let rec = exp.generator.multiview_scene(k_max, exp.seed, i as u64)?;
            variants
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    if canonical[j] != j {
                        return Ok(None);
                    }
                    let mut r = evaluate(&rec, exp, v, &grids[&v.so3_level])?;
                    r.scene = i;
                    Ok(Some(r))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(variants.len());
    let mut table = BTreeMap::new();
    for (j, v) in variants.iter().enumerate() {
        let c = canonical[j];
        let results: Vec<SceneResult> = per_scene.iter().map(|s| s[c].clone().expect("computed")).collect();
        let same_as = (c != j).then(|| variants[c].name.clone());
        rows.push(summarize(&v.name, v.views, &results, same_as));
        table.insert(v.name.clone(), results);
    }
    Ok(SuiteResult {
        title: title.to_string(),
        seed: exp.seed,
        rows,
        per_scene: table,
    })
}

pub fn run_multiview_experiment(
    exp: &Experiment,
    base: &EstimateConfig,
    so3_level: u32,
    k_list: &[usize],
) -> Result<SuiteResult> {
    run_suite(exp, "multi-view", &multiview_variants(base, so3_level, k_list))
}

pub fn run_ablations(exp: &Experiment, base: &EstimateConfig, so3_level: u32, views: usize) -> Result<SuiteResult> {
    run_suite(exp, "ablations", &ablation_variants(base, so3_level, views))
}
