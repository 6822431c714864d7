//! Analysis-by-synthesis estimation of pose, scale and shape from registered
//! depth views: losses, grid-scoring initialization and Adam refinement.

pub mod gradcheck;
mod init;
mod loss;
mod refine;
mod timing;
mod view;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use init::{entropy, init_grid_scoring, principal_extent, softmax_neg, InitConfig, InitResult, ViewSelection};
pub use loss::{loss_depth, loss_sdf, loss_total, Gradient, LossValue, LossWeights, Objective};
pub use refine::{refine, LearningRates, RefineConfig, RefineResult};
pub use timing::{Stage, StageTimes};
pub use view::{backproject, Estimate, View};

use crate::error::Result;
use crate::shape_space::ShapeSpace;
use crate::so3::OrientationGrid;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateConfig {
    pub init: InitConfig,
    pub refine: RefineConfig,
    /// Return the initialization unchanged.
    pub skip_refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateOutput {
    pub estimate: Estimate,
    pub init: InitResult,
    /// Empty when refinement is skipped.
    pub trace: Vec<f64>,
    #[serde(skip)]
    pub times: StageTimes,
}

/// Initialization followed by refinement.
pub fn estimate(
    views: &[View],
    space: &ShapeSpace,
    grid: &OrientationGrid,
    cfg: &EstimateConfig,
) -> Result<EstimateOutput> {
    let t0 = Instant::now();
    let init = init_grid_scoring(views, space, grid, &cfg.init)?;
    let mut times = StageTimes::default();
    times.add(Stage::Init, t0.elapsed());
    if cfg.skip_refine {
        return Ok(EstimateOutput {
            estimate: init.estimate.clone(),
            init,
            trace: Vec::new(),
            times,
        });
    }
    let refined = refine(views, &init.estimate, space, &cfg.refine)?;
    times.merge(&refined.times);
    Ok(EstimateOutput {
        estimate: refined.estimate,
        init,
        trace: refined.trace,
        times,
    })
}
