//! Joint first-order refinement of pose, scale and shape with Adam.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::loss::{Gradient, LossWeights, Objective};
use super::timing::{Stage, StageTimes};
use super::view::{Estimate, View};
use crate::error::{Error, Result};
use crate::render::RenderConfig;
use crate::shape_space::ShapeSpace;
use crate::so3::UnitQuaternion;

/// Adam step size per parameter group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningRates {
    /// Meters.
    pub position: f64,
    pub orientation: f64,
    pub log_scale: f64,
    pub shape: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates {
            position: 5e-3,
            orientation: 2e-2,
            log_scale: 1e-2,
            shape: 5e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub iterations: usize,
    pub lr: LearningRates,
    pub weights: LossWeights,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Keep the shape code at its initial value.
    pub freeze_shape: bool,
    pub render: RenderConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            iterations: 50,
            lr: LearningRates::default(),
            weights: LossWeights::default(),
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            freeze_shape: false,
            render: RenderConfig::default(),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("refinement needs at least one iteration".into()));
        }
        let w = self.weights;
        if !(w.sdf >= 0.0 && w.depth >= 0.0) {
            return Err(Error::InvalidConfig("loss weights must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("bad Adam hyper-parameters".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefineResult {
    /// Lowest-loss state along the trajectory.
    pub estimate: Estimate,
    /// Loss before each update plus the loss after the last one.
    pub trace: Vec<f64>,
    pub best_iteration: usize,
    /// Some evaluation had an empty depth overlap in at least one view.
    pub degenerate: bool,
    #[serde(skip)]
    pub times: StageTimes,
}

/// Flat parameter vector: position(3), quaternion(4), log scale(1), shape(N).
fn pack(e: &Estimate) -> Vec<f64> {
    let mut v = Vec::with_capacity(8 + e.shape.len());
    v.extend(e.position.iter());
    v.extend(e.orientation.to_array());
    v.push(e.scale.ln());
    v.extend(&e.shape);
    v
}

fn unpack(v: &[f64]) -> Estimate {
    Estimate {
        position: nalgebra::Vector3::new(v[0], v[1], v[2]),
        orientation: UnitQuaternion::from_array_normalized([v[3], v[4], v[5], v[6]]),
        scale: v[7].exp(),
        shape: v[8..].to_vec(),
    }
}

fn flatten(g: &Gradient, q: UnitQuaternion, freeze_shape: bool) -> Vec<f64> {
    let mut v = Vec::with_capacity(8 + g.shape.len());
    v.extend(g.position.iter());
    v.extend(q.project_to_tangent(g.orientation));
    v.push(g.log_scale);
    if freeze_shape {
        v.extend(std::iter::repeat_n(0.0, g.shape.len()));
    } else {
        v.extend(&g.shape);
    }
    v
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    lr: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize, rates: &LearningRates) -> Self {
        let mut lr = vec![rates.position; 3];
        lr.extend([rates.orientation; 4]);
        lr.push(rates.log_scale);
        lr.extend(std::iter::repeat_n(rates.shape, n));
        Adam {
            m: vec![0.0; lr.len()],
            v: vec![0.0; lr.len()],
            lr,
            t: 0,
        }
    }

    fn step(&mut self, x: &mut [f64], g: &[f64], cfg: &RefineConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            x[i] -= self.lr[i] * mh / (vh.sqrt() + cfg.epsilon);
        }
    }
}

/// Runs `cfg.iterations` Adam updates and returns the best visited state.
pub fn refine(views: &[View], init: &Estimate, space: &ShapeSpace, cfg: &RefineConfig) -> Result<RefineResult> {
    cfg.validate()?;
    let obj = Objective::new(space, views, cfg.render)?;
    refine_with(&obj, init, cfg)
}

pub(crate) fn refine_with(obj: &Objective, init: &Estimate, cfg: &RefineConfig) -> Result<RefineResult> {
    cfg.validate()?;
    let mut times = StageTimes::default();
    let mut x = pack(init);
    let mut adam = Adam::new(init.shape.len(), &cfg.lr);
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut best = (f64::INFINITY, 0, init.clone());
    let mut degenerate = false;

    for it in 0..=cfg.iterations {
        let est = unpack(&x);
        let last = it == cfg.iterations;
        let value = obj.evaluate(&est, cfg.weights, !last, Some(&mut times))?;
        degenerate |= value.degenerate;
        trace.push(value.total);
        if value.total < best.0 {
            best = (value.total, it, est.clone());
        }
        if last {
            break;
        }
        let t0 = Instant::now();
        let g = flatten(
            value.grad.as_ref().expect("gradient requested"),
            est.orientation,
            cfg.freeze_shape,
        );
        // renormalized coordinates keep the moments consistent with the iterate
        x[3..7].copy_from_slice(&est.orientation.to_array());
        adam.step(&mut x, &g, cfg);
        let q = UnitQuaternion::from_array_normalized([x[3], x[4], x[5], x[6]]);
        x[3..7].copy_from_slice(&q.to_array());
        times.add(Stage::Optimizer, t0.elapsed());
    }

    Ok(RefineResult {
        estimate: best.2,
        best_iteration: best.1,
        trace,
        degenerate,
        times,
    })
}
