//! Run-time breakdown of one estimate.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::estimator::{estimate, EstimateConfig, Stage, View};
use crate::render::{render, RenderConfig};
use crate::shape_space::ShapeSpace;
use crate::so3::OrientationGrid;

#[derive(Clone, Debug, Serialize)]
pub struct StageRow {
    pub stage: &'static str,
    pub seconds: f64,
    /// Share of the measured wall time, percent.
    pub percent: f64,
    pub calls: u64,
    pub mean_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkReport {
    pub iterations: usize,
    pub threads: usize,
    pub stages: Vec<StageRow>,
    /// Sum of the stage rows, seconds.
    pub stage_sum: f64,
    /// Wall time of the whole estimate, seconds.
    pub total: f64,
    /// Mean of full-frame forward renders of the mean shape, milliseconds.
    pub full_frame_render_ms: f64,
    pub full_frame_pixels: usize,
}

impl BenchmarkReport {
    /// `|stage_sum - total| / total`.
    pub fn accounting_error(&self) -> f64 {
        (self.stage_sum - self.total).abs() / self.total
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "run time, {} iterations, {} threads\n{:<16} {:>10} {:>7} {:>7} {:>10}\n",
            self.iterations, self.threads, "stage", "seconds", "%", "calls", "mean ms"
        );
        for r in &self.stages {
            let _ = writeln!(
                s,
                "{:<16} {:>10.4} {:>7.2} {:>7} {:>10.3}",
                r.stage, r.seconds, r.percent, r.calls, r.mean_ms
            );
        }
        let _ = writeln!(
            s,
            "{:<16} {:>10.4}\n{:<16} {:>10.4}\nfull-frame render ({} px): {:.2} ms",
            "stage sum", self.stage_sum, "wall", self.total, self.full_frame_pixels, self.full_frame_render_ms
        );
        s
    }
}

/// Times `cfg.refine.iterations` refinement steps after initialization and
/// `frame_repeats` full-frame renders of the first view.
pub fn run_benchmark(
    space: &ShapeSpace,
    views: &[View],
    grid: &OrientationGrid,
    cfg: &EstimateConfig,
    frame_repeats: usize,
) -> Result<BenchmarkReport> {
    let t0 = Instant::now();
    let out = estimate(views, space, grid, cfg)?;
    let total = t0.elapsed().as_secs_f64();

    let stages: Vec<StageRow> = Stage::ALL
        .iter()
        .map(|&st| {
            let seconds = out.times.seconds(st);
            let calls = out.times.calls(st);
            StageRow {
                stage: st.name(),
                seconds,
                percent: 100.0 * seconds / total,
                calls,
                mean_ms: if calls > 0 { 1e3 * seconds / calls as f64 } else { 0.0 },
            }
        })
        .collect();

    let view = &views[0];
    let vol = space.decode(&vec![0.0; space.latent_dim()])?;
    let pose = view.object_in_camera(&out.estimate.pose());
    let rc = RenderConfig::default();
    let mut frame = 0.0;
    for _ in 0..frame_repeats.max(1) {
        let t = Instant::now();
        let r = render(&vol, &pose, out.estimate.scale, &view.cam, None, &rc);
        frame += t.elapsed().as_secs_f64();
        std::hint::black_box(r);
    }

    Ok(BenchmarkReport {
        iterations: if cfg.skip_refine { 0 } else { cfg.refine.iterations },
        threads: rayon::current_num_threads(),
        stage_sum: out.times.total(),
        stages,
        total,
        full_frame_render_ms: 1e3 * frame / frame_repeats.max(1) as f64,
        full_frame_pixels: view.cam.pixel_count(),
    })
}
