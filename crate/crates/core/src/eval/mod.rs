//! Metrics, experiment suites and the run-time benchmark.

mod bench;
mod experiment;
mod metrics;
mod plot;

pub use bench::{run_benchmark, BenchmarkReport, StageRow};
pub use experiment::{
    ablation_variants, category_estimate_config, multiview_variants, run_ablations, run_multiview_experiment,
    run_suite, summarize, Experiment, SceneResult, SuiteResult, Variant, VariantSummary,
};
pub use metrics::{
    pose_metrics, recon_metrics, recon_metrics_points, threshold_label, world_surface, NearestNeighbors, PoseMetrics,
    ReconMetrics, THRESHOLDS,
};
pub use plot::precision_curves_csv;
