//! Command-line front end. [`run`] parses arguments and returns the process
//! exit code: 0 on success, 1 for data errors, 2 for usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate, Estimate, EstimateConfig, View};
use crate::eval::{
    category_estimate_config, pose_metrics, precision_curves_csv, recon_metrics, run_ablations, run_benchmark,
    run_multiview_experiment, summarize, Experiment, SceneResult, SuiteResult,
};
use crate::io::{
    load_shape_space, load_volume, read_json, save_pfm, save_pgm, save_shape_space, save_volume, write_json,
};
use crate::render::{render, Mask, PinholeCamera, Pose, RenderConfig};
use crate::sdf::ShapeSpec;
use crate::shape_space::{NearSurfaceWeighting, ShapeSpace};
use crate::so3::OrientationGrid;
use crate::synth::{
    read_manifest, write_dataset, CategoryConfig, Generator, ManifestRecord, ShapeFamily, ShapeSource, ViewSet,
};

#[derive(Parser, Debug)]
#[command(
    name = "sdfabs",
    version,
    about = "Pose, scale and shape estimation over SDF shape spaces"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed for sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Orientation grid level; level l has 72·8^l cells.
    #[arg(long, global = true, default_value_t = 1)]
    pub so3_level: u32,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bake a shape spec, or random family instances, to volume files.
    Bake(BakeArgs),
    /// Fit a shape space to a directory of volumes.
    Fit(FitArgs),
    /// Generate a synthetic dataset for a category.
    Synth(SynthArgs),
    /// Render a depth map of a posed volume.
    Render(RenderArgs),
    /// Estimate pose, scale and shape from registered depth views.
    Estimate(EstimateArgs),
    /// Score estimates against dataset ground truth.
    Eval(EvalArgs),
    /// Multi-view table over K views.
    Multiview(MultiviewArgs),
    /// Ablation table.
    Ablate(AblateArgs),
    /// Per-stage run-time breakdown.
    Bench(BenchArgs),
    /// Precision-versus-threshold CSV from a results file.
    PlotData(PlotDataArgs),
}

#[derive(Args, Debug)]
pub struct BakeArgs {
    /// Shape spec JSON.
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    pub spec: Option<PathBuf>,
    /// Procedural family (mug, box, cylinder); writes `count` volumes into `out`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 64)]
    pub res: usize,
    /// Output file, or directory with `--family`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Directory of `.sdfv` files.
    #[arg(long)]
    pub vols: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub latent: usize,
    /// Fit with uniform voxel weights.
    #[arg(long)]
    pub no_weighting: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub category: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub views: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub vol: PathBuf,
    /// Object pose in the camera frame, `{position, quaternion}`.
    #[arg(long)]
    pub pose: PathBuf,
    #[arg(long)]
    pub scale: f64,
    /// Pinhole camera JSON `{fx, fy, cx, cy, width, height}`.
    #[arg(long)]
    pub cam: PathBuf,
    /// Depth output (PFM).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional mask output (PGM).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub step_factor: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub hit_voxels: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub shape_space: PathBuf,
    /// JSON with a `views` array, or a JSONL manifest.
    #[arg(long)]
    pub views: PathBuf,
    /// Manifest line to use; without it every line is estimated and `out` is a directory.
    #[arg(long)]
    pub record: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Category JSON supplying the scale prior.
    #[arg(long)]
    pub category: Option<PathBuf>,
    /// Full estimator configuration JSON; `--iters` still applies.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub shape_space: PathBuf,
    /// Dataset manifest (`manifest.jsonl`).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory of `est_XXXX.json` files written by `estimate`.
    #[arg(long)]
    pub estimates: PathBuf,
    /// Results JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub category: PathBuf,
    #[arg(long)]
    pub shape_space: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub scenes: usize,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    /// Output directory for the JSON and text tables.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MultiviewArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    #[arg(long, default_value_t = 3)]
    pub views: usize,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub shape_space: PathBuf,
    /// JSON with a `views` array, or a JSONL manifest (first line or `--record`).
    #[arg(long)]
    pub views: PathBuf,
    #[arg(long)]
    pub record: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Full-frame renders to average.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long)]
    pub category: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotDataArgs {
    /// Results JSON from `eval`, `multiview` or `ablate`.
    #[arg(long)]
    pub results: PathBuf,
    /// Table row to plot (default: every row).
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of `est.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateFile {
    #[serde(flatten)]
    pub estimate: Estimate,
    pub init: InitSummary,
    pub loss_trace: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitSummary {
    pub best_cell: usize,
    pub max_prob: f64,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return usage("--threads must be positive");
        }
        // fails only if a pool already exists, as in repeated in-process calls
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if cli.so3_level > 4 {
        return usage("--so3-level must be at most 4");
    }
    let g = Globals {
        seed: cli.seed,
        level: cli.so3_level,
    };
    match cli.command {
        Command::Bake(a) => bake(a, &g),
        Command::Fit(a) => fit(a),
        Command::Synth(a) => synth(a, &g),
        Command::Render(a) => render_cmd(a),
        Command::Estimate(a) => estimate_cmd(a, &g),
        Command::Eval(a) => eval_cmd(a),
        Command::Multiview(a) => multiview(a, &g),
        Command::Ablate(a) => ablate(a, &g),
        Command::Bench(a) => bench(a, &g),
        Command::PlotData(a) => plot_data(a),
    }
}

struct Globals {
    seed: u64,
    level: u32,
}

fn parse_family(name: &str) -> CliResult<ShapeFamily> {
    match name {
        "mug" => Ok(ShapeFamily::Mug),
        "box" => Ok(ShapeFamily::Box),
        "cylinder" => Ok(ShapeFamily::Cylinder),
        _ => usage(format!("unknown family {name:?} (mug, box, cylinder)")),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn bake(a: BakeArgs, g: &Globals) -> CliResult<()> {
    if a.res < 2 {
        return usage("--res must be at least 2");
    }
    if let Some(spec) = &a.spec {
        let spec: ShapeSpec = read_json(spec)?;
        save_volume(&a.out, &spec.bake(a.res)?)?;
        return Ok(());
    }
    let family = parse_family(a.family.as_deref().unwrap_or_default())?;
    create_dir(&a.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    for i in 0..a.count {
        let spec = family.sample(&mut rng);
        save_volume(a.out.join(format!("vol_{i:04}.sdfv")), &spec.bake(a.res)?)?;
    }
    eprintln!("baked {} {:?} volumes at R={}", a.count, family, a.res);
    Ok(())
}

fn fit(a: FitArgs) -> CliResult<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&a.vols)
        .map_err(|e| Error::io(&a.vols, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sdfv"))
        .collect();
    paths.sort();
    let vols = paths.iter().map(load_volume).collect::<Result<Vec<_>>>()?;
    let weighting = (!a.no_weighting).then(NearSurfaceWeighting::default);
    let space = ShapeSpace::fit(&vols, a.latent, weighting)?;
    save_shape_space(&a.out, &space)?;
    eprintln!(
        "fit N={} at R={} from {} volumes",
        space.latent_dim(),
        space.resolution(),
        vols.len()
    );
    Ok(())
}

fn synth(a: SynthArgs, g: &Globals) -> CliResult<()> {
    if a.views == 0 {
        return usage("--views must be positive");
    }
    let cfg: CategoryConfig = read_json(&a.category)?;
    let generator = Generator::new(cfg.clone())?;
    let records = generator.generate(a.count, a.views, g.seed)?;
    let manifest = write_dataset(&a.out, &cfg, &records)?;
    eprintln!("wrote {} scenes to {}", records.len(), manifest.display());
    Ok(())
}

fn render_cmd(a: RenderArgs) -> CliResult<()> {
    if !(a.scale > 0.0) {
        return usage("--scale must be positive");
    }
    let vol = load_volume(&a.vol)?;
    let pose: Pose = read_json(&a.pose)?;
    let cam: PinholeCamera = read_json(&a.cam)?;
    cam.validate()?;
    let mut rc = RenderConfig::default();
    rc.step_factor = a.step_factor.unwrap_or(rc.step_factor);
    rc.max_steps = a.max_steps.unwrap_or(rc.max_steps);
    rc.hit_voxels = a.hit_voxels.unwrap_or(rc.hit_voxels);
    let r = render(&vol, &pose, a.scale, &cam, None, &rc);
    save_pfm(&a.out, &r.depth)?;
    if let Some(m) = &a.mask {
        save_pgm(m, &Mask::from_depth(&r.depth))?;
    }
    eprintln!("{} of {} pixels hit", r.hit_count(), cam.pixel_count());
    Ok(())
}

/// Views of one record: `(scene index, views)` pairs.
fn load_views(path: &Path, record: Option<usize>) -> CliResult<Vec<(usize, Vec<View>)>> {
    let base = path.parent().unwrap_or(Path::new("."));
    if path.extension().is_some_and(|x| x == "jsonl") {
        let records = read_manifest(path)?;
        let pick = |r: &ManifestRecord| -> Result<(usize, Vec<View>)> {
            Ok((r.scene, ViewSet { views: r.views.clone() }.load(base)?))
        };
        return match record {
            Some(i) => match records.get(i) {
                Some(r) => Ok(vec![pick(r)?]),
                None => usage(format!("--record {i} out of range ({} records)", records.len())),
            },
            None => Ok(records.iter().map(pick).collect::<Result<_>>()?),
        };
    }
    let set: ViewSet = read_json(path)?;
    Ok(vec![(0, set.load(base)?)])
}

fn estimate_config(config: Option<&Path>, category: Option<&Path>, iters: usize) -> CliResult<EstimateConfig> {
    if iters == 0 {
        return usage("--iters must be positive");
    }
    let mut cfg = match (config, category) {
        (Some(p), _) => read_json(p)?,
        (None, Some(c)) => category_estimate_config(&read_json(c)?, iters),
        (None, None) => EstimateConfig::default(),
    };
    cfg.refine.iterations = iters;
    Ok(cfg)
}

fn estimate_cmd(a: EstimateArgs, g: &Globals) -> CliResult<()> {
    let cfg = estimate_config(a.config.as_deref(), a.category.as_deref(), a.iters)?;
    let space = load_shape_space(&a.shape_space)?;
    let grid = OrientationGrid::new(g.level);
    let sets = load_views(&a.views, a.record)?;
    let many = a.record.is_none() && a.views.extension().is_some_and(|x| x == "jsonl");
    if many {
        create_dir(&a.out)?;
    }
    for (scene, views) in sets {
        let out = estimate(&views, &space, &grid, &cfg)?;
        let file = EstimateFile {
            init: InitSummary {
                best_cell: out.init.best_cell,
                max_prob: out.init.max_prob(),
            },
            estimate: out.estimate,
            loss_trace: out.trace,
        };
        let path = if many {
            a.out.join(format!("est_{scene:04}.json"))
        } else {
            a.out.clone()
        };
        write_json(&path, &file)?;
        eprintln!("scene {scene}: wrote {}", path.display());
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> CliResult<()> {
    let space = load_shape_space(&a.shape_space)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let category: CategoryConfig = read_json(base.join("category.json"))?;
    let gt_space = match &category.source {
        ShapeSource::ShapeSpace { path } => Some(load_shape_space(path)?),
        ShapeSource::Procedural { .. } => None,
    };
    let mut results = Vec::new();
    for rec in read_manifest(&a.manifest)? {
        let path = a.estimates.join(format!("est_{:04}.json", rec.scene));
        if !path.exists() {
            continue;
        }
        let est: EstimateFile = read_json(&path)?;
        let scene = rec.load(base)?;
        let gt_vol = scene.gt_volume(gt_space.as_ref())?;
        let recon = recon_metrics(&est.estimate, &space, &gt_vol, &scene.gt.pose(), scene.gt.scale)?;
        results.push(SceneResult {
            scene: rec.scene,
            seed: rec.seed,
            pose: pose_metrics(&est.estimate, &scene.gt, recon.f_1cm()),
            recon,
            final_loss: est.loss_trace.iter().copied().fold(f64::NAN, f64::min),
        });
    }
    if results.is_empty() {
        return Err(Error::InvalidConfig(format!("no estimates found in {}", a.estimates.display())).into());
    }
    let suite = SuiteResult {
        title: format!("eval {}", a.manifest.display()),
        seed: 0,
        rows: vec![summarize("estimate", 0, &results, None)],
        per_scene: [("estimate".to_string(), results)].into_iter().collect(),
    };
    print!("{}", suite.to_text());
    if let Some(out) = &a.out {
        write_json(out, &suite)?;
    }
    Ok(())
}

fn experiment(c: &ExperimentArgs, g: &Globals) -> CliResult<(Experiment, EstimateConfig)> {
    if c.scenes == 0 || c.iters == 0 {
        return usage("--scenes and --iters must be positive");
    }
    let cfg: CategoryConfig = read_json(&c.category)?;
    let base = category_estimate_config(&cfg, c.iters);
    let space = Arc::new(load_shape_space(&c.shape_space)?);
    Ok((Experiment::new(Generator::new(cfg)?, space, c.scenes, g.seed), base))
}

fn write_suite(dir: &Path, name: &str, suite: &SuiteResult) -> CliResult<()> {
    create_dir(dir)?;
    write_json(dir.join(format!("{name}.json")), suite)?;
    let text = suite.to_text();
    write_text(&dir.join(format!("{name}.txt")), &text)?;
    print!("{text}");
    Ok(())
}

fn multiview(a: MultiviewArgs, g: &Globals) -> CliResult<()> {
    if a.k.is_empty() || a.k.contains(&0) {
        return usage("--k needs positive view counts");
    }
    let (exp, base) = experiment(&a.common, g)?;
    let suite = run_multiview_experiment(&exp, &base, g.level, &a.k)?;
    write_suite(&a.common.out, "multiview", &suite)
}

fn ablate(a: AblateArgs, g: &Globals) -> CliResult<()> {
    if a.views == 0 {
        return usage("--views must be positive");
    }
    let (exp, base) = experiment(&a.common, g)?;
    let suite = run_ablations(&exp, &base, g.level, a.views)?;
    write_suite(&a.common.out, "ablations", &suite)
}

fn bench(a: BenchArgs, g: &Globals) -> CliResult<()> {
    let cfg = estimate_config(None, a.category.as_deref(), a.iters)?;
    let space = load_shape_space(&a.shape_space)?;
    let views = load_views(
        &a.views,
        a.views
            .extension()
            .is_some_and(|x| x == "jsonl")
            .then(|| a.record.unwrap_or(0)),
    )?;
    let (_, views) = views.into_iter().next().expect("at least one record");
    let report = run_benchmark(&space, &views, &OrientationGrid::new(g.level), &cfg, a.repeats)?;
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn plot_data(a: PlotDataArgs) -> CliResult<()> {
    if a.steps == 0 {
        return usage("--steps must be positive");
    }
    let suite: SuiteResult = read_json(&a.results)?;
    let names: Vec<String> = match &a.variant {
        Some(v) if suite.per_scene.contains_key(v) => vec![v.clone()],
        Some(v) => return usage(format!("no row {v:?} in {}", a.results.display())),
        None => suite.rows.iter().map(|r| r.name.clone()).collect(),
    };
    let mut csv = String::from("variant,metric,threshold,precision\n");
    for name in &names {
        let poses: Vec<_> = suite.per_scene[name].iter().map(|r| r.pose).collect();
        for line in precision_curves_csv(&poses, a.steps).lines().skip(1) {
            csv.push_str(name);
            csv.push(',');
            csv.push_str(line);
            csv.push('\n');
        }
    }
    match &a.out {
        Some(p) => write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
