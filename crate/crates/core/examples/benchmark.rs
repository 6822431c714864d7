//! Per-stage run time of one 50-iteration estimate at 640x480.
//!
//! cargo run --release --example benchmark -- 64

use rand::SeedableRng;
use sdfabs::eval::{category_estimate_config, run_benchmark};
use sdfabs::synth::{CategoryConfig, Generator, ShapeFamily, ShapeSource};
use sdfabs::{OrientationGrid, ShapeSpace};

fn main() -> sdfabs::Result<()> {
    let res = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
    let train: Vec<_> = (0..20)
        .map(|_| ShapeFamily::Mug.sample(&mut rng).bake(res))
        .collect::<Result<_, _>>()?;
    let space = ShapeSpace::fit(&train, 8, Some(Default::default()))?;
    let mut cfg = CategoryConfig::procedural(ShapeFamily::Mug);
    cfg.source = ShapeSource::Procedural {
        family: ShapeFamily::Mug,
        resolution: res,
    };
    cfg.augment = None;
    let ecfg = category_estimate_config(&cfg, 50);
    let rec = Generator::new(cfg)?.multiview_scene(1, 5, 0)?;
    let report = run_benchmark(&space, &rec.views, &OrientationGrid::new(1), &ecfg, 5)?;
    print!("{}", report.to_text());
    println!("stage sum vs wall: {:.2}%", 100.0 * report.accounting_error());
    Ok(())
}
