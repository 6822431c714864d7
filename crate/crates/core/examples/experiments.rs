//! Multi-view and ablation tables on a handful of scenes.
//!
//! cargo run --release --example experiments -- 5

use std::sync::Arc;

use rand::SeedableRng;
use sdfabs::eval::{ablation_variants, category_estimate_config, multiview_variants, run_suite, Experiment};
use sdfabs::synth::{CategoryConfig, Generator, ShapeFamily, ShapeSource};
use sdfabs::ShapeSpace;

fn main() -> sdfabs::Result<()> {
    let scenes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
    let train: Vec<_> = (0..40)
        .map(|_| ShapeFamily::Mug.sample(&mut rng).bake(32))
        .collect::<Result<_, _>>()?;
    let space = Arc::new(ShapeSpace::fit(&train, 8, Some(Default::default()))?);
    let mut cfg = CategoryConfig::procedural(ShapeFamily::Mug);
    cfg.source = ShapeSource::Procedural {
        family: ShapeFamily::Mug,
        resolution: 32,
    };
    cfg.augment = None;
    let base = category_estimate_config(&cfg, 30);
    let exp = Experiment::new(Generator::new(cfg)?, space, scenes, 2024);
    let mut variants = multiview_variants(&base, 1, &[1, 2]);
    variants.extend(ablation_variants(&base, 1, 3));
    let suite = run_suite(&exp, "multi-view and ablations", &variants)?;
    print!("{}", suite.to_text());
    Ok(())
}
