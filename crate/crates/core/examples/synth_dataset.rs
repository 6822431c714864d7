//! Generate a small multi-view dataset and read it back.
//!
//! cargo run --release --example synth_dataset -- /tmp/mugs

use sdfabs::render::PinholeCamera;
use sdfabs::synth::{read_manifest, write_dataset, CategoryConfig, Generator, ShapeFamily, ShapeSource};

fn main() -> sdfabs::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "mugs".into());
    let mut cfg = CategoryConfig::procedural(ShapeFamily::Mug);
    cfg.source = ShapeSource::Procedural {
        family: ShapeFamily::Mug,
        resolution: 32,
    };
    cfg.camera = PinholeCamera::new(262.5, 262.5, 159.5, 119.5, 320, 240)?;
    let generator = Generator::new(cfg.clone())?;
    let records = generator.generate(4, 3, 7)?;
    for r in &records {
        let px: Vec<usize> = r.views.iter().map(|v| v.mask.count()).collect();
        let outliers: Vec<usize> = r.augmentation.iter().map(|a| a.outliers).collect();
        println!(
            "seed {:>20}: scale {:.3}, mask pixels {:?}, outliers {:?}",
            r.seed, r.gt.scale, px, outliers
        );
    }
    let manifest = write_dataset(&out, &cfg, &records)?;
    println!("{} records in {}", read_manifest(&manifest)?.len(), manifest.display());
    Ok(())
}
