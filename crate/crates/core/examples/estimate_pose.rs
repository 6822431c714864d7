//! Estimate pose, scale and shape of synthetic mugs from one and three views.
//!
//! cargo run --release --example estimate_pose

use rand::SeedableRng;
use sdfabs::estimator::estimate;
use sdfabs::eval::category_estimate_config;
use sdfabs::so3::geodesic_angle;
use sdfabs::synth::{CategoryConfig, Generator, ShapeFamily, ShapeSource};
use sdfabs::{OrientationGrid, ShapeSpace};

fn main() -> sdfabs::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
    let train: Vec<_> = (0..40)
        .map(|_| ShapeFamily::Mug.sample(&mut rng).bake(32))
        .collect::<Result<_, _>>()?;
    let space = ShapeSpace::fit(&train, 8, Some(Default::default()))?;
    let mut cfg = CategoryConfig::procedural(ShapeFamily::Mug);
    cfg.source = ShapeSource::Procedural {
        family: ShapeFamily::Mug,
        resolution: 32,
    };
    cfg.augment = None;
    let ecfg = category_estimate_config(&cfg, 30);
    let generator = Generator::new(cfg)?;
    let grid = OrientationGrid::new(1);
    for i in 0..3 {
        let rec = generator.multiview_scene(3, 11, i)?;
        for k in [1, 3] {
            let t = std::time::Instant::now();
            let out = estimate(&rec.views[..k], &space, &grid, &ecfg)?;
            let e = &out.estimate;
            println!(
                "scene {i} K={k}: position error {:.1} mm, angle {:.1} deg, scale {:.3} (gt {:.3}), loss {:.5} -> {:.5}, {:.2} s",
                (e.position - rec.gt.position).norm() * 1e3,
                geodesic_angle(e.orientation, rec.gt.orientation).to_degrees(),
                e.scale,
                rec.gt.scale,
                out.trace[0],
                out.trace.iter().copied().fold(f64::INFINITY, f64::min),
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
