//! Analytic loss gradient against central differences at random states.
//!
//! cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use sdfabs::estimator::gradcheck::check_gradient;
use sdfabs::estimator::{LossWeights, Objective};
use sdfabs::render::RenderConfig;
use sdfabs::so3::UnitQuaternion;
use sdfabs::synth::{CategoryConfig, Generator, ShapeFamily, ShapeSource};
use sdfabs::ShapeSpace;

fn main() -> sdfabs::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let train: Vec<_> = (0..20)
        .map(|_| ShapeFamily::Mug.sample(&mut rng).bake(32))
        .collect::<Result<_, _>>()?;
    let space = ShapeSpace::fit(&train, 6, Some(Default::default()))?;
    let mut cfg = CategoryConfig::procedural(ShapeFamily::Mug);
    cfg.source = ShapeSource::Procedural {
        family: ShapeFamily::Mug,
        resolution: 32,
    };
    cfg.augment = None;
    cfg.camera = sdfabs::PinholeCamera::new(262.5, 262.5, 159.5, 119.5, 320, 240)?;
    let rec = Generator::new(cfg)?.multiview_scene(2, 9, 0)?;
    let obj = Objective::new(&space, &rec.views, RenderConfig::default())?;
    for i in 0..3 {
        let mut est = rec.gt.clone();
        est.shape = space.sample_prior(&mut rng);
        est.position += nalgebra::Vector3::from_fn(|_, _| rng.random_range(-0.005..0.005));
        let axis = nalgebra::Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        est.orientation = UnitQuaternion::from_rotation_vector(axis * 0.05).mul(est.orientation);
        let c = check_gradient(&obj, &est, LossWeights::default(), 1e-4)?;
        println!("state {i}: sign agreement {}/{}", c.sign_agree, c.sign_total);
        for g in &c.groups {
            println!(
                "  {:<12} rel error {:.2e} (unfrozen {:.2e})",
                g.name, g.rel_error, g.rel_error_unfrozen
            );
        }
    }
    Ok(())
}
