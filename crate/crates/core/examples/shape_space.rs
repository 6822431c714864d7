//! Fit a linear shape space to procedural mugs and reconstruct held-out shapes.
//!
//! cargo run --release --example shape_space

use rand::SeedableRng;
use sdfabs::shape_space::{NearSurfaceWeighting, ShapeSpace};
use sdfabs::synth::ShapeFamily;

fn main() -> sdfabs::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let res = 32;
    let train: Vec<_> = (0..40)
        .map(|_| ShapeFamily::Mug.sample(&mut rng).bake(res))
        .collect::<Result<_, _>>()?;
    for (name, w) in [
        ("uniform", None),
        ("near-surface", Some(NearSurfaceWeighting::default())),
    ] {
        let space = ShapeSpace::fit(&train, 8, w)?;
        print!(
            "{name:>12} fit, scales {:.3?}\n             held-out rmse:",
            space.scales()
        );
        for _ in 0..4 {
            let v = ShapeFamily::Mug.sample(&mut rng).bake(res)?;
            let z = space.encode(&v)?;
            let back = space.decode(&z)?;
            let rmse = (v
                .values()
                .iter()
                .zip(back.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / v.len() as f64)
                .sqrt();
            print!(" {rmse:.4}");
        }
        println!();
    }
    Ok(())
}
