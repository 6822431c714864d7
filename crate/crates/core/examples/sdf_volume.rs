//! Bake an analytic mug, sample it, extract surface points and save it.
//!
//! cargo run --release --example sdf_volume -- /tmp/mug.sdfv

use nalgebra::Vector3;
use rand::SeedableRng;
use sdfabs::io::{load_volume, save_volume};
use sdfabs::sdf::extract_surface_points;
use sdfabs::synth::ShapeFamily;

fn main() -> sdfabs::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "mug.sdfv".into());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let spec = ShapeFamily::Mug.sample(&mut rng);
    let vol = spec.bake(48)?;
    println!("R={} voxel={:.4}", vol.resolution(), vol.voxel_size());
    for p in [
        Vector3::zeros(),
        Vector3::new(0.0, 0.0, 0.45),
        Vector3::new(0.8, 0.0, 0.0),
    ] {
        let s = vol.sample(p);
        println!(
            "sdf({:.2},{:.2},{:.2}) = {:+.4}  analytic {:+.4}  |grad| {:.3}",
            p.x,
            p.y,
            p.z,
            s.value,
            spec.distance(p),
            s.grad.norm()
        );
    }
    let pts = extract_surface_points(&vol)?;
    let worst = pts.iter().map(|p| spec.distance(*p).abs()).fold(0.0, f64::max);
    println!("{} surface points, max analytic |sdf| {:.4}", pts.len(), worst);
    save_volume(&out, &vol)?;
    let back = load_volume(&out)?;
    println!(
        "saved {out}, max roundtrip error {:.2e}",
        vol.values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    );
    Ok(())
}
