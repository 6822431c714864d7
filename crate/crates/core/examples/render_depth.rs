//! Sphere-trace a depth map of a posed volume and its pose gradient.
//!
//! cargo run --release --example render_depth -- /tmp/depth.pfm

use nalgebra::Vector3;
use sdfabs::io::save_pfm;
use sdfabs::render::{render, render_backward, RenderConfig};
use sdfabs::sdf::ShapeSpec;
use sdfabs::{PinholeCamera, Pose, UnitQuaternion};

fn main() -> sdfabs::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "depth.pfm".into());
    let vol = ShapeSpec::cuboid([0.3, 0.2, 0.25]).bake(64)?;
    let cam = PinholeCamera::new(525.0, 525.0, 319.5, 239.5, 640, 480)?;
    let q = UnitQuaternion::from_axis_angle(Vector3::new(1.0, 1.0, 0.0).normalize(), 0.6);
    let pose = Pose::new(Vector3::new(0.0, 0.0, 0.5), q);
    let t = std::time::Instant::now();
    let r = render(&vol, &pose, 0.1, &cam, None, &RenderConfig::default());
    println!("{} hits in {:.1} ms", r.hit_count(), t.elapsed().as_secs_f64() * 1e3);
    println!("center depth {:.4} m", r.depth.get(240, 320));
    // gradient of the summed depth
    let ones = vec![1.0; cam.pixel_count()];
    let g = render_backward(&vol, &pose, 0.1, &cam, &r, &ones)?;
    println!(
        "d(sum depth)/d position = {:.1?}, d/d scale = {:.1}",
        g.d_position, g.d_scale
    );
    save_pfm(&out, &r.depth)?;
    println!("saved {out}");
    Ok(())
}
