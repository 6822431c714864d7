//! Equal-volume orientation grid: cell counts, lookup and cell spacing.
//!
//! cargo run --release --example so3_grid

use rand::SeedableRng;
use sdfabs::so3::{geodesic_angle, OrientationGrid, UnitQuaternion};

fn main() -> sdfabs::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    for level in 0..=2 {
        let grid = OrientationGrid::new(level);
        let n = grid.cell_count();
        let mut counts = vec![0usize; n];
        let mut worst: f64 = 0.0;
        let samples = 50 * n;
        for _ in 0..samples {
            let q = UnitQuaternion::sample_uniform(&mut rng);
            let c = grid.cell_index(q)?;
            counts[c] += 1;
            worst = worst.max(geodesic_angle(q, grid.cell_center(c)?).to_degrees());
            assert_eq!(grid.cell_index(q.neg())?, c);
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        println!(
            "level {level}: {n} cells, {samples} samples, per-cell count {lo}..{hi} (mean 50), max distance to center {worst:.1} deg"
        );
    }
    Ok(())
}
