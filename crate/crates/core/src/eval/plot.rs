//! Precision-versus-threshold curves as CSV.

use std::fmt::Write as _;

use super::metrics::PoseMetrics;

/// Sweeps one threshold at a time with the others disabled: position 0–5 cm,
/// orientation 0–20°, F_1cm 0–1. Precision is the fraction of estimates within
/// the threshold. Columns: `metric,threshold,precision`.
pub fn precision_curves_csv(results: &[PoseMetrics], steps: usize) -> String {
    let steps = steps.max(1);
    let n = results.len().max(1) as f64;
    let mut s = String::from("metric,threshold,precision\n");
    let mut sweep = |name: &str, max: f64, pass: &dyn Fn(&PoseMetrics, f64) -> bool| {
        for i in 0..=steps {
            let t = max * i as f64 / steps as f64;
            let p = results.iter().filter(|r| pass(r, t)).count() as f64 / n;
            let _ = writeln!(s, "{name},{t:.6},{p:.6}");
        }
    };
    sweep("position_m", 0.05, &|r, t| r.position_error <= t);
    sweep("orientation_deg", 20.0, &|r, t| r.orientation_error <= t);
    sweep("f_1cm", 1.0, &|r, t| r.f_1cm >= t);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_are_monotone() {
        let results: Vec<PoseMetrics> = (0..20)
            .map(|i| PoseMetrics {
                position_error: 0.003 * i as f64,
                orientation_error: i as f64,
                f_1cm: i as f64 / 20.0,
                success: [false; 4],
            })
            .collect();
        let csv = precision_curves_csv(&results, 10);
        let rows: Vec<(String, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[2].parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 33);
        for w in rows.windows(2).filter(|w| w[0].0 == w[1].0) {
            if w[0].0 == "f_1cm" {
                assert!(w[1].1 <= w[0].1);
            } else {
                assert!(w[1].1 >= w[0].1);
            }
        }
        assert_eq!(rows[0].1, 1.0 / 20.0);
    }
}
