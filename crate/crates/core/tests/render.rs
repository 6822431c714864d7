mod common;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdfabs::render::{render, render_backward, RenderConfig};
use sdfabs::sdf::ShapeSpec;
use sdfabs::so3::UnitQuaternion;
use sdfabs::synth::ShapeFamily;
use sdfabs::{PinholeCamera, Pose, SdfVolume};

#[test]
fn sphere_render_matches_dense_march() {
    let vol = ShapeSpec::sphere(0.3).bake(64).unwrap();
    let pose = Pose::new(Vector3::new(0.0, 0.0, 1.0), UnitQuaternion::IDENTITY);
    let cam = PinholeCamera::new(50.0, 50.0, 32.0, 24.0, 64, 48).unwrap();
    let (hits, mismatched, worst) = common::compare_with_oracle(&vol, &pose, 1.0, &cam);
    assert!(hits > 500);
    assert_eq!(mismatched, 0);
    assert!(worst <= 1.0, "worst error {worst} x 2 eps");
}

#[test]
fn rotated_mug_render_matches_dense_march() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let vol = ShapeFamily::Mug.sample(&mut rng).bake(32).unwrap();
    let q = UnitQuaternion::from_axis_angle(Vector3::new(1.0, 0.4, -0.2).normalize(), 2.1);
    let pose = Pose::new(Vector3::new(0.01, -0.005, 0.3), q);
    let cam = PinholeCamera::new(120.0, 120.0, 32.0, 24.0, 64, 48).unwrap();
    let (hits, mismatched, worst) = common::compare_with_oracle(&vol, &pose, 0.1, &cam);
    assert!(hits > 300);
    assert!(
        mismatched * 100 <= hits,
        "{mismatched} of {hits} pixels disagree on hit or miss"
    );
    assert!(worst <= 1.0, "worst error {worst} x 2 eps");
}

#[test]
fn rays_missing_the_bounding_sphere_miss() {
    let vol = ShapeSpec::cuboid([0.45, 0.45, 0.45]).bake(16).unwrap();
    let pose = Pose::new(Vector3::new(0.0, 0.0, 1.0), UnitQuaternion::IDENTITY);
    let cam = PinholeCamera::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap();
    let r = render(&vol, &pose, 0.5, &cam, None, &RenderConfig::default());
    let reach = 0.5 * 0.5 * 3f64.sqrt();
    for i in 0..100 {
        for j in 0..100 {
            let ray = cam.ray(i, j).normalize();
            let dist = (pose.position - ray * ray.dot(&pose.position)).norm();
            if dist > reach {
                assert_eq!(r.depth.get(i, j), 0.0);
            }
        }
    }
}

#[test]
fn summed_depth_gradients_match_finite_differences() {
    // 10 scenes x 20 interior hit pixels; pixels whose one-sided differences
    // disagree (silhouette or occlusion switches) are excluded
    let cfg = RenderConfig::default();
    let cam = PinholeCamera::new(131.25, 131.25, 79.5, 59.5, 160, 120).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let families = [ShapeFamily::Mug, ShapeFamily::Box, ShapeFamily::Cylinder];
    let h = 1e-4;
    let (mut agree, mut total, mut worst) = (0, 0, 0.0f64);
    for s in 0..10 {
        let vol = families[s % 3].sample(&mut rng).bake(32).unwrap();
        let pose = Pose::new(
            Vector3::new(
                rng.random_range(-0.02..0.02),
                rng.random_range(-0.02..0.02),
                rng.random_range(0.3..0.5),
            ),
            UnitQuaternion::sample_uniform(&mut rng),
        );
        let scale = rng.random_range(0.08..0.12);
        let base = render(&vol, &pose, scale, &cam, None, &cfg);
        let perturbed = |k: usize, h: f64| -> (Pose, f64) {
            let mut p = pose;
            let mut sc = scale;
            match k {
                0..=2 => p.position[k] += h,
                3..=5 => {
                    let t = pose.orientation.tangent_basis()[k - 3];
                    let q = pose.orientation.to_array();
                    p.orientation = UnitQuaternion::from_array_normalized(std::array::from_fn(|i| q[i] + h * t[i]));
                }
                _ => sc *= h.exp(),
            }
            (p, sc)
        };
        let maps: Vec<_> = (0..7)
            .map(|k| {
                let (pp, sp) = perturbed(k, h);
                let (pm, sm) = perturbed(k, -h);
                (
                    render(&vol, &pp, sp, &cam, None, &cfg).depth,
                    render(&vol, &pm, sm, &cam, None, &cfg).depth,
                )
            })
            .collect();
        let smooth = |i: usize| {
            let d0 = base.depth.data[i];
            d0 > 0.0
                && maps.iter().all(|(p, m)| {
                    let (a, b) = (p.data[i] - d0, d0 - m.data[i]);
                    p.data[i] > 0.0 && m.data[i] > 0.0 && (a - b).abs() <= 0.1 * a.abs().max(b.abs()) + 1e-12
                })
        };
        let mut candidates: Vec<usize> = (0..cam.pixel_count()).filter(|&i| smooth(i)).collect();
        assert!(candidates.len() >= 20, "scene {s}: {} smooth pixels", candidates.len());
        for k in (1..candidates.len()).rev() {
            candidates.swap(k, rng.random_range(0..=k));
        }
        let chosen = &candidates[..20];
        let mut cot = vec![0.0; cam.pixel_count()];
        chosen.iter().for_each(|&i| cot[i] = 1.0);
        let g = render_backward(&vol, &pose, scale, &cam, &base, &cot).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (k, (p, m)) in maps.iter().enumerate() {
            let fd: f64 = chosen.iter().map(|&i| p.data[i] - m.data[i]).sum::<f64>() / (2.0 * h);
            let an = match k {
                0..=2 => g.d_position[k],
                3..=5 => {
                    let t = pose.orientation.tangent_basis()[k - 3];
                    (0..4).map(|i| g.d_quaternion[i] * t[i]).sum()
                }
                _ => g.d_scale * scale,
            };
            num += (an - fd).powi(2);
            den += fd.powi(2);
            total += 1;
            if an.signum() == fd.signum() {
                agree += 1;
            }
        }
        worst = worst.max((num / den).sqrt());
    }
    assert!(worst <= 5e-2, "relative error {worst}");
    assert!(agree * 100 >= 98 * total, "sign agreement {agree}/{total}");
}

#[test]
fn voxel_gradients_match_finite_differences() {
    let cfg = RenderConfig::default();
    let cam = PinholeCamera::new(131.25, 131.25, 79.5, 59.5, 160, 120).unwrap();
    let vol = ShapeSpec::sphere(0.3).bake(24).unwrap();
    let pose = Pose::new(
        Vector3::new(0.0, 0.0, 0.4),
        UnitQuaternion::from_axis_angle(Vector3::y(), 0.3),
    );
    let base = render(&vol, &pose, 0.1, &cam, None, &cfg);
    let center = 60 * 160 + 80;
    let mut cot = vec![0.0; cam.pixel_count()];
    cot[center] = 1.0;
    let g = render_backward(&vol, &pose, 0.1, &cam, &base, &cot).unwrap();
    assert!(!g.d_voxels.is_empty() && g.d_voxels.len() <= 8);
    let h = 1e-5;
    for &(idx, an) in &g.d_voxels {
        let bump = |d: f64| {
            let mut v = vol.values().to_vec();
            v[idx] += d;
            let vol = SdfVolume::new(24, v).unwrap();
            render(&vol, &pose, 0.1, &cam, None, &cfg).depth.data[center]
        };
        let fd = (bump(h) - bump(-h)) / (2.0 * h);
        assert!(
            (an - fd).abs() <= 0.05 * fd.abs().max(1e-3),
            "voxel {idx}: {an} vs {fd}"
        );
    }
}
