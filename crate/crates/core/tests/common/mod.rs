#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdfabs::render::{render, RenderConfig};
use sdfabs::synth::{CategoryConfig, ShapeFamily, ShapeSource};
use sdfabs::{PinholeCamera, Pose, SdfVolume, ShapeSpace};

/// Shape space over `count` random instances of a family.
pub fn family_space(family: ShapeFamily, res: usize, count: usize, latent: usize, seed: u64) -> ShapeSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vols: Vec<_> = (0..count).map(|_| family.sample(&mut rng).bake(res).unwrap()).collect();
    ShapeSpace::fit(&vols, latent, Some(Default::default())).unwrap()
}

/// The experiment shape space: 40 mugs at R=32, N=8.
pub fn mug_space() -> ShapeSpace {
    family_space(ShapeFamily::Mug, 32, 40, 8, 100)
}

/// Clean procedural category at `res`.
pub fn category(family: ShapeFamily, res: usize) -> CategoryConfig {
    let mut cfg = CategoryConfig::procedural(family);
    cfg.source = ShapeSource::Procedural {
        family,
        resolution: res,
    };
    cfg.augment = None;
    cfg
}

/// Half-resolution camera for faster tests.
pub fn small_camera() -> PinholeCamera {
    PinholeCamera::new(262.5, 262.5, 159.5, 119.5, 320, 240).unwrap()
}

/// Runs the binary; returns the exit code and stdout.
pub fn sdfabs(args: &[&str]) -> (i32, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_sdfabs"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

/// bake, fit, synth, estimate and eval through the binary in `dir`; returns
/// the evaluation JSON text.
pub fn cli_pipeline(dir: &std::path::Path, scenes: usize, views: usize, camera: PinholeCamera, iters: usize) -> String {
    let p = |name: &str| dir.join(name).display().to_string();
    let ok = |args: &[&str]| {
        let (code, _) = sdfabs(args);
        assert_eq!(code, 0, "sdfabs {args:?}");
    };
    ok(&[
        "--seed",
        "3",
        "bake",
        "--family",
        "mug",
        "--count",
        "20",
        "--res",
        "32",
        "--out",
        &p("vols"),
    ]);
    ok(&["fit", "--vols", &p("vols"), "--latent", "6", "--out", &p("space.sspc")]);
    let mut cfg = CategoryConfig::procedural(ShapeFamily::Mug);
    cfg.source = ShapeSource::ShapeSpace {
        path: dir.join("space.sspc"),
    };
    cfg.camera = camera;
    cfg.augment = None;
    std::fs::write(dir.join("category.json"), serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let (s, v, it) = (scenes.to_string(), views.to_string(), iters.to_string());
    ok(&[
        "--seed",
        "11",
        "synth",
        "--category",
        &p("category.json"),
        "--count",
        &s,
        "--views",
        &v,
        "--out",
        &p("data"),
    ]);
    ok(&[
        "estimate",
        "--shape-space",
        &p("space.sspc"),
        "--views",
        &p("data/manifest.jsonl"),
        "--category",
        &p("category.json"),
        "--iters",
        &it,
        "--out",
        &p("est"),
    ]);
    ok(&[
        "eval",
        "--shape-space",
        &p("space.sspc"),
        "--manifest",
        &p("data/manifest.jsonl"),
        "--estimates",
        &p("est"),
        "--out",
        &p("eval.json"),
    ]);
    std::fs::read_to_string(dir.join("eval.json")).unwrap()
}

pub fn boxes(count: usize, res: usize, seed: u64) -> Vec<SdfVolume> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| ShapeFamily::Box.sample(&mut rng).bake(res).unwrap())
        .collect()
}

/// Best rank-N reconstruction of each member from an SVD of the centered data matrix.
pub fn svd_projection(vols: &[SdfVolume], n: usize) -> Vec<Vec<f64>> {
    let d = vols[0].len();
    let m = vols.len();
    let mut mean = vec![0.0; d];
    for v in vols {
        for (a, b) in mean.iter_mut().zip(v.values()) {
            *a += b / m as f64;
        }
    }
    let x = DMatrix::from_fn(m, d, |i, j| vols[i].values()[j] - mean[j]);
    let svd = x.clone().svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = DMatrix::from_fn(n, d, |r, c| vt[(idx[r], c)]);
    let proj = (&x * top.transpose()) * &top;
    (0..m)
        .map(|i| (0..d).map(|j| proj[(i, j)] + mean[j]).collect())
        .collect()
}

/// First zero crossing along the pixel ray by fixed-step marching, refined by
/// bisection. Returns z-depth.
pub fn dense_march(
    vol: &SdfVolume,
    pose: &Pose,
    scale: f64,
    cam: &PinholeCamera,
    i: usize,
    j: usize,
    step: f64,
) -> Option<f64> {
    let ray = cam.ray(i, j);
    let field = |z: f64| vol.sample_value(pose.orientation.inverse_rotate(ray * z - pose.position) / scale);
    // depth range where the ray is inside the bounding sphere
    let reach = scale * 0.5 * 3f64.sqrt();
    let (n2, b) = (ray.norm_squared(), ray.dot(&pose.position));
    let disc = b * b - n2 * (pose.position.norm_squared() - reach * reach);
    if disc <= 0.0 {
        return None;
    }
    let (start, end) = (((b - disc.sqrt()) / n2).max(1e-6), (b + disc.sqrt()) / n2);
    let dz = step * ray.z / ray.norm();
    let mut z = start;
    let mut prev = field(z);
    while z < end {
        let next = field(z + dz);
        if prev > 0.0 && next <= 0.0 {
            let (mut a, mut b) = (z, z + dz);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if field(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev = next;
        z += dz;
    }
    None
}

/// Hit pixels, pixels where renderer and oracle disagree on hit or miss, and
/// the worst depth error in units of 2·ε_hit.
pub fn compare_with_oracle(vol: &SdfVolume, pose: &Pose, scale: f64, cam: &PinholeCamera) -> (usize, usize, f64) {
    let cfg = RenderConfig::default();
    let r = render(vol, pose, scale, cam, None, &cfg);
    let eps = cfg.hit_epsilon(scale, vol.resolution());
    let (mut hits, mut mismatched, mut worst) = (0, 0, 0.0f64);
    for i in 0..cam.height {
        for j in 0..cam.width {
            let d = r.depth.get(i, j);
            match dense_march(vol, pose, scale, cam, i, j, 1e-4 * scale) {
                Some(o) if d > 0.0 => {
                    hits += 1;
                    worst = worst.max((d - o).abs() / (2.0 * eps));
                }
                None if d == 0.0 => {}
                _ => mismatched += 1,
            }
        }
    }
    (hits, mismatched, worst)
}
