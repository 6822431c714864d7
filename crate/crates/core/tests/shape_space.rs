mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdfabs::synth::ShapeFamily;
use sdfabs::ShapeSpace;

#[test]
fn decode_encode_matches_svd_oracle() {
    let vols = common::boxes(30, 16, 2);
    let n = 6;
    let space = ShapeSpace::fit(&vols, n, None).unwrap();
    let oracle = common::svd_projection(&vols, n);
    let mut se = 0.0;
    let mut count = 0;
    for (v, o) in vols.iter().zip(&oracle) {
        let back = space.decode(&space.encode(v).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(o) {
            se += (a - b).powi(2);
            count += 1;
        }
    }
    let rmse = (se / count as f64).sqrt();
    assert!(rmse <= 1e-6, "rmse {rmse:e}");
}

#[test]
fn near_surface_weighting_trades_far_error_for_surface_error() {
    let train = common::boxes(30, 16, 4);
    let held = common::boxes(10, 16, 5);
    let plain = ShapeSpace::fit(&train, 4, None).unwrap();
    let weighted = ShapeSpace::fit(&train, 4, Some(Default::default())).unwrap();
    let err = |s: &ShapeSpace, near: bool| {
        let mut e = 0.0;
        let mut c = 0;
        for v in &held {
            let back = s.decode(&s.encode(v).unwrap()).unwrap();
            for (a, b) in v.values().iter().zip(back.values()) {
                if (a.abs() < 0.05) == near {
                    e += (a - b).powi(2);
                    c += 1;
                }
            }
        }
        (e / c as f64).sqrt()
    };
    // 5% slack for held-out noise
    assert!(err(&weighted, true) <= err(&plain, true) * 1.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn encode_inverts_decode(z in prop::collection::vec(-3.0f64..3.0, 5)) {
        let space = common::family_space(ShapeFamily::Cylinder, 12, 12, 5, 1);
        let back = space.encode(&space.decode(&z).unwrap()).unwrap();
        for (a, b) in z.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-5);
        }
    }

    #[test]
    fn vjp_is_the_adjoint(z in prop::collection::vec(-2.0f64..2.0, 5), seed in 0u64..1000) {
        let space = common::family_space(ShapeFamily::Cylinder, 12, 12, 5, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..space.mean().len()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let d0 = space.decode(&[0.0; 5]).unwrap();
        let dz = space.decode(&z).unwrap();
        let lhs: f64 = dz.values().iter().zip(d0.values()).zip(&v).map(|((a, b), c)| (a - b) * c).sum();
        let g = space.decode_vjp(&v).unwrap();
        let rhs: f64 = z.iter().zip(&g).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-5 * (1.0 + lhs.abs()));
        let sparse: Vec<(usize, f64)> = v.iter().copied().enumerate().collect();
        let gs = space.decode_vjp_sparse(&sparse);
        for (a, b) in g.iter().zip(&gs) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn shape_space_file_roundtrip() {
    let space = common::family_space(ShapeFamily::Mug, 16, 12, 4, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mug.sspc");
    sdfabs::io::save_shape_space(&path, &space).unwrap();
    let back = sdfabs::io::load_shape_space(&path).unwrap();
    assert_eq!(back.latent_dim(), 4);
    assert_eq!(back.resolution(), 16);
    let z = [0.5, -1.0, 0.25, 2.0];
    let (a, b) = (space.decode(&z).unwrap(), back.decode(&z).unwrap());
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() < 1e-5);
    }
}
