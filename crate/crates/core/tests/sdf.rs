use nalgebra::Vector3;
use proptest::prelude::*;
use sdfabs::sdf::{extract_surface_points, Offset, SdfVolume, ShapeSpec};
use sdfabs::so3::UnitQuaternion;

fn interior() -> impl Strategy<Value = Vector3<f64>> {
    // strictly between the outermost voxel centers of an R=8 grid
    prop::array::uniform3(-0.43f64..0.43).prop_map(Vector3::from)
}

fn primitive() -> impl Strategy<Value = ShapeSpec> {
    prop_oneof![
        (0.1f64..0.4).prop_map(ShapeSpec::sphere),
        prop::array::uniform3(0.1f64..0.3).prop_map(ShapeSpec::cuboid),
        (0.1f64..0.3, 0.1f64..0.3).prop_map(|(r, h)| ShapeSpec::cylinder(r, h)),
        (0.15f64..0.25, 0.05f64..0.12).prop_map(|(a, b)| ShapeSpec::torus(a, b)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trilinear_fields_are_reproduced(c in prop::array::uniform8(-1.0f64..1.0), p in interior()) {
        let f = |q: Vector3<f64>| {
            c[0] + c[1] * q.x + c[2] * q.y + c[3] * q.z + c[4] * q.x * q.y + c[5] * q.y * q.z
                + c[6] * q.x * q.z + c[7] * q.x * q.y * q.z
        };
        let vol = SdfVolume::from_fn(8, f);
        let s = vol.sample(p);
        prop_assert!((s.value - f(p)).abs() < 1e-9);
        prop_assert!((s.corners.weight.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let h = 1e-6;
        for a in 0..3 {
            let mut e = Vector3::zeros();
            e[a] = h;
            let fd = (f(p + e) - f(p - e)) / (2.0 * h);
            prop_assert!((s.grad[a] - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn outside_values_bound_the_distance(dir in prop::array::uniform3(-1.0f64..1.0), r in 0.6f64..3.0) {
        let d = Vector3::from(dir);
        prop_assume!(d.norm() > 0.1);
        let p = d.normalize() * r;
        prop_assume!(p.amax() > 0.5);
        let vol = ShapeSpec::sphere(0.3).bake(16).unwrap();
        let to_cube = (p.map(|x| x.abs()) - Vector3::repeat(0.5)).map(|x| x.max(0.0)).norm();
        prop_assert!(vol.sample_value(p) >= to_cube - vol.max_abs() - 1e-12);
        // continuous across the cube boundary
        let inside = p * (0.4999 / p.amax());
        let outside = p * (0.5001 / p.amax());
        prop_assert!((vol.sample_value(inside) - vol.sample_value(outside)).abs() < 1e-3);
    }

    #[test]
    fn baked_surfaces_lie_on_the_analytic_surface(spec in primitive(), res in prop::sample::select(vec![24usize, 32, 48])) {
        let vol = spec.bake(res).unwrap();
        let pts = extract_surface_points(&vol).unwrap();
        prop_assert!(!pts.is_empty());
        let mean = pts.iter().map(|p| spec.distance(*p).abs()).sum::<f64>() / pts.len() as f64;
        prop_assert!(mean <= 1.0 / res as f64, "mean |sdf| {} at R={}", mean, res);
    }

    #[test]
    fn offsets_move_the_field_rigidly(spec in primitive(), t in prop::array::uniform3(-0.05f64..0.05), axis in prop::array::uniform3(-1.0f64..1.0), angle in 0.0f64..3.0, p in interior()) {
        let a = Vector3::from(axis);
        prop_assume!(a.norm() > 0.1);
        let offset = Offset { translation: t, rotation: UnitQuaternion::from_axis_angle(a.normalize(), angle) };
        let moved = spec.clone().with_offset(offset);
        let local = offset.rotation.inverse_rotate(p - Vector3::from(t));
        prop_assert!((moved.distance(p) - spec.distance(local)).abs() < 1e-9);
    }
}

#[test]
fn volume_file_roundtrip_and_layout() {
    let vol = ShapeSpec::cylinder(0.2, 0.3).bake(20).unwrap();
    let mut bytes = Vec::new();
    sdfabs::io::write_volume(&mut bytes, &vol).unwrap();
    assert_eq!(&bytes[..4], b"SDFV");
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 20);
    assert_eq!(bytes.len(), 10 + 4 * 20 * 20 * 20);
    let back = sdfabs::io::read_volume(&mut bytes.as_slice()).unwrap();
    for (a, b) in vol.values().iter().zip(back.values()) {
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
    }
}
