use manitail_core::math::{angle_between, wrap_angle, Mat3, SpatialInertia, UnitQuaternion, Vec3};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
}

fn quat() -> impl Strategy<Value = UnitQuaternion> {
    (unit(), -3.1f64..3.1).prop_map(|(a, t)| UnitQuaternion::from_axis_angle(&a, t))
}

proptest! {
    #[test]
    fn angle_is_symmetric_and_bounded(u in unit(), v in unit()) {
        let a = angle_between(&u, &v).unwrap();
        let b = angle_between(&v, &u).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=std::f64::consts::PI).contains(&a));
    }

    #[test]
    fn angle_obeys_triangle_inequality(u in unit(), v in unit(), w in unit()) {
        let uv = angle_between(&u, &v).unwrap();
        let vw = angle_between(&v, &w).unwrap();
        let uw = angle_between(&u, &w).unwrap();
        prop_assert!(uw <= uv + vw + 1e-9);
    }

    #[test]
    fn quaternion_products_stay_unit(a in quat(), b in quat(), w in unit(), dt in 0.0f64..0.1) {
        prop_assert!(((a * b).norm() - 1.0).abs() < 1e-9);
        prop_assert!((a.integrate(&(w * 5.0), dt).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_matrix_round_trip(q in quat(), v in unit()) {
        let r = q.to_rotation_matrix();
        prop_assert!((r * r.transpose() - Mat3::identity()).norm() < 1e-12);
        prop_assert!((q.rotate(&v) - r * v).norm() < 1e-12);
        let back = UnitQuaternion::from_rotation_matrix(&r);
        prop_assert!((back.to_rotation_matrix() - r).norm() < 1e-9);
    }

    #[test]
    fn transformed_inertia_stays_valid(
        m in 0.1f64..5.0,
        sx in 0.01f64..1.0, sy in 0.01f64..1.0, sz in 0.01f64..1.0,
        q in quat(), t in unit(), d in 0.0f64..2.0,
    ) {
        let body = SpatialInertia::solid_box(m, Vec3::new(0.1, -0.2, 0.3), Vec3::new(sx, sy, sz));
        let r = q.to_rotation_matrix();
        let moved = body.transform(&r, &(t * d));
        prop_assert!(moved.validate().is_ok());
        let back = moved.transform(&r.transpose(), &(-(r.transpose() * (t * d))));
        prop_assert!((back.com - body.com).norm() < 1e-12);
        prop_assert!((back.inertia - body.inertia).norm() < 1e-12);
    }

    #[test]
    fn wrap_angle_lands_in_half_open_range(a in -100.0f64..100.0) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        prop_assert!(((a - w) / (2.0 * std::f64::consts::PI)).fract().abs() < 1e-9
            || (1.0 - ((a - w) / (2.0 * std::f64::consts::PI)).fract().abs()) < 1e-9);
    }
}
