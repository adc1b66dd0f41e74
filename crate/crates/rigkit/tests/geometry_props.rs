//! Property tests over the geometric substrate.

use proptest::prelude::*;
use rigkit::camera::{CameraModel, Ray};
use rigkit::math::{vec3, Mat3, Vec3};
use rigkit::mesh::{box_mesh, normalize_mesh, TriMesh};
use rigkit::raycast::ray_mesh_intersections;

fn arb_point() -> impl Strategy<Value = Vec3> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| vec3(x, y, z))
}

fn arb_camera() -> impl Strategy<Value = CameraModel> {
    (
        (-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64),
        300.0..1200.0f64,
        300.0..1200.0f64,
        100.0..400.0f64,
        100.0..400.0f64,
        (-0.5..0.5f64, -0.5..0.5f64, 1.5..3.0f64),
    )
        .prop_map(|(axis, fx, fy, cx, cy, t)| {
            let rot = Mat3::from_axis_angle(vec3(axis.0, axis.1, axis.2));
            CameraModel::new(fx, fy, cx, cy, rot, vec3(t.0, t.1, t.2)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent_and_bounded(
        points in proptest::collection::vec(arb_point(), 4..40)
    ) {
        let mesh = TriMesh::new(points, vec![]).unwrap();
        let Ok((once, _)) = normalize_mesh(&mesh) else {
            // degenerate (zero extent) meshes are rejected, which is fine
            return Ok(());
        };
        for v in once.vertices() {
            prop_assert!(v.max_abs() <= 0.5 + 1e-12);
        }
        let (lo, hi) = once.bounding_box().unwrap();
        let extent = hi - lo;
        let longest = extent.x.max(extent.y).max(extent.z);
        prop_assert!((longest - 1.0).abs() < 1e-12);

        let (twice, t2) = normalize_mesh(&once).unwrap();
        prop_assert!((t2.scale - 1.0).abs() < 1e-12);
        for (a, b) in once.vertices().iter().zip(twice.vertices()) {
            prop_assert!((*a - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn backprojection_roundtrip(
        camera in arb_camera(),
        px in 0.0..512.0f64,
        py in 0.0..512.0f64,
        mu in 0.05..20.0f64,
    ) {
        let ray = camera.back_project_ray([px, py]);
        let p = ray.point(mu);
        if let Ok(q) = camera.project_point(p) {
            prop_assert!((q[0] - px).abs() < 1e-6, "{} vs {px}", q[0]);
            prop_assert!((q[1] - py).abs() < 1e-6, "{} vs {py}", q[1]);
        }
    }

    #[test]
    fn cube_intersections_even_and_ascending(
        oy in -2.0..2.0f64,
        oz in -2.0..2.0f64,
        dx in -1.0..-0.05f64,
        dy in -1.0..1.0f64,
        dz in -1.0..1.0f64,
    ) {
        let mesh = box_mesh(vec3(-0.5, -0.5, -0.5), vec3(0.5, 0.5, 0.5));
        let ray = Ray::new(vec3(2.0, oy, oz), vec3(dx, dy, dz)).unwrap();
        let hits = ray_mesh_intersections(&mesh, &ray);
        prop_assert_eq!(hits.len() % 2, 0);
        for w in hits.windows(2) {
            prop_assert!(w[0].mu < w[1].mu);
        }
    }

    #[test]
    fn ray_direction_stays_unit(
        camera in arb_camera(),
        px in -100.0..612.0f64,
        py in -100.0..612.0f64,
    ) {
        let ray = camera.back_project_ray([px, py]);
        prop_assert!((ray.direction().norm() - 1.0).abs() < 1e-9);
        // the ray originates at the camera center
        prop_assert!((ray.origin() - camera.center()).norm() < 1e-12);
    }
}
