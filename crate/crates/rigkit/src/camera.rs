//! Pinhole camera with pseudo-inverse back-projection.
//!
//! The projection matrix is `M = K [R | t]` (3x4, OpenCV-style: the camera
//! looks along +z in camera coordinates). Back-projection lifts a pixel to
//! the ray of 3D points that image onto it, parameterized through the camera
//! center: homogeneous points on the ray are `P_c * j2d_h + mu * center_h`,
//! with `P_c = M^T (M M^T)^{-1}` the right pseudo-inverse of `M`.

use std::path::Path;

use crate::kvfile::{KvFile, KvWriter};
use crate::math::{vec3, Mat3, Mat34, Mat43, Vec3};
use crate::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Half-line `origin + mu * direction`, `mu >= 0`, unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    origin: Vec3,
    direction: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Ray> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("ray", "direction must be non-zero and finite"));
        }
        Ok(Ray {
            origin,
            direction: direction / n,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn point(&self, mu: f64) -> Vec3 {
        self.origin + self.direction * mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
    projection: Mat34,
    pseudo_inverse: Mat43,
    center: Vec3,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Mat3,
        translation: Vec3,
    ) -> Result<CameraModel> {
        for v in [fx, fy, cx, cy] {
            if !v.is_finite() {
                return Err(Error::invalid("camera", "non-finite intrinsics"));
            }
        }
        if fx == 0.0 || fy == 0.0 {
            return Err(Error::invalid("camera", "zero focal length"));
        }
        let deviation = rotation.orthonormality_deviation();
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }

        let r = rotation.0;
        let t = translation;
        let mut m = [[0.0; 4]; 3];
        // K [R | t] with K = [[fx, 0, cx], [0, fy, cy], [0, 0, 1]]
        for j in 0..3 {
            m[0][j] = fx * r[0][j] + cx * r[2][j];
            m[1][j] = fy * r[1][j] + cy * r[2][j];
            m[2][j] = r[2][j];
        }
        m[0][3] = fx * t.x + cx * t.z;
        m[1][3] = fy * t.y + cy * t.z;
        m[2][3] = t.z;
        let projection = Mat34(m);

        // Right pseudo-inverse M^T (M M^T)^{-1}; M has full row rank for any
        // valid pinhole camera, so the 3x3 Gram matrix is invertible.
        let pseudo_inverse = projection.transpose_mul(projection.gram().inverse());
        let center = -(rotation.transpose().mul_vec(translation));

        let cam = CameraModel {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            projection,
            pseudo_inverse,
            center,
        };

        // Construction invariants: the center projects to the null direction
        // and the pseudo-inverse is a right inverse.
        let null = cam
            .projection
            .mul_h4([center.x, center.y, center.z, 1.0]);
        if null.norm() > 1e-9 * (1.0 + fx.abs().max(fy.abs())) {
            return Err(Error::invalid(
                "camera",
                format!("camera center does not project to zero (|Mc| = {:e})", null.norm()),
            ));
        }
        let ident = cam.projection.mul_43(cam.pseudo_inverse);
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((ident.0[i][j] - target).abs());
            }
        }
        if dev > 1e-9 {
            return Err(Error::invalid(
                "camera",
                format!("pseudo-inverse check failed (deviation {dev:e})"),
            ));
        }
        Ok(cam)
    }

    pub fn projection_matrix(&self) -> Mat34 {
        self.projection
    }

    pub fn pseudo_inverse(&self) -> Mat43 {
        self.pseudo_inverse
    }

    /// Camera center in world coordinates (`-R^T t`).
    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// Project one world point to pixel coordinates.
    pub fn project_point(&self, p: Vec3) -> Result<[f64; 2]> {
        let h = self.projection.mul_h4([p.x, p.y, p.z, 1.0]);
        if h.z.abs() < 1e-12 {
            return Err(Error::Unprojectable);
        }
        Ok([h.x / h.z, h.y / h.z])
    }

    pub fn project_points(&self, points: &[Vec3]) -> Result<Vec<[f64; 2]>> {
        points.iter().map(|&p| self.project_point(p)).collect()
    }

    /// Signed depth of a point (positive in front of the camera).
    pub fn depth(&self, p: Vec3) -> f64 {
        let h = self.projection.mul_h4([p.x, p.y, p.z, 1.0]);
        h.z
    }

    /// Back-project a pixel to the ray of world points imaging onto it.
    /// The ray starts at the camera center and points into the scene.
    pub fn back_project_ray(&self, j2d: [f64; 2]) -> Ray {
        let q = self.pseudo_inverse.mul_h3(vec3(j2d[0], j2d[1], 1.0));
        let dir = if q[3].abs() > 1e-12 {
            vec3(q[0] / q[3], q[1] / q[3], q[2] / q[3]) - self.center
        } else {
            // Pseudo-inverse landed on a point at infinity: its first three
            // components already are the direction.
            vec3(q[0], q[1], q[2])
        };
        let mut dir = dir.normalized();
        if self.depth(self.center + dir) < 0.0 {
            dir = -dir;
        }
        Ray {
            origin: self.center,
            direction: dir,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = KvWriter::new();
        w.floats("fx", &[self.fx])
            .floats("fy", &[self.fy])
            .floats("cx", &[self.cx])
            .floats("cy", &[self.cy]);
        let r = self.rotation.0;
        w.floats(
            "rotation",
            &[
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ],
        );
        w.floats(
            "translation",
            &[self.translation.x, self.translation.y, self.translation.z],
        );
        w.save(path)
    }

    pub fn load(path: &Path) -> Result<CameraModel> {
        let kv = KvFile::load(path)?;
        let fx = kv.float("fx")?;
        let fy = kv.float("fy")?;
        let cx = kv.float("cx")?;
        let cy = kv.float("cy")?;
        let r = kv.floats_exact("rotation", 9)?;
        let t = kv.floats_exact("translation", 3)?;
        CameraModel::new(
            fx,
            fy,
            cx,
            cy,
            Mat3([[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]]),
            vec3(t[0], t[1], t[2]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::point_line_distance;
    use crate::rng::Rng;

    /// Camera at the origin looking down -z with identity intrinsics.
    fn identity_camera() -> CameraModel {
        let rot = Mat3([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
        CameraModel::new(1.0, 1.0, 0.0, 0.0, rot, Vec3::ZERO).unwrap()
    }

    fn random_camera(rng: &mut Rng) -> CameraModel {
        let axis = vec3(
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        );
        let rot = Mat3::from_axis_angle(axis);
        let t = vec3(
            rng.uniform(-0.5, 0.5),
            rng.uniform(-0.5, 0.5),
            rng.uniform(1.5, 3.0),
        );
        CameraModel::new(
            rng.uniform(300.0, 1200.0),
            rng.uniform(300.0, 1200.0),
            rng.uniform(200.0, 312.0),
            rng.uniform(200.0, 312.0),
            rot,
            t,
        )
        .unwrap()
    }

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let cam = identity_camera();
        let p = cam.project_point(vec3(0.0, 0.0, -1.0)).unwrap();
        assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn projection_matches_explicit_homogeneous_chain() {
        // Independent oracle: form K (3x3) and [R|t] explicitly and push the
        // homogeneous point through the chain step by step.
        let mut rng = Rng::new(2024);
        for _ in 0..50 {
            let cam = random_camera(&mut rng);
            let p = vec3(
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            );
            let pc = cam.rotation.mul_vec(p) + cam.translation;
            if pc.z.abs() < 1e-6 {
                continue;
            }
            let k = Mat3([
                [cam.fx, 0.0, cam.cx],
                [0.0, cam.fy, cam.cy],
                [0.0, 0.0, 1.0],
            ]);
            let h = k.mul_vec(pc);
            let expected = [h.x / h.z, h.y / h.z];
            let got = cam.project_point(p).unwrap();
            assert!((got[0] - expected[0]).abs() < 1e-9);
            assert!((got[1] - expected[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn camera_center_is_null_direction() {
        let mut rng = Rng::new(7);
        let cam = random_camera(&mut rng);
        let c = cam.center();
        let h = cam.projection_matrix().mul_h4([c.x, c.y, c.z, 1.0]);
        assert!(h.norm() < 1e-9 * cam.fx);
    }

    #[test]
    fn back_projected_ray_reprojects_to_pixel() {
        let mut rng = Rng::new(99);
        for _ in 0..20 {
            let cam = random_camera(&mut rng);
            let j2d = [rng.uniform(0.0, 512.0), rng.uniform(0.0, 512.0)];
            let ray = cam.back_project_ray(j2d);
            assert!((ray.direction().norm() - 1.0).abs() < 1e-12);
            for mu in [0.1, 0.5, 1.0, 2.5, 10.0] {
                let q = cam.project_point(ray.point(mu)).unwrap();
                assert!(
                    (q[0] - j2d[0]).abs() < 1e-6 && (q[1] - j2d[1]).abs() < 1e-6,
                    "reprojection drifted: {q:?} vs {j2d:?}"
                );
            }
        }
    }

    #[test]
    fn principal_point_ray_is_optical_axis() {
        let cam = identity_camera();
        let ray = cam.back_project_ray([0.0, 0.0]);
        assert!((ray.origin() - Vec3::ZERO).norm() < 1e-12);
        assert!((ray.direction() - vec3(0.0, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn ray_through_known_point() {
        let mut rng = Rng::new(4242);
        for _ in 0..20 {
            let cam = random_camera(&mut rng);
            let p = vec3(
                rng.uniform(-0.5, 0.5),
                rng.uniform(-0.5, 0.5),
                rng.uniform(-0.5, 0.5),
            );
            let j2d = cam.project_point(p).unwrap();
            let ray = cam.back_project_ray(j2d);
            let d = point_line_distance(p, ray.origin(), ray.direction());
            assert!(d < 1e-9, "point-line distance {d}");
        }
    }

    #[test]
    fn non_orthonormal_rotation_rejected() {
        let rot = Mat3([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(
            CameraModel::new(1.0, 1.0, 0.0, 0.0, rot, Vec3::ZERO),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn point_at_w_zero_unprojectable() {
        let cam = identity_camera();
        // A point on the camera plane (z_cam = 0).
        assert!(matches!(
            cam.project_point(vec3(1.0, 1.0, 0.0)),
            Err(Error::Unprojectable)
        ));
    }

    #[test]
    fn save_load_roundtrip() {
        let mut rng = Rng::new(31);
        let cam = random_camera(&mut rng);
        let dir = std::env::temp_dir().join("rigkit_cam_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("camera.txt");
        cam.save(&path).unwrap();
        let back = CameraModel::load(&path).unwrap();
        assert_eq!(cam, back);
    }
}
