//! Ray-triangle and ray-mesh intersection (Moller-Trumbore).

use crate::camera::Ray;
use crate::math::Vec3;
use crate::mesh::TriMesh;

/// Barycentric tolerance: hits exactly on shared edges register on both
/// triangles and are merged by the mu-dedup below.
const BARY_EPS: f64 = 1e-12;
/// Hits closer than this along the ray are treated as one.
const DEDUP_MU_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub mu: f64,
    pub point: Vec3,
}

/// Moller-Trumbore ray/triangle test. Returns the ray parameter of the hit,
/// if any, for `mu >= 0`. Edge and vertex hits are inclusive.
pub fn ray_triangle(ray: &Ray, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction().cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-16 {
        return None; // parallel or degenerate triangle
    }
    let inv_det = 1.0 / det;
    let s = ray.origin() - a;
    let u = s.dot(p) * inv_det;
    if u < -BARY_EPS || u > 1.0 + BARY_EPS {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.direction().dot(q) * inv_det;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return None;
    }
    let mu = e2.dot(q) * inv_det;
    if mu < -BARY_EPS {
        return None;
    }
    Some(mu.max(0.0))
}

/// All hits of the ray against the mesh, ascending in mu, with hits within
/// `1e-9` of each other merged (shared-edge hits counted once).
pub fn ray_mesh_intersections(mesh: &TriMesh, ray: &Ray) -> Vec<RayHit> {
    let mut mus: Vec<f64> = Vec::new();
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_vertices(f);
        if let Some(mu) = ray_triangle(ray, a, b, c) {
            mus.push(mu);
        }
    }
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut hits: Vec<RayHit> = Vec::with_capacity(mus.len());
    for mu in mus {
        if let Some(last) = hits.last() {
            if mu - last.mu < DEDUP_MU_EPS {
                continue;
            }
        }
        hits.push(RayHit {
            mu,
            point: ray.point(mu),
        });
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::mesh::box_mesh;

    #[test]
    fn ray_through_cube_center_hits_twice() {
        let mesh = box_mesh(vec3(-0.5, -0.5, -0.5), vec3(0.5, 0.5, 0.5));
        let ray = Ray::new(vec3(0.0, 0.0, 3.0), vec3(0.0, 0.0, -1.0)).unwrap();
        let hits = ray_mesh_intersections(&mesh, &ray);
        assert_eq!(hits.len(), 2, "entry and exit");
        assert!((hits[0].mu - 2.5).abs() < 1e-12);
        assert!((hits[1].mu - 3.5).abs() < 1e-12);
        assert!((hits[0].point - vec3(0.0, 0.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn missing_ray_returns_empty() {
        let mesh = box_mesh(vec3(-0.5, -0.5, -0.5), vec3(0.5, 0.5, 0.5));
        let ray = Ray::new(vec3(2.0, 2.0, 3.0), vec3(0.0, 0.0, -1.0)).unwrap();
        assert!(ray_mesh_intersections(&mesh, &ray).is_empty());
    }

    #[test]
    fn two_cube_stack_gives_four_hits() {
        // Cubes stacked along y: [0,1] and [1.5,2.5]. A downward ray from
        // y=4 crosses the horizontal planes y = 2.5, 1.5, 1.0, 0.0, i.e.
        // mu = 1.5, 2.5, 3.0, 4.0.
        let mut a = box_mesh(vec3(-0.5, 0.0, -0.5), vec3(0.5, 1.0, 0.5));
        let b = box_mesh(vec3(-0.5, 1.5, -0.5), vec3(0.5, 2.5, 0.5));
        let mut verts = a.vertices().to_vec();
        let mut faces = a.faces().to_vec();
        let offset = verts.len();
        verts.extend_from_slice(b.vertices());
        faces.extend(b.faces().iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
        a = crate::mesh::TriMesh::new(verts, faces).unwrap();

        let ray = Ray::new(vec3(0.1, 4.0, 0.1), vec3(0.0, -1.0, 0.0)).unwrap();
        let hits = ray_mesh_intersections(&a, &ray);
        let expected_mus = [1.5, 2.5, 3.0, 4.0];
        assert_eq!(hits.len(), 4);
        for (h, e) in hits.iter().zip(expected_mus) {
            assert!((h.mu - e).abs() < 1e-12, "mu {} vs {}", h.mu, e);
        }
        for w in hits.windows(2) {
            assert!(w[0].mu < w[1].mu);
        }
    }

    #[test]
    fn edge_hit_counted_once() {
        // Aim exactly at the diagonal edge shared by two triangles of the
        // cube's +z face.
        let mesh = box_mesh(vec3(-0.5, -0.5, -0.5), vec3(0.5, 0.5, 0.5));
        let ray = Ray::new(vec3(0.25, 0.25, 3.0), vec3(0.0, 0.0, -1.0)).unwrap();
        // (0.25, 0.25) lies on the fan diagonal of the face split; entry and
        // exit only.
        let hits = ray_mesh_intersections(&mesh, &ray);
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn parity_is_even_from_outside() {
        let mesh = box_mesh(vec3(-0.5, -0.5, -0.5), vec3(0.5, 0.5, 0.5));
        let mut rng = crate::rng::Rng::new(17);
        for _ in 0..200 {
            let origin = vec3(
                rng.uniform(1.0, 2.0),
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
            );
            let dir = vec3(
                rng.uniform(-1.0, -0.1),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-1.0, 1.0),
            );
            let ray = Ray::new(origin, dir).unwrap();
            let hits = ray_mesh_intersections(&mesh, &ray);
            assert_eq!(hits.len() % 2, 0, "odd parity from outside");
        }
    }
}
