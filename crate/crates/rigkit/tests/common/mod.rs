//! Shared test oracles, independent of the library's implementation paths:
//! analytic ray-capsule intersections (vs. tessellated ray casting) and
//! plain-loop metric references (vs. the metrics module).

use rigkit::camera::Ray;
use rigkit::math::Vec3;
use rigkit::skeleton::SkinningMatrix;
use rigkit::synth::CapsulePart;

/// Entry/exit ray parameters of a ray against an analytic capsule
/// (sphere-capped cylinder; degenerate to a sphere when p0 == p1).
pub fn ray_capsule_interval(ray: &Ray, part: &CapsulePart) -> Option<(f64, f64)> {
    let o = ray.origin();
    let d = ray.direction();
    let mut ts: Vec<f64> = Vec::new();

    let axis = part.p1 - part.p0;
    let len = axis.norm();
    let r = part.radius;

    let mut sphere_hits = |center: Vec3, side: f64| {
        // side < 0: keep roots below the p0 end; side > 0: above the p1 end;
        // side == 0: keep all (pure sphere).
        let m = o - center;
        let b = m.dot(d);
        let c = m.dot(m) - r * r;
        let disc = b * b - c;
        if disc < 0.0 {
            return Vec::new();
        }
        let sq = disc.sqrt();
        [-b - sq, -b + sq]
            .into_iter()
            .filter(|&t| {
                if len < 1e-12 || side == 0.0 {
                    return true;
                }
                let axial = (o + d * t - part.p0).dot(axis) / len;
                if side < 0.0 {
                    axial <= 0.0
                } else {
                    axial >= len
                }
            })
            .collect::<Vec<f64>>()
    };

    if len < 1e-12 {
        ts.extend(sphere_hits(part.p0, 0.0));
    } else {
        let a_hat = axis / len;
        // infinite cylinder reduced to the plane orthogonal to the axis
        let m = o - part.p0;
        let m_perp = m - a_hat * m.dot(a_hat);
        let d_perp = d - a_hat * d.dot(a_hat);
        let a = d_perp.dot(d_perp);
        if a > 1e-16 {
            let b = m_perp.dot(d_perp);
            let c = m_perp.dot(m_perp) - r * r;
            let disc = b * b - a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for t in [(-b - sq) / a, (-b + sq) / a] {
                    let axial = (o + d * t - part.p0).dot(a_hat);
                    if (0.0..=len).contains(&axial) {
                        ts.push(t);
                    }
                }
            }
        }
        ts.extend(sphere_hits(part.p0, -1.0));
        ts.extend(sphere_hits(part.p1, 1.0));
    }

    let ts: Vec<f64> = ts.into_iter().filter(|t| *t >= 0.0).collect();
    if ts.is_empty() {
        return None;
    }
    let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// First-entry/last-exit over a union of capsules, if the ray hits any.
pub fn ray_union_first_last(ray: &Ray, parts: &[CapsulePart]) -> Option<(f64, f64)> {
    let mut first = f64::INFINITY;
    let mut last = f64::NEG_INFINITY;
    let mut hit = false;
    for part in parts {
        if let Some((lo, hi)) = ray_capsule_interval(ray, part) {
            hit = true;
            first = first.min(lo);
            last = last.max(hi);
        }
    }
    hit.then_some((first, last))
}

// ----- brute-force metric references (plain index loops) -----

pub fn brute_cd_j2j(a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut s1 = 0.0;
    for i in 0..a.len() {
        let mut best = f64::INFINITY;
        for j in 0..b.len() {
            let d = (a[i] - b[j]).norm();
            if d < best {
                best = d;
            }
        }
        s1 += best;
    }
    let mut s2 = 0.0;
    for j in 0..b.len() {
        let mut best = f64::INFINITY;
        for i in 0..a.len() {
            let d = (a[i] - b[j]).norm();
            if d < best {
                best = d;
            }
        }
        s2 += best;
    }
    0.5 * (s1 / a.len() as f64 + s2 / b.len() as f64)
}

fn brute_point_segment(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    // Sampled-free closed form, written out independently.
    let ab = b - a;
    let denom = ab.dot(ab);
    let t = if denom == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / denom).clamp(0.0, 1.0)
    };
    let closest = Vec3 {
        x: a.x + ab.x * t,
        y: a.y + ab.y * t,
        z: a.z + ab.z * t,
    };
    (p - closest).norm()
}

pub fn brute_cd_j2b(
    a_joints: &[Vec3],
    a_bones: &[(Vec3, Vec3)],
    b_joints: &[Vec3],
    b_bones: &[(Vec3, Vec3)],
) -> f64 {
    let mut s1 = 0.0;
    for &p in a_joints {
        let mut best = f64::INFINITY;
        for &(u, v) in b_bones {
            let d = brute_point_segment(p, u, v);
            if d < best {
                best = d;
            }
        }
        s1 += best;
    }
    let mut s2 = 0.0;
    for &p in b_joints {
        let mut best = f64::INFINITY;
        for &(u, v) in a_bones {
            let d = brute_point_segment(p, u, v);
            if d < best {
                best = d;
            }
        }
        s2 += best;
    }
    0.5 * (s1 / a_joints.len() as f64 + s2 / b_joints.len() as f64)
}

pub fn brute_precision(pred: &SkinningMatrix, gt: &SkinningMatrix, threshold: f64) -> f64 {
    let mut acc = 0.0;
    let mut rows = 0usize;
    for i in 0..pred.rows() {
        let mut inter = 0.0;
        let mut size = 0.0;
        for j in 0..pred.cols() {
            if pred.get(i, j) >= threshold {
                size += 1.0;
                if gt.get(i, j) >= threshold {
                    inter += 1.0;
                }
            }
        }
        if size > 0.0 {
            acc += inter / size;
            rows += 1;
        }
    }
    if rows == 0 {
        0.0
    } else {
        acc / rows as f64
    }
}

pub fn brute_l1(pred: &SkinningMatrix, gt: &SkinningMatrix) -> f64 {
    let mut total = 0.0;
    for i in 0..pred.rows() {
        for j in 0..pred.cols() {
            total += (pred.get(i, j) - gt.get(i, j)).abs();
        }
    }
    total / pred.rows() as f64
}
