//! Small fixed-size linear algebra: 3-vectors and the 3x3 / 3x4 / 4x3 / 4x4
//! matrices used by cameras, kinematics and skinning. All f64.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            Vec3::ZERO
        } else {
            self / n
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min_comp(self, o: Vec3) -> Vec3 {
        vec3(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_comp(self, o: Vec3) -> Vec3 {
        vec3(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Vec3 {
        vec3(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        vec3(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn transpose(self) -> Mat3 {
        let m = self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(self, v: Vec3) -> Vec3 {
        let m = self.0;
        vec3(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(self, o: Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    r[i][j] += self.0[i][k] * o.0[k][j];
                }
            }
        }
        Mat3(r)
    }

    pub fn det(self) -> f64 {
        let m = self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate; caller must ensure the matrix is invertible.
    pub fn inverse(self) -> Mat3 {
        let m = self.0;
        let det = self.det();
        let inv = 1.0 / det;
        Mat3([
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
            ],
        ])
    }

    /// Rodrigues rotation from an axis-angle vector (angle = |v| radians).
    pub fn from_axis_angle(v: Vec3) -> Mat3 {
        let theta = v.norm();
        if theta < 1e-12 {
            return Mat3::IDENTITY;
        }
        let a = v / theta;
        let (s, c) = theta.sin_cos();
        let t = 1.0 - c;
        Mat3([
            [
                c + a.x * a.x * t,
                a.x * a.y * t - a.z * s,
                a.x * a.z * t + a.y * s,
            ],
            [
                a.y * a.x * t + a.z * s,
                c + a.y * a.y * t,
                a.y * a.z * t - a.x * s,
            ],
            [
                a.z * a.x * t - a.y * s,
                a.z * a.y * t + a.x * s,
                c + a.z * a.z * t,
            ],
        ])
    }

    /// Axis-angle vector of a rotation matrix (matrix logarithm).
    pub fn to_axis_angle(self) -> Vec3 {
        let m = self.0;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let cos_theta = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
        let theta = cos_theta.acos();
        if theta < 1e-12 {
            return Vec3::ZERO;
        }
        if theta > std::f64::consts::PI - 1e-6 {
            // Near pi the skew part vanishes; recover the axis from the
            // symmetric part instead.
            let xx = ((m[0][0] + 1.0) * 0.5).max(0.0).sqrt();
            let yy = ((m[1][1] + 1.0) * 0.5).max(0.0).sqrt();
            let zz = ((m[2][2] + 1.0) * 0.5).max(0.0).sqrt();
            let axis = vec3(
                xx.copysign(m[2][1] - m[1][2]),
                yy.copysign(m[0][2] - m[2][0]),
                zz.copysign(m[1][0] - m[0][1]),
            )
            .normalized();
            return axis * theta;
        }
        let axis = vec3(
            m[2][1] - m[1][2],
            m[0][2] - m[2][0],
            m[1][0] - m[0][1],
        ) * (0.5 / theta.sin());
        axis * theta
    }

    /// Max absolute deviation of `self^T self` from the identity.
    pub fn orthonormality_deviation(self) -> f64 {
        let g = self.transpose().mul_mat(self);
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g.0[i][j] - target).abs());
            }
        }
        dev
    }
}

/// Rotation about x, then y, then z: `Rz(z) * Ry(y) * Rx(x)`.
pub fn euler_xyz_to_matrix(x: f64, y: f64, z: f64) -> Mat3 {
    let rx = Mat3::from_axis_angle(vec3(x, 0.0, 0.0));
    let ry = Mat3::from_axis_angle(vec3(0.0, y, 0.0));
    let rz = Mat3::from_axis_angle(vec3(0.0, 0.0, z));
    rz.mul_mat(ry).mul_mat(rx)
}

/// Row-major 4x4 homogeneous transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[f64; 4]; 4]);

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);

    pub fn translation(t: Vec3) -> Mat4 {
        let mut m = Mat4::IDENTITY;
        m.0[0][3] = t.x;
        m.0[1][3] = t.y;
        m.0[2][3] = t.z;
        m
    }

    pub fn from_rotation(r: Mat3) -> Mat4 {
        let mut m = Mat4::IDENTITY;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = r.0[i][j];
            }
        }
        m
    }

    /// Rotation about a fixed pivot point: `T(pivot) R T(-pivot)`.
    pub fn rotation_about(r: Mat3, pivot: Vec3) -> Mat4 {
        Mat4::translation(pivot)
            .mul_mat(Mat4::from_rotation(r))
            .mul_mat(Mat4::translation(-pivot))
    }

    pub fn mul_mat(self, o: Mat4) -> Mat4 {
        let mut r = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    r[i][j] += self.0[i][k] * o.0[k][j];
                }
            }
        }
        Mat4(r)
    }

    /// Apply to a 3D point (w = 1).
    pub fn transform_point(self, p: Vec3) -> Vec3 {
        let m = self.0;
        vec3(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
        )
    }

    pub fn scale(self, s: f64) -> Mat4 {
        let mut m = self.0;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Mat4(m)
    }

    pub fn add(self, o: Mat4) -> Mat4 {
        let mut m = self.0;
        for (row, orow) in m.iter_mut().zip(o.0.iter()) {
            for (v, ov) in row.iter_mut().zip(orow.iter()) {
                *v += *ov;
            }
        }
        Mat4(m)
    }
}

/// 3x4 matrix (camera projection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat34(pub [[f64; 4]; 3]);

impl Mat34 {
    /// Apply to a homogeneous 4-vector.
    pub fn mul_h4(self, v: [f64; 4]) -> Vec3 {
        let m = self.0;
        vec3(
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2] + m[0][3] * v[3],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2] + m[1][3] * v[3],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2] + m[2][3] * v[3],
        )
    }

    /// `M * M^T` as a 3x3 matrix.
    pub fn gram(self) -> Mat3 {
        let m = self.0;
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..4 {
                    r[i][j] += m[i][k] * m[j][k];
                }
            }
        }
        Mat3(r)
    }

    /// `M^T * A` as a 4x3 matrix.
    pub fn transpose_mul(self, a: Mat3) -> Mat43 {
        let m = self.0;
        let mut r = [[0.0; 3]; 4];
        for i in 0..4 {
            for j in 0..3 {
                for k in 0..3 {
                    r[i][j] += m[k][i] * a.0[k][j];
                }
            }
        }
        Mat43(r)
    }

    /// `M * P` for a 4x3 matrix `P`, as 3x3.
    pub fn mul_43(self, p: Mat43) -> Mat3 {
        let m = self.0;
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..4 {
                    r[i][j] += m[i][k] * p.0[k][j];
                }
            }
        }
        Mat3(r)
    }
}

/// 4x3 matrix (projection pseudo-inverse).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat43(pub [[f64; 3]; 4]);

impl Mat43 {
    /// Apply to a homogeneous 2D point (3-vector), yielding a 4-vector.
    pub fn mul_h3(self, v: Vec3) -> [f64; 4] {
        let m = self.0;
        [
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
            m[3][0] * v.x + m[3][1] * v.y + m[3][2] * v.z,
        ]
    }
}

/// Distance from a point to a segment `[a, b]`.
pub fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from a point to the infinite line through `origin` with unit
/// `direction`.
pub fn point_line_distance(p: Vec3, origin: Vec3, direction: Vec3) -> f64 {
    let d = p - origin;
    (d - direction * d.dot(direction)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat3_inverse_roundtrip() {
        let m = Mat3([[2.0, 1.0, 0.5], [0.0, 3.0, -1.0], [1.0, 0.0, 4.0]]);
        let p = m.mul_mat(m.inverse());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn axis_angle_roundtrip() {
        let v = vec3(0.3, -0.2, 0.9);
        let r = Mat3::from_axis_angle(v);
        let back = r.to_axis_angle();
        assert!((back - v).norm() < 1e-10);
        assert!(r.orthonormality_deviation() < 1e-12);
    }

    #[test]
    fn rotation_about_pivot_fixes_pivot() {
        let r = Mat3::from_axis_angle(vec3(0.0, 1.2, 0.0));
        let pivot = vec3(0.5, -0.25, 1.0);
        let t = Mat4::rotation_about(r, pivot);
        assert!((t.transform_point(pivot) - pivot).norm() < 1e-12);
    }

    #[test]
    fn segment_distance_cases() {
        let a = vec3(0.0, 0.0, 0.0);
        let b = vec3(1.0, 0.0, 0.0);
        assert!((point_segment_distance(vec3(0.5, 1.0, 0.0), a, b) - 1.0).abs() < 1e-12);
        assert!((point_segment_distance(vec3(2.0, 0.0, 0.0), a, b) - 1.0).abs() < 1e-12);
        assert!(point_segment_distance(vec3(0.25, 0.0, 0.0), a, b) < 1e-12);
        // degenerate segment
        assert!((point_segment_distance(vec3(0.0, 2.0, 0.0), a, a) - 2.0).abs() < 1e-12);
    }
}
