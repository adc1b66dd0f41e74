//! Triangle meshes: OBJ load/save and bounding-box normalization.

use std::path::Path;

use crate::math::{vec3, Vec3};
use crate::{Error, Result};

/// Triangle mesh in normalized (unitless) space. Faces index into `vertices`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<TriMesh> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(
                    "mesh",
                    format!("vertex {i} has a non-finite coordinate"),
                ));
            }
        }
        for (i, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx >= vertices.len() {
                    return Err(Error::invalid(
                        "mesh",
                        format!(
                            "face {i} references vertex {idx} but only {} vertices exist",
                            vertices.len()
                        ),
                    ));
                }
            }
        }
        Ok(TriMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_vertices(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Axis-aligned bounding box as (min, max). Errors on an empty mesh.
    pub fn bounding_box(&self) -> Result<(Vec3, Vec3)> {
        let mut it = self.vertices.iter();
        let first = *it.next().ok_or(Error::EmptyMesh)?;
        let mut lo = first;
        let mut hi = first;
        for &v in it {
            lo = lo.min_comp(v);
            hi = hi.max_comp(v);
        }
        Ok((lo, hi))
    }

    pub fn bounding_box_center(&self) -> Result<Vec3> {
        let (lo, hi) = self.bounding_box()?;
        Ok((lo + hi) * 0.5)
    }

    /// Replace the vertex positions, keeping connectivity.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<TriMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::invalid(
                "mesh",
                format!(
                    "replacement vertex count {} does not match {}",
                    vertices.len(),
                    self.vertices.len()
                ),
            ));
        }
        TriMesh::new(vertices, self.faces.clone())
    }
}

/// Similarity transform `p -> p * scale + offset` produced by normalization,
/// kept so rigs can be mapped into the same space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub scale: f64,
    pub offset: Vec3,
}

impl NormalizationTransform {
    pub const IDENTITY: NormalizationTransform = NormalizationTransform {
        scale: 1.0,
        offset: Vec3::ZERO,
    };

    pub fn apply(&self, p: Vec3) -> Vec3 {
        p * self.scale + self.offset
    }

    pub fn apply_inverse(&self, p: Vec3) -> Vec3 {
        (p - self.offset) / self.scale
    }
}

/// Center the mesh on its bounding-box center and scale uniformly so the
/// longest axis spans exactly 1.0 (coordinates end up in [-0.5, 0.5]).
pub fn normalize_mesh(mesh: &TriMesh) -> Result<(TriMesh, NormalizationTransform)> {
    let (lo, hi) = mesh.bounding_box()?;
    let extent = hi - lo;
    let longest = extent.x.max(extent.y).max(extent.z);
    if longest <= 0.0 {
        return Err(Error::DegenerateMesh);
    }
    let center = (lo + hi) * 0.5;
    let scale = 1.0 / longest;
    let transform = NormalizationTransform {
        scale,
        offset: -center * scale,
    };
    let vertices = mesh.vertices.iter().map(|&v| transform.apply(v)).collect();
    Ok((mesh.with_vertices(vertices)?, transform))
}

/// Parse OBJ text. Only `v` and `f` records are used; polygons with more than
/// three sides are fan-triangulated; `f` entries with slashes keep only the
/// vertex index. Indices are 1-based per the OBJ convention.
pub fn parse_obj(text: &str, path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() < 3 {
                    return Err(Error::parse(path, line_no, "vertex needs 3 coordinates"));
                }
                let mut p = [0.0; 3];
                for (slot, t) in p.iter_mut().zip(&coords) {
                    *slot = t.parse().map_err(|_| {
                        Error::parse(path, line_no, format!("bad coordinate `{t}`"))
                    })?;
                }
                vertices.push(Vec3::from_array(p));
            }
            Some("f") => {
                let mut idxs: Vec<usize> = Vec::new();
                for t in tokens {
                    let vertex_field = t.split('/').next().unwrap_or("");
                    let one_based: i64 = vertex_field.parse().map_err(|_| {
                        Error::parse(path, line_no, format!("bad face index `{t}`"))
                    })?;
                    if one_based < 1 {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("face index {one_based} must be >= 1"),
                        ));
                    }
                    let zero_based = (one_based - 1) as usize;
                    if zero_based >= vertices.len() {
                        return Err(Error::FaceIndexOutOfRange {
                            line: line_no,
                            index: one_based as usize,
                            vertex_count: vertices.len(),
                        });
                    }
                    idxs.push(zero_based);
                }
                if idxs.len() < 3 {
                    return Err(Error::parse(path, line_no, "face needs at least 3 indices"));
                }
                for i in 1..idxs.len() - 1 {
                    faces.push([idxs[0], idxs[i], idxs[i + 1]]);
                }
            }
            _ => {} // normals, UVs, groups, materials: ignored
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn load_obj(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

pub fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, write_obj(mesh)).map_err(|e| Error::io(path, e))
}

/// Axis-aligned unit-cube helper used across tests and fixtures: corners at
/// `lo` and `hi`, 12 triangles with outward winding.
pub fn box_mesh(lo: Vec3, hi: Vec3) -> TriMesh {
    let v = vec![
        vec3(lo.x, lo.y, lo.z),
        vec3(hi.x, lo.y, lo.z),
        vec3(hi.x, hi.y, lo.z),
        vec3(lo.x, hi.y, lo.z),
        vec3(lo.x, lo.y, hi.z),
        vec3(hi.x, lo.y, hi.z),
        vec3(hi.x, hi.y, hi.z),
        vec3(lo.x, hi.y, hi.z),
    ];
    let f = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [1, 2, 6],
        [1, 6, 5],
        [0, 4, 7],
        [0, 7, 3],
    ];
    TriMesh::new(v, f).expect("box mesh is valid")
}
