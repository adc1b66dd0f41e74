//! Sampling and neighborhood structure for the U-shaped mesh encoder.
//!
//! Built once per sample: level point sets from farthest-point sampling,
//! k-nearest-neighbor tables (self included), pooling neighborhoods for the
//! down transitions and inverse-distance 3-NN interpolation for the up
//! transitions. The FPS start point is drawn from the run seed by rank in a
//! coordinate ordering, and distance ties compare coordinates before
//! indices, so the structure is equivariant under vertex permutation (up to
//! exactly duplicated points).

use crate::autodiff::Tensor;
use crate::math::Vec3;
use crate::{Error, Result};

use super::NetworkConfig;

/// Total order on points: lexicographic by (x, y, z).
fn lex_less(a: Vec3, b: Vec3) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

/// One resolution level: positions plus the attention neighborhoods.
pub struct LevelGraph {
    pub positions: Vec<Vec3>,
    pub k: usize,
    /// Flattened kNN indices, `n * k`, self included.
    pub neighbor_idx: Vec<usize>,
    /// `i` repeated `k` times, aligned with `neighbor_idx`.
    pub center_idx: Vec<usize>,
    /// Constant `(n*k) x 3` tensor of relative positions `p_j - p_i`.
    pub rel_pos: Tensor,
}

/// Structure of one down transition (fine -> coarse).
pub struct DownLink {
    /// Indices of the kept (coarse) points in the fine level.
    pub kept: Vec<usize>,
    /// For each coarse point, its `k` nearest fine points, flattened.
    pub pool_idx: Vec<usize>,
}

/// Structure of one up transition (coarse -> fine).
pub struct UpLink {
    /// For each fine point, the three nearest coarse points.
    pub idx: Vec<[usize; 3]>,
    /// Inverse-squared-distance weights, normalized.
    pub weights: Vec<[f64; 3]>,
}

pub struct MeshGraph {
    pub levels: Vec<LevelGraph>,
    pub downs: Vec<DownLink>,
    pub ups: Vec<UpLink>,
}

/// k nearest points to `query` among `points` (including a point equal to
/// the query, e.g. itself), ties broken by coordinates then index.
fn knn_indices(query: Vec3, points: &[Vec3], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (points[a] - query).dot(points[a] - query);
        let db = (points[b] - query).dot(points[b] - query);
        da.partial_cmp(&db)
            .unwrap()
            .then_with(|| {
                if lex_less(points[a], points[b]) {
                    std::cmp::Ordering::Less
                } else if lex_less(points[b], points[a]) {
                    std::cmp::Ordering::Greater
                } else {
                    a.cmp(&b)
                }
            })
    });
    order.truncate(k);
    order
}

/// Coordinate ordering with an index fallback for bit-identical points.
fn point_index_less(points: &[Vec3], a: usize, b: usize) -> bool {
    lex_less(points[a], points[b]) || (!lex_less(points[b], points[a]) && a < b)
}

/// Farthest-point sampling of `count` points. The start index is the point
/// of rank `seed % n` in the coordinate ordering; each step takes the point
/// with the largest distance to the selected set (ties by coordinates, then
/// index).
fn farthest_point_sample(points: &[Vec3], count: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    debug_assert!(count <= n);
    let mut lex_order: Vec<usize> = (0..n).collect();
    lex_order.sort_by(|&a, &b| {
        if point_index_less(points, a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let start = lex_order[(seed % n as u64) as usize];

    let mut selected = Vec::with_capacity(count);
    let mut is_selected = vec![false; n];
    let mut min_dist_sq = vec![f64::INFINITY; n];
    let mut current = start;
    selected.push(current);
    is_selected[current] = true;
    for _ in 1..count {
        let p = points[current];
        for (i, &q) in points.iter().enumerate() {
            let d = (q - p).dot(q - p);
            if d < min_dist_sq[i] {
                min_dist_sq[i] = d;
            }
        }
        let mut best: Option<usize> = None;
        for i in 0..n {
            if is_selected[i] {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    min_dist_sq[i] > min_dist_sq[b]
                        || (min_dist_sq[i] == min_dist_sq[b] && point_index_less(points, i, b))
                }
            };
            if better {
                best = Some(i);
            }
        }
        current = best.expect("count <= point count");
        selected.push(current);
        is_selected[current] = true;
    }
    selected
}

pub fn build_level_graph(positions: Vec<Vec3>, k: usize) -> Result<LevelGraph> {
    let n = positions.len();
    if n < k {
        return Err(Error::invalid(
            "mesh graph",
            format!("level has {n} points, fewer than k = {k}"),
        ));
    }
    let mut neighbor_idx = Vec::with_capacity(n * k);
    let mut center_idx = Vec::with_capacity(n * k);
    let mut rel = Vec::with_capacity(n * k * 3);
    for i in 0..n {
        let nbrs = knn_indices(positions[i], &positions, k);
        for &j in &nbrs {
            neighbor_idx.push(j);
            center_idx.push(i);
            let d = positions[j] - positions[i];
            rel.extend_from_slice(&[d.x, d.y, d.z]);
        }
    }
    let rel_pos = Tensor::constant(n * k, 3, rel)?;
    Ok(LevelGraph {
        positions,
        k,
        neighbor_idx,
        center_idx,
        rel_pos,
    })
}

pub fn build_mesh_graph(vertices: &[Vec3], config: &NetworkConfig) -> Result<MeshGraph> {
    let k = config.knn;
    if vertices.len() < k {
        return Err(Error::invalid(
            "mesh graph",
            format!("mesh has {} vertices, fewer than k = {k}", vertices.len()),
        ));
    }
    let mut levels = vec![build_level_graph(vertices.to_vec(), k)?];
    let mut downs = Vec::with_capacity(config.depth);
    let mut ups = Vec::with_capacity(config.depth);

    for (stage, &ratio) in config.ratios.iter().enumerate() {
        let fine = &levels[stage];
        let n_fine = fine.positions.len();
        let n_coarse = ((n_fine as f64 * ratio).ceil() as usize).clamp(k.min(n_fine), n_fine);
        let kept = farthest_point_sample(&fine.positions, n_coarse, config.seed);
        let coarse_positions: Vec<Vec3> = kept.iter().map(|&i| fine.positions[i]).collect();

        // Pooling neighborhoods: k nearest fine points per coarse point.
        let mut pool_idx = Vec::with_capacity(n_coarse * k);
        for &c in &coarse_positions {
            pool_idx.extend(knn_indices(c, &fine.positions, k));
        }
        downs.push(DownLink { kept, pool_idx });

        // Interpolation: 3 nearest coarse points per fine point,
        // inverse-squared-distance weights.
        let mut idx = Vec::with_capacity(n_fine);
        let mut weights = Vec::with_capacity(n_fine);
        for &f in &fine.positions {
            let nbrs = knn_indices(f, &coarse_positions, 3);
            let mut w = [0.0; 3];
            let mut sum = 0.0;
            for (t, &j) in nbrs.iter().enumerate() {
                let d = (coarse_positions[j] - f).norm().max(1e-10);
                w[t] = 1.0 / (d * d);
                sum += w[t];
            }
            for wt in &mut w {
                *wt /= sum;
            }
            idx.push([nbrs[0], nbrs[1], nbrs[2]]);
            weights.push(w);
        }
        ups.push(UpLink { idx, weights });

        levels.push(build_level_graph(coarse_positions, k)?);
    }

    Ok(MeshGraph {
        levels,
        downs,
        ups,
    })
}
