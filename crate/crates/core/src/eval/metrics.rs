//! Mesh comparison: reconstruction accuracy, completion, and completion
//! ratio. Sampled points on one mesh are measured against the other mesh's
//! exact surface (point-to-triangle distance through a spatial index), so
//! identical meshes score exactly zero and argument swaps are exact.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::mesh::TriMesh;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot compare an empty mesh")]
    EmptyMesh,
}

/// Area-weighted uniform surface sampling.
pub fn sample_surface(mesh: &TriMesh, count: usize, seed: u64) -> Vec<Vector3<f64>> {
    assert!(!mesh.is_empty());
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = rng.random_range(0.0..total);
            let t = cumulative
                .partition_point(|&c| c < r)
                .min(mesh.triangles.len() - 1);
            let [a, b, c] = mesh.triangles[t];
            let (a, b, c) = (
                mesh.vertices[a as usize],
                mesh.vertices[b as usize],
                mesh.vertices[c as usize],
            );
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let su = r1.sqrt();
            let w0 = 1.0 - su;
            let w1 = r2 * su;
            a * w0 + b * w1 + c * (1.0 - w0 - w1)
        })
        .collect()
}

/// Exact closest point on a triangle (barycentric region walk).
pub fn closest_point_on_triangle(
    p: Vector3<f64>,
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Nearest-surface queries against a triangle mesh: kd-tree over centroids,
/// exact distance over candidates within the pruning radius.
pub struct TriangleIndex {
    tris: Vec<[Vector3<f64>; 3]>,
    centroids: Vec<Vector3<f64>>,
    order: Vec<u32>,
    max_radius: f64,
}

impl TriangleIndex {
    pub fn build(mesh: &TriMesh) -> Self {
        let tris: Vec<[Vector3<f64>; 3]> = mesh
            .triangles
            .iter()
            .map(|[a, b, c]| {
                [
                    mesh.vertices[*a as usize],
                    mesh.vertices[*b as usize],
                    mesh.vertices[*c as usize],
                ]
            })
            .collect();
        let centroids: Vec<Vector3<f64>> =
            tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let max_radius = tris
            .iter()
            .zip(&centroids)
            .map(|(t, c)| {
                (t[0] - c)
                    .norm()
                    .max((t[1] - c).norm())
                    .max((t[2] - c).norm())
            })
            .fold(0.0f64, f64::max);
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        build_kd(&centroids, &mut order, 0);
        Self {
            tris,
            centroids,
            order,
            max_radius,
        }
    }

    /// Exact distance from a point to the mesh surface.
    pub fn distance(&self, p: Vector3<f64>) -> f64 {
        // nearest centroid gives the search radius
        let mut best_c = f64::INFINITY;
        nearest_kd(&self.centroids, &self.order, 0, p, &mut best_c);
        let radius = best_c.sqrt() + 2.0 * self.max_radius;
        let mut best = f64::INFINITY;
        self.exact_within(&self.order, 0, p, radius, &mut best);
        best.sqrt()
    }

    fn exact_within(
        &self,
        slice: &[u32],
        depth: usize,
        p: Vector3<f64>,
        radius: f64,
        best: &mut f64,
    ) {
        if slice.is_empty() {
            return;
        }
        let axis = depth % 3;
        let mid = slice.len() / 2;
        let idx = slice[mid] as usize;
        let centroid = self.centroids[idx];
        if (centroid - p).norm() <= radius {
            let t = &self.tris[idx];
            let q = closest_point_on_triangle(p, t[0], t[1], t[2]);
            let d2 = (q - p).norm_squared();
            if d2 < *best {
                *best = d2;
            }
        }
        let delta = p[axis] - centroid[axis];
        let (near, far) = if delta < 0.0 {
            (&slice[..mid], &slice[mid + 1..])
        } else {
            (&slice[mid + 1..], &slice[..mid])
        };
        self.exact_within(near, depth + 1, p, radius, best);
        if delta.abs() <= radius {
            self.exact_within(far, depth + 1, p, radius, best);
        }
    }
}

fn build_kd(points: &[Vector3<f64>], slice: &mut [u32], depth: usize) {
    if slice.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .partial_cmp(&points[b as usize][axis])
            .unwrap()
    });
    let (lo, rest) = slice.split_at_mut(mid);
    build_kd(points, lo, depth + 1);
    build_kd(points, &mut rest[1..], depth + 1);
}

fn nearest_kd(
    points: &[Vector3<f64>],
    slice: &[u32],
    depth: usize,
    query: Vector3<f64>,
    best: &mut f64,
) {
    if slice.is_empty() {
        return;
    }
    let axis = depth % 3;
    let mid = slice.len() / 2;
    let node = points[slice[mid] as usize];
    let d2 = (node - query).norm_squared();
    if d2 < *best {
        *best = d2;
    }
    let delta = query[axis] - node[axis];
    let (near, far) = if delta < 0.0 {
        (&slice[..mid], &slice[mid + 1..])
    } else {
        (&slice[mid + 1..], &slice[..mid])
    };
    nearest_kd(points, near, depth + 1, query, best);
    if delta * delta < *best {
        nearest_kd(points, far, depth + 1, query, best);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MeshMetrics {
    /// Mean distance from reconstruction samples to the ground-truth surface, cm.
    pub accuracy_cm: f64,
    /// Mean distance from ground-truth samples to the reconstruction, cm.
    pub completion_cm: f64,
    /// Fraction of ground-truth samples within the threshold of the
    /// reconstruction, percent.
    pub completion_ratio_pct: f64,
}

/// Compare two meshes: points sampled on each side are measured against the
/// other side's exact surface.
pub fn mesh_metrics(
    recon: &TriMesh,
    gt: &TriMesh,
    samples: usize,
    threshold_m: f64,
    seed: u64,
) -> Result<MeshMetrics, MetricsError> {
    if recon.is_empty() || gt.is_empty() {
        return Err(MetricsError::EmptyMesh);
    }
    let recon_pts = sample_surface(recon, samples, seed);
    let gt_pts = sample_surface(gt, samples, seed);
    let recon_index = TriangleIndex::build(recon);
    let gt_index = TriangleIndex::build(gt);

    let accuracy: f64 = recon_pts
        .par_iter()
        .map(|p| gt_index.distance(*p))
        .sum::<f64>()
        / samples as f64;
    let (completion, within) = gt_pts
        .par_iter()
        .map(|p| {
            let d = recon_index.distance(*p);
            (d, (d <= threshold_m) as usize)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MeshMetrics {
        accuracy_cm: accuracy * 100.0,
        completion_cm: completion / samples as f64 * 100.0,
        completion_ratio_pct: within as f64 / samples as f64 * 100.0,
    })
}
