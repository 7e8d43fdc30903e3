//! Triangle meshes: zero-isosurface extraction from SDF grids, frustum
//! culling, and ASCII PLY export.
//!
//! Extraction marches a regular grid of cube cells. Each cell's surface is
//! assembled from its faces: the face isolines (marching-squares style, with
//! the face-center average deciding ambiguous diagonal cases) give segments
//! between edge crossings, which close into loops inside the cell and are
//! fan-triangulated. Because both cells sharing a face derive the same
//! segments from the same values, the result is watertight on closed
//! surfaces away from the grid boundary. Crossing positions interpolate
//! linearly along grid edges and are shared via a global edge key.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::SceneBounds;
use crate::render::Intrinsics;
use crate::slam::Pose;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("sdf grid of {need} MB exceeds the {budget} MB budget")]
    GridTooLarge { need: usize, budget: usize },
    #[error("cell size must be positive")]
    BadCell,
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Indexed triangle mesh in meters.
#[derive(Debug, Clone, Default)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Signed volume via the divergence theorem; positive when triangle
    /// normals point outward.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|[a, b, c]| {
                let (a, b, c) = (
                    self.vertices[*a as usize],
                    self.vertices[*b as usize],
                    self.vertices[*c as usize],
                );
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

// cube corners 0..7: bit 0 -> +x, bit 1 -> +y, bit 2 -> +z
const CORNER_OFFSET: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

// cube edges as corner pairs
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

// faces as 4 cyclic corners
const FACES: [[usize; 4]; 6] = [
    [0, 1, 2, 3], // z = 0
    [4, 5, 6, 7], // z = 1
    [0, 1, 5, 4], // y = 0
    [1, 2, 6, 5], // x = 1
    [2, 3, 7, 6], // y = 1
    [3, 0, 4, 7], // x = 0
];

fn edge_of(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|&(x, y)| (x == a && y == b) || (x == b && y == a))
        .expect("face edges are cube edges")
}

/// Undirected crossing-point pairings on one face. `v` are the 4 cyclic
/// corner values; returns pairs of face-edge slots (0..4).
fn face_segments(v: [f64; 4]) -> Vec<(usize, usize)> {
    let inside = |x: f64| x < 0.0;
    let mask = (inside(v[0]) as usize)
        | (inside(v[1]) as usize) << 1
        | (inside(v[2]) as usize) << 2
        | (inside(v[3]) as usize) << 3;
    match mask {
        0 | 15 => vec![],
        1 | 14 => vec![(3, 0)],
        2 | 13 => vec![(0, 1)],
        4 | 11 => vec![(1, 2)],
        8 | 7 => vec![(2, 3)],
        3 | 12 => vec![(3, 1)],
        6 | 9 => vec![(0, 2)],
        5 => {
            // corners 0 and 2 inside: the face-center average decides whether
            // the inside regions join
            if v.iter().sum::<f64>() < 0.0 {
                vec![(0, 1), (2, 3)]
            } else {
                vec![(3, 0), (1, 2)]
            }
        }
        10 => {
            if v.iter().sum::<f64>() < 0.0 {
                vec![(3, 0), (1, 2)]
            } else {
                vec![(0, 1), (2, 3)]
            }
        }
        _ => unreachable!(),
    }
}

/// Extract the zero isosurface of a scalar function sampled on a regular grid
/// over `bounds` with spacing `cell`.
pub fn marching_cubes_fn(
    sdf: &(dyn Fn(Vector3<f64>) -> f64 + Sync),
    bounds: &SceneBounds,
    cell: f64,
    memory_budget_mb: usize,
) -> Result<TriMesh, MeshError> {
    if !(cell > 0.0) {
        return Err(MeshError::BadCell);
    }
    let e = bounds.extent();
    let nx = (e.x / cell).ceil() as usize + 1;
    let ny = (e.y / cell).ceil() as usize + 1;
    let nz = (e.z / cell).ceil() as usize + 1;
    let need = nx * ny * nz * std::mem::size_of::<f32>() / (1024 * 1024);
    if need > memory_budget_mb {
        return Err(MeshError::GridTooLarge {
            need,
            budget: memory_budget_mb,
        });
    }
    let step = Vector3::new(e.x / (nx - 1) as f64, e.y / (ny - 1) as f64, e.z / (nz - 1) as f64);
    let point = |ix: usize, iy: usize, iz: usize| {
        bounds.min
            + Vector3::new(
                step.x * ix as f64,
                step.y * iy as f64,
                step.z * iz as f64,
            )
    };

    // sample the grid, parallel over z-slices
    let values: Vec<f32> = (0..nz)
        .into_par_iter()
        .flat_map_iter(|iz| {
            let mut slice = Vec::with_capacity(nx * ny);
            for iy in 0..ny {
                for ix in 0..nx {
                    slice.push(sdf(point(ix, iy, iz)) as f32);
                }
            }
            slice
        })
        .collect();
    let at = |ix: usize, iy: usize, iz: usize| values[(iz * ny + iy) * nx + ix] as f64;

    let mut mesh = TriMesh::default();
    // global vertex per crossing grid edge: key (ix, iy, iz, axis)
    let mut edge_vertices: HashMap<(usize, usize, usize, u8), u32> = HashMap::new();

    let mut corner_vals = [0.0f64; 8];
    for iz in 0..nz - 1 {
        for iy in 0..ny - 1 {
            for ix in 0..nx - 1 {
                for (c, off) in CORNER_OFFSET.iter().enumerate() {
                    corner_vals[c] = at(ix + off[0], iy + off[1], iz + off[2]);
                }
                if corner_vals.iter().all(|v| *v < 0.0)
                    || corner_vals.iter().all(|v| *v >= 0.0)
                {
                    continue;
                }

                // face segments -> adjacency between crossing cube edges
                let mut adj: [[usize; 2]; 12] = [[usize::MAX; 2]; 12];
                let mut push = |e0: usize, e1: usize, adj: &mut [[usize; 2]; 12]| {
                    for slot in &mut adj[e0] {
                        if *slot == usize::MAX {
                            *slot = e1;
                            break;
                        }
                    }
                };
                for face in FACES {
                    let fv = [
                        corner_vals[face[0]],
                        corner_vals[face[1]],
                        corner_vals[face[2]],
                        corner_vals[face[3]],
                    ];
                    for (sa, sb) in face_segments(fv) {
                        let ea = edge_of(face[sa], face[(sa + 1) % 4]);
                        let eb = edge_of(face[sb], face[(sb + 1) % 4]);
                        push(ea, eb, &mut adj);
                        push(eb, ea, &mut adj);
                    }
                }

                // vertex for a crossing cube edge, deduplicated globally
                let mut vertex_for = |edge: usize,
                                      mesh: &mut TriMesh|
                 -> u32 {
                    let (ca, cb) = EDGES[edge];
                    let (oa, ob) = (CORNER_OFFSET[ca], CORNER_OFFSET[cb]);
                    let ga = (ix + oa[0], iy + oa[1], iz + oa[2]);
                    let gb = (ix + ob[0], iy + ob[1], iz + ob[2]);
                    // canonical key: the lower endpoint plus the axis
                    let (lo, axis) = if ga.0 != gb.0 {
                        (if ga.0 < gb.0 { ga } else { gb }, 0u8)
                    } else if ga.1 != gb.1 {
                        (if ga.1 < gb.1 { ga } else { gb }, 1)
                    } else {
                        (if ga.2 < gb.2 { ga } else { gb }, 2)
                    };
                    let key = (lo.0, lo.1, lo.2, axis);
                    if let Some(&v) = edge_vertices.get(&key) {
                        return v;
                    }
                    let va = at(ga.0, ga.1, ga.2);
                    let vb = at(gb.0, gb.1, gb.2);
                    let t = if (vb - va).abs() < 1e-30 {
                        0.5
                    } else {
                        (0.0 - va) / (vb - va)
                    };
                    let pa = point(ga.0, ga.1, ga.2);
                    let pb = point(gb.0, gb.1, gb.2);
                    let pos = pa + (pb - pa) * t.clamp(0.0, 1.0);
                    let idx = mesh.vertices.len() as u32;
                    mesh.vertices.push(pos);
                    edge_vertices.insert(key, idx);
                    idx
                };

                // cell-average gradient orients the fans
                let grad = {
                    let mut g = Vector3::zeros();
                    for (c, off) in CORNER_OFFSET.iter().enumerate() {
                        let v = corner_vals[c];
                        g.x += if off[0] == 1 { v } else { -v };
                        g.y += if off[1] == 1 { v } else { -v };
                        g.z += if off[2] == 1 { v } else { -v };
                    }
                    g
                };

                // walk loops
                let mut visited = [false; 12];
                for start in 0..12 {
                    if adj[start][0] == usize::MAX || visited[start] {
                        continue;
                    }
                    let mut cycle = vec![start];
                    visited[start] = true;
                    let mut prev = usize::MAX;
                    let mut cur = start;
                    loop {
                        let next = if adj[cur][0] != prev && adj[cur][0] != usize::MAX {
                            adj[cur][0]
                        } else {
                            adj[cur][1]
                        };
                        if next == usize::MAX || next == start {
                            break;
                        }
                        visited[next] = true;
                        cycle.push(next);
                        prev = cur;
                        cur = next;
                    }
                    if cycle.len() < 3 {
                        continue;
                    }
                    let verts: Vec<u32> =
                        cycle.iter().map(|&e| vertex_for(e, &mut mesh)).collect();
                    for k in 1..verts.len() - 1 {
                        let tri = [verts[0], verts[k], verts[k + 1]];
                        let (a, b, c) = (
                            mesh.vertices[tri[0] as usize],
                            mesh.vertices[tri[1] as usize],
                            mesh.vertices[tri[2] as usize],
                        );
                        let n = (b - a).cross(&(c - a));
                        if n.norm() * 0.5 <= 1e-12 {
                            continue; // degenerate
                        }
                        if n.dot(&grad) >= 0.0 {
                            mesh.triangles.push(tri);
                        } else {
                            mesh.triangles.push([tri[0], tri[2], tri[1]]);
                        }
                    }
                }
            }
        }
    }
    Ok(mesh)
}

/// Keep only vertices visible from at least one camera; triangles referencing
/// removed vertices are dropped and indices compacted.
pub fn cull_to_frustums(
    mesh: &TriMesh,
    poses: &[Pose],
    intrinsics: &Intrinsics,
    max_range: f64,
) -> TriMesh {
    let visible: Vec<bool> = mesh
        .vertices
        .par_iter()
        .map(|v| {
            poses.iter().any(|pose| {
                let p = pose.inverse().transform_point(*v);
                if p.z < 1e-3 || p.z > max_range {
                    return false;
                }
                let u = intrinsics.fx * p.x / p.z + intrinsics.cx;
                let vv = intrinsics.fy * p.y / p.z + intrinsics.cy;
                u >= 0.0
                    && u < intrinsics.width as f64
                    && vv >= 0.0
                    && vv < intrinsics.height as f64
            })
        })
        .collect();

    let mut remap = vec![u32::MAX; mesh.vertices.len()];
    let mut out = TriMesh::default();
    for (i, v) in mesh.vertices.iter().enumerate() {
        if visible[i] {
            remap[i] = out.vertices.len() as u32;
            out.vertices.push(*v);
        }
    }
    for tri in &mesh.triangles {
        if tri.iter().all(|&v| remap[v as usize] != u32::MAX) {
            out.triangles.push([
                remap[tri[0] as usize],
                remap[tri[1] as usize],
                remap[tri[2] as usize],
            ]);
        }
    }
    out
}

/// ASCII PLY export.
pub fn write_ply(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "ply")?;
    writeln!(f, "format ascii 1.0")?;
    writeln!(f, "element vertex {}", mesh.vertices.len())?;
    writeln!(f, "property float x")?;
    writeln!(f, "property float y")?;
    writeln!(f, "property float z")?;
    writeln!(f, "element face {}", mesh.triangles.len())?;
    writeln!(f, "property list uchar int vertex_indices")?;
    writeln!(f, "end_header")?;
    for v in &mesh.vertices {
        writeln!(f, "{} {} {}", v.x as f32, v.y as f32, v.z as f32)?;
    }
    for t in &mesh.triangles {
        writeln!(f, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}
