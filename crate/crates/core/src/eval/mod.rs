//! Evaluation: trajectory error with rigid alignment, isosurface extraction,
//! mesh comparison metrics, depth-map L1, and report assembly.

mod ate;
mod depth;
mod mesh;
mod metrics;
pub mod plot;
mod report;

pub use ate::{align_umeyama, ate, umeyama_points, AteError, AteResult, RigidAlignment, Trajectory};
pub use depth::{
    depth_l1_images, raycast_sdf_depth, render_map_depth, sample_eval_poses, DepthImage,
};
pub use mesh::{cull_to_frustums, marching_cubes_fn, write_ply, MeshError, TriMesh};
pub use metrics::{
    closest_point_on_triangle, mesh_metrics, sample_surface, MeshMetrics, MetricsError,
    TriangleIndex,
};
pub use report::{write_timing_csv, MetricsReport, TimingSummary};

use nalgebra::Vector3;

use crate::field::SceneBounds;
use crate::map::SceneMap;

/// Extract the zero isosurface of a map's decoded SDF on a regular grid.
pub fn marching_cubes(
    map: &SceneMap,
    cell: f64,
    memory_budget_mb: usize,
) -> Result<TriMesh, MeshError> {
    let bounds = *map.bounds();
    marching_cubes_fn(
        &|p: Vector3<f64>| map.sdf_at(p),
        &bounds,
        cell,
        memory_budget_mb,
    )
}

/// Extract a ground-truth mesh from an analytic scene over the given bounds.
pub fn marching_cubes_scene(
    scene: &crate::sim::AnalyticScene,
    bounds: &SceneBounds,
    cell: f64,
    memory_budget_mb: usize,
) -> Result<TriMesh, MeshError> {
    marching_cubes_fn(&|p: Vector3<f64>| scene.sdf(p), bounds, cell, memory_budget_mb)
}
