use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use weft_core::checkpoint;
use weft_core::eval::{cull_to_frustums, marching_cubes, write_ply};
use weft_core::io::posefile;

use crate::rundir::{load_dataset, RunDir};

pub fn execute(
    run: &Path,
    cell: Option<f64>,
    output: Option<PathBuf>,
    cull: bool,
) -> Result<ExitCode> {
    let dir = RunDir::new(run.to_path_buf());
    if !dir.checkpoint().exists() {
        bail!("{} has no checkpoint.bin", run.display());
    }
    let cfg = dir.load_config()?;
    let map = checkpoint::load(&dir.checkpoint())
        .with_context(|| format!("loading {}", dir.checkpoint().display()))?;
    let cell = cell.unwrap_or(cfg.eval.mesh_cell);

    let mut mesh = marching_cubes(&map, cell, cfg.eval.memory_budget_mb)?;
    log::info!(
        "extracted {} vertices / {} triangles at {:.0} mm",
        mesh.vertices.len(),
        mesh.triangles.len(),
        cell * 1e3
    );
    if cull {
        let trajectory = posefile::read_pose_file(&dir.trajectory())?;
        let poses: Vec<_> = trajectory.iter().map(|(_, p)| *p).collect();
        let frames = load_dataset(&cfg, 0.0)?;
        mesh = cull_to_frustums(&mesh, &poses, &frames[0].intrinsics, cfg.eval.max_range);
        log::info!(
            "after frustum culling: {} vertices / {} triangles",
            mesh.vertices.len(),
            mesh.triangles.len()
        );
    }
    let out = output.unwrap_or_else(|| dir.root.join("mesh.ply"));
    write_ply(&mesh, &out)?;
    log::info!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}
