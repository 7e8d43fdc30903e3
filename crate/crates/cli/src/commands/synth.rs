use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use weft_core::io::generic;
use weft_core::sim;

pub fn execute(
    output: &Path,
    frames: usize,
    seed: u64,
    depth_noise_sigma: f64,
    force: bool,
) -> Result<ExitCode> {
    if output.exists() && !force {
        bail!(
            "output directory {} exists; pass --force to overwrite",
            output.display()
        );
    }
    let scene = sim::default_scene();
    let spec = sim::default_trajectory(frames);
    let intrinsics = sim::default_intrinsics();

    log::info!("rendering {frames} frames at {}x{}", intrinsics.width, intrinsics.height);
    let mut dataset = sim::generate_sequence(&scene, &spec, &intrinsics, 30.0);
    if depth_noise_sigma > 0.0 {
        dataset = dataset
            .iter()
            .enumerate()
            .map(|(i, f)| sim::add_depth_noise(f, depth_noise_sigma, seed ^ (i as u64) << 17))
            .collect();
    }
    generic::write_sequence(output, &dataset, 30.0)
        .with_context(|| format!("writing {}", output.display()))?;
    // scene description for evaluation-time references
    std::fs::write(
        output.join("scene.toml"),
        toml::to_string_pretty(&scene).expect("scene serializes"),
    )?;
    log::info!("wrote {} frames to {}", dataset.len(), output.display());
    Ok(ExitCode::SUCCESS)
}
