//! Batch entry point: dataset generation, SLAM runs, evaluation, mesh
//! export, and the representation ablation harness.

mod commands;
mod rundir;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "weft", version, about = "Dense RGB-D SLAM on low-rank factorized scene fields")]
struct Cli {
    /// Worker threads (0 = all logical cores; WEFT_THREADS overrides the default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run tracking and mapping over a dataset.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the dataset format.
        #[arg(long, value_parser = ["tum", "generic"])]
        format: Option<String>,
        /// Override the dataset path.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Add Gaussian depth noise (meters std) to loaded frames.
        #[arg(long, default_value_t = 0.0)]
        depth_noise_sigma: f64,
    },
    /// Compute metrics for a finished run directory.
    Eval {
        /// Run directory produced by `weft run`.
        #[arg(long)]
        run: PathBuf,
        /// Skip mesh extraction and mesh metrics (faster).
        #[arg(long)]
        no_mesh: bool,
    },
    /// Run the 2x2 {cp, sixaxis} representation ablation.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Add tri-plane/tri-plane rows to the table.
        #[arg(long)]
        include_triplane: bool,
    },
    /// Generate the synthetic desk-scale scene in the generic format.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 50)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Gaussian depth noise (meters std) baked into the depth rasters.
        #[arg(long, default_value_t = 0.0)]
        depth_noise_sigma: f64,
        /// Overwrite an existing output directory.
        #[arg(long)]
        force: bool,
    },
    /// Extract the map surface as an ASCII PLY mesh.
    ExportMesh {
        #[arg(long)]
        run: PathBuf,
        /// Marching-cubes cell size in meters (default from the run config).
        #[arg(long)]
        cell: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Remove geometry outside every camera frustum of the trajectory.
        #[arg(long)]
        cull: bool,
    },
}

fn init_threads(flag: usize) {
    let n = if flag > 0 {
        flag
    } else if let Ok(v) = std::env::var("WEFT_THREADS") {
        v.parse().unwrap_or(0)
    } else {
        0
    };
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    init_threads(cli.threads);

    let result = match cli.command {
        Command::Run {
            config,
            seed,
            output,
            format,
            dataset,
            depth_noise_sigma,
        } => commands::run::execute(commands::run::RunArgs {
            config,
            seed,
            output,
            format,
            dataset,
            depth_noise_sigma,
        }),
        Command::Eval { run, no_mesh } => commands::eval::execute(&run, no_mesh),
        Command::Ablate {
            config,
            output,
            seed,
            include_triplane,
        } => commands::ablate::execute(&config, output, seed, include_triplane),
        Command::Synth {
            output,
            frames,
            seed,
            depth_noise_sigma,
            force,
        } => commands::synth::execute(&output, frames, seed, depth_noise_sigma, force),
        Command::ExportMesh {
            run,
            cell,
            output,
            cull,
        } => commands::export_mesh::execute(&run, cell, output, cull),
    };

    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            // a diverged optimization is distinguishable from usage errors
            let diverged = err
                .chain()
                .any(|c| c.to_string().contains("non-finite loss"));
            if diverged {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
