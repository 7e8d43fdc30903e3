use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};

use weft_core::checkpoint;
use weft_core::config::{DatasetFormat, RunConfig};
use weft_core::eval::{ate, write_timing_csv, MetricsReport};
use weft_core::io::posefile;
use weft_core::slam::run_slam;

use crate::rundir::{gt_trajectory, load_dataset, RunDir};

pub struct RunArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    pub dataset: Option<PathBuf>,
    pub depth_noise_sigma: f64,
}

pub fn execute(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(path) = args.dataset {
        cfg.dataset.path = path;
    }
    if let Some(format) = &args.format {
        cfg.dataset.format = match format.as_str() {
            "tum" => DatasetFormat::Tum,
            _ => DatasetFormat::Generic,
        };
    }
    let output = args
        .output
        .or(cfg.output.clone())
        .context("no output directory: pass --output or set `output` in the config")?;
    cfg.output = Some(output.clone());

    let dir = RunDir::new(output);
    std::fs::create_dir_all(&dir.root)
        .with_context(|| format!("creating {}", dir.root.display()))?;
    // resolved configuration travels with the run
    std::fs::write(dir.config(), cfg.to_toml())?;

    let frames = load_dataset(&cfg, args.depth_noise_sigma)?;
    log::info!("loaded {} frames from {}", frames.len(), cfg.dataset.path.display());

    let slam_cfg = cfg.slam_config()?;
    let map_cfg = cfg.map_config();
    let out = run_slam(&frames, &map_cfg, &slam_cfg)?;

    posefile::write_pose_file(
        &dir.trajectory(),
        out.trajectory.iter().map(|(t, p)| (*t, *p)),
    )?;
    write_timing_csv(&dir.timing(), &out.timings)?;
    checkpoint::save(&out.map, &dir.checkpoint())?;
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.losses())?);
        writeln!(f, "frame_id,iteration,total_loss")?;
        for (frame, losses) in &out.mapping_losses {
            for (i, l) in losses.iter().enumerate() {
                writeln!(f, "{frame},{i},{l:.9}")?;
            }
        }
    }

    // metrics available at run time: parameter counts and, when the dataset
    // carries ground-truth poses, the trajectory error
    let counts = out.map.param_counts();
    let mut report = MetricsReport::new(
        counts,
        out.map.beta.beta(),
        cfg.map.geometry.name(),
        cfg.map.appearance.name(),
    );
    let gt = gt_trajectory(&frames);
    if gt.len() >= 3 {
        report.ate = Some(ate(&out.trajectory, &gt, cfg.dataset.max_dt)?);
    }
    std::fs::write(dir.report_json(), report.to_json())?;
    let fpt = weft_core::eval::TimingSummary::from_csv(&dir.timing()).map(|t| t.fpt_mean_ms);
    std::fs::write(dir.report_text(), report.to_text(fpt))?;

    if let Some(ate) = &report.ate {
        log::info!("ate mean {:.3} cm, rmse {:.3} cm", ate.mean_cm, ate.rmse_cm);
    }
    log::info!("run artifacts in {}", dir.root.display());
    Ok(ExitCode::SUCCESS)
}
