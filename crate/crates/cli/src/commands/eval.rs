use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use weft_core::checkpoint;
use weft_core::eval::{
    self, ate, cull_to_frustums, mesh_metrics, plot, render_map_depth, sample_eval_poses,
    MetricsReport, TimingSummary,
};
use weft_core::io::posefile;
use weft_core::slam::Pose;

use crate::rundir::{gt_trajectory, load_dataset, load_scene_file, RunDir};

pub fn execute(run: &Path, no_mesh: bool) -> Result<ExitCode> {
    let dir = RunDir::new(run.to_path_buf());
    if !dir.trajectory().exists() || !dir.checkpoint().exists() {
        bail!(
            "{} is not a finished run directory (needs trajectory.txt and checkpoint.bin)",
            run.display()
        );
    }
    let cfg = dir.load_config()?;
    let trajectory = posefile::read_pose_file(&dir.trajectory())?;
    let map = checkpoint::load(&dir.checkpoint())
        .with_context(|| format!("loading {}", dir.checkpoint().display()))?;

    let frames = load_dataset(&cfg, 0.0)?;
    let gt = gt_trajectory(&frames);

    let counts = map.param_counts();
    let mut report = MetricsReport::new(
        counts,
        map.beta.beta(),
        cfg.map.geometry.name(),
        cfg.map.appearance.name(),
    );

    if gt.len() >= 3 {
        report.ate = Some(ate(&trajectory, &gt, cfg.dataset.max_dt)?);
    }

    let scene = load_scene_file(&cfg.dataset.path);
    if let Some(scene) = &scene {
        // depth L1 against the analytic reference over sampled poses
        let reference_poses: Vec<Pose> = if gt.is_empty() {
            trajectory.iter().map(|(_, p)| *p).collect()
        } else {
            gt.iter().map(|(_, p)| *p).collect()
        };
        let eval_poses = sample_eval_poses(
            scene,
            &reference_poses,
            cfg.eval.depth_poses,
            0.3,
            cfg.seed ^ 0xD437,
        );
        let k = frames[0]
            .intrinsics
            .scaled(1.0 / cfg.eval.depth_render_scale as f64);
        let step = (cfg.loss.truncation * 0.5).min(cfg.map.fine_geometry_cell);
        let max_range = cfg.eval.max_range;
        let l1 = eval::depth_l1_images(
            &eval_poses,
            |pose| render_map_depth(&map, pose, &k, step, max_range),
            |pose| {
                weft_core::sim::render_frame(scene, pose, &k)
                    .depth
                    .iter()
                    .map(|d| *d as f64)
                    .collect()
            },
        );
        report.depth_l1_cm = Some(l1);
        log::info!("depth l1 over {} poses: {:.3} cm", eval_poses.len(), l1);

        if !no_mesh {
            let recon = eval::marching_cubes(&map, cfg.eval.mesh_cell, cfg.eval.memory_budget_mb)?;
            let bounds = cfg.scene_bounds()?;
            let gt_mesh = eval::marching_cubes_scene(
                scene,
                &bounds,
                cfg.eval.mesh_cell,
                cfg.eval.memory_budget_mb,
            )?;
            let cull_poses: Vec<Pose> = reference_poses.clone();
            let recon =
                cull_to_frustums(&recon, &cull_poses, &frames[0].intrinsics, cfg.eval.max_range);
            let gt_mesh =
                cull_to_frustums(&gt_mesh, &cull_poses, &frames[0].intrinsics, cfg.eval.max_range);
            let metrics = mesh_metrics(
                &recon,
                &gt_mesh,
                cfg.eval.mesh_samples,
                cfg.eval.completion_threshold,
                cfg.seed ^ 0x3E5A,
            )?;
            report.mesh = Some(metrics);
            log::info!(
                "mesh: accuracy {:.3} cm, completion {:.3} cm, ratio {:.2} %",
                metrics.accuracy_cm,
                metrics.completion_cm,
                metrics.completion_ratio_pct
            );
        }
    }

    std::fs::write(dir.report_json(), report.to_json())?;
    let fpt = TimingSummary::from_csv(&dir.timing()).map(|t| t.fpt_mean_ms);
    std::fs::write(dir.report_text(), report.to_text(fpt))?;

    // plots: top-down trajectory overlay and the mapping loss curve
    let est_xy: Vec<(f64, f64)> = trajectory.iter().map(|(_, p)| (p.translation.x, p.translation.y)).collect();
    let mut series = vec![plot::Series {
        name: "estimate",
        color: "#c0392b",
        points: est_xy,
    }];
    if !gt.is_empty() {
        series.push(plot::Series {
            name: "ground truth",
            color: "#27ae60",
            points: gt.iter().map(|(_, p)| (p.translation.x, p.translation.y)).collect(),
        });
    }
    plot::line_chart("trajectory (top view)", &series, &dir.root.join("trajectory.svg"))?;

    if let Ok(text) = std::fs::read_to_string(dir.losses()) {
        let pts: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .filter_map(|l| {
                let mut cols = l.split(',');
                let _frame = cols.next()?;
                let _iter = cols.next()?;
                cols.next()?.trim().parse().ok()
            })
            .enumerate()
            .map(|(i, l): (usize, f64)| (i as f64, l))
            .collect();
        plot::line_chart(
            "mapping loss",
            &[plot::Series {
                name: "total",
                color: "#2980b9",
                points: pts,
            }],
            &dir.root.join("loss_curve.svg"),
        )?;
    }

    println!("{}", report.to_text(fpt));
    Ok(ExitCode::SUCCESS)
}
