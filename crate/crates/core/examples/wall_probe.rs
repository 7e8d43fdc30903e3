//! Diagnostic: fit a one-wall scene from a single posed frame and print the
//! loss trajectory plus final rendered-depth error.

use nalgebra::Vector3;
use rand::SeedableRng;

use weft_core::field::SceneBounds;
use weft_core::loss::LossConfig;
use weft_core::map::{MapConfig, SceneMap};
use weft_core::render::pipeline::{evaluate_batch, render_rays, GradMode, RaySpec};
use weft_core::render::SampleConfig;
use weft_core::sim::{default_intrinsics, look_at_pose, render_frame, AnalyticScene, Primitive};
use weft_core::slam::{map_step, KeyframeStore, MapOptimState, MappingConfig, OptimConfig};
use weft_core::VariantKind;

fn main() {
    let scene = AnalyticScene::new(vec![Primitive::room(
        Vector3::new(-1.0, -3.0, 0.0),
        Vector3::new(3.0, 3.0, 3.0),
        [0.7, 0.6, 0.5],
    )]);
    let intrinsics = default_intrinsics();
    let pose = look_at_pose(Vector3::new(1.0, 0.0, 1.5), Vector3::new(3.0, 0.0, 1.5));
    let frame = render_frame(&scene, &pose, &intrinsics);

    let bounds =
        SceneBounds::new(Vector3::new(-1.2, -3.2, -0.2), Vector3::new(3.2, 3.2, 3.2)).unwrap();
    let map_cfg = MapConfig {
        geometry: VariantKind::Cp,
        appearance: VariantKind::SixAxis,
        geometry_rank: 2,
        appearance_rank: 8,
        channels: 16,
        coarse_cell: 0.24,
        fine_geometry_cell: 0.08,
        fine_appearance_cell: 0.08,
        ..MapConfig::default()
    };
    let loss_cfg = LossConfig::default();
    let optim_cfg = OptimConfig::default();
    let sample_cfg = SampleConfig {
        stratified: 24,
        importance: 8,
        truncation: loss_cfg.truncation,
        deterministic: false,
    };
    let mapping_cfg = MappingConfig {
        every: 4,
        iterations: 300,
        rays_per_iteration: 1024,
        window: 4,
        first_frame_iterations: 300,
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut map = SceneMap::init(bounds, &map_cfg, &mut rng).unwrap();
    let mut opt = MapOptimState::new();
    let mut keyframes = KeyframeStore::new();
    keyframes.insert(0, pose);
    let frames = vec![frame.clone()];

    let t0 = std::time::Instant::now();
    let report = map_step(
        &mut map,
        &mut opt,
        &mut keyframes,
        &frames,
        mapping_cfg.iterations,
        &loss_cfg,
        &optim_cfg,
        &mapping_cfg,
        &sample_cfg,
        42,
    )
    .unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "{} iterations in {:.1}s ({:.0} ms/iter)",
        report.losses.len(),
        dt,
        dt / report.losses.len() as f64 * 1e3
    );
    for (i, l) in report.losses.iter().enumerate() {
        if i % 10 == 0 || i + 1 == report.losses.len() {
            println!("iter {i:4}  loss {l:.5}");
        }
    }
    println!("beta = {:.3}", map.beta.beta());

    // loss parts at the end on a fixed batch
    let mut rays = Vec::new();
    for v in (60..180).step_by(6) {
        for u in (80..240).step_by(6) {
            rays.push(RaySpec {
                pose_index: 0,
                dir_cam: intrinsics.ray_direction(u as f64, v as f64),
                color: frame.color_at(u, v),
                depth: frame.depth_at(u, v),
            });
        }
    }
    let (eval, _) =
        evaluate_batch(&map, &[pose], &rays, &loss_cfg, &sample_cfg, 1, GradMode::None).unwrap();
    println!("final parts: {:?}", eval.parts);

    let render_cfg = SampleConfig {
        stratified: 48,
        importance: 8,
        truncation: loss_cfg.truncation,
        deterministic: true,
    };
    let estimates = render_rays(&map, &[pose], &rays, &render_cfg, 0).unwrap();
    let mut max_err: f64 = 0.0;
    let mut mean_err = 0.0;
    let mut n = 0;
    for (est, ray) in estimates.iter().zip(&rays) {
        if let Some(est) = est {
            let e = (est.depth - ray.depth).abs();
            max_err = max_err.max(e);
            mean_err += e;
            n += 1;
        }
    }
    println!(
        "depth error over {} interior rays: mean {:.4} m, max {:.4} m",
        n,
        mean_err / n as f64,
        max_err
    );

    // profile of the principal ray
    let central = RaySpec {
        pose_index: 0,
        dir_cam: intrinsics.ray_direction(intrinsics.cx, intrinsics.cy),
        color: [0.5; 3],
        depth: 2.0,
    };
    let est = render_rays(&map, &[pose], &[central], &render_cfg, 0).unwrap();
    let est = est[0].as_ref().unwrap();
    println!("principal: depth {:.4}, sum w {:.5}", est.depth, est.weights.iter().sum::<f64>());
    for i in 0..est.sdf.len() {
        let t = est.sample_depths[i];
        if (t - 2.0).abs() < 0.12 || est.weights[i] > 0.01 {
            println!(
                "  t={:.4}  s={:+.4}  w={:.5}",
                t, est.sdf[i], est.weights[i]
            );
        }
    }
}
