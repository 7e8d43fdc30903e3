//! Diagnostic: run the full tracking/mapping loop on the synthetic circle
//! scene and report per-frame pose errors plus final ATE.

use weft_core::config::RunConfig;
use weft_core::eval::ate;
use weft_core::sim;
use weft_core::slam::run_slam;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().collect();
    let frames: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let noise: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);

    let cfg = RunConfig::default();
    let scene = sim::default_scene();
    let spec = sim::default_trajectory(frames);
    let intrinsics = sim::default_intrinsics();

    eprintln!("rendering {frames} frames...");
    let t0 = std::time::Instant::now();
    let mut dataset = sim::generate_sequence(&scene, &spec, &intrinsics, 30.0);
    if noise > 0.0 {
        dataset = dataset
            .iter()
            .enumerate()
            .map(|(i, f)| sim::add_depth_noise(f, noise, 1000 + i as u64))
            .collect();
    }
    eprintln!("rendered in {:.1}s", t0.elapsed().as_secs_f64());

    let slam_cfg = cfg.slam_config().unwrap();
    let map_cfg = cfg.map_config();
    let t0 = std::time::Instant::now();
    let out = run_slam(&dataset, &map_cfg, &slam_cfg).unwrap();
    let wall = t0.elapsed().as_secs_f64();

    let gt: Vec<(f64, weft_core::slam::Pose)> = dataset
        .iter()
        .map(|f| (f.timestamp, f.gt_pose.unwrap()))
        .collect();
    for (i, (t, pose)) in out.trajectory.iter().enumerate() {
        let g = &gt[i].1;
        let dp = (pose.translation - g.translation).norm() * 100.0;
        let dr = pose.rotation_angle_to(g).to_degrees();
        if i % 5 == 0 || dp > 3.0 {
            eprintln!("frame {i:3} t={t:.2}  pos err {dp:6.2} cm  rot err {dr:5.2} deg");
        }
    }
    let r = ate(&out.trajectory, &gt, 0.02).unwrap();
    eprintln!(
        "\nATE mean {:.3} cm  rmse {:.3} cm over {} frames;  wall {:.1}s ({:.0} ms/frame), beta {:.1}",
        r.mean_cm,
        r.rmse_cm,
        r.matched,
        wall,
        wall / frames as f64 * 1e3,
        out.map.beta.beta(),
    );
}
