//! Tracking and mapping: per-frame pose optimization against a frozen map,
//! periodic joint map + keyframe refinement, and the SLAM driver.

mod adam;
mod keyframe;
mod mapper;
mod pose;
mod runner;
mod tracker;

pub use adam::{BlockState, MapOptimState, OptimConfig, PoseOptimState};
pub use keyframe::{Keyframe, KeyframeStore};
pub use mapper::{map_step, MapStepReport, MappingConfig};
pub use pose::{extrapolate, Pose, PoseDelta};
pub use runner::{run_slam, FrameTiming, SlamConfig, SlamError, SlamOutput};
pub use tracker::{track_frame, TrackingConfig, TrackingReport};
