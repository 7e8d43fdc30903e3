use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::io::tum::associate;
use crate::slam::Pose;

/// Timestamped camera trajectory, strictly increasing in time.
pub type Trajectory = Vec<(f64, Pose)>;

#[derive(Debug, Error)]
pub enum AteError {
    #[error("need at least 3 matched pose pairs, got {0}")]
    TooFewMatches(usize),
}

/// Rigid transform aligning estimated positions onto ground truth.
#[derive(Debug, Clone, Copy)]
pub struct RigidAlignment {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidAlignment {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    #[inline]
    pub fn apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Closed-form least-squares rigid registration (rotation + translation, no
/// scale) of `est` points onto `gt` points.
pub fn umeyama_points(
    est: &[Vector3<f64>],
    gt: &[Vector3<f64>],
) -> Result<RigidAlignment, AteError> {
    if est.len() < 3 || est.len() != gt.len() {
        return Err(AteError::TooFewMatches(est.len().min(gt.len())));
    }
    let n = est.len() as f64;
    let c_est: Vector3<f64> = est.iter().sum::<Vector3<f64>>() / n;
    let c_gt: Vector3<f64> = gt.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for (x, y) in est.iter().zip(gt) {
        cov += (y - c_gt) * (x - c_est).transpose();
    }
    let svd = cov.svd(true, true);
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let mut s = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let rotation = u * s * v_t;
    let translation = c_gt - rotation * c_est;
    Ok(RigidAlignment {
        rotation,
        translation,
    })
}

/// Align two trajectories by timestamp association (nearest within `max_dt`,
/// one-to-one), then Umeyama on the matched positions.
pub fn align_umeyama(
    est: &Trajectory,
    gt: &Trajectory,
    max_dt: f64,
) -> Result<RigidAlignment, AteError> {
    let (e, g) = matched_positions(est, gt, max_dt);
    umeyama_points(&e, &g)
}

fn matched_positions(
    est: &Trajectory,
    gt: &Trajectory,
    max_dt: f64,
) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let et: Vec<f64> = est.iter().map(|e| e.0).collect();
    let gtt: Vec<f64> = gt.iter().map(|e| e.0).collect();
    let pairs = associate(&et, &gtt, max_dt);
    pairs
        .into_iter()
        .map(|(i, j)| (est[i].1.translation, gt[j].1.translation))
        .unzip()
}

/// Absolute trajectory error after rigid alignment, in centimeters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AteResult {
    pub mean_cm: f64,
    pub rmse_cm: f64,
    pub matched: usize,
}

pub fn ate(est: &Trajectory, gt: &Trajectory, max_dt: f64) -> Result<AteResult, AteError> {
    let (e, g) = matched_positions(est, gt, max_dt);
    let align = umeyama_points(&e, &g)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (x, y) in e.iter().zip(&g) {
        let err = (align.apply(*x) - y).norm();
        sum += err;
        sum_sq += err * err;
    }
    let n = e.len() as f64;
    Ok(AteResult {
        mean_cm: sum / n * 100.0,
        rmse_cm: (sum_sq / n).sqrt() * 100.0,
        matched: e.len(),
    })
}
