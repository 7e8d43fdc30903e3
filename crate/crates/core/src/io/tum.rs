//! TUM RGB-D benchmark directory ingestion.
//!
//! Expects `rgb.txt` and `depth.txt` index files (`timestamp path` lines, `#`
//! comments) and optionally `groundtruth.txt`. Color and depth entries are
//! associated greedily by nearest timestamp within a window, the same policy
//! as the benchmark's association tooling. Raw 16-bit depth divides by the
//! benchmark's 5000 units-per-meter convention.

use std::path::Path;

use crate::render::{DepthConvention, Intrinsics};

use super::posefile::parse_pose_line;
use super::{DatasetError, Frame};

pub const TUM_DEPTH_SCALE: f64 = 5000.0;
pub const DEFAULT_MAX_DT: f64 = 0.02;

/// Default pinhole parameters of the benchmark's Freiburg sequences.
pub fn default_intrinsics(width: u32, height: u32) -> Intrinsics {
    Intrinsics {
        fx: 525.0,
        fy: 525.0,
        cx: 319.5,
        cy: 239.5,
        width,
        height,
        depth_scale: TUM_DEPTH_SCALE,
        depth_convention: DepthConvention::ZDepth,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssociationReport {
    pub matched: usize,
    pub dropped_rgb: usize,
    pub dropped_depth: usize,
    pub with_groundtruth: usize,
}

fn read_index(path: &Path) -> Result<Vec<(f64, String)>, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingIndex(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(ts), Some(rel)) = (parts.next(), parts.next()) else {
            return Err(DatasetError::Malformed {
                file: path.display().to_string(),
                line: idx + 1,
                reason: "expected `timestamp path`".into(),
            });
        };
        let ts: f64 = ts.parse().map_err(|_| DatasetError::Malformed {
            file: path.display().to_string(),
            line: idx + 1,
            reason: "bad timestamp".into(),
        })?;
        out.push((ts, rel.to_string()));
    }
    Ok(out)
}

/// Greedy nearest-timestamp matching: all candidate pairs within `max_dt`
/// sorted by time difference, taken while both sides are unused.
pub fn associate(a: &[f64], b: &[f64], max_dt: f64) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, ta) in a.iter().enumerate() {
        for (j, tb) in b.iter().enumerate() {
            let dt = (ta - tb).abs();
            if dt <= max_dt {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap()
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Load an associated TUM sequence in time order.
pub fn load_tum(
    dir: &Path,
    max_dt: f64,
    intrinsics: Option<Intrinsics>,
) -> Result<(Vec<Frame>, AssociationReport), DatasetError> {
    let rgb_index = read_index(&dir.join("rgb.txt"))?;
    let depth_index = read_index(&dir.join("depth.txt"))?;

    let rgb_ts: Vec<f64> = rgb_index.iter().map(|e| e.0).collect();
    let depth_ts: Vec<f64> = depth_index.iter().map(|e| e.0).collect();
    let pairs = associate(&rgb_ts, &depth_ts, max_dt);
    if pairs.is_empty() {
        return Err(DatasetError::NoAssociations);
    }

    let gt_path = dir.join("groundtruth.txt");
    let groundtruth: Option<Vec<(f64, crate::slam::Pose)>> = if gt_path.exists() {
        let text =
            std::fs::read_to_string(&gt_path).map_err(|e| DatasetError::io(&gt_path, e))?;
        let mut gt = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if let Some(p) = parse_pose_line(&parts) {
                gt.push(p);
            }
        }
        Some(gt)
    } else {
        None
    };

    let mut report = AssociationReport {
        matched: pairs.len(),
        dropped_rgb: rgb_index.len() - pairs.len(),
        dropped_depth: depth_index.len() - pairs.len(),
        with_groundtruth: 0,
    };

    let mut frames = Vec::with_capacity(pairs.len());
    for (ri, di) in pairs {
        let (ts, rgb_rel) = &rgb_index[ri];
        let rgb_path = dir.join(rgb_rel);
        let rgb = image::open(&rgb_path)
            .map_err(|e| DatasetError::Image {
                path: rgb_path.display().to_string(),
                source: e,
            })?
            .into_rgb8();
        let k = intrinsics.unwrap_or_else(|| default_intrinsics(rgb.width(), rgb.height()));

        let depth_path = dir.join(&depth_index[di].1);
        let depth_img = image::open(&depth_path)
            .map_err(|e| DatasetError::Image {
                path: depth_path.display().to_string(),
                source: e,
            })?
            .into_luma16();
        if (depth_img.width(), depth_img.height()) != (rgb.width(), rgb.height()) {
            return Err(DatasetError::BadRaster(depth_path.display().to_string()));
        }
        let depth: Vec<f32> = depth_img
            .into_raw()
            .into_iter()
            .map(|raw| (raw as f64 / k.depth_scale) as f32)
            .collect();

        let gt_pose = groundtruth.as_ref().and_then(|gt| {
            let mut best: Option<(f64, usize)> = None;
            for (i, (gts, _)) in gt.iter().enumerate() {
                let dt = (gts - ts).abs();
                if dt <= max_dt && best.map(|(b, _)| dt < b).unwrap_or(true) {
                    best = Some((dt, i));
                }
            }
            best.map(|(_, i)| gt[i].1)
        });
        if gt_pose.is_some() {
            report.with_groundtruth += 1;
        }

        frames.push(Frame {
            timestamp: *ts,
            rgb: rgb.into_raw(),
            depth,
            intrinsics: k,
            gt_pose,
        });
    }
    frames.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
    Ok((frames, report))
}
