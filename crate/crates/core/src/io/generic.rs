//! Generic RGB-D directory format, shared between the synthetic scene
//! generator and the SLAM engine.
//!
//! Layout:
//! - `meta`: text file of `key=value` lines — intrinsics (`width`, `height`,
//!   `fx`, `fy`, `cx`, `cy`), `depth_scale` (raw units per meter),
//!   `depth_convention` (`range` or `zdepth`), `fps`, and `count`.
//! - `rgb_%05d.png`: 8-bit RGB images.
//! - `depth_%05d.bin`: little-endian 32-bit float rasters, row-major, one
//!   value per pixel, in raw units (bit-exact round trip).
//! - `poses.txt` (optional): ground-truth camera-to-world poses, one TUM-style
//!   line per frame.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::render::{DepthConvention, Intrinsics};

use super::posefile;
use super::{DatasetError, Frame};

fn rgb_name(i: usize) -> String {
    format!("rgb_{i:05}.png")
}

fn depth_name(i: usize) -> String {
    format!("depth_{i:05}.bin")
}

/// Write a frame sequence. Poses are written when every frame has one.
pub fn write_sequence(dir: &Path, frames: &[Frame], fps: f64) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    let k = frames
        .first()
        .map(|f| f.intrinsics)
        .expect("cannot write an empty sequence");

    let meta_path = dir.join("meta");
    let convention = match k.depth_convention {
        DepthConvention::Range => "range",
        DepthConvention::ZDepth => "zdepth",
    };
    let meta = format!(
        "width={}\nheight={}\nfx={}\nfy={}\ncx={}\ncy={}\ndepth_scale={}\ndepth_convention={}\nfps={}\ncount={}\n",
        k.width, k.height, k.fx, k.fy, k.cx, k.cy, k.depth_scale, convention, fps, frames.len()
    );
    std::fs::write(&meta_path, meta).map_err(|e| DatasetError::io(&meta_path, e))?;

    for (i, frame) in frames.iter().enumerate() {
        let rgb_path = dir.join(rgb_name(i));
        image::save_buffer(
            &rgb_path,
            &frame.rgb,
            k.width,
            k.height,
            image::ColorType::Rgb8,
        )
        .map_err(|e| DatasetError::Image {
            path: rgb_path.display().to_string(),
            source: e,
        })?;

        let depth_path = dir.join(depth_name(i));
        let mut bytes = Vec::with_capacity(frame.depth.len() * 4);
        for v in &frame.depth {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(&depth_path)
            .map_err(|e| DatasetError::io(&depth_path, e))?;
        f.write_all(&bytes)
            .map_err(|e| DatasetError::io(&depth_path, e))?;
    }

    if frames.iter().all(|f| f.gt_pose.is_some()) {
        let path = dir.join("poses.txt");
        posefile::write_pose_file(
            &path,
            frames
                .iter()
                .map(|f| (f.timestamp, f.gt_pose.unwrap())),
        )
        .map_err(|e| DatasetError::io(&path, e))?;
    }
    Ok(())
}

fn parse_meta(path: &Path) -> Result<BTreeMap<String, String>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(DatasetError::Malformed {
                file: path.display().to_string(),
                line: idx + 1,
                reason: "expected key=value".into(),
            });
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn meta_get<T: std::str::FromStr>(
    meta: &BTreeMap<String, String>,
    path: &Path,
    key: &str,
) -> Result<T, DatasetError> {
    meta.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| DatasetError::Malformed {
            file: path.display().to_string(),
            line: 0,
            reason: format!("missing or invalid key `{key}`"),
        })
}

/// Load a sequence in index order.
pub fn load_generic(dir: &Path) -> Result<Vec<Frame>, DatasetError> {
    let meta_path = dir.join("meta");
    if !meta_path.exists() {
        return Err(DatasetError::MissingIndex(meta_path.display().to_string()));
    }
    let meta = parse_meta(&meta_path)?;
    let width: u32 = meta_get(&meta, &meta_path, "width")?;
    let height: u32 = meta_get(&meta, &meta_path, "height")?;
    let depth_scale: f64 = meta_get(&meta, &meta_path, "depth_scale")?;
    let convention = match meta.get("depth_convention").map(String::as_str) {
        Some("zdepth") => DepthConvention::ZDepth,
        _ => DepthConvention::Range,
    };
    let intrinsics = Intrinsics {
        fx: meta_get(&meta, &meta_path, "fx")?,
        fy: meta_get(&meta, &meta_path, "fy")?,
        cx: meta_get(&meta, &meta_path, "cx")?,
        cy: meta_get(&meta, &meta_path, "cy")?,
        width,
        height,
        depth_scale,
        depth_convention: convention,
    };
    let fps: f64 = meta_get(&meta, &meta_path, "fps").unwrap_or(30.0);
    let count: usize = meta_get(&meta, &meta_path, "count")?;

    for i in 0..count {
        if !dir.join(depth_name(i)).exists() || !dir.join(rgb_name(i)).exists() {
            return Err(DatasetError::CountMismatch {
                declared: count,
                missing: i,
            });
        }
    }

    let poses_path = dir.join("poses.txt");
    let poses = if poses_path.exists() {
        Some(posefile::read_pose_file(&poses_path)?)
    } else {
        None
    };

    let pixels = (width * height) as usize;
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let rgb_path = dir.join(rgb_name(i));
        let img = image::open(&rgb_path)
            .map_err(|e| DatasetError::Image {
                path: rgb_path.display().to_string(),
                source: e,
            })?
            .into_rgb8();
        if (img.width(), img.height()) != (width, height) {
            return Err(DatasetError::BadRaster(rgb_path.display().to_string()));
        }

        let depth_path = dir.join(depth_name(i));
        let bytes = std::fs::read(&depth_path).map_err(|e| DatasetError::io(&depth_path, e))?;
        if bytes.len() != pixels * 4 {
            return Err(DatasetError::BadRaster(depth_path.display().to_string()));
        }
        let depth: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| {
                let raw = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                (raw as f64 / depth_scale) as f32
            })
            .collect();

        frames.push(Frame {
            timestamp: i as f64 / fps,
            rgb: img.into_raw(),
            depth,
            intrinsics,
            gt_pose: poses.as_ref().map(|p| p[i].1),
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{UnitQuaternion, Vector3};
    use crate::slam::Pose;

    fn toy_frames(n: usize, with_poses: bool) -> Vec<Frame> {
        let k = Intrinsics {
            fx: 50.0,
            fy: 50.0,
            cx: 7.5,
            cy: 5.5,
            width: 16,
            height: 12,
            depth_scale: 1.0,
            depth_convention: DepthConvention::Range,
        };
        (0..n)
            .map(|i| Frame {
                timestamp: i as f64 / 30.0,
                rgb: (0..16 * 12 * 3).map(|j| ((i * 31 + j) % 256) as u8).collect(),
                depth: (0..16 * 12)
                    .map(|j| if j % 7 == 0 { 0.0 } else { 0.5 + (j as f32) * 0.01 })
                    .collect(),
                intrinsics: k,
                gt_pose: with_poses.then(|| {
                    Pose::new(
                        UnitQuaternion::from_scaled_axis(Vector3::new(0.0, 0.1 * i as f64, 0.0)),
                        Vector3::new(i as f64, 0.0, 0.0),
                    )
                }),
            })
            .collect()
    }

    #[test]
    fn roundtrip_is_bit_exact_on_depth() {
        let dir = tempfile::tempdir().unwrap();
        let frames = toy_frames(3, true);
        write_sequence(dir.path(), &frames, 30.0).unwrap();
        let loaded = load_generic(dir.path()).unwrap();
        assert_eq!(loaded.len(), 3);
        for (a, b) in frames.iter().zip(&loaded) {
            assert_eq!(a.rgb, b.rgb);
            assert_eq!(a.depth, b.depth); // bit-exact f32 round trip
            let gp = b.gt_pose.unwrap();
            assert!((gp.translation - a.gt_pose.unwrap().translation).norm() < 1e-8);
        }
    }

    #[test]
    fn missing_poses_leaves_gt_absent() {
        let dir = tempfile::tempdir().unwrap();
        write_sequence(dir.path(), &toy_frames(2, false), 30.0).unwrap();
        let loaded = load_generic(dir.path()).unwrap();
        assert!(loaded.iter().all(|f| f.gt_pose.is_none()));
    }

    #[test]
    fn count_mismatch_names_missing_index() {
        let dir = tempfile::tempdir().unwrap();
        write_sequence(dir.path(), &toy_frames(3, false), 30.0).unwrap();
        std::fs::remove_file(dir.path().join("depth_00001.bin")).unwrap();
        match load_generic(dir.path()) {
            Err(DatasetError::CountMismatch { declared, missing }) => {
                assert_eq!(declared, 3);
                assert_eq!(missing, 1);
            }
            other => panic!("expected count mismatch, got {other:?}"),
        }
    }
}
