//! Pose files in the TUM RGB-D line format:
//! `timestamp tx ty tz qx qy qz qw`, with `#` comment lines.

use std::io::Write;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::slam::Pose;

use super::DatasetError;

pub fn parse_pose_line(parts: &[&str]) -> Option<(f64, Pose)> {
    if parts.len() != 8 {
        return None;
    }
    let vals: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    let v = vals?;
    let rotation = UnitQuaternion::from_quaternion(Quaternion::new(v[7], v[4], v[5], v[6]));
    Some((
        v[0],
        Pose::new(rotation, Vector3::new(v[1], v[2], v[3])),
    ))
}

pub fn format_pose_line(timestamp: f64, pose: &Pose) -> String {
    let t = pose.translation;
    let q = pose.rotation.quaternion();
    format!(
        "{timestamp:.6} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}",
        t.x, t.y, t.z, q.i, q.j, q.k, q.w
    )
}

pub fn read_pose_file(path: &Path) -> Result<Vec<(f64, Pose)>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parsed = parse_pose_line(&parts).ok_or_else(|| DatasetError::Malformed {
            file: path.display().to_string(),
            line: idx + 1,
            reason: "expected `timestamp tx ty tz qx qy qz qw`".into(),
        })?;
        out.push(parsed);
    }
    Ok(out)
}

pub fn write_pose_file(
    path: &Path,
    poses: impl IntoIterator<Item = (f64, Pose)>,
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# timestamp tx ty tz qx qy qz qw")?;
    for (t, pose) in poses {
        writeln!(f, "{}", format_pose_line(t, &pose))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_roundtrip() {
        let pose = Pose::new(
            UnitQuaternion::from_scaled_axis(Vector3::new(0.1, -0.4, 0.9)),
            Vector3::new(1.5, -2.0, 0.25),
        );
        let line = format_pose_line(17.25, &pose);
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (t, p) = parse_pose_line(&parts).unwrap();
        assert_eq!(t, 17.25);
        assert!(p.rotation.angle_to(&pose.rotation) < 1e-8);
        assert!((p.translation - pose.translation).norm() < 1e-8);
    }
}
