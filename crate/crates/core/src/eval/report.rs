//! Aggregated run metrics in machine- and human-readable forms.
//!
//! The JSON document contains only quantities that are pure functions of the
//! run artifacts (trajectory, checkpoint, dataset), so two runs with the same
//! seed produce byte-identical files. Wall-clock statistics live in the
//! timing CSV and are summarized in the text report only.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::ate::AteResult;
use super::metrics::MeshMetrics;
use crate::map::MapParamCounts;

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub ate: Option<AteResult>,
    pub depth_l1_cm: Option<f64>,
    pub mesh: Option<MeshMetrics>,
    pub params_geometry: usize,
    pub params_appearance: usize,
    pub params_fields_total: usize,
    pub params_decoders: usize,
    pub beta: f64,
    pub geometry_variant: String,
    pub appearance_variant: String,
}

impl MetricsReport {
    pub fn new(counts: MapParamCounts, beta: f64, geometry: &str, appearance: &str) -> Self {
        Self {
            ate: None,
            depth_l1_cm: None,
            mesh: None,
            params_geometry: counts.geometry,
            params_appearance: counts.appearance,
            params_fields_total: counts.fields_total(),
            params_decoders: counts.decoders,
            beta,
            geometry_variant: geometry.to_string(),
            appearance_variant: appearance.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table; `fpt_ms` comes from the timing log when available.
    pub fn to_text(&self, fpt_ms: Option<f64>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scene representation");
        let _ = writeln!(s, "  geometry    {}", self.geometry_variant);
        let _ = writeln!(s, "  appearance  {}", self.appearance_variant);
        let _ = writeln!(s, "parameters");
        let _ = writeln!(
            s,
            "  geometry fields    {:>10}  ({:.3} M)",
            self.params_geometry,
            self.params_geometry as f64 / 1e6
        );
        let _ = writeln!(
            s,
            "  appearance fields  {:>10}  ({:.3} M)",
            self.params_appearance,
            self.params_appearance as f64 / 1e6
        );
        let _ = writeln!(
            s,
            "  fields total       {:>10}  ({:.3} M)",
            self.params_fields_total,
            self.params_fields_total as f64 / 1e6
        );
        let _ = writeln!(s, "  decoders + beta    {:>10}", self.params_decoders);
        let _ = writeln!(s, "  beta               {:>10.3}", self.beta);
        if let Some(ate) = &self.ate {
            let _ = writeln!(s, "localization");
            let _ = writeln!(s, "  ate mean   {:.3} cm", ate.mean_cm);
            let _ = writeln!(s, "  ate rmse   {:.3} cm", ate.rmse_cm);
            let _ = writeln!(s, "  matched    {} poses", ate.matched);
        }
        if let Some(d) = self.depth_l1_cm {
            let _ = writeln!(s, "reconstruction");
            let _ = writeln!(s, "  depth l1   {d:.3} cm");
        }
        if let Some(m) = &self.mesh {
            let _ = writeln!(s, "  accuracy   {:.3} cm", m.accuracy_cm);
            let _ = writeln!(s, "  completion {:.3} cm", m.completion_cm);
            let _ = writeln!(s, "  ratio      {:.2} %", m.completion_ratio_pct);
        }
        if let Some(fpt) = fpt_ms {
            let _ = writeln!(s, "timing");
            let _ = writeln!(s, "  fpt mean   {fpt:.1} ms/frame");
        }
        s
    }
}

/// Timing CSV access (`frame_id,track_ms,map_ms,total_ms`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSummary {
    pub frames: usize,
    pub fpt_mean_ms: f64,
}

impl TimingSummary {
    pub fn from_csv_text(text: &str) -> Option<Self> {
        let mut total = 0.0;
        let mut frames = 0;
        for line in text.lines().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return None;
            }
            total += cols[3].trim().parse::<f64>().ok()?;
            frames += 1;
        }
        (frames > 0).then_some(Self {
            frames,
            fpt_mean_ms: total / frames as f64,
        })
    }

    pub fn from_csv(path: &Path) -> Option<Self> {
        Self::from_csv_text(&std::fs::read_to_string(path).ok()?)
    }
}

pub fn write_timing_csv(
    path: &Path,
    timings: &[crate::slam::FrameTiming],
) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "frame_id,track_ms,map_ms,total_ms")?;
    for t in timings {
        writeln!(
            f,
            "{},{:.3},{:.3},{:.3}",
            t.frame_id, t.track_ms, t.map_ms, t.total_ms
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fpt_mean_is_arithmetic_mean_of_total_column() {
        let csv = "frame_id,track_ms,map_ms,total_ms\n0,0.0,100.0,100.0\n1,50.0,0.0,50.0\n2,30.0,30.0,60.0\n";
        let s = TimingSummary::from_csv_text(csv).unwrap();
        assert_eq!(s.frames, 3);
        assert!((s.fpt_mean_ms - 70.0).abs() < 1e-12);
    }

    #[test]
    fn report_json_is_stable() {
        let counts = MapParamCounts {
            geometry: 100,
            appearance: 200,
            decoders: 50,
        };
        let a = MetricsReport::new(counts, 30.0, "cp", "six-axis").to_json();
        let b = MetricsReport::new(counts, 30.0, "cp", "six-axis").to_json();
        assert_eq!(a, b);
        assert!(a.contains("params_fields_total"));
    }
}
