//! Time-series records, CSV output and the metadata sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;

/// Everything one experiment produced: the stored time series, headline
/// summary numbers, and the run metadata needed to reproduce it.
#[derive(Debug, Clone)]
pub struct ObservableRecord {
    pub experiment: String,
    /// Name of the index column ("t" for time series, "mode" for moment
    /// tables).
    pub index_label: String,
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Vec<(String, f64)>,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
}

impl ObservableRecord {
    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// CSV with a header naming every column; values use the shortest
    /// round-trip float representation, so identical runs produce byte
    /// identical files.  All quantities are in dimensionless model units.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.index_label);
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(self.rows.iter()) {
            out.push_str(&format!("{t}"));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }

    /// Structured-text sidecar: summary, provenance, and the complete
    /// resolved configuration (defaults included).
    pub fn write_metadata(&self, path: &Path, config: &RunConfig) -> std::io::Result<()> {
        let config_echo = toml::to_string_pretty(config)
            .unwrap_or_else(|e| format!("# config serialization failed: {e}"));
        let mut out = String::new();
        out.push_str("[run]\n");
        out.push_str(&format!("experiment = {:?}\n", self.experiment));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("version = {:?}\n", self.version));
        out.push_str(&format!("wall_time_s = {}\n", self.wall_time_s));
        out.push_str("\n[summary]\n");
        for (k, v) in &self.summary {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str("\n[config]\n");
        for line in config_echo.lines() {
            // Nest the config sections under [config.*].
            if let Some(section) = line.strip_prefix('[') {
                out.push_str(&format!("[config.{section}\n"));
            } else {
                out.push_str(line);
                out.push('\n');
            }
        }
        std::fs::write(path, out)
    }
}

/// Version string stamped into the metadata: crate version plus the git
/// commit when available.
pub fn version_string() -> String {
    let base = env!("CARGO_PKG_VERSION").to_string();
    match std::process::Command::new("git").args(["rev-parse", "--short", "HEAD"]).output() {
        Ok(out) if out.status.success() => {
            let hash = String::from_utf8_lossy(&out.stdout).trim().to_string();
            format!("{base}+g{hash}")
        }
        _ => base,
    }
}

/// Output paths of one experiment.
pub fn output_paths(out_dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (out_dir.join(format!("{name}.csv")), out_dir.join(format!("{name}.meta.toml")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ObservableRecord {
        ObservableRecord {
            experiment: "custom".into(),
            index_label: "t".into(),
            times: vec![0.0, 0.5],
            columns: vec!["a".into(), "b".into()],
            rows: vec![vec![1.0, 2.0], vec![0.1, 0.25]],
            summary: vec![("peak".into(), 2.0)],
            seed: 7,
            version: "test".into(),
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn csv_shape_and_determinism() {
        let r = record();
        let csv = r.to_csv();
        assert_eq!(csv, "t,a,b\n0,1,2\n0.5,0.1,0.25\n");
        assert_eq!(csv, r.to_csv());
    }

    #[test]
    fn metadata_contains_full_config_echo() {
        let dir = std::env::temp_dir().join(format!("obs-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.toml");
        record().write_metadata(&path, &RunConfig::default()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for needle in [
            "[run]",
            "[summary]",
            "peak = 2",
            "[config.lattice]",
            "n_points = 256",
            "[config.integrator]",
            "midpoint_iterations = 4",
            "[config.assertions]",
        ] {
            assert!(text.contains(needle), "missing {needle:?} in sidecar:\n{text}");
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
