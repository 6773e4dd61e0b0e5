//! Run directories: scenario snapshot, artifacts and manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use isac_core::scenario::{dbm_to_watts, dbw_to_watts, Scenario};
use serde::Serialize;

/// Shortest round-trip form (`20.0`, `1.5e-10`); empty for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}

pub fn opt_f64(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

/// Raw and converted power levels of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Units {
    pub p_t_dbw: f64,
    pub p_t_w: f64,
    pub sigma_n2_dbm: f64,
    pub sigma_n2_w: f64,
    pub sigma_s2_dbm: f64,
    pub sigma_s2_w: f64,
    pub gamma_db: f64,
    pub radar_snr: f64,
}

impl Units {
    pub fn of(s: &Scenario) -> Self {
        Self {
            p_t_dbw: s.constraints.p_t_dbw,
            p_t_w: dbw_to_watts(s.constraints.p_t_dbw),
            sigma_n2_dbm: s.constraints.sigma_n2_dbm,
            sigma_n2_w: dbm_to_watts(s.constraints.sigma_n2_dbm),
            sigma_s2_dbm: s.sensing.sigma_s2_dbm,
            sigma_s2_w: s.sigma_s2(),
            gamma_db: s.constraints.gamma_db,
            radar_snr: s.radar_snr(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scenario_source: String,
    pub seed: u64,
    pub channel_seed: u64,
    pub method: Option<String>,
    pub trials: Option<usize>,
    pub sweep: Option<String>,
    pub status: String,
    pub failures: usize,
    pub units: Units,
    pub files: Vec<String>,
}

/// Output directory that records every file written to it.
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> io::Result<()> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(p, text)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(header).map_err(io::Error::other)?;
        for r in rows {
            w.write_record(r).map_err(io::Error::other)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        self.write_text(rel, &String::from_utf8(bytes).map_err(io::Error::other)?)
    }

    /// Writes `manifest.json` listing all files written so far.
    pub fn finish(mut self, mut manifest: Manifest) -> io::Result<()> {
        manifest.files = std::mem::take(&mut self.files);
        self.write_json("manifest.json", &manifest)
    }
}
