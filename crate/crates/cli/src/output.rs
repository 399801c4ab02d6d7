use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use blockroots::horner::ConvergenceTrace;
use blockroots::io::{format_float, write_json};
use blockroots::qd::QdTrace;
use serde::{Deserialize, Serialize};

use crate::{Command, Failure};

/// Output directory of one run.
pub struct RunDir {
    path: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub input: PathBuf,
    pub seed: Option<u64>,
    pub invocation: Command,
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(path).map_err(|e| io_failure(path, e))?;
        Ok(Self { path: path.to_path_buf() })
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        Ok(write_json(&self.path.join(name), value)?)
    }

    /// One row per iterate: `stage,iteration,delta_pct,residual,aux`.
    /// `residual` is relative to `‖A_l‖_F`; `aux` is the step ratio
    /// `δ_k / δ_{k-1}`.
    pub fn trace_csv(&self, traces: &[(usize, &ConvergenceTrace)]) -> Result<(), Failure> {
        let path = self.path.join("trace.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_failure(&path, e))?;
        let mut rows = vec![vec![
            "stage".to_string(),
            "iteration".into(),
            "delta_pct".into(),
            "residual".into(),
            "aux".into(),
        ]];
        for (stage, t) in traces {
            let rel = t.relative_residuals();
            for (k, r) in rel.iter().enumerate() {
                let delta = k.checked_sub(1).and_then(|i| t.deltas.get(i));
                let ratio = k.checked_sub(2).and_then(|i| t.ratios.get(i));
                rows.push(vec![
                    stage.to_string(),
                    k.to_string(),
                    delta.map_or_else(String::new, |d| format_float(*d)),
                    format_float(*r),
                    ratio.map_or_else(String::new, |d| format_float(*d)),
                ]);
            }
        }
        for row in rows {
            w.write_record(&row).map_err(|e| io_failure(&path, e))?;
        }
        w.flush().map_err(|e| io_failure(&path, e))
    }

    /// One row per sweep with the norm of every interior `E` block.
    pub fn qd_trace_csv(&self, trace: &QdTrace) -> Result<(), Failure> {
        let path = self.path.join("qd_trace.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_failure(&path, e))?;
        let width = trace.sweeps.first().map_or(0, |s| s.e_norms.len());
        let mut header = vec!["sweep".to_string(), "max_relative_e".into(), "q_change_pct".into()];
        header.extend((1..=width).map(|k| format!("e_norm_{k}")));
        w.write_record(&header).map_err(|e| io_failure(&path, e))?;
        for s in &trace.sweeps {
            let mut row = vec![s.sweep.to_string(), format_float(s.max_relative_e), format_float(s.q_change_pct)];
            row.extend(s.e_norms.iter().map(|v| format_float(*v)));
            w.write_record(&row).map_err(|e| io_failure(&path, e))?;
        }
        w.flush().map_err(|e| io_failure(&path, e))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), Failure> {
        let path = self.path.join(name);
        fs::write(&path, body).map_err(|e| io_failure(&path, e))
    }

    pub fn manifest(&self, input: &Path, seed: Option<u64>, invocation: &Command) -> Result<(), Failure> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let manifest = Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            input: input.to_path_buf(),
            seed,
            invocation: invocation.clone(),
        };
        self.json("manifest.json", &manifest)
    }
}
