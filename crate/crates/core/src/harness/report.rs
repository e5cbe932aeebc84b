use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;
use crate::error::Result;
use crate::floatfmt::format_f64;
use crate::phase::LebesgueExponent;

pub const SERIES_FILE: &str = "series.csv";
pub const RECORDS_FILE: &str = "records.json";
pub const CONSTANTS_FILE: &str = "constants.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const SERIES_HEADER: &str = "t,p,lp_norm,ratio_to_initial,G_p_bound,sandwich_min_margin,clamped_mass";

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Row-at-a-time CSV writer, flushed after each output time so a failed run
/// leaves every completed row on disk.
pub struct SeriesWriter {
    w: BufWriter<File>,
}

/// One row of the norm time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub p: LebesgueExponent,
    pub lp_norm: f64,
    pub ratio_to_initial: f64,
    pub g_p_bound: f64,
    pub sandwich_min_margin: f64,
    pub clamped_mass: f64,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{SERIES_HEADER}")?;
        w.flush()?;
        Ok(Self { w })
    }

    pub fn write(&mut self, row: &SeriesRow) -> Result<()> {
        let f = format_f64;
        writeln!(
            self.w,
            "{},{},{},{},{},{},{}",
            f(row.t),
            row.p,
            f(row.lp_norm),
            f(row.ratio_to_initial),
            f(row.g_p_bound),
            f(row.sandwich_min_margin),
            f(row.clamped_mass)
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Everything needed to reproduce a run. Contains no timestamps or paths so
/// reruns produce identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    pub exit_code: i32,
    pub outputs: Vec<String>,
    pub config: RunConfig,
    pub defaults_applied: Vec<String>,
    pub derived: BTreeMap<String, Value>,
}
