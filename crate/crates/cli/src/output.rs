//! CSV/JSON emission and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use arbiter_core::arbiter::GameRoundResult;
use arbiter_core::duel::PayoffSurface;
use arbiter_core::grover::PipelineResult;
use serde::Serialize;

use crate::CliError;

/// Fixed-point text with 10 significant digits (`3.0` → `"3.000000000"`).
/// Magnitudes outside `[1e-5, 1e10)` use scientific notation.
pub fn sig10(v: f64) -> String {
    if v == 0.0 {
        return "0.000000000".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let a = v.abs();
    let mut e = a.log10().floor() as i32;
    if 10f64.powi(e) > a {
        e -= 1;
    } else if 10f64.powi(e + 1) <= a {
        e += 1;
    }
    // rounding to 10 digits can carry into a new leading digit
    let fixed = |e: i32| format!("{v:.*}", (9 - e).max(0) as usize);
    if (-5..10).contains(&e) {
        let s = fixed(e);
        if s.parse::<f64>().is_ok_and(|r| r.abs() < 10f64.powi(e + 1)) {
            return s;
        }
        if e + 1 < 10 {
            return fixed(e + 1);
        }
    }
    format!("{v:.9e}")
}

/// A named file produced by a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn surface_csv(surface: &PayoffSurface) -> Result<Vec<u8>, CliError> {
    if surface.points.is_empty() {
        return Err(CliError::Runtime("empty surface".into()));
    }
    let mut w = csv_writer();
    w.write_record(["axis1_name", "axis1_value", "axis2_name", "axis2_value", "payoff_A", "payoff_B"])
        .map_err(csv_err)?;
    let (n1, n2) = (surface.axis1.name(), surface.axis2.name());
    for p in &surface.points {
        w.write_record([n1, &sig10(p.axis1_value), n2, &sig10(p.axis2_value), &sig10(p.payoff_a), &sig10(p.payoff_b)])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn rounds_csv(rounds: &[GameRoundResult]) -> Result<Vec<u8>, CliError> {
    if rounds.is_empty() {
        return Err(CliError::Runtime("empty round log".into()));
    }
    let mut w = csv_writer();
    w.write_record(["round", "winner", "id_bus", "data_bus"]).map_err(csv_err)?;
    for (r, g) in rounds.iter().enumerate() {
        w.write_record([&r.to_string(), &g.winner.to_string(), &g.id_bus, &g.data_bus]).map_err(csv_err)?;
    }
    finish(w)
}

/// Round log with the recovered preimage appended; `data_bus` is the
/// searched `y`.
pub fn pipeline_csv(rounds: &[PipelineResult]) -> Result<Vec<u8>, CliError> {
    if rounds.is_empty() {
        return Err(CliError::Runtime("empty round log".into()));
    }
    let mut w = csv_writer();
    w.write_record(["round", "winner", "id_bus", "data_bus", "x"]).map_err(csv_err)?;
    for (r, p) in rounds.iter().enumerate() {
        w.write_record([&r.to_string(), &p.winner.to_string(), &p.id_bus, &p.y, &p.x]).map_err(csv_err)?;
    }
    finish(w)
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes each artifact into `dir` through a temporary file and a rename,
/// so readers never see a partial file.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let io = |what: &str, path: &Path, e: std::io::Error| CliError::Io(format!("{what} {}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(|e| io("cannot create", dir, e))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(&a.name);
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io("cannot create a file in", dir, e))?;
        tmp.write_all(&a.contents).map_err(|e| io("cannot write", &path, e))?;
        tmp.as_file().sync_all().map_err(|e| io("cannot sync", &path, e))?;
        tmp.persist(&path).map_err(|e| io("cannot rename onto", &path, e.error))?;
        written.push(path);
    }
    Ok(written)
}
