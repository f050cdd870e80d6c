//! Plot-ready CSV files and JSON documents written by the commands.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the in-memory values bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use mechsolve_core::solver::{Alpha0Candidate, SolveTrace};
use mechsolve_core::verifier::UtilityMatrix;
use mechsolve_core::RewardSchedule;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn render<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn schedule_csv(schedule: &RewardSchedule) -> Vec<u8> {
    let nodes = schedule.grid().nodes();
    render(
        &["theta", "alpha", "beta"],
        (0..nodes.len()).map(|i| (nodes[i], schedule.alpha()[i], schedule.beta()[i])),
    )
}

pub fn trace_csv(trace: &SolveTrace) -> Vec<u8> {
    render(
        &["iter", "objective", "du_sup"],
        trace
            .records
            .iter()
            .map(|r| (r.iter, r.objective, r.du_sup)),
    )
}

pub fn snapshots_csv(trace: &SolveTrace, thetas: &[f64]) -> Vec<u8> {
    render(
        &["iter", "theta", "alpha"],
        trace
            .snapshots
            .iter()
            .flat_map(|(iter, alpha)| thetas.iter().zip(alpha).map(move |(&t, &a)| (*iter, t, a))),
    )
}

pub fn utility_matrix_csv(matrix: &UtilityMatrix) -> Vec<u8> {
    let thetas = matrix.thetas();
    render(
        &["theta", "theta_hat", "utility"],
        (0..thetas.len())
            .flat_map(|i| (0..thetas.len()).map(move |j| (i, j)))
            .map(|(i, j)| (thetas[i], thetas[j], matrix.get(i, j))),
    )
}

/// Rows sorted by `alpha0`.
pub fn sweep_csv(candidates: &[Alpha0Candidate]) -> Vec<u8> {
    let mut rows = candidates.to_vec();
    rows.sort_by(|a, b| a.alpha0.total_cmp(&b.alpha0));
    render(
        &["alpha0", "profit", "converged"],
        rows.iter().map(|c| (c.alpha0, c.profit, c.converged)),
    )
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| OutputError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, OutputError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    write_file(dir, name, &bytes)
}

/// Columns of a schedule file, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleColumns {
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn read_schedule_csv(path: &Path) -> Result<ScheduleColumns, OutputError> {
    let bytes = fs::read(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_schedule_csv(path, &bytes)
}

pub fn parse_schedule_csv(path: &Path, bytes: &[u8]) -> Result<ScheduleColumns, OutputError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let headers = reader.headers().map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if headers != vec!["theta", "alpha", "beta"] {
        return Err(OutputError::Format {
            path: path.to_path_buf(),
            message: format!(
                "expected header theta,alpha,beta, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut cols = ScheduleColumns {
        theta: Vec::new(),
        alpha: Vec::new(),
        beta: Vec::new(),
    };
    for row in reader.deserialize::<(f64, f64, f64)>() {
        let (t, a, b) = row.map_err(|source| OutputError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        cols.theta.push(t);
        cols.alpha.push(a);
        cols.beta.push(b);
    }
    Ok(cols)
}
