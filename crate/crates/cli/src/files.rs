//! JSON and CSV artifacts written by the commands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use muss_core::bench::{BenchReport, BenchRow, Stat};
use muss_core::clustering::{ClusterModel, ClusterSummary, KMeansConfig};
use muss_core::SelectionResult;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MODEL_SCHEMA: &str = "muss-model/1";
pub const RESULT_SCHEMA: &str = "muss-result/1";

/// A fitted clustering saved for later `select --model` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub n: usize,
    pub config: KMeansConfig,
    #[serde(flatten)]
    pub model: ClusterModel,
    pub summaries: Vec<ClusterSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema: String,
    pub method: String,
    pub n: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(flatten)]
    pub result: SelectionResult,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(std::io::Error::from)
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let model: ModelFile = read_json(path)?;
    if model.schema != MODEL_SCHEMA {
        return Err(CliError::runtime(format!(
            "{}: unsupported model schema {:?}",
            path.display(),
            model.schema
        )));
    }
    Ok(model)
}

/// One CSV line per aggregated benchmark row. Absent values are empty cells.
#[derive(Debug, Serialize)]
struct CsvRow {
    method: &'static str,
    k: usize,
    lambda: f64,
    lambda_c: Option<f64>,
    l: Option<usize>,
    m: Option<usize>,
    k_within: Option<usize>,
    runs: usize,
    failures: usize,
    precision: Option<f64>,
    precision_stderr: Option<f64>,
    objective: Option<f64>,
    objective_stderr: Option<f64>,
    quality: Option<f64>,
    quality_stderr: Option<f64>,
    diversity: Option<f64>,
    diversity_stderr: Option<f64>,
    wall_time_ms: Option<f64>,
    wall_time_ms_stderr: Option<f64>,
    wall_time_ms_median: Option<f64>,
    clustering_ms: Option<f64>,
    partition_ms: Option<f64>,
    cluster_selection_ms: Option<f64>,
    within_ms: Option<f64>,
    top_quality_ms: Option<f64>,
    final_ms: Option<f64>,
    error: Option<String>,
}

fn mean(s: Option<Stat>) -> Option<f64> {
    s.map(|s| s.mean)
}

fn stderr(s: Option<Stat>) -> Option<f64> {
    s.and_then(|s| s.stderr)
}

impl From<&BenchRow> for CsvRow {
    fn from(r: &BenchRow) -> Self {
        let st = r.stage_times;
        CsvRow {
            method: r.method.name(),
            k: r.cell.k,
            lambda: r.cell.lambda,
            lambda_c: r.cell.lambda_c,
            l: r.cell.l,
            m: r.cell.m,
            k_within: r.cell.k_within,
            runs: r.runs,
            failures: r.failures,
            precision: mean(r.precision),
            precision_stderr: stderr(r.precision),
            objective: mean(r.objective_mean_scaled),
            objective_stderr: stderr(r.objective_mean_scaled),
            quality: mean(r.quality_mean),
            quality_stderr: stderr(r.quality_mean),
            diversity: mean(r.diversity_mean),
            diversity_stderr: stderr(r.diversity_mean),
            wall_time_ms: mean(r.wall_time_ms),
            wall_time_ms_stderr: stderr(r.wall_time_ms),
            wall_time_ms_median: r.wall_time_median_ms,
            clustering_ms: mean(r.clustering_ms),
            partition_ms: st.map(|s| s.partition_ms),
            cluster_selection_ms: st.map(|s| s.cluster_selection_ms),
            within_ms: st.map(|s| s.within_ms),
            top_quality_ms: st.map(|s| s.top_quality_ms),
            final_ms: st.map(|s| s.final_ms),
            error: r.error.clone(),
        }
    }
}

pub fn write_bench_csv<W: Write>(report: &BenchReport, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in &report.rows {
        out.serialize(CsvRow::from(row))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_bench_csv(report: &BenchReport, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_bench_csv(report, BufWriter::new(file)).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}
