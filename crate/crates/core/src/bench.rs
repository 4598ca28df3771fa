//! Synthetic data, evaluation metrics and the benchmark runner.
//!
//! The synthetic relevance labels stand in for an external click model: the
//! most relevant items are the highest-quality ones after a small amount of
//! seeded noise, so precision@k rewards quality-aware selection.

use std::collections::HashMap;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterModel, KMeansConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::params::{Criterion, SelectionParams, SelectionResult, StageTimings};
use crate::seed;
use crate::selectors::{self, BaselineKind, DgdsParams, MussParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityModel {
    /// Qualities uniform in `(0, 1]`, independent of the blob.
    #[default]
    Uniform,
    /// Each blob has its own mean quality.
    BlobBiased,
}

impl FromStr for QualityModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(QualityModel::Uniform),
            "blob-biased" | "blob_biased" => Ok(QualityModel::BlobBiased),
            other => Err(Error::param(format!("unknown quality model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub dim: usize,
    pub blobs: usize,
    /// Within-blob standard deviation per coordinate.
    pub blob_spread: f64,
    /// Standard deviation of blob centers per coordinate.
    pub blob_separation: f64,
    pub quality_model: QualityModel,
    /// Fraction of items labeled relevant. Zero produces an unlabeled dataset.
    pub relevant_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 1000,
            dim: 8,
            blobs: 4,
            blob_spread: 0.1,
            blob_separation: 1.0,
            quality_model: QualityModel::Uniform,
            relevant_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::param("n and dim must be at least 1"));
        }
        if self.blobs == 0 || self.blobs > self.n {
            return Err(Error::param(format!("blobs must lie in 1..={}, got {}", self.n, self.blobs)));
        }
        if !(self.blob_spread > 0.0 && self.blob_spread.is_finite()) {
            return Err(Error::param("blob spread must be positive"));
        }
        if !(self.blob_separation >= 0.0 && self.blob_separation.is_finite()) {
            return Err(Error::param("blob separation must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.relevant_fraction) {
            return Err(Error::param("relevant fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Standard deviation of per-item quality around the blob mean.
const BLOB_QUALITY_STD: f64 = 0.1;
/// Noise added to quality before ranking items for relevance labels.
const LABEL_NOISE_STD: f64 = 0.05;
const MIN_QUALITY: f64 = 1e-3;

/// Generates the dataset together with each item's mixture component.
/// Item `i` belongs to component `i mod blobs`.
pub fn generate_with_components(spec: &SyntheticSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let mut rng = seed::rng(seed::derive_seed(spec.seed, "generate", 0));
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let centers: Vec<f64> =
        (0..spec.blobs * spec.dim).map(|_| spec.blob_separation * std_normal.sample(&mut rng)).collect();
    let blob_quality: Vec<f64> = (0..spec.blobs).map(|_| rng.random_range(0.15..0.85)).collect();

    let mut embeddings = Vec::with_capacity(spec.n * spec.dim);
    let mut qualities = Vec::with_capacity(spec.n);
    let mut components = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let b = i % spec.blobs;
        let center = &centers[b * spec.dim..(b + 1) * spec.dim];
        embeddings.extend(center.iter().map(|c| c + spec.blob_spread * std_normal.sample(&mut rng)));
        let q = match spec.quality_model {
            QualityModel::Uniform => 1.0 - rng.random_range(0.0..1.0),
            QualityModel::BlobBiased => {
                (blob_quality[b] + BLOB_QUALITY_STD * std_normal.sample(&mut rng)).clamp(MIN_QUALITY, 1.0)
            }
        };
        qualities.push(q);
        components.push(b);
    }

    let labels = (spec.relevant_fraction > 0.0).then(|| {
        let mut label_rng = seed::rng(seed::derive_seed(spec.seed, "labels", 0));
        let noisy: Vec<f64> =
            qualities.iter().map(|q| q + LABEL_NOISE_STD * std_normal.sample(&mut label_rng)).collect();
        let mut order: Vec<usize> = (0..spec.n).collect();
        order.sort_unstable_by(|a, b| noisy[*b].total_cmp(&noisy[*a]).then(a.cmp(b)));
        let relevant = (spec.relevant_fraction * spec.n as f64).round() as usize;
        let mut labels = vec![false; spec.n];
        for &i in &order[..relevant] {
            labels[i] = true;
        }
        labels
    });

    Ok((Dataset::new(spec.dim, embeddings, qualities, labels)?, components))
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    generate_with_components(spec).map(|(ds, _)| ds)
}

/// Fraction of selected items labeled relevant.
pub fn precision_at_k(ds: &Dataset, result: &SelectionResult) -> Result<f64> {
    let labels = ds.labels().ok_or(Error::MissingLabels)?;
    if result.selected.is_empty() {
        return Ok(0.0);
    }
    ds.check_subset(&result.selected)?;
    let hits = result.selected.iter().filter(|&&i| labels[i]).count();
    Ok(hits as f64 / result.selected.len() as f64)
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let pairs = |c: u64| (c * c.saturating_sub(1) / 2) as f64;
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n as u64);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mmr,
    Muss,
    MussPrime,
    Dgds,
    RandA,
    RandB,
    Random,
    Topk,
    ClusterReps,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Mmr,
        Method::Muss,
        Method::MussPrime,
        Method::Dgds,
        Method::RandA,
        Method::RandB,
        Method::Random,
        Method::Topk,
        Method::ClusterReps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mmr => "mmr",
            Method::Muss => "muss",
            Method::MussPrime => "muss-prime",
            Method::Dgds => "dgds",
            Method::RandA => "rand-a",
            Method::RandB => "rand-b",
            Method::Random => "random",
            Method::Topk => "topk",
            Method::ClusterReps => "cluster-reps",
        }
    }

    fn is_multilevel(self) -> bool {
        matches!(self, Method::Muss | Method::MussPrime | Method::RandA | Method::RandB)
    }

    fn needs_model(self) -> bool {
        matches!(self, Method::Muss | Method::MussPrime | Method::RandA)
    }

    fn uses_partitions(self) -> bool {
        self.is_multilevel() || self == Method::Dgds
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown method {s:?}")))
    }
}

/// Parameter values swept by [`run_benchmark`]. Each method sweeps only the
/// parameters it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchGrid {
    pub k: usize,
    pub k_within: Vec<usize>,
    pub lambda: Vec<f64>,
    pub lambda_c: Vec<f64>,
    pub l: Vec<usize>,
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub grid: BenchGrid,
    pub repeats: usize,
    pub seed: u64,
    pub workers: usize,
    /// Run and discard one untimed selection per (method, cell).
    pub warmup: bool,
    pub criterion: Criterion,
    pub normalize_by_size: bool,
    pub quality_weight: f64,
    pub kmeans_max_iters: usize,
}

impl BenchConfig {
    pub fn new(methods: Vec<Method>, grid: BenchGrid, repeats: usize, seed: u64) -> Self {
        BenchConfig {
            methods,
            grid,
            repeats,
            seed,
            workers: 1,
            warmup: true,
            criterion: Criterion::SumDistance,
            normalize_by_size: true,
            quality_weight: 0.0,
            kmeans_max_iters: 100,
        }
    }
}

/// One parameter combination for one method. Unused parameters are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub k: usize,
    pub lambda: f64,
    pub lambda_c: Option<f64>,
    pub l: Option<usize>,
    pub m: Option<usize>,
    pub k_within: Option<usize>,
}

fn cells_for(method: Method, grid: &BenchGrid) -> Vec<Cell> {
    let opt = |used: bool, v: &[f64]| -> Vec<Option<f64>> {
        if used { v.iter().map(|&x| Some(x)).collect() } else { vec![None] }
    };
    let opt_n = |used: bool, v: &[usize]| -> Vec<Option<usize>> {
        if used { v.iter().map(|&x| Some(x)).collect() } else { vec![None] }
    };
    let mut cells = Vec::new();
    for &lambda in &grid.lambda {
        for lambda_c in opt(method.is_multilevel(), &grid.lambda_c) {
            for l in opt_n(method.uses_partitions(), &grid.l) {
                for m in opt_n(method.is_multilevel(), &grid.m) {
                    for k_within in opt_n(method.uses_partitions(), &grid.k_within) {
                        cells.push(Cell { k: grid.k, lambda, lambda_c, l, m, k_within });
                    }
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Standard error of the mean; absent with fewer than two samples.
    pub stderr: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = (values.len() >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        });
        Some(Stat { mean, stderr })
    }
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    Some(clustering::median(&mut v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub cell: Cell,
    pub repeat: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    pub objective: f64,
    pub objective_mean_scaled: f64,
    pub quality_mean: f64,
    pub diversity_mean: f64,
    pub wall_time_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_times: Option<StageTimings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub selected: Vec<usize>,
}

/// Aggregate over the repeats of one (method, cell). Objective, quality and
/// diversity are mean-scaled: `Q/k`, `D/(k(k−1))` and `λ·Q̄ + (1−λ)·D̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub cell: Cell,
    pub runs: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub precision: Option<Stat>,
    pub objective_mean_scaled: Option<Stat>,
    pub quality_mean: Option<Stat>,
    pub diversity_mean: Option<Stat>,
    pub wall_time_ms: Option<Stat>,
    pub wall_time_median_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering_ms: Option<Stat>,
    /// Mean per-stage times, for multi-stage methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_times: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub convention: String,
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub runs: Vec<RunRecord>,
}

impl BenchReport {
    pub fn row(&self, method: Method) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Caches fitted models so every multilevel method in a repeat shares one
/// clustering (and paired comparisons see the same clusters).
struct ModelCache<'a> {
    ds: &'a Dataset,
    seed: u64,
    quality_weight: f64,
    max_iters: usize,
    models: HashMap<(usize, usize), (ClusterModel, f64)>,
}

impl ModelCache<'_> {
    fn get(&mut self, l: usize, repeat: usize) -> Result<&(ClusterModel, f64)> {
        if !self.models.contains_key(&(l, repeat)) {
            let s = seed::derive_seed(seed::derive_seed(self.seed, "clustering", l as u64), "repeat", repeat as u64);
            let cfg = KMeansConfig::new(l, s)
                .with_quality_weight(self.quality_weight)
                .with_max_iters(self.max_iters);
            let t = Instant::now();
            let model = clustering::kmeans_fit(self.ds, &cfg)?;
            let ms = t.elapsed().as_secs_f64() * 1e3;
            self.models.insert((l, repeat), (model, ms));
        }
        Ok(&self.models[&(l, repeat)])
    }
}

fn missing(name: &str) -> Error {
    Error::param(format!("grid value {name} is required for this method"))
}

fn run_once(
    ds: &Dataset,
    method: Method,
    cell: &Cell,
    config: &BenchConfig,
    run_seed: u64,
    model: Option<&ClusterModel>,
) -> Result<SelectionResult> {
    let item = SelectionParams {
        k: cell.k,
        lambda: cell.lambda,
        criterion: config.criterion,
        sigma: 1.0,
        normalize_by_size: config.normalize_by_size,
    };
    let muss = || -> Result<MussParams> {
        let mut p = MussParams::new(
            cell.k,
            cell.k_within.ok_or_else(|| missing("k_within"))?,
            cell.l.ok_or_else(|| missing("l"))?,
            cell.m.ok_or_else(|| missing("m"))?,
            cell.lambda,
        );
        p.lambda_c = cell.lambda_c.ok_or_else(|| missing("lambda_c"))?;
        p.criterion = config.criterion;
        p.normalize_by_size = config.normalize_by_size;
        p.workers = config.workers;
        p.seed = run_seed;
        if method == Method::MussPrime {
            p.sigma_final = 0.5;
        }
        Ok(p)
    };
    let k = cell.k.min(ds.len());
    match method {
        Method::Mmr => selectors::mmr_select(ds, &item),
        Method::Muss | Method::MussPrime => selectors::muss_select(ds, model.expect("model"), &muss()?),
        Method::RandA => selectors::ablation_rand_a(ds, model.expect("model"), &muss()?),
        Method::RandB => selectors::ablation_rand_b(ds, &muss()?),
        Method::Dgds => {
            let mut p = DgdsParams::new(
                cell.k,
                cell.k_within.ok_or_else(|| missing("k_within"))?,
                cell.l.ok_or_else(|| missing("l"))?,
                cell.lambda,
            );
            p.criterion = config.criterion;
            p.normalize_by_size = config.normalize_by_size;
            p.workers = config.workers;
            p.seed = run_seed;
            selectors::dgds_select(ds, &p)
        }
        Method::Random => selectors::baseline_select(ds, BaselineKind::Random, k, cell.lambda, run_seed),
        Method::Topk => selectors::baseline_select(ds, BaselineKind::TopkQuality, k, cell.lambda, run_seed),
        Method::ClusterReps => selectors::baseline_select(ds, BaselineKind::ClusterReps, k, cell.lambda, run_seed),
    }
}

/// Runs every method × grid cell × repeat sequentially.
///
/// Run seeds are `derive_seed(derive_seed(master, method, cell), "repeat", r)`,
/// so adding a method or a cell never changes the seeds of the others.
/// Clustering is fitted once per (l, repeat) and timed separately from the
/// query-time stages. A failing run is recorded and the harness continues.
pub fn run_benchmark(ds: &Dataset, config: &BenchConfig) -> Result<BenchReport> {
    if config.methods.is_empty() {
        return Err(Error::param("at least one method is required"));
    }
    if config.repeats == 0 {
        return Err(Error::param("repeats must be at least 1"));
    }
    let mut cache = ModelCache {
        ds,
        seed: config.seed,
        quality_weight: config.quality_weight,
        max_iters: config.kmeans_max_iters,
        models: HashMap::new(),
    };
    let mut rows = Vec::new();
    let mut runs = Vec::new();

    for &method in &config.methods {
        for (ci, cell) in cells_for(method, &config.grid).into_iter().enumerate() {
            let cell_seed = seed::derive_seed(config.seed, method.name(), ci as u64);
            let mut cell_runs = Vec::with_capacity(config.repeats);
            let mut warmed = !config.warmup;
            for repeat in 0..config.repeats {
                let run_seed = seed::derive_seed(cell_seed, "repeat", repeat as u64);
                let model = match (method.needs_model(), cell.l) {
                    (true, Some(l)) => match cache.get(l, repeat) {
                        Ok((m, ms)) => Some((m.clone(), *ms)),
                        Err(e) => {
                            cell_runs.push(failed_run(method, &cell, repeat, run_seed, e));
                            continue;
                        }
                    },
                    _ => None,
                };
                let model_ref = model.as_ref().map(|(m, _)| m);
                if !warmed {
                    let _ = run_once(ds, method, &cell, config, run_seed, model_ref);
                    warmed = true;
                }
                let rec = match run_once(ds, method, &cell, config, run_seed, model_ref) {
                    Ok(r) => RunRecord {
                        method,
                        cell,
                        repeat,
                        seed: run_seed,
                        precision: ds.has_labels().then(|| precision_at_k(ds, &r)).transpose()?,
                        objective: r.objective,
                        objective_mean_scaled: r.objective_mean_scaled,
                        quality_mean: r.quality_mean,
                        diversity_mean: r.diversity_mean,
                        wall_time_ms: r.wall_time_ms,
                        clustering_ms: model.as_ref().map(|(_, ms)| *ms),
                        stage_times: r.stage_times,
                        error: None,
                        selected: r.selected,
                    },
                    Err(e) => failed_run(method, &cell, repeat, run_seed, e),
                };
                cell_runs.push(rec);
            }
            rows.push(aggregate(method, cell, &cell_runs));
            runs.extend(cell_runs);
        }
    }
    Ok(BenchReport { convention: "mean_scaled".into(), config: config.clone(), rows, runs })
}

fn failed_run(method: Method, cell: &Cell, repeat: usize, seed: u64, e: Error) -> RunRecord {
    RunRecord {
        method,
        cell: *cell,
        repeat,
        seed,
        precision: None,
        objective: f64::NAN,
        objective_mean_scaled: f64::NAN,
        quality_mean: f64::NAN,
        diversity_mean: f64::NAN,
        wall_time_ms: 0.0,
        clustering_ms: None,
        stage_times: None,
        error: Some(e.to_string()),
        selected: Vec::new(),
    }
}

fn aggregate(method: Method, cell: Cell, runs: &[RunRecord]) -> BenchRow {
    let ok: Vec<&RunRecord> = runs.iter().filter(|r| r.error.is_none()).collect();
    let col = |f: fn(&RunRecord) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
    let precision: Vec<f64> = ok.iter().filter_map(|r| r.precision).collect();
    let clustering: Vec<f64> = ok.iter().filter_map(|r| r.clustering_ms).collect();
    let stages: Vec<StageTimings> = ok.iter().filter_map(|r| r.stage_times).collect();
    let stage_times = (!stages.is_empty()).then(|| {
        let n = stages.len() as f64;
        let mean = |f: fn(&StageTimings) -> f64| stages.iter().map(f).sum::<f64>() / n;
        StageTimings {
            clustering_ms: None,
            partition_ms: mean(|s| s.partition_ms),
            cluster_selection_ms: mean(|s| s.cluster_selection_ms),
            within_ms: mean(|s| s.within_ms),
            top_quality_ms: mean(|s| s.top_quality_ms),
            final_ms: mean(|s| s.final_ms),
        }
    });
    let wall = col(|r| r.wall_time_ms);
    BenchRow {
        method,
        cell,
        runs: ok.len(),
        failures: runs.len() - ok.len(),
        error: runs.iter().find_map(|r| r.error.clone()),
        precision: Stat::of(&precision),
        objective_mean_scaled: Stat::of(&col(|r| r.objective_mean_scaled)),
        quality_mean: Stat::of(&col(|r| r.quality_mean)),
        diversity_mean: Stat::of(&col(|r| r.diversity_mean)),
        wall_time_median_ms: median(&wall),
        wall_time_ms: Stat::of(&wall),
        clustering_ms: Stat::of(&clustering),
        stage_times,
    }
}
