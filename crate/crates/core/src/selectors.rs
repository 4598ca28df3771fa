//! End-to-end selection strategies.
//!
//! - [`muss_select`]: greedy over cluster summaries, greedy within each chosen
//!   cluster, then a final greedy over the union of those picks and the
//!   global top-k quality items.
//! - [`dgds_select`]: greedy within random balanced partitions, then a final
//!   greedy over the union of partition picks.
//! - [`ablation_rand_a`] / [`ablation_rand_b`]: the multilevel pipeline with
//!   randomly chosen clusters, or with random partitions in place of k-means.
//! - [`baseline_select`]: random, top-k quality and cluster representatives.
//!
//! Per-cluster and per-partition work runs on up to `workers` threads. Results
//! are merged in ascending cluster/partition index, so the output does not
//! depend on the worker count.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterModel, ClusterSummary, KMeansConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::greedy::{greedy_select, greedy_select_sigma_sweep, greedy_trace};
use crate::params::{elapsed_ms, Criterion, ParamsEcho, SelectionParams, SelectionResult, StageTimings};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MussParams {
    pub k: usize,
    /// Items picked inside each selected cluster (`k′`).
    pub k_within: usize,
    pub l: usize,
    /// Clusters to select.
    pub m: usize,
    pub lambda: f64,
    pub lambda_c: f64,
    /// Overrides `lambda` for the within-cluster stage only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_within: Option<f64>,
    /// Quality scaler of the final stage: 1 for MUSS, 0.5 for MUSS′.
    pub sigma_final: f64,
    /// Run the final stage as a σ ∈ {0, 0.5, 1} sweep (overrides `sigma_final`).
    #[serde(default)]
    pub sigma_sweep: bool,
    pub criterion: Criterion,
    pub normalize_by_size: bool,
    pub workers: usize,
    pub seed: u64,
}

impl MussParams {
    pub fn new(k: usize, k_within: usize, l: usize, m: usize, lambda: f64) -> Self {
        MussParams {
            k,
            k_within,
            l,
            m,
            lambda,
            lambda_c: lambda,
            lambda_within: None,
            sigma_final: 1.0,
            sigma_sweep: false,
            criterion: Criterion::SumDistance,
            normalize_by_size: true,
            workers: 1,
            seed: 0,
        }
    }

    /// MUSS′ in the bound-checking convention: σ_final = 0.5, unnormalized.
    pub fn prime(mut self) -> Self {
        self.sigma_final = 0.5;
        self.normalize_by_size = false;
        self
    }

    pub fn with_lambda_c(mut self, lambda_c: f64) -> Self {
        self.lambda_c = lambda_c;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize_by_size = normalize;
        self
    }

    fn lambda_within(&self) -> f64 {
        self.lambda_within.unwrap_or(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k_within == 0 || self.m == 0 || self.l == 0 {
            return Err(Error::param("k, k_within, l and m must all be at least 1"));
        }
        for (name, v) in [("lambda", self.lambda), ("lambda_c", self.lambda_c), ("lambda_within", self.lambda_within())] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.sigma_final.is_finite() && self.sigma_final >= 0.0) {
            return Err(Error::param("sigma_final must be finite and >= 0"));
        }
        if self.workers == 0 {
            return Err(Error::param("workers must be at least 1"));
        }
        Ok(())
    }

    fn item_params(&self, k: usize, lambda: f64, sigma: f64) -> SelectionParams {
        SelectionParams {
            k,
            lambda,
            criterion: self.criterion,
            sigma,
            normalize_by_size: self.normalize_by_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgdsParams {
    pub k: usize,
    pub k_within: usize,
    pub l: usize,
    pub lambda: f64,
    pub criterion: Criterion,
    pub normalize_by_size: bool,
    pub workers: usize,
    pub seed: u64,
}

impl DgdsParams {
    pub fn new(k: usize, k_within: usize, l: usize, lambda: f64) -> Self {
        DgdsParams {
            k,
            k_within,
            l,
            lambda,
            criterion: Criterion::SumDistance,
            normalize_by_size: true,
            workers: 1,
            seed: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize_by_size = normalize;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k_within == 0 || self.l == 0 {
            return Err(Error::param("k, k_within and l must all be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if self.workers == 0 {
            return Err(Error::param("workers must be at least 1"));
        }
        Ok(())
    }

    fn item_params(&self, k: usize) -> SelectionParams {
        SelectionParams {
            k,
            lambda: self.lambda,
            criterion: self.criterion,
            sigma: 1.0,
            normalize_by_size: self.normalize_by_size,
        }
    }
}

/// Intermediate sets of a multilevel run, for inspection and bound checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MussOutcome {
    pub result: SelectionResult,
    /// Cluster ids chosen by the cluster-level stage, in pick order.
    pub selected_clusters: Vec<usize>,
    /// Picks inside each chosen cluster, in ascending cluster id.
    pub cluster_picks: Vec<Vec<usize>>,
    /// Global top-k quality ids.
    pub top_quality: Vec<usize>,
    /// Deduplicated, sorted pool of the final stage.
    pub final_pool: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgdsOutcome {
    pub result: SelectionResult,
    pub partitions: Vec<Vec<usize>>,
    pub partition_picks: Vec<Vec<usize>>,
    pub final_pool: Vec<usize>,
}

/// Applies `f` to every element, on up to `workers` threads, keeping order.
fn map_workers<T, R, F>(workers: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.min(items.len()))
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}

/// Ids of the `k` highest-quality items, best first, ties to the smaller id.
pub fn top_k_quality(ds: &Dataset, k: usize) -> Vec<usize> {
    let k = k.min(ds.len());
    if k == 0 {
        return Vec::new();
    }
    let q = ds.qualities();
    let order = |a: &usize, b: &usize| q[*b].total_cmp(&q[*a]).then(a.cmp(b));
    let mut ids: Vec<usize> = (0..ds.len()).collect();
    if k < ids.len() {
        ids.select_nth_unstable_by(k - 1, order);
        ids.truncate(k);
    }
    ids.sort_unstable_by(order);
    ids
}

enum ClusterChoice {
    Greedy,
    Random(u64),
}

fn cluster_level_dataset(ds: &Dataset, summaries: &[ClusterSummary]) -> Result<Dataset> {
    let mut emb = Vec::with_capacity(summaries.len() * ds.dim());
    for s in summaries {
        emb.extend_from_slice(&s.centroid);
    }
    let q = summaries.iter().map(|s| s.median_quality).collect();
    Dataset::new(ds.dim(), emb, q, None)
}

fn multilevel(
    ds: &Dataset,
    summaries: &[ClusterSummary],
    params: &MussParams,
    choice: ClusterChoice,
) -> Result<MussOutcome> {
    params.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();

    let m = if params.m > summaries.len() {
        warnings.push(format!(
            "m = {} exceeds the {} available clusters; clamped",
            params.m,
            summaries.len()
        ));
        summaries.len()
    } else {
        params.m
    };

    // Stage 1: choose clusters.
    let t = Instant::now();
    let chosen: Vec<usize> = match choice {
        ClusterChoice::Greedy => {
            let cds = cluster_level_dataset(ds, summaries)?;
            let pool: Vec<usize> = (0..summaries.len()).collect();
            let p = SelectionParams::proof_convention(m, params.lambda_c);
            greedy_trace(&cds, &pool, &p)?.picks
        }
        ClusterChoice::Random(s) => {
            let mut picked = index::sample(&mut seed::rng(s), summaries.len(), m).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    timings.cluster_selection_ms = elapsed_ms(t);

    // Stage 2: greedy within each chosen cluster.
    let t = Instant::now();
    let mut canonical = chosen.clone();
    canonical.sort_unstable();
    let within = params.item_params(params.k_within, params.lambda_within(), 1.0);
    let cluster_picks = map_workers(params.workers, &canonical, |&c| {
        greedy_trace(ds, &summaries[c].member_ids, &within).map(|t| t.picks)
    })?;
    timings.within_ms = elapsed_ms(t);

    // Stage 3: global top-k quality.
    let t = Instant::now();
    let top_quality = top_k_quality(ds, params.k);
    timings.top_quality_ms = elapsed_ms(t);

    // Stage 4: final greedy over the union.
    let t = Instant::now();
    let pool: BTreeSet<usize> = cluster_picks.iter().flatten().chain(&top_quality).copied().collect();
    let final_pool: Vec<usize> = pool.into_iter().collect();
    let final_params = params.item_params(params.k, params.lambda, params.sigma_final);
    let picks = if params.sigma_sweep {
        greedy_select_sigma_sweep(ds, &final_pool, &final_params)?.selected
    } else {
        greedy_trace(ds, &final_pool, &final_params)?.picks
    };
    timings.final_ms = elapsed_ms(t);

    let mut result = SelectionResult::evaluate(ds, picks, params.lambda, elapsed_ms(start), ParamsEcho::Muss(*params))?;
    result.stage_times = Some(timings);
    result.warnings = warnings;
    Ok(MussOutcome {
        result,
        selected_clusters: chosen.into_iter().map(|c| summaries[c].cluster_id).collect(),
        cluster_picks,
        top_quality,
        final_pool,
    })
}

fn check_model(model: &ClusterModel, ds: &Dataset, params: &MussParams) -> Result<Vec<ClusterSummary>> {
    if model.l != params.l {
        return Err(Error::param(format!("model has {} clusters but l = {}", model.l, params.l)));
    }
    clustering::summarize_clusters(ds, model)
}

/// Multilevel selection over a fitted cluster model.
pub fn muss_select_detailed(ds: &Dataset, model: &ClusterModel, params: &MussParams) -> Result<MussOutcome> {
    let summaries = check_model(model, ds, params)?;
    multilevel(ds, &summaries, params, ClusterChoice::Greedy)
}

pub fn muss_select(ds: &Dataset, model: &ClusterModel, params: &MussParams) -> Result<SelectionResult> {
    muss_select_detailed(ds, model, params).map(|o| o.result)
}

/// Fits k-means with `params.l` clusters and runs [`muss_select`]; the
/// clustering time is reported as its own stage.
pub fn muss_fit_select(ds: &Dataset, params: &MussParams, quality_weight: f64) -> Result<(ClusterModel, SelectionResult)> {
    params.validate()?;
    let t = Instant::now();
    let cfg = KMeansConfig::new(params.l, seed::derive_seed(params.seed, "kmeans", 0)).with_quality_weight(quality_weight);
    let model = clustering::kmeans_fit(ds, &cfg)?;
    let clustering_ms = elapsed_ms(t);
    let mut result = muss_select(ds, &model, params)?;
    if let Some(st) = result.stage_times.as_mut() {
        st.clustering_ms = Some(clustering_ms);
    }
    Ok((model, result))
}

/// As [`muss_select`], but the `m` clusters are drawn uniformly at random.
pub fn ablation_rand_a(ds: &Dataset, model: &ClusterModel, params: &MussParams) -> Result<SelectionResult> {
    let summaries = check_model(model, ds, params)?;
    let s = seed::derive_seed(params.seed, "rand-a", 0);
    multilevel(ds, &summaries, params, ClusterChoice::Random(s)).map(|o| o.result)
}

/// The multilevel pipeline over a random balanced partition instead of
/// k-means clusters. Partition centroids are member means.
pub fn ablation_rand_b(ds: &Dataset, params: &MussParams) -> Result<SelectionResult> {
    params.validate()?;
    let t = Instant::now();
    let parts = clustering::random_partition(ds.len(), params.l, seed::derive_seed(params.seed, "rand-b", 0))?;
    let model = ClusterModel::from_partition(ds, &parts)?;
    let summaries = clustering::summarize_clusters(ds, &model)?;
    let partition_ms = elapsed_ms(t);
    let mut out = multilevel(ds, &summaries, params, ClusterChoice::Greedy)?.result;
    out.wall_time_ms += partition_ms;
    if let Some(st) = out.stage_times.as_mut() {
        st.partition_ms = partition_ms;
    }
    Ok(out)
}

pub fn dgds_select_detailed(ds: &Dataset, params: &DgdsParams) -> Result<DgdsOutcome> {
    params.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let partitions = clustering::random_partition(ds.len(), params.l, seed::derive_seed(params.seed, "dgds", 0))?;
    timings.partition_ms = elapsed_ms(t);

    let t = Instant::now();
    let within = params.item_params(params.k_within);
    let partition_picks =
        map_workers(params.workers, &partitions, |part| greedy_trace(ds, part, &within).map(|t| t.picks))?;
    timings.within_ms = elapsed_ms(t);

    let t = Instant::now();
    let pool: BTreeSet<usize> = partition_picks.iter().flatten().copied().collect();
    let final_pool: Vec<usize> = pool.into_iter().collect();
    let picks = greedy_trace(ds, &final_pool, &params.item_params(params.k))?.picks;
    timings.final_ms = elapsed_ms(t);

    let mut result = SelectionResult::evaluate(ds, picks, params.lambda, elapsed_ms(start), ParamsEcho::Dgds(*params))?;
    result.stage_times = Some(timings);
    Ok(DgdsOutcome { result, partitions, partition_picks, final_pool })
}

pub fn dgds_select(ds: &Dataset, params: &DgdsParams) -> Result<SelectionResult> {
    dgds_select_detailed(ds, params).map(|o| o.result)
}

/// Monolithic greedy over the whole dataset.
pub fn mmr_select(ds: &Dataset, params: &SelectionParams) -> Result<SelectionResult> {
    let pool: Vec<usize> = (0..ds.len()).collect();
    greedy_select(ds, &pool, params).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    TopkQuality,
    ClusterReps,
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(BaselineKind::Random),
            "topk" | "topk_quality" => Ok(BaselineKind::TopkQuality),
            "cluster-reps" | "cluster_reps" => Ok(BaselineKind::ClusterReps),
            other => Err(Error::param(format!("unknown baseline kind {other:?}"))),
        }
    }
}

/// Baselines that ignore diversity (or only use it implicitly through
/// clustering). `lambda` is used only to evaluate the result.
pub fn baseline_select(ds: &Dataset, kind: BaselineKind, k: usize, lambda: f64, seed: u64) -> Result<SelectionResult> {
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if k > ds.len() {
        return Err(Error::param(format!("k = {k} exceeds the {} available items", ds.len())));
    }
    let start = Instant::now();
    let selected = match kind {
        BaselineKind::Random => {
            let mut rng = seed::rng(seed::derive_seed(seed, "random", 0));
            index::sample(&mut rng, ds.len(), k).into_vec()
        }
        BaselineKind::TopkQuality => top_k_quality(ds, k),
        BaselineKind::ClusterReps => {
            let model = clustering::kmeans_fit(ds, &KMeansConfig::new(k, seed::derive_seed(seed, "kmeans", 0)))?;
            model
                .members()
                .iter()
                .map(|members| {
                    let mut best = members[0];
                    for &i in &members[1..] {
                        if ds.quality(i) > ds.quality(best) {
                            best = i;
                        }
                    }
                    best
                })
                .collect()
        }
    };
    let echo = ParamsEcho::Baseline { baseline: kind, k, lambda, seed };
    SelectionResult::evaluate(ds, selected, lambda, elapsed_ms(start), echo)
}

/// Constants of the multilevel approximation guarantee
/// `F(MUSS′) ≥ F(OPT)/α − r·β/α`, where
/// `α/2 = 5·k(k−1)/(m(m−1))·(1−λ)/(1−λ_c) + 2` and
/// `β = k(k−1)·[4(1−λ) + 5(1−λ)/(1−λ_c)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem5Bound {
    pub alpha: f64,
    pub beta: f64,
}

impl Theorem5Bound {
    pub fn new(k: usize, m: usize, lambda: f64, lambda_c: f64) -> Result<Self> {
        if k <= 1 {
            return Err(Error::precondition(format!("requires k > 1, got k = {k}")));
        }
        if m <= 1 {
            return Err(Error::precondition(format!("requires m > 1, got m = {m}")));
        }
        if k < m {
            return Err(Error::precondition(format!("requires k >= m, got k = {k}, m = {m}")));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::precondition(format!("requires 0 < lambda < 1, got {lambda}")));
        }
        if !(0.0..1.0).contains(&lambda_c) {
            return Err(Error::precondition(format!("requires 0 <= lambda_c < 1, got {lambda_c}")));
        }
        let kk = (k * (k - 1)) as f64;
        let mm = (m * (m - 1)) as f64;
        let ratio = (1.0 - lambda) / (1.0 - lambda_c);
        let alpha = 2.0 * (5.0 * kk / mm * ratio + 2.0);
        let beta = kk * (4.0 * (1.0 - lambda) + 5.0 * ratio);
        Ok(Theorem5Bound { alpha, beta })
    }

    /// Right-hand side `F(OPT)/α − r·β/α`.
    pub fn lower_bound(&self, f_opt: f64, radius: f64) -> f64 {
        f_opt / self.alpha - radius * self.beta / self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_ds(n: usize, dim: usize, s: u64) -> Dataset {
        let mut rng = seed::rng(s);
        let emb = (0..n * dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let q = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        Dataset::new(dim, emb, q, None).unwrap()
    }

    #[test]
    fn alpha_is_14_when_k_equals_m_and_lambdas_match() {
        let b = Theorem5Bound::new(5, 5, 0.5, 0.5).unwrap();
        assert_eq!(b.alpha, 14.0);
        for lambda in [0.1, 0.37, 0.9] {
            let b = Theorem5Bound::new(3, 3, lambda, lambda).unwrap();
            assert!((b.alpha / 2.0 - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_beta_direct_evaluation() {
        // α = 2·(5·(12/2)·1 + 2) = 64; β = 12·(4·0.5 + 5·1) = 84.
        let b = Theorem5Bound::new(4, 2, 0.5, 0.5).unwrap();
        assert_eq!(b.alpha, 64.0);
        assert_eq!(b.beta, 84.0);
        assert_eq!(b.lower_bound(128.0, 0.5), 2.0 - 42.0 / 64.0);
    }

    #[test]
    fn bound_preconditions() {
        assert!(matches!(Theorem5Bound::new(1, 1, 0.5, 0.5), Err(Error::Precondition(_))));
        assert!(matches!(Theorem5Bound::new(2, 3, 0.5, 0.5), Err(Error::Precondition(_))));
        assert!(matches!(Theorem5Bound::new(3, 2, 1.0, 0.5), Err(Error::Precondition(_))));
        assert!(matches!(Theorem5Bound::new(3, 2, 0.5, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn top_k_ties_and_order() {
        let ds = Dataset::new(1, vec![0.0; 5], vec![0.1, 0.9, 0.5, 0.9, 0.2], None).unwrap();
        assert_eq!(top_k_quality(&ds, 3), vec![1, 3, 2]);
        assert_eq!(top_k_quality(&ds, 10).len(), 5);
    }

    #[test]
    fn topk_baseline_example() {
        let ds = Dataset::new(1, vec![0.0, 1.0, 2.0], vec![0.1, 0.9, 0.5], None).unwrap();
        let r = baseline_select(&ds, BaselineKind::TopkQuality, 2, 0.5, 0).unwrap();
        assert_eq!(r.selected, vec![1, 2]);
        assert!("bogus".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn random_baseline_is_reproducible() {
        let ds = random_ds(50, 2, 1);
        let a = baseline_select(&ds, BaselineKind::Random, 10, 0.5, 7).unwrap();
        let b = baseline_select(&ds, BaselineKind::Random, 10, 0.5, 7).unwrap();
        assert_eq!(a.selected, b.selected);
        let set: BTreeSet<_> = a.selected.iter().collect();
        assert_eq!(set.len(), 10);
    }

    #[test]
    fn muss_collapses_to_monolithic_greedy() {
        for s in 0..10 {
            let ds = random_ds(40, 3, s);
            let params = MussParams::new(6, 40, 1, 1, 0.5).with_seed(s);
            let model = clustering::kmeans_fit(&ds, &KMeansConfig::new(1, s)).unwrap();
            let muss = muss_select(&ds, &model, &params).unwrap();
            let mono = mmr_select(&ds, &SelectionParams::new(6, 0.5)).unwrap();
            assert_eq!(muss.selected, mono.selected);
        }
    }

    #[test]
    fn muss_pool_bounded_and_contains_top_quality() {
        let ds = random_ds(300, 4, 3);
        let params = MussParams::new(10, 5, 12, 4, 0.5).with_seed(3);
        let model = clustering::kmeans_fit(&ds, &KMeansConfig::new(12, 3)).unwrap();
        let out = muss_select_detailed(&ds, &model, &params).unwrap();
        assert!(out.final_pool.len() <= 4 * 5 + 10);
        for id in &out.top_quality {
            assert!(out.final_pool.binary_search(id).is_ok());
        }
        assert_eq!(out.selected_clusters.len(), 4);
    }

    #[test]
    fn muss_clamps_m_with_warning() {
        let ds = random_ds(30, 2, 5);
        let model = clustering::kmeans_fit(&ds, &KMeansConfig::new(3, 5)).unwrap();
        let r = muss_select(&ds, &model, &MussParams::new(4, 2, 3, 7, 0.5)).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn muss_rejects_model_with_other_l() {
        let ds = random_ds(30, 2, 5);
        let model = clustering::kmeans_fit(&ds, &KMeansConfig::new(3, 5)).unwrap();
        assert!(muss_select(&ds, &model, &MussParams::new(4, 2, 4, 2, 0.5)).is_err());
    }

    #[test]
    fn rand_a_with_all_clusters_equals_muss() {
        let ds = random_ds(120, 3, 8);
        let model = clustering::kmeans_fit(&ds, &KMeansConfig::new(6, 8)).unwrap();
        let params = MussParams::new(8, 4, 6, 6, 0.5).with_seed(8);
        assert_eq!(
            ablation_rand_a(&ds, &model, &params).unwrap().selected,
            muss_select(&ds, &model, &params).unwrap().selected
        );
    }

    #[test]
    fn rand_b_single_partition_collapses() {
        let ds = random_ds(50, 3, 9);
        let params = MussParams::new(5, 50, 1, 1, 0.4);
        let mono = mmr_select(&ds, &SelectionParams::new(5, 0.4)).unwrap();
        assert_eq!(ablation_rand_b(&ds, &params).unwrap().selected, mono.selected);
    }

    #[test]
    fn dgds_single_partition_collapses() {
        let ds = random_ds(50, 3, 10);
        let params = DgdsParams::new(5, 5, 1, 0.5);
        let mono = mmr_select(&ds, &SelectionParams::new(5, 0.5)).unwrap();
        assert_eq!(dgds_select(&ds, &params).unwrap().selected, mono.selected);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let ds = random_ds(400, 4, 11);
        let model = clustering::kmeans_fit(&ds, &KMeansConfig::new(10, 11)).unwrap();
        let base = MussParams::new(12, 6, 10, 5, 0.5).with_seed(11);
        let d = DgdsParams::new(12, 6, 8, 0.5).with_seed(11);
        let muss1 = muss_select(&ds, &model, &base).unwrap().selected;
        let dgds1 = dgds_select(&ds, &d).unwrap().selected;
        for w in [2, 8] {
            assert_eq!(muss_select(&ds, &model, &base.with_workers(w)).unwrap().selected, muss1);
            assert_eq!(dgds_select(&ds, &d.with_workers(w)).unwrap().selected, dgds1);
        }
    }

    #[test]
    fn cluster_reps_one_per_blob() {
        // Four tight, far-apart blobs.
        let centers = [[0.0, 0.0], [100.0, 0.0], [0.0, 100.0], [100.0, 100.0]];
        let mut rng = seed::rng(2);
        let mut emb = Vec::new();
        let mut q = Vec::new();
        for c in centers {
            for _ in 0..10 {
                emb.push(c[0] + rng.random_range(-1.0..1.0));
                emb.push(c[1] + rng.random_range(-1.0..1.0));
                q.push(rng.random_range(0.0..1.0));
            }
        }
        let ds = Dataset::new(2, emb, q, None).unwrap();
        let r = baseline_select(&ds, BaselineKind::ClusterReps, 4, 0.5, 3).unwrap();
        let blobs: BTreeSet<usize> = r.selected.iter().map(|&i| i / 10).collect();
        assert_eq!(blobs.len(), 4);
    }
}
