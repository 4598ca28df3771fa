use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::objective::{self, MeanScaled};
use crate::selectors::{BaselineKind, DgdsParams, MussParams};

/// How the diversity part of the greedy criterion is aggregated over the
/// current selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `Σ_{u∈S} d(t, u)`, optionally divided by `|S|`.
    #[default]
    SumDistance,
    /// Classic MMR: `min_{u∈S} d(t, u)`.
    MinDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub k: usize,
    pub lambda: f64,
    pub criterion: Criterion,
    /// Multiplies the quality term of the greedy criterion. Never applied
    /// when the objective is evaluated.
    pub sigma: f64,
    /// Divide the distance sum by `|S|` during selection. Ignored by
    /// [`Criterion::MinDistance`].
    pub normalize_by_size: bool,
}

impl SelectionParams {
    pub fn new(k: usize, lambda: f64) -> Self {
        SelectionParams {
            k,
            lambda,
            criterion: Criterion::SumDistance,
            sigma: 1.0,
            normalize_by_size: true,
        }
    }

    /// The variant every approximation guarantee is stated for: unnormalized
    /// sum-distance criterion with an unscaled quality term.
    pub fn proof_convention(k: usize, lambda: f64) -> Self {
        SelectionParams { normalize_by_size: false, ..SelectionParams::new(k, lambda) }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_criterion(mut self, criterion: Criterion) -> Self {
        self.criterion = criterion;
        self
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize_by_size = normalize;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        objective::check_lambda(self.lambda)?;
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::param(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Wall time spent in each stage of a multi-stage selector, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    /// Only set when clustering ran as part of the call.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering_ms: Option<f64>,
    pub partition_ms: f64,
    pub cluster_selection_ms: f64,
    pub within_ms: f64,
    pub top_quality_ms: f64,
    pub final_ms: f64,
}

impl StageTimings {
    /// Sum of the query-time stages (clustering excluded).
    pub fn query_total_ms(&self) -> f64 {
        self.partition_ms + self.cluster_selection_ms + self.within_ms + self.top_quality_ms + self.final_ms
    }
}

/// Parameters a result was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamsEcho {
    Greedy(SelectionParams),
    Muss(MussParams),
    Dgds(DgdsParams),
    Baseline { baseline: BaselineKind, k: usize, lambda: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Item ids in pick order.
    pub selected: Vec<usize>,
    /// `F(S)` in the ordered-pair convention.
    pub objective: f64,
    pub quality_term: f64,
    pub diversity_term: f64,
    pub objective_mean_scaled: f64,
    pub quality_mean: f64,
    pub diversity_mean: f64,
    pub lambda: f64,
    pub wall_time_ms: f64,
    pub params: ParamsEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_times: Option<StageTimings>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SelectionResult {
    /// Evaluates `selected` under `lambda` and packages the result.
    pub fn evaluate(
        ds: &Dataset,
        selected: Vec<usize>,
        lambda: f64,
        wall_time_ms: f64,
        params: ParamsEcho,
    ) -> Result<Self> {
        let obj = objective::objective(ds, &selected, lambda)?;
        let mean = MeanScaled::from_objective(&obj, selected.len(), lambda);
        Ok(SelectionResult {
            selected,
            objective: obj.value,
            quality_term: obj.quality,
            diversity_term: obj.diversity,
            objective_mean_scaled: mean.objective,
            quality_mean: mean.quality,
            diversity_mean: mean.diversity,
            lambda,
            wall_time_ms,
            params,
            stage_times: None,
            warnings: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
