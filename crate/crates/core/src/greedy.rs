//! Greedy quality-plus-diversity selection.
//!
//! The first pick is the highest-quality candidate. Every later pick
//! maximizes `σ·λ·q(t) + (1 − λ)·G(t, S)`, where `G` is the (optionally
//! size-normalized) sum of distances to the current selection, or the
//! minimum distance for the classic MMR criterion. Per-candidate aggregates
//! are updated incrementally after each pick, so a run costs `O(k·|pool|)`
//! distance evaluations.
//!
//! Ties are broken towards the smallest id. The pool is sorted before
//! selection, which makes the output independent of pool order.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::objective;
use crate::params::{elapsed_ms, Criterion, ParamsEcho, SelectionParams, SelectionResult};

/// Per-step diagnostics of a greedy run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub picks: Vec<usize>,
    /// Criterion value of each pick, under the criterion actually used.
    pub gains: Vec<f64>,
    /// Number of candidates still available at each step.
    pub candidate_pool_sizes: Vec<usize>,
}

fn canonical_pool(ds: &Dataset, pool: &[usize]) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    ds.check_subset(pool)?;
    let mut ids = pool.to_vec();
    ids.sort_unstable();
    Ok(ids)
}

/// Runs the greedy loop and returns the picks without evaluating `F`.
pub fn greedy_trace(ds: &Dataset, pool: &[usize], params: &SelectionParams) -> Result<GreedyTrace> {
    params.validate()?;
    let cand = canonical_pool(ds, pool)?;
    let target = params.k.min(cand.len());
    let quality_weight = params.sigma * params.lambda;
    let distance_weight = 1.0 - params.lambda;

    let mut trace = GreedyTrace {
        picks: Vec::with_capacity(target),
        gains: Vec::with_capacity(target),
        candidate_pool_sizes: Vec::with_capacity(target),
    };
    let mut taken = vec![false; cand.len()];
    let init = match params.criterion {
        Criterion::SumDistance => 0.0,
        Criterion::MinDistance => f64::INFINITY,
    };
    let mut agg = vec![init; cand.len()];

    // Highest quality first; strict comparison keeps the smallest id.
    let mut first = 0;
    for i in 1..cand.len() {
        if ds.quality(cand[i]) > ds.quality(cand[first]) {
            first = i;
        }
    }
    taken[first] = true;
    trace.picks.push(cand[first]);
    trace.gains.push(quality_weight * ds.quality(cand[first]));
    trace.candidate_pool_sizes.push(cand.len());
    let mut last = cand[first];

    for step in 1..target {
        let last_emb = ds.embedding(last);
        for (i, &id) in cand.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let d = crate::dataset::euclidean(ds.embedding(id), last_emb);
            match params.criterion {
                Criterion::SumDistance => agg[i] += d,
                Criterion::MinDistance => agg[i] = agg[i].min(d),
            }
        }

        let normalize = params.criterion == Criterion::SumDistance && params.normalize_by_size;
        let mut best: Option<(usize, f64)> = None;
        for (i, &id) in cand.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let g = if normalize { agg[i] / step as f64 } else { agg[i] };
            let score = quality_weight * ds.quality(id) + distance_weight * g;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (i, score) = best.expect("target never exceeds the pool size");
        taken[i] = true;
        trace.picks.push(cand[i]);
        trace.gains.push(score);
        trace.candidate_pool_sizes.push(cand.len() - step);
        last = cand[i];
    }
    Ok(trace)
}

/// Greedy selection of `min(k, |pool|)` items from `pool`.
///
/// The returned objective is always `F` at the caller's λ with the
/// ordered-pair diversity sum, whatever σ and criterion were used to select.
pub fn greedy_select(
    ds: &Dataset,
    pool: &[usize],
    params: &SelectionParams,
) -> Result<(SelectionResult, GreedyTrace)> {
    let start = Instant::now();
    let trace = greedy_trace(ds, pool, params)?;
    let wall = elapsed_ms(start);
    let result =
        SelectionResult::evaluate(ds, trace.picks.clone(), params.lambda, wall, ParamsEcho::Greedy(*params))?;
    Ok((result, trace))
}

/// The quality scalers tried by [`greedy_select_sigma_sweep`].
pub const SWEEP_SIGMAS: [f64; 3] = [0.0, 0.5, 1.0];

/// Runs greedy with `σ ∈ {0, 0.5, 1}` and keeps the run with the largest `F`
/// (ties go to the smaller σ). `params.sigma` is ignored.
pub fn greedy_select_sigma_sweep(
    ds: &Dataset,
    pool: &[usize],
    params: &SelectionParams,
) -> Result<SelectionResult> {
    let start = Instant::now();
    let mut best: Option<SelectionResult> = None;
    for sigma in SWEEP_SIGMAS {
        let (run, _) = greedy_select(ds, pool, &params.with_sigma(sigma))?;
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    let mut best = best.expect("sweep is non-empty");
    best.wall_time_ms = elapsed_ms(start);
    Ok(best)
}

/// One excluded candidate checked against both greedy-output inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Entry {
    pub id: usize,
    /// `Q(S ∪ {t}) − Q(S) = q(t)`.
    pub quality_gain: f64,
    /// `F(S) / (kλ)`.
    pub quality_bound: f64,
    pub min_distance: f64,
    /// `2.5·F(S) / (k(k−1)(1−λ))`.
    pub distance_bound: f64,
    pub quality_slack: f64,
    pub distance_slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub k: usize,
    pub lambda: f64,
    pub objective: f64,
    pub entries: Vec<Lemma1Entry>,
    pub violations: usize,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn min_quality_slack(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.quality_slack).reduce(f64::min)
    }

    pub fn min_distance_slack(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.distance_slack).reduce(f64::min)
    }
}

/// Absolute tolerance used by every inequality check: `1e-9·max(1, |bound|)`.
pub(crate) fn leq_with_tolerance(lhs: f64, bound: f64) -> bool {
    lhs <= bound + 1e-9 * bound.abs().max(1.0)
}

/// Checks, for every `t ∈ pool \ S`, that `q(t) ≤ F(S)/(kλ)` and
/// `min_{z∈S} d(t, z) ≤ 2.5·F(S)/(k(k−1)(1−λ))`.
///
/// `result` must come from [`greedy_select`] with σ = 1 and the unnormalized
/// sum-distance criterion, and requires `k > 1` and `0 < λ < 1`.
pub fn check_lemma1(ds: &Dataset, pool: &[usize], result: &SelectionResult, lambda: f64) -> Result<Lemma1Report> {
    match &result.params {
        ParamsEcho::Greedy(p) => {
            if p.sigma != 1.0 {
                return Err(Error::precondition(format!("greedy must run with sigma = 1, got {}", p.sigma)));
            }
            if p.criterion != Criterion::SumDistance || p.normalize_by_size {
                return Err(Error::precondition("greedy must use the unnormalized sum-distance criterion"));
            }
            if p.lambda != lambda {
                return Err(Error::precondition(format!(
                    "result was selected with lambda = {}, checked with {lambda}",
                    p.lambda
                )));
            }
        }
        _ => return Err(Error::precondition("result must come from greedy_select")),
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::precondition(format!("requires lambda != 0 and lambda != 1 (0 < lambda < 1), got {lambda}")));
    }
    let k = result.selected.len();
    if k < 2 {
        return Err(Error::precondition(format!("requires k > 1, got k = {k}")));
    }
    ds.check_subset(pool)?;

    let f = objective::objective(ds, &result.selected, lambda)?.value;
    let quality_bound = f / (k as f64 * lambda);
    let distance_bound = 2.5 * f / ((k * (k - 1)) as f64 * (1.0 - lambda));

    let mut selected_mask = vec![false; ds.len()];
    for &s in &result.selected {
        selected_mask[s] = true;
    }
    let mut leftover: Vec<usize> = pool.iter().copied().filter(|&t| !selected_mask[t]).collect();
    leftover.sort_unstable();

    let entries: Vec<Lemma1Entry> = leftover
        .into_iter()
        .map(|t| {
            let quality_gain = ds.quality(t);
            let min_distance =
                result.selected.iter().map(|&z| ds.distance(t, z)).fold(f64::INFINITY, f64::min);
            Lemma1Entry {
                id: t,
                quality_gain,
                quality_bound,
                min_distance,
                distance_bound,
                quality_slack: quality_bound - quality_gain,
                distance_slack: distance_bound - min_distance,
                pass: leq_with_tolerance(quality_gain, quality_bound)
                    && leq_with_tolerance(min_distance, distance_bound),
            }
        })
        .collect();
    let violations = entries.iter().filter(|e| !e.pass).count();
    Ok(Lemma1Report { k, lambda, objective: f, entries, violations })
}
