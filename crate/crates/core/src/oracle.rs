//! Exhaustive optimum on small instances and the bound-verification harness.
//!
//! All objective values here use the ordered-pair diversity sum and the
//! unnormalized greedy criterion, the convention in which the approximation
//! guarantees are stated.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, KMeansConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::greedy::{check_lemma1, greedy_select, leq_with_tolerance, SWEEP_SIGMAS};
use crate::objective::{self, Objective};
use crate::params::SelectionParams;
use crate::seed;
use crate::selectors::{self, DgdsParams, MussParams, Theorem5Bound};

pub const DEFAULT_SUBSET_CAP: u128 = 2_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    /// Ascending ids of the maximizer.
    pub set: Vec<usize>,
    pub objective: Objective,
    pub subsets_enumerated: u128,
}

pub fn opt_brute_force(ds: &Dataset, pool: &[usize], k: usize, lambda: f64) -> Result<OptResult> {
    opt_brute_force_capped(ds, pool, k, lambda, DEFAULT_SUBSET_CAP)
}

/// Enumerates every `k`-subset of `pool` in lexicographic id order and keeps
/// the first strict maximizer of `F`, so ties resolve to the
/// lexicographically smallest set.
pub fn opt_brute_force_capped(ds: &Dataset, pool: &[usize], k: usize, lambda: f64, cap: u128) -> Result<OptResult> {
    objective::objective(ds, &[], lambda)?;
    ds.check_subset(pool)?;
    if k == 0 || k > pool.len() {
        return Err(Error::param(format!("k = {k} must lie in 1..={}", pool.len())));
    }
    let count = binomial(pool.len(), k);
    if count > cap {
        return Err(Error::TooManySubsets { count, cap });
    }
    let mut ids = pool.to_vec();
    ids.sort_unstable();
    let p = ids.len();
    let mut dist = vec![0.0; p * p];
    for a in 0..p {
        for b in a + 1..p {
            let d = ds.distance(ids[a], ids[b]);
            dist[a * p + b] = d;
            dist[b * p + a] = d;
        }
    }

    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let mut half = 0.0;
        let mut q = 0.0;
        for (i, &a) in idx.iter().enumerate() {
            q += ds.quality(ids[a]);
            for &b in &idx[i + 1..] {
                half += dist[a * p + b];
            }
        }
        let f = lambda * q + (1.0 - lambda) * 2.0 * half;
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, idx.clone()));
        }

        // Next combination in lexicographic order.
        let mut i = k;
        while i > 0 && idx[i - 1] == p - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    let (_, best_idx) = best.expect("at least one subset");
    let set: Vec<usize> = best_idx.into_iter().map(|a| ids[a]).collect();
    let objective = objective::objective(ds, &set, lambda)?;
    Ok(OptResult { set, objective, subsets_enumerated: count })
}

/// Uniform points in `[0, 1)^dim` with qualities uniform in `[0, 1)`.
pub fn random_instance(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = seed::rng(seed);
    let emb = (0..n * dim).map(|_| rng.random_range(0.0..1.0)).collect();
    let q = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    Dataset::new(dim, emb, q, None).expect("generated values are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// One inequality evaluated on one instance. `slack ≥ 0` means satisfied:
/// `value − bound` for lower bounds, `bound − value` for upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckValue {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub status: CheckStatus,
    /// Non-binding checks are reported but never count as violations.
    pub binding: bool,
}

impl CheckValue {
    fn at_least(name: &str, value: f64, bound: f64, binding: bool) -> Self {
        let ok = leq_with_tolerance(bound, value);
        CheckValue {
            name: name.into(),
            value,
            bound,
            slack: value - bound,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            binding,
        }
    }

    fn at_most(name: &str, value: f64, bound: f64, binding: bool) -> Self {
        let ok = leq_with_tolerance(value, bound);
        CheckValue {
            name: name.into(),
            value,
            bound,
            slack: bound - value,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            binding,
        }
    }

    fn skipped(name: &str, binding: bool) -> Self {
        CheckValue { name: name.into(), value: 0.0, bound: 0.0, slack: 0.0, status: CheckStatus::Skipped, binding }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_opt: Option<f64>,
    /// Largest cluster radius, when clustering was part of the trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub checks: Vec<CheckValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub binding: bool,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub min_slack: Option<f64>,
}

/// Everything needed to replay a failing instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDump {
    pub n: usize,
    pub dim: usize,
    pub embeddings: Vec<f64>,
    pub qualities: Vec<f64>,
}

impl InstanceDump {
    fn of(ds: &Dataset) -> Self {
        InstanceDump {
            n: ds.len(),
            dim: ds.dim(),
            embeddings: ds.embeddings().to_vec(),
            qualities: ds.qualities().to_vec(),
        }
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.dim, self.embeddings.clone(), self.qualities.clone(), None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub seed: u64,
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub instance: InstanceDump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum SuiteConfig {
    Bounds { kinds: BoundKinds, suite: BoundSuite },
    Lemma1(LemmaSuite),
    Lemma8(LemmaSuite),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: SuiteConfig,
    pub trials: usize,
    pub summaries: Vec<CheckSummary>,
    pub records: Vec<TrialRecord>,
    pub violations: Vec<Violation>,
    pub elapsed_ms: f64,
}

impl VerifyReport {
    fn build(config: SuiteConfig, records: Vec<TrialRecord>, violations: Vec<Violation>, start: Instant) -> Self {
        let mut summaries: Vec<CheckSummary> = Vec::new();
        for rec in &records {
            for c in &rec.checks {
                let pos = match summaries.iter().position(|s| s.name == c.name) {
                    Some(pos) => pos,
                    None => {
                        summaries.push(CheckSummary {
                            name: c.name.clone(),
                            binding: c.binding,
                            passed: 0,
                            failed: 0,
                            skipped: 0,
                            min_slack: None,
                        });
                        summaries.len() - 1
                    }
                };
                let s = &mut summaries[pos];
                match c.status {
                    CheckStatus::Pass => s.passed += 1,
                    CheckStatus::Fail => s.failed += 1,
                    CheckStatus::Skipped => s.skipped += 1,
                }
                if c.status != CheckStatus::Skipped {
                    s.min_slack = Some(s.min_slack.map_or(c.slack, |m| m.min(c.slack)));
                }
            }
        }
        VerifyReport {
            config,
            trials: records.len(),
            summaries,
            records,
            violations,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self, name: &str) -> Option<&CheckSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }
}

fn collect_violations(rec: &TrialRecord, ds: &Dataset, out: &mut Vec<Violation>) {
    for c in &rec.checks {
        if c.binding && c.status == CheckStatus::Fail {
            out.push(Violation {
                trial: rec.trial,
                seed: rec.seed,
                check: c.name.clone(),
                value: c.value,
                bound: c.bound,
                instance: InstanceDump::of(ds),
            });
        }
    }
}

fn trial_size(n_min: Option<usize>, n: usize, trial_seed: u64) -> usize {
    match n_min {
        Some(lo) if lo < n => seed::rng(seed::derive_seed(trial_seed, "size", 0)).random_range(lo..=n),
        _ => n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundKinds {
    pub theorem4: bool,
    pub theorem5: bool,
}

impl BoundKinds {
    pub const ALL: BoundKinds = BoundKinds { theorem4: true, theorem5: true };
    pub const THEOREM4: BoundKinds = BoundKinds { theorem4: true, theorem5: false };
    pub const THEOREM5: BoundKinds = BoundKinds { theorem4: false, theorem5: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSuite {
    /// When set, each trial draws its size uniformly from `n_min..=n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub k_within: usize,
    pub lambda: f64,
    pub lambda_c: f64,
    pub trials: usize,
    pub seed: u64,
}

impl BoundSuite {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: usize, k: usize, m: usize, l: usize, k_within: usize, lambda: f64, trials: usize, seed: u64) -> Self {
        BoundSuite { n_min: None, n, dim: 2, k, m, l, k_within, lambda, lambda_c: lambda, trials, seed }
    }

    fn smallest_n(&self) -> usize {
        self.n_min.unwrap_or(self.n).min(self.n)
    }

    fn validate(&self, kinds: BoundKinds) -> Result<()> {
        let lo = self.smallest_n();
        if self.k == 0 || self.k > lo {
            return Err(Error::precondition(format!("requires 1 <= k <= n, got k = {}, n = {lo}", self.k)));
        }
        if self.l == 0 || self.l > lo {
            return Err(Error::precondition(format!("requires 1 <= l <= n, got l = {}, n = {lo}", self.l)));
        }
        if self.k_within == 0 {
            return Err(Error::precondition("requires k_within >= 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::precondition(format!("requires 0 <= lambda <= 1, got {}", self.lambda)));
        }
        if kinds.theorem5 {
            Theorem5Bound::new(self.k, self.m, self.lambda, self.lambda_c)?;
            if self.m > self.l {
                return Err(Error::precondition(format!("requires m <= l, got m = {}, l = {}", self.m, self.l)));
            }
        }
        let count = binomial(self.n, self.k);
        if count > DEFAULT_SUBSET_CAP {
            return Err(Error::TooManySubsets { count, cap: DEFAULT_SUBSET_CAP });
        }
        Ok(())
    }
}

/// Evaluates the requested bounds on one instance.
///
/// - `theorem4`: `F(DGDS) ≥ F(OPT)/16` at the suite's λ, and additionally at
///   λ = 0.5 when the suite uses another value.
/// - `theorem5`: `F(MUSS′) ≥ F(OPT)/α − r·β/α` with `r` the largest radius of
///   the k-means model fitted for the trial.
/// - `lemma2` / `lemma3` (non-binding): `D(OPT) ≤ 6·F(OPT(∪S_i))` and
///   `Q(OPT) ≤ 2·F(OPT(∪S_i))` over the DGDS partition picks, when that
///   union is small enough to enumerate.
pub fn check_instance_bounds(
    ds: &Dataset,
    suite: &BoundSuite,
    kinds: BoundKinds,
    trial: usize,
    trial_seed: u64,
) -> Result<TrialRecord> {
    let pool: Vec<usize> = (0..ds.len()).collect();
    let opt = opt_brute_force(ds, &pool, suite.k, suite.lambda)?;
    let f_opt = opt.objective.value;
    let mut checks = Vec::new();
    let mut radius = None;

    if kinds.theorem4 {
        let mut lambdas = vec![suite.lambda];
        if suite.lambda != 0.5 {
            lambdas.push(0.5);
        }
        for (i, &lambda) in lambdas.iter().enumerate() {
            let name = if i == 0 { "theorem4".to_string() } else { "theorem4@lambda=0.5".to_string() };
            let params = DgdsParams::new(suite.k, suite.k_within, suite.l, lambda)
                .with_normalize(false)
                .with_seed(trial_seed);
            let out = selectors::dgds_select_detailed(ds, &params)?;
            let f_opt_here =
                if i == 0 { f_opt } else { opt_brute_force(ds, &pool, suite.k, lambda)?.objective.value };
            checks.push(CheckValue::at_least(&name, out.result.objective, f_opt_here / 16.0, true));

            if i == 0 {
                if out.final_pool.len() >= suite.k
                    && binomial(out.final_pool.len(), suite.k) <= DEFAULT_SUBSET_CAP
                {
                    let union_opt = opt_brute_force(ds, &out.final_pool, suite.k, lambda)?.objective.value;
                    checks.push(CheckValue::at_most("lemma2", opt.objective.diversity, 6.0 * union_opt, false));
                    checks.push(CheckValue::at_most("lemma3", opt.objective.quality, 2.0 * union_opt, false));
                } else {
                    checks.push(CheckValue::skipped("lemma2", false));
                    checks.push(CheckValue::skipped("lemma3", false));
                }
            }
        }
    }

    if kinds.theorem5 {
        let bound = Theorem5Bound::new(suite.k, suite.m, suite.lambda, suite.lambda_c)?;
        let cfg = KMeansConfig::new(suite.l, seed::derive_seed(trial_seed, "kmeans", 0));
        let model = clustering::kmeans_fit(ds, &cfg)?;
        let r = clustering::max_radius(&clustering::summarize_clusters(ds, &model)?);
        radius = Some(r);
        let params = MussParams::new(suite.k, suite.k_within, suite.l, suite.m, suite.lambda)
            .with_lambda_c(suite.lambda_c)
            .prime()
            .with_seed(trial_seed);
        let f = selectors::muss_select(ds, &model, &params)?.objective;
        checks.push(CheckValue::at_least("theorem5", f, bound.lower_bound(f_opt, r), true));
    }

    Ok(TrialRecord { trial, seed: trial_seed, n: ds.len(), f_opt: Some(f_opt), radius, checks })
}

/// Runs `suite.trials` seeded random instances through the requested bounds.
pub fn verify_bounds(suite: &BoundSuite, kinds: BoundKinds) -> Result<VerifyReport> {
    suite.validate(kinds)?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(suite.trials);
    let mut violations = Vec::new();
    for trial in 0..suite.trials {
        let ts = seed::derive_seed(suite.seed, "trial", trial as u64);
        let n = trial_size(suite.n_min, suite.n, ts);
        let ds = random_instance(n, suite.dim, ts);
        let rec = check_instance_bounds(&ds, suite, kinds, trial, ts)?;
        collect_violations(&rec, &ds, &mut violations);
        records.push(rec);
    }
    Ok(VerifyReport::build(SuiteConfig::Bounds { kinds, suite: *suite }, records, violations, start))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuite {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    pub lambda: f64,
    pub trials: usize,
    pub seed: u64,
}

impl LemmaSuite {
    pub fn new(n: usize, k: usize, lambda: f64, trials: usize, seed: u64) -> Self {
        LemmaSuite { n_min: None, n, dim: 2, k, lambda, trials, seed }
    }

    fn smallest_n(&self) -> usize {
        self.n_min.unwrap_or(self.n).min(self.n)
    }
}

/// Greedy (σ = 1, unnormalized) on random instances, checked with
/// [`check_lemma1`]. Each trial records the tightest excluded candidate.
pub fn verify_lemma1_suite(suite: &LemmaSuite) -> Result<VerifyReport> {
    if !(suite.lambda > 0.0 && suite.lambda < 1.0) {
        return Err(Error::precondition(format!(
            "requires lambda != 0 and lambda != 1 (0 < lambda < 1), got {}",
            suite.lambda
        )));
    }
    if suite.k <= 1 {
        return Err(Error::precondition(format!("requires k > 1, got k = {}", suite.k)));
    }
    if suite.k > suite.smallest_n() {
        return Err(Error::precondition(format!("requires k <= n, got k = {}", suite.k)));
    }
    let start = Instant::now();
    let mut records = Vec::with_capacity(suite.trials);
    let mut violations = Vec::new();
    let params = SelectionParams::proof_convention(suite.k, suite.lambda);
    for trial in 0..suite.trials {
        let ts = seed::derive_seed(suite.seed, "trial", trial as u64);
        let n = trial_size(suite.n_min, suite.n, ts);
        let ds = random_instance(n, suite.dim, ts);
        let pool: Vec<usize> = (0..n).collect();
        let (result, _) = greedy_select(&ds, &pool, &params)?;
        let rep = check_lemma1(&ds, &pool, &result, suite.lambda)?;
        let checks = if rep.entries.is_empty() {
            vec![CheckValue::skipped("lemma1.quality", true), CheckValue::skipped("lemma1.distance", true)]
        } else {
            let tight_q = rep.entries.iter().min_by(|a, b| a.quality_slack.total_cmp(&b.quality_slack)).unwrap();
            let tight_d = rep.entries.iter().min_by(|a, b| a.distance_slack.total_cmp(&b.distance_slack)).unwrap();
            vec![
                CheckValue::at_most("lemma1.quality", tight_q.quality_gain, tight_q.quality_bound, true),
                CheckValue::at_most("lemma1.distance", tight_d.min_distance, tight_d.distance_bound, true),
            ]
        };
        let rec = TrialRecord { trial, seed: ts, n, f_opt: None, radius: None, checks };
        collect_violations(&rec, &ds, &mut violations);
        records.push(rec);
    }
    Ok(VerifyReport::build(SuiteConfig::Lemma1(*suite), records, violations, start))
}

/// Half-approximation of σ-scaled greedy: both `max_σ F(G(σ))` and
/// `F(G(0.5))` must reach `F(OPT)/2`.
pub fn verify_lemma8_suite(suite: &LemmaSuite) -> Result<VerifyReport> {
    if !(0.0..=1.0).contains(&suite.lambda) {
        return Err(Error::precondition(format!("requires 0 <= lambda <= 1, got {}", suite.lambda)));
    }
    if suite.k == 0 || suite.k > suite.smallest_n() {
        return Err(Error::precondition(format!("requires 1 <= k <= n, got k = {}", suite.k)));
    }
    let count = binomial(suite.n, suite.k);
    if count > DEFAULT_SUBSET_CAP {
        return Err(Error::TooManySubsets { count, cap: DEFAULT_SUBSET_CAP });
    }
    let start = Instant::now();
    let mut records = Vec::with_capacity(suite.trials);
    let mut violations = Vec::new();
    for trial in 0..suite.trials {
        let ts = seed::derive_seed(suite.seed, "trial", trial as u64);
        let n = trial_size(suite.n_min, suite.n, ts);
        let ds = random_instance(n, suite.dim, ts);
        let pool: Vec<usize> = (0..n).collect();
        let f_opt = opt_brute_force(&ds, &pool, suite.k, suite.lambda)?.objective.value;
        let base = SelectionParams::proof_convention(suite.k, suite.lambda);
        let mut best = f64::NEG_INFINITY;
        let mut half = f64::NEG_INFINITY;
        for sigma in SWEEP_SIGMAS {
            let f = greedy_select(&ds, &pool, &base.with_sigma(sigma))?.0.objective;
            best = best.max(f);
            if sigma == 0.5 {
                half = f;
            }
        }
        let checks = vec![
            CheckValue::at_least("lemma8.sweep", best, 0.5 * f_opt, true),
            CheckValue::at_least("lemma8.sigma_half", half, 0.5 * f_opt, true),
        ];
        let rec = TrialRecord { trial, seed: ts, n, f_opt: Some(f_opt), radius: None, checks };
        collect_violations(&rec, &ds, &mut violations);
        records.push(rec);
    }
    Ok(VerifyReport::build(SuiteConfig::Lemma8(*suite), records, violations, start))
}
