//! Lloyd k-means in the joint feature/quality space, cluster summaries and
//! random balanced partitions.
//!
//! The fitted objective is
//!
//! ```text
//! L = Σ_j Σ_{i∈U_j} ‖x_i − μ_j‖² + w_c·(q_i − φ_j)²
//! ```
//!
//! With `w_c = 0` this is plain feature-space k-means. Centroids start from
//! k-means++ seeding over the joint space `(x, √w_c·q)`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{euclidean, squared_euclidean, Dataset};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub l: usize,
    pub quality_weight: f64,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once the relative WCSS improvement drops below this.
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(l: usize, seed: u64) -> Self {
        KMeansConfig { l, quality_weight: 0.0, seed, max_iters: 100, tol: 1e-6 }
    }

    pub fn with_quality_weight(mut self, w: f64) -> Self {
        self.quality_weight = w;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub l: usize,
    pub dim: usize,
    pub quality_weight: f64,
    /// `μ_j`, one row per cluster.
    pub centroids: Vec<Vec<f64>>,
    /// `φ_j`, the mean member quality.
    pub quality_centers: Vec<f64>,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    pub iterations_run: usize,
    /// Objective after each Lloyd iteration.
    #[serde(default)]
    pub wcss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_id: usize,
    pub centroid: Vec<f64>,
    pub median_quality: f64,
    /// Largest member-to-centroid distance.
    pub radius: f64,
    pub member_ids: Vec<usize>,
    pub size: usize,
}

/// Minimum work (points × clusters) before the assignment step goes parallel.
const PARALLEL_ASSIGN_MIN: usize = 1 << 16;

struct Space<'a> {
    ds: &'a Dataset,
    w: f64,
}

impl Space<'_> {
    #[inline]
    fn cost(&self, i: usize, centroid: &[f64], quality_center: f64) -> f64 {
        let dq = self.ds.quality(i) - quality_center;
        squared_euclidean(self.ds.embedding(i), centroid) + self.w * dq * dq
    }

    fn nearest(&self, i: usize, centroids: &[Vec<f64>], qc: &[f64]) -> (usize, f64) {
        let mut best = (0, self.cost(i, &centroids[0], qc[0]));
        for j in 1..centroids.len() {
            let c = self.cost(i, &centroids[j], qc[j]);
            if c < best.1 {
                best = (j, c);
            }
        }
        best
    }
}

/// Recomputes `L` for arbitrary centroids and assignments.
pub fn combined_objective(
    ds: &Dataset,
    centroids: &[Vec<f64>],
    quality_centers: &[f64],
    assignments: &[usize],
    quality_weight: f64,
) -> f64 {
    let space = Space { ds, w: quality_weight };
    assignments
        .iter()
        .enumerate()
        .map(|(i, &j)| space.cost(i, &centroids[j], quality_centers[j]))
        .sum()
}

fn kmeans_plus_plus(space: &Space, l: usize, rng: &mut seed::Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let ds = space.ds;
    let n = ds.len();
    let mut centroids = Vec::with_capacity(l);
    let mut qc = Vec::with_capacity(l);
    let first = rng.random_range(0..n);
    centroids.push(ds.embedding(first).to_vec());
    qc.push(ds.quality(first));
    let mut d2: Vec<f64> = (0..n).map(|i| space.cost(i, &centroids[0], qc[0])).collect();

    while centroids.len() < l {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > r {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(ds.embedding(pick).to_vec());
        qc.push(ds.quality(pick));
        let last = centroids.len() - 1;
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(space.cost(i, &centroids[last], qc[last]));
        }
    }
    (centroids, qc)
}

fn assign(space: &Space, centroids: &[Vec<f64>], qc: &[f64]) -> Vec<usize> {
    let n = space.ds.len();
    if n * centroids.len() >= PARALLEL_ASSIGN_MIN {
        (0..n).into_par_iter().map(|i| space.nearest(i, centroids, qc).0).collect()
    } else {
        (0..n).map(|i| space.nearest(i, centroids, qc).0).collect()
    }
}

/// Moves, for each empty cluster, the point farthest from its own centroid
/// into that cluster as a singleton. Donor clusters keep at least one member.
fn repair_empty(space: &Space, centroids: &mut [Vec<f64>], qc: &mut [f64], assignments: &mut [usize]) {
    let mut counts = vec![0usize; centroids.len()];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    for j in 0..centroids.len() {
        if counts[j] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, &a) in assignments.iter().enumerate() {
            if counts[a] < 2 {
                continue;
            }
            let c = space.cost(i, &centroids[a], qc[a]);
            if far.is_none_or(|(_, best)| c > best) {
                far = Some((i, c));
            }
        }
        let (i, _) = far.expect("l <= n leaves a cluster with two or more members");
        counts[assignments[i]] -= 1;
        counts[j] = 1;
        assignments[i] = j;
        centroids[j] = space.ds.embedding(i).to_vec();
        qc[j] = space.ds.quality(i);
    }
}

/// Member means of embeddings and qualities, accumulated in ascending id order.
fn update_centers(ds: &Dataset, l: usize, assignments: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let dim = ds.dim();
    let mut sums = vec![vec![0.0; dim]; l];
    let mut qsum = vec![0.0; l];
    let mut counts = vec![0usize; l];
    for (i, &j) in assignments.iter().enumerate() {
        for (s, x) in sums[j].iter_mut().zip(ds.embedding(i)) {
            *s += x;
        }
        qsum[j] += ds.quality(i);
        counts[j] += 1;
    }
    for j in 0..l {
        let c = counts[j] as f64;
        sums[j].iter_mut().for_each(|s| *s /= c);
        qsum[j] /= c;
    }
    (sums, qsum)
}

pub fn kmeans_fit(ds: &Dataset, config: &KMeansConfig) -> Result<ClusterModel> {
    let n = ds.len();
    let l = config.l;
    if l == 0 {
        return Err(Error::param("number of clusters must be at least 1"));
    }
    if l > n {
        return Err(Error::param(format!("cannot form {l} clusters from {n} items")));
    }
    if !(config.quality_weight.is_finite() && config.quality_weight >= 0.0) {
        return Err(Error::param("quality weight must be finite and >= 0"));
    }
    if config.tol.is_nan() || config.tol <= 0.0 {
        return Err(Error::param("tolerance must be positive"));
    }
    if config.max_iters == 0 {
        return Err(Error::param("max_iters must be at least 1"));
    }

    let space = Space { ds, w: config.quality_weight };
    let mut rng = seed::rng(config.seed);
    let (mut centroids, mut qc) = kmeans_plus_plus(&space, l, &mut rng);
    let mut assignments = Vec::new();
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;

    for _ in 0..config.max_iters {
        assignments = assign(&space, &centroids, &qc);
        repair_empty(&space, &mut centroids, &mut qc, &mut assignments);
        (centroids, qc) = update_centers(ds, l, &assignments);
        let wcss = combined_objective(ds, &centroids, &qc, &assignments, config.quality_weight);
        assert!(
            wcss <= prev + 1e-9 * prev.abs().max(1.0) || !prev.is_finite(),
            "k-means objective increased from {prev} to {wcss}"
        );
        history.push(wcss);
        if wcss == 0.0 || (prev.is_finite() && prev - wcss <= config.tol * prev) {
            break;
        }
        prev = wcss;
    }

    Ok(ClusterModel {
        l,
        dim: ds.dim(),
        quality_weight: config.quality_weight,
        centroids,
        quality_centers: qc,
        assignments,
        wcss: *history.last().expect("at least one iteration"),
        iterations_run: history.len(),
        wcss_history: history,
    })
}

impl ClusterModel {
    /// A model whose clusters are the given disjoint, covering parts, with
    /// member means as centroids.
    pub fn from_partition(ds: &Dataset, parts: &[Vec<usize>]) -> Result<ClusterModel> {
        let n = ds.len();
        let mut assignments = vec![usize::MAX; n];
        for (j, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::param(format!("part {j} is empty")));
            }
            for &i in part {
                ds.check_id(i)?;
                if assignments[i] != usize::MAX {
                    return Err(Error::DuplicateId(i));
                }
                assignments[i] = j;
            }
        }
        if let Some(i) = assignments.iter().position(|&a| a == usize::MAX) {
            return Err(Error::param(format!("item {i} is not covered by the partition")));
        }
        let (centroids, qc) = update_centers(ds, parts.len(), &assignments);
        let wcss = combined_objective(ds, &centroids, &qc, &assignments, 0.0);
        Ok(ClusterModel {
            l: parts.len(),
            dim: ds.dim(),
            quality_weight: 0.0,
            centroids,
            quality_centers: qc,
            assignments,
            wcss,
            iterations_run: 0,
            wcss_history: Vec::new(),
        })
    }

    pub fn validate_for(&self, ds: &Dataset) -> Result<()> {
        if self.assignments.len() != ds.len() {
            return Err(Error::param(format!(
                "model covers {} items, dataset has {}",
                self.assignments.len(),
                ds.len()
            )));
        }
        if self.dim != ds.dim() || self.centroids.iter().any(|c| c.len() != ds.dim()) {
            return Err(Error::DimensionMismatch { expected: ds.dim(), found: self.dim });
        }
        if self.centroids.len() != self.l || self.quality_centers.len() != self.l {
            return Err(Error::param("model centroid count does not match l"));
        }
        if let Some(&a) = self.assignments.iter().find(|&&a| a >= self.l) {
            return Err(Error::param(format!("assignment {a} out of range for {} clusters", self.l)));
        }
        Ok(())
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.l];
        for (i, &j) in self.assignments.iter().enumerate() {
            members[j].push(i);
        }
        members
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One summary per non-empty cluster, in ascending cluster id.
pub fn summarize_clusters(ds: &Dataset, model: &ClusterModel) -> Result<Vec<ClusterSummary>> {
    model.validate_for(ds)?;
    Ok(model
        .members()
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(j, member_ids)| {
            let centroid = model.centroids[j].clone();
            let mut qs: Vec<f64> = member_ids.iter().map(|&i| ds.quality(i)).collect();
            let radius = member_ids
                .iter()
                .map(|&i| euclidean(ds.embedding(i), &centroid))
                .fold(0.0, f64::max);
            ClusterSummary {
                cluster_id: j,
                centroid,
                median_quality: median(&mut qs),
                radius,
                size: member_ids.len(),
                member_ids,
            }
        })
        .collect())
}

/// Largest cluster radius, the `r` of the multilevel approximation bound.
pub fn max_radius(summaries: &[ClusterSummary]) -> f64 {
    summaries.iter().map(|s| s.radius).fold(0.0, f64::max)
}

/// Uniformly random balanced partition of `0..n` into `l` parts (sizes differ
/// by at most one). Each part is sorted ascending.
pub fn random_partition(n: usize, l: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if l == 0 {
        return Err(Error::param("number of parts must be at least 1"));
    }
    if l > n {
        return Err(Error::param(format!("cannot split {n} items into {l} non-empty parts")));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut seed::rng(seed));
    let base = n / l;
    let extra = n % l;
    let mut parts = Vec::with_capacity(l);
    let mut start = 0;
    for j in 0..l {
        let len = base + usize::from(j < extra);
        let mut part = ids[start..start + len].to_vec();
        part.sort_unstable();
        parts.push(part);
        start += len;
    }
    Ok(parts)
}
