//! Items, datasets and the Euclidean metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An embedding paired with a non-negative quality score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: usize,
    pub embedding: Vec<f64>,
    pub quality: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

impl Item {
    pub fn new(id: usize, embedding: Vec<f64>, quality: f64) -> Self {
        Item { id, embedding, quality, label: None }
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.label = Some(label);
        self
    }

    pub fn distance_to(&self, other: &Item) -> Result<f64> {
        distance(&self.embedding, &other.embedding)
    }
}

/// Euclidean distance between two embeddings of equal dimension.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(euclidean(a, b))
}

#[inline]
pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

/// An immutable, densely indexed collection of items.
///
/// Embeddings are stored row-major in one contiguous buffer; item `i` owns
/// `embeddings[i * dim..(i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    embeddings: Vec<f64>,
    qualities: Vec<f64>,
    labels: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(
        dim: usize,
        embeddings: Vec<f64>,
        qualities: Vec<f64>,
        labels: Option<Vec<bool>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("embedding dimension must be positive".into()));
        }
        if embeddings.len() != dim * qualities.len() {
            return Err(Error::InvalidDataset(format!(
                "{} embedding values do not form {} rows of dimension {}",
                embeddings.len(),
                qualities.len(),
                dim
            )));
        }
        if let Some(pos) = embeddings.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "item {} has a non-finite embedding coordinate",
                pos / dim
            )));
        }
        if let Some(id) = qualities.iter().position(|q| !q.is_finite() || *q < 0.0) {
            return Err(Error::InvalidDataset(format!(
                "item {id} has quality {}, expected a finite value >= 0",
                qualities[id]
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != qualities.len() {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {} items",
                    labels.len(),
                    qualities.len()
                )));
            }
        }
        Ok(Dataset { dim, embeddings, qualities, labels })
    }

    /// Builds a dataset from items whose ids are exactly `0..n` in order.
    /// Labels must be present on all items or on none.
    pub fn from_items(dim: usize, items: Vec<Item>) -> Result<Self> {
        let n = items.len();
        let mut embeddings = Vec::with_capacity(n * dim);
        let mut qualities = Vec::with_capacity(n);
        let with_labels = items.first().is_some_and(|it| it.label.is_some());
        let mut labels = Vec::with_capacity(if with_labels { n } else { 0 });
        for (pos, item) in items.into_iter().enumerate() {
            if item.id != pos {
                return Err(Error::InvalidDataset(format!(
                    "item at position {pos} has id {}, ids must be 0..n in order",
                    item.id
                )));
            }
            if item.embedding.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: item.embedding.len() });
            }
            match (with_labels, item.label) {
                (true, Some(l)) => labels.push(l),
                (false, None) => {}
                _ => {
                    return Err(Error::InvalidDataset(format!(
                        "item {pos}: labels must be present on all items or on none"
                    )))
                }
            }
            embeddings.extend_from_slice(&item.embedding);
            qualities.push(item.quality);
        }
        Dataset::new(dim, embeddings, qualities, with_labels.then_some(labels))
    }

    pub fn len(&self) -> usize {
        self.qualities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qualities.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    #[inline]
    pub fn embedding(&self, id: usize) -> &[f64] {
        &self.embeddings[id * self.dim..(id + 1) * self.dim]
    }

    #[inline]
    pub fn quality(&self, id: usize) -> f64 {
        self.qualities[id]
    }

    pub fn label(&self, id: usize) -> Option<bool> {
        self.labels.as_ref().map(|l| l[id])
    }

    pub fn qualities(&self) -> &[f64] {
        &self.qualities
    }

    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn item(&self, id: usize) -> Item {
        Item {
            id,
            embedding: self.embedding(id).to_vec(),
            quality: self.quality(id),
            label: self.label(id),
        }
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        (0..self.len()).map(|id| self.item(id))
    }

    /// Euclidean distance between items `a` and `b`. Panics on invalid ids.
    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        euclidean(self.embedding(a), self.embedding(b))
    }

    pub fn check_id(&self, id: usize) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidId { id, len: self.len() })
        }
    }

    /// Validates that `ids` are in range and pairwise distinct.
    pub fn check_subset(&self, ids: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for &id in ids {
            self.check_id(id)?;
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::DuplicateId(id));
            }
        }
        Ok(())
    }

    /// Copy of the dataset with every embedding scaled to unit L2 norm.
    /// Zero vectors are left untouched.
    pub fn l2_normalized(&self) -> Dataset {
        let mut embeddings = self.embeddings.clone();
        for row in embeddings.chunks_exact_mut(self.dim) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Dataset { embeddings, ..self.clone() }
    }

    /// Sub-dataset of the given ids, re-indexed densely in the given order.
    pub fn subset(&self, ids: &[usize]) -> Result<Dataset> {
        self.check_subset(ids)?;
        let mut embeddings = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            embeddings.extend_from_slice(self.embedding(id));
        }
        let qualities = ids.iter().map(|&id| self.qualities[id]).collect();
        let labels = self.labels.as_ref().map(|l| ids.iter().map(|&id| l[id]).collect());
        Dataset::new(self.dim, embeddings, qualities, labels)
    }
}
