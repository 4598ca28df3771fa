//! Evaluation of `F(S) = λ·Q(S) + (1 − λ)·D(S)`.
//!
//! `D` counts every unordered pair twice (sum over ordered pairs `u ≠ v`).
//! All approximation bounds in this crate are stated in that convention.
//! The mean-scaled variant in [`MeanScaled`] is for reporting only.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// `F`, `Q` and `D` of a selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub value: f64,
    pub quality: f64,
    pub diversity: f64,
}

/// Reporting convention: `Q/k`, `D/(k(k−1))` and their λ-combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanScaled {
    pub objective: f64,
    pub quality: f64,
    pub diversity: f64,
}

impl MeanScaled {
    pub fn from_objective(obj: &Objective, size: usize, lambda: f64) -> MeanScaled {
        let quality = if size == 0 { 0.0 } else { obj.quality / size as f64 };
        let diversity = if size < 2 {
            0.0
        } else {
            obj.diversity / (size * (size - 1)) as f64
        };
        MeanScaled { objective: lambda * quality + (1.0 - lambda) * diversity, quality, diversity }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::param(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

/// Sorted copy so that floating-point sums do not depend on input order.
fn canonical(ds: &Dataset, s: &[usize]) -> Result<Vec<usize>> {
    ds.check_subset(s)?;
    let mut ids = s.to_vec();
    ids.sort_unstable();
    Ok(ids)
}

pub fn quality_sum(ds: &Dataset, s: &[usize]) -> Result<f64> {
    let ids = canonical(ds, s)?;
    Ok(ids.iter().map(|&id| ds.quality(id)).sum())
}

pub fn diversity_sum(ds: &Dataset, s: &[usize]) -> Result<f64> {
    let ids = canonical(ds, s)?;
    Ok(ordered_pair_sum(ds, &ids))
}

fn ordered_pair_sum(ds: &Dataset, ids: &[usize]) -> f64 {
    let mut half = 0.0;
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            half += ds.distance(a, b);
        }
    }
    2.0 * half
}

pub fn objective(ds: &Dataset, s: &[usize], lambda: f64) -> Result<Objective> {
    check_lambda(lambda)?;
    let ids = canonical(ds, s)?;
    let quality: f64 = ids.iter().map(|&id| ds.quality(id)).sum();
    let diversity = ordered_pair_sum(ds, &ids);
    Ok(Objective { value: lambda * quality + (1.0 - lambda) * diversity, quality, diversity })
}

/// Greedy criterion for adding `t` to `s`: `λ·q(t) + (1 − λ)·G` with
/// `G = Σ_{u∈S} d(t, u)`, divided by `|S|` when `normalize` is set.
pub fn marginal_gain(ds: &Dataset, s: &[usize], t: usize, lambda: f64, normalize: bool) -> Result<f64> {
    check_lambda(lambda)?;
    ds.check_subset(s)?;
    ds.check_id(t)?;
    if s.contains(&t) {
        return Err(Error::AlreadySelected(t));
    }
    let mut g: f64 = s.iter().map(|&u| ds.distance(t, u)).sum();
    if normalize && !s.is_empty() {
        g /= s.len() as f64;
    }
    Ok(lambda * ds.quality(t) + (1.0 - lambda) * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64], qualities: &[f64]) -> Dataset {
        Dataset::new(1, points.to_vec(), qualities.to_vec(), None).unwrap()
    }

    fn random_ds(n: usize, dim: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let emb = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        Dataset::new(dim, emb, q, None).unwrap()
    }

    // Independent oracles: plain loops over every ordered pair, no sorting.
    fn naive_q(ds: &Dataset, s: &[usize]) -> f64 {
        let mut acc = 0.0;
        for &u in s {
            acc += ds.quality(u);
        }
        acc
    }

    fn naive_d(ds: &Dataset, s: &[usize]) -> f64 {
        let mut acc = 0.0;
        for &u in s {
            for &v in s {
                if u != v {
                    let e = ds.embedding(u).iter().zip(ds.embedding(v));
                    acc += e.map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                }
            }
        }
        acc
    }

    #[test]
    fn empty_quality_is_zero() {
        let ds = line(&[0.0], &[0.4]);
        assert_eq!(quality_sum(&ds, &[]).unwrap(), 0.0);
    }

    #[test]
    fn quality_is_additive() {
        let ds = line(&[0.0, 1.0], &[0.2, 0.5]);
        assert!((quality_sum(&ds, &[0, 1]).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn quality_matches_naive_loop() {
        let ds = random_ds(30, 3, 7);
        let s = [4, 17, 2, 29, 11];
        assert!((quality_sum(&ds, &s).unwrap() - naive_q(&ds, &s)).abs() < 1e-12);
    }

    #[test]
    fn singleton_diversity_is_zero() {
        let ds = line(&[0.0, 5.0], &[1.0, 1.0]);
        assert_eq!(diversity_sum(&ds, &[1]).unwrap(), 0.0);
    }

    #[test]
    fn diversity_counts_ordered_pairs() {
        let ds = Dataset::new(2, vec![0.0, 0.0, 3.0, 4.0], vec![1.0, 1.0], None).unwrap();
        assert_eq!(diversity_sum(&ds, &[0, 1]).unwrap(), 10.0);
    }

    #[test]
    fn diversity_matches_naive_double_loop() {
        for seed in 0..20 {
            let ds = random_ds(25, 4, seed);
            let s = [3, 9, 21, 14];
            let fast = diversity_sum(&ds, &s).unwrap();
            assert!((fast - naive_d(&ds, &s)).abs() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn objective_extremes_and_arithmetic() {
        let ds = random_ds(10, 2, 3);
        let s = [1, 4, 8];
        let o1 = objective(&ds, &s, 1.0).unwrap();
        assert_eq!(o1.value, o1.quality);
        let o0 = objective(&ds, &s, 0.0).unwrap();
        assert_eq!(o0.value, o0.diversity);

        // Q = 0.2 + 0.5, two points 5 apart -> D = 10.
        let ds = Dataset::new(2, vec![0.0, 0.0, 3.0, 4.0], vec![0.2, 0.5], None).unwrap();
        let o = objective(&ds, &[0, 1], 0.5).unwrap();
        assert!((o.value - 5.35).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_bad_lambda() {
        let ds = line(&[0.0], &[1.0]);
        assert!(objective(&ds, &[0], 1.5).is_err());
        assert!(objective(&ds, &[0], -0.1).is_err());
    }

    #[test]
    fn invalid_ids_are_errors() {
        let ds = line(&[0.0, 1.0], &[1.0, 1.0]);
        assert!(quality_sum(&ds, &[2]).is_err());
        assert!(diversity_sum(&ds, &[0, 0]).is_err());
    }

    #[test]
    fn gain_with_empty_selection() {
        let ds = line(&[0.0, 1.0], &[0.8, 0.1]);
        assert!((marginal_gain(&ds, &[], 0, 0.3, true).unwrap() - 0.24).abs() < 1e-15);
    }

    #[test]
    fn gain_pure_diversity_single_neighbor() {
        let ds = line(&[0.0, 3.0], &[0.8, 0.1]);
        assert_eq!(marginal_gain(&ds, &[0], 1, 0.0, true).unwrap(), 3.0);
        assert_eq!(marginal_gain(&ds, &[0], 1, 0.0, false).unwrap(), 3.0);
    }

    #[test]
    fn gain_normalized_arithmetic() {
        // t at 0 with q = 1; neighbours at distance 2 and 4.
        let ds = line(&[0.0, 2.0, -4.0], &[1.0, 0.0, 0.0]);
        let g = marginal_gain(&ds, &[1, 2], 0, 0.5, true).unwrap();
        assert!((g - 2.0).abs() < 1e-15);
        let raw = marginal_gain(&ds, &[1, 2], 0, 0.5, false).unwrap();
        assert!((raw - 3.5).abs() < 1e-15);
    }

    #[test]
    fn gain_rejects_selected_target() {
        let ds = line(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(marginal_gain(&ds, &[0, 1], 1, 0.5, false), Err(Error::AlreadySelected(1)));
    }

    #[test]
    fn mean_scaled_convention() {
        let obj = Objective { value: 0.0, quality: 3.0, diversity: 12.0 };
        let m = MeanScaled::from_objective(&obj, 3, 0.5);
        assert_eq!(m.quality, 1.0);
        assert_eq!(m.diversity, 2.0);
        assert_eq!(m.objective, 1.5);
    }

    proptest! {
        #[test]
        fn objective_is_permutation_invariant(seed in 0u64..1000, shift in 0usize..6) {
            let ds = random_ds(12, 3, seed);
            let s = vec![0, 3, 5, 7, 10, 11];
            let mut rotated = s.clone();
            rotated.rotate_left(shift);
            rotated.reverse();
            prop_assert_eq!(objective(&ds, &s, 0.4).unwrap(), objective(&ds, &rotated, 0.4).unwrap());
        }

        #[test]
        fn quality_is_modular(seed in 0u64..1000, z in 6usize..12) {
            let ds = random_ds(12, 2, seed);
            let s = [0, 2, 4];
            let mut sz = s.to_vec();
            sz.push(z);
            let delta = quality_sum(&ds, &sz).unwrap() - quality_sum(&ds, &s).unwrap();
            prop_assert!((delta - ds.quality(z)).abs() < 1e-12);
        }

        #[test]
        fn diversity_scales_linearly(seed in 0u64..1000, c in 0.01f64..100.0) {
            let ds = random_ds(8, 3, seed);
            let scaled = Dataset::new(
                3,
                ds.embeddings().iter().map(|v| v * c).collect(),
                ds.qualities().to_vec(),
                None,
            ).unwrap();
            let s = [1, 2, 5, 6];
            let d = diversity_sum(&ds, &s).unwrap();
            let dc = diversity_sum(&scaled, &s).unwrap();
            prop_assert!((dc - c * d).abs() <= 1e-9 * (1.0 + c * d));
        }
    }
}
