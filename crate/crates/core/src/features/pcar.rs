//! Permutation-based change detection between two groups of distributions.
//!
//! Each unit is a probability vector (one utterance). The change between two
//! groups is the total variation distance between their mean vectors, and
//! its significance is estimated by reassigning the pooled units to groups of
//! the original sizes uniformly at random.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureError;

pub const DEFAULT_PERMUTATIONS: usize = 499;

/// Permuted distances within this tolerance of the observed one count as ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeScore {
    pub distance: f64,
    pub p_value: f64,
}

impl ChangeScore {
    pub const NONE: ChangeScore = ChangeScore { distance: 0.0, p_value: 1.0 };
}

/// `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn check_dims(units: &[&[f64]], dim: usize) -> Result<(), FeatureError> {
    match units.iter().find(|u| u.len() != dim) {
        Some(u) => Err(FeatureError::DimensionMismatch { expected: dim, found: u.len() }),
        None => Ok(()),
    }
}

/// TV distance between the mean of `sum_a / n_a` and `(total - sum_a) / n_b`.
fn split_distance(sum_a: &[f64], total: &[f64], n_a: usize, n_b: usize) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    0.5 * sum_a.iter().zip(total).map(|(&a, &t)| (a / na - (t - a) / nb).abs()).sum::<f64>()
}

pub fn pcar_change_score<A, B>(
    units_a: &[A],
    units_b: &[B],
    n_perm: usize,
    seed: u64,
) -> Result<ChangeScore, FeatureError>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    if n_perm == 0 {
        return Err(FeatureError::NoPermutations);
    }
    let pooled: Vec<&[f64]> = units_a.iter().map(AsRef::as_ref).chain(units_b.iter().map(AsRef::as_ref)).collect();
    let Some(first) = pooled.first() else { return Ok(ChangeScore::NONE) };
    let dim = first.len();
    check_dims(&pooled, dim)?;
    let (n_a, n_b) = (units_a.len(), units_b.len());
    if n_a == 0 || n_b == 0 {
        return Ok(ChangeScore::NONE);
    }

    let mut total = vec![0.0; dim];
    for u in &pooled {
        total.iter_mut().zip(*u).for_each(|(t, x)| *t += x);
    }
    let mut sum_a = vec![0.0; dim];
    for u in &pooled[..n_a] {
        sum_a.iter_mut().zip(*u).for_each(|(t, x)| *t += x);
    }
    let observed = split_distance(&sum_a, &total, n_a, n_b);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        sum_a.iter_mut().for_each(|s| *s = 0.0);
        for i in index::sample(&mut rng, pooled.len(), n_a) {
            sum_a.iter_mut().zip(pooled[i]).for_each(|(t, x)| *t += x);
        }
        if split_distance(&sum_a, &total, n_a, n_b) >= observed - TIE_EPS {
            exceed += 1;
        }
    }
    Ok(ChangeScore { distance: observed.clamp(0.0, 1.0), p_value: (1 + exceed) as f64 / (n_perm + 1) as f64 })
}
