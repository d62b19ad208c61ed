//! Seeded k-means++ over utterance category vectors, and per-movie cluster
//! histograms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("need at least {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("point dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("movie has no utterances to cluster")]
    NoUtterances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    pub inertia: f64,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }
}

/// Anything that can turn utterance points into a centroid model.
pub trait Clusterer {
    fn fit(&self, points: &[Vec<f64>]) -> Result<ClusterModel, ClusterError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeans {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Clusterer for KMeans {
    fn fit(&self, points: &[Vec<f64>]) -> Result<ClusterModel, ClusterError> {
        fit_clusters(points, self.k, self.seed, self.max_iter)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid and its squared distance; ties go to the lower index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> (f64, bool) {
    let mut inertia = 0.0;
    let mut changed = false;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let (c, d) = nearest(p, centroids);
        changed |= c != *label;
        *label = c;
        inertia += d;
    }
    (inertia, changed)
}

/// Lloyd's algorithm from a k-means++ start. Runs until assignments stop
/// changing or `max_iter` updates. An empty cluster is moved onto the point
/// farthest from its own centroid.
pub fn fit_clusters(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<ClusterModel, ClusterError> {
    if k < 2 {
        return Err(ClusterError::InvalidK(k));
    }
    if points.len() < k {
        return Err(ClusterError::TooFewPoints { n: points.len(), k });
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(ClusterError::DimensionMismatch { expected: dim, found: p.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(points, k, &mut rng);
    let mut labels = vec![usize::MAX; points.len()];
    let (mut inertia, _) = assign_all(points, &centroids, &mut labels);
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = points
                    .iter()
                    .zip(&labels)
                    .enumerate()
                    .map(|(i, (p, &l))| (i, sq_dist(p, &centroids[l])))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                centroids[c] = points[far.0].clone();
            }
        }
        let (next, changed) = assign_all(points, &centroids, &mut labels);
        debug_assert!(next <= inertia * (1.0 + 1e-9) + 1e-12, "inertia rose from {inertia} to {next}");
        inertia = next;
        if !changed {
            break;
        }
    }

    Ok(ClusterModel { k, centroids, seed, inertia, iterations })
}

pub fn assign(point: &[f64], model: &ClusterModel) -> Result<usize, ClusterError> {
    if point.len() != model.dim() {
        return Err(ClusterError::DimensionMismatch { expected: model.dim(), found: point.len() });
    }
    Ok(nearest(point, &model.centroids).0)
}

pub fn cluster_histogram(points: &[Vec<f64>], model: &ClusterModel) -> Result<Vec<f64>, ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::NoUtterances);
    }
    let mut hist = vec![0.0; model.k];
    for p in points {
        hist[assign(p, model)?] += 1.0;
    }
    let n = points.len() as f64;
    hist.iter_mut().for_each(|h| *h /= n);
    Ok(hist)
}
