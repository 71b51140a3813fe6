//! GMAC-clustered train/test split.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ModelProfile;

/// Result of one-dimensional k-means.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<f64>,
    /// Cluster index of each input value.
    pub assignment: Vec<usize>,
}

fn nearest(x: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    for (k, &c) in centroids.iter().enumerate().skip(1) {
        if (x - c).abs() < (x - centroids[best]).abs() {
            best = k;
        }
    }
    best
}

/// Lloyd's algorithm on scalars, with centroids seeded evenly over `[min, max]`.
///
/// An empty cluster is re-seeded at the point farthest from its own centroid.
pub fn kmeans_1d(values: &[f64], k: usize) -> Result<Clustering> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if k == 0 || distinct.len() < k {
        return Err(Error::TooFewClusters(distinct.len()));
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let mut centroids: Vec<f64> = if k == 1 {
        vec![lo]
    } else {
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    };
    let mut assignment = vec![usize::MAX; values.len()];
    for _ in 0..1000 {
        let next: Vec<usize> = values.iter().map(|&x| nearest(x, &centroids)).collect();
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0; k];
        for (&x, &c) in values.iter().zip(&next) {
            counts[c] += 1;
            sums[c] += x;
        }
        if let Some(empty) = counts.iter().position(|&n| n == 0) {
            let far = values
                .iter()
                .enumerate()
                .filter(|&(i, _)| counts[next[i]] > 1)
                .max_by(|a, b| {
                    let da = (a.1 - centroids[next[a.0]]).abs();
                    let db = (b.1 - centroids[next[b.0]]).abs();
                    da.total_cmp(&db).then(b.0.cmp(&a.0))
                })
                .map(|(i, _)| i)
                .ok_or(Error::TooFewClusters(distinct.len()))?;
            centroids[empty] = values[far];
            continue;
        }
        for c in 0..k {
            centroids[c] = sums[c] / counts[c] as f64;
        }
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(Clustering {
        centroids,
        assignment,
    })
}

/// Holds out one representative base model per GMAC cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestSplit {
    pub train: Vec<ModelProfile>,
    pub test: Vec<ModelProfile>,
    /// Names of the held-out base models, smallest cluster first.
    pub representatives: Vec<alloc::string::String>,
    /// Cluster centroids in GMAC, ascending.
    pub centroids: Vec<f64>,
}

/// Clusters unpruned models by GMAC (k = 3); the model nearest each centroid
/// (ties by name) goes to the test set with its pruned variants.
pub fn split_train_test(models: &[ModelProfile]) -> Result<TrainTestSplit> {
    let bases: Vec<&ModelProfile> = models.iter().filter(|m| m.pruning_ratio == 0.0).collect();
    let gmacs: Vec<f64> = bases.iter().map(|m| m.gmac).collect();
    let clustering = kmeans_1d(&gmacs, 3)?;

    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| clustering.centroids[a].total_cmp(&clustering.centroids[b]));

    let mut representatives = Vec::with_capacity(3);
    for &cluster in &order {
        let centroid = clustering.centroids[cluster];
        let rep = bases
            .iter()
            .zip(&clustering.assignment)
            .filter(|&(_, &c)| c == cluster)
            .map(|(m, _)| *m)
            .min_by(|a, b| {
                (a.gmac - centroid)
                    .abs()
                    .total_cmp(&(b.gmac - centroid).abs())
                    .then_with(|| a.name.cmp(&b.name))
            })
            .ok_or(Error::TooFewClusters(2))?;
        representatives.push(rep.name.clone());
    }

    let (test, train): (Vec<ModelProfile>, Vec<ModelProfile>) = models
        .iter()
        .cloned()
        .partition(|m| representatives.iter().any(|r| r == m.base_name()));
    Ok(TrainTestSplit {
        train,
        test,
        representatives,
        centroids: order.iter().map(|&c| clustering.centroids[c]).collect(),
    })
}
