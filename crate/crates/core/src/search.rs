//! Min-max normalization and Euclidean ranking.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_DIM};
use crate::index::Index;

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Per-dimension corpus extrema of raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mins: [f64; FEATURE_DIM],
    pub maxs: [f64; FEATURE_DIM],
}

pub fn fit_normalizer(raw: &[FeatureVector]) -> Result<Normalizer> {
    let first = raw
        .first()
        .ok_or_else(|| Error::EmptyCorpus("cannot fit a normalizer to zero vectors".into()))?;
    let mut n = Normalizer {
        mins: first.0,
        maxs: first.0,
    };
    for v in &raw[1..] {
        for d in 0..FEATURE_DIM {
            n.mins[d] = n.mins[d].min(v.0[d]);
            n.maxs[d] = n.maxs[d].max(v.0[d]);
        }
    }
    Ok(n)
}

impl Normalizer {
    /// Maps each dimension to `(v - min) / (max - min)`; constant dimensions map
    /// to 0. Values outside the fitted range are not clamped.
    pub fn normalize(&self, v: &FeatureVector) -> [f64; FEATURE_DIM] {
        std::array::from_fn(|d| {
            let span = self.maxs[d] - self.mins[d];
            if span > 0.0 {
                (v.0[d] - self.mins[d]) / span
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub path: String,
    pub category: String,
    pub distance: f64,
}

fn by_distance_then_path(a: &RankedResult, b: &RankedResult) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.path.cmp(&b.path))
}

/// Top-`k` entries of `index` closest to `query`, optionally skipping one path.
pub fn rank_excluding(
    query: &FeatureVector,
    index: &Index,
    k: usize,
    exclude: Option<&str>,
) -> Result<Vec<RankedResult>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if index.entries.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let q = index.normalizer.normalize(query);
    let mut results = index
        .entries
        .iter()
        .filter(|e| Some(e.path.as_str()) != exclude)
        .map(|e| {
            let d = euclidean_distance(&q, &index.normalizer.normalize(&e.features))?;
            Ok(RankedResult {
                path: e.path.clone(),
                category: e.category.clone(),
                distance: d,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(by_distance_then_path);
    results.truncate(k);
    Ok(results)
}

pub fn rank(query: &FeatureVector, index: &Index, k: usize) -> Result<Vec<RankedResult>> {
    rank_excluding(query, index, k, None)
}
