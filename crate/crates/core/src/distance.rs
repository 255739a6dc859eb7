//! Dissimilarity functions and dense distance matrices.
//!
//! The dissimilarity is pluggable ([`Dissimilarity`]); Euclidean is the
//! default everywhere else in the crate.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::DistanceVector;

/// A pure dissimilarity over two feature sequences of equal length.
pub type Dissimilarity = fn(&[f64], &[f64]) -> f64;

/// L2 distance between two feature sequences.
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(euclidean_unchecked(a, b))
}

/// L2 distance without the length check; callers guarantee `|a| = |b|`.
pub(crate) fn euclidean_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Full symmetric pairwise distance matrix with zero diagonal.
pub fn pairwise_distances(points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = points.len();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = euclidean_unchecked(&points[i], &points[j]);
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    Ok(d)
}

/// Distances from `point` to each landmark, in landmark insertion order.
pub fn distances_to_landmarks(point: &[f64], landmarks: &[Vec<f64>]) -> Result<DistanceVector> {
    if landmarks.is_empty() {
        return Err(Error::EmptyLandmarks);
    }
    let mut values = Vec::with_capacity(landmarks.len());
    for lm in landmarks {
        values.push(euclidean(point, lm)?);
    }
    Ok(DistanceVector::new(values))
}
