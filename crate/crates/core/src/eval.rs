//! Quality metrics and reference pipelines for judging projections.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{bisecting_kmeans, medoid};
use crate::distance::{distances_to_landmarks, euclidean_unchecked, pairwise_distances};
use crate::embed::{classical_mds, fit, ProjectorKind};
use crate::engine::{Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::types::{Buffer, Instance, Point2D};

/// Pairs sampled per point when the exact sum over all pairs is too large.
const SAMPLE_PAIRS_PER_POINT: usize = 2_500;
/// Largest n for which stress is computed over every pair.
const EXACT_PAIR_LIMIT: usize = 5_000;

/// Normalized stress between original and projected distances.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StressReport {
    pub value: f64,
    /// Number of point pairs entering the sums.
    pub pairs: u64,
    /// Whether every pair was used rather than a seeded sample.
    pub exact: bool,
    pub seed: u64,
}

/// sqrt( sum (delta_ij - d_ij)^2 / sum delta_ij^2 ) over point pairs, where
/// delta is the original-space distance and d the 2D distance.
///
/// Exact for n <= 5000; beyond that a seeded sample of 2500·n pairs is used,
/// so repeated calls with the same seed agree bit-for-bit.
pub fn normalized_stress(
    features: &[Vec<f64>],
    positions: &[Point2D],
    seed: u64,
) -> Result<StressReport> {
    let n = features.len();
    if positions.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: positions.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "stress needs at least two points".into(),
        ));
    }
    let dim = features[0].len();
    for (i, f) in features.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: f.len(),
            });
        }
        if f.iter().any(|v| !v.is_finite()) || !positions[i].is_finite() {
            return Err(Error::NonFinite { index: i });
        }
    }

    let pair_term = |i: usize, j: usize| -> (f64, f64) {
        let delta = euclidean_unchecked(&features[i], &features[j]);
        let d = positions[i].distance(&positions[j]);
        let diff = delta - d;
        (diff * diff, delta * delta)
    };

    if n <= EXACT_PAIR_LIMIT {
        let (num, den) = (0..n - 1)
            .into_par_iter()
            .map(|i| {
                let mut num = 0.0;
                let mut den = 0.0;
                for j in i + 1..n {
                    let (a, b) = pair_term(i, j);
                    num += a;
                    den += b;
                }
                (num, den)
            })
            .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
        if den == 0.0 {
            return Err(Error::InvalidArgument(
                "all original distances are zero".into(),
            ));
        }
        return Ok(StressReport {
            value: (num / den).sqrt(),
            pairs: (n as u64) * (n as u64 - 1) / 2,
            exact: true,
            seed,
        });
    }

    let total = (SAMPLE_PAIRS_PER_POINT as u64) * n as u64;
    const CHUNK: u64 = 1 << 16;
    let chunks = total.div_ceil(CHUNK);
    // Each chunk owns an independent seeded generator so the sample is
    // reproducible regardless of thread scheduling.
    let (num, den) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let count = CHUNK.min(total - c * CHUNK);
            let mut num = 0.0;
            let mut den = 0.0;
            for _ in 0..count {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = pair_term(i, j);
                num += a;
                den += b;
            }
            (num, den)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    if den == 0.0 {
        return Err(Error::InvalidArgument(
            "all sampled original distances are zero".into(),
        ));
    }
    Ok(StressReport {
        value: (num / den).sqrt(),
        pairs: total,
        exact: false,
        seed,
    })
}

/// Stress of an engine's current layout against retained original features.
///
/// `originals` must cover every projected id; evaluation keeps its own copy
/// of the data precisely because the engine discards it.
pub fn engine_stress(engine: &Engine, originals: &[Instance], seed: u64) -> Result<StressReport> {
    let by_id: std::collections::HashMap<u64, &Instance> =
        originals.iter().map(|i| (i.id, i)).collect();
    let points = engine.snapshot();
    let mut features = Vec::with_capacity(points.len());
    let mut positions = Vec::with_capacity(points.len());
    for p in &points {
        let inst = by_id.get(&p.id).ok_or_else(|| {
            Error::InvalidArgument(format!("no original features for id {}", p.id))
        })?;
        features.push(inst.features.clone());
        positions.push(p.position);
    }
    normalized_stress(&features, &positions, seed)
}

/// Runs the engine over `instances` in order, one buffer at a time, and
/// reports the layout stress after every buffer.
pub fn stress_evolution(
    instances: &[Instance],
    config: &EngineConfig,
) -> Result<Vec<StressReport>> {
    if instances.is_empty() {
        return Err(Error::InvalidArgument("no instances".into()));
    }
    let mut engine = Engine::new(config.clone())?;
    let mut reports = Vec::new();
    for chunk in instances.chunks(config.buffer_capacity) {
        let buffer = Buffer::new(chunk.to_vec(), config.buffer_capacity)?;
        engine.push_buffer(buffer)?;
        reports.push(engine_stress(&engine, instances, config.seed)?);
    }
    Ok(reports)
}

/// Final-layout stress for each of `runs` random presentation orders of the
/// same dataset. Run r shuffles with `base_seed + r`.
pub fn shuffle_study(
    instances: &[Instance],
    config: &EngineConfig,
    runs: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut shuffled = instances.to_vec();
            crate::data::shuffle_instances(&mut shuffled, base_seed + r as u64);
            let mut engine = Engine::new(config.clone())?;
            for chunk in shuffled.chunks(config.buffer_capacity) {
                engine.push_buffer(Buffer::new(chunk.to_vec(), config.buffer_capacity)?)?;
            }
            Ok(engine_stress(&engine, &shuffled, config.seed)?.value)
        })
        .collect()
}

/// Result of the non-streaming reference pipeline.
#[derive(Debug, Clone)]
pub struct BatchOracle {
    pub positions: Vec<Point2D>,
    pub stress: StressReport,
}

/// Largest dataset accepted by the batch oracle; it holds all pairwise
/// landmark structures in memory at once.
const ORACLE_LIMIT: usize = 20_000;

/// Reference projection with the whole dataset in hand: pick floor(sqrt(n))
/// medoids over all points at once, embed them by classical MDS, then project
/// everything through the chosen interpolator. No buffering, no novelty
/// filter, no realignment — an upper baseline for the streaming layout.
pub fn batch_oracle(
    instances: &[Instance],
    projector: ProjectorKind,
    seed: u64,
) -> Result<BatchOracle> {
    let n = instances.len();
    if n < 4 {
        return Err(Error::InvalidArgument(
            "oracle needs at least 4 points".into(),
        ));
    }
    if n > ORACLE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "oracle supports at most {ORACLE_LIMIT} points, got {n}"
        )));
    }
    let q = ((n as f64).sqrt().floor() as usize).max(2);
    let clusters = bisecting_kmeans(instances, q, seed)?;
    let medoids: Vec<&Instance> = clusters.iter().map(|c| medoid(c, instances)).collect();
    let mut landmark_features: Vec<Vec<f64>> = Vec::with_capacity(medoids.len());
    for m in &medoids {
        if !landmark_features.contains(&m.features) {
            landmark_features.push(m.features.clone());
        }
    }
    let distances: DMatrix<f64> = pairwise_distances(&landmark_features)?;
    let layout = classical_mds(&distances)?;
    let function = fit(projector, &distances, &layout)?;
    let positions: Result<Vec<Point2D>> = instances
        .par_iter()
        .map(|inst| {
            let delta = distances_to_landmarks(&inst.features, &landmark_features)?;
            function.apply(&delta)
        })
        .collect();
    let positions = positions?;
    let features: Vec<Vec<f64>> = instances.iter().map(|i| i.features.clone()).collect();
    let stress = normalized_stress(&features, &positions, seed)?;
    Ok(BatchOracle { positions, stress })
}

/// Median of a sample; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Interquartile range via linear-interpolation quantiles.
pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

/// Linear-interpolation quantile (the common "type 7" estimate).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&q), "quantile level out of range");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
