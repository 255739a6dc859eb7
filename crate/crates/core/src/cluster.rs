//! Bisecting k-means presampling of a buffer and medoid extraction.
//!
//! Each incoming buffer is reduced to `floor(sqrt(|buffer|))` medoids that
//! represent its distribution before change detection runs.

use crate::distance::euclidean_unchecked;
use crate::error::{Error, Result};
use crate::types::{Buffer, Instance};

const SPLIT_MAX_ITERATIONS: usize = 20;
const SPLIT_TOLERANCE: f64 = 1e-6;

/// A cluster over buffer indices, with the arithmetic-mean centroid.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub member_indices: Vec<usize>,
    pub centroid: Vec<f64>,
}

impl Cluster {
    fn from_members(member_indices: Vec<usize>, instances: &[Instance]) -> Self {
        debug_assert!(!member_indices.is_empty());
        let dim = instances[member_indices[0]].dimensionality();
        let mut centroid = vec![0.0; dim];
        for &i in &member_indices {
            for (c, v) in centroid.iter_mut().zip(&instances[i].features) {
                *c += v;
            }
        }
        let n = member_indices.len() as f64;
        for c in &mut centroid {
            *c /= n;
        }
        Cluster {
            member_indices,
            centroid,
        }
    }

    /// Sum of squared member distances to the centroid.
    fn sse(&self, instances: &[Instance]) -> f64 {
        self.member_indices
            .iter()
            .map(|&i| {
                let d = euclidean_unchecked(&instances[i].features, &self.centroid);
                d * d
            })
            .sum()
    }
}

/// Splits `instances` into exactly `q` disjoint clusters.
///
/// Starts from one cluster holding everything and repeatedly bisects the
/// cluster with the largest within-cluster sum of squared error using a
/// deterministic 2-means (farthest-point initialization).
pub fn bisecting_kmeans(instances: &[Instance], q: usize, seed: u64) -> Result<Vec<Cluster>> {
    let _ = seed; // the farthest-point initialization is already deterministic
    if q == 0 {
        return Err(Error::InvalidArgument(
            "cluster count q must be >= 1".into(),
        ));
    }
    if q > instances.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot form q={} clusters from {} instances",
            q,
            instances.len()
        )));
    }

    let all: Vec<usize> = (0..instances.len()).collect();
    let mut clusters = vec![Cluster::from_members(all, instances)];

    while clusters.len() < q {
        // Split target: largest SSE among clusters with >= 2 members,
        // falling back to the largest splittable cluster when all SSEs tie at zero.
        let target = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.member_indices.len() >= 2)
            .max_by(|(ia, a), (ib, b)| {
                let sa = a.sse(instances);
                let sb = b.sse(instances);
                sa.partial_cmp(&sb)
                    .unwrap()
                    .then(a.member_indices.len().cmp(&b.member_indices.len()))
                    .then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .expect("q <= |instances| guarantees a splittable cluster");

        let cluster = clusters.swap_remove(target);
        let (left, right) = split_two_means(&cluster, instances);
        clusters.push(left);
        clusters.push(right);
    }

    Ok(clusters)
}

/// 2-means bisection. Initial centers: the member farthest from the
/// centroid, and the member farthest from that one. Identical-point
/// clusters fall back to a balanced split so a bisection always succeeds.
fn split_two_means(cluster: &Cluster, instances: &[Instance]) -> (Cluster, Cluster) {
    let members = &cluster.member_indices;
    debug_assert!(members.len() >= 2);

    let farthest_from = |origin: &[f64]| -> usize {
        let mut best = members[0];
        let mut best_d = -1.0;
        for &i in members {
            let d = euclidean_unchecked(&instances[i].features, origin);
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        best
    };

    let a = farthest_from(&cluster.centroid);
    let b = farthest_from(&instances[a].features);
    let mut center_a = instances[a].features.clone();
    let mut center_b = instances[b].features.clone();

    if center_a == center_b {
        return balanced_split(members, instances);
    }

    let mut assignment = vec![false; members.len()]; // true => side b
    for _ in 0..SPLIT_MAX_ITERATIONS {
        for (slot, &i) in assignment.iter_mut().zip(members.iter()) {
            let da = euclidean_unchecked(&instances[i].features, &center_a);
            let db = euclidean_unchecked(&instances[i].features, &center_b);
            *slot = db < da;
        }
        let side_a: Vec<usize> = members
            .iter()
            .zip(&assignment)
            .filter(|(_, &to_b)| !to_b)
            .map(|(&i, _)| i)
            .collect();
        let side_b: Vec<usize> = members
            .iter()
            .zip(&assignment)
            .filter(|(_, &to_b)| to_b)
            .map(|(&i, _)| i)
            .collect();
        if side_a.is_empty() || side_b.is_empty() {
            return balanced_split(members, instances);
        }
        let new_a = Cluster::from_members(side_a, instances);
        let new_b = Cluster::from_members(side_b, instances);
        let moved = euclidean_unchecked(&new_a.centroid, &center_a)
            .max(euclidean_unchecked(&new_b.centroid, &center_b));
        center_a = new_a.centroid.clone();
        center_b = new_b.centroid.clone();
        if moved < SPLIT_TOLERANCE {
            return (new_a, new_b);
        }
    }

    let side_a: Vec<usize> = members
        .iter()
        .zip(&assignment)
        .filter(|(_, &to_b)| !to_b)
        .map(|(&i, _)| i)
        .collect();
    let side_b: Vec<usize> = members
        .iter()
        .zip(&assignment)
        .filter(|(_, &to_b)| to_b)
        .map(|(&i, _)| i)
        .collect();
    (
        Cluster::from_members(side_a, instances),
        Cluster::from_members(side_b, instances),
    )
}

fn balanced_split(members: &[usize], instances: &[Instance]) -> (Cluster, Cluster) {
    let mid = members.len() / 2;
    (
        Cluster::from_members(members[..mid].to_vec(), instances),
        Cluster::from_members(members[mid..].to_vec(), instances),
    )
}

/// The cluster member closest to the centroid; ties break to the smallest id.
pub fn medoid<'a>(cluster: &Cluster, instances: &'a [Instance]) -> &'a Instance {
    let mut best: Option<(&Instance, f64)> = None;
    for &i in &cluster.member_indices {
        let inst = &instances[i];
        let d = euclidean_unchecked(&inst.features, &cluster.centroid);
        best = match best {
            None => Some((inst, d)),
            Some((cur, cur_d)) => {
                if d < cur_d || (d == cur_d && inst.id < cur.id) {
                    Some((inst, d))
                } else {
                    Some((cur, cur_d))
                }
            }
        };
    }
    best.expect("cluster is non-empty").0
}

/// Reduces a buffer to `floor(sqrt(|buffer|))` medoids (at least one).
pub fn presample(buffer: &Buffer, seed: u64) -> Result<Vec<Instance>> {
    let q = ((buffer.len() as f64).sqrt().floor() as usize).max(1);
    let clusters = bisecting_kmeans(buffer.instances(), q, seed)?;
    Ok(clusters
        .iter()
        .map(|c| medoid(c, buffer.instances()).clone())
        .collect())
}
