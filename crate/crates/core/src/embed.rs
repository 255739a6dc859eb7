//! Landmark embedding and distance-based out-of-sample projection.
//!
//! Classical MDS places the landmark set, two interpolators (Pekalska and
//! Landmark-MDS) map distance-to-landmark vectors to 2D, and orthogonal
//! Procrustes aligns consecutive landmark layouts so the projection keeps
//! its frame as it evolves.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;

use crate::distance::pairwise_distances;
use crate::error::{Error, Result};
use crate::types::{DistanceVector, Instance, Point2D};

/// Eigenvalues below this are treated as zero to avoid imaginary coordinates.
const EIGEN_CLAMP: f64 = 1e-10;
const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// The accumulated sample anchoring the projection function: the only
/// high-dimensional data the engine ever retains.
#[derive(Debug, Clone, Default)]
pub struct LandmarkSet {
    ids: Vec<u64>,
    steps: Vec<u64>,
    features: Vec<Vec<f64>>,
    positions: Vec<Point2D>,
    distances: DMatrix<f64>,
}

impl LandmarkSet {
    pub fn new() -> Self {
        LandmarkSet {
            ids: Vec::new(),
            steps: Vec::new(),
            features: Vec::new(),
            positions: Vec::new(),
            distances: DMatrix::zeros(0, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn positions(&self) -> &[Point2D] {
        &self.positions
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.distances
    }

    /// Appends new landmarks and extends the cached pairwise distance matrix.
    /// New-vs-old distances are computed now, while the new features are in hand.
    pub fn extend(&mut self, instances: &[Instance]) -> Result<()> {
        for inst in instances {
            if self.ids.contains(&inst.id) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate landmark id {}",
                    inst.id
                )));
            }
            self.ids.push(inst.id);
            self.steps.push(inst.step);
            self.features.push(inst.features.clone());
            self.positions.push(Point2D::ORIGIN);
        }
        self.distances = pairwise_distances(&self.features)?;
        Ok(())
    }

    pub fn set_positions(&mut self, positions: Vec<Point2D>) {
        debug_assert_eq!(positions.len(), self.len());
        self.positions = positions;
    }
}

struct MdsDecomposition {
    coords: Vec<Point2D>,
    /// Rows `v_a / sqrt(lambda_a)` for the top-2 eigenpairs (zero rows for
    /// clamped eigenvalues); the pseudo-inverse side of the triangulation.
    inv: DMatrix<f64>,
    /// Column means of the squared distance matrix.
    mean_sq: DVector<f64>,
    /// Per-point squared norm lost by the 2D truncation: `B_jj - |P_j|^2`.
    residuals: Vec<f64>,
}

/// A landmark layout plus what the 2D truncation discarded per landmark.
///
/// `residuals[j]` added to a squared layout distance recovers an estimate of
/// the squared original-space distance to landmark `j`; with it, a point
/// whose layout distances are exact re-triangulates to itself.
#[derive(Debug, Clone)]
pub struct LandmarkLayout {
    pub positions: Vec<Point2D>,
    pub residuals: Vec<f64>,
}

fn validate_distance_matrix(d: &DMatrix<f64>) -> Result<()> {
    if d.nrows() != d.ncols() || d.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "distance matrix must be square and non-empty".into(),
        ));
    }
    for i in 0..d.nrows() {
        if d[(i, i)].abs() > SYMMETRY_TOLERANCE {
            return Err(Error::InvalidArgument(
                "distance matrix must have a zero diagonal".into(),
            ));
        }
        for j in 0..d.ncols() {
            let v = d[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(
                    "distance matrix entries must be finite and non-negative".into(),
                ));
            }
            if (v - d[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::InvalidArgument(
                    "distance matrix must be symmetric".into(),
                ));
            }
        }
    }
    Ok(())
}

fn mds_decompose(d: &DMatrix<f64>) -> Result<MdsDecomposition> {
    validate_distance_matrix(d)?;
    let n = d.nrows();
    let d2 = d.map(|v| v * v);
    let mean_sq = DVector::from_iterator(n, d2.column_iter().map(|c| c.mean()));
    let grand = mean_sq.mean();

    // Double-centered Gram matrix B = -1/2 J D^2 J.
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (d2[(i, j)] - mean_sq[i] - mean_sq[j] + grand);
        }
    }

    let b_diag: Vec<f64> = (0..n).map(|i| b[(i, i)]).collect();
    let eig = nalgebra::SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut coords = vec![Point2D::ORIGIN; n];
    let mut inv = DMatrix::zeros(2, n);
    for axis in 0..2usize.min(n) {
        let idx = order[axis];
        let lambda = eig.eigenvalues[idx];
        if lambda <= EIGEN_CLAMP {
            continue; // clamp noise and negative eigenvalues to zero
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        // Deterministic sign: the largest-magnitude component is positive.
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if v[lead] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        let scale = lambda.sqrt();
        for i in 0..n {
            let c = v[i] * scale;
            if axis == 0 {
                coords[i].x = c;
            } else {
                coords[i].y = c;
            }
            inv[(axis, i)] = v[i] / scale;
        }
    }
    let residuals = (0..n)
        .map(|i| (b_diag[i] - coords[i].x * coords[i].x - coords[i].y * coords[i].y).max(0.0))
        .collect();
    Ok(MdsDecomposition {
        coords,
        inv,
        mean_sq,
        residuals,
    })
}

/// Classical (Torgerson) MDS of a symmetric distance matrix into 2D.
///
/// A single point maps to the origin; two points map to `(-d/2, 0)` and
/// `(d/2, 0)` up to sign.
pub fn classical_mds(distances: &DMatrix<f64>) -> Result<Vec<Point2D>> {
    Ok(mds_decompose(distances)?.coords)
}

/// Classical MDS layout together with the per-landmark truncation residuals.
pub fn classical_mds_layout(distances: &DMatrix<f64>) -> Result<LandmarkLayout> {
    let decomp = mds_decompose(distances)?;
    Ok(LandmarkLayout {
        positions: decomp.coords,
        residuals: decomp.residuals,
    })
}

/// A rigid 2D motion: orthogonal matrix (rotation or reflection) plus translation.
#[derive(Debug, Clone, Copy)]
pub struct Transform2D {
    pub rotation: Matrix2<f64>,
    pub translation: Vector2<f64>,
}

impl Transform2D {
    pub fn identity() -> Self {
        Transform2D {
            rotation: Matrix2::identity(),
            translation: Vector2::zeros(),
        }
    }

    pub fn apply(&self, p: Point2D) -> Point2D {
        let v = self.rotation * Vector2::new(p.x, p.y) + self.translation;
        Point2D::new(v.x, v.y)
    }

    pub fn is_rigid(&self) -> bool {
        let rtr = self.rotation.transpose() * self.rotation;
        (rtr - Matrix2::identity()).norm() <= 1e-9
    }
}

/// Least-squares rigid alignment of `source` onto `target` (rotation or
/// reflection plus translation, no scaling), paired by index.
pub fn procrustes_align(source: &[Point2D], target: &[Point2D]) -> Result<Transform2D> {
    if source.len() != target.len() || source.is_empty() {
        return Err(Error::InvalidArgument(
            "procrustes requires equally sized, non-empty point sets".into(),
        ));
    }
    let n = source.len() as f64;
    let s_mean = Vector2::new(
        source.iter().map(|p| p.x).sum::<f64>() / n,
        source.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let t_mean = Vector2::new(
        target.iter().map(|p| p.x).sum::<f64>() / n,
        target.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let mut h = Matrix2::zeros();
    for (s, t) in source.iter().zip(target) {
        let sc = Vector2::new(s.x, s.y) - s_mean;
        let tc = Vector2::new(t.x, t.y) - t_mean;
        h += sc * tc.transpose();
    }
    let rotation = if h.norm() < 1e-15 {
        Matrix2::identity()
    } else {
        let svd = h.svd(true, true);
        let u = svd.u.unwrap();
        let v_t = svd.v_t.unwrap();
        v_t.transpose() * u.transpose()
    };
    let translation = t_mean - rotation * s_mean;
    Ok(Transform2D {
        rotation,
        translation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProjectorKind {
    Pekalska,
    LandmarkMds,
}

impl std::fmt::Display for ProjectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectorKind::Pekalska => write!(f, "pekalska"),
            ProjectorKind::LandmarkMds => write!(f, "lmds"),
        }
    }
}

/// A fitted interpolator mapping a distance-to-landmarks vector to 2D.
#[derive(Debug, Clone)]
pub enum ProjectionFunction {
    /// Least-squares linear map `delta' W` with `W = pinv(D) Y`.
    Pekalska { weights: DMatrix<f64> },
    /// Landmark-MDS triangulation `-1/2 L+ (delta^2 - mu)` in the canonical
    /// MDS frame, followed by the rigid transform that aligned the landmark
    /// layout into the caller's frame.
    LandmarkMds {
        inv: DMatrix<f64>,
        mean_sq: DVector<f64>,
        transform: Transform2D,
    },
}

impl ProjectionFunction {
    pub fn kind(&self) -> ProjectorKind {
        match self {
            ProjectionFunction::Pekalska { .. } => ProjectorKind::Pekalska,
            ProjectionFunction::LandmarkMds { .. } => ProjectorKind::LandmarkMds,
        }
    }

    pub fn landmark_count(&self) -> usize {
        match self {
            ProjectionFunction::Pekalska { weights } => weights.nrows(),
            ProjectionFunction::LandmarkMds { mean_sq, .. } => mean_sq.len(),
        }
    }

    /// Maps a distance vector to a 2D point.
    pub fn apply(&self, delta: &DistanceVector) -> Result<Point2D> {
        if delta.len() != self.landmark_count() {
            return Err(Error::DimensionMismatch {
                expected: self.landmark_count(),
                actual: delta.len(),
            });
        }
        match self {
            ProjectionFunction::Pekalska { weights } => {
                let mut x = 0.0;
                let mut y = 0.0;
                for (i, d) in delta.values().iter().enumerate() {
                    x += d * weights[(i, 0)];
                    y += d * weights[(i, 1)];
                }
                Ok(Point2D::new(x, y))
            }
            ProjectionFunction::LandmarkMds {
                inv,
                mean_sq,
                transform,
            } => {
                let mut x = 0.0;
                let mut y = 0.0;
                for (i, d) in delta.values().iter().enumerate() {
                    let centered = d * d - mean_sq[i];
                    x += inv[(0, i)] * centered;
                    y += inv[(1, i)] * centered;
                }
                Ok(transform.apply(Point2D::new(-0.5 * x, -0.5 * y)))
            }
        }
    }
}

/// Fits the Pekalska linear interpolator: solves `D W = Y` in the
/// least-squares sense via the pseudo-inverse.
pub fn fit_pekalska(
    landmark_distances: &DMatrix<f64>,
    landmark_positions: &[Point2D],
) -> Result<ProjectionFunction> {
    validate_distance_matrix(landmark_distances)?;
    let l = landmark_distances.nrows();
    if landmark_positions.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            actual: landmark_positions.len(),
        });
    }
    let y = DMatrix::from_fn(l, 2, |i, j| {
        if j == 0 {
            landmark_positions[i].x
        } else {
            landmark_positions[i].y
        }
    });
    let pinv = landmark_distances
        .clone()
        .svd(true, true)
        .pseudo_inverse(EIGEN_CLAMP)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ProjectionFunction::Pekalska { weights: pinv * y })
}

/// Fits the Landmark-MDS interpolator. `landmark_positions` must be the
/// classical MDS layout of `landmark_distances`, possibly under a rigid
/// transform; the fitted function reproduces those positions.
pub fn fit_lmds(
    landmark_distances: &DMatrix<f64>,
    landmark_positions: &[Point2D],
) -> Result<ProjectionFunction> {
    let decomp = mds_decompose(landmark_distances)?;
    if landmark_positions.len() != decomp.coords.len() {
        return Err(Error::DimensionMismatch {
            expected: decomp.coords.len(),
            actual: landmark_positions.len(),
        });
    }
    let transform = procrustes_align(&decomp.coords, landmark_positions)?;
    Ok(ProjectionFunction::LandmarkMds {
        inv: decomp.inv,
        mean_sq: decomp.mean_sq,
        transform,
    })
}

/// Fits the configured interpolator kind.
pub fn fit(
    kind: ProjectorKind,
    landmark_distances: &DMatrix<f64>,
    landmark_positions: &[Point2D],
) -> Result<ProjectionFunction> {
    match kind {
        ProjectorKind::Pekalska => fit_pekalska(landmark_distances, landmark_positions),
        ProjectorKind::LandmarkMds => fit_lmds(landmark_distances, landmark_positions),
    }
}
