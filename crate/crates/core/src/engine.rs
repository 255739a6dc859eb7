//! The streaming projection engine.
//!
//! Ingests fixed-size buffers, detects distribution changes, rebuilds the
//! projection function when needed, re-projects the already placed points
//! from distances recovered off the current 2D layout, and finally projects
//! the buffer — touching each instance's high-dimensional coordinates at
//! most once. Only landmark coordinates are retained.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::cluster;
use crate::distance::{distances_to_landmarks, euclidean_unchecked};
use crate::embed::{self, LandmarkSet, ProjectionFunction, ProjectorKind};
use crate::error::{Error, Result};
use crate::novelty::{self, LofConfig, NeighborhoodIndex};
use crate::types::{Buffer, DistanceVector, Instance, Point2D};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EngineConfig {
    pub buffer_capacity: usize,
    pub lof: LofConfig,
    pub projector: ProjectorKind,
    pub seed: u64,
    /// Baseline mode: change detection is disabled after the first buffer,
    /// so the initial projection function is used for the whole stream.
    pub frozen: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            buffer_capacity: 1000,
            lof: LofConfig::default(),
            projector: ProjectorKind::LandmarkMds,
            seed: 0,
            frozen: false,
        }
    }
}

/// A placed record. Carries no feature field: high-dimensional coordinates
/// of non-landmark points are discarded at projection time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProjectedPoint {
    pub id: u64,
    /// Arrival step S_p: the engine step at which the point was projected.
    pub step: u64,
    pub position: Point2D,
    pub is_landmark: bool,
}

/// What one `push_buffer` call did.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BufferReport {
    pub buffer_index: u64,
    pub novel_landmarks: usize,
    pub rebuilt: bool,
    pub points_reprojected: usize,
    pub points_projected: usize,
    pub elapsed_seconds: f64,
}

/// Age-based opacity: `1 / (S - S_p + 1)`, so points from the current step
/// are fully visible.
pub fn opacity(point_step: u64, current_step: u64) -> Result<f64> {
    if current_step < point_step {
        return Err(Error::InvalidArgument(format!(
            "current step {current_step} precedes point step {point_step}"
        )));
    }
    Ok(1.0 / ((current_step - point_step) as f64 + 1.0))
}

/// The only state persisting across buffers.
pub struct Engine {
    config: EngineConfig,
    dimensionality: Option<usize>,
    landmarks: LandmarkSet,
    function: Option<ProjectionFunction>,
    /// Monotone fit counter; lets callers observe rebuild-skips.
    generation: u64,
    points: Vec<ProjectedPoint>,
    point_index_by_id: HashMap<u64, usize>,
    novelty_index: Option<NeighborhoodIndex>,
    step: u64,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        if config.buffer_capacity == 0 {
            return Err(Error::InvalidArgument(
                "buffer capacity must be >= 1".into(),
            ));
        }
        config.lof.validate()?;
        Ok(Engine {
            config,
            dimensionality: None,
            landmarks: LandmarkSet::new(),
            function: None,
            generation: 0,
            points: Vec::new(),
            point_index_by_id: HashMap::new(),
            novelty_index: None,
            step: 0,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks.len()
    }

    /// Number of times a projection function has been fitted.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// All projected points in arrival order, at their current positions.
    pub fn snapshot(&self) -> Vec<ProjectedPoint> {
        self.points.clone()
    }

    /// Processes one buffer. Consumes the buffer; instance features are
    /// dropped afterwards unless the instance became a landmark.
    pub fn push_buffer(&mut self, buffer: Buffer) -> Result<BufferReport> {
        let started = Instant::now();
        match self.dimensionality {
            None => self.dimensionality = Some(buffer.dimensionality()),
            Some(dim) => {
                if buffer.dimensionality() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: buffer.dimensionality(),
                    });
                }
            }
        }
        for inst in buffer.instances() {
            if self.point_index_by_id.contains_key(&inst.id) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate instance id {}",
                    inst.id
                )));
            }
        }

        let medoids = cluster::presample(&buffer, self.config.seed ^ self.step)?;
        let bootstrap = self.landmarks.len() <= self.config.lof.k;
        let mut novel: Vec<Instance> = if self.config.frozen && self.function.is_some() {
            Vec::new()
        } else if bootstrap {
            medoids.clone()
        } else {
            novelty::filter_novel(&medoids, self.novelty_index.as_mut(), &self.config.lof)
        };
        if !bootstrap && !novel.is_empty() {
            // A confirmed change. The sequential filter deliberately admits
            // only the first few representatives of a new region; adopt the
            // buffer's remaining medoids that sit closer to the confirmed
            // novelty than to any existing landmark, so a fresh region gets
            // the same medoid coverage the first buffer gave the initial
            // distribution. Without this, a new cluster is anchored by a
            // handful of landmarks and embeds far worse than the old ones.
            let nearest = |feats: &[f64], others: &[Vec<f64>]| -> f64 {
                others
                    .iter()
                    .map(|o| euclidean_unchecked(feats, o))
                    .fold(f64::INFINITY, f64::min)
            };
            let novel_features: Vec<Vec<f64>> = novel.iter().map(|m| m.features.clone()).collect();
            let promoted: Vec<Instance> = medoids
                .iter()
                .filter(|m| !novel.iter().any(|a| a.id == m.id))
                .filter(|m| {
                    nearest(&m.features, &novel_features)
                        < nearest(&m.features, self.landmarks.features())
                })
                .cloned()
                .collect();
            novel.extend(promoted);
        }

        let mut reprojected = 0;
        let rebuilt = !novel.is_empty() || self.function.is_none();
        if rebuilt {
            reprojected = self.rebuild(&novel)?;
        }

        // Project the buffer with the current function, using true
        // high-dimensional distances (features are still in hand).
        let function = self
            .function
            .as_ref()
            .expect("a function exists after the first rebuild");
        let landmark_ids: HashMap<u64, usize> = self
            .landmarks
            .ids()
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let mut projected = 0;
        for inst in buffer.instances() {
            let (position, is_landmark) = match landmark_ids.get(&inst.id) {
                Some(&lm) => (self.landmarks.positions()[lm], true),
                None => {
                    let delta = distances_to_landmarks(&inst.features, self.landmarks.features())?;
                    (function.apply(&delta)?, false)
                }
            };
            let point = ProjectedPoint {
                id: inst.id,
                step: self.step,
                position,
                is_landmark,
            };
            self.point_index_by_id.insert(inst.id, self.points.len());
            self.points.push(point);
            projected += 1;
        }

        // The index covers all landmark coordinates once enough exist.
        if self.novelty_index.is_none() && self.landmarks.len() > self.config.lof.k {
            self.novelty_index = Some(novelty::build_index(
                self.landmarks.features(),
                &self.config.lof,
            )?);
        }

        self.step += 1;
        Ok(BufferReport {
            buffer_index: self.step - 1,
            novel_landmarks: novel.len(),
            rebuilt,
            points_reprojected: reprojected,
            points_projected: projected,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        })
    }

    /// Rebuilds the projection function around `novel` new landmarks and
    /// re-projects the existing points. Returns the re-projection count.
    fn rebuild(&mut self, novel: &[Instance]) -> Result<usize> {
        let old_count = self.landmarks.len();
        // Old-landmark positions in the current frame: recovered distance
        // vectors for the existing points are measured against these.
        let old_positions: Vec<Point2D> = self.landmarks.positions().to_vec();

        self.landmarks.extend(novel)?;
        let layout = embed::classical_mds_layout(self.landmarks.distances())?;
        let residuals = layout.residuals;
        let aligned = if old_count > 0 {
            let transform =
                embed::procrustes_align(&layout.positions[..old_count], &old_positions)?;
            layout
                .positions
                .iter()
                .map(|&p| transform.apply(p))
                .collect()
        } else {
            layout.positions
        };
        self.landmarks.set_positions(aligned);

        let function = embed::fit(
            self.config.projector,
            self.landmarks.distances(),
            self.landmarks.positions(),
        )?;

        // Re-project every existing non-landmark point from distances
        // recovered off the 2D layout; landmark points take their aligned
        // layout positions directly.
        let mut reprojected = 0;
        let landmark_positions = self.landmarks.positions().to_vec();
        let landmark_ids: HashMap<u64, usize> = self
            .landmarks
            .ids()
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        for point in &mut self.points {
            if point.is_landmark {
                let lm = landmark_ids[&point.id];
                point.position = landmark_positions[lm];
                continue;
            }
            // Recovered distances: squared layout distance plus the
            // landmark's truncation residual estimates the squared
            // original-space distance the layout can no longer express.
            let mut values = Vec::with_capacity(self.landmarks.len());
            let pos = [point.position.x, point.position.y];
            for (j, old) in old_positions.iter().enumerate() {
                let d = euclidean_unchecked(&pos, &[old.x, old.y]);
                values.push((d * d + residuals[j]).sqrt());
            }
            // New landmarks never had a position in the old frame; their
            // aligned layout positions are the best stand-in, since the
            // alignment maps the new layout into that same frame.
            for (j, p) in landmark_positions.iter().enumerate().skip(old_count) {
                let d = euclidean_unchecked(&pos, &[p.x, p.y]);
                values.push((d * d + residuals[j]).sqrt());
            }
            point.position = function.apply(&DistanceVector::new(values))?;
            reprojected += 1;
        }

        // Fold any landmark the density reference has not seen yet into the
        // index (covers landmarks admitted while the index did not exist).
        if let Some(index) = self.novelty_index.as_mut() {
            let covered = index.len();
            for feats in self.landmarks.features().iter().skip(covered) {
                index.insert(feats.clone());
            }
        }

        self.function = Some(function);
        self.generation += 1;
        Ok(reprojected)
    }

    /// Test hook: forces a rebuild with zero new landmarks.
    pub fn force_rebuild(&mut self) -> Result<()> {
        if self.function.is_none() {
            return Err(Error::InvalidArgument(
                "cannot force a rebuild before the first buffer".into(),
            ));
        }
        self.rebuild(&[])?;
        Ok(())
    }

    pub fn landmarks(&self) -> &LandmarkSet {
        &self.landmarks
    }
}
