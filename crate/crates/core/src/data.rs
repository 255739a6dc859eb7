//! Dataset I/O, stream adapters, and synthetic generators.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{opacity, ProjectedPoint};
use crate::error::{Error, Result};
use crate::types::{Buffer, Instance};

/// A read-once pull source of instances with a declared dimensionality.
///
/// After the source reports end-of-stream once, any further pull fails with
/// [`Error::SourceExhausted`]; there is no way to traverse the data twice.
pub trait StreamSource {
    fn dimensionality(&self) -> usize;
    fn next_instance(&mut self) -> Result<Option<Instance>>;
}

/// Collects up to `capacity` instances into the next buffer.
///
/// Returns `Ok(None)` exactly once, at end of stream; the caller must stop
/// pulling afterwards.
pub fn fill_buffer(source: &mut dyn StreamSource, capacity: usize) -> Result<Option<Buffer>> {
    let mut instances = Vec::with_capacity(capacity);
    while instances.len() < capacity {
        match source.next_instance() {
            Ok(Some(inst)) => instances.push(inst),
            Ok(None) => break,
            // A partial final buffer already consumed the end-of-stream
            // signal; the driver's next call sees the exhausted source.
            Err(Error::SourceExhausted) if instances.is_empty() => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    if instances.is_empty() {
        Ok(None)
    } else {
        Ok(Some(Buffer::new(instances, capacity)?))
    }
}

/// An in-memory read-once source.
pub struct VecSource {
    dimensionality: usize,
    items: std::vec::IntoIter<Instance>,
    exhausted: bool,
}

impl VecSource {
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::InvalidArgument("source must not be empty".into()));
        }
        let dimensionality = instances[0].dimensionality();
        Ok(VecSource {
            dimensionality,
            items: instances.into_iter(),
            exhausted: false,
        })
    }
}

impl StreamSource for VecSource {
    fn dimensionality(&self) -> usize {
        self.dimensionality
    }

    fn next_instance(&mut self) -> Result<Option<Instance>> {
        if self.exhausted {
            return Err(Error::SourceExhausted);
        }
        match self.items.next() {
            Some(inst) => Ok(Some(inst)),
            None => {
                self.exhausted = true;
                Ok(None)
            }
        }
    }
}

/// One occurrence of a cluster in the stream: inclusive 1-based step window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub cluster: usize,
    pub start_step: usize,
    pub end_step: usize,
}

/// The three-cluster cube stream: two clusters on neighboring cube vertices,
/// one on a diagonally-opposite vertex, with cluster 0 recurring seasonally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeClusterSpec {
    pub n: usize,
    pub steps: usize,
    pub sigma: f64,
    pub seed: u64,
    pub centroids: [[f64; 3]; 3],
    /// Step windows per cluster occurrence; `None` selects the default
    /// seasonal pattern scaled to `steps`.
    pub schedule: Option<Vec<ScheduleEntry>>,
}

impl Default for CubeClusterSpec {
    fn default() -> Self {
        CubeClusterSpec {
            n: 50_000,
            steps: 50,
            sigma: 0.1,
            seed: 0,
            centroids: [[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]],
            schedule: None,
        }
    }
}

/// Default seasonal pattern in tenths of the stream: cluster 0 in
/// [0, 0.1), [0.4, 0.5) and [0.8, 1.0]; cluster 1 in [0.1, 0.4);
/// cluster 2 in [0.5, 0.8). With 50 steps that is 1-5 / 21-25 / 41-50,
/// 6-20 and 26-40.
fn default_cluster_of_step(step0: usize, steps: usize) -> usize {
    let f = step0 as f64 / steps as f64;
    if f < 0.1 {
        0
    } else if f < 0.4 {
        1
    } else if f < 0.5 {
        0
    } else if f < 0.8 {
        2
    } else {
        0
    }
}

impl CubeClusterSpec {
    /// Cluster emitting at 0-based `step0`.
    fn cluster_of_step(&self, step0: usize, assignments: &[usize]) -> usize {
        assignments[step0]
    }

    /// Per-step cluster assignment, validating an explicit schedule:
    /// every step covered exactly once, occurrences non-overlapping.
    fn step_assignments(&self) -> Result<Vec<usize>> {
        match &self.schedule {
            None => Ok((0..self.steps)
                .map(|s| default_cluster_of_step(s, self.steps))
                .collect()),
            Some(entries) => {
                let mut assigned: Vec<Option<usize>> = vec![None; self.steps];
                for e in entries {
                    if e.cluster >= 3
                        || e.start_step == 0
                        || e.end_step < e.start_step
                        || e.end_step > self.steps
                    {
                        return Err(Error::InvalidArgument(format!(
                            "invalid schedule entry {e:?}"
                        )));
                    }
                    for s in (e.start_step - 1)..e.end_step {
                        if assigned[s].is_some() {
                            return Err(Error::InvalidArgument(format!(
                                "schedule overlaps at step {}",
                                s + 1
                            )));
                        }
                        assigned[s] = Some(e.cluster);
                    }
                }
                assigned
                    .into_iter()
                    .enumerate()
                    .map(|(s, a)| {
                        a.ok_or_else(|| {
                            Error::InvalidArgument(format!("schedule leaves step {} empty", s + 1))
                        })
                    })
                    .collect()
            }
        }
    }

    /// The effective schedule as contiguous occurrence windows (1-based).
    pub fn schedule_windows(&self) -> Result<Vec<ScheduleEntry>> {
        let assignments = self.step_assignments()?;
        let mut windows = Vec::new();
        let mut start = 0usize;
        for s in 1..=assignments.len() {
            if s == assignments.len() || assignments[s] != assignments[start] {
                windows.push(ScheduleEntry {
                    cluster: assignments[start],
                    start_step: start + 1,
                    end_step: s,
                });
                start = s;
            }
        }
        Ok(windows)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.steps == 0 {
            return Err(Error::InvalidArgument(
                "cube spec needs n >= 1 and steps >= 1".into(),
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument("sigma must be positive".into()));
        }
        Ok(())
    }
}

/// Generated dataset plus evaluation-only ground truth. Labels never travel
/// through the engine.
#[derive(Debug, Clone)]
pub struct CubeClusterData {
    pub instances: Vec<Instance>,
    pub labels: Vec<usize>,
}

impl CubeClusterData {
    pub fn into_source(self) -> Result<VecSource> {
        VecSource::new(self.instances)
    }
}

/// Generates the cube-cluster stream deterministically from the spec seed.
/// Points are spread as evenly as possible across the scheduled steps.
pub fn generate_cube_clusters(spec: &CubeClusterSpec) -> Result<CubeClusterData> {
    spec.validate()?;
    let assignments = spec.step_assignments()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let base = spec.n / spec.steps;
    let remainder = spec.n % spec.steps;
    let mut instances = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    let mut id = 0u64;
    for step0 in 0..spec.steps {
        let count = base + usize::from(step0 < remainder);
        let cluster = spec.cluster_of_step(step0, &assignments);
        let centroid = spec.centroids[cluster];
        for _ in 0..count {
            let features: Vec<f64> = centroid
                .iter()
                .map(|c| c + normal.sample(&mut rng))
                .collect();
            instances.push(Instance::new(id, step0 as u64, features)?);
            labels.push(cluster);
            id += 1;
        }
    }
    Ok(CubeClusterData { instances, labels })
}

/// Gaussian blobs on a simplex-like arrangement; a generic multi-cluster
/// dataset for tests and benchmarks at arbitrary dimensionality.
pub fn generate_blobs(
    n: usize,
    dimensionality: usize,
    clusters: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<Instance>> {
    if n == 0 || dimensionality == 0 || clusters == 0 {
        return Err(Error::InvalidArgument(
            "blobs need n, dimensionality and clusters >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    // Cluster c sits at 3.0 along coordinate (c mod dim), offset per wrap.
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|c| {
            let mut center = vec![0.0; dimensionality];
            center[c % dimensionality] = 3.0 * (1.0 + (c / dimensionality) as f64);
            center
        })
        .collect();
    (0..n)
        .map(|i| {
            let center = &centers[i % clusters];
            let features: Vec<f64> = center.iter().map(|c| c + normal.sample(&mut rng)).collect();
            Instance::new(i as u64, 0, features)
        })
        .collect()
}

/// Seeded in-place shuffle used by order-sensitivity studies.
pub fn shuffle_instances(instances: &mut [Instance], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    instances.shuffle(&mut rng);
}

/// A lazily parsed CSV source: numeric columns, optional header, optional
/// label column that is skipped.
pub struct CsvSource {
    dimensionality: usize,
    reader: csv::Reader<File>,
    label_col: Option<usize>,
    pending: Option<Instance>,
    row: usize,
    next_id: u64,
    exhausted: bool,
}

fn parse_row(
    record: &csv::StringRecord,
    label_col: Option<usize>,
    row: usize,
    id: u64,
) -> Result<Instance> {
    let mut features = Vec::with_capacity(record.len());
    for (col, field) in record.iter().enumerate() {
        if Some(col) == label_col {
            continue;
        }
        let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
            row,
            message: format!("non-numeric cell {field:?} in column {col}"),
        })?;
        features.push(value);
    }
    Instance::new(id, 0, features).map_err(|e| Error::Parse {
        row,
        message: e.to_string(),
    })
}

/// Opens a numeric CSV as a stream source; dimensionality comes from the
/// first data row.
pub fn read_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_col: Option<usize>,
) -> Result<CsvSource> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .from_reader(file);
    let mut record = csv::StringRecord::new();
    let first_row = if has_header { 2 } else { 1 };
    let got = reader.read_record(&mut record).map_err(|e| Error::Parse {
        row: first_row,
        message: e.to_string(),
    })?;
    if !got {
        return Err(Error::InvalidArgument(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let pending = parse_row(&record, label_col, first_row, 0)?;
    Ok(CsvSource {
        dimensionality: pending.dimensionality(),
        reader,
        label_col,
        pending: Some(pending),
        row: first_row,
        next_id: 1,
        exhausted: false,
    })
}

impl StreamSource for CsvSource {
    fn dimensionality(&self) -> usize {
        self.dimensionality
    }

    fn next_instance(&mut self) -> Result<Option<Instance>> {
        if self.exhausted {
            return Err(Error::SourceExhausted);
        }
        if let Some(inst) = self.pending.take() {
            return Ok(Some(inst));
        }
        let mut record = csv::StringRecord::new();
        self.row += 1;
        let got = self
            .reader
            .read_record(&mut record)
            .map_err(|e| Error::Parse {
                row: self.row,
                message: e.to_string(),
            })?;
        if !got {
            self.exhausted = true;
            return Ok(None);
        }
        let inst = parse_row(&record, self.label_col, self.row, self.next_id)?;
        if inst.dimensionality() != self.dimensionality {
            return Err(Error::Parse {
                row: self.row,
                message: format!(
                    "ragged row: expected {} columns, got {}",
                    self.dimensionality,
                    inst.dimensionality()
                ),
            });
        }
        self.next_id += 1;
        Ok(Some(inst))
    }
}

fn real(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes a layout snapshot as `id,x,y,step,opacity` with LF endings,
/// ordered by id.
pub fn write_snapshot(
    points: &[ProjectedPoint],
    current_step: u64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "id,x,y,step,opacity").map_err(io_err)?;
    let mut ordered: Vec<&ProjectedPoint> = points.iter().collect();
    ordered.sort_by_key(|p| p.id);
    for p in ordered {
        let o = opacity(p.step, current_step)?;
        writeln!(
            out,
            "{},{},{},{},{}",
            p.id,
            real(p.position.x),
            real(p.position.y),
            p.step,
            o
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// One parsed snapshot row.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotRow {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub step: u64,
    pub opacity: f64,
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Vec<SnapshotRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["id", "x", "y", "step", "opacity"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidArgument(format!(
            "{}: expected columns id,x,y,step,opacity",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or(Error::Parse {
                row,
                message: "missing column".into(),
            })
        };
        let parse_f = |idx: usize| -> Result<f64> {
            field(idx)?.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric cell {:?}", record.get(idx).unwrap_or("")),
            })
        };
        let parse_u = |idx: usize| -> Result<u64> {
            field(idx)?.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-integer cell {:?}", record.get(idx).unwrap_or("")),
            })
        };
        rows.push(SnapshotRow {
            id: parse_u(0)?,
            x: parse_f(1)?,
            y: parse_f(2)?,
            step: parse_u(3)?,
            opacity: parse_f(4)?,
        });
    }
    Ok(rows)
}
