//! Domain types shared by the whole pipeline.

use serde::Serialize;

use crate::error::{Error, Result};

/// One high-dimensional record with identity and arrival step.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: u64,
    pub step: u64,
    pub features: Vec<f64>,
}

impl Instance {
    /// Rejects non-finite feature values at ingestion.
    pub fn new(id: u64, step: u64, features: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidArgument(
                "instance must have at least one feature".into(),
            ));
        }
        if let Some(index) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Instance { id, step, features })
    }

    pub fn dimensionality(&self) -> usize {
        self.features.len()
    }
}

/// A fixed-capacity chunk of the stream, processed atomically.
#[derive(Debug, Clone)]
pub struct Buffer {
    instances: Vec<Instance>,
    capacity: usize,
}

impl Buffer {
    /// The final buffer of a stream may be shorter than `capacity`,
    /// but never empty.
    pub fn new(instances: Vec<Instance>, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument(
                "buffer capacity must be >= 1".into(),
            ));
        }
        if instances.is_empty() {
            return Err(Error::InvalidArgument("buffer must not be empty".into()));
        }
        if instances.len() > capacity {
            return Err(Error::InvalidArgument(format!(
                "buffer holds {} instances but capacity is {}",
                instances.len(),
                capacity
            )));
        }
        let dim = instances[0].dimensionality();
        for inst in &instances {
            if inst.dimensionality() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: inst.dimensionality(),
                });
            }
        }
        Ok(Buffer {
            instances,
            capacity,
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dimensionality(&self) -> usize {
        self.instances[0].dimensionality()
    }
}

/// A 2D position in the visual space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Distances from one point to every landmark, in landmark insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector {
    values: Vec<f64>,
}

impl DistanceVector {
    pub fn new(values: Vec<f64>) -> Self {
        DistanceVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_rejects_non_finite() {
        let err = Instance::new(0, 0, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        let err = Instance::new(0, 0, vec![f64::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0 }));
    }

    #[test]
    fn buffer_rejects_mixed_dimensionality() {
        let a = Instance::new(0, 0, vec![1.0, 2.0]).unwrap();
        let b = Instance::new(1, 0, vec![1.0]).unwrap();
        assert!(Buffer::new(vec![a, b], 10).is_err());
    }

    #[test]
    fn buffer_enforces_capacity() {
        let a = Instance::new(0, 0, vec![1.0]).unwrap();
        let b = Instance::new(1, 0, vec![2.0]).unwrap();
        assert!(Buffer::new(vec![a.clone(), b], 1).is_err());
        assert!(Buffer::new(vec![], 1).is_err());
        assert!(Buffer::new(vec![a], 0).is_err());
    }
}
