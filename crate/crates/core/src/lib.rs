//! Single-pass streaming projection of multidimensional data to 2D.
//!
//! The pipeline consumes a stream buffer by buffer: each buffer is condensed
//! to candidate landmarks by bisecting k-means, candidates are admitted by an
//! incremental local-outlier-factor test, admitted landmarks trigger a
//! classical-MDS rebuild of the projection function, and every point — old or
//! new — is placed through distance-based interpolation. Once a buffer has
//! been processed its original features are gone; history is re-projected
//! from distances recovered in the 2D layout itself.
//!
//! Entry points: [`engine::Engine`] drives the pipeline, [`data`] provides
//! stream sources and generators, [`eval`] measures layout quality.

pub mod cluster;
pub mod data;
pub mod distance;
pub mod embed;
pub mod engine;
pub mod error;
pub mod eval;
pub mod novelty;
pub mod types;

pub use embed::ProjectorKind;
pub use engine::{Engine, EngineConfig, ProjectedPoint};
pub use error::{Error, Result};
pub use types::{Buffer, Instance, Point2D};
