//! Octree-driven denoising of unorganized 3D point clouds.
//!
//! The crate is `no_std` and needs only `alloc`. It provides the algorithmic
//! stages of the denoiser; file formats, the pipeline driver and the command
//! line live in the `pcdenoise` crate.
//!
//! Stages, in pipeline order:
//!
//! - [`octree`]: balanced adaptive octree and its uniform-resolution grid
//! - [`clustering`]: same-level leaf graph and k-largest component extraction
//! - [`density`]: iterative pruning of cells with sparse neighborhoods
//! - [`smoothing`]: representative points and meshless Laplacian smoothing
//! - [`mesh`]: circumradius pruning and 1-ring smoothing of a reconstructed mesh
//!
//! [`contamination`] generates seeded, labeled synthetic noise for evaluation.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod clustering;
pub mod contamination;
pub mod density;
mod error;
pub mod geometry;
pub mod mesh;
pub mod octree;
pub mod smoothing;
pub mod spatial;

pub use error::{Error, Result};
pub use geometry::{Aabb, BoundingCube, Label, Point3, PointCloud};

pub(crate) type FxHashMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;
