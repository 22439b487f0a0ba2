//! High-frequency analysis and evaluation toolkit for 3D point-cloud
//! upsampling.
//!
//! The crate is generic over the coordinate scalar ([`Real`], implemented
//! for `f32` and `f64`); the aliases at the crate root fix it to `f64`,
//! which is what the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvh;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod protocol;
pub mod sampling;
pub mod scalar;
pub mod shapes;
pub mod spatial;
pub mod transport;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{
    normalize_unit_sphere, NormalizationTransform, Point3, PointCloud, TriangleMesh,
};
pub use metrics::{evaluate_all, Metric, MetricConfig, MetricReport};
pub use scalar::Real;
pub use spatial::KdTree;

pub type Point = Point3<f64>;
pub type Cloud = PointCloud<f64>;
pub type Mesh = TriangleMesh<f64>;
pub type Transform = NormalizationTransform<f64>;
pub type SpatialIndex = KdTree<f64>;

pub type Point32 = Point3<f32>;
pub type Cloud32 = PointCloud<f32>;
pub type Mesh32 = TriangleMesh<f32>;
