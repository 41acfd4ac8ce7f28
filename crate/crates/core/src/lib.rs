//! Geodesics on conical manifolds: chart metrics that are smooth except at
//! finitely many vertices.
//!
//! Paths are discretized on a uniform parameter grid and driven to critical
//! points of the energy `E = int |gamma'|^2` by alternating a preconditioned
//! curve-shortening step (which never moves nodes sitting on a vertex) with an
//! explicit reparametrization that slides each vertex break to its
//! constant-speed position. Results are certified against the three defining
//! conditions of a conical geodesic and can be cross-checked against
//! cone unrolling or a grid Dijkstra oracle, or re-shot from their initial
//! velocity.
//!
//! The core is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the common `f64` instantiations.

pub mod brach;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod oracle;
pub mod paths;
mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{lit, to_f64, wrap_angle, Real};

pub type Metric = geometry::Metric<f64>;
pub type Metric32 = geometry::Metric<f32>;
pub type DiscretePath = paths::DiscretePath<f64>;
pub type DiscretePath32 = paths::DiscretePath<f32>;
pub type BreakStructure = paths::BreakStructure<f64>;
pub type FlowOptions = flows::FlowOptions<f64>;
pub type FlowReport = flows::FlowReport<f64>;
pub type GeodesicCertificate = verify::GeodesicCertificate<f64>;
pub type BrachScenario = brach::BrachScenario<f64>;
