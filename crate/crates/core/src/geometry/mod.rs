//! Chart metrics with isolated singular points and the coordinate machinery
//! around them.

pub mod expr;
pub mod linalg;
mod metric;
pub mod stereo;

pub use expr::{Expr, ScalarField};
pub use linalg::Matrix;
pub use metric::{
    brach_metric, induced_sphere_metric, ConformalMetric, GradientMode, LiftedSphereMetric, Metric, MetricKind,
};
pub use stereo::{stereographic_fwd, stereographic_inv};

/// Radius of the ball around each vertex inside which a point counts as
/// incident. Membership is strict: a point at exactly this distance is not
/// incident.
pub const VERTEX_TOL: f64 = 1e-9;

/// Central-difference step for factor gradients.
pub const FD_STEP: f64 = 1e-5;

/// Height `y_{n+1}` at which lifted-sphere evaluation switches from the
/// north-pole chart to the south-pole chart.
pub const LIFT_HANDOFF: f64 = 0.5;
