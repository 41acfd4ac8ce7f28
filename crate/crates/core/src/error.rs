use thiserror::Error;

/// Errors raised by metric evaluation, path operations and flows.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric evaluation failed at {point}: {reason}")]
    Evaluation { point: String, reason: String },
    #[error("point {point} lies within the vertex tolerance of a singular point")]
    Singularity { point: String },
    #[error("operation `{op}` is not supported for metric kind {kind}")]
    UnsupportedKind { op: &'static str, kind: String },
    #[error("the north pole has no stereographic image")]
    Pole,
    #[error("point is not on the unit sphere (|y| = {norm})")]
    NotOnSphere { norm: f64 },
    #[error("energy level {energy} does not exceed the potential {potential} at {point}")]
    EnergyLevel { point: String, potential: f64, energy: f64 },
    #[error("segment {index}: {source}")]
    Segment {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("path has zero length")]
    DegeneratePath,
    #[error("winding seeds require at least one vertex to wind around")]
    NoCenter,
    #[error("variation violates the support condition at nodes {indices:?}")]
    InvalidVariation { indices: Vec<usize> },
    #[error("expected exactly one break, found {found}")]
    BreakCount { found: usize },
    #[error("reparametrization break a = {a} is at an end of the parameter interval")]
    DivisionSingularity { a: f64 },
    #[error("inconsistent tau bounds: lo = {lo} >= hi = {hi}")]
    InconsistentBound { lo: f64, hi: f64 },
    #[error("expression parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("{0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn at_segment(self, index: usize) -> Error {
        match self {
            Error::Segment { .. } => self,
            other => Error::Segment { index, source: Box::new(other) },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
