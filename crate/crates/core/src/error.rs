use std::fmt;

use thiserror::Error;

use crate::rigidity::ExtractionFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which metric axiom a distance table violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricAxiom {
    Shape,
    Diagonal,
    Symmetry,
    Positivity,
    Triangle,
    NonFinite,
}

impl fmt::Display for MetricAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MetricAxiom::Shape => "shape",
            MetricAxiom::Diagonal => "diagonal",
            MetricAxiom::Symmetry => "symmetry",
            MetricAxiom::Positivity => "positivity",
            MetricAxiom::Triangle => "triangle",
            MetricAxiom::NonFinite => "non-finite",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric violation ({axiom}) at positions {witness:?}")]
    MetricViolation {
        axiom: MetricAxiom,
        witness: Vec<usize>,
    },

    #[error("graph is disconnected: vertex {unreached} is not reachable from vertex {root}")]
    DisconnectedGraph { root: usize, unreached: usize },

    #[error("unknown point {0}")]
    UnknownPoint(String),

    #[error("maps do not share domain and codomain")]
    DomainMismatch,

    #[error("operator spaces do not match: {0}")]
    SpaceMismatch(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("set must be nonempty")]
    EmptySet,

    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),

    #[error("supports overlap at point {point}")]
    OverlappingSupports { point: usize },

    #[error("map is not bijective: {0}")]
    NotBijective(String),

    #[error("phase at point {point} has modulus {modulus}, expected 1")]
    NonUnitPhase { point: usize, modulus: f64 },

    #[error("matrix is not unitary: defect {defect:e}")]
    NotUnitary { defect: f64 },

    #[error("no eps in the grid reaches the target; best residual {best_residual}")]
    NoFeasibleEps { best_residual: f64 },

    #[error("Hall condition fails: {} points map into {} targets", deficiency.len(), neighborhood.len())]
    HallFailed {
        deficiency: Vec<usize>,
        neighborhood: Vec<usize>,
    },

    #[error("map is not injective: {first} and {second} share an image")]
    NotInjective { first: usize, second: usize },

    #[error("extraction failed at stage {}", .0.stage)]
    ExtractionFailed(Box<ExtractionFailure>),

    #[error("certificate invalid: {field}: expected {expected}, found {found}")]
    CertificateInvalid {
        field: String,
        expected: String,
        found: String,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
