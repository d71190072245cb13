use thiserror::Error;

use crate::energy::EnergyResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: invalid input: {reason}")]
    InvalidInput { op: &'static str, reason: String },

    #[error("curve is not strictly convex at t = {t:.6} (h + h'' = {speed:.3e})")]
    NotStrictlyConvex { t: f64, speed: f64 },

    #[error("from_point_cloud: points {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },

    #[error("from_polygon_grid: degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("from_polygon_grid: grid too coarse, only {points} point(s) inside the polygon")]
    TooCoarse { points: usize },

    #[error("{op}: singular system (rank {rank} of {n}, condition number {condition:.3e})")]
    SingularSystem {
        op: &'static str,
        rank: usize,
        n: usize,
        condition: f64,
    },

    #[error("solve_equilibrium: normalization sum {total:.3e} is not positive")]
    NoPositiveNormalization { total: f64 },

    #[error("maximize_energy: not converged after {} iterations (gap {:.3e})", .best.iterations, .best.optimality_gap)]
    NotConverged { best: Box<EnergyResult> },

    #[error("boundary_support_fraction: mask has length {got}, space has {expected} nodes")]
    MaskLengthMismatch { expected: usize, got: usize },

    #[error("all_pairs_distances: graph is disconnected ({} components)", .components.len())]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("graph_curvature: distance matrix is singular (rank {rank} of {n}) and the system is inconsistent")]
    SingularDistanceMatrix { rank: usize, n: usize },

    #[error("density_vs_curvature: equilibrium solution is signed (min mass {min_mass:.3e})")]
    NotProbability { min_mass: f64 },

    #[error("prop2_flat_curve_demo: search budget exhausted: {0}")]
    SearchBudgetExceeded(String),

    #[error("render_svg: nothing to draw")]
    EmptyInput,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(op: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            op,
            reason: reason.into(),
        }
    }

    /// True for failures where the input was valid but the mathematics did not resolve.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::NoPositiveNormalization { .. }
                | Error::NotConverged { .. }
                | Error::SingularDistanceMatrix { .. }
                | Error::NotProbability { .. }
                | Error::SearchBudgetExceeded(_)
        )
    }

    /// Stable kebab-case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput { .. } => "invalid-input",
            Error::NotStrictlyConvex { .. } => "not-strictly-convex",
            Error::DuplicatePoints { .. } => "duplicate-points",
            Error::DegeneratePolygon(_) => "degenerate-polygon",
            Error::TooCoarse { .. } => "too-coarse",
            Error::SingularSystem { .. } => "singular-system",
            Error::NoPositiveNormalization { .. } => "no-positive-normalization",
            Error::NotConverged { .. } => "not-converged",
            Error::MaskLengthMismatch { .. } => "mask-length-mismatch",
            Error::Disconnected { .. } => "disconnected",
            Error::SingularDistanceMatrix { .. } => "singular-distance-matrix",
            Error::NotProbability { .. } => "not-probability",
            Error::SearchBudgetExceeded(_) => "search-budget-exceeded",
            Error::EmptyInput => "empty-input",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }
}
