use thiserror::Error;

/// Errors raised by the linear algebra, kernel and scenario layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch between {left_rows}x{left_cols} and {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("svd did not converge for a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("coincident points: separation {distance:e} m is below 1e-12 m")]
    CoincidentPoints { distance: f64 },

    #[error("tangent vector is not unit length (norm {norm})")]
    NonUnitTangent { norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("constraint set is empty")]
    EmptyConstraints,

    #[error(
        "constraint right-hand sides are rank deficient (sigma_min/sigma_max = {ratio:e}); \
         reposition the constraint dipoles so their measurements are independent"
    )]
    RankDeficientConstraints { ratio: f64 },

    #[error("constraints are inconsistent with the operator: ||R X - B|| / ||B|| = {residual:e}")]
    InconsistentConstraints { residual: f64 },

    #[error(
        "source point {source_index} and measurement point {measurement} are {distance:e} m apart \
         (minimum {minimum:e} m)"
    )]
    ProximityViolation {
        source_index: usize,
        measurement: usize,
        distance: f64,
        minimum: f64,
    },

    #[error("dipole at radius {radius} m is not strictly inside the surface of radius {surface} m")]
    SourceOutsideSurface { radius: f64, surface: f64 },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
