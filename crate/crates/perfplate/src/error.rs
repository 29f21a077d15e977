use thiserror::Error;

/// Errors shared by every solver and report operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fails validation before any numerics run.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Two fields (or a field and a mask) live on different grids.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The requested perforation cannot exist (holes would overlap their cells).
    #[error("perforation geometry: {0}")]
    Geometry(String),

    /// The grid cannot resolve the holes. This is a hard error: an
    /// under-resolved hole silently degenerates to a point constraint and
    /// fakes agreement with the homogenized solution.
    #[error("under-resolved geometry: hole radius {radius:.6e} < 3h = {min_radius:.6e} at n = {n}")]
    UnderResolved {
        radius: f64,
        min_radius: f64,
        n: usize,
    },

    /// An iterative solver hit its iteration cap. `history` carries the
    /// per-iteration residuals (or step distances) up to the failure.
    #[error("{what}: no convergence within {limit} iterations (last = {last:.3e})")]
    NonConvergence {
        what: &'static str,
        limit: usize,
        last: f64,
        history: Vec<f64>,
    },

    /// A domain mask with no active nodes.
    #[error("degenerate domain: no active nodes")]
    DegenerateDomain,
}

pub type Result<T> = std::result::Result<T, Error>;

/// Reject non-finite and non-positive parameter values.
pub(crate) fn require_positive(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

/// Reject non-finite and negative parameter values.
pub(crate) fn require_nonnegative(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{what} must be nonnegative and finite, got {value}"
        )))
    }
}
