//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The metric density dropped to (or below) the Kähler floor: the
    /// potential has left the Kähler cone.
    #[error("not Kähler: min density {min_u:e} is at or below floor {floor:e}")]
    NotKahler { min_u: f64, floor: f64 },

    /// A symplectic potential lost convexity somewhere on the interior grid.
    #[error("not convex: u''({x}) = {value:e} is not positive")]
    NotConvex { x: f64, value: f64 },

    /// An operation that only exists on one backend was called on the other.
    #[error("backend mismatch: operation requires {expected} backend")]
    BackendMismatch { expected: &'static str },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Consecutive path nodes differ too much for the centered-difference
    /// velocity to be meaningful.
    #[error("path too coarse: consecutive nodes differ by {sup_diff:e} (threshold {threshold:e})")]
    PathTooCoarse { sup_diff: f64, threshold: f64 },

    /// The adaptive step cascade underflowed the minimum step size.
    #[error("step failure: dt underflowed dt_min = {dt_min:e} at t = {t}")]
    StepFailure { t: f64, dt_min: f64 },

    /// Too few usable records for a fit.
    #[error("insufficient data: {needed} records needed, {got} usable")]
    InsufficientData { needed: usize, got: usize },

    /// A probe ball does not embed in the chart.
    #[error("ball too large: r = {r} exceeds embedding bound {bound}")]
    BallTooLarge { r: f64, bound: f64 },

    /// Probe radii too close to the grid scale for masked quadrature.
    #[error("radii too small: r = {r} is below {min_cells} grid cells ({bound})")]
    RadiiTooSmall { r: f64, min_cells: usize, bound: f64 },

    /// Node doubling stopped making progress before the tolerance was met.
    #[error("quadrature not converged: relative change {rel_change:e} after {nodes} nodes")]
    QuadratureNotConverged { rel_change: f64, nodes: usize },

    /// The requested majorant integral diverges (p >= 2).
    #[error("divergent bound: the majorant integral diverges for p = {p}")]
    DivergentBound { p: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
