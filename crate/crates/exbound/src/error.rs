//! Error types shared by the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building specs, pricing, or solving.
#[derive(Debug, Error)]
pub enum Error {
    /// A derivative specification violates its construction invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// An evaluation was requested outside the valid time/state range.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Path-average drifts are singular at t = 0.
    #[error("singular time: {0}")]
    SingularTime(String),

    /// The operation does not cover this derivative kind.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The requested state is too close to a payoff kink for the
    /// difference-quotient bonus estimate to be meaningful.
    #[error("state {state} is within the kink exclusion band ({band}) of breakpoint {breakpoint}")]
    KinkExclusion {
        state: f64,
        breakpoint: f64,
        band: f64,
    },

    /// Root solving failed; carries the bracket residuals for diagnosis.
    #[error("root solver: {message} (residuals {residual_lo} at lo, {residual_hi} at hi)")]
    Solver {
        message: String,
        residual_lo: f64,
        residual_hi: f64,
    },

    /// A bonus function piece could not be analyzed for sign changes.
    #[error("analysis: {0}")]
    Analysis(String),

    /// The contract drift makes the closed-form boundary formula degenerate.
    #[error("degenerate drift: {0}")]
    DegenerateDrift(String),

    /// PSOR failed to converge within the sweep cap.
    #[error("psor diverged at time step {step}: max update {residual} after {sweeps} sweeps")]
    Divergence {
        step: usize,
        residual: f64,
        sweeps: usize,
    },
}
