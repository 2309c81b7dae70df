use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not make progress.
    #[error("integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: String },

    /// A root-finding bracket does not contain a sign change.
    #[error("no sign change in bracket [{lo}, {hi}]: {context}")]
    NotBracketed { lo: f64, hi: f64, context: String },

    /// An iterative method ran out of iterations before reaching its tolerance.
    #[error("no convergence after {iterations} iterations: {context}")]
    NoConvergence { iterations: usize, context: String },

    /// The band scan grid cannot resolve two adjacent band edges.
    #[error("grid too coarse near omega = {omega}: increase grid_points (currently {grid_points})")]
    GridTooCoarse { omega: f64, grid_points: usize },

    /// The fixed point at the origin is not hyperbolic.
    #[error("degenerate linearization: eigenvalues {0} and {1} are not separated")]
    Degenerate(f64, f64),

    /// The unstable manifold did not cross the reversibility curve.
    #[error("no symmetry crossing after {steps} map steps (last scaled norm {last_norm:.3e})")]
    NoCrossing { steps: usize, last_norm: f64 },

    /// A shooting trajectory neither diverged nor decayed within its cell budget.
    #[error("shooting undecidable for phi0 = {phi0}: increase n_cells (currently {n_cells})")]
    Undecidable { phi0: f64, n_cells: usize },

    /// An assembled profile violates the vertex conditions.
    #[error("assembled profile inconsistent: Kirchhoff residual {residual:.3e} exceeds {tolerance:.3e}")]
    Inconsistent { residual: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
