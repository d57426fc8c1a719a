use thiserror::Error;

/// Errors shared by all solution routes.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameters are unstable (margin = {margin})")]
    Unstable { margin: f64 },

    #[error("jet centers differ: ({0:?}) vs ({1:?})")]
    CenterMismatch((f64, f64), (f64, f64)),

    #[error("jet order overflow: requested ({0}, {1}), available ({2}, {3})")]
    OrderOverflow(usize, usize, usize, usize),

    #[error("singularity not removable at requested order (residual {residual:.3e})")]
    CancellationFailed { residual: f64 },

    #[error("division by a jet with ~zero constant term; use a cancelling division")]
    ZeroConstantDivisor,

    #[error("order budget exhausted: {0}; increase order budget")]
    OrderBudget(String),

    #[error("root selection failed: {0}")]
    RootSelection(String),

    #[error("contour construction failed: {0}")]
    ContourFailure(String),

    #[error("Theodorsen iteration did not converge ({sup_change:.3e} after {iterations} iterations)")]
    TheodorsenNoConvergence { sup_change: f64, iterations: usize },

    #[error("evaluation too close to a singular point: {0}")]
    NearSingular(String),

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("numerical differentiation failed: {0}")]
    DifferentiationFailure(String),
}
