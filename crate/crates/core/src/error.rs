use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `V + iΩ` has an eigenvalue below the physicality tolerance.
    #[error("covariance matrix is not physical: min eigenvalue of V + iΩ is {min_eig:.3e}")]
    Physicality { min_eig: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    /// Photon budget is below the thermal floor `M * n_th`.
    #[error("infeasible photon budget: N_tot = {n_tot} < M * n_th = {floor}")]
    Infeasible { n_tot: f64, floor: f64 },

    #[error("Fisher matrix is numerically zero")]
    Singular,

    #[error("weight vector has a component of norm {residual:.3e} outside the range of the Fisher matrix")]
    OutOfRange { residual: f64 },

    #[error("privacy is undefined for a Fisher matrix with zero trace")]
    Undefined,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
