use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series/quadrature failed to converge: {0}")]
    Convergence(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("requested {requested} time steps exceeds the weight storage cap of {cap}")]
    Resource { requested: usize, cap: usize },

    #[error("aliasing: {modes} modes requested but at most {max} are resolved by the space grid")]
    Aliasing { modes: usize, max: usize },

    #[error("mode {mode}: Picard iteration did not converge after {iterations} iterations (last update {last_update:.3e}, contraction estimate {contraction:.4})")]
    ModeNonConvergence { mode: usize, iterations: usize, last_update: f64, contraction: f64 },

    #[error("inverse iteration did not converge after {iterations} iterations (last update {last_update:.3e}, measured ratio {measured_ratio:.4}, C(T) {ct_bound:.4})")]
    InverseNonConvergence { iterations: usize, last_update: f64, measured_ratio: f64, ct_bound: f64 },

    #[error("inverse iterate {iterate}: {source}")]
    Iterate {
        iterate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular finite-difference system at time step {step}")]
    SingularSystem { step: usize },

    #[error("admissibility: {0}")]
    Admissibility(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
