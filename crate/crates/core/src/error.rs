use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum ZenoError {
    /// A parameter or lattice is inconsistent with what the operation needs.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument is outside its domain (for example a non-positive duration).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The state has lost (almost) all of its probability.
    #[error("depleted state: trace {trace:.3e} below {floor:.1e}")]
    Depleted { trace: f64, floor: f64 },

    /// An integrator produced growth or non-finite values.
    #[error("numerical instability: {0}")]
    NumericalStability(String),

    /// An iterative procedure failed to converge.
    #[error("no convergence after {iterations} iterations (last change {last_change:.3e}): {context}")]
    Convergence {
        iterations: usize,
        last_change: f64,
        context: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ZenoError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ZenoError::Config(_) | ZenoError::Argument(_) => 2,
            ZenoError::Io(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, ZenoError>;
