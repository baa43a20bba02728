use crate::expr::ExprError;
use crate::jet::JetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("model error: {0}")]
    Model(String),
    #[error("unknown builtin example `{0}`")]
    UnknownExample(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("field `{0}` is not cyclic at the point (scaled |det| = {1:e})")]
    NotCyclic(String, f64),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("jet order {got} too low, need at least {need}")]
    OrderTooLow { need: usize, got: usize },
    #[error("unit field is not constant in this chart")]
    NonConstantUnit,
    #[error("chart is not adapted (unit must be the first coordinate vector)")]
    NotAdapted,
    #[error("model is not diagonal semisimple at the point")]
    NotSemisimple,
    #[error("Newton iteration did not converge after {0} iterations (residual {1:e})")]
    NoConvergence(usize, f64),
    #[error("singular Jacobian (scaled |det| = {0:e})")]
    SingularJacobian(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
