use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate target: reflection coefficient is zero")]
    DegenerateTarget,
    #[error("singular nuisance block: no focusing power on the target")]
    SingularNuisance,
    #[error("parameters are not identifiable: reduced FIM is singular")]
    Unidentifiable,
    #[error("rank-one extraction failed: relative residual {residual:.3e}")]
    RankViolation { residual: f64 },
    #[error("no direction: matrix is zero")]
    ZeroDirection,
    #[error("scenario infeasible: {constraint}")]
    ScenarioInfeasible { constraint: String },
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
