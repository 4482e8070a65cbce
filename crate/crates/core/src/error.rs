use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("degenerate rectangle: min must be strictly below max on both axes")]
    DegenerateRect,
    #[error("grid size must be at least 1")]
    ZeroGrid,
    #[error("cell index {index} out of range for {cells} cells")]
    CellOutOfRange { index: usize, cells: usize },
    #[error("point ({x}, {y}) lies outside the domain")]
    PointOutsideDomain { x: f64, y: f64 },
    #[error("histogram grid domain does not match the point set domain")]
    DomainMismatch,
    #[error("counts length {got} does not match g^2 = {expected}")]
    CountsLength { got: usize, expected: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("sanity bound rho = delta * |D| = {rho} must exceed 1")]
    SanityBoundTooSmall { rho: f64 },
    #[error("probabilities do not form a distribution (sum = {sum})")]
    InvalidDistribution { sum: f64 },
    #[error("privacy budget exhausted: requested {requested}, remaining {remaining}")]
    BudgetExhausted { requested: f64, remaining: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
