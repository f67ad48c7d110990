use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected} coordinates, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("axis {axis} out of range for dimension {d}")]
    AxisOutOfRange { axis: usize, d: usize },

    #[error("site {site:?} lies outside the custom orientation table")]
    OutsideTable { site: Vec<i64> },

    #[error("invalid orientation table: {0}")]
    InvalidTable(String),

    #[error("coordinate overflow stepping from {site:?}")]
    CoordinateOverflow { site: Vec<i64> },

    #[error(
        "exact distribution for d={d}, n={n} needs about {estimate} live sites, budget is {budget}"
    )]
    BudgetExceeded {
        d: usize,
        n: u64,
        estimate: u128,
        budget: usize,
    },

    #[error("path enumeration for d={d}, n={n} visits {paths} paths, cap is {cap}")]
    EnumerationCap { d: usize, n: u64, paths: u128, cap: u128 },

    #[error(
        "return probability requested at odd time {0}: every step changes the coordinate sum by one, \
         so the walk sits at the origin only at even times"
    )]
    OddReturnTime(u64),

    #[error(
        "floor-halving coupling is defined for d = 2 only (got d = {0}); \
         (2d)^n = d^(mn) has no integer solution m when d > 2"
    )]
    CouplingDimension(usize),

    #[error("moment series has no entry at n = {0}")]
    MissingIndex(u64),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("pathwise identity `{identity}` violated on chain {chain} at step {step}: {state}")]
    InvariantViolation {
        identity: &'static str,
        chain: u64,
        step: u64,
        state: String,
    },
}
