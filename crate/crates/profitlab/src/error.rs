use alloc::string::String;

/// Everything that can go wrong in the core crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid cost model: {0}")]
    Costs(String),
    #[error("invalid feasibility family: {0}")]
    Family(String),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("size guard exceeded: {what} needs {required}, limit {limit}")]
    TooLarge {
        what: &'static str,
        required: usize,
        limit: usize,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("flow conservation violated at buyer {buyer}, type {type_index}")]
    FlowConservation { buyer: usize, type_index: usize },
    #[error("lp solver failure: {0}")]
    Solver(String),
    #[error("point outside the scaled polytope; violated set {witness:#b}")]
    OutsidePolytope { witness: u64 },
    #[error("auxiliary mechanism is not truthful: type {truth} prefers report {report}")]
    NotTruthful { truth: usize, report: usize },
    #[error("cross-check mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
