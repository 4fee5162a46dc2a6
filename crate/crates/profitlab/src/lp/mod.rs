//! Exact linear programming and the optimal-profit LP.

pub mod lu;
pub mod profit;
pub mod simplex;

pub use profit::{
    build_profit_lp, build_profit_lp_with_limit, solve_lp, verify_virtual_bound, DirectMechanism,
    Flow, FlowEdge, LpSolution, ProfitLp, VirtualBound, DEFAULT_VAR_LIMIT,
};
pub use simplex::{LinearProgram, LpOptimum, RowKind};
