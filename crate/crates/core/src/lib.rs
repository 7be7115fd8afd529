//! Equilibrium concepts for two-commodity exchange economies with corner
//! endowments: sellers hold a consumption good, buyers hold commodity money,
//! and five solution concepts price the trade between them.
//!
//! - [`cournot::solve_cournot`] — the classic offer game against a fixed
//!   inverse demand curve (partial equilibrium, open market).
//! - [`cournot::solve_cournot_walras`] — the same sellers against demand
//!   derived from actual buyers, who trade at their price-taking optimum.
//! - [`bilateral::solve_cournot_nash`] — simultaneous bid/offer oligopoly
//!   under the proportional price rule `px = B/Q`, both sides strategic.
//! - [`sequential::solve_spne`] — the two-stage variant where sellers move
//!   first, solved by backward induction.
//! - [`walras::solve_walras`] — the competitive benchmark.
//!
//! [`replica::sweep`] reruns a game over weighted replicas of an economy and
//! extrapolates the large-economy limit; [`welfare`] compares the outcomes.
//! All solvers are pure and deterministic, and types are immutable values
//! that can be shared freely across threads.

pub mod bilateral;
pub mod cournot;
pub mod econ;
pub mod numerics;
pub mod replica;
pub mod sequential;
pub mod walras;
pub mod welfare;

pub use bilateral::{
    allocate, best_response_buyer, best_response_seller, payoff, price_rule, solve_cournot_nash,
    BestResponse, BilateralError, NashResult, StrategyProfile,
};
pub use cournot::{
    cournot_best_response, seller_allocation, solve_cournot, solve_cournot_walras, CournotError,
    CournotResult, InverseDemand,
};
pub use econ::{
    Agent, Bundle, EconError, Economy, ReplicaMode, ReplicaSpec, Role, UtilityFunction,
};
pub use numerics::{
    damped_best_response_fixed_point, find_root, maximize_1d, Maximum, NumericsError,
    SolveDiagnostics, Tolerance,
};
pub use replica::{
    compare_to_benchmark, estimate_limit, sweep, Benchmark, EquilibriumSummary, GameKind,
    GapReport, GapRow, LimitEstimate, ReplicaError, ReplicaSequence, SequenceLimits, SweepPoint,
};
pub use sequential::{
    seller_stage_payoff, solve_buyer_subgame, solve_spne, BuyerSubgameSolution, SequentialError,
    SpneResult,
};
pub use walras::{
    buyer_demand, excess_demand_x, excess_demand_y, seller_demand, solve_walras, Price,
    WalrasError, WalrasResult,
};
pub use welfare::{
    find_pareto_dominating, mrs_gap, utility_table, ParetoStatus, RoleAllocation, WelfareError,
    WelfareRow,
};
