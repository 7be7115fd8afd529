//! Shared fixtures for the solver benchmarks.

use agora::{Agent, Economy, UtilityFunction};

/// The standard two-seller, two-buyer economy the benchmarks solve.
pub fn base_economy() -> Economy {
    let log = UtilityFunction::log_quasi_linear(1.0).unwrap();
    let quad = UtilityFunction::quad_quasi_linear(3.0, 1.0).unwrap();
    Economy::new(
        "two log sellers, two quadratic buyers",
        vec![
            Agent::seller(0, 3.0, 1.0, log).unwrap(),
            Agent::seller(1, 3.0, 1.0, log).unwrap(),
            Agent::buyer(2, 5.0, 1.0, quad).unwrap(),
            Agent::buyer(3, 5.0, 1.0, quad).unwrap(),
        ],
    )
    .unwrap()
}
