use agora::{Agent, Economy, UtilityFunction};

pub fn log_utility(a: f64) -> UtilityFunction {
    UtilityFunction::log_quasi_linear(a).unwrap()
}

pub fn quad_utility(alpha: f64, beta: f64) -> UtilityFunction {
    UtilityFunction::quad_quasi_linear(alpha, beta).unwrap()
}

/// Two log sellers holding 3 units of the good, two quadratic buyers holding
/// 5 units of money: the base economy behind all the worked cases.
pub fn base_economy() -> Economy {
    Economy::new(
        "two log sellers, two quadratic buyers",
        vec![
            Agent::seller(0, 3.0, 1.0, log_utility(1.0)).unwrap(),
            Agent::seller(1, 3.0, 1.0, log_utility(1.0)).unwrap(),
            Agent::buyer(2, 5.0, 1.0, quad_utility(3.0, 1.0)).unwrap(),
            Agent::buyer(3, 5.0, 1.0, quad_utility(3.0, 1.0)).unwrap(),
        ],
    )
    .unwrap()
}
