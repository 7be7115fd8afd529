//! Welfare analysis of equilibrium allocations: utility tables, the
//! marginal-rate-of-substitution gap that measures interior inefficiency,
//! and a grid search for Pareto-dominating reallocations.
//!
//! With quasi-linear utilities the marginal utility of money is 1 for
//! everyone, so the MRS reduces to the marginal utility of the good and an
//! interior allocation is efficient exactly when sellers and buyers value
//! the marginal unit equally. The grid search does not rely on that
//! calculus: it certifies (in)efficiency by exhibiting an explicit improving
//! trade or exhausting the grid, which makes it an independent check on the
//! MRS criterion.

use thiserror::Error;

use crate::econ::{Bundle, Economy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WelfareError {
    #[error("MRS gap needs interior bundles; got seller x = {seller_x}, buyer x = {buyer_x}")]
    NotInterior { seller_x: f64, buyer_x: f64 },
    #[error("allocation is infeasible: weighted totals ({x:.6}, {y:.6}) differ from endowment totals ({x0:.6}, {y0:.6})")]
    InfeasibleStart { x: f64, y: f64, x0: f64, y0: f64 },
}

/// Role-symmetric allocation: one representative bundle per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoleAllocation {
    pub seller: Bundle,
    pub buyer: Bundle,
}

/// One line of the welfare table. Utilities are recomputed from the bundles,
/// never copied out of a solver.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareRow {
    pub label: String,
    pub seller_bundle: Bundle,
    pub buyer_bundle: Bundle,
    pub seller_utility: f64,
    pub buyer_utility: f64,
}

/// Evaluates labeled allocations with the economy's representative seller
/// and buyer utilities.
pub fn utility_table(economy: &Economy, entries: &[(String, RoleAllocation)]) -> Vec<WelfareRow> {
    let seller_u = economy
        .sellers()
        .next()
        .expect("economy has a seller")
        .utility;
    let buyer_u = economy
        .buyers()
        .next()
        .expect("economy has a buyer")
        .utility;
    entries
        .iter()
        .map(|(label, alloc)| WelfareRow {
            label: label.clone(),
            seller_bundle: alloc.seller,
            buyer_bundle: alloc.buyer,
            seller_utility: seller_u.value(alloc.seller),
            buyer_utility: buyer_u.value(alloc.buyer),
        })
        .collect()
}

/// Absolute difference of the two roles' marginal utilities of the good.
/// Zero characterizes interior Pareto efficiency under quasi-linearity.
pub fn mrs_gap(economy: &Economy, alloc: &RoleAllocation) -> Result<f64, WelfareError> {
    if alloc.seller.x <= 0.0 || alloc.buyer.x <= 0.0 {
        return Err(WelfareError::NotInterior {
            seller_x: alloc.seller.x,
            buyer_x: alloc.buyer.x,
        });
    }
    let seller_u = economy
        .sellers()
        .next()
        .expect("economy has a seller")
        .utility;
    let buyer_u = economy
        .buyers()
        .next()
        .expect("economy has a buyer")
        .utility;
    let (seller_mu, _) = seller_u.marginals(alloc.seller);
    let (buyer_mu, _) = buyer_u.marginals(alloc.buyer);
    Ok((seller_mu - buyer_mu).abs())
}

/// Outcome of the dominance search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParetoStatus {
    Undominated,
    /// A feasible role-symmetric reallocation that makes both roles weakly
    /// better off and at least one strictly so.
    DominatedBy {
        seller: Bundle,
        buyer: Bundle,
    },
}

const STRICT_GAIN: f64 = 1e-9;

/// Searches role-symmetric trades for one that Pareto dominates `alloc`.
///
/// The grid moves a weighted total `t_x` of the good one way and `t_y` of
/// money the other, in multiples of `step`, over everything the giving side
/// holds. Transfers conserve weighted totals by construction, so any witness
/// found is feasible. Returns the first dominating trade in scan order, or
/// `Undominated` once the grid is exhausted at this resolution.
pub fn find_pareto_dominating(
    economy: &Economy,
    alloc: &RoleAllocation,
    step: f64,
) -> Result<ParetoStatus, WelfareError> {
    assert!(step > 0.0, "grid step must be positive");
    let seller_mass: f64 = economy.sellers().map(|a| a.weight).sum();
    let buyer_mass: f64 = economy.buyers().map(|a| a.weight).sum();
    let (x_total, y_total) = economy.weighted_totals();
    let x_held = seller_mass * alloc.seller.x + buyer_mass * alloc.buyer.x;
    let y_held = seller_mass * alloc.seller.y + buyer_mass * alloc.buyer.y;
    if (x_held - x_total).abs() > 1e-8 || (y_held - y_total).abs() > 1e-8 {
        return Err(WelfareError::InfeasibleStart {
            x: x_held,
            y: y_held,
            x0: x_total,
            y0: y_total,
        });
    }

    let seller_u = economy
        .sellers()
        .next()
        .expect("economy has a seller")
        .utility;
    let buyer_u = economy
        .buyers()
        .next()
        .expect("economy has a buyer")
        .utility;
    let u_seller_0 = seller_u.value(alloc.seller);
    let u_buyer_0 = buyer_u.value(alloc.buyer);

    // direction +1: good flows seller → buyer, money buyer → seller.
    for direction in [1.0f64, -1.0] {
        let x_cap = if direction > 0.0 {
            seller_mass * alloc.seller.x
        } else {
            buyer_mass * alloc.buyer.x
        };
        let y_cap = if direction > 0.0 {
            buyer_mass * alloc.buyer.y
        } else {
            seller_mass * alloc.seller.y
        };
        let x_steps = (x_cap / step).floor() as usize;
        let y_steps = (y_cap / step).floor() as usize;
        for i in 1..=x_steps {
            let t_x = direction * step * i as f64;
            for j in 1..=y_steps {
                let t_y = direction * step * j as f64;
                let seller = Bundle {
                    x: alloc.seller.x - t_x / seller_mass,
                    y: alloc.seller.y + t_y / seller_mass,
                };
                let buyer = Bundle {
                    x: alloc.buyer.x + t_x / buyer_mass,
                    y: alloc.buyer.y - t_y / buyer_mass,
                };
                if seller.x < 0.0 || seller.y < 0.0 || buyer.x < 0.0 || buyer.y < 0.0 {
                    continue;
                }
                let d_seller = seller_u.value(seller) - u_seller_0;
                let d_buyer = buyer_u.value(buyer) - u_buyer_0;
                if d_seller >= 0.0 && d_buyer >= 0.0 && d_seller.max(d_buyer) > STRICT_GAIN {
                    return Ok(ParetoStatus::DominatedBy { seller, buyer });
                }
            }
        }
    }
    Ok(ParetoStatus::Undominated)
}
