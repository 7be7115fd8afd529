//! Walrasian (price-taking) demands, aggregate excess demand, and the Walras
//! equilibrium solver.
//!
//! Money is the numeraire: every price here is the price of the consumption
//! good with `py` fixed at 1. Demands clamp to their box constraints so the
//! solver stays well-defined at extreme prices while bracketing.

use thiserror::Error;

use crate::econ::{Agent, Bundle, Economy, Role};
use crate::numerics::{self, NumericsError, SolveDiagnostics, Tolerance};

/// Price of the consumption good; the money price is normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Price {
    px: f64,
}

impl Price {
    pub fn new(px: f64) -> Result<Self, WalrasError> {
        if !(px.is_finite() && px > 0.0) {
            return Err(WalrasError::NonPositivePrice(px));
        }
        Ok(Self { px })
    }

    pub fn px(&self) -> f64 {
        self.px
    }

    pub const fn py(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalrasError {
    #[error("price of the good must be strictly positive, got {0}")]
    NonPositivePrice(f64),
    #[error("excess demand does not change sign on the price bracket: {0}")]
    NoBracket(NumericsError),
    #[error(transparent)]
    Numerics(NumericsError),
}

impl From<NumericsError> for WalrasError {
    fn from(err: NumericsError) -> Self {
        match err {
            NumericsError::NoBracket { .. } => WalrasError::NoBracket(err),
            other => WalrasError::Numerics(other),
        }
    }
}

/// A price-taking optimum: maximizes utility on `{px·x + y ≤ y⁰}`.
///
/// The interior first-order condition is clamped to the budget box, so the
/// demand is total on positive prices.
pub fn buyer_demand(buyer: &Agent, price: Price) -> Bundle {
    assert_eq!(buyer.role, Role::Buyer, "buyer_demand needs a buyer");
    let px = price.px();
    let budget_cap = buyer.endowment.y / px;
    let x = buyer
        .utility
        .unconstrained_demand_x(px)
        .clamp(0.0, budget_cap);
    Bundle::clamped(x, buyer.endowment.y - px * x)
}

/// Seller's price-taking optimum on `{px·x + y ≤ px·x⁰}`: how much of the
/// good to retain, with the rest sold at `px`.
pub fn seller_demand(seller: &Agent, price: Price) -> Bundle {
    assert_eq!(seller.role, Role::Seller, "seller_demand needs a seller");
    let px = price.px();
    let x = seller
        .utility
        .unconstrained_demand_x(px)
        .clamp(0.0, seller.endowment.x);
    Bundle::clamped(x, px * (seller.endowment.x - x))
}

/// Demand of either role at the given price.
pub fn demand(agent: &Agent, price: Price) -> Bundle {
    match agent.role {
        Role::Seller => seller_demand(agent, price),
        Role::Buyer => buyer_demand(agent, price),
    }
}

/// Weighted excess demand for the consumption good at `price`.
pub fn excess_demand_x(economy: &Economy, price: Price) -> f64 {
    economy
        .agents()
        .iter()
        .map(|a| a.weight * (demand(a, price).x - a.endowment.x))
        .sum()
}

/// Weighted excess demand for money; by Walras's law it vanishes wherever
/// the goods market clears, which the solver checks rather than imposes.
pub fn excess_demand_y(economy: &Economy, price: Price) -> f64 {
    economy
        .agents()
        .iter()
        .map(|a| a.weight * (demand(a, price).y - a.endowment.y))
        .sum()
}

/// A Walras equilibrium: the market-clearing price and per-agent demands.
#[derive(Debug, Clone, PartialEq)]
pub struct WalrasResult {
    pub price: Price,
    /// Bundles in economy agent order.
    pub allocation: Vec<Bundle>,
    /// Leftover weighted excess demand for money at the solved price.
    pub money_residual: f64,
    pub diagnostics: SolveDiagnostics,
}

impl WalrasResult {
    /// Representative bundles of the first seller and the first buyer.
    pub fn role_bundles(&self, economy: &Economy) -> (Bundle, Bundle) {
        let seller_at = economy
            .agents()
            .iter()
            .position(|a| a.role == Role::Seller)
            .expect("economy has a seller");
        let buyer_at = economy
            .agents()
            .iter()
            .position(|a| a.role == Role::Buyer)
            .expect("economy has a buyer");
        (self.allocation[seller_at], self.allocation[buyer_at])
    }
}

/// Solves for the price at which the goods market clears.
///
/// Excess demand is positive near zero and non-positive at the largest buyer
/// choke price, so `[1e-6, max choke]` brackets the root.
pub fn solve_walras(economy: &Economy, tol: &Tolerance) -> Result<WalrasResult, WalrasError> {
    let lo = 1e-6;
    let hi = economy.max_buyer_choke_price();
    let f = |px: f64| excess_demand_x(economy, Price { px });
    let (px, diagnostics) = numerics::find_root(f, lo, hi, tol)?;
    let price = Price::new(px)?;
    let allocation = economy.agents().iter().map(|a| demand(a, price)).collect();
    Ok(WalrasResult {
        price,
        allocation,
        money_residual: excess_demand_y(economy, price),
        diagnostics,
    })
}
