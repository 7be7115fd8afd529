//! Cournot competition in exchange form: sellers choose offers against an
//! inverse demand curve, either given in closed form (partial equilibrium)
//! or derived from buyers' Walrasian demands (Cournot-Walras).
//!
//! The partial-equilibrium game is an open market: sellers' sale revenue
//! `px·Q` enters from outside the model, and the result reports that inflow
//! so callers can see that money is not conserved. The Cournot-Walras
//! variant closes the market by sourcing demand from actual buyers.

use thiserror::Error;

use crate::econ::{Agent, Bundle, Economy, Role};
use crate::numerics::{self, NumericsError, SolveDiagnostics, Tolerance};
use crate::walras::{self, Price, WalrasError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CournotError {
    #[error("linear inverse demand needs positive intercept and slope, got {intercept}, {slope}")]
    InvalidLinearDemand { intercept: f64, slope: f64 },
    #[error("derived inverse demand needs at least one buyer")]
    NoBuyers,
    #[error("solve_cournot needs at least one seller, all with the seller role")]
    InvalidSellers,
    #[error("offered quantity exceeds what buyers absorb at any admissible price: {0}")]
    Saturated(NumericsError),
    #[error(transparent)]
    Numerics(NumericsError),
    #[error(transparent)]
    Walras(WalrasError),
}

impl From<NumericsError> for CournotError {
    fn from(err: NumericsError) -> Self {
        match err {
            NumericsError::NoBracket { .. } => CournotError::Saturated(err),
            other => CournotError::Numerics(other),
        }
    }
}

const PRICE_BRACKET_LO: f64 = 1e-6;

/// Inverse demand for the consumption good: the price at which buyers absorb
/// a given total quantity.
#[derive(Debug, Clone)]
pub enum InverseDemand {
    /// `px(Q) = intercept − slope·Q`, floored at zero.
    Linear { intercept: f64, slope: f64 },
    /// Price solving "weighted buyer demand equals Q" for the given economy's
    /// buyers. The monotone price bracket is fixed at construction because
    /// evaluation sits inside best-response inner loops.
    FromBuyers {
        economy: Economy,
        bracket: (f64, f64),
        saturation: f64,
    },
}

impl InverseDemand {
    pub fn linear(intercept: f64, slope: f64) -> Result<Self, CournotError> {
        if !(intercept > 0.0 && slope > 0.0 && intercept.is_finite() && slope.is_finite()) {
            return Err(CournotError::InvalidLinearDemand { intercept, slope });
        }
        Ok(Self::Linear { intercept, slope })
    }

    pub fn from_buyers(economy: &Economy) -> Result<Self, CournotError> {
        if economy.buyer_count() == 0 {
            return Err(CournotError::NoBuyers);
        }
        let bracket = (PRICE_BRACKET_LO, economy.max_buyer_choke_price());
        let saturation = buyer_demand_total(economy, bracket.0);
        Ok(Self::FromBuyers {
            economy: economy.clone(),
            bracket,
            saturation,
        })
    }

    /// Price at which buyers absorb exactly `q_total`.
    pub fn eval(&self, q_total: f64) -> Result<f64, CournotError> {
        assert!(q_total >= 0.0, "total offer must be non-negative");
        match self {
            Self::Linear { intercept, slope } => Ok((intercept - slope * q_total).max(0.0)),
            Self::FromBuyers {
                economy,
                bracket: (lo, hi),
                ..
            } => {
                let f = |px: f64| buyer_demand_total(economy, px) - q_total;
                let tol = Tolerance::new(1e-12, 1e-13, 200);
                let (px, _) = numerics::find_root(f, *lo, *hi, &tol)?;
                Ok(px)
            }
        }
    }

    /// Total evaluation for optimizer objectives: beyond the quantity buyers
    /// absorb at the lowest admissible price, the good fetches nothing.
    fn eval_or_zero(&self, q_total: f64) -> f64 {
        match self {
            Self::Linear { .. } => self.eval(q_total).expect("linear demand is total"),
            Self::FromBuyers { saturation, .. } => {
                if q_total > *saturation {
                    0.0
                } else {
                    self.eval(q_total).unwrap_or(0.0)
                }
            }
        }
    }
}

fn buyer_demand_total(economy: &Economy, px: f64) -> f64 {
    let price = Price::new(px).expect("bracket prices are positive");
    economy
        .buyers()
        .map(|b| b.weight * walras::buyer_demand(b, price).x)
        .sum()
}

/// The bundle a seller ends up with after offering `offer` at price `px`.
pub fn seller_allocation(seller: &Agent, offer: f64, px: f64) -> Bundle {
    debug_assert!(offer >= 0.0 && offer <= seller.endowment.x + 1e-12);
    Bundle::clamped(seller.endowment.x - offer, px * offer)
}

/// Best reply of `seller` to the other sellers' total offer: the offer in
/// `[0, x⁰]` maximizing utility of the post-trade bundle.
pub fn cournot_best_response(
    demand: &InverseDemand,
    seller: &Agent,
    others_total: f64,
    tol: &Tolerance,
) -> Result<f64, CournotError> {
    assert_eq!(seller.role, Role::Seller);
    assert!(others_total >= 0.0);
    let w = seller.weight;
    let payoff = |q: f64| {
        let px = demand.eval_or_zero(others_total + w * q);
        seller.utility.value(seller_allocation(seller, q, px))
    };
    let m = numerics::maximize_1d(payoff, 0.0, seller.endowment.x, tol)?;
    Ok(m.argmax)
}

/// A Cournot equilibrium and everything derived from it.
#[derive(Debug, Clone)]
pub struct CournotResult {
    /// Equilibrium offers, one per seller.
    pub offers: Vec<f64>,
    pub price: Price,
    pub seller_bundles: Vec<Bundle>,
    /// Walrasian bundles of the buyers; empty in the partial-equilibrium game.
    pub buyer_bundles: Vec<Bundle>,
    pub seller_payoffs: Vec<f64>,
    /// Weighted total offer at equilibrium.
    pub total_offer: f64,
    /// Money `px·Q` paid by the demand side. In the partial game it flows in
    /// from outside the model.
    pub money_inflow: f64,
    pub diagnostics: SolveDiagnostics,
}

/// Cournot equilibrium of the offer game: a fixed point of the joint
/// best-response map under damped iteration.
pub fn solve_cournot(
    sellers: &[Agent],
    demand: &InverseDemand,
    tol: &Tolerance,
) -> Result<CournotResult, CournotError> {
    if sellers.is_empty() || sellers.iter().any(|s| s.role != Role::Seller) {
        return Err(CournotError::InvalidSellers);
    }
    let start: Vec<f64> = sellers.iter().map(|s| 0.5 * s.endowment.x).collect();
    let map = |offers: &[f64]| -> Vec<f64> {
        let total: f64 = sellers.iter().zip(offers).map(|(s, &q)| s.weight * q).sum();
        sellers
            .iter()
            .zip(offers)
            .map(|(s, &q)| {
                let others = total - s.weight * q;
                cournot_best_response(demand, s, others, tol)
                    .expect("best response over a compact box")
            })
            .collect()
    };
    let fp_tol = tol.for_iteration(1e-10, 400);
    let (offers, diagnostics) =
        numerics::damped_best_response_fixed_point(map, &start, 0.5, &fp_tol, 1e-9)?;

    let total_offer: f64 = sellers
        .iter()
        .zip(&offers)
        .map(|(s, &q)| s.weight * q)
        .sum();
    let px = demand.eval(total_offer)?;
    let price = Price::new(px).map_err(CournotError::Walras)?;
    let seller_bundles: Vec<Bundle> = sellers
        .iter()
        .zip(&offers)
        .map(|(s, &q)| seller_allocation(s, q, px))
        .collect();
    let seller_payoffs = sellers
        .iter()
        .zip(&seller_bundles)
        .map(|(s, &b)| s.utility.value(b))
        .collect();
    Ok(CournotResult {
        offers,
        price,
        seller_bundles,
        buyer_bundles: Vec::new(),
        seller_payoffs,
        total_offer,
        money_inflow: px * total_offer,
        diagnostics,
    })
}

/// Cournot-Walras equilibrium: sellers play Cournot against the inverse
/// demand derived from the buyers, and buyers receive their Walrasian
/// bundles at the induced price.
pub fn solve_cournot_walras(
    economy: &Economy,
    tol: &Tolerance,
) -> Result<CournotResult, CournotError> {
    let demand = InverseDemand::from_buyers(economy)?;
    let sellers: Vec<Agent> = economy.sellers().copied().collect();
    let mut result = solve_cournot(&sellers, &demand, tol)?;
    result.buyer_bundles = economy
        .buyers()
        .map(|b| walras::buyer_demand(b, result.price))
        .collect();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econ::Agent;
    use crate::test_fixtures::{base_economy, log_utility, quad_utility};

    fn linear_demand() -> InverseDemand {
        InverseDemand::linear(3.0, 0.5).unwrap()
    }

    fn duopoly_sellers() -> Vec<Agent> {
        vec![
            Agent::seller(0, 3.0, 1.0, log_utility(1.0)).unwrap(),
            Agent::seller(1, 3.0, 1.0, log_utility(1.0)).unwrap(),
        ]
    }

    #[test]
    fn linear_demand_evaluates_the_affine_formula() {
        let d = linear_demand();
        assert_eq!(d.eval(0.0).unwrap(), 3.0);
        assert_eq!(d.eval(2.0).unwrap(), 2.0);
        // Floored at zero past the intercept.
        assert_eq!(d.eval(10.0).unwrap(), 0.0);
    }

    #[test]
    fn derived_demand_matches_the_closed_form() {
        let d = InverseDemand::from_buyers(&base_economy()).unwrap();
        assert!((d.eval(2.0).unwrap() - 2.0).abs() < 1e-8);
        let q_hat = (18.0 - 2.0 * 15f64.sqrt()) / 3.0;
        assert!((d.eval(q_hat).unwrap() - 15f64.sqrt() / 3.0).abs() < 1e-8);
        // Q = 0 prices at the choke.
        assert!((d.eval(0.0).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn derived_demand_does_not_aggregate_by_endowment() {
        // One buyer with twice the money is not two buyers: quadratic
        // quasi-linear demand sums horizontally across buyers.
        let single = Economy::new(
            "one rich buyer",
            vec![
                Agent::seller(0, 3.0, 1.0, log_utility(1.0)).unwrap(),
                Agent::buyer(1, 10.0, 1.0, quad_utility(3.0, 1.0)).unwrap(),
            ],
        )
        .unwrap();
        let d_single = InverseDemand::from_buyers(&single).unwrap();
        let d_pair = InverseDemand::from_buyers(&base_economy()).unwrap();
        assert!((d_single.eval(2.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((d_pair.eval(2.0).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn seller_allocation_examples() {
        let seller = &duopoly_sellers()[0];
        assert_eq!(
            seller_allocation(seller, 0.0, 2.0),
            Bundle::new(3.0, 0.0).unwrap()
        );
        assert_eq!(
            seller_allocation(seller, 3.0, 1.0),
            Bundle::new(0.0, 3.0).unwrap()
        );
        let q = (9.0 - 15f64.sqrt()) / 3.0;
        let px = 15f64.sqrt() / 3.0;
        let b = seller_allocation(seller, q, px);
        assert!((b.x - px).abs() < 1e-12);
        assert!((b.y - (3.0 * 15f64.sqrt() - 5.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn best_response_reproduces_the_symmetric_equilibrium() {
        let sellers = duopoly_sellers();
        let q_star = (9.0 - 15f64.sqrt()) / 3.0;
        let br =
            cournot_best_response(&linear_demand(), &sellers[0], q_star, &Tolerance::default())
                .unwrap();
        assert!((br - q_star).abs() < 1e-6);
    }

    #[test]
    fn best_response_is_zero_when_price_is_zero() {
        let sellers = duopoly_sellers();
        let br = cournot_best_response(&linear_demand(), &sellers[0], 6.0, &Tolerance::default())
            .unwrap();
        assert_eq!(br, 0.0);
    }

    #[test]
    fn monopoly_offer_matches_an_independent_root() {
        // Oracle: the monopoly first-order condition 1/(4−q) = 3 − q solved
        // by the root finder, independent of the maximizer path.
        let (oracle, _) = numerics::find_root(
            |q: f64| -1.0 / (4.0 - q) + 3.0 - q,
            0.0,
            3.0,
            &Tolerance::default(),
        )
        .unwrap();
        assert!((oracle - (7.0 - 5f64.sqrt()) / 2.0).abs() < 1e-9);

        let sellers = duopoly_sellers();
        let br = cournot_best_response(&linear_demand(), &sellers[0], 0.0, &Tolerance::default())
            .unwrap();
        assert!((br - oracle).abs() < 1e-6);

        let solo = solve_cournot(&sellers[..1], &linear_demand(), &Tolerance::default()).unwrap();
        assert!((solo.offers[0] - oracle).abs() < 1e-6);
    }

    #[test]
    fn duopoly_equilibrium_and_open_market_diagnostic() {
        let sellers = duopoly_sellers();
        let result = solve_cournot(&sellers, &linear_demand(), &Tolerance::default()).unwrap();
        let q_star = (9.0 - 15f64.sqrt()) / 3.0;
        assert!((result.offers[0] - q_star).abs() < 1e-6);
        assert!((result.offers[1] - q_star).abs() < 1e-6);
        assert!((result.price.px() - 15f64.sqrt() / 3.0).abs() < 1e-6);
        assert!(result.buyer_bundles.is_empty());

        // Sellers start with zero money yet end holding px·Q of it.
        let money_after: f64 = result.seller_bundles.iter().map(|b| b.y).sum();
        assert!((money_after - result.money_inflow).abs() < 1e-10);
        assert!(result.money_inflow > 4.0);
    }

    #[test]
    fn cournot_walras_closes_the_market() {
        let e = base_economy();
        let result = solve_cournot_walras(&e, &Tolerance::default()).unwrap();
        let q_star = (9.0 - 15f64.sqrt()) / 3.0;
        assert!((result.offers[0] - q_star).abs() < 1e-6);
        assert!((result.price.px() - 15f64.sqrt() / 3.0).abs() < 1e-6);

        let buyer = result.buyer_bundles[0];
        assert!((buyer.x - q_star).abs() < 1e-6);
        assert!((buyer.y - (20.0 - 3.0 * 15f64.sqrt()) / 3.0).abs() < 1e-6);

        // Both commodities are conserved.
        let x_total: f64 = result
            .seller_bundles
            .iter()
            .chain(&result.buyer_bundles)
            .map(|b| b.x)
            .sum();
        let y_total: f64 = result
            .seller_bundles
            .iter()
            .chain(&result.buyer_bundles)
            .map(|b| b.y)
            .sum();
        assert!((x_total - 6.0).abs() < 1e-8);
        assert!((y_total - 10.0).abs() < 1e-8);

        let seller_u = log_utility(1.0).value(result.seller_bundles[0]);
        let buyer_u = quad_utility(3.0, 1.0).value(buyer);
        assert!((seller_u - 3.035).abs() < 1e-3);
        assert!((buyer_u - 6.460).abs() < 1e-3);
    }

    #[test]
    fn partial_and_derived_offers_agree() {
        let partial =
            solve_cournot(&duopoly_sellers(), &linear_demand(), &Tolerance::default()).unwrap();
        let cw = solve_cournot_walras(&base_economy(), &Tolerance::default()).unwrap();
        // Same inverse demand whether assumed or derived, so the offers are
        // numerically interchangeable.
        assert!((partial.offers[0] - cw.offers[0]).abs() < 1e-8);
        assert!((partial.offers[1] - cw.offers[1]).abs() < 1e-8);
    }

    #[test]
    fn no_seller_gains_from_a_grid_deviation() {
        let sellers = duopoly_sellers();
        let demand = linear_demand();
        let result = solve_cournot(&sellers, &demand, &Tolerance::default()).unwrap();
        let total: f64 = result.offers.iter().sum();
        for (i, seller) in sellers.iter().enumerate() {
            let others = total - result.offers[i];
            let payoff = |q: f64| {
                let px = demand.eval(others + q).unwrap();
                seller.utility.value(seller_allocation(seller, q, px))
            };
            let current = payoff(result.offers[i]);
            for step in 0..200 {
                let q = 3.0 * step as f64 / 199.0;
                assert!(payoff(q) <= current + 1e-6, "seller {i} gains at offer {q}");
            }
        }
    }
}
