//! Sequential bilateral oligopoly: sellers commit to offers first, buyers
//! observe them and bid, and the proportional price rule clears the market.
//!
//! Subgame perfection is computed by backward induction. Every candidate
//! offer vector triggers a fresh solve of the buyer subgame, so the outer
//! seller iteration maximizes payoffs that are themselves numerical
//! solutions; the inner solve therefore runs orders of magnitude tighter
//! than the outer one, and the outer stopping rule is floored to stay above
//! the noise those nested solves leave behind.

use thiserror::Error;

use crate::bilateral::{allocate, AgentGroup, StrategyProfile};
use crate::econ::{Bundle, Economy, Role};
use crate::numerics::{self, NumericsError, SolveDiagnostics, Tolerance};
use crate::walras::{Price, WalrasError};

use crate::bilateral::{group_agents, BilateralError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequentialError {
    #[error("buyer subgame failed at the probed offers: {0}")]
    InnerSolveFailed(NumericsError),
    #[error(transparent)]
    Outer(NumericsError),
    #[error("offer vector has {got} entries, economy has {want} sellers")]
    OfferShapeMismatch { got: usize, want: usize },
    #[error(transparent)]
    Profile(BilateralError),
    #[error("equilibrium price is not positive: {0}")]
    DegeneratePrice(#[from] WalrasError),
}

/// Equilibrium of the buyer stage for a fixed offer vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BuyerSubgameSolution {
    /// The offers the buyers responded to, in seller order.
    pub offers: Vec<f64>,
    /// Equilibrium bids, in buyer order.
    pub bids: Vec<f64>,
    /// Weighted aggregate bid `B(q)`.
    pub total_bid: f64,
    pub diagnostics: SolveDiagnostics,
}

/// Internal group-level machinery shared by the public entry points. Buyer
/// groups collapse identical agents to one bid variable, which is what keeps
/// replica subgames cheap inside the nested solve.
struct BuyerStage {
    groups: Vec<AgentGroup>,
    buyer_of_group: Vec<usize>,
}

impl BuyerStage {
    fn new(economy: &Economy, merge_identical: bool) -> Self {
        let (all_groups, membership) = group_agents(economy, merge_identical);
        let mut groups = Vec::new();
        let mut slot_of_group = vec![usize::MAX; all_groups.len()];
        let mut buyer_of_group = Vec::new();
        for (agent, &g) in economy.agents().iter().zip(&membership) {
            if agent.role == Role::Buyer && slot_of_group[g] == usize::MAX {
                slot_of_group[g] = groups.len();
                groups.push(all_groups[g].clone());
            }
        }
        for (agent, &g) in economy.agents().iter().zip(&membership) {
            if agent.role == Role::Buyer {
                buyer_of_group.push(slot_of_group[g]);
            }
        }
        Self {
            groups,
            buyer_of_group,
        }
    }

    /// Bids (one per buyer group) clearing the stage given total offer `Q`.
    fn solve(
        &self,
        q_total: f64,
        tol: &Tolerance,
    ) -> Result<(Vec<f64>, SolveDiagnostics), NumericsError> {
        let start: Vec<f64> = self
            .groups
            .iter()
            .map(|g| 0.5 * g.representative.endowment.y)
            .collect();
        let br_tol = Tolerance::new(1e-12, 1e-12, 500);
        let map = |state: &[f64]| -> Vec<f64> {
            let b_total: f64 = self
                .groups
                .iter()
                .zip(state)
                .map(|(g, &b)| g.representative.weight * g.count as f64 * b)
                .sum();
            self.groups
                .iter()
                .zip(state)
                .map(|(g, &b)| {
                    let rep = &g.representative;
                    let b_others = b_total - rep.weight * b;
                    let payoff = |bid: f64| {
                        let agg = b_others + rep.weight * bid;
                        let share = if agg > 0.0 { bid * q_total / agg } else { 0.0 };
                        rep.utility
                            .value(Bundle::clamped(share, rep.endowment.y - bid))
                    };
                    numerics::maximize_1d(payoff, 0.0, rep.endowment.y, &br_tol)
                        .expect("best response over a compact box")
                        .argmax
                })
                .collect()
        };
        numerics::damped_best_response_fixed_point(map, &start, 0.5, tol, 1e-9)
    }

    fn total_bid(&self, state: &[f64]) -> f64 {
        self.groups
            .iter()
            .zip(state)
            .map(|(g, &b)| g.representative.weight * g.count as f64 * b)
            .sum()
    }

    fn expand(&self, state: &[f64]) -> Vec<f64> {
        self.buyer_of_group.iter().map(|&g| state[g]).collect()
    }
}

fn weighted_offer_total(economy: &Economy, offers: &[f64]) -> Result<f64, SequentialError> {
    let sellers: Vec<_> = economy.sellers().collect();
    if offers.len() != sellers.len() {
        return Err(SequentialError::OfferShapeMismatch {
            got: offers.len(),
            want: sellers.len(),
        });
    }
    Ok(sellers.iter().zip(offers).map(|(s, &q)| s.weight * q).sum())
}

/// Nash equilibrium of the buyer stage following the offer vector `q`.
///
/// Nothing offered means nothing to bid on: `Q = 0` returns all-zero bids.
pub fn solve_buyer_subgame(
    economy: &Economy,
    offers: &[f64],
    tol: &Tolerance,
) -> Result<BuyerSubgameSolution, SequentialError> {
    let q_total = weighted_offer_total(economy, offers)?;
    if q_total == 0.0 {
        return Ok(BuyerSubgameSolution {
            offers: offers.to_vec(),
            bids: vec![0.0; economy.buyer_count()],
            total_bid: 0.0,
            diagnostics: SolveDiagnostics {
                iterations: 0,
                residual: 0.0,
                converged: true,
                path: "empty market, bids are zero".to_string(),
            },
        });
    }
    let stage = BuyerStage::new(economy, true);
    let fp_tol = subgame_tolerance(tol);
    let (state, diagnostics) = stage
        .solve(q_total, &fp_tol)
        .map_err(SequentialError::InnerSolveFailed)?;
    Ok(BuyerSubgameSolution {
        offers: offers.to_vec(),
        bids: stage.expand(&state),
        total_bid: stage.total_bid(&state),
        diagnostics,
    })
}

fn subgame_tolerance(tol: &Tolerance) -> Tolerance {
    // 100x tighter than the declared tolerance, floored where damped
    // iteration could no longer distinguish progress from rounding noise.
    Tolerance {
        abs_tol: (tol.abs_tol.max(1e-9) / 100.0).max(3e-12),
        rel_tol: tol.rel_tol,
        max_iter: tol.max_iter.max(800),
    }
}

/// Utility the `seller_index`-th seller earns from the offer vector `q`
/// once buyers have reacted: each evaluation nests a buyer-subgame solve.
pub fn seller_stage_payoff(
    economy: &Economy,
    offers: &[f64],
    seller_index: usize,
    tol: &Tolerance,
) -> Result<f64, SequentialError> {
    let q_total = weighted_offer_total(economy, offers)?;
    let seller = economy
        .sellers()
        .nth(seller_index)
        .expect("seller index in range");
    let own = offers[seller_index];
    if q_total == 0.0 {
        return Ok(seller
            .utility
            .value(Bundle::clamped(seller.endowment.x - own, 0.0)));
    }
    let stage = BuyerStage::new(economy, true);
    let (state, _) = stage
        .solve(q_total, &subgame_tolerance(tol))
        .map_err(SequentialError::InnerSolveFailed)?;
    let px = stage.total_bid(&state) / q_total;
    Ok(seller
        .utility
        .value(Bundle::clamped(seller.endowment.x - own, px * own)))
}

/// A subgame-perfect equilibrium of the two-stage game.
#[derive(Debug, Clone)]
pub struct SpneResult {
    /// First-stage offers and the buyer-stage bids they induce.
    pub profile: StrategyProfile,
    pub price: Price,
    pub allocation: Vec<Bundle>,
    /// The buyer-stage solution along the equilibrium path.
    pub subgame: BuyerSubgameSolution,
    pub diagnostics: SolveDiagnostics,
}

impl SpneResult {
    pub fn offers(&self) -> &[f64] {
        self.profile.offers()
    }

    pub fn bids(&self) -> &[f64] {
        self.profile.bids()
    }

    /// Representative strategies and bundles of the first seller and buyer.
    pub fn summary(&self, economy: &Economy) -> (f64, f64, Bundle, Bundle) {
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
        (
            self.profile.offers()[0],
            self.profile.bids()[0],
            self.allocation[seller_at],
            self.allocation[buyer_at],
        )
    }
}

/// Backward induction: an outer damped fixed point over seller offers where
/// each seller maximizes its stage payoff against the others, every payoff
/// evaluation solving the buyer subgame afresh.
///
/// The outer stopping rule never goes below 1e-6 in offer space: stage
/// payoffs carry the residual noise of the nested solves, and pretending to
/// more precision than that noise floor supports would stall the iteration.
pub fn solve_spne(
    economy: &Economy,
    tol: &Tolerance,
    symmetric_hint: bool,
) -> Result<SpneResult, SequentialError> {
    let (all_groups, membership) = group_agents(economy, symmetric_hint);
    let seller_groups: Vec<AgentGroup> = all_groups
        .iter()
        .filter(|g| g.representative.role == Role::Seller)
        .cloned()
        .collect();
    let stage = BuyerStage::new(economy, symmetric_hint);
    let inner_tol = subgame_tolerance(tol);
    let br_tol = Tolerance::new(1e-12, 1e-12, 500);

    let stage_value = |q_total: f64| -> Result<f64, NumericsError> {
        if q_total <= 0.0 {
            return Ok(0.0);
        }
        let (state, _) = stage.solve(q_total, &inner_tol)?;
        Ok(stage.total_bid(&state))
    };

    let map = |state: &[f64]| -> Vec<f64> {
        let q_total: f64 = seller_groups
            .iter()
            .zip(state)
            .map(|(g, &q)| g.representative.weight * g.count as f64 * q)
            .sum();
        seller_groups
            .iter()
            .zip(state)
            .map(|(g, &q)| {
                let rep = &g.representative;
                let q_others = q_total - rep.weight * q;
                let payoff = |offer: f64| {
                    let total = q_others + rep.weight * offer;
                    let revenue = match stage_value(total) {
                        Ok(b_total) if total > 0.0 => b_total / total * offer,
                        _ => 0.0,
                    };
                    rep.utility
                        .value(Bundle::clamped(rep.endowment.x - offer, revenue))
                };
                numerics::maximize_1d(payoff, 0.0, rep.endowment.x, &br_tol)
                    .expect("stage best response over a compact box")
                    .argmax
            })
            .collect()
    };

    let start: Vec<f64> = seller_groups
        .iter()
        .map(|g| 0.5 * g.representative.endowment.x)
        .collect();
    let outer_tol = Tolerance {
        abs_tol: tol.abs_tol.max(1e-6),
        rel_tol: tol.rel_tol,
        max_iter: tol.max_iter.max(300),
    };
    let (state, diagnostics) =
        numerics::damped_best_response_fixed_point(map, &start, 0.5, &outer_tol, 1e-9)
            .map_err(SequentialError::Outer)?;

    // Expand group offers to per-seller offers.
    let mut seller_slot = vec![usize::MAX; all_groups.len()];
    {
        let mut next = 0usize;
        for (agent, &g) in economy.agents().iter().zip(&membership) {
            if agent.role == Role::Seller && seller_slot[g] == usize::MAX {
                seller_slot[g] = next;
                next += 1;
            }
        }
    }
    let offers: Vec<f64> = economy
        .agents()
        .iter()
        .zip(&membership)
        .filter(|(a, _)| a.role == Role::Seller)
        .map(|(a, &g)| state[seller_slot[g]].min(a.endowment.x))
        .collect();

    let subgame = solve_buyer_subgame(economy, &offers, tol)?;
    let profile = StrategyProfile::new(economy, offers, subgame.bids.clone())
        .map_err(SequentialError::Profile)?;
    let price = Price::new(profile.price())?;
    Ok(SpneResult {
        allocation: allocate(economy, &profile),
        profile,
        price,
        subgame,
        diagnostics,
    })
}
