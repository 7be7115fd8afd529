//! Simultaneous bilateral oligopoly: sellers offer the good, buyers bid
//! money, and the price is the ratio of aggregate bids to aggregate offers.
//!
//! Both sides move prices here, unlike the Cournot variants where only
//! sellers are strategic. Aggregates are weight-scaled so the same code runs
//! base economies and replicas; an agent's own bundle is always in per-capita
//! units.
//!
//! The no-trade profile is a Nash equilibrium of every game with this price
//! rule, so the solver iterates from an interior start with a strategy floor
//! and reports collapse toward autarky as an error instead of returning it.

use std::collections::HashMap;

use thiserror::Error;

use crate::econ::{Agent, Bundle, Economy, Role, UtilityFunction};
use crate::numerics::{self, NumericsError, SolveDiagnostics, Tolerance};
use crate::walras::{Price, WalrasError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BilateralError {
    #[error("profile has {got} {role} strategies, economy has {want}")]
    ProfileShapeMismatch { role: Role, got: usize, want: usize },
    #[error("{role} strategy {index} = {value} outside [0, {cap}]")]
    StrategyOutOfBounds {
        role: Role,
        index: usize,
        value: f64,
        cap: f64,
    },
    #[error("converged profile failed verification: a {role} deviation improves its payoff by {improvement:.3e}")]
    VerificationFailed { role: Role, improvement: f64 },
    #[error("equilibrium price is not positive: {0}")]
    DegeneratePrice(#[from] WalrasError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Offers and bids with the weights they enter aggregates at.
///
/// Offers follow the economy's seller order and bids its buyer order.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    offers: Vec<f64>,
    bids: Vec<f64>,
    seller_weights: Vec<f64>,
    buyer_weights: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(
        economy: &Economy,
        offers: Vec<f64>,
        bids: Vec<f64>,
    ) -> Result<Self, BilateralError> {
        let sellers: Vec<&Agent> = economy.sellers().collect();
        let buyers: Vec<&Agent> = economy.buyers().collect();
        if offers.len() != sellers.len() {
            return Err(BilateralError::ProfileShapeMismatch {
                role: Role::Seller,
                got: offers.len(),
                want: sellers.len(),
            });
        }
        if bids.len() != buyers.len() {
            return Err(BilateralError::ProfileShapeMismatch {
                role: Role::Buyer,
                got: bids.len(),
                want: buyers.len(),
            });
        }
        for (index, (&q, s)) in offers.iter().zip(&sellers).enumerate() {
            if !(q >= 0.0 && q <= s.endowment.x) {
                return Err(BilateralError::StrategyOutOfBounds {
                    role: Role::Seller,
                    index,
                    value: q,
                    cap: s.endowment.x,
                });
            }
        }
        for (index, (&b, a)) in bids.iter().zip(&buyers).enumerate() {
            if !(b >= 0.0 && b <= a.endowment.y) {
                return Err(BilateralError::StrategyOutOfBounds {
                    role: Role::Buyer,
                    index,
                    value: b,
                    cap: a.endowment.y,
                });
            }
        }
        Ok(Self {
            offers,
            bids,
            seller_weights: sellers.iter().map(|s| s.weight).collect(),
            buyer_weights: buyers.iter().map(|b| b.weight).collect(),
        })
    }

    pub fn offers(&self) -> &[f64] {
        &self.offers
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }

    /// Weighted aggregate offer `Q`.
    pub fn total_offer(&self) -> f64 {
        self.offers
            .iter()
            .zip(&self.seller_weights)
            .map(|(&q, &w)| w * q)
            .sum()
    }

    /// Weighted aggregate bid `B`.
    pub fn total_bid(&self) -> f64 {
        self.bids
            .iter()
            .zip(&self.buyer_weights)
            .map(|(&b, &w)| w * b)
            .sum()
    }

    /// Price of the good: `B/Q`, or 0 when nothing is offered.
    pub fn price(&self) -> f64 {
        price_rule(self)
    }
}

/// The proportional price rule.
pub fn price_rule(profile: &StrategyProfile) -> f64 {
    let q = profile.total_offer();
    if q == 0.0 {
        0.0
    } else {
        profile.total_bid() / q
    }
}

/// Post-trade bundles in economy agent order.
///
/// Interior profiles follow the proportional sharing rule: sellers receive
/// `px·q_i` of money, buyers receive `b_i/px` of the good. When nothing is
/// offered the market does not open and bids are returned, which keeps both
/// commodities conserved. When goods are offered against zero bids the
/// offers fetch a zero price and are not returned.
pub fn allocate(economy: &Economy, profile: &StrategyProfile) -> Vec<Bundle> {
    let q_total = profile.total_offer();
    let b_total = profile.total_bid();
    let px = if q_total == 0.0 {
        0.0
    } else {
        b_total / q_total
    };
    let mut seller_at = 0usize;
    let mut buyer_at = 0usize;
    economy
        .agents()
        .iter()
        .map(|agent| match agent.role {
            Role::Seller => {
                let q = profile.offers[seller_at];
                seller_at += 1;
                if q_total == 0.0 {
                    agent.endowment
                } else {
                    Bundle::clamped(agent.endowment.x - q, px * q)
                }
            }
            Role::Buyer => {
                let b = profile.bids[buyer_at];
                buyer_at += 1;
                if q_total == 0.0 || px == 0.0 {
                    // Bids are returned on a closed market.
                    Bundle::clamped(0.0, agent.endowment.y)
                } else {
                    Bundle::clamped(b / px, agent.endowment.y - b)
                }
            }
        })
        .collect()
}

/// Utility of agent `agent_index` (economy order) at the profile.
pub fn payoff(economy: &Economy, profile: &StrategyProfile, agent_index: usize) -> f64 {
    let agent = &economy.agents()[agent_index];
    agent.utility.value(allocate(economy, profile)[agent_index])
}

/// A best response together with a degeneracy flag: when the other side of
/// the market is absent there is nothing to respond to and 0 is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub strategy: f64,
    pub degenerate: bool,
}

fn seller_payoff_given(
    utility: UtilityFunction,
    x0: f64,
    weight: f64,
    q_others: f64,
    b_total: f64,
    q: f64,
) -> f64 {
    let q_total = q_others + weight * q;
    let revenue = if q_total > 0.0 {
        b_total / q_total * q
    } else {
        0.0
    };
    utility.value(Bundle::clamped(x0 - q, revenue))
}

fn buyer_payoff_given(
    utility: UtilityFunction,
    y0: f64,
    weight: f64,
    b_others: f64,
    q_total: f64,
    b: f64,
) -> f64 {
    let b_total = b_others + weight * b;
    let share = if b_total > 0.0 {
        b * q_total / b_total
    } else {
        0.0
    };
    utility.value(Bundle::clamped(share, y0 - b))
}

fn seller_best_response(
    utility: UtilityFunction,
    x0: f64,
    weight: f64,
    q_others: f64,
    b_total: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError> {
    let payoff = |q: f64| seller_payoff_given(utility, x0, weight, q_others, b_total, q);
    Ok(numerics::maximize_1d(payoff, 0.0, x0, tol)?.argmax)
}

fn buyer_best_response(
    utility: UtilityFunction,
    y0: f64,
    weight: f64,
    b_others: f64,
    q_total: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError> {
    let payoff = |b: f64| buyer_payoff_given(utility, y0, weight, b_others, q_total, b);
    Ok(numerics::maximize_1d(payoff, 0.0, y0, tol)?.argmax)
}

/// Best offer of the `seller_index`-th seller holding everyone else fixed.
pub fn best_response_seller(
    economy: &Economy,
    profile: &StrategyProfile,
    seller_index: usize,
    tol: &Tolerance,
) -> Result<BestResponse, BilateralError> {
    let seller = economy
        .sellers()
        .nth(seller_index)
        .expect("seller index in range");
    let b_total = profile.total_bid();
    if b_total <= 0.0 {
        // No bids, no revenue: offering anything only burns the good.
        return Ok(BestResponse {
            strategy: 0.0,
            degenerate: true,
        });
    }
    let q_others = profile.total_offer() - seller.weight * profile.offers[seller_index];
    let strategy = seller_best_response(
        seller.utility,
        seller.endowment.x,
        seller.weight,
        q_others,
        b_total,
        tol,
    )?;
    Ok(BestResponse {
        strategy,
        degenerate: false,
    })
}

/// Best bid of the `buyer_index`-th buyer holding everyone else fixed.
pub fn best_response_buyer(
    economy: &Economy,
    profile: &StrategyProfile,
    buyer_index: usize,
    tol: &Tolerance,
) -> Result<BestResponse, BilateralError> {
    let buyer = economy
        .buyers()
        .nth(buyer_index)
        .expect("buyer index in range");
    let q_total = profile.total_offer();
    if q_total <= 0.0 {
        return Ok(BestResponse {
            strategy: 0.0,
            degenerate: true,
        });
    }
    let b_others = profile.total_bid() - buyer.weight * profile.bids[buyer_index];
    let strategy = buyer_best_response(
        buyer.utility,
        buyer.endowment.y,
        buyer.weight,
        b_others,
        q_total,
        tol,
    )?;
    Ok(BestResponse {
        strategy,
        degenerate: false,
    })
}

/// Agents that are interchangeable for solving purposes: same role, weight,
/// endowment, and utility, matched bit-for-bit so replicas group exactly.
#[derive(Debug, Clone)]
pub(crate) struct AgentGroup {
    pub representative: Agent,
    pub count: usize,
}

#[derive(Hash, PartialEq, Eq)]
struct GroupKey {
    role: Role,
    weight: u64,
    endow_x: u64,
    endow_y: u64,
    utility: (u8, u64, u64),
}

fn group_key(agent: &Agent) -> GroupKey {
    let utility = match agent.utility {
        UtilityFunction::LogQuasiLinear { a } => (0u8, a.to_bits(), 0u64),
        UtilityFunction::QuadQuasiLinear { alpha, beta } => (1u8, alpha.to_bits(), beta.to_bits()),
    };
    GroupKey {
        role: agent.role,
        weight: agent.weight.to_bits(),
        endow_x: agent.endowment.x.to_bits(),
        endow_y: agent.endowment.y.to_bits(),
        utility,
    }
}

/// Groups agents by identity, preserving first-occurrence order. Returns the
/// groups and each agent's group index.
pub(crate) fn group_agents(
    economy: &Economy,
    merge_identical: bool,
) -> (Vec<AgentGroup>, Vec<usize>) {
    let mut groups: Vec<AgentGroup> = Vec::new();
    let mut membership = Vec::with_capacity(economy.agents().len());
    let mut seen: HashMap<GroupKey, usize> = HashMap::new();
    for agent in economy.agents() {
        if merge_identical {
            let key = group_key(agent);
            let slot = *seen.entry(key).or_insert_with(|| {
                groups.push(AgentGroup {
                    representative: *agent,
                    count: 0,
                });
                groups.len() - 1
            });
            groups[slot].count += 1;
            membership.push(slot);
        } else {
            groups.push(AgentGroup {
                representative: *agent,
                count: 1,
            });
            membership.push(groups.len() - 1);
        }
    }
    (groups, membership)
}

/// A verified Cournot-Nash equilibrium of the bid/offer game.
#[derive(Debug, Clone)]
pub struct NashResult {
    pub profile: StrategyProfile,
    pub price: Price,
    /// Bundles in economy agent order.
    pub allocation: Vec<Bundle>,
    /// Largest payoff improvement any agent could reach on the verification
    /// grid; a certified equilibrium keeps this at noise level.
    pub max_deviation_gain: f64,
    pub diagnostics: SolveDiagnostics,
}

impl NashResult {
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
            self.profile.offers[0],
            self.profile.bids[0],
            self.allocation[seller_at],
            self.allocation[buyer_at],
        )
    }
}

const DEVIATION_GRID: usize = 200;
const VERIFICATION_GATE: f64 = 1e-5;

/// Computes a Cournot-Nash equilibrium as a damped fixed point of the joint
/// best-response map, then certifies it with a unilateral deviation scan.
///
/// With `symmetric_hint` set, agents with identical characteristics share one
/// strategy variable, which is what makes large replicas tractable; the full
/// per-agent iteration runs otherwise. The scan covers one representative per
/// strategy variable either way.
pub fn solve_cournot_nash(
    economy: &Economy,
    tol: &Tolerance,
    symmetric_hint: bool,
) -> Result<NashResult, BilateralError> {
    let (groups, membership) = group_agents(economy, symmetric_hint);
    let start: Vec<f64> = groups
        .iter()
        .map(|g| 0.5 * g.representative.strategy_cap())
        .collect();
    let br_tol = Tolerance::new(tol.abs_tol.min(1e-11), tol.rel_tol.min(1e-11), 500);

    let map = |state: &[f64]| -> Vec<f64> {
        let (q_total, b_total) = group_totals(&groups, state);
        groups
            .iter()
            .zip(state)
            .map(|(g, &s)| {
                let rep = &g.representative;
                let own = rep.weight * s;
                match rep.role {
                    Role::Seller => seller_best_response(
                        rep.utility,
                        rep.endowment.x,
                        rep.weight,
                        q_total - own,
                        b_total,
                        &br_tol,
                    ),
                    Role::Buyer => buyer_best_response(
                        rep.utility,
                        rep.endowment.y,
                        rep.weight,
                        b_total - own,
                        q_total,
                        &br_tol,
                    ),
                }
                .expect("best response over a compact box")
            })
            .collect()
    };

    let fp_tol = tol.for_iteration(1e-10, 600);
    let (state, diagnostics) =
        numerics::damped_best_response_fixed_point(map, &start, 0.5, &fp_tol, 1e-9)?;

    let mut offers = Vec::with_capacity(economy.seller_count());
    let mut bids = Vec::with_capacity(economy.buyer_count());
    for (agent, &slot) in economy.agents().iter().zip(&membership) {
        match agent.role {
            Role::Seller => offers.push(state[slot].min(agent.endowment.x)),
            Role::Buyer => bids.push(state[slot].min(agent.endowment.y)),
        }
    }
    let profile = StrategyProfile::new(economy, offers, bids)?;
    let price = Price::new(profile.price())?;

    let max_deviation_gain = deviation_gain(&groups, &state, DEVIATION_GRID);
    if max_deviation_gain > VERIFICATION_GATE {
        let role = worst_deviation_role(&groups, &state, DEVIATION_GRID);
        return Err(BilateralError::VerificationFailed {
            role,
            improvement: max_deviation_gain,
        });
    }

    Ok(NashResult {
        allocation: allocate(economy, &profile),
        profile,
        price,
        max_deviation_gain,
        diagnostics,
    })
}

fn group_totals(groups: &[AgentGroup], state: &[f64]) -> (f64, f64) {
    let mut q_total = 0.0;
    let mut b_total = 0.0;
    for (g, &s) in groups.iter().zip(state) {
        let contribution = g.representative.weight * g.count as f64 * s;
        match g.representative.role {
            Role::Seller => q_total += contribution,
            Role::Buyer => b_total += contribution,
        }
    }
    (q_total, b_total)
}

/// Largest unilateral payoff improvement over a uniform strategy grid, taking
/// one representative agent per group.
pub(crate) fn deviation_gain(groups: &[AgentGroup], state: &[f64], grid: usize) -> f64 {
    scan_deviations(groups, state, grid).0
}

fn worst_deviation_role(groups: &[AgentGroup], state: &[f64], grid: usize) -> Role {
    scan_deviations(groups, state, grid).1
}

fn scan_deviations(groups: &[AgentGroup], state: &[f64], grid: usize) -> (f64, Role) {
    let (q_total, b_total) = group_totals(groups, state);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_role = Role::Seller;
    for (g, &s) in groups.iter().zip(state) {
        let rep = &g.representative;
        let own = rep.weight * s;
        let cap = rep.strategy_cap();
        let current = match rep.role {
            Role::Seller => seller_payoff_given(
                rep.utility,
                rep.endowment.x,
                rep.weight,
                q_total - own,
                b_total,
                s,
            ),
            Role::Buyer => buyer_payoff_given(
                rep.utility,
                rep.endowment.y,
                rep.weight,
                b_total - own,
                q_total,
                s,
            ),
        };
        for i in 0..grid {
            let candidate = cap * i as f64 / (grid - 1) as f64;
            let deviated = match rep.role {
                Role::Seller => seller_payoff_given(
                    rep.utility,
                    rep.endowment.x,
                    rep.weight,
                    q_total - own,
                    b_total,
                    candidate,
                ),
                Role::Buyer => buyer_payoff_given(
                    rep.utility,
                    rep.endowment.y,
                    rep.weight,
                    b_total - own,
                    q_total,
                    candidate,
                ),
            };
            let gain = deviated - current;
            if gain > worst {
                worst = gain;
                worst_role = rep.role;
            }
        }
    }
    (worst, worst_role)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econ::{ReplicaMode, ReplicaSpec};
    use crate::test_fixtures::{base_economy, interior_nash_profile};

    fn s17() -> f64 {
        17f64.sqrt()
    }

    #[test]
    fn price_rule_examples() {
        let e = base_economy();
        let zero = StrategyProfile::new(&e, vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(price_rule(&zero), 0.0);

        let eq = interior_nash_profile(&e);
        assert!((price_rule(&eq) - (s17() - 1.0) / 4.0).abs() < 1e-12);

        let limit = StrategyProfile::new(&e, vec![2.0, 2.0], vec![2.0, 2.0]).unwrap();
        assert_eq!(price_rule(&limit), 1.0);
    }

    #[test]
    fn allocate_keeps_endowments_without_trade() {
        let e = base_economy();
        let zero = StrategyProfile::new(&e, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let bundles = allocate(&e, &zero);
        for (agent, bundle) in e.agents().iter().zip(&bundles) {
            assert_eq!(*bundle, agent.endowment);
        }
    }

    #[test]
    fn allocate_equilibrium_and_limit_profiles() {
        let e = base_economy();
        let bundles = allocate(&e, &interior_nash_profile(&e));
        assert!((bundles[0].x - (s17() - 1.0) / 2.0).abs() < 1e-12);
        assert!((bundles[0].y - (s17() - 3.0)).abs() < 1e-12);
        assert!((bundles[2].x - (7.0 - s17()) / 2.0).abs() < 1e-12);
        assert!((bundles[2].y - (8.0 - s17())).abs() < 1e-12);

        let limit = StrategyProfile::new(&e, vec![2.0, 2.0], vec![2.0, 2.0]).unwrap();
        let bundles = allocate(&e, &limit);
        assert_eq!((bundles[0].x, bundles[0].y), (1.0, 2.0));
        assert_eq!((bundles[2].x, bundles[2].y), (2.0, 3.0));
    }

    #[test]
    fn allocate_degenerate_corners() {
        let e = base_economy();
        // Bids against an empty market are returned; everything conserved.
        let no_offers = StrategyProfile::new(&e, vec![0.0, 0.0], vec![3.0, 1.0]).unwrap();
        let bundles = allocate(&e, &no_offers);
        assert_eq!((bundles[2].x, bundles[2].y), (0.0, 5.0));
        let y_total: f64 = bundles.iter().map(|b| b.y).sum();
        assert_eq!(y_total, 10.0);

        // Offers against zero bids fetch a zero price and are not returned.
        let no_bids = StrategyProfile::new(&e, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let bundles = allocate(&e, &no_bids);
        assert_eq!((bundles[0].x, bundles[0].y), (2.0, 0.0));
        assert_eq!((bundles[2].x, bundles[2].y), (0.0, 5.0));
    }

    #[test]
    fn payoff_examples() {
        let e = base_economy();
        let eq = interior_nash_profile(&e);
        assert!((payoff(&e, &eq, 0) - 2.064).abs() < 1e-3);

        let zero = StrategyProfile::new(&e, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(payoff(&e, &zero, 2), 5.0);

        let limit = StrategyProfile::new(&e, vec![2.0, 2.0], vec![2.0, 2.0]).unwrap();
        assert!((payoff(&e, &limit, 2) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn best_responses_reproduce_the_equilibrium_relations() {
        let e = base_economy();
        let tol = Tolerance::default();
        let eq = interior_nash_profile(&e);

        // Seller side: q = 4b/(2+b) at the symmetric point.
        let br = best_response_seller(&e, &eq, 0, &tol).unwrap();
        assert!(!br.degenerate);
        assert!((br.strategy - (7.0 - s17()) / 2.0).abs() < 1e-6);
        let b_hat = s17() - 3.0;
        assert!((br.strategy - 4.0 * b_hat / (2.0 + b_hat)).abs() < 1e-6);

        // Buyer side: b = q(3−q)/2 at the symmetric point.
        let br = best_response_buyer(&e, &eq, 0, &tol).unwrap();
        assert!((br.strategy - b_hat).abs() < 1e-6);
        let q_hat = (7.0 - s17()) / 2.0;
        assert!((br.strategy - q_hat * 0.5 * (3.0 - q_hat)).abs() < 1e-6);
    }

    #[test]
    fn best_responses_flag_degenerate_opponents() {
        let e = base_economy();
        let tol = Tolerance::default();
        let no_bids = StrategyProfile::new(&e, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let br = best_response_seller(&e, &no_bids, 0, &tol).unwrap();
        assert!(br.degenerate);
        assert_eq!(br.strategy, 0.0);

        let no_offers = StrategyProfile::new(&e, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let br = best_response_buyer(&e, &no_offers, 0, &tol).unwrap();
        assert!(br.degenerate);
        assert_eq!(br.strategy, 0.0);
    }

    #[test]
    fn joint_map_fixed_point_from_a_unit_start() {
        // The joint best-response map, iterated with damping 1/2 from
        // (1, 1, 1, 1), lands on the interior equilibrium radicals.
        let e = base_economy();
        let tol = Tolerance::default();
        let map = |v: &[f64]| -> Vec<f64> {
            let profile = StrategyProfile::new(&e, vec![v[0], v[1]], vec![v[2], v[3]]).unwrap();
            vec![
                best_response_seller(&e, &profile, 0, &tol)
                    .unwrap()
                    .strategy,
                best_response_seller(&e, &profile, 1, &tol)
                    .unwrap()
                    .strategy,
                best_response_buyer(&e, &profile, 0, &tol).unwrap().strategy,
                best_response_buyer(&e, &profile, 1, &tol).unwrap().strategy,
            ]
        };
        let fp_tol = Tolerance::new(1e-9, 1e-10, 600);
        let (x, diag) =
            numerics::damped_best_response_fixed_point(map, &[1.0; 4], 0.5, &fp_tol, 1e-9).unwrap();
        assert!(diag.converged);
        let q_hat = (7.0 - s17()) / 2.0;
        let b_hat = s17() - 3.0;
        assert!((x[0] - q_hat).abs() < 1e-6);
        assert!((x[1] - q_hat).abs() < 1e-6);
        assert!((x[2] - b_hat).abs() < 1e-6);
        assert!((x[3] - b_hat).abs() < 1e-6);
    }

    #[test]
    fn joint_map_escapes_a_near_zero_start() {
        // Along proportional near-zero rays the price stays at B/Q, which
        // both sides profit from, so direct iteration expands away from the
        // no-trade profile instead of contracting onto it and ends at the
        // interior equilibrium.
        let e = base_economy();
        let tol = Tolerance::default();
        let map = |v: &[f64]| -> Vec<f64> {
            let profile = StrategyProfile::new(&e, vec![v[0], v[1]], vec![v[2], v[3]]).unwrap();
            vec![
                best_response_seller(&e, &profile, 0, &tol)
                    .unwrap()
                    .strategy,
                best_response_seller(&e, &profile, 1, &tol)
                    .unwrap()
                    .strategy,
                best_response_buyer(&e, &profile, 0, &tol).unwrap().strategy,
                best_response_buyer(&e, &profile, 1, &tol).unwrap().strategy,
            ]
        };
        // The stop must sit well under the iterates' own growth rate or the
        // slow climb out of the near-zero region would read as convergence.
        let fp_tol = Tolerance::new(1e-11, 1e-12, 800);
        let (x, _) =
            numerics::damped_best_response_fixed_point(map, &[1e-9; 4], 0.5, &fp_tol, 1e-9)
                .unwrap();
        assert!((x[0] - (7.0 - s17()) / 2.0).abs() < 1e-6);
        assert!((x[2] - (s17() - 3.0)).abs() < 1e-6);
    }

    #[test]
    fn no_gains_from_trade_collapses_to_the_floor() {
        // The seller's lowest acceptable price (marginal value 1/4 when
        // retaining everything) exceeds the buyer's choke price, so the only
        // equilibrium is autarky and the solver reports the collapse.
        let e = Economy::new(
            "no gains from trade",
            vec![
                Agent::seller(0, 3.0, 1.0, UtilityFunction::log_quasi_linear(1.0).unwrap())
                    .unwrap(),
                Agent::seller(1, 3.0, 1.0, UtilityFunction::log_quasi_linear(1.0).unwrap())
                    .unwrap(),
                Agent::buyer(
                    2,
                    5.0,
                    1.0,
                    UtilityFunction::quad_quasi_linear(0.1, 1.0).unwrap(),
                )
                .unwrap(),
                Agent::buyer(
                    3,
                    5.0,
                    1.0,
                    UtilityFunction::quad_quasi_linear(0.1, 1.0).unwrap(),
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let err = solve_cournot_nash(&e, &Tolerance::default(), true);
        assert!(matches!(
            err,
            Err(BilateralError::Numerics(
                NumericsError::CollapsedToFloor { .. }
            ))
        ));
    }

    #[test]
    fn solver_reaches_the_interior_equilibrium() {
        let e = base_economy();
        for hint in [true, false] {
            let result = solve_cournot_nash(&e, &Tolerance::default(), hint).unwrap();
            let (q, b, seller, buyer) = result.summary(&e);
            assert!((q - (7.0 - s17()) / 2.0).abs() < 1e-6, "hint={hint}");
            assert!((b - (s17() - 3.0)).abs() < 1e-6);
            assert!((result.price.px() - (s17() - 1.0) / 4.0).abs() < 1e-6);
            assert!((seller.x - (s17() - 1.0) / 2.0).abs() < 1e-6);
            assert!((buyer.y - (8.0 - s17())).abs() < 1e-6);
            assert!(result.max_deviation_gain <= 1e-6);
        }
    }

    #[test]
    fn partial_replica_n1_matches_the_base_game() {
        let e = base_economy();
        let replica = e
            .build_replica(ReplicaSpec {
                mode: ReplicaMode::PartialBuyers,
                n: 1,
            })
            .unwrap();
        let base = solve_cournot_nash(&e, &Tolerance::default(), true).unwrap();
        let rep = solve_cournot_nash(&replica, &Tolerance::default(), true).unwrap();
        let (q0, b0, _, _) = base.summary(&e);
        let (q1, b1, _, _) = rep.summary(&replica);
        assert!((q0 - q1).abs() < 1e-9);
        assert!((b0 - b1).abs() < 1e-9);
    }

    #[test]
    fn partial_replica_matches_the_weight_factor_closed_form() {
        let e = base_economy();
        let n = 10usize;
        let k = 1.0 - 1.0 / (2.0 * n as f64);
        let replica = e
            .build_replica(ReplicaSpec {
                mode: ReplicaMode::PartialBuyers,
                n,
            })
            .unwrap();
        let result = solve_cournot_nash(&replica, &Tolerance::default(), true).unwrap();
        let (q, b, _, _) = result.summary(&replica);
        let q_expected = (7.0 * k - (k * k + 8.0 * k).sqrt()) / (2.0 * k);
        let b_expected = 2.0 * (k * k + 8.0 * k).sqrt() - 2.0 * k - 2.0;
        assert!((q - q_expected).abs() < 1e-6);
        assert!((b - b_expected).abs() < 1e-6);
    }

    #[test]
    fn asymmetric_economy_equilibrium_survives_a_fine_scan() {
        // No closed form here: four distinct agents. The certificate is the
        // solver's own contract, re-checked with a much finer grid.
        let e = Economy::new(
            "asymmetric",
            vec![
                Agent::seller(0, 3.0, 1.0, UtilityFunction::log_quasi_linear(1.0).unwrap())
                    .unwrap(),
                Agent::seller(1, 2.0, 1.0, UtilityFunction::log_quasi_linear(0.8).unwrap())
                    .unwrap(),
                Agent::buyer(
                    2,
                    5.0,
                    1.0,
                    UtilityFunction::quad_quasi_linear(3.0, 1.0).unwrap(),
                )
                .unwrap(),
                Agent::buyer(
                    3,
                    4.0,
                    1.0,
                    UtilityFunction::quad_quasi_linear(2.5, 0.8).unwrap(),
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let tol = Tolerance::default();
        let result = solve_cournot_nash(&e, &tol, false).unwrap();
        assert!(result.diagnostics.converged);

        // Fine unilateral deviation scan over every agent.
        for (index, agent) in e.agents().iter().enumerate() {
            let current = payoff(&e, &result.profile, index);
            let cap = agent.strategy_cap();
            for step in 0..2000 {
                let candidate = cap * step as f64 / 1999.0;
                let mut offers = result.profile.offers().to_vec();
                let mut bids = result.profile.bids().to_vec();
                match agent.role {
                    Role::Seller => offers[index] = candidate,
                    Role::Buyer => bids[index - 2] = candidate,
                }
                let deviated = StrategyProfile::new(&e, offers, bids).unwrap();
                assert!(
                    payoff(&e, &deviated, index) <= current + 1e-6,
                    "agent {index} gains at {candidate}"
                );
            }
        }

        // Conservation and the price identity hold off the symmetric path too.
        let bundles = allocate(&e, &result.profile);
        let (x0, y0) = e.weighted_totals();
        let x: f64 = e
            .agents()
            .iter()
            .zip(&bundles)
            .map(|(a, b)| a.weight * b.x)
            .sum();
        let y: f64 = e
            .agents()
            .iter()
            .zip(&bundles)
            .map(|(a, b)| a.weight * b.y)
            .sum();
        assert!((x - x0).abs() < 1e-12 && (y - y0).abs() < 1e-12);
        let q_total = result.profile.total_offer();
        assert!((result.price.px() * q_total - result.profile.total_bid()).abs() < 1e-12);

        // The hint changes nothing when no two agents are interchangeable.
        let reduced = solve_cournot_nash(&e, &tol, true).unwrap();
        for (a, b) in result.profile.offers().iter().zip(reduced.profile.offers()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
