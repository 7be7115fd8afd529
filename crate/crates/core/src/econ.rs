//! Two-commodity exchange economies with corner endowments.
//!
//! The world has a consumption good `x` and commodity money `y` (the
//! numeraire). Sellers hold only the good, buyers hold only money, and every
//! agent carries a positive weight so that replicated economies can shrink
//! per-copy influence while keeping aggregate endowments fixed.

use thiserror::Error;

/// Validation failures for economy construction and replication.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("bundle components must be non-negative and finite, got ({x}, {y})")]
    InvalidBundle { x: f64, y: f64 },
    #[error("utility parameter {name} must be strictly positive, got {value}")]
    InvalidUtilityParam { name: &'static str, value: f64 },
    #[error("{role} endowment must be a corner holding, got ({x}, {y})")]
    CornerEndowmentViolated { role: Role, x: f64, y: f64 },
    #[error("agent weight must be strictly positive and finite, got {0}")]
    InvalidWeight(f64),
    #[error("economy needs at least one seller and at least one buyer")]
    MissingSide,
    #[error("replication count must be at least 1")]
    ZeroReplication,
}

/// A commodity bundle: `x` units of the good and `y` units of money.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bundle {
    pub x: f64,
    pub y: f64,
}

impl Bundle {
    pub fn new(x: f64, y: f64) -> Result<Self, EconError> {
        if !(x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0) {
            return Err(EconError::InvalidBundle { x, y });
        }
        Ok(Self { x, y })
    }

    /// Builds a bundle from solver output, absorbing round-off that would
    /// leave a component a hair below zero.
    pub(crate) fn clamped(x: f64, y: f64) -> Self {
        debug_assert!(
            x > -1e-9 && y > -1e-9,
            "bundle far out of range: ({x}, {y})"
        );
        Self {
            x: x.max(0.0),
            y: y.max(0.0),
        }
    }
}

/// Quasi-linear utility families. Money enters linearly, so the marginal
/// utility of `y` is 1 everywhere and willingness to pay for the good is
/// measured directly in money.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilityFunction {
    /// `u(x, y) = a·ln(1 + x) + y` with `a > 0`.
    LogQuasiLinear { a: f64 },
    /// `u(x, y) = alpha·x − (beta/2)·x² + y` with `alpha, beta > 0`.
    QuadQuasiLinear { alpha: f64, beta: f64 },
}

impl UtilityFunction {
    pub fn log_quasi_linear(a: f64) -> Result<Self, EconError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(EconError::InvalidUtilityParam {
                name: "a",
                value: a,
            });
        }
        Ok(Self::LogQuasiLinear { a })
    }

    pub fn quad_quasi_linear(alpha: f64, beta: f64) -> Result<Self, EconError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(EconError::InvalidUtilityParam {
                name: "alpha",
                value: alpha,
            });
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(EconError::InvalidUtilityParam {
                name: "beta",
                value: beta,
            });
        }
        Ok(Self::QuadQuasiLinear { alpha, beta })
    }

    /// Utility of a bundle.
    pub fn value(&self, bundle: Bundle) -> f64 {
        match *self {
            Self::LogQuasiLinear { a } => a * (1.0 + bundle.x).ln() + bundle.y,
            Self::QuadQuasiLinear { alpha, beta } => {
                alpha * bundle.x - 0.5 * beta * bundle.x * bundle.x + bundle.y
            }
        }
    }

    /// Marginal utilities `(du/dx, du/dy)`; `du/dy` is 1 by quasi-linearity.
    pub fn marginals(&self, bundle: Bundle) -> (f64, f64) {
        let du_dx = match *self {
            Self::LogQuasiLinear { a } => a / (1.0 + bundle.x),
            Self::QuadQuasiLinear { alpha, beta } => alpha - beta * bundle.x,
        };
        (du_dx, 1.0)
    }

    /// Price at which demand for the good falls to zero.
    pub fn choke_price(&self) -> f64 {
        match *self {
            Self::LogQuasiLinear { a } => a,
            Self::QuadQuasiLinear { alpha, .. } => alpha,
        }
    }

    /// Quantity of the good at which the marginal utility of `x` equals
    /// `px`, ignoring box constraints. Negative when `px` exceeds the choke
    /// price.
    pub(crate) fn unconstrained_demand_x(&self, px: f64) -> f64 {
        match *self {
            Self::LogQuasiLinear { a } => a / px - 1.0,
            Self::QuadQuasiLinear { alpha, beta } => (alpha - px) / beta,
        }
    }
}

/// Market side of an agent, fixed by the corner endowment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Seller,
    Buyer,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Seller => write!(f, "seller"),
            Role::Buyer => write!(f, "buyer"),
        }
    }
}

/// One trader: a corner endowment, a replica weight, and a utility function.
///
/// Weights scale an agent's contribution to market aggregates; the agent's
/// own consumption bundle is always expressed per capita.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub id: u32,
    pub role: Role,
    pub endowment: Bundle,
    pub weight: f64,
    pub utility: UtilityFunction,
}

impl Agent {
    /// A seller holding `good` units of `x` and no money.
    pub fn seller(
        id: u32,
        good: f64,
        weight: f64,
        utility: UtilityFunction,
    ) -> Result<Self, EconError> {
        Self::checked(id, Role::Seller, Bundle::new(good, 0.0)?, weight, utility)
    }

    /// A buyer holding `money` units of `y` and none of the good.
    pub fn buyer(
        id: u32,
        money: f64,
        weight: f64,
        utility: UtilityFunction,
    ) -> Result<Self, EconError> {
        Self::checked(id, Role::Buyer, Bundle::new(0.0, money)?, weight, utility)
    }

    fn checked(
        id: u32,
        role: Role,
        endowment: Bundle,
        weight: f64,
        utility: UtilityFunction,
    ) -> Result<Self, EconError> {
        let corner_ok = match role {
            Role::Seller => endowment.x > 0.0 && endowment.y == 0.0,
            Role::Buyer => endowment.x == 0.0 && endowment.y > 0.0,
        };
        if !corner_ok {
            return Err(EconError::CornerEndowmentViolated {
                role,
                x: endowment.x,
                y: endowment.y,
            });
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(EconError::InvalidWeight(weight));
        }
        Ok(Self {
            id,
            role,
            endowment,
            weight,
            utility,
        })
    }

    /// Upper bound of the agent's strategy box: the whole corner holding.
    pub fn strategy_cap(&self) -> f64 {
        match self.role {
            Role::Seller => self.endowment.x,
            Role::Buyer => self.endowment.y,
        }
    }
}

/// Replication recipe for an economy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplicaMode {
    /// Copy each buyer `n` times at weight `w/n`; sellers keep their weight.
    PartialBuyers,
    /// Copy every agent `n` times at weight `w/n`.
    Full,
}

impl std::fmt::Display for ReplicaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplicaMode::PartialBuyers => write!(f, "partial"),
            ReplicaMode::Full => write!(f, "full"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicaSpec {
    pub mode: ReplicaMode,
    pub n: usize,
}

/// An ordered collection of sellers and buyers.
///
/// Immutable after construction; clones are cheap enough for the economies
/// the solvers handle directly and replicas are built on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    description: String,
    agents: Vec<Agent>,
}

impl Economy {
    pub fn new(description: impl Into<String>, agents: Vec<Agent>) -> Result<Self, EconError> {
        let has_seller = agents.iter().any(|a| a.role == Role::Seller);
        let has_buyer = agents.iter().any(|a| a.role == Role::Buyer);
        if !has_seller || !has_buyer {
            return Err(EconError::MissingSide);
        }
        Ok(Self {
            description: description.into(),
            agents,
        })
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn sellers(&self) -> impl Iterator<Item = &Agent> {
        self.agents.iter().filter(|a| a.role == Role::Seller)
    }

    pub fn buyers(&self) -> impl Iterator<Item = &Agent> {
        self.agents.iter().filter(|a| a.role == Role::Buyer)
    }

    pub fn seller_count(&self) -> usize {
        self.sellers().count()
    }

    pub fn buyer_count(&self) -> usize {
        self.buyers().count()
    }

    /// Weight-multiplied endowment totals `(X, Y)` over all agents.
    pub fn weighted_totals(&self) -> (f64, f64) {
        self.agents.iter().fold((0.0, 0.0), |(x, y), a| {
            (x + a.weight * a.endowment.x, y + a.weight * a.endowment.y)
        })
    }

    /// Largest choke price among buyers; the natural upper end of any price
    /// bracket, since no buyer demands the good above it.
    pub fn max_buyer_choke_price(&self) -> f64 {
        self.buyers()
            .map(|b| b.utility.choke_price())
            .fold(0.0, f64::max)
    }

    /// Replicates the economy. Copies inherit the original's endowment and
    /// utility at weight `w/n`, so weighted totals are unchanged.
    pub fn build_replica(&self, spec: ReplicaSpec) -> Result<Economy, EconError> {
        if spec.n == 0 {
            return Err(EconError::ZeroReplication);
        }
        let n = spec.n;
        let copies_total = match spec.mode {
            ReplicaMode::Full => n * self.agents.len(),
            ReplicaMode::PartialBuyers => self.seller_count() + n * self.buyer_count(),
        };
        let mut agents = Vec::with_capacity(copies_total);
        let mut next_id: u32 = 0;
        for agent in &self.agents {
            let replicate = match spec.mode {
                ReplicaMode::Full => true,
                ReplicaMode::PartialBuyers => agent.role == Role::Buyer,
            };
            let (copies, weight) = if replicate {
                (n, agent.weight / n as f64)
            } else {
                (1, agent.weight)
            };
            for _ in 0..copies {
                let mut copy = *agent;
                copy.id = next_id;
                copy.weight = weight;
                next_id = next_id.wrapping_add(1);
                agents.push(copy);
            }
        }
        Economy::new(
            format!("{} [{} replica n={}]", self.description, spec.mode, n),
            agents,
        )
    }
}
