//! Replica sweeps: solve a game on a sequence of replicated economies,
//! extrapolate the limit as the replication count grows, and measure the
//! distance of that limit from a benchmark equilibrium.
//!
//! Replicated agents keep per-capita bundles while their weight shrinks, so
//! per-quantity values converge like `1/n`; the limit fit uses exactly that
//! model on the last three sweep points.

use thiserror::Error;

use crate::bilateral::{self, BilateralError};
use crate::econ::{Bundle, Economy, ReplicaMode, ReplicaSpec};
use crate::numerics::Tolerance;
use crate::sequential::{self, SequentialError};
use crate::walras::WalrasResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplicaError {
    #[error("replication counts must be non-empty and strictly increasing")]
    InvalidNValues,
    #[error("limit estimation needs at least 3 successful points, got {got}")]
    InsufficientPoints { got: usize },
    #[error("benchmark was computed on a different base economy (weighted totals {benchmark:?} vs {sequence:?})")]
    ShapeMismatch {
        benchmark: (f64, f64),
        sequence: (f64, f64),
    },
}

/// Which game a sweep solves on each replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    CournotNash,
    Spne,
}

impl std::fmt::Display for GameKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GameKind::CournotNash => write!(f, "nash"),
            GameKind::Spne => write!(f, "spne"),
        }
    }
}

/// Symmetric-representative readout of one equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSummary {
    pub offer: f64,
    pub bid: f64,
    pub price: f64,
    pub seller_bundle: Bundle,
    pub buyer_bundle: Bundle,
}

/// One sweep entry. Failed solves keep their slot so convergence diagnostics
/// expose where a solver gave out instead of silently dropping the point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub n: usize,
    /// Weight factor `1 − 1/(2n)` that parametrizes the worked examples'
    /// closed forms; recorded for cross-checking against them.
    pub k: f64,
    pub outcome: Result<EquilibriumSummary, String>,
}

#[derive(Debug, Clone)]
pub struct ReplicaSequence {
    pub mode: ReplicaMode,
    pub game: GameKind,
    pub points: Vec<SweepPoint>,
    base_totals: (f64, f64),
}

impl ReplicaSequence {
    pub fn successful_points(&self) -> impl Iterator<Item = (usize, &EquilibriumSummary)> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|s| (p.n, s)))
    }
}

/// Solves `game` on `build_replica(base, n)` for each `n`, in order.
pub fn sweep(
    base: &Economy,
    mode: ReplicaMode,
    game: GameKind,
    n_values: &[usize],
    tol: &Tolerance,
) -> Result<ReplicaSequence, ReplicaError> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ReplicaError::InvalidNValues);
    }
    let points = n_values
        .iter()
        .map(|&n| {
            let outcome = solve_point(base, mode, game, n, tol);
            SweepPoint {
                n,
                k: 1.0 - 1.0 / (2.0 * n as f64),
                outcome,
            }
        })
        .collect();
    Ok(ReplicaSequence {
        mode,
        game,
        points,
        base_totals: base.weighted_totals(),
    })
}

fn solve_point(
    base: &Economy,
    mode: ReplicaMode,
    game: GameKind,
    n: usize,
    tol: &Tolerance,
) -> Result<EquilibriumSummary, String> {
    let replica = base
        .build_replica(ReplicaSpec { mode, n })
        .map_err(|e| e.to_string())?;
    match game {
        GameKind::CournotNash => bilateral::solve_cournot_nash(&replica, tol, true)
            .map(|r| {
                let (offer, bid, seller_bundle, buyer_bundle) = r.summary(&replica);
                EquilibriumSummary {
                    offer,
                    bid,
                    price: r.price.px(),
                    seller_bundle,
                    buyer_bundle,
                }
            })
            .map_err(|e: BilateralError| e.to_string()),
        GameKind::Spne => sequential::solve_spne(&replica, tol, true)
            .map(|r| {
                let (offer, bid, seller_bundle, buyer_bundle) = r.summary(&replica);
                EquilibriumSummary {
                    offer,
                    bid,
                    price: r.price.px(),
                    seller_bundle,
                    buyer_bundle,
                }
            })
            .map_err(|e: SequentialError| e.to_string()),
    }
}

/// A fitted `v(n) = limit + rate/n` asymptote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEstimate {
    pub limit: f64,
    pub rate: f64,
}

/// Limit estimates for every tracked quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceLimits {
    pub offer: LimitEstimate,
    pub bid: LimitEstimate,
    pub price: LimitEstimate,
    pub seller_x: LimitEstimate,
    pub seller_y: LimitEstimate,
    pub buyer_x: LimitEstimate,
    pub buyer_y: LimitEstimate,
}

impl SequenceLimits {
    pub fn quantities(&self) -> [(&'static str, LimitEstimate); 7] {
        [
            ("offer", self.offer),
            ("bid", self.bid),
            ("price", self.price),
            ("seller_x", self.seller_x),
            ("seller_y", self.seller_y),
            ("buyer_x", self.buyer_x),
            ("buyer_y", self.buyer_y),
        ]
    }
}

/// Least-squares `v∞ + c/n` through the last three successful points.
pub fn estimate_limit(seq: &ReplicaSequence) -> Result<SequenceLimits, ReplicaError> {
    let ok: Vec<(usize, &EquilibriumSummary)> = seq.successful_points().collect();
    if ok.len() < 3 {
        return Err(ReplicaError::InsufficientPoints { got: ok.len() });
    }
    let tail = &ok[ok.len() - 3..];
    let fit = |value: &dyn Fn(&EquilibriumSummary) -> f64| -> LimitEstimate {
        let xs: Vec<f64> = tail.iter().map(|(n, _)| 1.0 / *n as f64).collect();
        let ys: Vec<f64> = tail.iter().map(|(_, s)| value(s)).collect();
        let m = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sy: f64 = ys.iter().sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        let limit = (sy - rate * sx) / m;
        LimitEstimate { limit, rate }
    };
    Ok(SequenceLimits {
        offer: fit(&|s| s.offer),
        bid: fit(&|s| s.bid),
        price: fit(&|s| s.price),
        seller_x: fit(&|s| s.seller_bundle.x),
        seller_y: fit(&|s| s.seller_bundle.y),
        buyer_x: fit(&|s| s.buyer_bundle.x),
        buyer_y: fit(&|s| s.buyer_bundle.y),
    })
}

/// A finite-economy equilibrium to hold a sweep's limit against.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub label: String,
    pub price: f64,
    pub seller_bundle: Bundle,
    pub buyer_bundle: Bundle,
    base_totals: (f64, f64),
}

impl Benchmark {
    pub fn new(
        label: impl Into<String>,
        economy: &Economy,
        price: f64,
        seller_bundle: Bundle,
        buyer_bundle: Bundle,
    ) -> Self {
        Self {
            label: label.into(),
            price,
            seller_bundle,
            buyer_bundle,
            base_totals: economy.weighted_totals(),
        }
    }

    pub fn from_walras(economy: &Economy, result: &WalrasResult) -> Self {
        let (seller, buyer) = result.role_bundles(economy);
        Self::new("walras", economy, result.price.px(), seller, buyer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub quantity: &'static str,
    pub limit: f64,
    pub benchmark: f64,
    pub gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub benchmark_label: String,
    pub tolerance: f64,
    pub rows: Vec<GapRow>,
}

impl GapReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Distance of the sequence's extrapolated limit from a benchmark, per
/// quantity, with pass/fail at `tolerance`.
pub fn compare_to_benchmark(
    seq: &ReplicaSequence,
    benchmark: &Benchmark,
    tolerance: f64,
) -> Result<GapReport, ReplicaError> {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    if !close(seq.base_totals.0, benchmark.base_totals.0)
        || !close(seq.base_totals.1, benchmark.base_totals.1)
    {
        return Err(ReplicaError::ShapeMismatch {
            benchmark: benchmark.base_totals,
            sequence: seq.base_totals,
        });
    }
    let limits = estimate_limit(seq)?;
    let targets = [
        ("price", limits.price.limit, benchmark.price),
        ("seller_x", limits.seller_x.limit, benchmark.seller_bundle.x),
        ("seller_y", limits.seller_y.limit, benchmark.seller_bundle.y),
        ("buyer_x", limits.buyer_x.limit, benchmark.buyer_bundle.x),
        ("buyer_y", limits.buyer_y.limit, benchmark.buyer_bundle.y),
    ];
    let rows = targets
        .iter()
        .map(|&(quantity, limit, bench)| {
            let gap = (limit - bench).abs();
            GapRow {
                quantity,
                limit,
                benchmark: bench,
                gap,
                pass: gap < tolerance,
            }
        })
        .collect();
    Ok(GapReport {
        benchmark_label: benchmark.label.clone(),
        tolerance,
        rows,
    })
}
