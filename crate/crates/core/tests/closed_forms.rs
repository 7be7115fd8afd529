//! Solver output against the replica families' closed forms.
//!
//! With the weight factor k = 1 − 1/(2n), the symmetric equilibria of the
//! replicated bid/offer games have algebraic solutions. They are computed
//! here directly from the radicals and used as oracles for the numerical
//! solvers across a range of replication counts.

mod common;

use common::base_economy;

use agora::{
    estimate_limit, solve_cournot_nash, solve_cournot_walras, solve_spne, sweep, GameKind,
    ReplicaMode, ReplicaSpec, Tolerance,
};

fn k_of(n: usize) -> f64 {
    1.0 - 1.0 / (2.0 * n as f64)
}

/// Partial-replica simultaneous game: offers and bids in radicals.
fn partial_nash_closed_form(n: usize) -> (f64, f64) {
    let k = k_of(n);
    let root = (k * k + 8.0 * k).sqrt();
    ((7.0 * k - root) / (2.0 * k), 2.0 * root - 2.0 * k - 2.0)
}

/// Full-replica simultaneous game.
fn full_nash_closed_form(n: usize) -> (f64, f64) {
    let k = k_of(n);
    let root = (k * k + 4.0).sqrt();
    (
        (7.0 * k - root) / (2.0 * k),
        (2.0 * k * root - 2.0 * k * k - 1.0) / k,
    )
}

/// Partial-replica sequential game: first-stage offers.
fn spne_offer_closed_form(n: usize) -> f64 {
    let k = k_of(n);
    (9.0 * k - (9.0 * k * k + 6.0 * k).sqrt()) / (3.0 * k)
}

#[test]
fn partial_replica_nash_matches_radicals() {
    let e = base_economy();
    for n in [1usize, 2, 5, 10, 100] {
        let replica = e
            .build_replica(ReplicaSpec {
                mode: ReplicaMode::PartialBuyers,
                n,
            })
            .unwrap();
        let result = solve_cournot_nash(&replica, &Tolerance::default(), true).unwrap();
        let (q, b, _, _) = result.summary(&replica);
        let (q_star, b_star) = partial_nash_closed_form(n);
        assert!((q - q_star).abs() < 1e-6, "offer at n={n}: {q} vs {q_star}");
        assert!((b - b_star).abs() < 1e-6, "bid at n={n}: {b} vs {b_star}");
        assert!((result.price.px() - b_star / q_star).abs() < 1e-6);
    }
}

#[test]
fn full_replica_nash_matches_radicals() {
    let e = base_economy();
    for n in [1usize, 2, 5, 10] {
        let replica = e
            .build_replica(ReplicaSpec {
                mode: ReplicaMode::Full,
                n,
            })
            .unwrap();
        let result = solve_cournot_nash(&replica, &Tolerance::default(), true).unwrap();
        let (q, b, _, _) = result.summary(&replica);
        let (q_star, b_star) = full_nash_closed_form(n);
        assert!((q - q_star).abs() < 1e-6, "offer at n={n}: {q} vs {q_star}");
        assert!((b - b_star).abs() < 1e-6, "bid at n={n}: {b} vs {b_star}");
    }
}

#[test]
fn spne_offers_match_radicals() {
    let e = base_economy();
    for n in [1usize, 10, 100] {
        let replica = e
            .build_replica(ReplicaSpec {
                mode: ReplicaMode::PartialBuyers,
                n,
            })
            .unwrap();
        let result = solve_spne(&replica, &Tolerance::default(), true).unwrap();
        let (q, b, _, _) = result.summary(&replica);
        let q_star = spne_offer_closed_form(n);
        let k = k_of(n);
        assert!((q - q_star).abs() < 1e-5, "offer at n={n}: {q} vs {q_star}");
        assert!((b - q_star * k * (3.0 - q_star)).abs() < 1e-5);
    }
}

#[test]
fn unreduced_solvers_agree_with_the_symmetric_reduction() {
    let e = base_economy();
    let n = 5;
    let replica = e
        .build_replica(ReplicaSpec {
            mode: ReplicaMode::PartialBuyers,
            n,
        })
        .unwrap();
    let tol = Tolerance::default();
    let reduced = solve_cournot_nash(&replica, &tol, true).unwrap();
    let full = solve_cournot_nash(&replica, &tol, false).unwrap();
    let (q_r, b_r, _, _) = reduced.summary(&replica);
    let (q_f, b_f, _, _) = full.summary(&replica);
    assert!((q_r - q_f).abs() < 1e-8);
    assert!((b_r - b_f).abs() < 1e-8);
    // Every copy of a replicated buyer plays the same bid in the full solve.
    for pair in full.profile.bids().windows(2) {
        assert!((pair[0] - pair[1]).abs() < 1e-8);
    }
}

#[test]
fn closed_form_gaps_shrink_monotonically() {
    // |v(n) − v∞| strictly decreasing for the partial family in all three
    // headline quantities, and for the full family in offer and price. The
    // full family's bid overshoots its limit around n = 10 and is genuinely
    // non-monotone, so it is not asserted here.
    let partial_limit = (2.0, 2.0, 1.0);
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for n in [1usize, 2, 5, 10, 100] {
        let (q, b) = partial_nash_closed_form(n);
        let gaps = (
            (q - partial_limit.0).abs(),
            (b - partial_limit.1).abs(),
            (b / q - partial_limit.2).abs(),
        );
        assert!(
            gaps.0 < last.0 && gaps.1 < last.1 && gaps.2 < last.2,
            "n={n}"
        );
        last = gaps;
    }

    let s5 = 5f64.sqrt();
    let full_limit = ((7.0 - s5) / 2.0, (s5 - 1.0) / 2.0);
    let mut last = (f64::INFINITY, f64::INFINITY);
    for n in [1usize, 2, 5, 10, 100] {
        let (q, b) = full_nash_closed_form(n);
        let gaps = ((q - full_limit.0).abs(), (b / q - full_limit.1).abs());
        assert!(gaps.0 < last.0 && gaps.1 < last.1, "n={n}");
        last = gaps;
    }
}

#[test]
fn full_replica_bid_sequence_overshoots_its_limit() {
    // Pinning the observed non-monotonicity: the gap at n = 10 exceeds the
    // gap at n = 5.
    let limit = 2.0 * 5f64.sqrt() - 3.0;
    let gap = |n: usize| (full_nash_closed_form(n).1 - limit).abs();
    assert!(gap(10) > gap(5));
    assert!(gap(100) < gap(10));
}

#[test]
fn spne_offers_approach_the_cournot_walras_offers() {
    let e = base_economy();
    let tol = Tolerance::default();
    let cw = solve_cournot_walras(&e, &tol).unwrap();
    let mut last = f64::INFINITY;
    for n in [1usize, 2, 5, 10, 100, 1000] {
        let replica = e
            .build_replica(ReplicaSpec {
                mode: ReplicaMode::PartialBuyers,
                n,
            })
            .unwrap();
        let spne = solve_spne(&replica, &tol, true).unwrap();
        let gap = (spne.offers()[0] - cw.offers[0]).abs();
        assert!(
            gap < last,
            "foundation gap stopped shrinking at n={n}: {gap}"
        );
        last = gap;
    }
    assert!(last < 2e-4);
}

#[test]
fn partial_limit_bundles_differ_from_cournot_walras() {
    // The simultaneous game's replica limit (1,2)/(2,3) is not the
    // Cournot-Walras allocation: buyers losing price influence is not
    // enough to reproduce the two-stage outcome.
    let e = base_economy();
    let tol = Tolerance::default();
    let seq = sweep(
        &e,
        ReplicaMode::PartialBuyers,
        GameKind::CournotNash,
        &[1, 2, 5, 10, 100],
        &tol,
    )
    .unwrap();
    let limits = estimate_limit(&seq).unwrap();
    let cw = solve_cournot_walras(&e, &tol).unwrap();
    assert!((limits.seller_x.limit - cw.seller_bundles[0].x).abs() > 0.25);
    assert!((limits.seller_y.limit - cw.seller_bundles[0].y).abs() > 0.2);
}

#[test]
fn fitted_rates_are_first_order_in_inverse_n() {
    let e = base_economy();
    let tol = Tolerance::default();
    // Partial family: asymptotic offer coefficient is −1/3.
    let seq = sweep(
        &e,
        ReplicaMode::PartialBuyers,
        GameKind::CournotNash,
        &[1, 2, 5, 10, 100],
        &tol,
    )
    .unwrap();
    let limits = estimate_limit(&seq).unwrap();
    let ratio = limits.offer.rate / (-1.0 / 3.0);
    assert!(
        ratio > 0.5 && ratio < 2.0,
        "partial offer rate {}",
        limits.offer.rate
    );

    // Full family: asymptotic offer coefficient is −1/√5.
    let seq = sweep(
        &e,
        ReplicaMode::Full,
        GameKind::CournotNash,
        &[1, 2, 5, 10, 100, 1000],
        &tol,
    )
    .unwrap();
    let limits = estimate_limit(&seq).unwrap();
    let ratio = limits.offer.rate / (-1.0 / 5f64.sqrt());
    assert!(
        ratio > 0.5 && ratio < 2.0,
        "full offer rate {}",
        limits.offer.rate
    );
}
