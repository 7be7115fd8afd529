//! Command dispatch: resolve a scenario plus flags into solver calls and
//! output tables.

use agora::{
    compare_to_benchmark, estimate_limit, find_pareto_dominating, mrs_gap, solve_cournot,
    solve_cournot_nash, solve_cournot_walras, solve_spne, solve_walras, sweep, utility_table,
    Benchmark, BilateralError, Bundle, Economy, GameKind, NashResult, ParetoStatus, ReplicaMode,
    RoleAllocation, SpneResult, Tolerance, WalrasResult,
};

use crate::scenario::{Concept, GameArg, ModeArg, Scenario};
use crate::table::{num, OutputTable};
use crate::CliError;

/// Tables plus whether a verification-style check failed; the process exit
/// code distinguishes the two.
#[derive(Debug)]
pub struct RunOutput {
    pub tables: Vec<OutputTable>,
    pub verification_failed: bool,
}

impl RunOutput {
    fn ok(tables: Vec<OutputTable>) -> Self {
        Self {
            tables,
            verification_failed: false,
        }
    }
}

/// Effective tolerance: command line beats the scenario default.
pub fn resolve_tolerance(scenario: &Scenario, flag: Option<f64>) -> Result<Tolerance, CliError> {
    match flag.or(scenario.tol) {
        None => Ok(Tolerance::default()),
        Some(t) if t.is_finite() && t > 0.0 => Ok(Tolerance::new(t, t, 200)),
        Some(t) => Err(CliError::Schema(format!(
            "tol must be strictly positive, got {t}"
        ))),
    }
}

fn solver<E: std::fmt::Display>(err: E) -> CliError {
    CliError::Solver(err.to_string())
}

fn nash_error(err: BilateralError) -> CliError {
    match err {
        BilateralError::VerificationFailed { .. } => CliError::Verification(err.to_string()),
        other => CliError::Solver(other.to_string()),
    }
}

pub fn run_solve(
    scenario: &Scenario,
    concept: Option<Concept>,
    tol: &Tolerance,
) -> Result<RunOutput, CliError> {
    let concept = concept.or(scenario.concept).ok_or_else(|| {
        CliError::Schema("no concept given on the command line or in the scenario".to_string())
    })?;
    let table = match concept {
        Concept::Walras => {
            let economy = scenario.economy()?;
            let result = solve_walras(&economy, tol).map_err(solver)?;
            walras_table(scenario, &economy, &result)
        }
        Concept::Cournot => {
            let sellers = scenario.sellers()?;
            let demand = scenario.inverse_demand()?;
            let result = solve_cournot(&sellers, &demand, tol).map_err(solver)?;
            cournot_table(scenario, "cournot", &sellers, &result)
        }
        Concept::CournotWalras => {
            let economy = scenario.economy()?;
            let result = solve_cournot_walras(&economy, tol).map_err(solver)?;
            let sellers: Vec<agora::Agent> = economy.sellers().copied().collect();
            let mut table = cournot_table(scenario, "cournot-walras", &sellers, &result);
            let buyer = result.buyer_bundles[0];
            let buyer_utility = economy.buyers().next().unwrap().utility.value(buyer);
            push_quantity(&mut table, scenario, "cournot-walras", "buyer_x", buyer.x);
            push_quantity(&mut table, scenario, "cournot-walras", "buyer_y", buyer.y);
            push_quantity(
                &mut table,
                scenario,
                "cournot-walras",
                "buyer_utility",
                buyer_utility,
            );
            table
        }
        Concept::Nash => {
            let economy = scenario.economy()?;
            let result = solve_cournot_nash(&economy, tol, true).map_err(nash_error)?;
            nash_table(scenario, &economy, &result)
        }
        Concept::Spne => {
            let economy = scenario.economy()?;
            let result = solve_spne(&economy, tol, true).map_err(solver)?;
            spne_table(scenario, &economy, &result)
        }
    };
    Ok(RunOutput::ok(vec![table]))
}

fn solution_table(concept: &str) -> OutputTable {
    OutputTable::new(
        format!("solution: {concept}"),
        &["quantity", "value", "note"],
    )
}

fn push_quantity(
    table: &mut OutputTable,
    scenario: &Scenario,
    concept: &str,
    quantity: &str,
    value: f64,
) {
    table.push_row(vec![
        quantity.to_string(),
        num(value),
        scenario.note(concept, quantity),
    ]);
}

fn push_count(table: &mut OutputTable, quantity: &str, value: usize) {
    table.push_row(vec![quantity.to_string(), value.to_string(), String::new()]);
}

fn walras_table(scenario: &Scenario, economy: &Economy, result: &WalrasResult) -> OutputTable {
    let mut table = solution_table("walras");
    push_quantity(&mut table, scenario, "walras", "price_x", result.price.px());
    push_quantity(&mut table, scenario, "walras", "price_y", result.price.py());
    let (seller, buyer) = result.role_bundles(economy);
    push_role_bundles(&mut table, scenario, "walras", economy, seller, buyer);
    push_quantity(
        &mut table,
        scenario,
        "walras",
        "money_residual",
        result.money_residual,
    );
    push_count(&mut table, "iterations", result.diagnostics.iterations);
    table
}

fn push_role_bundles(
    table: &mut OutputTable,
    scenario: &Scenario,
    concept: &str,
    economy: &Economy,
    seller: Bundle,
    buyer: Bundle,
) {
    let seller_utility = economy.sellers().next().unwrap().utility.value(seller);
    let buyer_utility = economy.buyers().next().unwrap().utility.value(buyer);
    push_quantity(table, scenario, concept, "seller_x", seller.x);
    push_quantity(table, scenario, concept, "seller_y", seller.y);
    push_quantity(table, scenario, concept, "buyer_x", buyer.x);
    push_quantity(table, scenario, concept, "buyer_y", buyer.y);
    push_quantity(table, scenario, concept, "seller_utility", seller_utility);
    push_quantity(table, scenario, concept, "buyer_utility", buyer_utility);
}

fn cournot_table(
    scenario: &Scenario,
    concept: &str,
    sellers: &[agora::Agent],
    result: &agora::CournotResult,
) -> OutputTable {
    let mut table = solution_table(concept);
    for (i, &offer) in result.offers.iter().enumerate() {
        push_quantity(
            &mut table,
            scenario,
            concept,
            &format!("offer_{}", i + 1),
            offer,
        );
    }
    push_quantity(&mut table, scenario, concept, "price_x", result.price.px());
    push_quantity(&mut table, scenario, concept, "price_y", result.price.py());
    push_quantity(
        &mut table,
        scenario,
        concept,
        "total_offer",
        result.total_offer,
    );
    push_quantity(
        &mut table,
        scenario,
        concept,
        "money_inflow",
        result.money_inflow,
    );
    let seller = result.seller_bundles[0];
    push_quantity(&mut table, scenario, concept, "seller_x", seller.x);
    push_quantity(&mut table, scenario, concept, "seller_y", seller.y);
    push_quantity(
        &mut table,
        scenario,
        concept,
        "seller_utility",
        sellers[0].utility.value(seller),
    );
    push_count(&mut table, "iterations", result.diagnostics.iterations);
    table
}

fn nash_table(scenario: &Scenario, economy: &Economy, result: &NashResult) -> OutputTable {
    let mut table = solution_table("nash");
    for (i, &offer) in result.profile.offers().iter().enumerate() {
        push_quantity(
            &mut table,
            scenario,
            "nash",
            &format!("offer_{}", i + 1),
            offer,
        );
    }
    for (i, &bid) in result.profile.bids().iter().enumerate() {
        push_quantity(&mut table, scenario, "nash", &format!("bid_{}", i + 1), bid);
    }
    push_quantity(&mut table, scenario, "nash", "price_x", result.price.px());
    push_quantity(&mut table, scenario, "nash", "price_y", result.price.py());
    let (_, _, seller, buyer) = result.summary(economy);
    push_role_bundles(&mut table, scenario, "nash", economy, seller, buyer);
    push_quantity(
        &mut table,
        scenario,
        "nash",
        "max_deviation_gain",
        result.max_deviation_gain,
    );
    push_count(&mut table, "iterations", result.diagnostics.iterations);
    table
}

fn spne_table(scenario: &Scenario, economy: &Economy, result: &SpneResult) -> OutputTable {
    let mut table = solution_table("spne");
    for (i, &offer) in result.offers().iter().enumerate() {
        push_quantity(
            &mut table,
            scenario,
            "spne",
            &format!("offer_{}", i + 1),
            offer,
        );
    }
    for (i, &bid) in result.bids().iter().enumerate() {
        push_quantity(&mut table, scenario, "spne", &format!("bid_{}", i + 1), bid);
    }
    push_quantity(&mut table, scenario, "spne", "price_x", result.price.px());
    push_quantity(&mut table, scenario, "spne", "price_y", result.price.py());
    let (_, _, seller, buyer) = result.summary(economy);
    push_role_bundles(&mut table, scenario, "spne", economy, seller, buyer);
    push_count(
        &mut table,
        "outer_iterations",
        result.diagnostics.iterations,
    );
    push_count(
        &mut table,
        "subgame_iterations",
        result.subgame.diagnostics.iterations,
    );
    table
}

const DEFAULT_N_VALUES: &[usize] = &[1, 2, 5, 10, 100];
const BENCHMARK_GAP_TOL: f64 = 1e-3;

pub fn run_replicate(
    scenario: &Scenario,
    mode: Option<ModeArg>,
    game: Option<GameArg>,
    n_values: Option<Vec<usize>>,
    benchmark: Option<Concept>,
    tol: &Tolerance,
) -> Result<RunOutput, CliError> {
    let economy = scenario.economy()?;
    let mode = match mode.or(scenario.mode).unwrap_or(ModeArg::Partial) {
        ModeArg::Partial => ReplicaMode::PartialBuyers,
        ModeArg::Full => ReplicaMode::Full,
    };
    let game = match game.unwrap_or(GameArg::Nash) {
        GameArg::Nash => GameKind::CournotNash,
        GameArg::Spne => GameKind::Spne,
    };
    let n_values = n_values
        .or_else(|| scenario.n_values.clone())
        .unwrap_or_else(|| DEFAULT_N_VALUES.to_vec());
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Schema(
            "n values must be non-empty and strictly increasing".to_string(),
        ));
    }

    let seq = sweep(&economy, mode, game, &n_values, tol).map_err(solver)?;

    let mut points = OutputTable::new(
        format!("replica sweep: {mode} {game}"),
        &[
            "n", "k", "offer", "bid", "price", "seller_x", "seller_y", "buyer_x", "buyer_y",
            "status",
        ],
    );
    for point in &seq.points {
        match &point.outcome {
            Ok(s) => points.push_row(vec![
                point.n.to_string(),
                num(point.k),
                num(s.offer),
                num(s.bid),
                num(s.price),
                num(s.seller_bundle.x),
                num(s.seller_bundle.y),
                num(s.buyer_bundle.x),
                num(s.buyer_bundle.y),
                "ok".to_string(),
            ]),
            Err(reason) => points.push_row(vec![
                point.n.to_string(),
                num(point.k),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {reason}"),
            ]),
        }
    }

    let limits = estimate_limit(&seq).map_err(solver)?;
    let mut limits_table = OutputTable::new("extrapolated limit", &["quantity", "limit", "rate"]);
    for (quantity, estimate) in limits.quantities() {
        limits_table.push_row(vec![
            quantity.to_string(),
            num(estimate.limit),
            num(estimate.rate),
        ]);
    }

    let mut tables = vec![points, limits_table];
    let mut verification_failed = false;
    if let Some(concept) = benchmark {
        let bench = benchmark_values(scenario, &economy, concept, tol)?;
        let report = compare_to_benchmark(&seq, &bench, BENCHMARK_GAP_TOL).map_err(solver)?;
        let mut gaps = OutputTable::new(
            format!("limit vs {} benchmark", report.benchmark_label),
            &["quantity", "limit", "benchmark", "gap", "pass"],
        );
        for row in &report.rows {
            gaps.push_row(vec![
                row.quantity.to_string(),
                num(row.limit),
                num(row.benchmark),
                format!("{:.2e}", row.gap),
                if row.pass { "pass" } else { "FAIL" }.to_string(),
            ]);
        }
        verification_failed = !report.all_pass();
        tables.push(gaps);
    }
    Ok(RunOutput {
        tables,
        verification_failed,
    })
}

fn benchmark_values(
    scenario: &Scenario,
    economy: &Economy,
    concept: Concept,
    tol: &Tolerance,
) -> Result<Benchmark, CliError> {
    match concept {
        Concept::Walras => {
            let result = solve_walras(economy, tol).map_err(solver)?;
            Ok(Benchmark::from_walras(economy, &result))
        }
        Concept::CournotWalras => {
            let result = solve_cournot_walras(economy, tol).map_err(solver)?;
            Ok(Benchmark::new(
                "cournot-walras",
                economy,
                result.price.px(),
                result.seller_bundles[0],
                result.buyer_bundles[0],
            ))
        }
        Concept::Nash => {
            let result = solve_cournot_nash(economy, tol, true).map_err(nash_error)?;
            let (_, _, seller, buyer) = result.summary(economy);
            Ok(Benchmark::new(
                "nash",
                economy,
                result.price.px(),
                seller,
                buyer,
            ))
        }
        Concept::Spne => {
            let result = solve_spne(economy, tol, true).map_err(solver)?;
            let (_, _, seller, buyer) = result.summary(economy);
            Ok(Benchmark::new(
                "spne",
                economy,
                result.price.px(),
                seller,
                buyer,
            ))
        }
        Concept::Cournot => {
            let _ = scenario;
            Err(CliError::Schema(
                "cournot has no buyer-side allocation to benchmark against".to_string(),
            ))
        }
    }
}

const WELFARE_SWEEP_N: &[usize] = &[1, 2, 5, 10, 100, 1000];
const DEFAULT_PARETO_STEP: f64 = 0.01;

pub fn run_welfare(
    scenario: &Scenario,
    all_concepts: bool,
    step: Option<f64>,
    tol: &Tolerance,
) -> Result<RunOutput, CliError> {
    let economy = scenario.economy()?;
    let step = step.unwrap_or(DEFAULT_PARETO_STEP);
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Schema(format!(
            "step must be strictly positive, got {step}"
        )));
    }

    let mut entries: Vec<(String, RoleAllocation)> = Vec::new();
    if all_concepts {
        let cw = solve_cournot_walras(&economy, tol).map_err(solver)?;
        entries.push((
            "cournot-walras".to_string(),
            RoleAllocation {
                seller: cw.seller_bundles[0],
                buyer: cw.buyer_bundles[0],
            },
        ));

        let nash = solve_cournot_nash(&economy, tol, true).map_err(nash_error)?;
        let (_, _, seller, buyer) = nash.summary(&economy);
        entries.push(("nash".to_string(), RoleAllocation { seller, buyer }));

        entries.push((
            "nash replica limit".to_string(),
            limit_allocation(&economy, GameKind::CournotNash, tol)?,
        ));
        entries.push((
            "spne replica limit".to_string(),
            limit_allocation(&economy, GameKind::Spne, tol)?,
        ));
    }
    let walras = solve_walras(&economy, tol).map_err(solver)?;
    let (seller, buyer) = walras.role_bundles(&economy);
    entries.push(("walras".to_string(), RoleAllocation { seller, buyer }));

    let rows = utility_table(&economy, &entries);
    let mut table = OutputTable::new(
        "welfare",
        &[
            "concept",
            "seller_x",
            "seller_y",
            "buyer_x",
            "buyer_y",
            "seller_utility",
            "buyer_utility",
            "mrs_gap",
            "pareto",
        ],
    );
    for (row, (_, alloc)) in rows.iter().zip(&entries) {
        let gap = match mrs_gap(&economy, alloc) {
            Ok(v) => num(v),
            Err(_) => "n/a".to_string(),
        };
        let pareto = match find_pareto_dominating(&economy, alloc, step) {
            Ok(ParetoStatus::Undominated) => "undominated".to_string(),
            Ok(ParetoStatus::DominatedBy { .. }) => "dominated".to_string(),
            Err(e) => return Err(CliError::Solver(e.to_string())),
        };
        table.push_row(vec![
            row.label.clone(),
            num(row.seller_bundle.x),
            num(row.seller_bundle.y),
            num(row.buyer_bundle.x),
            num(row.buyer_bundle.y),
            num(row.seller_utility),
            num(row.buyer_utility),
            gap,
            pareto,
        ]);
    }
    Ok(RunOutput::ok(vec![table]))
}

/// Replica-limit allocation rebuilt from the extrapolated strategies, so the
/// bundles conserve totals exactly and feed straight into the Pareto search.
fn limit_allocation(
    economy: &Economy,
    game: GameKind,
    tol: &Tolerance,
) -> Result<RoleAllocation, CliError> {
    let seq = sweep(
        economy,
        ReplicaMode::PartialBuyers,
        game,
        WELFARE_SWEEP_N,
        tol,
    )
    .map_err(solver)?;
    let limits = estimate_limit(&seq).map_err(solver)?;
    let q = limits.offer.limit;
    let b = limits.bid.limit;
    let price = b / q;
    let seller0 = economy.sellers().next().unwrap().endowment.x;
    let buyer0 = economy.buyers().next().unwrap().endowment.y;
    Ok(RoleAllocation {
        seller: Bundle::new(seller0 - q, price * q).map_err(solver)?,
        buyer: Bundle::new(q, buyer0 - b).map_err(solver)?,
    })
}

pub fn run_compare(
    scenario: &Scenario,
    concepts: &[Concept],
    tol: &Tolerance,
) -> Result<RunOutput, CliError> {
    if concepts.len() != 2 {
        return Err(CliError::Schema(format!(
            "compare needs exactly two concepts, got {}",
            concepts.len()
        )));
    }
    let left = concept_quantities(scenario, concepts[0], tol)?;
    let right = concept_quantities(scenario, concepts[1], tol)?;
    let mut table = OutputTable::new(
        format!("compare: {} vs {}", concepts[0], concepts[1]),
        &[
            "quantity",
            &concepts[0].to_string(),
            &concepts[1].to_string(),
            "gap",
        ],
    );
    for (name, a) in &left {
        if let Some((_, b)) = right.iter().find(|(n, _)| n == name) {
            table.push_row(vec![
                name.clone(),
                num(*a),
                num(*b),
                format!("{:.2e}", (a - b).abs()),
            ]);
        }
    }
    Ok(RunOutput::ok(vec![table]))
}

fn concept_quantities(
    scenario: &Scenario,
    concept: Concept,
    tol: &Tolerance,
) -> Result<Vec<(String, f64)>, CliError> {
    let mut out: Vec<(String, f64)> = Vec::new();
    match concept {
        Concept::Walras => {
            let economy = scenario.economy()?;
            let result = solve_walras(&economy, tol).map_err(solver)?;
            let (seller, buyer) = result.role_bundles(&economy);
            out.push(("price_x".into(), result.price.px()));
            push_bundle_quantities(&mut out, seller, Some(buyer));
        }
        Concept::Cournot => {
            let sellers = scenario.sellers()?;
            let demand = scenario.inverse_demand()?;
            let result = solve_cournot(&sellers, &demand, tol).map_err(solver)?;
            out.push(("price_x".into(), result.price.px()));
            out.push(("offer".into(), result.offers[0]));
            push_bundle_quantities(&mut out, result.seller_bundles[0], None);
        }
        Concept::CournotWalras => {
            let economy = scenario.economy()?;
            let result = solve_cournot_walras(&economy, tol).map_err(solver)?;
            out.push(("price_x".into(), result.price.px()));
            out.push(("offer".into(), result.offers[0]));
            push_bundle_quantities(
                &mut out,
                result.seller_bundles[0],
                Some(result.buyer_bundles[0]),
            );
        }
        Concept::Nash => {
            let economy = scenario.economy()?;
            let result = solve_cournot_nash(&economy, tol, true).map_err(nash_error)?;
            let (offer, bid, seller, buyer) = result.summary(&economy);
            out.push(("price_x".into(), result.price.px()));
            out.push(("offer".into(), offer));
            out.push(("bid".into(), bid));
            push_bundle_quantities(&mut out, seller, Some(buyer));
        }
        Concept::Spne => {
            let economy = scenario.economy()?;
            let result = solve_spne(&economy, tol, true).map_err(solver)?;
            let (offer, bid, seller, buyer) = result.summary(&economy);
            out.push(("price_x".into(), result.price.px()));
            out.push(("offer".into(), offer));
            out.push(("bid".into(), bid));
            push_bundle_quantities(&mut out, seller, Some(buyer));
        }
    }
    Ok(out)
}

fn push_bundle_quantities(out: &mut Vec<(String, f64)>, seller: Bundle, buyer: Option<Bundle>) {
    out.push(("seller_x".into(), seller.x));
    out.push(("seller_y".into(), seller.y));
    if let Some(buyer) = buyer {
        out.push(("buyer_x".into(), buyer.x));
        out.push(("buyer_y".into(), buyer.y));
    }
}
