//! Plain-text CSV tables for each outcome kind.
//!
//! Numbers are rounded to six significant digits and printed in the
//! shortest form that reads back to the rounded value, with `.` as the
//! decimal point whatever the locale. Each table ends with a `#` comment
//! row describing the outcome.

use std::fmt::Write as _;

use exsim_core::negotiation::{NegotiationTrace, Outcome};
use exsim_core::nonmarket::BalanceSheet;
use exsim_core::power_graph::TrustGraph;
use exsim_core::society::WealthTrace;
use exsim_core::supply_chain::{SqueezeReport, StageResult, StageSettlement};

use crate::report::{ChainSearch, RunOutcome};

/// `x` rounded to six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}")
        .parse()
        .expect("scientific notation parses");
    format!("{rounded:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

pub fn write_trace_csv(trace: &NegotiationTrace) -> String {
    let mut out = String::from("step,offer_buyer,offer_seller,gap\n");
    for s in &trace.steps {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.step,
            sig6(s.buyer_offer),
            sig6(s.seller_offer),
            sig6(s.gap)
        );
    }
    match trace.outcome {
        Outcome::Agreement { price, step } => {
            let _ = writeln!(out, "# outcome,agreement,{step},{}", sig6(price));
        }
        Outcome::Breakdown { step } => {
            let _ = writeln!(out, "# outcome,breakdown,{step}");
        }
    }
    out
}

pub fn write_chain_csv(stages: &[StageResult], squeeze: &SqueezeReport) -> String {
    let mut out = String::from(
        "stage,name,incoming_price,buyer_reserve,seller_reserve,settlement,margin,margin_share\n",
    );
    for (i, (r, share)) in stages.iter().zip(&squeeze.stages).enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{},{},{}",
            r.name,
            opt(r.incoming_price),
            opt(r.buyer_reserve_effective.map(|p| p.0)),
            opt(r.seller_reserve_effective.map(|p| p.0)),
            opt(r.settlement.price()),
            opt(r.margin),
            opt(share.margin_share),
        );
    }
    match (stages.last().map(|r| r.settlement), squeeze.terminal_share) {
        (Some(StageSettlement::Breakdown { at_stage }), _) => {
            let _ = writeln!(out, "# outcome,breakdown,{at_stage}");
        }
        (_, Some(share)) => {
            let _ = writeln!(out, "# outcome,agreement,{}", sig6(share));
        }
        _ => {
            let _ = writeln!(out, "# outcome,empty");
        }
    }
    out
}

pub fn write_balance_csv(sheet: &BalanceSheet) -> String {
    let mut out = String::from("m_a,m_a_effective,m_b_raw,m_b_effective,k_a,k_b,equity\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        sig6(sheet.m_a.0),
        sig6(sheet.m_a_effective.0),
        sig6(sheet.m_b_raw.0),
        sig6(sheet.m_b_effective.0),
        sig6(sheet.k_a.0),
        sig6(sheet.k_b.0),
        opt(sheet.equity),
    );
    let verdict = serde_json::to_value(sheet.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let _ = writeln!(out, "# outcome,{verdict}");
    out
}

pub fn write_chain_search_csv(
    search: &ChainSearch,
    graph: Option<&TrustGraph>,
    adversary: &str,
) -> String {
    let mut out = String::from("hop,subject,strength\n");
    match search {
        ChainSearch::Found { chain } => {
            for (i, name) in chain.path.iter().enumerate() {
                let strength = graph.and_then(|g| g.strength_vs(name, adversary));
                let _ = writeln!(out, "{i},{name},{}", opt(strength));
            }
            let _ = writeln!(out, "# outcome,chain,{}", chain.hops());
        }
        ChainSearch::NoChain { .. } => {
            let _ = writeln!(out, "# outcome,no_chain");
        }
    }
    out
}

pub fn write_gini_csv(trace: &WealthTrace) -> String {
    let mut out = String::from("epoch,gini,total_wealth\n");
    for (epoch, (g, w)) in trace.gini.iter().zip(&trace.total_wealth).enumerate() {
        let _ = writeln!(out, "{epoch},{},{}", sig6(*g), sig6(*w));
    }
    let _ = writeln!(out, "# outcome,final_gini,{}", sig6(trace.final_gini()));
    out
}

/// The CSV table for any outcome. `graph` and `adversary` label power chains
/// with strengths.
pub fn outcome_csv(outcome: &RunOutcome, graph: Option<&TrustGraph>, adversary: &str) -> String {
    match outcome {
        RunOutcome::Negotiation { trace, .. } => write_trace_csv(trace),
        RunOutcome::Chain { stages, squeeze } => write_chain_csv(stages, squeeze),
        RunOutcome::Nonmarket { sheet, .. } => write_balance_csv(sheet),
        RunOutcome::PowerChain { search } => write_chain_search_csv(search, graph, adversary),
        RunOutcome::Society { trace } => write_gini_csv(trace),
    }
}
