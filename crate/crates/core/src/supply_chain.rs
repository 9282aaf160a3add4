//! Multi-stage supply chains settled link by link, from the market-facing
//! stage back to raw materials and labor.
//!
//! The buyer at each link resells downstream at the price settled one link
//! earlier (the anchor retail price for the first link), so its reserve is
//! capped by that incoming price minus the margin it insists on keeping.
//! Price pressure therefore travels backward along the chain.
//!
//! Links settle with a much tighter gap tolerance than a standalone
//! negotiation. With a coarse tolerance a link can stop early, before the
//! offers cross, and the stopping round then moves the settlement by up to
//! half the tolerance in either direction. That is enough to break the
//! ordering between a weaker and a stronger buyer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{PerceptionView, ReservePrice, Role};
use crate::negotiation::{self, ConcessionRates, NegotiationConfig, Outcome};

pub const DEFAULT_CHAIN_GAP_EPSILON: f64 = 1e-9;
pub const DEFAULT_CHAIN_MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainStage {
    pub name: String,
    pub seller_view: PerceptionView,
    pub buyer_view: PerceptionView,
    pub base_seller_reserve: ReservePrice,
    /// Minimum absolute margin the stage's buyer keeps on resale.
    #[serde(default)]
    pub margin_floor: f64,
    /// Base rates, before imbalance scaling.
    pub rates: ConcessionRates,
}

/// Stages ordered from the market-facing link (index 0) to the
/// raw-material or labor link (last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub anchor_price: f64,
    pub stages: Vec<ChainStage>,
    #[serde(default = "default_gap_epsilon")]
    pub gap_epsilon: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_gap_epsilon() -> f64 {
    DEFAULT_CHAIN_GAP_EPSILON
}

fn default_max_steps() -> usize {
    DEFAULT_CHAIN_MAX_STEPS
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::config("stages", "at least one stage is required"));
        }
        if !(self.anchor_price.is_finite() && self.anchor_price > 0.0) {
            return Err(Error::config("anchor_price", "must be > 0"));
        }
        if !(self.gap_epsilon.is_finite() && self.gap_epsilon > 0.0) {
            return Err(Error::config("gap_epsilon", "must be > 0"));
        }
        if self.max_steps < 1 {
            return Err(Error::config("max_steps", "must be >= 1"));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            let at = |f: &str| format!("stages[{i}].{f}");
            if !(stage.margin_floor.is_finite() && stage.margin_floor >= 0.0) {
                return Err(Error::config(at("margin_floor"), "must be >= 0"));
            }
            let reserve = stage.base_seller_reserve.0;
            if !(reserve.is_finite() && reserve >= 0.0) {
                return Err(Error::config(at("base_seller_reserve"), "must be >= 0"));
            }
            if stage.buyer_view.role != Role::Buyer {
                return Err(Error::config(at("buyer_view.role"), "must be `buyer`"));
            }
            if stage.seller_view.role != Role::Seller {
                return Err(Error::config(at("seller_view.role"), "must be `seller`"));
            }
            stage
                .buyer_view
                .validate(crate::exchange::DEFAULT_RATIO_FLOOR)
                .map_err(|e| Error::config(at("buyer_view"), e.to_string()))?;
            stage
                .seller_view
                .validate(crate::exchange::DEFAULT_RATIO_FLOOR)
                .map_err(|e| Error::config(at("seller_view"), e.to_string()))?;
            stage.rates.validate().map_err(|e| match e {
                Error::InvalidConfig { field, rule } => {
                    Error::config(at(&format!("rates.{field}")), rule)
                }
                other => other,
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageSettlement {
    Agreement {
        price: f64,
        step: usize,
    },
    /// The chain broke at stage `at_stage` (this one or a shallower one).
    Breakdown {
        at_stage: usize,
    },
}

impl StageSettlement {
    pub fn price(&self) -> Option<f64> {
        match *self {
            StageSettlement::Agreement { price, .. } => Some(price),
            StageSettlement::Breakdown { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub name: String,
    /// Price at which the stage's buyer resells downstream.
    pub incoming_price: Option<f64>,
    pub buyer_reserve_effective: Option<ReservePrice>,
    pub seller_reserve_effective: Option<ReservePrice>,
    pub rho_buyer: Option<f64>,
    pub rho_seller: Option<f64>,
    /// Midpoint of the stage's reserves before any perception adjustment.
    pub unadjusted_midpoint: Option<f64>,
    pub settlement: StageSettlement,
    /// `incoming_price - settlement` when both are defined.
    pub margin: Option<f64>,
}

impl StageResult {
    fn broken(name: &str, at_stage: usize) -> Self {
        StageResult {
            name: name.to_owned(),
            incoming_price: None,
            buyer_reserve_effective: None,
            seller_reserve_effective: None,
            rho_buyer: None,
            rho_seller: None,
            unadjusted_midpoint: None,
            settlement: StageSettlement::Breakdown { at_stage },
            margin: None,
        }
    }
}

/// The negotiation a single link runs, given the price its buyer resells at.
pub fn stage_config(
    stage: &ChainStage,
    incoming_price: f64,
    gap_epsilon: f64,
    max_steps: usize,
) -> Result<(NegotiationConfig, negotiation::PerceivedTerms)> {
    let mut terms = negotiation::perceived_terms(
        ReservePrice(incoming_price),
        &stage.buyer_view,
        stage.base_seller_reserve,
        &stage.seller_view,
        stage.rates,
    )?;
    let cap = incoming_price - stage.margin_floor;
    terms.buyer_reserve_adj = ReservePrice::clamped(terms.buyer_reserve_adj.0.min(cap));
    let (buyer_res, seller_res) = (terms.buyer_reserve_adj.0, terms.seller_reserve_adj.0);
    // Each side opens near its guess of the other's reserve.
    let cfg = NegotiationConfig {
        buyer_open: buyer_res.min(seller_res),
        seller_open: buyer_res.max(seller_res),
        buyer_reserve_adj: terms.buyer_reserve_adj,
        seller_reserve_adj: terms.seller_reserve_adj,
        rates: terms.rates,
        gap_epsilon,
        max_steps,
    };
    Ok((cfg, terms))
}

/// Settles every link in order, feeding each settlement upstream.
pub fn propagate(spec: &ChainSpec) -> Result<Vec<StageResult>> {
    spec.validate()?;
    let mut results = Vec::with_capacity(spec.stages.len());
    let mut incoming = spec.anchor_price;
    let mut broken_at = None;
    for (k, stage) in spec.stages.iter().enumerate() {
        if let Some(at) = broken_at {
            results.push(StageResult::broken(&stage.name, at));
            continue;
        }
        let (cfg, terms) = stage_config(stage, incoming, spec.gap_epsilon, spec.max_steps)?;
        let trace = negotiation::run(&cfg)?;
        let settlement = match trace.outcome {
            Outcome::Agreement { price, step } => StageSettlement::Agreement { price, step },
            Outcome::Breakdown { .. } => {
                broken_at = Some(k);
                StageSettlement::Breakdown { at_stage: k }
            }
        };
        let margin = settlement.price().map(|p| incoming - p);
        results.push(StageResult {
            name: stage.name.clone(),
            incoming_price: Some(incoming),
            buyer_reserve_effective: Some(cfg.buyer_reserve_adj),
            seller_reserve_effective: Some(cfg.seller_reserve_adj),
            rho_buyer: Some(terms.rho_buyer),
            rho_seller: Some(terms.rho_seller),
            unadjusted_midpoint: Some(0.5 * (incoming + stage.base_seller_reserve.0)),
            settlement,
            margin,
        });
        if let Some(p) = settlement.price() {
            incoming = p;
        }
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageShare {
    pub name: String,
    pub margin_share: Option<f64>,
}

/// How the anchor price is divided between stage margins and the terminal
/// settlement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeReport {
    pub anchor_price: f64,
    pub stages: Vec<StageShare>,
    /// Share of the anchor paid to the deepest link.
    pub terminal_share: Option<f64>,
    /// Margin shares plus the terminal share; `None` after a breakdown.
    pub total_share: Option<f64>,
    pub largest_margin_stage: Option<usize>,
}

pub fn squeeze_report(results: &[StageResult]) -> SqueezeReport {
    let anchor_price = results
        .first()
        .and_then(|r| r.incoming_price)
        .unwrap_or(f64::NAN);
    let stages: Vec<StageShare> = results
        .iter()
        .map(|r| StageShare {
            name: r.name.clone(),
            margin_share: r.margin.map(|m| m / anchor_price),
        })
        .collect();
    let terminal_share = results
        .last()
        .and_then(|r| r.settlement.price())
        .map(|p| p / anchor_price);
    let total_share = terminal_share.and_then(|t| {
        stages
            .iter()
            .try_fold(t, |acc, s| s.margin_share.map(|m| acc + m))
    });
    let largest_margin_stage = stages
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.margin_share.map(|m| (i, m)))
        .fold(None, |best: Option<(usize, f64)>, (i, m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((i, m)),
        })
        .map(|(i, _)| i);
    SqueezeReport {
        anchor_price,
        stages,
        terminal_share,
        total_share,
        largest_margin_stage,
    }
}
