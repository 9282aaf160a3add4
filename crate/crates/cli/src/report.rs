use std::time::Instant;

use exsim_core::negotiation::{self, NegotiationTrace, PerceivedTerms};
use exsim_core::nonmarket::{self, BalanceSheet, EquityMap};
use exsim_core::power_graph::{self, PowerChain};
use exsim_core::society::{self, WealthTrace};
use exsim_core::supply_chain::{self, SqueezeReport, StageResult};
use exsim_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, ScenarioBody};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainSearch {
    Found {
        chain: PowerChain,
    },
    NoChain {
        weak: String,
        adversary: String,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunOutcome {
    Negotiation {
        trace: NegotiationTrace,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perceived: Option<PerceivedTerms>,
        /// Rest point of the offer dynamics; absent when the system is singular.
        fixed_point: Option<(f64, f64)>,
        spectral_radius: f64,
        stable: bool,
    },
    Chain {
        stages: Vec<StageResult>,
        squeeze: SqueezeReport,
    },
    Nonmarket {
        sheet: BalanceSheet,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        equity_map: Option<EquityMap>,
    },
    PowerChain {
        search: ChainSearch,
    },
    Society {
        trace: WealthTrace,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub outcome: RunOutcome,
    pub engine_version: String,
    pub duration_seconds: f64,
}

/// Runs a validated scenario. Breakdowns and missing power chains are
/// outcomes; only engine failures are errors.
pub fn execute(scenario: &Scenario) -> Result<RunReport, CoreError> {
    let started = Instant::now();
    let outcome = match &scenario.body {
        ScenarioBody::Negotiation(body) => {
            let (cfg, perceived) = body
                .resolve()
                .map_err(|e| CoreError::InvalidInput(e.to_string()))?;
            let trace = negotiation::run(&cfg)?;
            RunOutcome::Negotiation {
                trace,
                perceived,
                fixed_point: negotiation::fixed_point(&cfg).ok(),
                spectral_radius: negotiation::spectral_radius(&cfg.rates),
                stable: negotiation::is_stable(&cfg.rates),
            }
        }
        ScenarioBody::Chain(spec) => {
            let stages = supply_chain::propagate(spec)?;
            let squeeze = supply_chain::squeeze_report(&stages);
            RunOutcome::Chain { stages, squeeze }
        }
        ScenarioBody::Nonmarket(body) => {
            let sheet =
                nonmarket::welfare_balance(&body.proposal, &body.influence_a, &body.influence_b)?;
            let equity_map = if body.records.is_empty() {
                None
            } else {
                Some(nonmarket::equity_map(&body.records)?)
            };
            RunOutcome::Nonmarket { sheet, equity_map }
        }
        ScenarioBody::PowerChain(body) => {
            let graph = body
                .graph()
                .map_err(|e| CoreError::InvalidInput(e.to_string()))?;
            let search = match power_graph::find_power_chain(
                &graph,
                &body.weak,
                &body.adversary,
                body.threshold,
            ) {
                Ok(chain) => ChainSearch::Found { chain },
                Err(CoreError::NoChain {
                    from,
                    adversary,
                    threshold,
                }) => ChainSearch::NoChain {
                    weak: from,
                    adversary,
                    threshold,
                },
                Err(e) => return Err(e),
            };
            RunOutcome::PowerChain { search }
        }
        ScenarioBody::Society(cfg) => RunOutcome::Society {
            trace: society::run_society(cfg)?,
        },
    };
    Ok(RunReport {
        scenario: scenario.clone(),
        outcome,
        engine_version: ENGINE_VERSION.to_owned(),
        duration_seconds: started.elapsed().as_secs_f64(),
    })
}

impl RunOutcome {
    /// One human-readable line for the diagnostic stream.
    pub fn summary(&self) -> String {
        match self {
            RunOutcome::Negotiation { trace, .. } => match trace.outcome {
                negotiation::Outcome::Agreement { price, step } => {
                    format!("agreement at step {step}, price {price:.6}")
                }
                negotiation::Outcome::Breakdown { step } => format!("breakdown after {step} steps"),
            },
            RunOutcome::Chain { stages, squeeze } => match squeeze.terminal_share {
                Some(share) => format!(
                    "{} stages settled, terminal share {:.4}",
                    stages.len(),
                    share
                ),
                None => "chain broke down".to_owned(),
            },
            RunOutcome::Nonmarket { sheet, .. } => format!("verdict {:?}", sheet.verdict),
            RunOutcome::PowerChain { search } => match search {
                ChainSearch::Found { chain } => format!("chain {}", chain.path.join(" -> ")),
                ChainSearch::NoChain { .. } => "no chain".to_owned(),
            },
            RunOutcome::Society { trace } => format!("final gini {:.6}", trace.final_gini()),
        }
    }
}
