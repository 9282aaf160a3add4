//! Scenario documents: a versioned JSON envelope around one module's
//! configuration.
//!
//! Parsing runs in three passes, each with its own error type. First the
//! text must be JSON ([`ScenarioError::Parse`], with line and column). Then
//! it must match the schema for its `kind`, with unknown fields rejected
//! ([`ScenarioError::Schema`], with the field path). Finally every numeric
//! invariant is checked before anything runs ([`ScenarioError::Invariant`],
//! with the field path and the rule that failed).

use std::collections::BTreeMap;

use exsim_core::exchange::{self, PerceptionView, ReservePrice, DEFAULT_RATIO_FLOOR};
use exsim_core::negotiation::{
    self, ConcessionRates, NegotiationConfig, PerceivedTerms, DEFAULT_GAP_EPSILON,
    DEFAULT_MAX_STEPS,
};
use exsim_core::nonmarket::{ExchangeProposal, ExchangeRecord, ExternalInfluence};
use exsim_core::power_graph::{Subject, TrustEdge, TrustGraph};
use exsim_core::society::SocietyConfig;
use exsim_core::supply_chain::ChainSpec;
use exsim_core::Error as CoreError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario `{path}`: {message}")]
    Io { path: String, message: String },

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid value at `{path}`: {rule}")]
    Invariant { path: String, rule: String },
}

impl ScenarioError {
    fn invariant(path: impl Into<String>, rule: impl Into<String>) -> Self {
        ScenarioError::Invariant {
            path: path.into(),
            rule: rule.into(),
        }
    }

    /// Re-roots a core validation error under `prefix`.
    fn from_core(prefix: &str, err: CoreError) -> Self {
        match err {
            CoreError::InvalidConfig { field, rule } => {
                ScenarioError::invariant(format!("{prefix}.{field}"), rule)
            }
            other => ScenarioError::invariant(prefix, other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Negotiation,
    Chain,
    Nonmarket,
    PowerChain,
    Society,
}

/// How a negotiation's adjusted reserves and rates are obtained from base
/// reserves and each side's perceptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perceptions {
    pub buyer_base_reserve: ReservePrice,
    pub buyer_view: PerceptionView,
    pub seller_base_reserve: ReservePrice,
    pub seller_view: PerceptionView,
}

/// A single negotiation. Give either both adjusted reserves directly, or a
/// `perceptions` block from which they (and the imbalance-scaled rates)
/// are derived; `rates` are then the base rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegotiationBody {
    pub buyer_open: f64,
    pub seller_open: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buyer_reserve_adj: Option<ReservePrice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seller_reserve_adj: Option<ReservePrice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perceptions: Option<Perceptions>,
    pub rates: ConcessionRates,
    #[serde(default = "default_gap_epsilon")]
    pub gap_epsilon: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_gap_epsilon() -> f64 {
    DEFAULT_GAP_EPSILON
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

impl NegotiationBody {
    /// The configuration to run, plus the perceived terms when they were
    /// derived from perceptions.
    pub fn resolve(&self) -> Result<(NegotiationConfig, Option<PerceivedTerms>), ScenarioError> {
        let (buyer_reserve_adj, seller_reserve_adj, rates, terms) = match (
            self.perceptions,
            self.buyer_reserve_adj,
            self.seller_reserve_adj,
        ) {
            (Some(p), None, None) => {
                check_view(
                    "body.perceptions.buyer_view",
                    &p.buyer_view,
                    exchange::Role::Buyer,
                )?;
                check_view(
                    "body.perceptions.seller_view",
                    &p.seller_view,
                    exchange::Role::Seller,
                )?;
                self.rates
                    .validate()
                    .map_err(|e| ScenarioError::from_core("body.rates", e))?;
                let terms = negotiation::perceived_terms(
                    p.buyer_base_reserve,
                    &p.buyer_view,
                    p.seller_base_reserve,
                    &p.seller_view,
                    self.rates,
                )
                .map_err(|e| ScenarioError::from_core("body.perceptions", e))?;
                (
                    terms.buyer_reserve_adj,
                    terms.seller_reserve_adj,
                    terms.rates,
                    Some(terms),
                )
            }
            (None, Some(b), Some(s)) => (b, s, self.rates, None),
            (Some(_), _, _) => {
                return Err(ScenarioError::invariant(
                    "body.perceptions",
                    "give either `perceptions` or both adjusted reserves, not both",
                ))
            }
            (None, None, _) => {
                return Err(ScenarioError::invariant(
                    "body.buyer_reserve_adj",
                    "required unless `perceptions` is given",
                ))
            }
            (None, Some(_), None) => {
                return Err(ScenarioError::invariant(
                    "body.seller_reserve_adj",
                    "required unless `perceptions` is given",
                ))
            }
        };
        let cfg = NegotiationConfig {
            buyer_open: self.buyer_open,
            seller_open: self.seller_open,
            buyer_reserve_adj,
            seller_reserve_adj,
            rates,
            gap_epsilon: self.gap_epsilon,
            max_steps: self.max_steps,
        };
        cfg.validate()
            .map_err(|e| ScenarioError::from_core("body", e))?;
        Ok((cfg, terms))
    }
}

fn check_view(
    path: &str,
    view: &PerceptionView,
    role: exchange::Role,
) -> Result<(), ScenarioError> {
    if view.role != role {
        return Err(ScenarioError::invariant(
            format!("{path}.role"),
            format!(
                "must be `{}`",
                if role == exchange::Role::Buyer {
                    "buyer"
                } else {
                    "seller"
                }
            ),
        ));
    }
    view.validate(DEFAULT_RATIO_FLOOR)
        .map_err(|e| ScenarioError::invariant(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonmarketBody {
    pub proposal: ExchangeProposal,
    #[serde(default)]
    pub influence_a: ExternalInfluence,
    #[serde(default)]
    pub influence_b: ExternalInfluence,
    /// Optional population of exchanges to summarize by stratum.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<ExchangeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerChainBody {
    pub nodes: Vec<Subject>,
    #[serde(default)]
    pub edges: Vec<TrustEdge>,
    pub weak: String,
    pub adversary: String,
    pub threshold: f64,
}

impl PowerChainBody {
    pub fn graph(&self) -> Result<TrustGraph, ScenarioError> {
        TrustGraph::new(self.nodes.clone(), self.edges.clone())
            .map_err(|e| ScenarioError::invariant("body.edges", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioBody {
    Negotiation(NegotiationBody),
    Chain(ChainSpec),
    Nonmarket(NonmarketBody),
    PowerChain(PowerChainBody),
    Society(SocietyConfig),
}

impl ScenarioBody {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioBody::Negotiation(_) => ScenarioKind::Negotiation,
            ScenarioBody::Chain(_) => ScenarioKind::Chain,
            ScenarioBody::Nonmarket(_) => ScenarioKind::Nonmarket,
            ScenarioBody::PowerChain(_) => ScenarioKind::PowerChain,
            ScenarioBody::Society(_) => ScenarioKind::Society,
        }
    }

    fn to_value(&self) -> serde_json::Result<Value> {
        match self {
            ScenarioBody::Negotiation(b) => serde_json::to_value(b),
            ScenarioBody::Chain(b) => serde_json::to_value(b),
            ScenarioBody::Nonmarket(b) => serde_json::to_value(b),
            ScenarioBody::PowerChain(b) => serde_json::to_value(b),
            ScenarioBody::Society(b) => serde_json::to_value(b),
        }
    }

    /// Checks every invariant of the body, reporting paths under `body`.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            ScenarioBody::Negotiation(b) => b.resolve().map(|_| ()),
            ScenarioBody::Chain(spec) => spec
                .validate()
                .map_err(|e| ScenarioError::from_core("body", e)),
            ScenarioBody::Nonmarket(b) => {
                b.proposal
                    .validate()
                    .map_err(|e| ScenarioError::from_core("body.proposal", e))?;
                b.influence_a
                    .validate()
                    .map_err(|e| ScenarioError::from_core("body.influence_a", e))?;
                b.influence_b
                    .validate()
                    .map_err(|e| ScenarioError::from_core("body.influence_b", e))?;
                for (i, r) in b.records.iter().enumerate() {
                    if !(r.equity.is_finite() && r.equity > 0.0) {
                        return Err(ScenarioError::invariant(
                            format!("body.records[{i}].equity"),
                            "must be finite and > 0",
                        ));
                    }
                }
                Ok(())
            }
            ScenarioBody::PowerChain(b) => {
                if !b.threshold.is_finite() {
                    return Err(ScenarioError::invariant("body.threshold", "must be finite"));
                }
                let g = b.graph()?;
                if g.strength_vs(&b.weak, &b.adversary).is_none() {
                    let rule = if g.subjects().iter().any(|s| s.name == b.weak) {
                        format!("`{}` has no strength against `{}`", b.weak, b.adversary)
                    } else {
                        format!("`{}` is not a node", b.weak)
                    };
                    return Err(ScenarioError::invariant("body.weak", rule));
                }
                for (i, s) in g.subjects().iter().enumerate() {
                    if !s.strength.contains_key(&b.adversary) {
                        return Err(ScenarioError::invariant(
                            format!("body.nodes[{i}].strength"),
                            format!("no entry for adversary `{}`", b.adversary),
                        ));
                    }
                }
                Ok(())
            }
            ScenarioBody::Society(cfg) => cfg
                .validate()
                .map_err(|e| ScenarioError::from_core("body", e)),
        }
    }
}

/// A validated scenario document.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub version: u32,
    pub body: ScenarioBody,
    /// Free-form labels carried through to the report untouched.
    pub metadata: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    version: u32,
    kind: ScenarioKind,
    body: Value,
    #[serde(default)]
    metadata: BTreeMap<String, Value>,
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        self.body.kind()
    }

    pub fn to_json_value(&self) -> Value {
        let envelope = Envelope {
            version: self.version,
            kind: self.kind(),
            body: self.body.to_value().expect("scenario bodies serialize"),
            metadata: self.metadata.clone(),
        };
        serde_json::to_value(envelope).expect("scenario envelopes serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("values serialize")
    }
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        from_value(value).map_err(serde::de::Error::custom)
    }
}

fn schema<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ScenarioError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            (p, ".") => p.to_owned(),
            ("", i) => i.to_owned(),
            (p, i) if i.starts_with('[') => format!("{p}{i}"),
            (p, i) => format!("{p}.{i}"),
        };
        ScenarioError::Schema {
            path: if path.is_empty() {
                ".".to_owned()
            } else {
                path
            },
            message: e.into_inner().to_string(),
        }
    })
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(value)
}

fn from_value(value: Value) -> Result<Scenario, ScenarioError> {
    let envelope: Envelope = schema(value, "")?;
    if envelope.version != SCHEMA_VERSION {
        return Err(ScenarioError::invariant(
            "version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                envelope.version
            ),
        ));
    }
    let body = match envelope.kind {
        ScenarioKind::Negotiation => ScenarioBody::Negotiation(schema(envelope.body, "body")?),
        ScenarioKind::Chain => ScenarioBody::Chain(schema(envelope.body, "body")?),
        ScenarioKind::Nonmarket => ScenarioBody::Nonmarket(schema(envelope.body, "body")?),
        ScenarioKind::PowerChain => ScenarioBody::PowerChain(schema(envelope.body, "body")?),
        ScenarioKind::Society => ScenarioBody::Society(schema(envelope.body, "body")?),
    };
    body.validate()?;
    Ok(Scenario {
        version: envelope.version,
        body,
        metadata: envelope.metadata,
    })
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}
