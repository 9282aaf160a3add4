//! Money-free exchanges: welfare bookkeeping, threats and shields, the
//! acceptance rule, and equity summaries over populations of exchanges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{self, Motivation, Power, WelfareDelta};

/// What each side gives up and what each side receives. Costs are positive
/// magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeProposal {
    /// ΔU_AA: welfare A loses by supplying its good.
    pub give_cost_a: WelfareDelta,
    /// ΔU_BA: welfare B gains from A's good.
    pub gain_for_b: WelfareDelta,
    /// ΔU_BB: welfare B loses by supplying its good.
    pub give_cost_b: WelfareDelta,
    /// ΔU_AB: welfare A gains from B's good.
    pub gain_for_a: WelfareDelta,
    /// Probability that A keeps its promise; scales `gain_for_b`.
    #[serde(default = "certain")]
    pub promise_keeping: f64,
}

fn certain() -> f64 {
    1.0
}

impl ExchangeProposal {
    pub fn new(give_cost_a: f64, gain_for_b: f64, give_cost_b: f64, gain_for_a: f64) -> Self {
        ExchangeProposal {
            give_cost_a: WelfareDelta(give_cost_a),
            gain_for_b: WelfareDelta(gain_for_b),
            give_cost_b: WelfareDelta(give_cost_b),
            gain_for_a: WelfareDelta(gain_for_a),
            promise_keeping: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("give_cost_a", self.give_cost_a.0),
            ("gain_for_b", self.gain_for_b.0),
            ("give_cost_b", self.give_cost_b.0),
            ("gain_for_a", self.gain_for_a.0),
        ];
        for (name, x) in fields {
            if !x.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        for (name, x) in [
            ("give_cost_a", self.give_cost_a.0),
            ("give_cost_b", self.give_cost_b.0),
        ] {
            if x < 0.0 {
                return Err(Error::config(name, "costs are non-negative magnitudes"));
            }
        }
        if !(0.0..=1.0).contains(&self.promise_keeping) {
            return Err(Error::config("promise_keeping", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Pressure from outside the exchange itself: a loss threatened on refusal
/// and the fraction of it the side's environment absorbs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalInfluence {
    #[serde(default)]
    pub threat_on_refusal: WelfareDelta,
    #[serde(default)]
    pub shield: f64,
}

impl Default for ExternalInfluence {
    fn default() -> Self {
        ExternalInfluence::NONE
    }
}

impl ExternalInfluence {
    pub const NONE: ExternalInfluence = ExternalInfluence {
        threat_on_refusal: WelfareDelta(0.0),
        shield: 0.0,
    };

    pub fn new(threat_on_refusal: f64, shield: f64) -> Self {
        ExternalInfluence {
            threat_on_refusal: WelfareDelta(threat_on_refusal),
            shield,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.threat_on_refusal.0;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::config(
                "threat_on_refusal",
                "must be finite and >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&self.shield) {
            return Err(Error::config("shield", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// The part of the threat that reaches the side.
    pub fn avoided_loss(&self) -> f64 {
        self.threat_on_refusal.0 * (1.0 - self.shield)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BothAccept,
    ARefuses,
    BRefuses,
    BothRefuse,
}

impl Verdict {
    pub fn from_signs(a_accepts: bool, b_accepts: bool) -> Self {
        match (a_accepts, b_accepts) {
            (true, true) => Verdict::BothAccept,
            (false, true) => Verdict::ARefuses,
            (true, false) => Verdict::BRefuses,
            (false, false) => Verdict::BothRefuse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSheet {
    pub m_a: Motivation,
    pub m_a_effective: Motivation,
    pub m_b_raw: Motivation,
    pub m_b_effective: Motivation,
    pub k_a: Power,
    pub k_b: Power,
    /// `None` when the equity index is undefined for these terms.
    pub equity: Option<f64>,
    pub verdict: Verdict,
}

pub fn welfare_balance(
    p: &ExchangeProposal,
    infl_a: &ExternalInfluence,
    infl_b: &ExternalInfluence,
) -> Result<BalanceSheet> {
    p.validate()?;
    infl_a.validate()?;
    infl_b.validate()?;
    let gain_for_b = WelfareDelta(p.gain_for_b.0 * p.promise_keeping);

    let m_a = exchange::motivation(p.gain_for_a, p.give_cost_a)?;
    let m_b_raw = exchange::motivation(gain_for_b, p.give_cost_b)?;
    let k_a = exchange::power(gain_for_b, p.give_cost_a)?;
    let k_b = exchange::power(p.gain_for_a, p.give_cost_b)?;

    let m_a_effective = Motivation(m_a.0 + infl_a.avoided_loss());
    let m_b_effective = Motivation(m_b_raw.0 + infl_b.avoided_loss());
    let equity = exchange::equity_index(m_a, k_a, m_b_raw, k_b).ok();

    let mut sheet = BalanceSheet {
        m_a,
        m_a_effective,
        m_b_raw,
        m_b_effective,
        k_a,
        k_b,
        equity,
        verdict: Verdict::BothRefuse,
    };
    sheet.verdict = accept_decision(&sheet);
    Ok(sheet)
}

/// Each side accepts iff its effective motivation is strictly positive.
pub fn accept_decision(sheet: &BalanceSheet) -> Verdict {
    Verdict::from_signs(sheet.m_a_effective.0 > 0.0, sheet.m_b_effective.0 > 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeRecord {
    pub stratum: String,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquitySummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// 10th through 90th percentiles, linearly interpolated.
    pub deciles: [f64; 9],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityMap {
    pub strata: BTreeMap<String, EquitySummary>,
    pub pooled: EquitySummary,
}

pub fn equity_map(records: &[ExchangeRecord]) -> Result<EquityMap> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut pooled = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if !(r.equity.is_finite() && r.equity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "records[{i}].equity = {} must be finite and > 0",
                r.equity
            )));
        }
        groups.entry(r.stratum.clone()).or_default().push(r.equity);
        pooled.push(r.equity);
    }
    let strata = groups.into_iter().map(|(k, v)| (k, summarize(v))).collect();
    Ok(EquityMap {
        strata,
        pooled: summarize(pooled),
    })
}

// Sorting first makes every statistic independent of record order.
fn summarize(mut values: Vec<f64>) -> EquitySummary {
    values.sort_by(f64::total_cmp);
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let mut deciles = [0.0; 9];
    for (i, d) in deciles.iter_mut().enumerate() {
        *d = quantile_sorted(&values, (i + 1) as f64 / 10.0);
    }
    EquitySummary {
        count,
        mean,
        median: quantile_sorted(&values, 0.5),
        deciles,
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
