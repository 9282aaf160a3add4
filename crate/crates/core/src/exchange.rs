//! Primitive quantities of a bilateral exchange and the pre-negotiation
//! reserve-price adjustment.
//!
//! Motivation is the net welfare a party expects from completing an exchange;
//! power is the welfare change a party can cause the other, net of its own
//! cost. Each side holds a private [`PerceptionView`] of both quantities and
//! folds them into a single scalar, the perceived imbalance ratio, which
//! rescales its reserve price before any offer is made.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest magnitude accepted for a perception term used as a divisor.
pub const DEFAULT_RATIO_FLOOR: f64 = 1e-9;

/// A change in well-being, in the scenario's abstract welfare units.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WelfareDelta(pub f64);

/// Net welfare gain from completing an exchange. May be negative as a value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Motivation(pub f64);

/// Ability to change the other side's welfare, net of own cost.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Power(pub f64);

/// A reserve price in the scenario's currency units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReservePrice(pub f64);

impl ReservePrice {
    /// Builds a reserve price, flooring negative values at zero.
    pub fn clamped(value: f64) -> Self {
        ReservePrice(value.max(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Buyer,
    Seller,
}

/// One side's private estimates of its own and the other side's motivation
/// and power.
///
/// For a buyer A this holds `(M_A, M_BA, K_A, K_BA)`; for a seller B it holds
/// `(M_B, M_AB, K_B, K_AB)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionView {
    pub own_motivation: Motivation,
    pub other_motivation_perceived: Motivation,
    pub own_power: Power,
    pub other_power_perceived: Power,
    pub role: Role,
}

impl PerceptionView {
    pub fn new(
        role: Role,
        own_motivation: f64,
        other_motivation_perceived: f64,
        own_power: f64,
        other_power_perceived: f64,
    ) -> Self {
        PerceptionView {
            own_motivation: Motivation(own_motivation),
            other_motivation_perceived: Motivation(other_motivation_perceived),
            own_power: Power(own_power),
            other_power_perceived: Power(other_power_perceived),
            role,
        }
    }

    /// A view in which both sides look identical: every ratio is 1.
    pub fn balanced(role: Role) -> Self {
        PerceptionView::new(role, 1.0, 1.0, 1.0, 1.0)
    }

    /// Motivation factor: `M_A / M_BA` for a buyer, `M_AB / M_B` for a seller.
    pub fn motivation_factor(&self, floor: f64) -> Result<f64> {
        let own = positive("own_motivation", self.own_motivation.0, floor)?;
        let other = positive(
            "other_motivation_perceived",
            self.other_motivation_perceived.0,
            floor,
        )?;
        Ok(match self.role {
            Role::Buyer => own / other,
            Role::Seller => other / own,
        })
    }

    /// Power factor: `K_BA / K_A` for a buyer, `K_B / K_AB` for a seller.
    pub fn power_factor(&self, floor: f64) -> Result<f64> {
        let own = positive("own_power", self.own_power.0, floor)?;
        let other = positive("other_power_perceived", self.other_power_perceived.0, floor)?;
        Ok(match self.role {
            Role::Buyer => other / own,
            Role::Seller => own / other,
        })
    }

    /// Checks that all four magnitudes clear `floor`.
    pub fn validate(&self, floor: f64) -> Result<()> {
        self.motivation_factor(floor)?;
        self.power_factor(floor)?;
        Ok(())
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be finite, got {x}"
        )))
    }
}

fn positive(name: &str, x: f64, floor: f64) -> Result<f64> {
    if x.is_finite() && x >= floor {
        Ok(x)
    } else {
        Err(Error::DegenerateRatio(format!(
            "{name} = {x} is below the positivity floor {floor:e}"
        )))
    }
}

/// Net welfare from an exchange: what is gained minus what is relinquished.
pub fn motivation(gain: WelfareDelta, loss: WelfareDelta) -> Result<Motivation> {
    Ok(Motivation(
        finite("gain", gain.0)? - finite("loss", loss.0)?,
    ))
}

/// Power from the effect a good has on the other side, net of its cost to
/// the supplier (`K_A = ΔU_BA − ΔU_AA`).
pub fn power(effect_on_other: WelfareDelta, own_cost: WelfareDelta) -> Result<Power> {
    Ok(Power(
        finite("effect_on_other", effect_on_other.0)? - finite("own_cost", own_cost.0)?,
    ))
}

/// The perceived imbalance: product of the motivation and power factors.
pub fn imbalance_ratio(view: &PerceptionView) -> Result<f64> {
    imbalance_ratio_with_floor(view, DEFAULT_RATIO_FLOOR)
}

pub fn imbalance_ratio_with_floor(view: &PerceptionView, floor: f64) -> Result<f64> {
    Ok(view.motivation_factor(floor)? * view.power_factor(floor)?)
}

/// Rescales a reserve price by the motivation factor only.
pub fn adjust_reserve_motivation(
    base: ReservePrice,
    view: &PerceptionView,
) -> Result<ReservePrice> {
    let factor = view.motivation_factor(DEFAULT_RATIO_FLOOR)?;
    Ok(ReservePrice::clamped(finite("base", base.0)? * factor))
}

/// Rescales a reserve price by the full imbalance ratio.
pub fn adjust_reserve_full(base: ReservePrice, view: &PerceptionView) -> Result<ReservePrice> {
    adjust_reserve_full_with_floor(base, view, DEFAULT_RATIO_FLOOR)
}

pub fn adjust_reserve_full_with_floor(
    base: ReservePrice,
    view: &PerceptionView,
    floor: f64,
) -> Result<ReservePrice> {
    let ratio = imbalance_ratio_with_floor(view, floor)?;
    Ok(ReservePrice::clamped(finite("base", base.0)? * ratio))
}

/// Equity of an exchange, `(M_A·K_B) / (M_B·K_A)`; 1 when balanced.
///
/// All four terms must be strictly positive so the index is.
pub fn equity_index(m_a: Motivation, k_a: Power, m_b: Motivation, k_b: Power) -> Result<f64> {
    let floor = DEFAULT_RATIO_FLOOR;
    let m_a = positive("m_a", m_a.0, floor)?;
    let k_a = positive("k_a", k_a.0, floor)?;
    let m_b = positive("m_b", m_b.0, floor)?;
    let k_b = positive("k_b", k_b.0, floor)?;
    Ok((m_a * k_b) / (m_b * k_a))
}
