//! The negotiation dance as a coupled linear difference system.
//!
//! Each round the buyer moves toward its adjusted reserve and toward the
//! seller's current offer; the seller does the mirror image:
//!
//! ```text
//! xa' = xa + r_a (pa - xa) + r'_a (xb - xa)
//! xb' = xb - r_b (xb - pb) - r'_b (xb - xa)
//! ```
//!
//! The run stops at the first round where the gap closes to within
//! `gap_epsilon` and settles at the midpoint of the two standing offers. If
//! the offers jump past each other instead, the settlement is the price at
//! which the two offer paths cross between the last two rounds. A run that
//! exhausts `max_steps` is a breakdown.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{self, PerceptionView, ReservePrice};

/// Lower bound applied to the own-reserve rates after imbalance scaling.
pub const RATE_FLOOR: f64 = 1e-6;
/// Upper bound for each rate and for each side's `r + r'` after scaling.
pub const RATE_CEILING: f64 = 0.99;
/// Determinant magnitude below which the rest point is not computed.
pub const SINGULAR_DET: f64 = 1e-12;

pub const DEFAULT_GAP_EPSILON: f64 = 0.05;
pub const DEFAULT_MAX_STEPS: usize = 1000;

/// Per-round concession rates: `r_*` toward the own reserve, `r_*_prime`
/// toward the opponent's standing offer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcessionRates {
    pub r_a: f64,
    pub r_a_prime: f64,
    pub r_b: f64,
    pub r_b_prime: f64,
}

impl ConcessionRates {
    pub fn new(r_a: f64, r_a_prime: f64, r_b: f64, r_b_prime: f64) -> Result<Self> {
        let rates = ConcessionRates {
            r_a,
            r_a_prime,
            r_b,
            r_b_prime,
        };
        rates.validate()?;
        Ok(rates)
    }

    /// Checks the rate bounds, reporting the offending field name.
    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 && x < 1.0 {
                Ok(())
            } else {
                Err(Error::config(name, format!("must lie in (0, 1), got {x}")))
            }
        };
        let half_open = |name: &str, x: f64| {
            if x.is_finite() && (0.0..1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::config(name, format!("must lie in [0, 1), got {x}")))
            }
        };
        open_unit("r_a", self.r_a)?;
        half_open("r_a_prime", self.r_a_prime)?;
        open_unit("r_b", self.r_b)?;
        half_open("r_b_prime", self.r_b_prime)?;
        if self.r_a + self.r_a_prime >= 1.0 {
            return Err(Error::config("r_a_prime", "r_a + r_a_prime must be < 1"));
        }
        if self.r_b + self.r_b_prime >= 1.0 {
            return Err(Error::config("r_b_prime", "r_b + r_b_prime must be < 1"));
        }
        Ok(())
    }

    /// The iteration matrix acting on `(xa, xb)`.
    pub fn iteration_matrix(&self) -> [[f64; 2]; 2] {
        [
            [1.0 - self.r_a - self.r_a_prime, self.r_a_prime],
            [self.r_b_prime, 1.0 - self.r_b - self.r_b_prime],
        ]
    }
}

/// Everything a single bilateral negotiation needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegotiationConfig {
    pub buyer_open: f64,
    pub seller_open: f64,
    pub buyer_reserve_adj: ReservePrice,
    pub seller_reserve_adj: ReservePrice,
    pub rates: ConcessionRates,
    pub gap_epsilon: f64,
    pub max_steps: usize,
}

impl NegotiationConfig {
    pub fn validate(&self) -> Result<()> {
        let check_finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be finite, got {x}")))
            }
        };
        check_finite("buyer_open", self.buyer_open)?;
        check_finite("seller_open", self.seller_open)?;
        check_finite("buyer_reserve_adj", self.buyer_reserve_adj.0)?;
        check_finite("seller_reserve_adj", self.seller_reserve_adj.0)?;
        if self.seller_open < self.buyer_open {
            return Err(Error::config(
                "seller_open",
                format!(
                    "must be >= buyer_open ({} < {})",
                    self.seller_open, self.buyer_open
                ),
            ));
        }
        self.rates.validate().map_err(|e| match e {
            Error::InvalidConfig { field, rule } => Error::config(format!("rates.{field}"), rule),
            other => other,
        })?;
        if !(self.gap_epsilon.is_finite() && self.gap_epsilon > 0.0) {
            return Err(Error::config("gap_epsilon", "must be > 0"));
        }
        if self.max_steps < 1 {
            return Err(Error::config("max_steps", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub buyer_offer: f64,
    pub seller_offer: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Agreement { price: f64, step: usize },
    Breakdown { step: usize },
}

impl Outcome {
    pub fn settlement(&self) -> Option<f64> {
        match *self {
            Outcome::Agreement { price, .. } => Some(price),
            Outcome::Breakdown { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegotiationTrace {
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
}

impl NegotiationTrace {
    pub fn last(&self) -> &StepRecord {
        self.steps
            .last()
            .expect("a trace always holds the opening round")
    }
}

/// Rescales base concession rates by each side's perceived imbalance.
///
/// A buyer with `rho_buyer > 1` sees itself at a disadvantage and concedes
/// proportionally faster; a seller with `rho_seller > 1` sees itself ahead
/// and concedes proportionally slower. Results are clamped into
/// `[RATE_FLOOR, RATE_CEILING]` and a side whose `r + r'` would reach the
/// ceiling is shrunk proportionally onto it.
pub fn concession_rates_from_imbalance(
    base: ConcessionRates,
    rho_buyer: f64,
    rho_seller: f64,
) -> Result<ConcessionRates> {
    for (name, rho) in [("rho_buyer", rho_buyer), ("rho_seller", rho_seller)] {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::DegenerateRatio(format!(
                "{name} = {rho} must be > 0"
            )));
        }
    }
    let (r_a, r_a_prime) = scale_side(base.r_a, base.r_a_prime, rho_buyer);
    let (r_b, r_b_prime) = scale_side(base.r_b, base.r_b_prime, 1.0 / rho_seller);
    Ok(ConcessionRates {
        r_a,
        r_a_prime,
        r_b,
        r_b_prime,
    })
}

fn scale_side(r: f64, r_prime: f64, factor: f64) -> (f64, f64) {
    if factor == 1.0 {
        return (r, r_prime);
    }
    let base_sum = r + r_prime;
    if factor * base_sum >= RATE_CEILING {
        // Shares of the ceiling taken from the base rates, so the result does
        // not depend on how far past the ceiling the factor pushed them.
        let r_share = (RATE_CEILING * (r / base_sum)).max(RATE_FLOOR);
        return (r_share, RATE_CEILING * (r_prime / base_sum));
    }
    ((r * factor).max(RATE_FLOOR), r_prime * factor)
}

/// Adjusted reserves and imbalance-scaled rates for a pair of perceptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceivedTerms {
    pub buyer_reserve_adj: ReservePrice,
    pub seller_reserve_adj: ReservePrice,
    pub rho_buyer: f64,
    pub rho_seller: f64,
    pub rates: ConcessionRates,
}

pub fn perceived_terms(
    buyer_base: ReservePrice,
    buyer_view: &PerceptionView,
    seller_base: ReservePrice,
    seller_view: &PerceptionView,
    base_rates: ConcessionRates,
) -> Result<PerceivedTerms> {
    let rho_buyer = exchange::imbalance_ratio(buyer_view)?;
    let rho_seller = exchange::imbalance_ratio(seller_view)?;
    Ok(PerceivedTerms {
        buyer_reserve_adj: exchange::adjust_reserve_full(buyer_base, buyer_view)?,
        seller_reserve_adj: exchange::adjust_reserve_full(seller_base, seller_view)?,
        rho_buyer,
        rho_seller,
        rates: concession_rates_from_imbalance(base_rates, rho_buyer, rho_seller)?,
    })
}

/// One round of offers.
pub fn step(x_a: f64, x_b: f64, cfg: &NegotiationConfig) -> Result<(f64, f64)> {
    if !(x_a.is_finite() && x_b.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "offers must be finite, got ({x_a}, {x_b})"
        )));
    }
    Ok(step_unchecked(x_a, x_b, cfg))
}

#[inline]
fn step_unchecked(x_a: f64, x_b: f64, cfg: &NegotiationConfig) -> (f64, f64) {
    let r = &cfg.rates;
    let gap = x_b - x_a;
    let next_a = x_a + r.r_a * (cfg.buyer_reserve_adj.0 - x_a) + r.r_a_prime * gap;
    let next_b = x_b - r.r_b * (x_b - cfg.seller_reserve_adj.0) - r.r_b_prime * gap;
    (next_a, next_b)
}

pub fn run(cfg: &NegotiationConfig) -> Result<NegotiationTrace> {
    cfg.validate()?;
    let (mut x_a, mut x_b) = (cfg.buyer_open, cfg.seller_open);
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut n = 0;
    loop {
        let gap = x_b - x_a;
        steps.push(StepRecord {
            step: n,
            buyer_offer: x_a,
            seller_offer: x_b,
            gap,
        });
        if gap <= cfg.gap_epsilon {
            let price = match steps.len() {
                len if gap < 0.0 && len >= 2 => crossing_price(&steps[len - 2], &steps[len - 1]),
                _ => 0.5 * (x_a + x_b),
            };
            return Ok(NegotiationTrace {
                steps,
                outcome: Outcome::Agreement { price, step: n },
            });
        }
        if n == cfg.max_steps {
            return Ok(NegotiationTrace {
                steps,
                outcome: Outcome::Breakdown { step: n },
            });
        }
        (x_a, x_b) = step_unchecked(x_a, x_b, cfg);
        n += 1;
    }
}

/// Where the straight lines through two consecutive rounds of offers meet,
/// kept within the final pair of offers.
fn crossing_price(before: &StepRecord, after: &StepRecord) -> f64 {
    let t = before.gap / (before.gap - after.gap);
    let price = before.buyer_offer + t * (after.buyer_offer - before.buyer_offer);
    price.clamp(after.seller_offer, after.buyer_offer)
}

/// The rest point of the offer dynamics, solved in closed form.
pub fn fixed_point(cfg: &NegotiationConfig) -> Result<(f64, f64)> {
    let r = &cfg.rates;
    let (pa, pb) = (cfg.buyer_reserve_adj.0, cfg.seller_reserve_adj.0);
    if r.r_a_prime == 0.0 && r.r_b_prime == 0.0 && r.r_a > 0.0 && r.r_b > 0.0 {
        // decoupled: each side rests on its own reserve
        return Ok((pa, pb));
    }
    // (r_a + r'_a) xa - r'_a xb = r_a pa
    // -r'_b xa + (r_b + r'_b) xb = r_b pb
    let a11 = r.r_a + r.r_a_prime;
    let a12 = -r.r_a_prime;
    let a21 = -r.r_b_prime;
    let a22 = r.r_b + r.r_b_prime;
    let det = a11 * a22 - a12 * a21;
    if !det.is_finite() || det.abs() < SINGULAR_DET {
        return Err(Error::SingularSystem { det });
    }
    let (b1, b2) = (r.r_a * pa, r.r_b * pb);
    Ok(((b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det))
}

/// Largest eigenvalue modulus of the iteration matrix.
pub fn spectral_radius(rates: &ConcessionRates) -> f64 {
    let [[a, b], [c, d]] = rates.iteration_matrix();
    let half_trace = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (half_trace + s).abs().max((half_trace - s).abs())
    } else {
        // complex pair: |λ|² = det
        (a * d - b * c).abs().sqrt()
    }
}

/// True when the offer dynamics contract; modulus exactly 1 counts as unstable.
pub fn is_stable(rates: &ConcessionRates) -> bool {
    spectral_radius(rates) < 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> NegotiationConfig {
        NegotiationConfig {
            buyer_open: 2.5,
            seller_open: 4.5,
            buyer_reserve_adj: ReservePrice(5.0),
            seller_reserve_adj: ReservePrice(2.0),
            rates: ConcessionRates::new(0.05, 0.02, 0.3, 0.2).unwrap(),
            gap_epsilon: 0.05,
            max_steps: 1000,
        }
    }

    #[test]
    fn worked_example_first_two_rounds() {
        let cfg = worked_example();
        let (a1, b1) = step(2.5, 4.5, &cfg).unwrap();
        assert!((a1 - 2.665).abs() < 1e-12);
        assert!((b1 - 3.35).abs() < 1e-12);
        let (a2, b2) = step(a1, b1, &cfg).unwrap();
        assert!((a2 - 2.79545).abs() < 1e-12);
        assert!((b2 - 2.808).abs() < 1e-12);
    }

    #[test]
    fn step_rest_when_both_terms_vanish() {
        let cfg = worked_example();
        let mut cfg = cfg;
        cfg.seller_reserve_adj = ReservePrice(5.0);
        assert_eq!(step(5.0, 5.0, &cfg).unwrap(), (5.0, 5.0));
        assert!(step(f64::NAN, 1.0, &cfg).is_err());
    }

    #[test]
    fn worked_example_run_settles_at_step_two() {
        let trace = run(&worked_example()).unwrap();
        assert_eq!(trace.steps.len(), 3);
        match trace.outcome {
            Outcome::Agreement { price, step } => {
                assert_eq!(step, 2);
                assert!((price - 0.5 * (2.79545 + 2.808)).abs() < 1e-12);
            }
            other => panic!("expected agreement, got {other:?}"),
        }
    }

    #[test]
    fn crossing_settles_where_the_offer_paths_meet() {
        let mut cfg = worked_example();
        cfg.gap_epsilon = 1e-3;
        let trace = run(&cfg).unwrap();
        let n = trace.steps.len();
        let (before, after) = (trace.steps[n - 2], trace.steps[n - 1]);
        assert!(before.gap > 0.0 && after.gap < 0.0);
        let t = before.gap / (before.gap - after.gap);
        let on_buyer = before.buyer_offer + t * (after.buyer_offer - before.buyer_offer);
        let on_seller = before.seller_offer + t * (after.seller_offer - before.seller_offer);
        assert!((on_buyer - on_seller).abs() < 1e-12);
        let price = trace.outcome.settlement().unwrap();
        assert!((price - on_buyer).abs() < 1e-12);
        assert!(after.seller_offer <= price && price <= after.buyer_offer);
    }

    #[test]
    fn equal_openings_agree_immediately() {
        let mut cfg = worked_example();
        cfg.buyer_open = 3.0;
        cfg.seller_open = 3.0;
        let trace = run(&cfg).unwrap();
        assert_eq!(
            trace.outcome,
            Outcome::Agreement {
                price: 3.0,
                step: 0
            }
        );
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn frozen_rates_break_down() {
        let mut cfg = worked_example();
        cfg.rates = ConcessionRates::new(1e-9, 0.0, 1e-9, 0.0).unwrap();
        cfg.buyer_open = 1.0;
        cfg.seller_open = 10.0;
        cfg.max_steps = 5;
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.outcome, Outcome::Breakdown { step: 5 });
        assert_eq!(trace.steps.len(), 6);
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut cfg = worked_example();
        cfg.rates.r_a = 1.5;
        assert!(
            matches!(run(&cfg), Err(Error::InvalidConfig { field, .. }) if field == "rates.r_a")
        );
        let mut cfg = worked_example();
        cfg.seller_open = 1.0;
        assert!(
            matches!(run(&cfg), Err(Error::InvalidConfig { field, .. }) if field == "seller_open")
        );
        let mut cfg = worked_example();
        cfg.max_steps = 0;
        assert!(run(&cfg).is_err());
        let mut cfg = worked_example();
        cfg.gap_epsilon = 0.0;
        assert!(run(&cfg).is_err());
        assert!(ConcessionRates::new(0.6, 0.4, 0.1, 0.1).is_err());
    }

    #[test]
    fn worked_example_fixed_point() {
        // 0.07 xa - 0.02 xb = 0.25 ; -0.2 xa + 0.5 xb = 0.6
        // => xa = 6.85 / 1.55, xb = 3.5 xa - 12.5
        let (xa, xb) = fixed_point(&worked_example()).unwrap();
        let xa_hand = 6.85 / 1.55;
        assert!((xa - xa_hand).abs() < 1e-12);
        assert!((xb - (3.5 * xa_hand - 12.5)).abs() < 1e-12);
        assert!((xa - 4.4194).abs() < 1e-3 && (xb - 2.9677).abs() < 1e-3);
    }

    #[test]
    fn decoupled_fixed_point_is_the_reserves() {
        let mut cfg = worked_example();
        cfg.rates = ConcessionRates::new(0.1, 0.0, 0.2, 0.0).unwrap();
        assert_eq!(fixed_point(&cfg).unwrap(), (5.0, 2.0));

        let mut cfg = worked_example();
        cfg.rates = ConcessionRates::new(0.2, 0.1, 0.2, 0.1).unwrap();
        cfg.buyer_reserve_adj = ReservePrice(3.0);
        cfg.seller_reserve_adj = ReservePrice(3.0);
        let (xa, xb) = fixed_point(&cfg).unwrap();
        assert!((xa - 3.0).abs() < 1e-12 && (xb - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_reported() {
        let mut cfg = worked_example();
        cfg.rates = ConcessionRates {
            r_a: 0.0,
            r_a_prime: 0.0,
            r_b: 0.0,
            r_b_prime: 0.0,
        };
        assert!(matches!(
            fixed_point(&cfg),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn stability_of_worked_example_and_identity() {
        let rates = worked_example().rates;
        // trace 1.43, det 0.461: λ = (1.43 ± sqrt(0.2009)) / 2
        let hi = (1.43 + 0.2009f64.sqrt()) / 2.0;
        assert!((spectral_radius(&rates) - hi).abs() < 1e-12);
        assert!((hi - 0.939).abs() < 1e-3);
        assert!(is_stable(&rates));
        let frozen = ConcessionRates {
            r_a: 0.0,
            r_a_prime: 0.0,
            r_b: 0.0,
            r_b_prime: 0.0,
        };
        assert!(!is_stable(&frozen));
    }

    #[test]
    fn imbalance_scaling() {
        let base = ConcessionRates::new(0.1, 0.05, 0.2, 0.1).unwrap();
        assert_eq!(
            concession_rates_from_imbalance(base, 1.0, 1.0).unwrap(),
            base
        );
        let r = concession_rates_from_imbalance(base, 2.0, 2.0).unwrap();
        assert!((r.r_a - 0.2).abs() < 1e-15 && (r.r_a_prime - 0.1).abs() < 1e-15);
        assert!((r.r_b - 0.1).abs() < 1e-15 && (r.r_b_prime - 0.05).abs() < 1e-15);
        assert!(matches!(
            concession_rates_from_imbalance(base, 0.0, 1.0),
            Err(Error::DegenerateRatio(_))
        ));
        assert!(concession_rates_from_imbalance(base, 1.0, -1.0).is_err());
    }

    #[test]
    fn imbalance_scaling_shrinks_onto_the_sum_bound() {
        let base = ConcessionRates::new(0.3, 0.3, 0.2, 0.1).unwrap();
        let r = concession_rates_from_imbalance(base, 10.0, 1e-3).unwrap();
        assert!(r.validate().is_ok());
        assert!((r.r_a + r.r_a_prime - RATE_CEILING).abs() < 1e-12);
        assert!((r.r_a - r.r_a_prime).abs() < 1e-12);
        assert!(r.r_b + r.r_b_prime < 1.0);
        let r = concession_rates_from_imbalance(base, 1e-9, 1e9).unwrap();
        assert_eq!(r.r_a, RATE_FLOOR);
        assert_eq!(r.r_b, RATE_FLOOR);
    }
}
