//! Society-scale wealth dynamics under two regimes of exchange power.
//!
//! Each pairing round matches the population into uniformly random disjoint
//! pairs (with an odd population one agent sits the round out). Each meeting
//! splits a fixed joint surplus. The richer agent's power over the poorer one
//! comes from their wealth ratio, either uncapped (authoritarian) or capped
//! by institutions. With imbalance ratio `ρ` the stronger side takes `ρ / (1 + ρ)` of the surplus.
//! Inequality is tracked with the Gini coefficient.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the per-epoch wealth accounting check.
pub const CONSERVATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WealthDistribution {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Lognormal { mu: f64, sigma: f64 },
}

impl WealthDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            WealthDistribution::Constant { value } => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::config("initial_wealth.value", "must be > 0"));
                }
            }
            WealthDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && lo > 0.0) {
                    return Err(Error::config("initial_wealth.lo", "must be > 0"));
                }
                if !(hi.is_finite() && hi >= lo) {
                    return Err(Error::config("initial_wealth.hi", "must be >= lo"));
                }
            }
            WealthDistribution::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::config("initial_wealth.mu", "must be finite"));
                }
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::config("initial_wealth.sigma", "must be >= 0"));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *self {
            WealthDistribution::Constant { value } => vec![value; n],
            WealthDistribution::Uniform { lo, hi } if lo == hi => vec![lo; n],
            WealthDistribution::Uniform { lo, hi } => {
                let d = Uniform::new(lo, hi).expect("validated bounds");
                d.sample_iter(rng).take(n).collect()
            }
            WealthDistribution::Lognormal { mu, sigma } => {
                let d = LogNormal::new(mu, sigma).expect("validated parameters");
                d.sample_iter(rng).take(n).collect()
            }
        }
    }
}

/// How a wealth ratio turns into exchange power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegimeRule {
    /// `ρ = ratio^power_exponent`
    Authoritarian { power_exponent: f64 },
    /// `ρ = min(ratio, cap)`
    Institutional { cap: f64 },
}

impl RegimeRule {
    fn validate(&self) -> Result<()> {
        match *self {
            RegimeRule::Authoritarian { power_exponent } => {
                if !(power_exponent.is_finite() && power_exponent >= 0.0) {
                    return Err(Error::config(
                        "regime.power_exponent",
                        "must be finite and >= 0",
                    ));
                }
            }
            RegimeRule::Institutional { cap } => {
                if !(cap.is_finite() && cap >= 1.0) {
                    return Err(Error::config("regime.cap", "must be finite and >= 1"));
                }
            }
        }
        Ok(())
    }

    /// Imbalance ratio of the richer side for a wealth ratio `>= 1`.
    pub fn power_ratio(&self, wealth_ratio: f64) -> f64 {
        match *self {
            RegimeRule::Authoritarian { power_exponent } => wealth_ratio.powf(power_exponent),
            RegimeRule::Institutional { cap } => wealth_ratio.min(cap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocietyConfig {
    pub n_agents: usize,
    pub initial_wealth: WealthDistribution,
    pub regime: RegimeRule,
    pub epochs: usize,
    /// Rounds of random matching per epoch; every agent meets once per round.
    pub pairings_per_epoch: usize,
    pub seed: u64,
    pub unit_surplus: f64,
}

impl SocietyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::config("n_agents", "must be >= 2"));
        }
        if self.epochs < 1 {
            return Err(Error::config("epochs", "must be >= 1"));
        }
        if self.pairings_per_epoch < 1 {
            return Err(Error::config("pairings_per_epoch", "must be >= 1"));
        }
        if !(self.unit_surplus.is_finite() && self.unit_surplus > 0.0) {
            return Err(Error::config("unit_surplus", "must be > 0"));
        }
        self.initial_wealth.validate()?;
        self.regime.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthTrace {
    /// Gini before the first epoch, then after each epoch.
    pub gini: Vec<f64>,
    /// Total wealth at the same instants as `gini`.
    pub total_wealth: Vec<f64>,
    pub final_wealth: Vec<f64>,
    /// Worst relative mismatch between recomputed and expected total wealth.
    pub max_conservation_error: f64,
}

impl WealthTrace {
    pub fn final_gini(&self) -> f64 {
        *self.gini.last().expect("trace holds the initial gini")
    }
}

/// Gini coefficient: mean absolute pairwise difference over twice the mean.
pub fn gini(wealths: &[f64]) -> Result<f64> {
    if wealths.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(w) = wealths.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "wealth must be finite and >= 0, got {w}"
        )));
    }
    let mut sorted = wealths.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Err(Error::AllZero);
    }
    if sorted[0] == sorted[sorted.len() - 1] {
        return Ok(0.0);
    }
    let n = sorted.len() as f64;
    // sum_i (2i - n - 1) x_(i), ranks from 1
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * total)).max(0.0))
}

pub fn run_society(cfg: &SocietyConfig) -> Result<WealthTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_agents;
    let mut wealth = cfg.initial_wealth.sample(n, &mut rng);
    let mut total: f64 = wealth.iter().sum();
    let mut gini_series = Vec::with_capacity(cfg.epochs + 1);
    let mut totals = Vec::with_capacity(cfg.epochs + 1);
    gini_series.push(gini(&wealth)?);
    totals.push(total);
    let mut max_err: f64 = 0.0;
    let surplus = cfg.unit_surplus;

    let mut order: Vec<usize> = (0..n).collect();
    let per_epoch = (cfg.pairings_per_epoch * (n / 2)) as f64 * surplus;
    for _ in 0..cfg.epochs {
        for _ in 0..cfg.pairings_per_epoch {
            order.shuffle(&mut rng);
            for pair in order.chunks_exact(2) {
                let (i, j) = (pair[0], pair[1]);
                let (rich, poor) = if wealth[i] >= wealth[j] {
                    (i, j)
                } else {
                    (j, i)
                };
                let rho = cfg.regime.power_ratio(wealth[rich] / wealth[poor]);
                let poor_share = surplus / (1.0 + rho);
                wealth[poor] += poor_share;
                wealth[rich] += surplus - poor_share;
            }
        }
        let expected = total + per_epoch;
        total = wealth.iter().sum();
        max_err = max_err.max(((total - expected) / expected).abs());
        gini_series.push(gini(&wealth)?);
        totals.push(total);
    }
    Ok(WealthTrace {
        gini: gini_series,
        total_wealth: totals,
        final_wealth: wealth,
        max_conservation_error: max_err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub final_gini_a: f64,
    pub final_gini_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    pub regime_a: RegimeRule,
    pub regime_b: RegimeRule,
    pub per_seed: Vec<SeedResult>,
    pub mean_gini_a: f64,
    pub mean_gini_b: f64,
    /// `mean_gini_a - mean_gini_b`
    pub mean_difference: f64,
    /// Sign of `mean_difference`: -1, 0 or 1.
    pub sign: i8,
    /// Seeds on which regime A ends strictly more unequal.
    pub seeds_a_higher: usize,
}

/// Runs both configs over the seeds `seed, seed + 1, …` and compares final
/// inequality. Replicates run in parallel; results do not depend on
/// scheduling.
pub fn compare_regimes(
    cfg_a: &SocietyConfig,
    cfg_b: &SocietyConfig,
    n_seeds: usize,
) -> Result<RegimeComparison> {
    if n_seeds < 1 {
        return Err(Error::config("n_seeds", "must be >= 1"));
    }
    let same_rest = SocietyConfig {
        regime: cfg_a.regime,
        ..*cfg_b
    };
    if same_rest != *cfg_a {
        return Err(Error::ConfigMismatch(format!(
            "only `regime` may differ; got {cfg_a:?} vs {cfg_b:?}"
        )));
    }
    cfg_a.validate()?;
    cfg_b.validate()?;

    let per_seed = (0..n_seeds as u64)
        .into_par_iter()
        .map(|k| {
            let seed = cfg_a.seed.wrapping_add(k);
            let a = run_society(&SocietyConfig { seed, ..*cfg_a })?;
            let b = run_society(&SocietyConfig { seed, ..*cfg_b })?;
            Ok(SeedResult {
                seed,
                final_gini_a: a.final_gini(),
                final_gini_b: b.final_gini(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let count = per_seed.len() as f64;
    let mean_gini_a = per_seed.iter().map(|r| r.final_gini_a).sum::<f64>() / count;
    let mean_gini_b = per_seed.iter().map(|r| r.final_gini_b).sum::<f64>() / count;
    let mean_difference = mean_gini_a - mean_gini_b;
    let sign = if mean_difference > 0.0 {
        1
    } else if mean_difference < 0.0 {
        -1
    } else {
        0
    };
    let seeds_a_higher = per_seed
        .iter()
        .filter(|r| r.final_gini_a > r.final_gini_b)
        .count();
    Ok(RegimeComparison {
        regime_a: cfg_a.regime,
        regime_b: cfg_b.regime,
        per_seed,
        mean_gini_a,
        mean_gini_b,
        mean_difference,
        sign,
        seeds_a_higher,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_gini(w: &[f64]) -> f64 {
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let pairs: f64 = w
            .iter()
            .flat_map(|a| w.iter().map(move |b| (a - b).abs()))
            .sum();
        pairs / (n * n) / (2.0 * mean)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert!((gini(&[2.0, 1.0, 1.0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((brute_gini(&[2.0, 1.0, 1.0]) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(gini(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.75);
    }

    #[test]
    fn gini_errors() {
        assert_eq!(gini(&[]), Err(Error::EmptyInput));
        assert_eq!(gini(&[0.0, 0.0]), Err(Error::AllZero));
        assert!(matches!(gini(&[1.0, -1.0]), Err(Error::InvalidInput(_))));
    }

    fn cfg(regime: RegimeRule) -> SocietyConfig {
        SocietyConfig {
            n_agents: 30,
            initial_wealth: WealthDistribution::Constant { value: 1.0 },
            regime,
            epochs: 50,
            pairings_per_epoch: 1,
            seed: 7,
            unit_surplus: 1.0,
        }
    }

    #[test]
    fn parity_keeps_equality() {
        for regime in [
            RegimeRule::Authoritarian {
                power_exponent: 0.0,
            },
            RegimeRule::Institutional { cap: 1.0 },
        ] {
            let trace = run_society(&cfg(regime)).unwrap();
            assert!(trace.gini.iter().all(|&g| g == 0.0), "{regime:?}");
            assert_eq!(trace.gini.len(), 51);
        }
    }

    #[test]
    fn surplus_is_accounted_for() {
        let c = SocietyConfig {
            initial_wealth: WealthDistribution::Lognormal {
                mu: 0.0,
                sigma: 1.0,
            },
            ..cfg(RegimeRule::Authoritarian {
                power_exponent: 3.0,
            })
        };
        let trace = run_society(&c).unwrap();
        assert!(trace.max_conservation_error <= CONSERVATION_TOLERANCE);
        let injected = c.unit_surplus * (c.pairings_per_epoch * c.epochs * (c.n_agents / 2)) as f64;
        let growth = trace.total_wealth.last().unwrap() - trace.total_wealth[0];
        assert!((growth - injected).abs() / injected < 1e-9);
    }

    #[test]
    fn same_seed_same_trace() {
        let c = SocietyConfig {
            initial_wealth: WealthDistribution::Uniform { lo: 1.0, hi: 2.0 },
            ..cfg(RegimeRule::Institutional { cap: 1.5 })
        };
        assert_eq!(run_society(&c).unwrap(), run_society(&c).unwrap());
        let other = run_society(&SocietyConfig { seed: 8, ..c }).unwrap();
        assert_ne!(run_society(&c).unwrap(), other);
    }

    #[test]
    fn invalid_configs() {
        let base = cfg(RegimeRule::Institutional { cap: 1.5 });
        for bad in [
            SocietyConfig {
                n_agents: 1,
                ..base
            },
            SocietyConfig { epochs: 0, ..base },
            SocietyConfig {
                pairings_per_epoch: 0,
                ..base
            },
            SocietyConfig {
                unit_surplus: 0.0,
                ..base
            },
            SocietyConfig {
                regime: RegimeRule::Institutional { cap: 0.5 },
                ..base
            },
            SocietyConfig {
                regime: RegimeRule::Authoritarian {
                    power_exponent: -1.0,
                },
                ..base
            },
            SocietyConfig {
                initial_wealth: WealthDistribution::Uniform { lo: 2.0, hi: 1.0 },
                ..base
            },
            SocietyConfig {
                initial_wealth: WealthDistribution::Constant { value: 0.0 },
                ..base
            },
        ] {
            assert!(
                matches!(run_society(&bad), Err(Error::InvalidConfig { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn comparison_requires_matching_configs() {
        let a = cfg(RegimeRule::Authoritarian {
            power_exponent: 2.0,
        });
        let b = SocietyConfig {
            epochs: 3,
            ..cfg(RegimeRule::Institutional { cap: 1.2 })
        };
        assert!(matches!(
            compare_regimes(&a, &b, 2),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn identical_regimes_compare_equal() {
        let a = SocietyConfig {
            initial_wealth: WealthDistribution::Uniform { lo: 1.0, hi: 2.0 },
            ..cfg(RegimeRule::Authoritarian {
                power_exponent: 2.0,
            })
        };
        let report = compare_regimes(&a, &a, 4).unwrap();
        assert_eq!(report.mean_difference, 0.0);
        assert_eq!(report.sign, 0);
        assert_eq!(report.per_seed.len(), 4);

        let one_epoch = SocietyConfig { epochs: 1, ..a };
        let b = SocietyConfig {
            regime: RegimeRule::Institutional { cap: 1.2 },
            ..one_epoch
        };
        let report = compare_regimes(&one_epoch, &b, 3).unwrap();
        assert_eq!(report.per_seed.len(), 3);
        assert!(report.mean_gini_a.is_finite() && report.mean_gini_b.is_finite());
    }
}
