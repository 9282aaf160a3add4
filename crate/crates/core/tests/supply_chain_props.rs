use exsim_core::exchange::{PerceptionView, ReservePrice, Role};
use exsim_core::negotiation::ConcessionRates;
use exsim_core::supply_chain::{
    propagate, squeeze_report, ChainSpec, ChainStage, StageSettlement, DEFAULT_CHAIN_GAP_EPSILON,
    DEFAULT_CHAIN_MAX_STEPS,
};
use proptest::prelude::*;

fn view(role: Role) -> impl Strategy<Value = PerceptionView> {
    (0.7..1.5f64, 0.7..1.5f64, 0.7..1.5f64, 0.7..1.5f64)
        .prop_map(move |(m, mo, k, ko)| PerceptionView::new(role, m, mo, k, ko))
}

fn stage(i: usize) -> impl Strategy<Value = ChainStage> {
    (
        view(Role::Seller),
        view(Role::Buyer),
        0.1..0.5f64,
        0.0..0.02f64,
        (0.02..0.3f64, 0.0..0.2f64, 0.02..0.3f64, 0.0..0.2f64),
    )
        .prop_map(
            move |(seller_view, buyer_view, reserve_frac, margin_floor, (a, ap, b, bp))| {
                ChainStage {
                    name: format!("stage{i}"),
                    seller_view,
                    buyer_view,
                    base_seller_reserve: ReservePrice(reserve_frac),
                    margin_floor,
                    rates: ConcessionRates::new(a, ap, b, bp).unwrap(),
                }
            },
        )
}

/// Seller reserves are drawn as fractions of a running price estimate so
/// that deeper stages ask for less than they are likely to be offered.
fn chain() -> impl Strategy<Value = ChainSpec> {
    (3usize..=5, 0.5..5.0f64)
        .prop_flat_map(|(n, anchor)| {
            let stages: Vec<_> = (0..n).map(stage).collect();
            (Just(anchor), stages)
        })
        .prop_map(|(anchor, mut stages)| {
            let mut estimate = anchor;
            for s in &mut stages {
                let frac = s.base_seller_reserve.0;
                s.base_seller_reserve = ReservePrice(estimate * frac);
                estimate *= 0.5 * (1.0 + frac);
            }
            ChainSpec {
                anchor_price: anchor,
                stages,
                gap_epsilon: DEFAULT_CHAIN_GAP_EPSILON,
                max_steps: DEFAULT_CHAIN_MAX_STEPS,
            }
        })
}

fn settlements(spec: &ChainSpec) -> Vec<Option<f64>> {
    propagate(spec)
        .unwrap()
        .iter()
        .map(|r| r.settlement.price())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn margins_and_terminal_price_account_for_the_anchor(spec in chain()) {
        let results = propagate(&spec).unwrap();
        let report = squeeze_report(&results);
        let broken = results.iter().any(|r| matches!(r.settlement, StageSettlement::Breakdown { .. }));
        match report.total_share {
            Some(total) => {
                prop_assert!(!broken);
                prop_assert!((total - 1.0).abs() <= 1e-9, "total share {total}");
            }
            None => prop_assert!(broken),
        }
        for r in &results {
            if let (Some(incoming), Some(p), Some(m)) = (r.incoming_price, r.settlement.price(), r.margin) {
                prop_assert_eq!(m, incoming - p);
            }
        }
    }

    #[test]
    fn a_breakdown_marks_every_deeper_stage(spec in chain()) {
        let results = propagate(&spec).unwrap();
        if let Some(k) = results.iter().position(|r| r.settlement.price().is_none()) {
            for r in &results[k..] {
                prop_assert_eq!(r.settlement, StageSettlement::Breakdown { at_stage: k });
            }
        }
    }

    #[test]
    fn stronger_buyer_squeezes_its_stage_and_everything_deeper(
        spec in chain(), pick in 0usize..5, bump in 1.0..3.0f64,
    ) {
        let k = pick % spec.stages.len();
        let mut stronger = spec.clone();
        stronger.stages[k].buyer_view.own_power.0 *= bump;
        let before = propagate(&spec).unwrap();
        let after = propagate(&stronger).unwrap();
        for j in k..spec.stages.len() {
            if let (Some(p0), Some(p1)) = (before[j].settlement.price(), after[j].settlement.price()) {
                prop_assert!(p1 <= p0, "stage {j}: {p1} > {p0}");
            }
        }
        if let (Some(m0), Some(m1)) = (before[k].margin, after[k].margin) {
            prop_assert!(m1 >= m0, "stage {k} margin {m1} < {m0}");
        }
    }

    #[test]
    fn perturbing_a_stage_leaves_shallower_stages_identical(
        spec in chain(), pick in 0usize..5, bump in 0.5..2.0f64,
    ) {
        let k = pick % spec.stages.len();
        let mut perturbed = spec.clone();
        perturbed.stages[k].seller_view.own_power.0 *= bump;
        perturbed.stages[k].base_seller_reserve.0 *= bump;
        let before = propagate(&spec).unwrap();
        let after = propagate(&perturbed).unwrap();
        prop_assert_eq!(&before[..k], &after[..k]);
    }

    #[test]
    fn propagation_is_deterministic(spec in chain()) {
        prop_assert_eq!(settlements(&spec), settlements(&spec));
    }
}

#[test]
fn two_balanced_stages_settle_near_their_reserve_midpoints() {
    let balanced = |name: &str, reserve: f64| ChainStage {
        name: name.into(),
        seller_view: PerceptionView::balanced(Role::Seller),
        buyer_view: PerceptionView::balanced(Role::Buyer),
        base_seller_reserve: ReservePrice(reserve),
        margin_floor: 0.0,
        rates: ConcessionRates::new(0.2, 0.1, 0.2, 0.1).unwrap(),
    };
    let spec = ChainSpec {
        anchor_price: 10.0,
        stages: vec![balanced("retail", 6.0), balanced("farm", 2.0)],
        gap_epsilon: DEFAULT_CHAIN_GAP_EPSILON,
        max_steps: DEFAULT_CHAIN_MAX_STEPS,
    };
    let results = propagate(&spec).unwrap();
    let first = results[0].settlement.price().unwrap();
    assert!((first - 8.0).abs() < 1e-2, "{first}");
    let second = results[1].settlement.price().unwrap();
    assert!((second - 0.5 * (first + 2.0)).abs() < 1e-2, "{second}");
    assert!(results.iter().all(|r| r.margin.unwrap() > 0.0));
    let total = squeeze_report(&results).total_share.unwrap();
    assert!((total - 1.0).abs() <= 1e-9);
}
