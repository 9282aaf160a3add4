use exsim_core::exchange::{equity_index, Motivation, Power};
use exsim_core::nonmarket::{
    accept_decision, equity_map, welfare_balance, ExchangeProposal, ExchangeRecord,
    ExternalInfluence, Verdict,
};
use exsim_core::Error;
use proptest::prelude::*;

fn proposal() -> impl Strategy<Value = ExchangeProposal> {
    (0.0..10.0f64, -5.0..10.0f64, 0.0..10.0f64, -5.0..10.0f64)
        .prop_map(|(ca, gb, cb, ga)| ExchangeProposal::new(ca, gb, cb, ga))
}

fn records() -> impl Strategy<Value = Vec<ExchangeRecord>> {
    prop::collection::vec(
        (
            prop::sample::select(vec!["north", "south", "coast", "hills"]),
            0.01..10.0f64,
        ),
        1..60,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(s, equity)| ExchangeRecord {
                stratum: s.to_owned(),
                equity,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn threats_push_b_toward_accepting(
        p in proposal(), t0 in 0.0..10.0f64, dt in 0.0..10.0f64, shield in 0.0..=1.0f64,
    ) {
        let none = ExternalInfluence::NONE;
        let low = welfare_balance(&p, &none, &ExternalInfluence::new(t0, shield)).unwrap();
        let high = welfare_balance(&p, &none, &ExternalInfluence::new(t0 + dt, shield)).unwrap();
        prop_assert!(high.m_b_effective.0 >= low.m_b_effective.0);
    }

    #[test]
    fn shields_pull_b_toward_refusing(
        p in proposal(), t in 0.0..10.0f64, s0 in 0.0..=1.0f64, s1 in 0.0..=1.0f64,
    ) {
        let none = ExternalInfluence::NONE;
        let (lo, hi) = (s0.min(s1), s0.max(s1));
        let thin = welfare_balance(&p, &none, &ExternalInfluence::new(t, lo)).unwrap();
        let thick = welfare_balance(&p, &none, &ExternalInfluence::new(t, hi)).unwrap();
        prop_assert!(thick.m_b_effective.0 <= thin.m_b_effective.0);
    }

    #[test]
    fn protecting_the_weak_side_lifts_equity_toward_one(
        ca in 0.0..5.0f64, gb in 0.0..5.0f64, cb in 0.0..5.0f64, ga in 0.0..5.0f64, t in 0.01..=1.0f64,
    ) {
        let p = ExchangeProposal::new(ca, gb, cb, ga);
        let none = ExternalInfluence::NONE;
        let sheet = welfare_balance(&p, &none, &none).unwrap();
        let Some(before) = sheet.equity else { return Ok(()) };
        prop_assume!(before < 1.0);
        // Below parity B is the weak side; its power k_b sits in the numerator.
        let k_b = sheet.k_b.0 * (1.0 + t * (1.0 / before - 1.0));
        let after = equity_index(sheet.m_a, sheet.k_a, sheet.m_b_raw, Power(k_b)).unwrap();
        prop_assert!(after > before);
        prop_assert!(after <= 1.0 + 1e-12);
    }

    #[test]
    fn acceptance_reads_only_the_signs(
        p in proposal(), a in -5.0..5.0f64, b in -5.0..5.0f64, scale in 0.01..100.0f64,
    ) {
        let mut sheet = welfare_balance(&p, &ExternalInfluence::NONE, &ExternalInfluence::NONE).unwrap();
        sheet.m_a_effective = Motivation(a);
        sheet.m_b_effective = Motivation(b);
        let v = accept_decision(&sheet);
        prop_assert_eq!(v, Verdict::from_signs(a > 0.0, b > 0.0));
        sheet.m_a_effective = Motivation(a * scale);
        sheet.m_b_effective = Motivation(b * scale);
        prop_assert_eq!(accept_decision(&sheet), v);
    }

    #[test]
    fn pooled_mean_weights_strata_by_size(recs in records()) {
        let map = equity_map(&recs).unwrap();
        let total: usize = map.strata.values().map(|s| s.count).sum();
        prop_assert_eq!(total, recs.len());
        let weighted = map.strata.values().map(|s| s.mean * s.count as f64).sum::<f64>() / total as f64;
        prop_assert!((weighted - map.pooled.mean).abs() <= 1e-9 * map.pooled.mean.max(1.0));
    }

    #[test]
    fn summaries_ignore_record_order(recs in records(), seed in any::<u64>()) {
        let mut shuffled = recs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed.wrapping_mul(i as u64 + 7) % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(equity_map(&recs).unwrap(), equity_map(&shuffled).unwrap());
    }
}

#[test]
fn anchored_acceptance_cases() {
    let none = ExternalInfluence::NONE;
    let symmetric = ExchangeProposal::new(2.0, 4.0, 2.0, 4.0);
    let sheet = welfare_balance(&symmetric, &none, &none).unwrap();
    assert_eq!(sheet.verdict, Verdict::BothAccept);
    assert_eq!(sheet.equity, Some(1.0));

    // B gives 3, receives 2: m_b_raw = -1.
    let extortion = ExchangeProposal::new(1.0, 2.0, 3.0, 4.0);
    let threatened = welfare_balance(&extortion, &none, &ExternalInfluence::new(3.0, 0.0)).unwrap();
    assert_eq!(threatened.m_b_raw.0, -1.0);
    assert_eq!(threatened.m_b_effective.0, 2.0);
    assert_eq!(threatened.verdict, Verdict::BothAccept);
    assert_eq!(threatened.equity, None);

    let shielded = welfare_balance(&extortion, &none, &ExternalInfluence::new(3.0, 1.0)).unwrap();
    assert_eq!(shielded.m_b_effective.0, -1.0);
    assert_eq!(shielded.verdict, Verdict::BRefuses);
}

#[test]
fn empty_records_are_rejected() {
    assert!(matches!(equity_map(&[]), Err(Error::EmptyInput)));
}
