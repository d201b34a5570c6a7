use culprit_core::taxonomy::{
    has_unchecked_tactics, validate_label, LabelViolation, Tactic, TaxonomyLabel, TopCategory, ROWS,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn validation_follows_the_table(
        top in proptest::sample::select(TopCategory::ALL.to_vec()),
        row in 0usize..ROWS.len(),
        tactics in proptest::collection::btree_set(1u8..=11, 0..5),
    ) {
        let r = &ROWS[row];
        let label = TaxonomyLabel {
            top,
            sub: r.sub,
            tactics: tactics.iter().map(|&n| Tactic::new(n).unwrap()).collect(),
            behavior: Default::default(),
        };
        let v = validate_label(&label);
        let wrong_top = v.iter().any(|x| matches!(x, LabelViolation::SubNotUnderTop { .. }));
        prop_assert_eq!(wrong_top, top != r.top);
        let unlisted: Vec<u8> = v
            .iter()
            .filter_map(|x| match x {
                LabelViolation::TacticNotListed { tactic, .. } => Some(tactic.number()),
                _ => None,
            })
            .collect();
        let expected: Vec<u8> = if r.tactics.is_empty() {
            vec![]
        } else {
            tactics.iter().copied().filter(|t| !r.tactics.contains(t)).collect()
        };
        prop_assert_eq!(unlisted, expected);
        prop_assert_eq!(has_unchecked_tactics(&label), r.tactics.is_empty() && !tactics.is_empty());

        let json = serde_json::to_string(&label).unwrap();
        prop_assert_eq!(serde_json::from_str::<TaxonomyLabel>(&json).unwrap(), label);
    }
}

#[test]
fn tactic_range() {
    assert!(Tactic::new(0).is_none());
    assert!(Tactic::new(12).is_none());
    assert_eq!(Tactic::all().count(), 11);
    assert_eq!(
        serde_json::to_string(&Tactic::new(6).unwrap()).unwrap(),
        "\"P6\""
    );
}
