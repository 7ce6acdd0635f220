//! Randomized pairs: equal tokens exactly when the starred tables are equal.

mod common;

use sqlab_core::formula::{AggFn, FormulaKind};
use sqlab_core::theorem::{run_theorem_suite, SuiteConfig};

fn suite(
    kind: FormulaKind,
    aggregates: Option<(AggFn, Option<AggFn>)>,
) -> sqlab_core::theorem::TheoremReport {
    let mut config = SuiteConfig::new(kind, 1000, 7);
    config.aggregates = aggregates;
    run_theorem_suite(common::dump(), &config).unwrap()
}

#[test]
fn basic_class_has_no_violation() {
    let r = suite(FormulaKind::Basic, None);
    assert_eq!(r.pairs, 1000);
    assert!(r.holds(), "{}\n{:#?}", r.summary(), r.violations.first());
    assert!(
        r.token_equal > 100 && r.token_equal < 900,
        "{}",
        r.summary()
    );
}

#[test]
fn agg_class_has_no_violation() {
    let r = suite(FormulaKind::Agg, None);
    assert!(r.holds(), "{}\n{:#?}", r.summary(), r.violations.first());
    assert!(
        r.token_equal > 100 && r.token_equal < 900,
        "{}",
        r.summary()
    );
}

#[test]
fn blind_pairing_breaks_the_equivalence() {
    let r = suite(FormulaKind::Agg, Some((AggFn::Sum, Some(AggFn::Sum))));
    assert!(r.errors.is_empty());
    assert!(!r.violations.is_empty());
    assert!(r
        .violations
        .iter()
        .all(|v| v.outcome.tokens_equal() && !v.outcome.starred_equal));
}
