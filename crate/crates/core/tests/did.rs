mod common;

use oilpanel_core::did::{did_estimate, did_table, DidCell, DidSpec, DidTableOptions};
use oilpanel_core::error::Error;
use oilpanel_core::event_study::{event_study_estimate, EventOptions};
use oilpanel_core::panel::Indicator;
use oilpanel_core::regress::{ReferenceOrder, RegionCoding, SeKind};

const LE: Indicator = Indicator::LifeExpectancyTotal;

#[test]
fn recovers_injected_effect() {
    let study = common::toy_study(12, 1980);
    let mut rng = common::rng(7);
    let mut deltas = Vec::new();
    for _ in 0..40 {
        let ds = common::twfe_panel(&study, 3.0, 0.5, &mut rng);
        let r = did_estimate(&ds, &DidSpec::new(study.clone(), LE)).unwrap();
        assert_eq!(r.n, 12 * 55);
        deltas.push(r.delta);
    }
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    assert!((mean - 3.0).abs() < 0.1, "mean {mean}");
}

#[test]
fn reference_category_and_coding_do_not_move_delta() {
    let study = common::toy_study(6, 1975);
    let ds = common::twfe_panel(&study, -1.0, 0.5, &mut common::rng(3));
    let base = did_estimate(&ds, &DidSpec::new(study.clone(), LE)).unwrap();
    let mut spec = DidSpec::new(study.clone(), LE);
    spec.fe.reference = ReferenceOrder::Last;
    let last = did_estimate(&ds, &spec).unwrap();
    spec.fe.region_coding = RegionCoding::ByLabel;
    let by_label = did_estimate(&ds, &spec).unwrap();
    for other in [&last, &by_label] {
        assert!((other.delta - base.delta).abs() < 1e-9);
        assert!((other.se - base.se).abs() < 1e-9);
        assert!((other.r_squared - base.r_squared).abs() < 1e-12);
    }
}

#[test]
fn all_zero_post_is_unavailable() {
    let study = common::toy_study(5, common::LAST);
    let ds = common::twfe_panel(&study, 0.0, 0.5, &mut common::rng(1));
    let err = did_estimate(&ds, &DidSpec::new(study.clone(), LE)).unwrap_err();
    assert!(matches!(err, Error::NotIdentified(_)));
    let table = did_table(&ds, &[study], &[LE], DidTableOptions::default());
    assert!(matches!(
        table.rows[0].cells[0],
        DidCell::Unavailable { .. }
    ));
}

#[test]
fn missing_outcome_is_an_unavailable_cell() {
    let study = common::toy_study(5, 1980);
    let ds = common::twfe_panel(&study, 1.0, 0.5, &mut common::rng(2));
    let table = did_table(
        &ds,
        &[study],
        &[LE, Indicator::InfantMortality],
        DidTableOptions::default(),
    );
    assert!(matches!(table.rows[0].cells[0], DidCell::Estimate { .. }));
    assert!(matches!(
        table.rows[0].cells[1],
        DidCell::Unavailable { .. }
    ));
}

#[test]
fn clustered_se_keeps_the_coefficient() {
    let study = common::toy_study(8, 1985);
    let ds = common::twfe_panel(&study, 2.0, 0.5, &mut common::rng(11));
    let a = did_estimate(&ds, &DidSpec::new(study.clone(), LE)).unwrap();
    let mut spec = DidSpec::new(study, LE);
    spec.se = SeKind::ClusterCountry;
    let b = did_estimate(&ds, &spec).unwrap();
    assert!((a.delta - b.delta).abs() < 1e-12);
    assert!(b.se > 0.0 && b.se != a.se);
}

#[test]
fn truncation_shrinks_the_sample() {
    let study = common::toy_study(6, 1980);
    let ds = common::twfe_panel(&study, 1.0, 0.5, &mut common::rng(5));
    let full = did_estimate(&ds, &DidSpec::new(study.clone(), LE)).unwrap();
    let cut = did_estimate(&ds, &DidSpec::new(study, LE).with_end_year(2010)).unwrap();
    assert_eq!(full.n - cut.n, 6 * 4);
    assert_eq!(cut.end_year, 2010);
}

/// With a constant effect, every post bin estimates the same effect and the
/// pre bins estimate zero.
#[test]
fn event_bins_agree_with_constant_effect() {
    let study = common::toy_study(12, 1980);
    let ds = common::twfe_panel(&study, 3.0, 0.05, &mut common::rng(9));
    let did = did_estimate(&ds, &DidSpec::new(study.clone(), LE)).unwrap();
    let ev = event_study_estimate(&ds, &study, LE, &EventOptions::default()).unwrap();
    for b in &ev.bins {
        let expected = if b.index >= 1 {
            3.0
        } else if b.index < 0 {
            0.0
        } else {
            2.0
        };
        assert!(
            (b.estimate - expected).abs() < 0.2,
            "{} {}",
            b.label,
            b.estimate
        );
    }
    assert!((did.delta - 3.0).abs() < 0.2);
}
