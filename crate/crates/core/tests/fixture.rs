//! Checks against the frozen World Bank snapshot in `data/fixture`.

mod common;

use oilpanel_core::did::{did_estimate, did_table, DidCell, DidSpec, DidTableOptions};
use oilpanel_core::event_study::{event_study_estimate, EventOptions};
use oilpanel_core::ingest::{build_dataset, Cache};
use oilpanel_core::panel::{
    build_study_sample, builtin_studies, find_study, summary_stats, Group, Indicator, StudyConfig,
};
use oilpanel_core::synth::{run_synth, SynthOptions};
use oilpanel_core::unit_root::{llc_test, residual_panel, LlcOptions};

const LE: Indicator = Indicator::LifeExpectancyTotal;
const IMR: Indicator = Indicator::InfantMortality;
const GDP: Indicator = Indicator::GdpPerCapita;

fn study(key: &str) -> StudyConfig {
    find_study(key).unwrap()
}

/// Taiwan has no World Bank series; Somalia is absent from the snapshot.
#[test]
fn fixture_covers_study_countries() {
    let ds = common::fixture();
    assert_eq!(ds.window(), (1960, 2014));
    let mut missing = Vec::new();
    for s in builtin_studies() {
        s.validate().unwrap();
        missing.extend(
            s.countries()
                .filter(|c| !ds.contains_country(c))
                .map(|c| c.to_string()),
        );
    }
    missing.sort();
    assert_eq!(missing, ["SOM", "TWN"]);
}

#[test]
fn rebuilding_from_the_cache_is_identical() {
    let cache = Cache::new(common::fixture_dir());
    let mut a = Vec::new();
    let mut b = Vec::new();
    build_dataset(&cache, &[LE, IMR, GDP])
        .unwrap()
        .write_csv(&mut a)
        .unwrap();
    build_dataset(&cache, &[LE, IMR, GDP])
        .unwrap()
        .write_csv(&mut b)
        .unwrap();
    assert_eq!(a, b);
    for ind in [LE, IMR, GDP] {
        cache.verify(ind).unwrap();
    }
}

#[test]
fn ecuador_life_expectancy_sample_has_715_rows() {
    let ds = common::fixture();
    let sample = build_study_sample(&ds, &study("ecuador").with_outcome(LE)).unwrap();
    assert_eq!(sample.len(), 715);
    assert_eq!(sample.countries().len(), 13);
}

#[test]
fn summary_spot_checks() {
    let ds = common::fixture();
    let t = summary_stats(&ds, &study("malaysia"), &[LE]);
    let le = t.get(Group::Treated, LE);
    assert_eq!(le.n, 55);
    assert!((le.mean.unwrap() - 69.060).abs() <= 1.0);
    let t = summary_stats(&ds, &study("denmark"), &[IMR]);
    assert!((t.get(Group::Treated, IMR).mean.unwrap() - 8.803).abs() <= 1.5);
}

/// The snapshot carries GDP per capita in constant 2000 USD, which sits
/// well below the published treated mean for Malaysia.
#[test]
#[ignore = "fixture GDP series is constant-2000 USD; the published mean uses a different series"]
fn malaysia_gdp_mean_within_ten_percent() {
    let ds = common::fixture();
    let t = summary_stats(&ds, &study("malaysia"), &[GDP]);
    let m = t.get(Group::Treated, GDP).mean.unwrap();
    assert!((m / 5355.235 - 1.0).abs() <= 0.10, "mean {m}");
}

#[test]
fn arab_spring_rows_follow_their_studies() {
    let ds = common::fixture();
    let table = did_table(
        &ds,
        &builtin_studies(),
        &[LE],
        DidTableOptions {
            arab_spring: true,
            ..DidTableOptions::default()
        },
    );
    let labels: Vec<(&str, Option<i32>)> = table
        .rows
        .iter()
        .map(|r| (r.study_id.as_str(), r.end_year_override))
        .collect();
    assert_eq!(labels.len(), 14);
    assert_eq!(
        &labels[2..8],
        &[
            ("yemen", None),
            ("yemen", Some(2010)),
            ("oman", None),
            ("oman", Some(2010)),
            ("syria", None),
            ("syria", Some(2010)),
        ]
    );
    let n_of = |i: usize| match &table.rows[i].cells[0] {
        DidCell::Estimate { n, .. } => *n,
        DidCell::Unavailable { reason } => panic!("{reason}"),
    };
    // Four fewer years for each of the nine countries.
    assert_eq!(n_of(2) - n_of(3), 9 * 4);
}

#[test]
fn ecuador_residuals_form_thirteen_full_panels_and_reject() {
    let ds = common::fixture();
    let r = did_estimate(&ds, &DidSpec::new(study("ecuador"), LE)).unwrap();
    let panel = residual_panel(&r.fit).unwrap();
    assert_eq!(panel.series.len(), 13);
    assert!(panel.series.iter().all(|s| s.values.len() == 55));
    let llc = llc_test(&panel, LlcOptions::default()).unwrap();
    assert!(llc.t_star < 0.0);
    assert!(llc.p_value < 0.01);
    assert_eq!(llc.stars, "***");
}

#[test]
fn yemen_event_year_override_rebins() {
    let ds = common::fixture();
    let base = event_study_estimate(&ds, &study("yemen"), LE, &EventOptions::default()).unwrap();
    let moved = study("yemen").with_event_year(1988).unwrap();
    let r = event_study_estimate(&ds, &moved, LE, &EventOptions::default()).unwrap();
    assert_eq!(r.event_year, 1988);
    // 2014 is relative year 26 instead of 23.
    assert_eq!(base.bins.last().unwrap().label, "+21..+23");
    assert_eq!(r.bins.last().unwrap().label, "+24..+26");
    assert_eq!(r.n, base.n);
}

#[test]
fn denmark_post_bins_are_negative() {
    let ds = common::fixture();
    let r = event_study_estimate(&ds, &study("denmark"), LE, &EventOptions::default()).unwrap();
    let first = r.bin("+3..+5").unwrap();
    assert!(first.estimate < 0.0 && first.p < 0.01);
    assert!(r
        .bins
        .iter()
        .filter(|b| b.index >= 1)
        .all(|b| b.estimate < 0.0));
}

#[test]
fn synth_flags_yemen_and_keeps_ecuador() {
    let ds = common::fixture();
    let opts = SynthOptions::default();
    let yemen = run_synth(&ds, &study("yemen"), LE, &opts).unwrap();
    assert!(yemen.poor_overlap);
    assert!(yemen
        .notes
        .iter()
        .any(|n| n.contains("poor pre-event overlap")));

    let ecu = run_synth(&ds, &study("ecuador"), LE, &opts).unwrap();
    assert!(!ecu.poor_overlap);
    assert!((ecu.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(ecu.curve.first().unwrap().year, 1960);
    assert_eq!(ecu.curve.last().unwrap().year, 2014);
    assert!(ecu.curve.last().unwrap().gap.unwrap() > 0.0);
}

#[test]
fn synth_is_deterministic() {
    let ds = common::fixture();
    let a = run_synth(&ds, &study("norway"), IMR, &SynthOptions::default()).unwrap();
    let b = run_synth(&ds, &study("norway"), IMR, &SynthOptions::default()).unwrap();
    let bits = |r: &oilpanel_core::synth::SynthResult| -> Vec<u64> {
        r.weights.iter().chain(&r.v).map(|x| x.to_bits()).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}
