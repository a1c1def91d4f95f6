#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use oilpanel_core::ingest::{build_available_dataset, Cache};
use oilpanel_core::panel::{
    CountryCode, Indicator, Observation, PanelDataset, Region, StudyConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixture")
}

pub fn fixture() -> PanelDataset {
    build_available_dataset(&Cache::new(fixture_dir())).expect("fixture loads")
}

pub const FIRST: i32 = 1960;
pub const LAST: i32 = 2014;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Study over `n` countries (`T00` treated, `C01..` controls) in one region.
pub fn toy_study(n: usize, event_year: i32) -> StudyConfig {
    let treated = CountryCode::new("T00");
    let controls: Vec<CountryCode> = (1..n)
        .map(|i| CountryCode::new(format!("C{i:02}")))
        .collect();
    let region_of: BTreeMap<CountryCode, Region> = std::iter::once(treated.clone())
        .chain(controls.iter().cloned())
        .map(|c| (c, Region::new("Test")))
        .collect();
    StudyConfig {
        id: "toy".into(),
        name: "Toy".into(),
        treated,
        controls,
        region_of,
        event_year,
        start_year: FIRST,
        end_year: LAST,
        outcome: Indicator::LifeExpectancyTotal,
    }
}

/// `y = alpha_c + gamma_t + effect * post + N(0, sd^2)` for every country
/// and year of `study`.
pub fn twfe_panel(study: &StudyConfig, effect: f64, sd: f64, rng: &mut ChaCha8Rng) -> PanelDataset {
    let shock = Normal::new(0.0, 1.0).unwrap();
    let noise = Normal::new(0.0, sd).unwrap();
    let gamma: Vec<f64> = (FIRST..=LAST).map(|_| shock.sample(rng)).collect();
    let mut obs = Vec::new();
    for c in study.countries() {
        let alpha = 60.0 + 5.0 * shock.sample(rng);
        for (i, year) in (FIRST..=LAST).enumerate() {
            let post = (*c == study.treated && year > study.event_year) as u8 as f64;
            obs.push(Observation {
                country: c.clone(),
                region: study.region_of[c].clone(),
                year,
                indicator: study.outcome,
                value: Some(alpha + gamma[i] + effect * post + noise.sample(rng)),
            });
        }
    }
    PanelDataset::from_observations(obs).unwrap()
}
