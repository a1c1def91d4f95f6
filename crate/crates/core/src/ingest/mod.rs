//! World Bank indicator ingestion: provider codes, HTTP client, cache.

mod cache;
mod client;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{
    country_by_code, CountryCode, Indicator, Observation, PanelDataset, Region, FIRST_YEAR,
    LAST_YEAR,
};

pub use cache::{Cache, Manifest, ManifestEntry, MANIFEST_FILE};
pub use client::{FetchOutput, RawRecord, WbClient, BASE_ENV, DEFAULT_BASE};

/// Region label for countries missing from the static table.
pub const UNCLASSIFIED: &str = "Unclassified";

/// World Bank WDI code for an indicator.
pub fn provider_code(indicator: Indicator) -> &'static str {
    match indicator {
        Indicator::LifeExpectancyTotal => "SP.DYN.LE00.IN",
        Indicator::LifeExpectancyFemale => "SP.DYN.LE00.FE.IN",
        Indicator::LifeExpectancyMale => "SP.DYN.LE00.MA.IN",
        Indicator::InfantMortality => "SP.DYN.IMRT.IN",
        Indicator::Under5Mortality => "SH.DYN.MORT",
        Indicator::AdultMortalityFemale => "SP.DYN.AMRT.FE",
        Indicator::AdultMortalityMale => "SP.DYN.AMRT.MA",
        Indicator::GdpPerCapita => "NY.GDP.PCAP.KD",
        Indicator::Population15To64 => "SP.POP.1564.TO.ZS",
    }
}

/// Which GDP per capita series to download.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GdpSeries {
    /// Constant US dollars.
    #[default]
    ConstantUsd,
    /// PPP, constant international dollars.
    Ppp,
}

/// Provider code honouring the GDP series choice.
pub fn provider_code_for(indicator: Indicator, gdp: GdpSeries) -> &'static str {
    match (indicator, gdp) {
        (Indicator::GdpPerCapita, GdpSeries::Ppp) => "NY.GDP.PCAP.PP.KD",
        _ => provider_code(indicator),
    }
}

fn region_for(country: &str, fallback: &str) -> Region {
    match country_by_code(country) {
        Some(info) => Region::new(info.region),
        None if fallback.is_empty() => Region::new(UNCLASSIFIED),
        None => Region::new(fallback),
    }
}

/// Merges the cached indicator files into a dataset. Every indicator in
/// `required` must be present; region labels come from the static country
/// table when the country is known.
pub fn build_dataset(cache: &Cache, required: &[Indicator]) -> Result<PanelDataset> {
    let mut all = Vec::new();
    for &ind in required {
        for mut o in cache.read_indicator(ind)? {
            o.region = region_for(o.country.as_str(), o.region.as_str());
            all.push(o);
        }
    }
    PanelDataset::from_observations(all)
}

/// Builds a dataset from whatever indicators the cache holds.
pub fn build_available_dataset(cache: &Cache) -> Result<PanelDataset> {
    let present = cache.indicators();
    if present.is_empty() {
        return Err(Error::MissingIndicator(
            cache.indicator_path(Indicator::LifeExpectancyTotal),
        ));
    }
    build_dataset(cache, &present)
}

/// Converts provider records into observations.
pub fn records_to_observations(indicator: Indicator, records: &[RawRecord]) -> Vec<Observation> {
    records
        .iter()
        .map(|r| Observation {
            country: CountryCode::new(r.country.as_str()),
            region: region_for(&r.country, ""),
            year: r.year,
            indicator,
            value: r.value.filter(|v| v.is_finite()),
        })
        .collect()
}

/// Whether the network may be used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchMode {
    Offline,
    /// Download indicators missing from the cache; with `refresh`, all of them.
    Online {
        refresh: bool,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchReport {
    pub fetched: Vec<Indicator>,
    pub cached: Vec<Indicator>,
    pub notes: Vec<String>,
}

/// Fills the cache for `indicators` over the global window.
pub fn fetch_into_cache(
    client: Option<&WbClient>,
    cache: &Cache,
    indicators: &[Indicator],
    countries: &[&str],
    mode: FetchMode,
    gdp: GdpSeries,
    fetched_at: &str,
) -> Result<FetchReport> {
    let mut report = FetchReport::default();
    for &ind in indicators {
        let need = match mode {
            FetchMode::Offline => false,
            FetchMode::Online { refresh } => refresh || !cache.has_indicator(ind),
        };
        if !need {
            if !cache.has_indicator(ind) {
                return Err(Error::Offline(format!(
                    "{} is not cached; run `fetch` online or point at the fixture",
                    ind.label()
                )));
            }
            cache.verify(ind)?;
            report.cached.push(ind);
            continue;
        }
        let client = client.ok_or_else(|| Error::Offline("no HTTP client configured".into()))?;
        let out = client.fetch_indicator(
            provider_code_for(ind, gdp),
            countries,
            (FIRST_YEAR, LAST_YEAR),
        )?;
        report
            .notes
            .extend(out.notes.iter().map(|n| format!("{}: {n}", ind.label())));
        cache.write_indicator(ind, records_to_observations(ind, &out.records), fetched_at)?;
        report.fetched.push(ind);
    }
    Ok(report)
}
