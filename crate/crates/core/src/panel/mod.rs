//! Panel data model: country × year × indicator observations with region
//! labels, the built-in study configurations, sample construction and
//! summary statistics.

mod countries;
mod sample;
mod study;
mod summary;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use countries::{country_by_code, country_table, CountryInfo};
pub use sample::{build_study_sample, CoverageNote, SampleRow, StudySample};
pub use study::{builtin_studies, find_study, StudyConfig, TREATED_COUNTRIES};
pub use summary::{describe, summary_stats, Group, SummaryCell, SummaryTable};

/// First and last year of the global study window.
pub const FIRST_YEAR: i32 = 1960;
pub const LAST_YEAR: i32 = 2014;

/// ISO-3166 alpha-3 country code (any short identifier in synthetic panels).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: impl Into<String>) -> Self {
        Self(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CountryCode {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Region label, stored verbatim (e.g. "Southern Europe").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(String);

impl Region {
    pub fn new(label: impl Into<String>) -> Self {
        Self(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Region {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// The indicators used by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Indicator {
    LifeExpectancyTotal,
    LifeExpectancyFemale,
    LifeExpectancyMale,
    InfantMortality,
    Under5Mortality,
    AdultMortalityFemale,
    AdultMortalityMale,
    GdpPerCapita,
    Population15To64,
}

impl Indicator {
    pub const ALL: [Indicator; 9] = [
        Indicator::LifeExpectancyTotal,
        Indicator::LifeExpectancyFemale,
        Indicator::LifeExpectancyMale,
        Indicator::InfantMortality,
        Indicator::Under5Mortality,
        Indicator::AdultMortalityFemale,
        Indicator::AdultMortalityMale,
        Indicator::GdpPerCapita,
        Indicator::Population15To64,
    ];

    /// The seven outcome variables, in reporting order.
    pub const OUTCOMES: [Indicator; 7] = [
        Indicator::LifeExpectancyTotal,
        Indicator::LifeExpectancyFemale,
        Indicator::LifeExpectancyMale,
        Indicator::InfantMortality,
        Indicator::Under5Mortality,
        Indicator::AdultMortalityFemale,
        Indicator::AdultMortalityMale,
    ];

    /// Canonical label used in CSV files and cache file names.
    pub fn label(self) -> &'static str {
        match self {
            Indicator::LifeExpectancyTotal => "life-expectancy-total",
            Indicator::LifeExpectancyFemale => "life-expectancy-female",
            Indicator::LifeExpectancyMale => "life-expectancy-male",
            Indicator::InfantMortality => "infant-mortality",
            Indicator::Under5Mortality => "under5-mortality",
            Indicator::AdultMortalityFemale => "adult-mortality-female",
            Indicator::AdultMortalityMale => "adult-mortality-male",
            Indicator::GdpPerCapita => "gdp-per-capita",
            Indicator::Population15To64 => "population-15-64",
        }
    }

    /// Short alias accepted on the command line.
    pub fn alias(self) -> &'static str {
        match self {
            Indicator::LifeExpectancyTotal => "le-total",
            Indicator::LifeExpectancyFemale => "le-female",
            Indicator::LifeExpectancyMale => "le-male",
            Indicator::InfantMortality => "imr",
            Indicator::Under5Mortality => "u5mr",
            Indicator::AdultMortalityFemale => "amr-female",
            Indicator::AdultMortalityMale => "amr-male",
            Indicator::GdpPerCapita => "gdp",
            Indicator::Population15To64 => "pop-15-64",
        }
    }

    /// Human-readable column heading.
    pub fn title(self) -> &'static str {
        match self {
            Indicator::LifeExpectancyTotal => "Life expectancy at birth, total",
            Indicator::LifeExpectancyFemale => "Life expectancy at birth, female",
            Indicator::LifeExpectancyMale => "Life expectancy at birth, male",
            Indicator::InfantMortality => "Infant mortality",
            Indicator::Under5Mortality => "Mortality under age 5",
            Indicator::AdultMortalityFemale => "Adult mortality, female",
            Indicator::AdultMortalityMale => "Adult mortality, male",
            Indicator::GdpPerCapita => "GDP per capita",
            Indicator::Population15To64 => "Population 15-64 (%)",
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Indicator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        Indicator::ALL
            .into_iter()
            .find(|i| {
                i.label().eq_ignore_ascii_case(key)
                    || i.alias().eq_ignore_ascii_case(key)
                    || crate::ingest::provider_code(*i).eq_ignore_ascii_case(key)
            })
            .ok_or_else(|| Error::InvalidDataset(format!("unknown indicator `{s}`")))
    }
}

impl From<Indicator> for String {
    fn from(i: Indicator) -> String {
        i.label().to_string()
    }
}

impl TryFrom<String> for Indicator {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One raw observation as it appears in the long-format CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub country: CountryCode,
    pub region: Region,
    pub year: i32,
    pub indicator: Indicator,
    pub value: Option<f64>,
}

/// Country × year × indicator observations with one region label per
/// country. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    window: (i32, i32),
    regions: BTreeMap<CountryCode, Region>,
    values: BTreeMap<(Indicator, CountryCode, i32), Option<f64>>,
}

impl PanelDataset {
    /// Builds a dataset over the default 1960–2014 window.
    pub fn from_observations<I>(observations: I) -> Result<Self>
    where
        I: IntoIterator<Item = Observation>,
    {
        Self::with_window(observations, (FIRST_YEAR, LAST_YEAR))
    }

    /// Builds a dataset, rejecting duplicates, conflicting region labels,
    /// out-of-window years and non-finite values.
    pub fn with_window<I>(observations: I, window: (i32, i32)) -> Result<Self>
    where
        I: IntoIterator<Item = Observation>,
    {
        if window.0 > window.1 {
            return Err(Error::InvalidDataset(format!(
                "empty window {}..{}",
                window.0, window.1
            )));
        }
        let mut regions = BTreeMap::new();
        let mut values = BTreeMap::new();
        for obs in observations {
            if obs.year < window.0 || obs.year > window.1 {
                return Err(Error::InvalidDataset(format!(
                    "{} {} {}: year outside {}..{}",
                    obs.country, obs.indicator, obs.year, window.0, window.1
                )));
            }
            if let Some(v) = obs.value {
                if !v.is_finite() {
                    return Err(Error::InvalidDataset(format!(
                        "{} {} {}: non-finite value",
                        obs.country, obs.indicator, obs.year
                    )));
                }
            }
            match regions.get(&obs.country) {
                Some(r) if *r != obs.region => {
                    return Err(Error::InvalidDataset(format!(
                        "{} carries two region labels: `{}` and `{}`",
                        obs.country, r, obs.region
                    )));
                }
                Some(_) => {}
                None => {
                    regions.insert(obs.country.clone(), obs.region.clone());
                }
            }
            let key = (obs.indicator, obs.country, obs.year);
            if values.contains_key(&key) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate observation for {} {} {}",
                    key.1, key.0, key.2
                )));
            }
            values.insert(key, obs.value);
        }
        Ok(Self {
            window,
            regions,
            values,
        })
    }

    pub fn window(&self) -> (i32, i32) {
        self.window
    }

    pub fn value(&self, country: &CountryCode, indicator: Indicator, year: i32) -> Option<f64> {
        self.values
            .get(&(indicator, country.clone(), year))
            .copied()
            .flatten()
    }

    pub fn region_of(&self, country: &CountryCode) -> Option<&Region> {
        self.regions.get(country)
    }

    pub fn contains_country(&self, country: &CountryCode) -> bool {
        self.regions.contains_key(country)
    }

    pub fn countries(&self) -> impl Iterator<Item = &CountryCode> {
        self.regions.keys()
    }

    pub fn indicators(&self) -> BTreeSet<Indicator> {
        self.values.keys().map(|(i, _, _)| *i).collect()
    }

    pub fn has_indicator(&self, indicator: Indicator) -> bool {
        self.values
            .range((indicator, CountryCode::new(""), i32::MIN)..)
            .next()
            .is_some_and(|((i, _, _), _)| *i == indicator)
    }

    /// Non-missing `(year, value)` pairs for one country, in year order.
    pub fn series(&self, country: &CountryCode, indicator: Indicator) -> Vec<(i32, f64)> {
        (self.window.0..=self.window.1)
            .filter_map(|y| self.value(country, indicator, y).map(|v| (y, v)))
            .collect()
    }

    /// Number of stored observations, missing values included.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// All observations in canonical order (indicator, country, year).
    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        self.values.iter().map(|((ind, c, y), v)| Observation {
            country: c.clone(),
            region: self.regions[c].clone(),
            year: *y,
            indicator: *ind,
            value: *v,
        })
    }

    /// Reads the long-format CSV (`country,region,year,indicator,value`).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        Self::with_window(read_observations(reader)?, (FIRST_YEAR, LAST_YEAR))
    }

    /// Writes the long-format CSV in canonical order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_observations(writer, self.observations())
    }
}

/// Parses long-format CSV rows; an empty value field is a missing value.
pub fn read_observations<R: Read>(reader: R) -> Result<Vec<Observation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["country", "region", "year", "indicator", "value"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidDataset(format!(
            "unexpected header {:?}, want {}",
            headers,
            expected.join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let year = rec[2]
            .trim()
            .parse::<i32>()
            .map_err(|_| Error::InvalidDataset(format!("bad year `{}`", &rec[2])))?;
        let value = match rec[4].trim() {
            "" => None,
            s => Some(
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidDataset(format!("bad value `{s}`")))?,
            ),
        };
        out.push(Observation {
            country: CountryCode::new(rec[0].trim()),
            region: Region::new(rec[1].trim()),
            year,
            indicator: rec[3].parse()?,
            value,
        });
    }
    Ok(out)
}

/// Writes observations as long-format CSV with LF line endings.
pub fn write_observations<W, I>(writer: W, observations: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Observation>,
{
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    wtr.write_record(["country", "region", "year", "indicator", "value"])?;
    for o in observations {
        wtr.write_record([
            o.country.as_str(),
            o.region.as_str(),
            &o.year.to_string(),
            o.indicator.label(),
            &o.value.map(format_value).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Shortest round-trip representation of a value.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v}")
}
