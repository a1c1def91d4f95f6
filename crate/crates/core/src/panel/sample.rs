use std::fmt;

use serde::Serialize;

use super::{CountryCode, Indicator, PanelDataset, Region, StudyConfig};
use crate::error::{Error, Result};

/// One retained (country, year) observation of the study outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub country: CountryCode,
    pub region: Region,
    pub year: i32,
    pub value: f64,
    pub treated: bool,
    /// `year - event_year`.
    pub relative_year: i32,
}

/// Which study countries could not contribute rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CoverageNote {
    /// Countries entirely absent from the dataset.
    pub absent: Vec<CountryCode>,
    /// Countries present but with no non-missing outcome value in the window.
    pub no_outcome: Vec<CountryCode>,
}

impl CoverageNote {
    pub fn is_complete(&self) -> bool {
        self.absent.is_empty() && self.no_outcome.is_empty()
    }
}

impl fmt::Display for CoverageNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[CountryCode]| v.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" ");
        match (self.absent.is_empty(), self.no_outcome.is_empty()) {
            (true, true) => f.write_str("complete"),
            (false, true) => write!(f, "absent: {}", join(&self.absent)),
            (true, false) => write!(f, "no outcome data: {}", join(&self.no_outcome)),
            (false, false) => write!(
                f,
                "absent: {}; no outcome data: {}",
                join(&self.absent),
                join(&self.no_outcome)
            ),
        }
    }
}

/// The regression sample for one study and outcome. Rows with a missing
/// outcome are not present, so `len()` is the estimation N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySample {
    pub study_id: String,
    pub treated: CountryCode,
    pub event_year: i32,
    pub outcome: Indicator,
    pub window: (i32, i32),
    pub rows: Vec<SampleRow>,
    pub coverage: CoverageNote,
}

impl StudySample {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct countries with at least one row, sorted.
    pub fn countries(&self) -> Vec<&CountryCode> {
        let mut cs: Vec<&CountryCode> = self.rows.iter().map(|r| &r.country).collect();
        cs.sort();
        cs.dedup();
        cs
    }

    pub fn outcome_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }
}

/// Collects the non-missing outcome rows of the treated country and its
/// controls over the study window, sorted by (country, year).
pub fn build_study_sample(dataset: &PanelDataset, config: &StudyConfig) -> Result<StudySample> {
    config.validate()?;
    let mut coverage = CoverageNote::default();
    let mut rows = Vec::new();
    for country in config.countries() {
        if !dataset.contains_country(country) {
            coverage.absent.push(country.clone());
            continue;
        }
        let region = config
            .region_of
            .get(country)
            .or_else(|| dataset.region_of(country))
            .cloned()
            .expect("validated config carries every region");
        let before = rows.len();
        for year in config.start_year..=config.end_year {
            if let Some(value) = dataset.value(country, config.outcome, year) {
                rows.push(SampleRow {
                    country: country.clone(),
                    region: region.clone(),
                    year,
                    value,
                    treated: *country == config.treated,
                    relative_year: year - config.event_year,
                });
            }
        }
        if rows.len() == before {
            coverage.no_outcome.push(country.clone());
        }
    }
    let has_pre = rows
        .iter()
        .any(|r| r.treated && r.year <= config.event_year);
    if !has_pre {
        return Err(Error::StudyUndefined(format!(
            "{}: treated country {} has no pre-event {} data",
            config.id, config.treated, config.outcome
        )));
    }
    rows.sort_by(|a, b| (&a.country, a.year).cmp(&(&b.country, b.year)));
    coverage.absent.sort();
    coverage.no_outcome.sort();
    Ok(StudySample {
        study_id: config.id.clone(),
        treated: config.treated.clone(),
        event_year: config.event_year,
        outcome: config.outcome,
        window: (config.start_year, config.end_year),
        rows,
        coverage,
    })
}
