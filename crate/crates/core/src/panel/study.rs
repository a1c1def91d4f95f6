use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::countries::{
    country_by_code, EAST_ASIA, LATIN_AMERICA, MIDDLE_EAST, NORTH_EASTERN_EUROPE, SOUTHERN_EUROPE,
    SUB_SAHARAN_AFRICA,
};
use super::{CountryCode, Indicator, Region, FIRST_YEAR, LAST_YEAR};
use crate::error::{Error, Result};

/// Countries that experienced a major oil discovery, with their event years.
/// None of them may serve as a control.
pub const TREATED_COUNTRIES: [(&str, i32); 11] = [
    ("OMN", 1966),
    ("NLD", 1966),
    ("SYR", 1968),
    ("MYS", 1971),
    ("ECU", 1972),
    ("NOR", 1972),
    ("NZL", 1976),
    ("GBR", 1976),
    ("DNK", 1982),
    ("YEM", 1991),
    ("GNQ", 1992),
];

/// One treated country with its control group, event year and window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Short identifier, e.g. `ecuador`.
    pub id: String,
    /// Display name, e.g. `Ecuador`.
    pub name: String,
    pub treated: CountryCode,
    pub controls: Vec<CountryCode>,
    pub region_of: BTreeMap<CountryCode, Region>,
    pub event_year: i32,
    pub start_year: i32,
    pub end_year: i32,
    pub outcome: Indicator,
}

impl StudyConfig {
    /// Checks the configuration invariants.
    pub fn validate(&self) -> Result<()> {
        if self.controls.is_empty() {
            return Err(Error::InvalidStudy(format!("{}: no controls", self.id)));
        }
        if self.controls.contains(&self.treated) {
            return Err(Error::InvalidStudy(format!(
                "{}: treated country {} is listed as a control",
                self.id, self.treated
            )));
        }
        if let Some(c) = self
            .controls
            .iter()
            .find(|c| TREATED_COUNTRIES.iter().any(|(t, _)| *t == c.as_str()))
        {
            return Err(Error::InvalidStudy(format!(
                "{}: control {} is itself a treated country",
                self.id, c
            )));
        }
        if !(self.start_year <= self.event_year && self.event_year <= self.end_year) {
            return Err(Error::InvalidStudy(format!(
                "{}: need start {} <= event {} <= end {}",
                self.id, self.start_year, self.event_year, self.end_year
            )));
        }
        for c in std::iter::once(&self.treated).chain(&self.controls) {
            if !self.region_of.contains_key(c) {
                return Err(Error::InvalidStudy(format!(
                    "{}: no region for {}",
                    self.id, c
                )));
            }
        }
        Ok(())
    }

    /// Treated country followed by the controls.
    pub fn countries(&self) -> impl Iterator<Item = &CountryCode> {
        std::iter::once(&self.treated).chain(self.controls.iter())
    }

    pub fn with_outcome(mut self, outcome: Indicator) -> Self {
        self.outcome = outcome;
        self
    }

    /// Overrides the event year (e.g. an alternative dating of the discovery).
    pub fn with_event_year(mut self, year: i32) -> Result<Self> {
        self.event_year = year;
        self.validate()?;
        Ok(self)
    }

    /// Truncates the sample window at `year`.
    pub fn with_end_year(mut self, year: i32) -> Result<Self> {
        self.end_year = year;
        self.validate()?;
        Ok(self)
    }

    /// Distinct region labels across the study's countries.
    pub fn region_labels(&self) -> Vec<&Region> {
        let mut labels: Vec<&Region> = self.region_of.values().collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

struct Pool {
    regions: &'static [&'static str],
    members: &'static [&'static str],
}

// Control pools after the narrative exclusions (Cambodia and Vietnam dropped
// from East Asia; Rwanda, Congo, Nigeria and Botswana never enter Africa).
const EAST_ASIA_POOL: Pool = Pool {
    regions: &[EAST_ASIA],
    members: &[
        "CHN", "HKG", "IDN", "JPN", "KOR", "LAO", "MNG", "PHL", "SGP", "TWN", "THA",
    ],
};

const LATIN_AMERICA_POOL: Pool = Pool {
    regions: &[LATIN_AMERICA],
    members: &[
        "CRI", "CUB", "DOM", "SLV", "GTM", "HND", "JAM", "NIC", "PAN", "PRY", "PRI", "URY",
    ],
};

const MIDDLE_EAST_POOL: Pool = Pool {
    regions: &[MIDDLE_EAST],
    members: &["DJI", "EGY", "ISR", "JOR", "LBN", "MAR", "TUN", "TUR"],
};

const EUROPE_POOL: Pool = Pool {
    regions: &[NORTH_EASTERN_EUROPE, SOUTHERN_EUROPE],
    members: &[
        "BEL", "FIN", "FRA", "DEU", "IRL", "SWE", "CHE", "CZE", "HUN", "POL", "GRC", "ITA", "PRT",
        "ESP",
    ],
};

const AFRICA_POOL: Pool = Pool {
    regions: &[SUB_SAHARAN_AFRICA],
    members: &[
        "BEN", "BFA", "BDI", "CMR", "CPV", "CAF", "TCD", "CIV", "GMB", "GHA", "GIN", "KEN", "LSO",
        "LBR", "MDG", "MWI", "MLI", "MRT", "MUS", "MOZ", "NAM", "NER", "SEN", "SOM", "SDN", "SWZ",
        "TZA", "TGO", "UGA", "ZMB", "ZWE",
    ],
};

fn study(id: &str, treated: &str, pool: &Pool) -> StudyConfig {
    let event_year = TREATED_COUNTRIES
        .iter()
        .find(|(c, _)| *c == treated)
        .map(|(_, y)| *y)
        .expect("treated country listed in TREATED_COUNTRIES");
    let info = country_by_code(treated).expect("treated country in static table");
    let mut region_of = BTreeMap::new();
    region_of.insert(CountryCode::new(treated), Region::new(info.region));
    let controls: Vec<CountryCode> = pool.members.iter().map(|c| CountryCode::new(*c)).collect();
    for c in &controls {
        let ci = country_by_code(c.as_str()).expect("control in static table");
        debug_assert!(pool.regions.contains(&ci.region));
        region_of.insert(c.clone(), Region::new(ci.region));
    }
    StudyConfig {
        id: id.to_string(),
        name: info.name.to_string(),
        treated: CountryCode::new(treated),
        controls,
        region_of,
        event_year,
        start_year: FIRST_YEAR,
        end_year: LAST_YEAR,
        outcome: Indicator::LifeExpectancyTotal,
    }
}

/// The eleven studies, in reporting order.
pub fn builtin_studies() -> Vec<StudyConfig> {
    vec![
        study("malaysia", "MYS", &EAST_ASIA_POOL),
        study("ecuador", "ECU", &LATIN_AMERICA_POOL),
        study("yemen", "YEM", &MIDDLE_EAST_POOL),
        study("oman", "OMN", &MIDDLE_EAST_POOL),
        study("syria", "SYR", &MIDDLE_EAST_POOL),
        study("denmark", "DNK", &EUROPE_POOL),
        study("netherlands", "NLD", &EUROPE_POOL),
        study("new-zealand", "NZL", &EUROPE_POOL),
        study("norway", "NOR", &EUROPE_POOL),
        study("uk", "GBR", &EUROPE_POOL),
        study("equatorial-guinea", "GNQ", &AFRICA_POOL),
    ]
}

/// Looks a study up by id, display name or treated ISO code.
pub fn find_study(key: &str) -> Option<StudyConfig> {
    let k = key.trim();
    builtin_studies().into_iter().find(|s| {
        s.id.eq_ignore_ascii_case(k)
            || s.name.eq_ignore_ascii_case(k)
            || s.treated.as_str().eq_ignore_ascii_case(k)
            || (k.eq_ignore_ascii_case("united-kingdom") && s.id == "uk")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn by_id(id: &str) -> StudyConfig {
        find_study(id).unwrap()
    }

    #[test]
    fn eleven_studies_with_table_event_years() {
        let studies = builtin_studies();
        assert_eq!(studies.len(), 11);
        let expect = [
            ("oman", 1966),
            ("netherlands", 1966),
            ("syria", 1968),
            ("malaysia", 1971),
            ("ecuador", 1972),
            ("norway", 1972),
            ("new-zealand", 1976),
            ("uk", 1976),
            ("denmark", 1982),
            ("yemen", 1991),
            ("equatorial-guinea", 1992),
        ];
        for (id, year) in expect {
            assert_eq!(by_id(id).event_year, year, "{id}");
        }
    }

    #[test]
    fn every_study_validates_and_excludes_treated_from_controls() {
        for s in builtin_studies() {
            s.validate().unwrap();
            assert!(!s.controls.contains(&s.treated));
            assert_eq!((s.start_year, s.end_year), (1960, 2014));
        }
    }

    #[test]
    fn narrative_exclusions_applied() {
        let ea = by_id("malaysia");
        for dropped in ["KHM", "VNM"] {
            assert!(!ea.controls.contains(&CountryCode::new(dropped)));
        }
        let af = by_id("equatorial-guinea");
        for dropped in ["RWA", "COG", "NGA", "BWA"] {
            assert!(!af.controls.contains(&CountryCode::new(dropped)));
        }
        assert_eq!(af.controls.len(), 31);
        assert_eq!(ea.controls.len(), 11);
        assert_eq!(by_id("ecuador").controls.len(), 12);
        assert_eq!(by_id("oman").controls.len(), 8);
    }

    #[test]
    fn region_label_counts() {
        for s in builtin_studies() {
            let n = s.region_labels().len();
            let european = ["denmark", "netherlands", "new-zealand", "norway", "uk"];
            if european.contains(&s.id.as_str()) {
                assert_eq!(n, 2, "{}", s.id);
                assert_eq!(s.controls.len(), 14);
            } else {
                assert_eq!(n, 1, "{}", s.id);
            }
        }
    }

    #[test]
    fn new_zealand_sits_in_european_region_and_never_controls() {
        let nz = by_id("new-zealand");
        assert_eq!(nz.region_of[&nz.treated].as_str(), NORTH_EASTERN_EUROPE);
        for s in builtin_studies() {
            assert!(!s.controls.contains(&CountryCode::new("NZL")));
        }
    }

    #[test]
    fn overrides_are_validated() {
        let yemen = by_id("yemen").with_event_year(1988).unwrap();
        assert_eq!(yemen.event_year, 1988);
        assert!(by_id("yemen").with_end_year(1980).is_err());
        assert!(by_id("oman").with_end_year(2010).is_ok());
    }

    #[test]
    fn control_that_is_treated_is_rejected() {
        let mut s = by_id("denmark");
        s.controls.push(CountryCode::new("NOR"));
        s.region_of
            .insert(CountryCode::new("NOR"), Region::new(NORTH_EASTERN_EUROPE));
        assert!(s.validate().is_err());
    }

    #[test]
    fn lookup_by_name_and_code() {
        assert_eq!(find_study("Ecuador").unwrap().id, "ecuador");
        assert_eq!(find_study("gbr").unwrap().id, "uk");
        assert!(find_study("atlantis").is_none());
    }
}
