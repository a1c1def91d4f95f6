//! Two-way fixed-effect difference-in-differences:
//! `Y = alpha_c + delta * Post + gamma_rt + e`, one fit per study and outcome.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::panel::{build_study_sample, CoverageNote, Indicator, PanelDataset, StudyConfig};
use crate::regress::{build_fe_design, ols_fit_with, Column, FeOptions, RegressionFit, SeKind};

pub const POST: &str = "post";

/// Year used to cut the "Arab spring" variants.
pub const ARAB_SPRING_END: i32 = 2010;

/// Studies that get an additional truncated row in the DiD tables.
pub const ARAB_SPRING_STUDIES: [&str; 3] = ["yemen", "oman", "syria"];

/// 1 strictly after the event year, 0 otherwise.
pub fn post_indicator(year: i32, event_year: i32) -> u8 {
    u8::from(year > event_year)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DidSpec {
    pub study: StudyConfig,
    pub outcome: Indicator,
    pub end_year_override: Option<i32>,
    pub fe: FeOptions,
    pub se: SeKind,
}

impl DidSpec {
    pub fn new(study: StudyConfig, outcome: Indicator) -> Self {
        Self {
            study,
            outcome,
            end_year_override: None,
            fe: FeOptions::default(),
            se: SeKind::default(),
        }
    }

    pub fn with_end_year(mut self, end_year: i32) -> Self {
        self.end_year_override = Some(end_year);
        self
    }

    fn config(&self) -> Result<StudyConfig> {
        let cfg = self.study.clone().with_outcome(self.outcome);
        match self.end_year_override {
            Some(end) if end < cfg.event_year => Err(Error::InvalidStudy(format!(
                "{}: end year {end} precedes event year {}",
                cfg.id, cfg.event_year
            ))),
            Some(end) => cfg.with_end_year(end),
            None => Ok(cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DidResult {
    pub study_id: String,
    pub outcome: Indicator,
    pub end_year: i32,
    pub delta: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub stars: &'static str,
    pub r_squared: f64,
    pub n: usize,
    pub coverage: CoverageNote,
    #[serde(skip)]
    pub fit: RegressionFit,
}

/// Builds the sample, the dummy design with a single `post` column, and
/// fits it. A `post` column absorbed by the fixed effects is an error.
pub fn did_estimate(dataset: &PanelDataset, spec: &DidSpec) -> Result<DidResult> {
    let cfg = spec.config()?;
    let sample = build_study_sample(dataset, &cfg)?;
    let post: Vec<f64> = sample
        .rows
        .iter()
        .map(|r| f64::from(u8::from(r.treated) * post_indicator(r.year, cfg.event_year)))
        .collect();
    let design = build_fe_design(&sample, &[Column::new(POST, post)], spec.fe)?;
    let fit = ols_fit_with(&design, &sample.outcome_values(), spec.se)?;
    let term = fit
        .term(POST)
        .ok_or_else(|| Error::NotIdentified(POST.into()))?
        .clone();
    Ok(DidResult {
        study_id: cfg.id.clone(),
        outcome: spec.outcome,
        end_year: cfg.end_year,
        delta: term.estimate,
        se: term.se,
        t: term.t,
        p: term.p,
        stars: term.stars,
        r_squared: fit.r_squared,
        n: fit.n,
        coverage: sample.coverage,
        fit,
    })
}

/// One table cell: an estimate or the reason it is unavailable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum DidCell {
    Estimate {
        delta: f64,
        se: f64,
        p: f64,
        stars: &'static str,
        r_squared: f64,
        n: usize,
    },
    Unavailable {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DidRow {
    /// Display label, e.g. `Oman` or `Oman (to 2010)`.
    pub label: String,
    pub study_id: String,
    pub end_year_override: Option<i32>,
    pub cells: Vec<DidCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DidTable {
    pub outcomes: Vec<Indicator>,
    pub rows: Vec<DidRow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DidTableOptions {
    pub fe: FeOptions,
    pub se: SeKind,
    /// Emit the truncated rows for the studies in [`ARAB_SPRING_STUDIES`].
    pub arab_spring: bool,
}

/// Estimates every (study, outcome) cell. Cells run in parallel; the
/// result order follows `studies` and `outcomes`.
pub fn did_table(
    dataset: &PanelDataset,
    studies: &[StudyConfig],
    outcomes: &[Indicator],
    options: DidTableOptions,
) -> DidTable {
    use rayon::prelude::*;

    let mut row_specs: Vec<(String, &StudyConfig, Option<i32>)> = Vec::new();
    for s in studies {
        row_specs.push((s.name.clone(), s, None));
        if options.arab_spring && ARAB_SPRING_STUDIES.contains(&s.id.as_str()) {
            row_specs.push((
                format!("{} (to {ARAB_SPRING_END})", s.name),
                s,
                Some(ARAB_SPRING_END),
            ));
        }
    }
    let rows = row_specs
        .par_iter()
        .map(|(label, study, end)| {
            let cells = outcomes
                .iter()
                .map(|&o| {
                    let mut spec = DidSpec::new((*study).clone(), o);
                    spec.end_year_override = *end;
                    spec.fe = options.fe;
                    spec.se = options.se;
                    match did_estimate(dataset, &spec) {
                        Ok(r) => DidCell::Estimate {
                            delta: r.delta,
                            se: r.se,
                            p: r.p,
                            stars: r.stars,
                            r_squared: r.r_squared,
                            n: r.n,
                        },
                        Err(e) => DidCell::Unavailable {
                            reason: e.to_string(),
                        },
                    }
                })
                .collect();
            DidRow {
                label: label.clone(),
                study_id: study.id.clone(),
                end_year_override: *end,
                cells,
            }
        })
        .collect();
    DidTable {
        outcomes: outcomes.to_vec(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn post_is_strict() {
        assert_eq!(post_indicator(1972, 1972), 0);
        assert_eq!(post_indicator(1973, 1972), 1);
        assert_eq!(post_indicator(1960, 1992), 0);
    }
}
