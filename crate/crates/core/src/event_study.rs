//! Binned event study: `Y = alpha_c + sum_b delta_b * E_b + gamma_rt + e`,
//! where `E_b` marks treated-country years whose relative year falls in bin `b`.
//!
//! Bins are `width` years wide and indexed by `relative_year.div_euclid(width)`.
//! Index -1 (relative years -1..-width) is the omitted reference. The two bins
//! before it get dummies; anything earlier is handled by [`PrePolicy`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{build_study_sample, CoverageNote, Indicator, PanelDataset, StudyConfig};
use crate::regress::{build_fe_design, ols_fit_with, Column, FeOptions, RegressionFit, SeKind};

pub const DEFAULT_BIN_WIDTH: i32 = 3;

/// Earliest bin index that receives its own dummy under the default policy.
const FIRST_PRE_BIN: i32 = -3;

/// Treatment of relative years before the earliest reported pre bin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrePolicy {
    /// Join the omitted reference category.
    #[default]
    Pool,
    /// Remove those treated-country rows from the sample.
    Drop,
    /// Give every pre-event bin its own dummy.
    Strict,
}

/// Where a relative year lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinAssignment {
    /// The omitted reference bin.
    Omitted,
    /// Early pre-event years pooled with the reference.
    BaselinePool,
    /// Early pre-event years removed from the sample.
    Dropped,
    /// A bin with its own dummy, by index.
    Bin(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventOptions {
    pub bin_width: i32,
    pub pre_policy: PrePolicy,
    pub fe: FeOptions,
    pub se: SeKind,
}

impl Default for EventOptions {
    fn default() -> Self {
        Self {
            bin_width: DEFAULT_BIN_WIDTH,
            pre_policy: PrePolicy::Pool,
            fe: FeOptions::default(),
            se: SeKind::Classical,
        }
    }
}

/// Bin for a treated-country relative year with the default 3-year width
/// and pooling policy.
pub fn assign_bin(relative_year: i32) -> BinAssignment {
    assign_bin_with(relative_year, DEFAULT_BIN_WIDTH, PrePolicy::Pool)
}

pub fn assign_bin_with(relative_year: i32, width: i32, policy: PrePolicy) -> BinAssignment {
    assert!(width > 0, "bin width must be positive");
    let idx = relative_year.div_euclid(width);
    match idx {
        -1 => BinAssignment::Omitted,
        i if i < FIRST_PRE_BIN => match policy {
            PrePolicy::Pool => BinAssignment::BaselinePool,
            PrePolicy::Drop => BinAssignment::Dropped,
            PrePolicy::Strict => BinAssignment::Bin(i),
        },
        i => BinAssignment::Bin(i),
    }
}

/// Nominal label of a bin: `+3..+5`, `-4..-6`.
pub fn bin_label(index: i32, width: i32) -> String {
    let start = index * width;
    let end = start + width - 1;
    if index >= 0 {
        format!("+{start}..+{end}")
    } else {
        format!("-{}..-{}", -end, -start)
    }
}

/// Assignment of a labelled bin, for display.
pub fn label_for(assignment: BinAssignment, width: i32) -> Option<String> {
    match assignment {
        BinAssignment::Bin(i) => Some(bin_label(i, width)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinEstimate {
    pub index: i32,
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub stars: &'static str,
    /// Treated-country years in the bin.
    pub years: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventStudyResult {
    pub study_id: String,
    pub outcome: Indicator,
    pub event_year: i32,
    pub bins: Vec<BinEstimate>,
    /// Bins realised in the data but absorbed by the fixed effects.
    pub unidentified: Vec<String>,
    pub r_squared: f64,
    pub n: usize,
    pub coverage: CoverageNote,
    #[serde(skip)]
    pub fit: RegressionFit,
}

impl EventStudyResult {
    pub fn bin(&self, label: &str) -> Option<&BinEstimate> {
        self.bins.iter().find(|b| b.label == label)
    }
}

/// Fits the event-study regression for one study (its `outcome` field is
/// replaced by `outcome`).
pub fn event_study_estimate(
    dataset: &PanelDataset,
    study: &StudyConfig,
    outcome: Indicator,
    options: &EventOptions,
) -> Result<EventStudyResult> {
    if options.bin_width <= 0 {
        return Err(Error::InvalidStudy(format!(
            "bin width {}",
            options.bin_width
        )));
    }
    let cfg = study.clone().with_outcome(outcome);
    let mut sample = build_study_sample(dataset, &cfg)?;
    let w = options.bin_width;

    let assignment = |treated: bool, rel: i32| {
        if treated {
            Some(assign_bin_with(rel, w, options.pre_policy))
        } else {
            None
        }
    };
    sample
        .rows
        .retain(|r| assignment(r.treated, r.relative_year) != Some(BinAssignment::Dropped));

    let mut members: BTreeMap<i32, BTreeSet<usize>> = BTreeMap::new();
    for (i, r) in sample.rows.iter().enumerate() {
        if let Some(BinAssignment::Bin(b)) = assignment(r.treated, r.relative_year) {
            members.entry(b).or_default().insert(i);
        }
    }
    let n = sample.len();
    let columns: Vec<Column> = members
        .iter()
        .map(|(&b, rows)| {
            let values = (0..n)
                .map(|i| f64::from(u8::from(rows.contains(&i))))
                .collect();
            Column::new(bin_label(b, w), values)
        })
        .collect();
    for c in &columns {
        assert!(c
            .values
            .iter()
            .zip(&sample.rows)
            .all(|(v, r)| r.treated || *v == 0.0));
    }

    let design = build_fe_design(&sample, &columns, options.fe)?;
    let fit = ols_fit_with(&design, &sample.outcome_values(), options.se)?;
    let mut bins = Vec::new();
    let mut unidentified = Vec::new();
    for (&b, rows) in &members {
        let label = bin_label(b, w);
        match fit.term(&label) {
            Some(t) => bins.push(BinEstimate {
                index: b,
                label,
                estimate: t.estimate,
                se: t.se,
                t: t.t,
                p: t.p,
                stars: t.stars,
                years: rows.len(),
            }),
            None => unidentified.push(label),
        }
    }
    Ok(EventStudyResult {
        study_id: cfg.id.clone(),
        outcome,
        event_year: cfg.event_year,
        bins,
        unidentified,
        r_squared: fit.r_squared,
        n: fit.n,
        coverage: sample.coverage,
        fit,
    })
}

/// One column per study; rows are the union of realised bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventTable {
    pub outcome: Indicator,
    pub bin_width: i32,
    pub studies: Vec<String>,
    pub results: Vec<std::result::Result<EventStudyResult, String>>,
}

impl EventTable {
    /// Sorted bin indices present in any column.
    pub fn bin_indices(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self
            .results
            .iter()
            .flatten()
            .flat_map(|r| r.bins.iter().map(|b| b.index))
            .collect();
        set.into_iter().collect()
    }
}

pub fn event_table(
    dataset: &PanelDataset,
    studies: &[StudyConfig],
    outcome: Indicator,
    options: &EventOptions,
) -> EventTable {
    use rayon::prelude::*;

    let results = studies
        .par_iter()
        .map(|s| event_study_estimate(dataset, s, outcome, options).map_err(|e| e.to_string()))
        .collect();
    EventTable {
        outcome,
        bin_width: options.bin_width,
        studies: studies.iter().map(|s| s.name.clone()).collect(),
        results,
    }
}
