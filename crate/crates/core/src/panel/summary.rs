use std::collections::BTreeMap;

use serde::Serialize;

use super::{Indicator, PanelDataset, StudyConfig};

/// Treated country or pooled control group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Treated,
    Control,
}

/// Mean, sample standard deviation and count. `mean` is `None` for an empty
/// group and `sd` is `None` when fewer than two values exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryCell {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

impl SummaryCell {
    pub fn is_available(&self) -> bool {
        self.mean.is_some()
    }
}

/// Describes a slice of values with an n - 1 denominator for the SD.
pub fn describe(values: &[f64]) -> SummaryCell {
    let n = values.len();
    if n == 0 {
        return SummaryCell {
            mean: None,
            sd: None,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    SummaryCell {
        mean: Some(mean),
        sd,
        n,
    }
}

/// Per-study summary statistics for a set of variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub study_id: String,
    pub variables: Vec<Indicator>,
    cells: BTreeMap<(Group, Indicator), SummaryCell>,
}

impl SummaryTable {
    pub fn get(&self, group: Group, variable: Indicator) -> SummaryCell {
        self.cells
            .get(&(group, variable))
            .copied()
            .unwrap_or(SummaryCell {
                mean: None,
                sd: None,
                n: 0,
            })
    }
}

/// Summarises each variable over the study window for the treated country
/// and for the pooled controls. Missing values are skipped.
pub fn summary_stats(
    dataset: &PanelDataset,
    config: &StudyConfig,
    variables: &[Indicator],
) -> SummaryTable {
    let years = config.start_year..=config.end_year;
    let mut cells = BTreeMap::new();
    for &var in variables {
        let collect = |countries: &mut dyn Iterator<Item = &super::CountryCode>| {
            let mut vals = Vec::new();
            for c in countries {
                vals.extend(years.clone().filter_map(|y| dataset.value(c, var, y)));
            }
            vals
        };
        let treated = collect(&mut std::iter::once(&config.treated));
        let controls = collect(&mut config.controls.iter());
        cells.insert((Group::Treated, var), describe(&treated));
        cells.insert((Group::Control, var), describe(&controls));
    }
    SummaryTable {
        study_id: config.id.clone(),
        variables: variables.to_vec(),
        cells,
    }
}
