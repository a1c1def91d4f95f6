use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{CountryCode, StudySample};

pub const INTERCEPT: &str = "(intercept)";

/// How region-year fixed effects are formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionCoding {
    /// One block of year dummies shared by every country in the sample.
    #[default]
    Pooled,
    /// One block of year dummies per distinct region label.
    ByLabel,
}

/// Which category is left out as the reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceOrder {
    /// Lexicographically first country / earliest year.
    #[default]
    First,
    Last,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeOptions {
    pub region_coding: RegionCoding,
    pub reference: ReferenceOrder,
}

/// A labelled regressor supplied by the caller (treatment terms).
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub label: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }
}

/// Regressor matrix with column labels. Rows optionally carry a
/// (country, year) key used for residual bookkeeping and clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub labels: Vec<String>,
    pub row_keys: Option<Vec<(CountryCode, i32)>>,
}

impl DesignMatrix {
    /// Builds a design from labelled columns of equal length.
    pub fn from_columns(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.values.len());
        if let Some(c) = columns.iter().find(|c| c.values.len() != n) {
            return Err(Error::Dimension(format!(
                "column `{}` has {} rows, expected {n}",
                c.label,
                c.values.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.label.as_str()) {
                return Err(Error::Dimension(format!(
                    "duplicate column label `{}`",
                    c.label
                )));
            }
        }
        let k = columns.len();
        let x = DMatrix::from_fn(n, k, |i, j| columns[j].values[i]);
        Ok(Self {
            x,
            labels: columns.into_iter().map(|c| c.label).collect(),
            row_keys: None,
        })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn pick<T: Clone>(sorted: &[T], order: ReferenceOrder) -> Option<T> {
    match order {
        ReferenceOrder::First => sorted.first().cloned(),
        ReferenceOrder::Last => sorted.last().cloned(),
    }
}

/// Country and region-year dummy design: intercept, one dummy per country
/// except the reference, one dummy per (region, year) cell except a
/// reference year per region, then the supplied treatment columns.
pub fn build_fe_design(
    sample: &StudySample,
    treatment: &[Column],
    options: FeOptions,
) -> Result<DesignMatrix> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::InvalidDataset(format!(
            "{}: empty sample",
            sample.study_id
        )));
    }
    for c in treatment {
        if c.values.len() != n {
            return Err(Error::Dimension(format!(
                "treatment column `{}` has {} rows, sample has {n}",
                c.label,
                c.values.len()
            )));
        }
    }

    let countries: Vec<CountryCode> = sample.countries().into_iter().cloned().collect();
    let ref_country = pick(&countries, options.reference);

    let region_keys: Vec<&str> = sample
        .rows
        .iter()
        .map(|r| match options.region_coding {
            RegionCoding::Pooled => "",
            RegionCoding::ByLabel => r.region.as_str(),
        })
        .collect();
    let mut years_by_region: BTreeMap<&str, BTreeSet<i32>> = BTreeMap::new();
    for (row, key) in sample.rows.iter().zip(&region_keys) {
        years_by_region.entry(key).or_default().insert(row.year);
    }

    let mut columns = vec![Column::new(INTERCEPT, vec![1.0; n])];
    for c in &countries {
        if Some(c) == ref_country.as_ref() {
            continue;
        }
        let values = sample
            .rows
            .iter()
            .map(|r| f64::from(u8::from(r.country == *c)))
            .collect();
        columns.push(Column::new(format!("country:{c}"), values));
    }
    for (region, years) in &years_by_region {
        let years: Vec<i32> = years.iter().copied().collect();
        let ref_year = pick(&years, options.reference);
        for &y in &years {
            if Some(y) == ref_year {
                continue;
            }
            let values = (0..n)
                .map(|i| {
                    f64::from(u8::from(
                        sample.rows[i].year == y && region_keys[i] == *region,
                    ))
                })
                .collect();
            let label = if region.is_empty() {
                format!("year:{y}")
            } else {
                format!("region-year:{region}:{y}")
            };
            columns.push(Column::new(label, values));
        }
    }
    columns.extend(treatment.iter().cloned());

    let mut design = DesignMatrix::from_columns(columns)?;
    design.row_keys = Some(
        sample
            .rows
            .iter()
            .map(|r| (r.country.clone(), r.year))
            .collect(),
    );
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{Indicator, Region, SampleRow};

    fn toy_sample(countries: &[(&str, &str)], years: std::ops::RangeInclusive<i32>) -> StudySample {
        let mut rows = Vec::new();
        for (i, (c, r)) in countries.iter().enumerate() {
            for y in years.clone() {
                rows.push(SampleRow {
                    country: CountryCode::new(*c),
                    region: Region::new(*r),
                    year: y,
                    value: (i as f64) + f64::from(y),
                    treated: i == 0,
                    relative_year: y - *years.start(),
                });
            }
        }
        StudySample {
            study_id: "toy".into(),
            treated: CountryCode::new(countries[0].0),
            event_year: *years.start(),
            outcome: Indicator::LifeExpectancyTotal,
            window: (*years.start(), *years.end()),
            rows,
            coverage: Default::default(),
        }
    }

    #[test]
    fn two_countries_three_years_one_treatment() {
        let s = toy_sample(&[("A", "R"), ("B", "R")], 2000..=2002);
        let post = Column::new("post", vec![0.0; 6]);
        let d = build_fe_design(&s, &[post], FeOptions::default()).unwrap();
        assert_eq!(d.ncols(), 5);
        assert_eq!(d.labels[0], INTERCEPT);
        assert_eq!(d.labels[1], "country:B");
        assert_eq!(d.labels.last().unwrap(), "post");
    }

    #[test]
    fn two_region_labels_give_two_reference_cells() {
        let mut cs: Vec<(String, &str)> = (0..10).map(|i| (format!("N{i:02}"), "North")).collect();
        cs.extend((0..5).map(|i| (format!("S{i:02}"), "South")));
        let refs: Vec<(&str, &str)> = cs.iter().map(|(c, r)| (c.as_str(), *r)).collect();
        let s = toy_sample(&refs, 1960..=2014);
        let opts = FeOptions {
            region_coding: RegionCoding::ByLabel,
            ..Default::default()
        };
        let d = build_fe_design(&s, &[], opts).unwrap();
        let ry = d
            .labels
            .iter()
            .filter(|l| l.starts_with("region-year:"))
            .count();
        assert_eq!(ry, 2 * 55 - 2);
        let pooled = build_fe_design(&s, &[], FeOptions::default()).unwrap();
        assert_eq!(
            pooled
                .labels
                .iter()
                .filter(|l| l.starts_with("year:"))
                .count(),
            54
        );
    }

    #[test]
    fn single_country_has_no_country_dummies() {
        let s = toy_sample(&[("A", "R")], 2000..=2004);
        let d = build_fe_design(&s, &[], FeOptions::default()).unwrap();
        assert!(d.labels.iter().all(|l| !l.starts_with("country:")));
        assert_eq!(d.ncols(), 1 + 4);
    }

    #[test]
    fn last_reference_order() {
        let s = toy_sample(&[("A", "R"), ("B", "R")], 2000..=2002);
        let opts = FeOptions {
            reference: ReferenceOrder::Last,
            ..Default::default()
        };
        let d = build_fe_design(&s, &[], opts).unwrap();
        assert_eq!(
            d.labels,
            vec![INTERCEPT, "country:A", "year:2000", "year:2001"]
        );
    }
}
