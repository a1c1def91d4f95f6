//! Ordinary least squares with dummy fixed effects, rank-deficiency
//! handling, classical or country-clustered standard errors.

mod design;
mod qr;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::panel::CountryCode;

pub use design::{
    build_fe_design, Column, DesignMatrix, FeOptions, ReferenceOrder, RegionCoding, INTERCEPT,
};

/// Relative pivot tolerance for dropping collinear columns.
pub const COLLINEARITY_TOL: f64 = 1e-8;

/// Standard-error flavour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeKind {
    #[default]
    Classical,
    /// Clustered by the country in each row key.
    ClusterCountry,
}

/// Significance stars: `***` p < 0.01, `**` p < 0.05, `*` p < 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub terms: Vec<Term>,
    /// Labels of columns removed as collinear, in design order.
    pub dropped: Vec<String>,
    pub n: usize,
    pub rank: usize,
    pub df_resid: usize,
    pub rss: f64,
    pub sigma2: f64,
    pub r_squared: f64,
    pub se_kind: SeKind,
    pub residuals: Vec<f64>,
    #[serde(skip)]
    pub row_keys: Option<Vec<(CountryCode, i32)>>,
}

impl RegressionFit {
    pub fn term(&self, label: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.label == label)
    }

    pub fn is_dropped(&self, label: &str) -> bool {
        self.dropped.iter().any(|l| l == label)
    }

    /// Residuals keyed by (country, year); `None` for designs without row keys.
    pub fn residual_map(&self) -> Option<BTreeMap<(CountryCode, i32), f64>> {
        let keys = self.row_keys.as_ref()?;
        Some(
            keys.iter()
                .cloned()
                .zip(self.residuals.iter().copied())
                .collect(),
        )
    }

    /// `term,estimate,se,t,p,stars` with full-precision numbers.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["term", "estimate", "se", "t", "p", "stars"])?;
        for t in &self.terms {
            w.write_record([
                t.label.clone(),
                t.estimate.to_string(),
                t.se.to_string(),
                t.t.to_string(),
                t.p.to_string(),
                t.stars.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fits with classical standard errors.
pub fn ols_fit(design: &DesignMatrix, y: &[f64]) -> Result<RegressionFit> {
    ols_fit_with(design, y, SeKind::Classical)
}

pub fn ols_fit_with(design: &DesignMatrix, y: &[f64], se_kind: SeKind) -> Result<RegressionFit> {
    let (n, k) = design.x.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "design has {n} rows, y has {}",
            y.len()
        )));
    }
    if design.labels.len() != k {
        return Err(Error::Dimension(format!(
            "{k} columns but {} labels",
            design.labels.len()
        )));
    }
    if design.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("outcome vector".into()));
    }

    let sol = qr::solve(&design.x, y, COLLINEARITY_TOL);
    let rank = sol.kept.len();
    if n <= rank {
        return Err(Error::InsufficientDegreesOfFreedom { n, rank });
    }

    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            let fitted: f64 = sol
                .kept
                .iter()
                .zip(&sol.beta)
                .map(|(&j, b)| design.x[(i, j)] * b)
                .sum();
            y[i] - fitted
        })
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let df_resid = n - rank;
    let sigma2 = rss / df_resid as f64;
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss <= f64::EPSILON * n as f64 {
        1.0
    } else {
        0.0
    };

    let (cov, df) = match se_kind {
        SeKind::Classical => (sol.xtx_inv.scale(sigma2), df_resid as f64),
        SeKind::ClusterCountry => {
            let keys = design.row_keys.as_ref().ok_or_else(|| {
                Error::Dimension("clustered errors need row keys on the design".into())
            })?;
            let groups: BTreeSet<&CountryCode> = keys.iter().map(|(c, _)| c).collect();
            let g = groups.len();
            if g < 2 {
                return Err(Error::InsufficientDegreesOfFreedom { n: g, rank: 1 });
            }
            let index: BTreeMap<&CountryCode, usize> = groups
                .into_iter()
                .enumerate()
                .map(|(i, c)| (c, i))
                .collect();
            let mut scores = nalgebra::DMatrix::<f64>::zeros(g, rank);
            for (i, (c, _)) in keys.iter().enumerate() {
                let gi = index[c];
                for (a, &j) in sol.kept.iter().enumerate() {
                    scores[(gi, a)] += design.x[(i, j)] * residuals[i];
                }
            }
            let meat = scores.transpose() * &scores;
            let adj = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / df_resid as f64);
            let cov = (&sol.xtx_inv * meat * &sol.xtx_inv).scale(adj);
            (cov, (g - 1) as f64)
        }
    };

    let tdist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Dimension(e.to_string()))?;
    let terms = sol
        .kept
        .iter()
        .enumerate()
        .map(|(a, &j)| {
            let estimate = sol.beta[a];
            let se = cov[(a, a)].max(0.0).sqrt();
            let t = estimate / se;
            let p = if t.is_finite() {
                2.0 * tdist.sf(t.abs())
            } else if se == 0.0 && estimate == 0.0 {
                1.0
            } else {
                0.0
            };
            Term {
                label: design.labels[j].clone(),
                estimate,
                se,
                t,
                p,
                stars: stars(p),
            }
        })
        .collect();

    Ok(RegressionFit {
        terms,
        dropped: sol
            .dropped
            .iter()
            .map(|&j| design.labels[j].clone())
            .collect(),
        n,
        rank,
        df_resid,
        rss,
        sigma2,
        r_squared,
        se_kind,
        residuals,
        row_keys: design.row_keys.clone(),
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn design(cols: &[(&str, Vec<f64>)]) -> DesignMatrix {
        DesignMatrix::from_columns(
            cols.iter()
                .map(|(l, v)| Column::new(*l, v.clone()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_fit() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let d = design(&[(INTERCEPT, vec![1.0; 6]), ("x", x)]);
        let f = ols_fit(&d, &y).unwrap();
        assert_relative_eq!(f.term("x").unwrap().estimate, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert!(f.residuals.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn hand_solved_three_points() {
        let d = design(&[(INTERCEPT, vec![1.0; 3]), ("x", vec![0.0, 1.0, 2.0])]);
        let f = ols_fit(&d, &[1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(f.term("x").unwrap().estimate, 1.5, epsilon = 1e-12);
        assert_relative_eq!(
            f.term(INTERCEPT).unwrap().estimate,
            5.0 / 6.0,
            epsilon = 1e-12
        );
        assert_eq!(f.df_resid, 1);
    }

    #[test]
    fn duplicated_column_dropped_survivors_unchanged() {
        let x = vec![0.3, 1.1, 2.0, 2.9, 4.2, 5.0];
        let y = vec![1.0, 2.1, 2.9, 4.2, 5.1, 5.8];
        let base = ols_fit(&design(&[(INTERCEPT, vec![1.0; 6]), ("x", x.clone())]), &y).unwrap();
        let dup = ols_fit(
            &design(&[(INTERCEPT, vec![1.0; 6]), ("x", x.clone()), ("x2", x)]),
            &y,
        )
        .unwrap();
        assert_eq!(dup.dropped, vec!["x2"]);
        for t in &base.terms {
            let u = dup.term(&t.label).unwrap();
            assert_relative_eq!(t.estimate, u.estimate, epsilon = 1e-12);
            assert_relative_eq!(t.se, u.se, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_column_dropped() {
        let d = design(&[
            (INTERCEPT, vec![1.0; 4]),
            ("zero", vec![0.0; 4]),
            ("x", vec![1.0, 2.0, 3.0, 5.0]),
        ]);
        let f = ols_fit(&d, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(f.is_dropped("zero"));
        assert!(f.term("zero").is_none());
    }

    #[test]
    fn too_few_rows() {
        let d = design(&[(INTERCEPT, vec![1.0; 2]), ("x", vec![0.0, 1.0])]);
        let err = ols_fit(&d, &[1.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("insufficient degrees of freedom"));
    }

    #[test]
    fn non_finite_rejected() {
        let d = design(&[(INTERCEPT, vec![1.0; 3]), ("x", vec![0.0, 1.0, f64::NAN])]);
        assert!(matches!(
            ols_fit(&d, &[1.0, 2.0, 3.0]),
            Err(Error::NonFinite(_))
        ));
        let d = design(&[(INTERCEPT, vec![1.0; 3]), ("x", vec![0.0, 1.0, 2.0])]);
        assert!(matches!(
            ols_fit(&d, &[1.0, f64::INFINITY, 3.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.009), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.049), "**");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.0999), "*");
        assert_eq!(stars(0.1), "");
    }

    #[test]
    fn classical_se_matches_textbook() {
        // slope SE = sqrt(sigma2 / Sxx)
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.1, 0.9, 2.2, 2.8, 4.1];
        let f = ols_fit(&design(&[(INTERCEPT, vec![1.0; 5]), ("x", x)]), &y).unwrap();
        let sxx = 10.0;
        assert_relative_eq!(
            f.term("x").unwrap().se,
            (f.sigma2 / sxx).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn csv_header() {
        let d = design(&[(INTERCEPT, vec![1.0; 3]), ("x", vec![0.0, 1.0, 2.0])]);
        let f = ols_fit(&d, &[1.0, 2.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("term,estimate,se,t,p,stars\n(intercept),"));
        assert!(f.to_json().unwrap().contains("\"r_squared\""));
    }
}
