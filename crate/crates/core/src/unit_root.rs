//! Levin-Lin-Chu pooled panel unit-root test applied to per-country residual
//! series. By default the auxiliary regressions carry no deterministic terms.
//!
//! H0: every panel has a unit root. Ha: all panels are stationary. The
//! adjusted statistic is compared with the left tail of N(0, 1).

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::did::{did_estimate, DidSpec};
use crate::error::{Error, Result};
use crate::panel::{CountryCode, Indicator, PanelDataset, StudyConfig};
use crate::regress::{stars, RegressionFit};

/// Minimum number of usable observations, `T_i - p_i - 1`, per panel.
pub const MIN_OBS: usize = 10;

const ADJUSTMENTS: &str = include_str!("../data/llc_adjustments.csv");

/// One country's contiguous residual run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelSeries {
    pub country: CountryCode,
    pub first_year: i32,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPanel {
    pub series: Vec<PanelSeries>,
    pub notes: Vec<String>,
}

impl ResidualPanel {
    /// Wraps raw series, keyed by country, each starting in `first_year`.
    pub fn from_series(series: Vec<PanelSeries>) -> Self {
        Self {
            series,
            notes: Vec::new(),
        }
    }
}

/// Groups residuals by country in year order. A country whose years have
/// gaps keeps its longest contiguous run (the earliest among equals).
pub fn residual_panel(fit: &RegressionFit) -> Result<ResidualPanel> {
    let map = fit
        .residual_map()
        .ok_or_else(|| Error::UnitRoot("fit carries no (country, year) row keys".into()))?;
    if map.is_empty() {
        return Err(Error::UnitRoot("no residuals".into()));
    }
    let mut by_country: BTreeMap<CountryCode, Vec<(i32, f64)>> = BTreeMap::new();
    for ((c, y), e) in map {
        by_country.entry(c).or_default().push((y, e));
    }
    let mut series = Vec::new();
    let mut notes = Vec::new();
    for (country, obs) in by_country {
        let mut best = (0usize, 0usize);
        let mut start = 0usize;
        for i in 1..=obs.len() {
            if i == obs.len() || obs[i].0 != obs[i - 1].0 + 1 {
                if i - start > best.1 - best.0 {
                    best = (start, i);
                }
                start = i;
            }
        }
        if best.1 - best.0 < obs.len() {
            notes.push(format!(
                "{country}: gap in residual years, kept {}..{} ({} of {} years)",
                obs[best.0].0,
                obs[best.1 - 1].0,
                best.1 - best.0,
                obs.len()
            ));
        }
        series.push(PanelSeries {
            country,
            first_year: obs[best.0].0,
            values: obs[best.0..best.1].iter().map(|(_, e)| *e).collect(),
        });
    }
    Ok(ResidualPanel { series, notes })
}

/// Deterministic terms in the per-panel auxiliary regressions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Deterministic {
    #[default]
    None,
    /// Panel-specific intercepts.
    Constant,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LlcOptions {
    pub deterministic: Deterministic,
    /// Lag order for every panel instead of the length-based default.
    pub lags: Option<usize>,
    /// Bartlett bandwidth for every panel instead of the default.
    pub bandwidth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlcResult {
    pub t_star: f64,
    pub p_value: f64,
    pub stars: &'static str,
    /// Unadjusted pooled t statistic.
    pub t_rho: f64,
    pub rho: f64,
    pub se_rho: f64,
    /// Mean ratio of long-run to innovation standard deviation.
    pub s_n: f64,
    pub t_tilde: f64,
    pub mu_star: f64,
    pub sigma_star: f64,
    pub panels_used: Vec<CountryCode>,
    pub lags: Vec<usize>,
    pub bandwidths: Vec<usize>,
    pub excluded: Vec<String>,
}

/// Default lag order `floor(4 (T/100)^(2/9))`.
pub fn default_lags(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Default Bartlett bandwidth `floor(3.21 T^(1/3))`.
pub fn default_bandwidth(t: usize) -> usize {
    (3.21 * (t as f64).cbrt()).floor() as usize
}

/// Parsed adjustment table rows `(T~, mu*, sigma*)` for one deterministic
/// specification, `T~ = inf` last.
pub fn adjustment_table(det: Deterministic) -> Vec<(f64, f64, f64)> {
    let (mu_col, sd_col) = match det {
        Deterministic::None => (1, 2),
        Deterministic::Constant => (3, 4),
    };
    ADJUSTMENTS
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("t_tilde") && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let t = if f[0] == "inf" {
                f64::INFINITY
            } else {
                f[0].parse().expect("static table")
            };
            (
                t,
                f[mu_col].parse().expect("static table"),
                f[sd_col].parse().expect("static table"),
            )
        })
        .collect()
}

/// `(mu*, sigma*)` at `t_tilde`, linear in `T~` between rows and clamped
/// to the first and last finite rows outside them.
pub fn adjustment(t_tilde: f64, det: Deterministic) -> (f64, f64) {
    let table: Vec<(f64, f64, f64)> = adjustment_table(det)
        .into_iter()
        .filter(|r| r.0.is_finite())
        .collect();
    let first = table[0];
    let last = table[table.len() - 1];
    if t_tilde <= first.0 {
        return (first.1, first.2);
    }
    if t_tilde >= last.0 {
        return (last.1, last.2);
    }
    for pair in table.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if t_tilde <= b.0 {
            let f = (t_tilde - a.0) / (b.0 - a.0);
            return (a.1 + f * (b.1 - a.1), a.2 + f * (b.2 - a.2));
        }
    }
    (last.1, last.2)
}

/// Residuals of `y` on the columns of `x` (no intercept), by normal
/// equations on a small Gram matrix.
fn partial_out(y: &[f64], x: &[Vec<f64>]) -> Vec<f64> {
    if x.is_empty() {
        return y.to_vec();
    }
    let k = x.len();
    let g = nalgebra::DMatrix::from_fn(k, k, |a, b| dot(&x[a], &x[b]));
    let r = nalgebra::DVector::from_fn(k, |a, _| dot(&x[a], y));
    let beta = g
        .clone()
        .cholesky()
        .map(|c| c.solve(&r))
        .or_else(|| g.svd(true, true).solve(&r, 1e-12).ok())
        .unwrap_or_else(|| nalgebra::DVector::zeros(k));
    y.iter()
        .enumerate()
        .map(|(t, v)| v - (0..k).map(|a| beta[a] * x[a][t]).sum::<f64>())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct PanelStats {
    e_tilde: Vec<f64>,
    v_tilde: Vec<f64>,
    s: f64,
}

/// Per-panel step: auxiliary regressions, normalisation, long-run variance.
fn panel_step(y: &[f64], p: usize, k_bar: usize, det: Deterministic) -> Option<PanelStats> {
    let t = y.len();
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // Observations t = p+1 .. T-1 (0-based index into y), i.e. T - p - 1 rows.
    let rows: Vec<usize> = (p + 1..t).collect();
    let lhs: Vec<f64> = rows.iter().map(|&s| dy[s - 1]).collect();
    let lag_level: Vec<f64> = rows.iter().map(|&s| y[s - 1]).collect();
    let mut lagged: Vec<Vec<f64>> = (1..=p)
        .map(|l| rows.iter().map(|&s| dy[s - 1 - l]).collect())
        .collect();
    if det == Deterministic::Constant {
        lagged.push(vec![1.0; rows.len()]);
    }
    let e = partial_out(&lhs, &lagged);
    let v = partial_out(&lag_level, &lagged);
    let vv = dot(&v, &v);
    if vv <= 0.0 {
        return None;
    }
    let delta = dot(&e, &v) / vv;
    let n = rows.len() as f64;
    let sigma_eps = (e
        .iter()
        .zip(&v)
        .map(|(ei, vi)| (ei - delta * vi).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if !(sigma_eps > 0.0) {
        return None;
    }

    let dy: Vec<f64> = match det {
        Deterministic::None => dy,
        Deterministic::Constant => {
            let mean = dy.iter().sum::<f64>() / dy.len() as f64;
            dy.iter().map(|d| d - mean).collect()
        }
    };
    let m = dy.len() as f64;
    let mut lrv = dot(&dy, &dy) / m;
    for l in 1..=k_bar.min(dy.len().saturating_sub(1)) {
        let w = 1.0 - l as f64 / (k_bar as f64 + 1.0);
        let gamma = dy[l..]
            .iter()
            .zip(&dy[..dy.len() - l])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / m;
        lrv += 2.0 * w * gamma;
    }
    let sigma_y = lrv.max(0.0).sqrt();
    Some(PanelStats {
        e_tilde: e.iter().map(|x| x / sigma_eps).collect(),
        v_tilde: v.iter().map(|x| x / sigma_eps).collect(),
        s: sigma_y / sigma_eps,
    })
}

/// Runs the test on every usable panel. Panels are processed in country
/// order, so the statistic does not depend on input order. At least two
/// usable panels are required.
pub fn llc_test(panel: &ResidualPanel, options: LlcOptions) -> Result<LlcResult> {
    llc_with_min_panels(panel, options, 2)
}

/// Same statistic as [`llc_test`] but accepts a single usable panel, where
/// it reduces to a standardized Dickey-Fuller-type t.
pub fn llc_statistic(panel: &ResidualPanel, options: LlcOptions) -> Result<LlcResult> {
    llc_with_min_panels(panel, options, 1)
}

fn llc_with_min_panels(
    panel: &ResidualPanel,
    options: LlcOptions,
    min_panels: usize,
) -> Result<LlcResult> {
    let mut series: Vec<&PanelSeries> = panel.series.iter().collect();
    series.sort_by(|a, b| (&a.country, a.first_year).cmp(&(&b.country, b.first_year)));

    let mut excluded = Vec::new();
    let mut used = Vec::new();
    let mut lags = Vec::new();
    let mut bandwidths = Vec::new();
    let mut stats = Vec::new();
    for s in series {
        let t = s.values.len();
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("residuals of {}", s.country)));
        }
        let p = options.lags.unwrap_or_else(|| default_lags(t));
        let k_bar = options.bandwidth.unwrap_or_else(|| default_bandwidth(t));
        if t < p + 1 + MIN_OBS {
            excluded.push(format!("{}: {t} years, too short for {p} lags", s.country));
            continue;
        }
        match panel_step(&s.values, p, k_bar, options.deterministic) {
            Some(st) => {
                used.push(s.country.clone());
                lags.push(p);
                bandwidths.push(k_bar);
                stats.push((t, st));
            }
            None => excluded.push(format!("{}: degenerate series", s.country)),
        }
    }
    if stats.len() < min_panels.max(1) {
        return Err(Error::UnitRoot(format!(
            "{} usable panel(s), need at least {min_panels}",
            stats.len()
        )));
    }

    let n_panels = stats.len() as f64;
    let total_obs: usize = stats.iter().map(|(_, s)| s.e_tilde.len()).sum();
    let t_tilde = total_obs as f64 / n_panels;
    let s_n = stats.iter().map(|(_, s)| s.s).sum::<f64>() / n_panels;

    let mut sev = 0.0;
    let mut svv = 0.0;
    for (_, s) in &stats {
        sev += dot(&s.e_tilde, &s.v_tilde);
        svv += dot(&s.v_tilde, &s.v_tilde);
    }
    let rho = sev / svv;
    let ssr: f64 = stats
        .iter()
        .flat_map(|(_, s)| s.e_tilde.iter().zip(&s.v_tilde))
        .map(|(e, v)| (e - rho * v).powi(2))
        .sum();
    let sigma2 = ssr / total_obs as f64;
    let se_rho = (sigma2 / svv).sqrt();
    let t_rho = rho / se_rho;

    let (mu_star, sigma_star) = adjustment(t_tilde, options.deterministic);
    let t_star = (t_rho - total_obs as f64 * s_n * se_rho / sigma2 * mu_star) / sigma_star;
    let p_value = Normal::standard().cdf(t_star);
    Ok(LlcResult {
        t_star,
        p_value,
        stars: stars(p_value),
        t_rho,
        rho,
        se_rho,
        s_n,
        t_tilde,
        mu_star,
        sigma_star,
        panels_used: used,
        lags,
        bandwidths,
        excluded,
    })
}

/// One Table-style row: a study, an outcome and the test on its DiD residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlcRow {
    pub study_id: String,
    pub study: String,
    pub outcome: Indicator,
    pub result: std::result::Result<LlcResult, String>,
    pub notes: Vec<String>,
}

/// Fits the DiD model for each (study, outcome) and tests its residuals.
pub fn llc_table(
    dataset: &PanelDataset,
    studies: &[StudyConfig],
    outcomes: &[Indicator],
    did: &DidSpec,
    options: LlcOptions,
) -> Vec<LlcRow> {
    use rayon::prelude::*;

    let cells: Vec<(&StudyConfig, Indicator)> = studies
        .iter()
        .flat_map(|s| outcomes.iter().map(move |&o| (s, o)))
        .collect();
    cells
        .par_iter()
        .map(|&(study, outcome)| {
            let mut spec = did.clone();
            spec.study = study.clone();
            spec.outcome = outcome;
            let mut notes = Vec::new();
            let result = did_estimate(dataset, &spec)
                .and_then(|r| residual_panel(&r.fit))
                .and_then(|panel| {
                    notes.extend(panel.notes.iter().cloned());
                    llc_test(&panel, options)
                })
                .map_err(|e| e.to_string());
            if let Ok(r) = &result {
                notes.extend(r.excluded.iter().cloned());
            }
            LlcRow {
                study_id: study.id.clone(),
                study: study.name.clone(),
                outcome,
                result,
                notes,
            }
        })
        .collect()
}

/// Caveat printed next to every result.
pub const RESIDUAL_CAVEAT: &str = "The test is applied to estimated regression residuals, \
not observed series; its null distribution ignores the first-stage estimation, so p-values \
are indicative only.";

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn default_tuning_for_55_years() {
        assert_eq!(default_lags(55), 3);
        assert_eq!(default_bandwidth(55), 12);
        assert_eq!(default_lags(100), 4);
    }

    #[test]
    fn adjustment_interpolates_and_clamps() {
        let none = Deterministic::None;
        assert_eq!(adjustment(10.0, none), (0.004, 1.049));
        assert_eq!(adjustment(25.0, none), (0.004, 1.049));
        let (m, s) = adjustment(27.5, none);
        assert_relative_eq!(m, 0.0035, epsilon = 1e-12);
        assert_relative_eq!(s, 1.042, epsilon = 1e-12);
        assert_eq!(adjustment(1e6, none), (0.0, 1.001));
        let table = adjustment_table(none);
        assert_eq!(table.len(), 13);
        assert!(table.last().unwrap().0.is_infinite());
        let c = Deterministic::Constant;
        assert_eq!(adjustment(50.0, c), (-0.531, 0.826));
        assert_eq!(adjustment_table(c).last().unwrap().1, -0.5);
    }

    #[test]
    fn too_few_panels() {
        let p = ResidualPanel::from_series(vec![PanelSeries {
            country: "A".into(),
            first_year: 1960,
            values: (0..40).map(|i| (i as f64).sin()).collect(),
        }]);
        assert!(matches!(
            llc_test(&p, LlcOptions::default()),
            Err(Error::UnitRoot(_))
        ));
    }

    #[test]
    fn short_panels_are_excluded() {
        let mk = |c: &str, n: usize| PanelSeries {
            country: c.into(),
            first_year: 1960,
            values: (0..n)
                .map(|i| ((i * 7 + c.len()) as f64 * 0.37).sin())
                .collect(),
        };
        let p = ResidualPanel::from_series(vec![mk("A", 40), mk("BB", 40), mk("C", 8)]);
        let r = llc_test(&p, LlcOptions::default()).unwrap();
        assert_eq!(r.panels_used.len(), 2);
        assert_eq!(r.excluded.len(), 1);
    }
}
