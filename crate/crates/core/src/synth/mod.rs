//! Synthetic control: predictor construction, simplex-constrained donor
//! weights for a given diagonal `V`, the `V` search, and gap curves.

mod qp;
mod svg;
mod vsearch;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{CountryCode, Indicator, PanelDataset, StudyConfig};

pub use qp::{project_simplex, solve_simplex_ls, QpSolution, KKT_TOL, MAX_ITER};
pub use svg::render_svg;
pub use vsearch::{optimize_v, starting_points, VSearch, N_STARTS};

/// Weights below this are set to zero before renormalising.
pub const WEIGHT_FLOOR: f64 = 1e-10;

/// Default poor-overlap threshold: pre-RMSPE as a share of the treated
/// pre-event outcome mean.
pub const OVERLAP_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Level,
    Log,
}

/// Which predictors enter `X1` / `X0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    /// Covariates entered as pre-event means.
    pub covariates: Vec<(Indicator, Transform)>,
    /// Add the outcome at the first, middle and last pre-event years.
    pub outcome_anchors: bool,
    /// Divide each predictor row by its cross-unit standard deviation.
    pub standardize: bool,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        Self {
            covariates: vec![
                (Indicator::GdpPerCapita, Transform::Log),
                (Indicator::Population15To64, Transform::Level),
            ],
            outcome_anchors: true,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub predictors: PredictorSpec,
    pub overlap_threshold: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            predictors: PredictorSpec::default(),
            overlap_threshold: OVERLAP_THRESHOLD,
        }
    }
}

/// Donor weights for one `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution {
    pub w: DVector<f64>,
    /// `(X1 - X0 w)' V (X1 - X0 w)`.
    pub objective: f64,
    pub kkt: f64,
    pub iterations: usize,
}

/// Predictor matrices and pre-event outcome paths for one treated unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthProblem {
    pub donors: Vec<CountryCode>,
    pub predictor_labels: Vec<String>,
    /// Treated predictors (K), after any standardisation.
    pub x1: DVector<f64>,
    /// Donor predictors (K x J), after any standardisation.
    pub x0: DMatrix<f64>,
    pub pre_years: Vec<i32>,
    /// Treated pre-event outcomes (T).
    pub z1: DVector<f64>,
    /// Donor pre-event outcomes (T x J).
    pub z0: DMatrix<f64>,
    pub notes: Vec<String>,
}

impl SynthProblem {
    /// Assembles a problem from matrices, checking shapes and `J >= 2`.
    pub fn new(
        donors: Vec<CountryCode>,
        predictor_labels: Vec<String>,
        x1: DVector<f64>,
        x0: DMatrix<f64>,
        pre_years: Vec<i32>,
        z1: DVector<f64>,
        z0: DMatrix<f64>,
    ) -> Result<Self> {
        let (k, j) = x0.shape();
        if j < 2 {
            return Err(Error::NotEnoughDonors(format!(
                "{j} donor(s), need at least 2"
            )));
        }
        if k == 0 {
            return Err(Error::Dimension("no predictors".into()));
        }
        if x1.len() != k || predictor_labels.len() != k {
            return Err(Error::Dimension(format!(
                "X0 has {k} rows, X1 {} and {} labels",
                x1.len(),
                predictor_labels.len()
            )));
        }
        if donors.len() != j || z0.ncols() != j {
            return Err(Error::Dimension("donor count mismatch".into()));
        }
        if z1.len() != z0.nrows() || pre_years.len() != z1.len() {
            return Err(Error::Dimension("pre-period length mismatch".into()));
        }
        if x1
            .iter()
            .chain(x0.iter())
            .chain(z1.iter())
            .chain(z0.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("synthetic-control inputs".into()));
        }
        Ok(Self {
            donors,
            predictor_labels,
            x1,
            x0,
            pre_years,
            z1,
            z0,
            notes: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.x0.nrows()
    }

    pub fn j(&self) -> usize {
        self.x0.ncols()
    }

    fn check_v(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.k() {
            return Err(Error::Dimension(format!(
                "V has {} entries, K = {}",
                v.len(),
                self.k()
            )));
        }
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::NonFinite(
                "V entries must be finite and non-negative".into(),
            ));
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Dimension(format!("V sums to {s}, expected 1")));
        }
        Ok(())
    }

    /// Minimises `(X1 - X0 w)' V (X1 - X0 w)` over the simplex.
    pub fn solve_weights(&self, v: &[f64]) -> Result<WeightSolution> {
        self.solve_weights_from(v, None)
    }

    pub fn solve_weights_from(
        &self,
        v: &[f64],
        warm: Option<&DVector<f64>>,
    ) -> Result<WeightSolution> {
        self.check_v(v)?;
        let sv: Vec<f64> = v.iter().map(|x| x.sqrt()).collect();
        let a = DMatrix::from_fn(self.k(), self.j(), |r, c| sv[r] * self.x0[(r, c)]);
        let b = DVector::from_fn(self.k(), |r, _| sv[r] * self.x1[r]);
        let sol = solve_simplex_ls(&a, &b, warm)?;
        Ok(WeightSolution {
            w: sol.w,
            objective: sol.objective,
            kkt: sol.kkt,
            iterations: sol.iterations,
        })
    }

    pub fn predictor_loss(&self, v: &[f64], w: &DVector<f64>) -> f64 {
        let r = &self.x1 - &self.x0 * w;
        r.iter().zip(v).map(|(e, vi)| vi * e * e).sum()
    }

    /// Mean squared pre-event outcome gap for weights `w`.
    pub fn pre_mspe(&self, w: &DVector<f64>) -> f64 {
        let r = &self.z1 - &self.z0 * w;
        r.norm_squared() / r.len().max(1) as f64
    }
}

fn pre_mean(
    dataset: &PanelDataset,
    country: &CountryCode,
    indicator: Indicator,
    transform: Transform,
    years: std::ops::RangeInclusive<i32>,
) -> Option<f64> {
    let vals: Vec<f64> = years
        .filter_map(|y| dataset.value(country, indicator, y))
        .filter_map(|v| match transform {
            Transform::Level => Some(v),
            Transform::Log => (v > 0.0).then(|| v.ln()),
        })
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn covariate_label(indicator: Indicator, transform: Transform) -> String {
    match transform {
        Transform::Level => format!("mean {}", indicator.label()),
        Transform::Log => format!("mean log {}", indicator.label()),
    }
}

/// First, middle and last of the treated unit's pre-event outcome years.
/// The middle anchor is the interior year closest to the midpoint.
pub fn anchor_years(pre_years: &[i32]) -> Option<[i32; 3]> {
    if pre_years.len() < 3 {
        return None;
    }
    let first = pre_years[0];
    let last = *pre_years.last()?;
    let target = first + (last - first) / 2;
    let mid = pre_years[1..pre_years.len() - 1]
        .iter()
        .copied()
        .min_by_key(|y| ((y - target).abs(), *y))?;
    Some([first, mid, last])
}

/// Builds `X1`, `X0` and the pre-event outcome paths for `study` and its
/// outcome. Donors missing a predictor or any pre-event outcome year are
/// excluded; covariates the treated unit lacks are dropped. Each exclusion
/// is recorded in `notes`.
pub fn build_predictors(
    dataset: &PanelDataset,
    study: &StudyConfig,
    spec: &PredictorSpec,
) -> Result<SynthProblem> {
    let outcome = study.outcome;
    let pre = study.start_year..=study.event_year;
    let treated = &study.treated;
    let pre_years: Vec<i32> = pre
        .clone()
        .filter(|&y| dataset.value(treated, outcome, y).is_some())
        .collect();
    if pre_years.len() < 3 {
        return Err(Error::StudyUndefined(format!(
            "{}: treated country has {} pre-event {} years, need 3",
            study.id,
            pre_years.len(),
            outcome
        )));
    }
    let mut notes = Vec::new();

    let mut covariates = Vec::new();
    let mut x1_rows = Vec::new();
    for &(ind, tr) in &spec.covariates {
        match pre_mean(dataset, treated, ind, tr, pre.clone()) {
            Some(v) => {
                covariates.push((ind, tr));
                x1_rows.push(v);
            }
            None => notes.push(format!(
                "predictor `{}` dropped: no pre-event data for {treated}",
                covariate_label(ind, tr)
            )),
        }
    }
    let anchors = if spec.outcome_anchors {
        anchor_years(&pre_years).map(Vec::from).unwrap_or_default()
    } else {
        Vec::new()
    };
    for &y in &anchors {
        x1_rows.push(dataset.value(treated, outcome, y).expect("anchor has data"));
    }
    let mut labels: Vec<String> = covariates
        .iter()
        .map(|&(i, t)| covariate_label(i, t))
        .collect();
    labels.extend(anchors.iter().map(|y| format!("{} {y}", outcome.label())));

    let mut donors = Vec::new();
    let mut x0_cols: Vec<Vec<f64>> = Vec::new();
    let mut z0_cols: Vec<Vec<f64>> = Vec::new();
    'donors: for c in &study.controls {
        if !dataset.contains_country(c) {
            notes.push(format!("donor {c} excluded: absent from dataset"));
            continue;
        }
        let mut path = Vec::with_capacity(pre_years.len());
        for &y in &pre_years {
            match dataset.value(c, outcome, y) {
                Some(v) => path.push(v),
                None => {
                    notes.push(format!("donor {c} excluded: no {outcome} in {y}"));
                    continue 'donors;
                }
            }
        }
        let mut col = Vec::with_capacity(labels.len());
        for &(ind, tr) in &covariates {
            match pre_mean(dataset, c, ind, tr, pre.clone()) {
                Some(v) => col.push(v),
                None => {
                    notes.push(format!(
                        "donor {c} excluded: no pre-event data for `{}`",
                        covariate_label(ind, tr)
                    ));
                    continue 'donors;
                }
            }
        }
        for &y in &anchors {
            let i = pre_years
                .iter()
                .position(|p| *p == y)
                .expect("anchor in pre years");
            col.push(path[i]);
        }
        donors.push(c.clone());
        x0_cols.push(col);
        z0_cols.push(path);
    }
    if donors.len() < 2 {
        return Err(Error::NotEnoughDonors(format!(
            "{}: {} eligible donor(s) for {outcome}",
            study.id,
            donors.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Dimension(format!(
            "{}: no predictors left",
            study.id
        )));
    }

    let k = labels.len();
    let j = donors.len();
    let mut x1 = DVector::from_vec(x1_rows);
    let mut x0 = DMatrix::from_fn(k, j, |r, c| x0_cols[c][r]);
    if spec.standardize {
        for r in 0..k {
            let vals: Vec<f64> = std::iter::once(x1[r])
                .chain(x0.row(r).iter().copied())
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64)
                .sqrt();
            if sd > 0.0 {
                x1[r] /= sd;
                for c in 0..j {
                    x0[(r, c)] /= sd;
                }
            }
        }
    }
    let t = pre_years.len();
    let z1 = DVector::from_iterator(
        t,
        pre_years
            .iter()
            .map(|&y| dataset.value(treated, outcome, y).expect("pre year")),
    );
    let z0 = DMatrix::from_fn(t, j, |r, c| z0_cols[c][r]);
    let mut problem = SynthProblem::new(donors, labels, x1, x0, pre_years, z1, z0)?;
    problem.notes = notes;
    Ok(problem)
}

/// One year of the treated and synthetic paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub year: i32,
    pub treated: Option<f64>,
    pub synthetic: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthResult {
    pub study_id: String,
    pub treated: CountryCode,
    pub outcome: Indicator,
    pub event_year: i32,
    pub donors: Vec<CountryCode>,
    pub weights: Vec<f64>,
    pub predictor_labels: Vec<String>,
    pub v: Vec<f64>,
    /// Predictor loss at the returned `(V, W)`.
    pub objective: f64,
    pub pre_rmspe: f64,
    pub treated_pre_mean: f64,
    pub poor_overlap: bool,
    /// Equal-weight `V` was kept.
    pub v_fallback: bool,
    pub curve: Vec<CurvePoint>,
    pub notes: Vec<String>,
}

impl SynthResult {
    pub fn weight_of(&self, donor: &str) -> Option<f64> {
        self.donors
            .iter()
            .position(|d| d.as_str() == donor)
            .map(|i| self.weights[i])
    }

    /// `year,treated,synthetic,gap` with 3 decimals; empty cells are
    /// unavailable values.
    pub fn write_curve_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "year,treated,synthetic,gap")?;
        let f = |v: Option<f64>| v.map(crate::tables::fmt3).unwrap_or_default();
        for p in &self.curve {
            writeln!(
                w,
                "{},{},{},{}",
                p.year,
                f(p.treated),
                f(p.synthetic),
                f(p.gap)
            )?;
        }
        Ok(())
    }
}

/// Zeroes weights below [`WEIGHT_FLOOR`] and renormalises.
pub fn clean_weights(w: &DVector<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = w
        .iter()
        .map(|&x| if x < WEIGHT_FLOOR { 0.0 } else { x })
        .collect();
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        for x in &mut out {
            *x /= s;
        }
    }
    out
}

/// Treated, synthetic and gap values for every year of the study window.
/// The synthetic value needs every positive-weight donor.
pub fn synth_gap(
    dataset: &PanelDataset,
    study: &StudyConfig,
    donors: &[CountryCode],
    weights: &[f64],
) -> Vec<CurvePoint> {
    (study.start_year..=study.end_year)
        .map(|year| {
            let treated = dataset.value(&study.treated, study.outcome, year);
            let synthetic = donors
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .try_fold(0.0, |acc, (d, w)| {
                    dataset.value(d, study.outcome, year).map(|v| acc + w * v)
                });
            let gap = treated.zip(synthetic).map(|(t, s)| t - s);
            CurvePoint {
                year,
                treated,
                synthetic,
                gap,
            }
        })
        .collect()
}

/// Predictors, `V` search, weights and gap curve for one study and outcome.
pub fn run_synth(
    dataset: &PanelDataset,
    study: &StudyConfig,
    outcome: Indicator,
    options: &SynthOptions,
) -> Result<SynthResult> {
    let cfg = study.clone().with_outcome(outcome);
    let problem = build_predictors(dataset, &cfg, &options.predictors)?;
    let search = optimize_v(&problem)?;
    let weights = clean_weights(&search.weights.w);
    let wv = DVector::from_vec(weights.clone());
    let pre_rmspe = problem.pre_mspe(&wv).sqrt();
    let treated_pre_mean = problem.z1.mean();
    let poor_overlap = pre_rmspe > options.overlap_threshold * treated_pre_mean.abs();
    let mut notes = problem.notes.clone();
    if poor_overlap {
        notes.push(format!(
            "poor pre-event overlap: RMSPE {:.3} exceeds {:.0}% of the treated pre-event mean {:.3}",
            pre_rmspe,
            options.overlap_threshold * 100.0,
            treated_pre_mean
        ));
    }
    Ok(SynthResult {
        study_id: cfg.id.clone(),
        treated: cfg.treated.clone(),
        outcome,
        event_year: cfg.event_year,
        curve: synth_gap(dataset, &cfg, &problem.donors, &weights),
        objective: problem.predictor_loss(&search.v, &wv),
        donors: problem.donors,
        weights,
        predictor_labels: problem.predictor_labels,
        v: search.v,
        pre_rmspe,
        treated_pre_mean,
        poor_overlap,
        v_fallback: search.fallback,
        notes,
    })
}
