//! Table documents rendered as CSV and aligned plain text. Numbers use a
//! fixed 3-decimal format; p-values use 4 decimals.

use crate::did::{DidCell, DidTable};
use crate::error::Result;
use crate::event_study::{bin_label, EventTable};
use crate::panel::{Group, Indicator, SummaryTable};
use crate::unit_root::{LlcRow, RESIDUAL_CAVEAT};

/// Three decimals, with negative zero printed as `0.000`.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

pub fn fmt_p(p: f64) -> String {
    format!("{p:.4}")
}

/// `3.375*** (0.799)`.
pub fn fmt_cell(estimate: f64, se: f64, stars: &str) -> String {
    format!("{}{stars} ({})", fmt3(estimate), fmt3(se))
}

fn opt3(x: Option<f64>) -> String {
    x.map(fmt3).unwrap_or_default()
}

/// A rectangular table with a title and footnotes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TextTable {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl TextTable {
    pub fn new(title: impl Into<String>, header: &[&str]) -> Self {
        Self {
            title: title.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Header plus rows; title and notes are not part of the CSV. Short
    /// rows are padded with empty fields.
    pub fn to_csv(&self) -> Result<String> {
        let width = self
            .rows
            .iter()
            .map(Vec::len)
            .chain([self.header.len()])
            .max()
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let pad = |r: &[String]| -> Vec<String> {
            let mut v = r.to_vec();
            v.resize(width, String::new());
            v
        };
        w.write_record(pad(&self.header))?;
        for r in &self.rows {
            w.write_record(pad(r))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Left-aligned first column, right-aligned others.
    pub fn to_text(&self) -> String {
        let ncols = self
            .rows
            .iter()
            .map(Vec::len)
            .chain([self.header.len()])
            .max()
            .unwrap_or(0);
        let mut widths = vec![0usize; ncols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate() {
                widths[i] = widths[i].max(c.chars().count());
            }
        }
        let line = |r: &[String]| {
            let mut s = String::new();
            for (i, w) in widths.iter().enumerate() {
                let c = r.get(i).map(String::as_str).unwrap_or("");
                if i == 0 {
                    s.push_str(&format!("{c:<w$}"));
                } else {
                    s.push_str(&format!("  {c:>w$}"));
                }
            }
            s.trim_end().to_string()
        };
        let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * ncols.saturating_sub(1));
        let mut out = String::new();
        if !self.title.is_empty() {
            out.push_str(&self.title);
            out.push('\n');
        }
        out.push_str(&rule);
        out.push('\n');
        out.push_str(&line(&self.header));
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out.push_str(&rule);
        out.push('\n');
        for n in &self.notes {
            out.push_str(n);
            out.push('\n');
        }
        out
    }
}

/// Treated and pooled-control means and SDs per study and variable.
pub fn summary_table(title: &str, studies: &[(String, SummaryTable)]) -> TextTable {
    let mut t = TextTable::new(
        title,
        &[
            "study",
            "variable",
            "treated_mean",
            "treated_sd",
            "treated_n",
            "control_mean",
            "control_sd",
            "control_n",
        ],
    );
    for (name, s) in studies {
        for &v in &s.variables {
            let a = s.get(Group::Treated, v);
            let b = s.get(Group::Control, v);
            t.push(vec![
                name.clone(),
                v.label().to_string(),
                opt3(a.mean),
                opt3(a.sd),
                a.n.to_string(),
                opt3(b.mean),
                opt3(b.sd),
                b.n.to_string(),
            ]);
        }
    }
    t
}

/// DiD results in long form, one line per (row, outcome) cell.
pub fn did_long(title: &str, table: &DidTable) -> TextTable {
    let mut t = TextTable::new(
        title,
        &[
            "study",
            "row",
            "outcome",
            "delta",
            "se",
            "p",
            "stars",
            "r_squared",
            "n",
            "note",
        ],
    );
    for row in &table.rows {
        for (o, cell) in table.outcomes.iter().zip(&row.cells) {
            let mut r = vec![
                row.study_id.clone(),
                row.label.clone(),
                o.label().to_string(),
            ];
            match cell {
                DidCell::Estimate {
                    delta,
                    se,
                    p,
                    stars,
                    r_squared,
                    n,
                } => r.extend([
                    fmt3(*delta),
                    fmt3(*se),
                    fmt_p(*p),
                    stars.to_string(),
                    fmt3(*r_squared),
                    n.to_string(),
                    String::new(),
                ]),
                DidCell::Unavailable { reason } => {
                    r.extend(std::iter::repeat(String::new()).take(6));
                    r.push(format!("unavailable: {reason}"));
                }
            }
            t.push(r);
        }
    }
    t
}

/// DiD results laid out with outcomes as columns. Each study takes two
/// lines: the estimate with SE, then R-squared and N.
pub fn did_wide(title: &str, table: &DidTable) -> TextTable {
    let mut header = vec!["".to_string()];
    header.extend(table.outcomes.iter().map(|o| o.title().to_string()));
    let mut t = TextTable {
        title: title.to_string(),
        header,
        rows: Vec::new(),
        notes: vec!["Standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.1.".into()],
    };
    for row in &table.rows {
        let mut first = vec![row.label.clone()];
        let mut second = vec![String::new()];
        for cell in &row.cells {
            match cell {
                DidCell::Estimate {
                    delta,
                    se,
                    stars,
                    r_squared,
                    n,
                    ..
                } => {
                    first.push(fmt_cell(*delta, *se, stars));
                    second.push(format!("R2 {} N {n}", fmt3(*r_squared)));
                }
                DidCell::Unavailable { .. } => {
                    first.push("n/a".into());
                    second.push(String::new());
                }
            }
        }
        t.push(first);
        t.push(second);
    }
    t
}

/// Event-study bins in long form.
pub fn event_long(title: &str, table: &EventTable) -> TextTable {
    let mut t = TextTable::new(
        title,
        &[
            "study",
            "bin",
            "estimate",
            "se",
            "p",
            "stars",
            "treated_years",
        ],
    );
    for (name, res) in table.studies.iter().zip(&table.results) {
        if let Ok(r) = res {
            for b in &r.bins {
                t.push(vec![
                    name.clone(),
                    b.label.clone(),
                    fmt3(b.estimate),
                    fmt3(b.se),
                    fmt_p(b.p),
                    b.stars.to_string(),
                    b.years.to_string(),
                ]);
            }
            t.push(vec![name.clone(), "R2".into(), fmt3(r.r_squared)]);
            t.push(vec![name.clone(), "N".into(), r.n.to_string()]);
        }
    }
    t
}

/// Event-study bins as rows with one column per study, R2 and N footers.
pub fn event_wide(title: &str, table: &EventTable) -> TextTable {
    let mut header = vec!["".to_string()];
    header.extend(table.studies.iter().cloned());
    let mut t = TextTable {
        title: title.to_string(),
        header,
        rows: Vec::new(),
        notes: vec![
            "Standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.1.".into(),
            format!(
                "Omitted reference: years 1-{} before the event.",
                table.bin_width
            ),
        ],
    };
    for idx in table.bin_indices() {
        let label = bin_label(idx, table.bin_width);
        let mut row = vec![label.clone()];
        for res in &table.results {
            let cell = match res {
                Ok(r) => r
                    .bins
                    .iter()
                    .find(|b| b.index == idx)
                    .map(|b| fmt_cell(b.estimate, b.se, b.stars))
                    .unwrap_or_default(),
                Err(_) => String::new(),
            };
            row.push(cell);
        }
        t.push(row);
    }
    let mut r2 = vec!["R2".to_string()];
    let mut n = vec!["N".to_string()];
    for (name, res) in table.studies.iter().zip(&table.results) {
        match res {
            Ok(r) => {
                r2.push(fmt3(r.r_squared));
                n.push(r.n.to_string());
            }
            Err(e) => {
                r2.push("n/a".into());
                n.push(String::new());
                t.notes.push(format!("{name}: {e}"));
            }
        }
    }
    t.push(r2);
    t.push(n);
    t
}

/// Unit-root results, `study,outcome,t_star,p_value,stars,panels_used`.
pub fn llc_table_doc(title: &str, rows: &[LlcRow]) -> TextTable {
    let mut t = TextTable::new(
        title,
        &[
            "study",
            "outcome",
            "t_star",
            "p_value",
            "stars",
            "panels_used",
        ],
    );
    t.notes
        .push("H0: panels contain unit roots. Ha: panels are stationary.".into());
    t.notes.push(RESIDUAL_CAVEAT.into());
    for r in rows {
        match &r.result {
            Ok(x) => t.push(vec![
                r.study.clone(),
                r.outcome.label().to_string(),
                fmt3(x.t_star),
                fmt_p(x.p_value),
                x.stars.to_string(),
                x.panels_used.len().to_string(),
            ]),
            Err(e) => {
                t.push(vec![
                    r.study.clone(),
                    r.outcome.label().to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "0".into(),
                ]);
                t.notes
                    .push(format!("{} / {}: {e}", r.study, r.outcome.label()));
            }
        }
        for n in &r.notes {
            t.notes
                .push(format!("{} / {}: {n}", r.study, r.outcome.label()));
        }
    }
    t
}

/// Column titles used by the DiD tables, in display order.
pub fn outcome_titles(outcomes: &[Indicator]) -> Vec<&'static str> {
    outcomes.iter().map(|o| o.title()).collect()
}
