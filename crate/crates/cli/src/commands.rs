use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use oilpanel_core::did::{did_table, DidCell, DidSpec, DidTable, DidTableOptions};
use oilpanel_core::event_study::{event_table, EventOptions, EventTable, PrePolicy};
use oilpanel_core::ingest::{
    build_available_dataset, fetch_into_cache, Cache, FetchMode, WbClient,
};
use oilpanel_core::panel::{builtin_studies, summary_stats, Indicator, PanelDataset, StudyConfig};
use oilpanel_core::synth::{render_svg, run_synth, SynthOptions, SynthResult};
use oilpanel_core::tables::{
    did_long, did_wide, event_long, event_wide, fmt3, llc_table_doc, summary_table, TextTable,
};
use oilpanel_core::unit_root::{llc_table, LlcRow, RESIDUAL_CAVEAT};

use crate::config::{Settings, UsageError};

const LE: Indicator = Indicator::LifeExpectancyTotal;
const IMR: Indicator = Indicator::InfantMortality;
const U5: Indicator = Indicator::Under5Mortality;

const SUMMARY_VARS: [Indicator; 4] = [
    Indicator::GdpPerCapita,
    LE,
    IMR,
    Indicator::Population15To64,
];
const TABLE4: [Indicator; 3] = [
    LE,
    Indicator::LifeExpectancyFemale,
    Indicator::LifeExpectancyMale,
];
const TABLE5: [Indicator; 4] = [
    IMR,
    U5,
    Indicator::AdultMortalityFemale,
    Indicator::AdultMortalityMale,
];
const MORTALITY_PANEL: [Indicator; 3] = [LE, IMR, U5];

/// Where tables go: files in a directory, or stdout.
pub struct Sink {
    dir: Option<PathBuf>,
    text: bool,
    first: bool,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, text: bool) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self {
            dir,
            text,
            first: true,
        })
    }

    /// `name.csv` and `name.txt` in the directory, or one of them on stdout.
    pub fn table(&mut self, name: &str, csv: &TextTable, text: &TextTable) -> Result<()> {
        match &self.dir {
            Some(d) => {
                write(&d.join(format!("{name}.csv")), &csv.to_csv()?)?;
                write(&d.join(format!("{name}.txt")), &text.to_text())?;
            }
            None => {
                if !self.first {
                    println!();
                }
                if self.text {
                    print!("{}", text.to_text());
                } else {
                    print!("{}", csv.to_csv()?);
                }
            }
        }
        self.first = false;
        Ok(())
    }

    pub fn file(&self, rel: &str, contents: &str) -> Result<bool> {
        match &self.dir {
            Some(d) => {
                write(&d.join(rel), contents)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn all_countries() -> Vec<String> {
    let set: BTreeSet<String> = builtin_studies()
        .iter()
        .flat_map(|s| {
            s.countries()
                .map(|c| c.as_str().to_string())
                .collect::<Vec<_>>()
        })
        .collect();
    set.into_iter().collect()
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn download(settings: &Settings, mode: FetchMode) -> Result<Vec<String>> {
    let cache = Cache::new(&settings.data.dir);
    let client = WbClient::from_env()?;
    let countries = all_countries();
    let refs: Vec<&str> = countries.iter().map(String::as_str).collect();
    let report = fetch_into_cache(
        Some(&client),
        &cache,
        &Indicator::ALL,
        &refs,
        mode,
        settings.data.gdp,
        &timestamp(),
    )?;
    let mut lines: Vec<String> = report
        .fetched
        .iter()
        .map(|i| format!("fetched {i}"))
        .chain(report.cached.iter().map(|i| format!("cached {i}")))
        .collect();
    lines.extend(report.notes);
    Ok(lines)
}

/// Loads the dataset, fetching missing indicators first when online.
pub fn load_dataset(settings: &Settings) -> Result<PanelDataset> {
    if !settings.data.offline {
        for line in download(
            settings,
            FetchMode::Online {
                refresh: settings.data.refresh,
            },
        )? {
            eprintln!("{line}");
        }
    }
    let cache = Cache::new(&settings.data.dir);
    for ind in cache.indicators() {
        cache.verify(ind)?;
    }
    build_available_dataset(&cache).with_context(|| {
        format!(
            "no usable data in {}; run `oilpanel fetch` or pass --fixture-dir",
            settings.data.dir.display()
        )
    })
}

pub fn fetch(settings: &Settings) -> Result<()> {
    if settings.data.fixture {
        return Err(
            UsageError("fetch writes to --cache-dir, not a fixture snapshot".into()).into(),
        );
    }
    if settings.data.offline {
        return Err(UsageError("fetch needs network access; drop --offline".into()).into());
    }
    for line in download(
        settings,
        FetchMode::Online {
            refresh: settings.data.refresh,
        },
    )? {
        println!("{line}");
    }
    Ok(())
}

fn summary_doc(ds: &PanelDataset, studies: &[StudyConfig], vars: &[Indicator]) -> TextTable {
    let rows: Vec<_> = studies
        .iter()
        .map(|s| (s.name.clone(), summary_stats(ds, s, vars)))
        .collect();
    let mut t = summary_table("Summary statistics", &rows);
    t.notes
        .push("Control columns pool every control country of the study.".into());
    t
}

pub fn summarize(settings: &Settings, text: bool) -> Result<()> {
    let ds = load_dataset(settings)?;
    let vars = settings.outcomes_or(&SUMMARY_VARS);
    let doc = summary_doc(&ds, &settings.studies, &vars);
    Sink::new(settings.out.clone(), text)?.table("summary", &doc, &doc)
}

fn did_doc(ds: &PanelDataset, settings: &Settings, outcomes: &[Indicator]) -> DidTable {
    did_table(
        ds,
        &settings.studies,
        outcomes,
        DidTableOptions {
            fe: settings.fe,
            se: settings.se,
            arab_spring: settings.end_year.is_none(),
        },
    )
}

fn did_available(t: &DidTable) -> bool {
    t.rows
        .iter()
        .flat_map(|r| &r.cells)
        .any(|c| matches!(c, DidCell::Estimate { .. }))
}

pub fn did(settings: &Settings, text: bool) -> Result<()> {
    let ds = load_dataset(settings)?;
    let outcomes = settings.outcomes_or(&Indicator::OUTCOMES);
    let table = did_doc(&ds, settings, &outcomes);
    let title = "Difference-in-differences";
    Sink::new(settings.out.clone(), text)?.table(
        "did",
        &did_long(title, &table),
        &did_wide(title, &table),
    )?;
    if !did_available(&table) {
        bail!("no estimate could be computed; see the note column");
    }
    Ok(())
}

fn event_doc(
    ds: &PanelDataset,
    studies: &[StudyConfig],
    o: Indicator,
    opts: &EventOptions,
) -> EventTable {
    event_table(ds, studies, o, opts)
}

fn event_title(o: Indicator) -> String {
    format!("Event study, {}", o.title())
}

pub fn event_study(settings: &Settings, text: bool) -> Result<()> {
    let ds = load_dataset(settings)?;
    let mut sink = Sink::new(settings.out.clone(), text)?;
    let mut any = false;
    for o in settings.outcomes_or(&[LE]) {
        let t = event_doc(&ds, &settings.studies, o, &settings.event);
        any |= t.results.iter().any(Result::is_ok);
        let title = event_title(o);
        sink.table(
            &format!("event_{}", o.label()),
            &event_long(&title, &t),
            &event_wide(&title, &t),
        )?;
        for (name, r) in t.studies.iter().zip(&t.results) {
            if let Err(e) = r {
                eprintln!("{name} / {o}: {e}");
            }
        }
    }
    if !any {
        bail!("no event study could be estimated");
    }
    Ok(())
}

struct SynthRun {
    study: String,
    outcome: Indicator,
    result: std::result::Result<SynthResult, String>,
}

fn synth_runs(ds: &PanelDataset, studies: &[StudyConfig], outcomes: &[Indicator]) -> Vec<SynthRun> {
    let opts = SynthOptions::default();
    let mut runs = Vec::new();
    for s in studies {
        for &o in outcomes {
            runs.push(SynthRun {
                study: s.id.clone(),
                outcome: o,
                result: run_synth(ds, s, o, &opts).map_err(|e| e.to_string()),
            });
        }
    }
    runs
}

fn synth_summary(runs: &[SynthRun]) -> (TextTable, TextTable) {
    let mut summary = TextTable::new(
        "Synthetic control",
        &[
            "study",
            "outcome",
            "pre_rmspe",
            "treated_pre_mean",
            "poor_overlap",
            "v_fallback",
            "donors",
            "end_gap",
        ],
    );
    let mut weights = TextTable::new(
        "Synthetic-control donor weights",
        &["study", "outcome", "donor", "weight"],
    );
    for r in runs {
        match &r.result {
            Ok(s) => {
                let used = s.weights.iter().filter(|w| **w > 0.0).count();
                let end_gap = s.curve.iter().rev().find_map(|p| p.gap);
                summary.push(vec![
                    r.study.clone(),
                    r.outcome.label().into(),
                    fmt3(s.pre_rmspe),
                    fmt3(s.treated_pre_mean),
                    s.poor_overlap.to_string(),
                    s.v_fallback.to_string(),
                    used.to_string(),
                    end_gap.map(fmt3).unwrap_or_default(),
                ]);
                for (d, w) in s.donors.iter().zip(&s.weights) {
                    weights.push(vec![
                        r.study.clone(),
                        r.outcome.label().into(),
                        d.as_str().into(),
                        fmt3(*w),
                    ]);
                }
                for n in &s.notes {
                    summary
                        .notes
                        .push(format!("{} / {}: {n}", r.study, r.outcome));
                }
            }
            Err(e) => {
                summary.push(vec![r.study.clone(), r.outcome.label().into()]);
                summary
                    .notes
                    .push(format!("{} / {}: unavailable: {e}", r.study, r.outcome));
            }
        }
    }
    summary
        .notes
        .push("Gap curves carry no significance information.".into());
    (summary, weights)
}

fn write_synth_files(sink: &Sink, runs: &[SynthRun], svg: bool) -> Result<()> {
    for r in runs {
        if let Ok(s) = &r.result {
            let stem = format!("synth/{}_{}", r.study, r.outcome.label());
            let mut buf = Vec::new();
            s.write_curve_csv(&mut buf)?;
            sink.file(&format!("{stem}.csv"), &String::from_utf8(buf)?)?;
            if svg {
                sink.file(&format!("{stem}.svg"), &render_svg(s))?;
            }
        }
    }
    Ok(())
}

pub fn synth(settings: &Settings, text: bool) -> Result<()> {
    if settings.svg && settings.out.is_none() {
        return Err(UsageError("--svg needs --out".into()).into());
    }
    let ds = load_dataset(settings)?;
    let runs = synth_runs(&ds, &settings.studies, &settings.outcomes_or(&[LE]));
    let (summary, weights) = synth_summary(&runs);
    let mut sink = Sink::new(settings.out.clone(), text)?;
    sink.table("synth_summary", &summary, &summary)?;
    sink.table("synth_weights", &weights, &weights)?;
    write_synth_files(&sink, &runs, settings.svg)?;
    if runs.iter().all(|r| r.result.is_err()) {
        bail!("no synthetic control could be built");
    }
    Ok(())
}

fn llc_rows(ds: &PanelDataset, settings: &Settings, outcomes: &[Indicator]) -> Vec<LlcRow> {
    let Some(first) = settings.studies.first() else {
        return Vec::new();
    };
    let mut template = DidSpec::new(first.clone(), LE);
    template.fe = settings.fe;
    template.se = settings.se;
    llc_table(ds, &settings.studies, outcomes, &template, settings.llc)
}

pub fn unit_root(settings: &Settings, text: bool) -> Result<()> {
    let ds = load_dataset(settings)?;
    let rows = llc_rows(&ds, settings, &settings.outcomes_or(&MORTALITY_PANEL));
    let doc = llc_table_doc("Levin-Lin-Chu test on DiD residuals: adjusted t*", &rows);
    Sink::new(settings.out.clone(), text)?.table("unit_root", &doc, &doc)?;
    if rows.iter().all(|r| r.result.is_err()) {
        bail!("no unit-root test could be computed");
    }
    Ok(())
}

/// Per-cell notes, skipping indicators the dataset lacks altogether (those
/// are reported once).
fn did_notes(t: &DidTable, tag: &str, absent: &[Indicator], notes: &mut Vec<String>) {
    for row in &t.rows {
        for (o, c) in t.outcomes.iter().zip(&row.cells) {
            if absent.contains(o) {
                continue;
            }
            if let DidCell::Unavailable { reason } = c {
                notes.push(format!("{tag}: {} / {o}: {reason}", row.label));
            }
        }
    }
}

fn event_notes(t: &EventTable, tag: &str, absent: &[Indicator], notes: &mut Vec<String>) {
    if absent.contains(&t.outcome) {
        return;
    }
    for (name, r) in t.studies.iter().zip(&t.results) {
        match r {
            Ok(r) => {
                if !r.coverage.is_complete() {
                    notes.push(format!("{tag}: {name}: {}", r.coverage));
                }
                for u in &r.unidentified {
                    notes.push(format!("{tag}: {name}: bin {u} not identified"));
                }
            }
            Err(e) => notes.push(format!("{tag}: {name}: {e}")),
        }
    }
}

pub fn reproduce_all(settings: &Settings) -> Result<()> {
    if !settings.outcomes.is_empty() {
        return Err(
            UsageError("reproduce-all always runs every outcome; drop --outcome".into()).into(),
        );
    }
    let out = settings.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let ds = load_dataset(settings)?;
    let mut sink = Sink::new(Some(out.clone()), false)?;
    let present = ds.indicators();
    let absent: Vec<Indicator> = Indicator::ALL
        .into_iter()
        .filter(|i| !present.contains(i))
        .collect();
    let mut notes: Vec<String> = absent
        .iter()
        .map(|i| format!("data: {i} is not in the dataset; its cells are blank"))
        .collect();
    let studies = &settings.studies;

    let t3 = summary_doc(&ds, studies, &SUMMARY_VARS);
    sink.table("table3", &t3, &t3)?;

    for (name, outcomes) in [("table4", &TABLE4[..]), ("table5", &TABLE5[..])] {
        let t = did_doc(&ds, settings, outcomes);
        let title = format!("Difference-in-differences ({name})");
        sink.table(name, &did_long(&title, &t), &did_wide(&title, &t))?;
        did_notes(&t, name, &absent, &mut notes);
    }

    for (name, o) in [("table6", LE), ("table7", IMR), ("table8", U5)] {
        let t = event_doc(&ds, studies, o, &settings.event);
        let title = event_title(o);
        sink.table(name, &event_long(&title, &t), &event_wide(&title, &t))?;
        event_notes(&t, name, &absent, &mut notes);
    }

    let rows = llc_rows(&ds, settings, &MORTALITY_PANEL);
    let t9 = llc_table_doc("Levin-Lin-Chu test on DiD residuals: adjusted t*", &rows);
    sink.table("table9", &t9, &t9)?;
    for r in rows.iter().filter(|r| !absent.contains(&r.outcome)) {
        if let Err(e) = &r.result {
            notes.push(format!("table9: {} / {}: {e}", r.study, r.outcome));
        }
    }

    let runs = synth_runs(&ds, studies, &TABLE4);
    let (summary, weights) = synth_summary(&runs);
    sink.table("synth/summary", &summary, &summary)?;
    sink.table("synth/weights", &weights, &weights)?;
    write_synth_files(&sink, &runs, settings.svg)?;
    for r in &runs {
        match &r.result {
            Ok(s) => notes.extend(
                s.notes
                    .iter()
                    .map(|n| format!("synth: {} / {}: {n}", r.study, r.outcome)),
            ),
            Err(e) if !absent.contains(&r.outcome) => {
                notes.push(format!("synth: {} / {}: {e}", r.study, r.outcome))
            }
            Err(_) => {}
        }
    }

    robustness(&ds, settings, &absent, &mut sink, &mut notes)?;

    notes.push(format!("table9: {RESIDUAL_CAVEAT}"));
    let mut text = String::new();
    for n in &notes {
        text.push_str(n);
        text.push('\n');
    }
    sink.file("notes.txt", &text)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

/// Yemen with 1988 as the event year, and the event study with early
/// pre-event years dropped instead of pooled.
fn robustness(
    ds: &PanelDataset,
    settings: &Settings,
    absent: &[Indicator],
    sink: &mut Sink,
    notes: &mut Vec<String>,
) -> Result<()> {
    if let Some(yemen) = settings.studies.iter().find(|s| s.id == "yemen") {
        if !settings.event_overrides.contains_key("yemen") {
            let moved = vec![yemen.clone().with_event_year(1988)?];
            let mut s = settings.clone();
            s.studies = moved.clone();
            let t = did_doc(ds, &s, &TABLE4);
            let title = "Yemen, event year 1988: difference-in-differences";
            sink.table(
                "robustness/yemen_1988_did",
                &did_long(title, &t),
                &did_wide(title, &t),
            )?;
            did_notes(&t, "robustness/yemen_1988_did", absent, notes);
            for o in MORTALITY_PANEL {
                let t = event_doc(ds, &moved, o, &settings.event);
                let title = format!("Yemen, event year 1988: {}", event_title(o));
                let name = format!("robustness/yemen_1988_event_{}", o.label());
                sink.table(&name, &event_long(&title, &t), &event_wide(&title, &t))?;
                event_notes(&t, &name, absent, notes);
            }
        }
    }
    let alt = match settings.event.pre_policy {
        PrePolicy::Drop => PrePolicy::Pool,
        _ => PrePolicy::Drop,
    };
    let opts = EventOptions {
        pre_policy: alt,
        ..settings.event
    };
    let label = match alt {
        PrePolicy::Pool => "pool",
        _ => "drop",
    };
    let t = event_doc(ds, &settings.studies, LE, &opts);
    let title = format!("{} (early pre-event years: {label})", event_title(LE));
    let name = format!("robustness/table6_pre_{label}");
    sink.table(&name, &event_long(&title, &t), &event_wide(&title, &t))?;
    event_notes(&t, &name, absent, notes);
    Ok(())
}
