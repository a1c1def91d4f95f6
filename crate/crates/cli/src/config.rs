//! Run settings: the TOML config file merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use oilpanel_core::event_study::{EventOptions, PrePolicy};
use oilpanel_core::ingest::GdpSeries;
use oilpanel_core::panel::{builtin_studies, find_study, Indicator, StudyConfig};
use oilpanel_core::regress::{FeOptions, RegionCoding, SeKind};
use oilpanel_core::unit_root::{Deterministic, LlcOptions};
use serde::Deserialize;

use crate::args::{
    CommonArgs, DeterministicArg, EventArgs, GdpSeriesArg, LlcArgs, PrePolicyArg, RegionCodingArg,
};

/// Bad flags or config values; the process exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Every flag, as it may appear in the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub cache_dir: Option<PathBuf>,
    pub fixture_dir: Option<PathBuf>,
    pub offline: Option<bool>,
    pub refresh: Option<bool>,
    pub studies: Option<Vec<String>>,
    pub outcomes: Option<Vec<String>>,
    pub end_year: Option<i32>,
    /// Study key to event year.
    pub event_years: Option<BTreeMap<String, i32>>,
    pub out: Option<PathBuf>,
    pub cluster: Option<bool>,
    pub region_coding: Option<RegionCodingArg>,
    pub gdp_series: Option<GdpSeriesArg>,
    pub pre_policy: Option<PrePolicyArg>,
    pub lags: Option<usize>,
    pub bandwidth: Option<usize>,
    pub llc_deterministic: Option<DeterministicArg>,
    pub svg: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct DataSource {
    pub dir: PathBuf,
    /// True for a read-only fixture snapshot.
    pub fixture: bool,
    pub offline: bool,
    pub refresh: bool,
    pub gdp: GdpSeries,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub data: DataSource,
    /// Selected studies with overrides applied, in reporting order.
    pub studies: Vec<StudyConfig>,
    /// Explicit outcome filter; empty means the command's default set.
    pub outcomes: Vec<Indicator>,
    pub end_year: Option<i32>,
    /// Studies whose event year was overridden.
    pub event_overrides: BTreeMap<String, i32>,
    pub out: Option<PathBuf>,
    pub fe: FeOptions,
    pub se: SeKind,
    pub event: EventOptions,
    pub llc: LlcOptions,
    pub svg: bool,
}

impl Settings {
    /// `outcomes` filtered by the explicit selection, or all of them.
    pub fn outcomes_or(&self, defaults: &[Indicator]) -> Vec<Indicator> {
        if self.outcomes.is_empty() {
            defaults.to_vec()
        } else {
            self.outcomes.clone()
        }
    }
}

pub fn resolve(
    args: &CommonArgs,
    event: Option<&EventArgs>,
    llc: Option<&LlcArgs>,
    svg_flag: bool,
) -> Result<Settings> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };

    let fixture_dir = args.fixture_dir.clone().or(file.fixture_dir);
    let data = match fixture_dir {
        Some(dir) => DataSource {
            dir,
            fixture: true,
            offline: true,
            refresh: false,
            gdp: GdpSeries::default(),
        },
        None => DataSource {
            dir: args
                .cache_dir
                .clone()
                .or(file.cache_dir)
                .unwrap_or_else(|| PathBuf::from("cache")),
            fixture: false,
            offline: args.offline || file.offline.unwrap_or(false),
            refresh: args.refresh || file.refresh.unwrap_or(false),
            gdp: match args.gdp_series.or(file.gdp_series) {
                Some(GdpSeriesArg::Ppp) => GdpSeries::Ppp,
                _ => GdpSeries::ConstantUsd,
            },
        },
    };
    if data.offline && data.refresh {
        return Err(usage("--refresh needs network access; drop --offline"));
    }

    let keys = if args.studies.is_empty() {
        file.studies.unwrap_or_default()
    } else {
        args.studies.clone()
    };
    let mut studies = if keys.is_empty() {
        builtin_studies()
    } else {
        let mut v: Vec<StudyConfig> = Vec::new();
        for k in &keys {
            let s = find_study(k).ok_or_else(|| usage(format!("unknown study `{k}`")))?;
            if !v.iter().any(|x| x.id == s.id) {
                v.push(s);
            }
        }
        let order: Vec<String> = builtin_studies().into_iter().map(|s| s.id).collect();
        v.sort_by_key(|s| order.iter().position(|id| *id == s.id));
        v
    };

    let mut event_overrides = BTreeMap::new();
    if args.event_years.is_empty() {
        for (k, y) in file.event_years.unwrap_or_default() {
            let s = find_study(&k)
                .ok_or_else(|| usage(format!("unknown study `{k}` in event-years")))?;
            event_overrides.insert(s.id, y);
        }
    } else {
        for raw in &args.event_years {
            let (id, year) = match raw.split_once('=') {
                Some((k, y)) => {
                    let s = find_study(k).ok_or_else(|| usage(format!("unknown study `{k}`")))?;
                    (s.id, y)
                }
                None if studies.len() == 1 => (studies[0].id.clone(), raw.as_str()),
                None => return Err(usage(format!(
                    "--event-year {raw}: name the study (STUDY=YEAR) or select exactly one --study"
                ))),
            };
            let year: i32 = year
                .trim()
                .parse()
                .map_err(|_| usage(format!("--event-year {raw}: not a year")))?;
            event_overrides.insert(id, year);
        }
    }

    let end_year = args.end_year.or(file.end_year);
    for s in &mut studies {
        if let Some(&y) = event_overrides.get(&s.id) {
            *s = s
                .clone()
                .with_event_year(y)
                .map_err(|e| usage(format!("--event-year for {}: {e}", s.id)))?;
        }
        if let Some(y) = end_year {
            *s = s
                .clone()
                .with_end_year(y)
                .map_err(|e| usage(format!("--end-year for {}: {e}", s.id)))?;
        }
    }

    let raw_outcomes = if args.outcomes.is_empty() {
        file.outcomes.unwrap_or_default()
    } else {
        args.outcomes.clone()
    };
    let mut outcomes = Vec::new();
    for o in &raw_outcomes {
        let ind: Indicator = o
            .parse()
            .map_err(|_| usage(format!("unknown outcome `{o}`")))?;
        if !outcomes.contains(&ind) {
            outcomes.push(ind);
        }
    }

    let fe = FeOptions {
        region_coding: match args.region_coding.or(file.region_coding) {
            Some(RegionCodingArg::ByLabel) => RegionCoding::ByLabel,
            _ => RegionCoding::Pooled,
        },
        ..FeOptions::default()
    };
    let se = if args.cluster || file.cluster.unwrap_or(false) {
        SeKind::ClusterCountry
    } else {
        SeKind::Classical
    };
    let pre_policy = match event.and_then(|e| e.pre_policy).or(file.pre_policy) {
        Some(PrePolicyArg::Drop) => PrePolicy::Drop,
        Some(PrePolicyArg::Strict) => PrePolicy::Strict,
        _ => PrePolicy::Pool,
    };
    let llc_opts = LlcOptions {
        deterministic: match llc
            .and_then(|l| l.llc_deterministic)
            .or(file.llc_deterministic)
        {
            Some(DeterministicArg::Constant) => Deterministic::Constant,
            _ => Deterministic::None,
        },
        lags: llc.and_then(|l| l.lags).or(file.lags),
        bandwidth: llc.and_then(|l| l.bandwidth).or(file.bandwidth),
    };

    Ok(Settings {
        data,
        studies,
        outcomes,
        end_year,
        event_overrides,
        out: args.out.clone().or(file.out),
        fe,
        se,
        event: EventOptions {
            pre_policy,
            fe,
            se,
            ..EventOptions::default()
        },
        llc: llc_opts,
        svg: svg_flag || file.svg.unwrap_or(false),
    })
}
