use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "oilpanel",
    version,
    about = "Oil-discovery panel estimators: DiD, event studies, synthetic control, LLC",
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download the World Bank indicators into the cache.
    Fetch,
    /// Treated and control summary statistics.
    Summarize(OutputArgs),
    /// Fixed-effects difference-in-differences.
    Did(OutputArgs),
    /// Binned event-study regressions.
    EventStudy {
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        event: EventArgs,
    },
    /// Synthetic-control weights and gap curves.
    Synth {
        #[command(flatten)]
        output: OutputArgs,
        /// Also draw each gap curve as SVG (needs --out).
        #[arg(long)]
        svg: bool,
    },
    /// Levin-Lin-Chu test on DiD residuals.
    UnitRoot {
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        llc: LlcArgs,
    },
    /// Write every table, gap curve and robustness run into --out.
    ReproduceAll {
        #[command(flatten)]
        event: EventArgs,
        #[command(flatten)]
        llc: LlcArgs,
        /// Also draw the gap curves as SVG.
        #[arg(long)]
        svg: bool,
    },
}

/// Options shared by every subcommand. Each one can also come from the
/// config file; a flag on the command line wins.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with default values for any of these options.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Indicator cache directory (default `cache`).
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Read-only snapshot to use instead of the cache; implies --offline.
    #[arg(long, global = true, value_name = "DIR")]
    pub fixture_dir: Option<PathBuf>,

    /// Never touch the network.
    #[arg(long, global = true)]
    pub offline: bool,

    /// Re-download indicators that are already cached.
    #[arg(long, global = true, conflicts_with = "offline")]
    pub refresh: bool,

    /// Restrict to a study (id, name or ISO3 code); repeatable.
    #[arg(long = "study", global = true, value_name = "STUDY")]
    pub studies: Vec<String>,

    /// Restrict to an outcome (label, alias or provider code); repeatable.
    #[arg(long = "outcome", global = true, value_name = "OUTCOME")]
    pub outcomes: Vec<String>,

    /// Last year of every study window.
    #[arg(long, global = true, value_name = "YEAR")]
    pub end_year: Option<i32>,

    /// Event-year override, `STUDY=YEAR`, or a bare `YEAR` with one --study.
    #[arg(long = "event-year", global = true, value_name = "[STUDY=]YEAR")]
    pub event_years: Vec<String>,

    /// Output directory; without it results go to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Cluster standard errors by country.
    #[arg(long, global = true)]
    pub cluster: bool,

    #[arg(long, global = true, value_enum)]
    pub region_coding: Option<RegionCodingArg>,

    /// GDP per capita series to download.
    #[arg(long, global = true, value_enum)]
    pub gdp_series: Option<GdpSeriesArg>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Print aligned text instead of CSV.
    #[arg(long)]
    pub text: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EventArgs {
    /// Treatment of treated-country years before the earliest pre bin.
    #[arg(long, value_enum)]
    pub pre_policy: Option<PrePolicyArg>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LlcArgs {
    /// Lag order for every panel.
    #[arg(long)]
    pub lags: Option<usize>,
    /// Bartlett bandwidth for every panel.
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// Deterministic terms in the auxiliary regressions.
    #[arg(long, value_enum)]
    pub llc_deterministic: Option<DeterministicArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionCodingArg {
    Pooled,
    ByLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GdpSeriesArg {
    ConstantUsd,
    Ppp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrePolicyArg {
    Pool,
    Drop,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeterministicArg {
    None,
    Constant,
}
