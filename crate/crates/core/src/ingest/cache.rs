//! On-disk cache: one long-format CSV per indicator plus `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::panel::{format_value, read_observations, Indicator, Observation};

pub const MANIFEST_FILE: &str = "manifest.json";
const HEADER: &str = "country,region,year,indicator,value";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub indicator: String,
    pub country: String,
    pub fetched_at: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

/// A cache directory. Nothing is read until asked.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

fn sha256_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for l in lines {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Writes `contents` to `path` through a temp file in the same directory.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_line(o: &Observation) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        o.country.as_str(),
        o.region.as_str(),
        &o.year.to_string(),
        o.indicator.label(),
        &o.value.map(format_value).unwrap_or_default(),
    ])?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut s = String::from_utf8(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    s.pop();
    Ok(s)
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn indicator_path(&self, indicator: Indicator) -> PathBuf {
        self.dir.join(format!("{}.csv", indicator.label()))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST_FILE)
    }

    pub fn has_indicator(&self, indicator: Indicator) -> bool {
        self.indicator_path(indicator).is_file()
    }

    /// Indicators with a file in the cache, in canonical order.
    pub fn indicators(&self) -> Vec<Indicator> {
        Indicator::ALL
            .into_iter()
            .filter(|&i| self.has_indicator(i))
            .collect()
    }

    pub fn read_manifest(&self) -> Result<Manifest> {
        let path = self.manifest_path();
        if !path.is_file() {
            return Ok(Manifest::default());
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    fn write_manifest(&self, manifest: &Manifest) -> Result<()> {
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        write_atomic(&self.manifest_path(), text.as_bytes())
    }

    /// Checks row counts and hashes of one indicator file against the
    /// manifest, in both directions.
    pub fn verify(&self, indicator: Indicator) -> Result<()> {
        let path = self.indicator_path(indicator);
        if !path.is_file() {
            return Err(Error::MissingIndicator(path));
        }
        let text = fs::read_to_string(&path)?;
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::Integrity(format!("{}: bad header", path.display())));
        }
        let mut by_country: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for line in lines {
            let country = line.split(',').next().unwrap_or_default();
            by_country.entry(country).or_default().push(line);
        }
        let manifest = self.read_manifest()?;
        let expected: BTreeMap<&str, &ManifestEntry> = manifest
            .entries
            .iter()
            .filter(|e| e.indicator == indicator.label())
            .map(|e| (e.country.as_str(), e))
            .collect();
        for (country, rows) in &by_country {
            let entry = expected.get(country).ok_or_else(|| {
                Error::Integrity(format!("{indicator}/{country}: not in manifest"))
            })?;
            if entry.rows != rows.len() {
                return Err(Error::Integrity(format!(
                    "{indicator}/{country}: manifest says {} rows, file has {}",
                    entry.rows,
                    rows.len()
                )));
            }
            let hash = sha256_lines(rows.iter().copied());
            if hash != entry.sha256 {
                return Err(Error::Integrity(format!(
                    "{indicator}/{country}: hash mismatch"
                )));
            }
        }
        if let Some(c) = expected.keys().find(|c| !by_country.contains_key(*c)) {
            return Err(Error::Integrity(format!(
                "{indicator}/{c}: in manifest but absent from file"
            )));
        }
        Ok(())
    }

    /// Reads one indicator file after verifying it.
    pub fn read_indicator(&self, indicator: Indicator) -> Result<Vec<Observation>> {
        self.verify(indicator)?;
        let obs = read_observations(fs::File::open(self.indicator_path(indicator))?)?;
        if let Some(o) = obs.iter().find(|o| o.indicator != indicator) {
            return Err(Error::Integrity(format!(
                "{} holds a {} row",
                self.indicator_path(indicator).display(),
                o.indicator
            )));
        }
        Ok(obs)
    }

    /// Replaces one indicator file and its manifest entries. Rows are
    /// written sorted by (country, year).
    pub fn write_indicator(
        &self,
        indicator: Indicator,
        mut observations: Vec<Observation>,
        fetched_at: &str,
    ) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        observations.sort_by(|a, b| (&a.country, a.year).cmp(&(&b.country, b.year)));
        let mut text = String::from(HEADER);
        text.push('\n');
        let mut by_country: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for o in &observations {
            if o.indicator != indicator {
                return Err(Error::InvalidDataset(format!(
                    "{} row passed for {indicator}",
                    o.indicator
                )));
            }
            let line = csv_line(o)?;
            text.push_str(&line);
            text.push('\n');
            by_country
                .entry(o.country.as_str().to_string())
                .or_default()
                .push(line);
        }
        write_atomic(&self.indicator_path(indicator), text.as_bytes())?;

        let mut manifest = self.read_manifest()?;
        manifest
            .entries
            .retain(|e| e.indicator != indicator.label());
        for (country, lines) in by_country {
            manifest.entries.push(ManifestEntry {
                indicator: indicator.label().to_string(),
                rows: lines.len(),
                sha256: sha256_lines(lines.iter().map(String::as_str)),
                country,
                fetched_at: fetched_at.to_string(),
            });
        }
        manifest
            .entries
            .sort_by(|a, b| (&a.indicator, &a.country).cmp(&(&b.indicator, &b.country)));
        self.write_manifest(&manifest)
    }
}
