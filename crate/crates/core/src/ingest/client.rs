//! Blocking client for the World Bank v2 indicator API.

use std::thread;
use std::time::Duration;

use serde_json::Value;

use crate::error::{Error, Result};

pub const DEFAULT_BASE: &str = "https://api.worldbank.org/v2";
pub const BASE_ENV: &str = "WB_API_BASE";

/// One `(country, year, value)` record as returned by the provider.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub country: String,
    pub year: i32,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchOutput {
    pub records: Vec<RawRecord>,
    /// Per-country problems (unknown codes and the like).
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct WbClient {
    base: String,
    http: reqwest::blocking::Client,
    per_page: usize,
    attempts: u32,
    backoff: Duration,
}

enum Page {
    Data {
        pages: usize,
        rows: Vec<Value>,
    },
    /// The API answered with an error message instead of data.
    Message(String),
}

impl WbClient {
    /// Uses `WB_API_BASE` when set, the public endpoint otherwise.
    pub fn from_env() -> Result<Self> {
        let base = std::env::var(BASE_ENV).unwrap_or_else(|_| DEFAULT_BASE.to_string());
        Self::new(base)
    }

    pub fn new(base: impl Into<String>) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .user_agent(concat!("oilpanel/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| Error::Http(e.to_string()))?;
        Ok(Self {
            base: base.into().trim_end_matches('/').to_string(),
            http,
            per_page: 1000,
            attempts: 3,
            backoff: Duration::from_millis(500),
        })
    }

    pub fn with_per_page(mut self, per_page: usize) -> Self {
        self.per_page = per_page.max(1);
        self
    }

    /// Delay before the second attempt; it doubles after each failure.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn get_json(&self, url: &str) -> Result<Value> {
        let mut delay = self.backoff;
        let mut last = String::new();
        for attempt in 1..=self.attempts {
            match self.http.get(url).send() {
                Ok(resp) if resp.status().is_success() => {
                    let text = resp.text().map_err(|e| Error::Http(e.to_string()))?;
                    return serde_json::from_str(&text)
                        .map_err(|e| Error::Malformed(format!("{url}: {e}")));
                }
                Ok(resp) if resp.status().is_client_error() => {
                    return Err(Error::Http(format!("{url}: HTTP {}", resp.status())));
                }
                Ok(resp) => last = format!("HTTP {}", resp.status()),
                Err(e) => last = e.to_string(),
            }
            if attempt < self.attempts {
                thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(Error::Http(format!(
            "{url}: giving up after {} attempts: {last}",
            self.attempts
        )))
    }

    fn page(&self, countries: &str, code: &str, years: (i32, i32), page: usize) -> Result<Page> {
        let url = format!(
            "{}/country/{countries}/indicator/{code}?format=json&per_page={}&date={}:{}&page={page}",
            self.base, self.per_page, years.0, years.1
        );
        let v = self.get_json(&url)?;
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Malformed(format!("{url}: top level is not an array")))?;
        let head = arr
            .first()
            .ok_or_else(|| Error::Malformed(format!("{url}: empty response")))?;
        if let Some(msg) = head.get("message") {
            let text = msg
                .as_array()
                .and_then(|m| m.first())
                .and_then(|m| m.get("value"))
                .and_then(Value::as_str)
                .unwrap_or("error")
                .to_string();
            return Ok(Page::Message(text));
        }
        let pages = match head.get("pages") {
            Some(Value::Number(n)) => n.as_u64().unwrap_or(1) as usize,
            Some(Value::String(s)) => s.parse().unwrap_or(1),
            _ => return Err(Error::Malformed(format!("{url}: no page count"))),
        };
        let rows = match arr.get(1) {
            Some(Value::Array(rows)) => rows.clone(),
            Some(Value::Null) | None => Vec::new(),
            Some(_) => return Err(Error::Malformed(format!("{url}: data is not an array"))),
        };
        Ok(Page::Data { pages, rows })
    }

    /// All pages for a `;`-joined country list, or the API's message.
    fn fetch_batch(
        &self,
        countries: &str,
        code: &str,
        years: (i32, i32),
    ) -> Result<std::result::Result<Vec<RawRecord>, String>> {
        let mut out = Vec::new();
        let mut page = 1;
        loop {
            match self.page(countries, code, years, page)? {
                Page::Message(m) => return Ok(Err(m)),
                Page::Data { pages, rows } => {
                    for row in &rows {
                        out.push(parse_record(row)?);
                    }
                    if page >= pages {
                        break;
                    }
                    page += 1;
                }
            }
        }
        Ok(Ok(out))
    }

    /// Fetches one indicator for the given ISO3 codes. An error message from
    /// the API on the batched request triggers per-country requests, so one
    /// bad code only costs that country (reported in `notes`).
    pub fn fetch_indicator(
        &self,
        code: &str,
        countries: &[&str],
        years: (i32, i32),
    ) -> Result<FetchOutput> {
        let mut output = FetchOutput::default();
        if countries.is_empty() {
            return Ok(output);
        }
        match self.fetch_batch(&countries.join(";"), code, years)? {
            Ok(records) => output.records = records,
            Err(_) => {
                for c in countries {
                    match self.fetch_batch(c, code, years)? {
                        Ok(records) => output.records.extend(records),
                        Err(m) => output.notes.push(format!("{c}: {m}")),
                    }
                }
            }
        }
        output
            .records
            .retain(|r| r.year >= years.0 && r.year <= years.1);
        output
            .records
            .sort_by(|a, b| (&a.country, a.year).cmp(&(&b.country, b.year)));
        output
            .records
            .dedup_by(|a, b| a.country == b.country && a.year == b.year);
        for c in countries {
            if !output
                .records
                .iter()
                .any(|r| r.country.eq_ignore_ascii_case(c))
                && !output.notes.iter().any(|n| n.starts_with(&format!("{c}:")))
            {
                output.notes.push(format!("{c}: no records returned"));
            }
        }
        Ok(output)
    }
}

fn parse_record(row: &Value) -> Result<RawRecord> {
    let country = row
        .get("countryiso3code")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .or_else(|| row.pointer("/country/id").and_then(Value::as_str))
        .ok_or_else(|| Error::Malformed(format!("record without country: {row}")))?
        .to_uppercase();
    let year = row
        .get("date")
        .and_then(Value::as_str)
        .and_then(|d| d.parse::<i32>().ok())
        .ok_or_else(|| Error::Malformed(format!("record without year: {row}")))?;
    let value = match row.get("value") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) if s.is_empty() => None,
        Some(Value::String(s)) => Some(
            s.parse()
                .map_err(|_| Error::Malformed(format!("bad value `{s}`")))?,
        ),
        Some(other) => return Err(Error::Malformed(format!("bad value {other}"))),
    };
    Ok(RawRecord {
        country,
        year,
        value,
    })
}
