//! Panel-data estimators for resource-discovery studies: two-way fixed-effect
//! difference-in-differences, binned event studies, synthetic control and the
//! Levin-Lin-Chu panel unit-root test, plus World Bank data ingestion.

pub mod did;
pub mod error;
pub mod event_study;
pub mod ingest;
pub mod panel;
pub mod regress;
pub mod synth;
pub mod tables;
pub mod unit_root;

pub use error::{Error, Result};
