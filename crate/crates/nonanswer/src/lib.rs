//! Command-line pipeline around `nonanswer-core`: ingestion, annotation
//! with caching, measures, panel assembly and regression reports.

pub mod annotate;
pub mod backends;
pub mod cache;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod tables;
