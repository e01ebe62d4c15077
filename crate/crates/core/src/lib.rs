//! Core algorithms for measuring managers' non-responses (NORs) in
//! earnings-call Q&A and relating them to analyst forecast properties.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs: transcript parsing, lexicon metrics, prompt
//! rendering and reply validation, NOR aggregation, forecast/market feature
//! construction and the statistics engine. File IO, the annotation cache,
//! remote model backends and the command-line tool live in the `nonanswer`
//! companion crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod corpus;
pub mod date;
pub mod elicitor;
pub mod lexicon;
pub mod measures;
pub mod panel;
pub mod stats;
pub mod text;

mod math;

pub use corpus::{QaExchange, Role, Transcript, Turn};
pub use date::{Date, Quarter};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
