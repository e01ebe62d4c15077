//! Firm-quarter panel construction: forecast features, market outcomes,
//! controls and the joined panel with its selection ledger.

pub mod assemble;
pub mod controls;
pub mod forecast;
pub mod market;
pub mod winsor;

pub use assemble::{assemble_panel, AssembledPanel, PanelOptions, PanelRow, PanelSources, SelectionLedger};
pub use controls::{Controls, Fundamentals};
pub use forecast::{ForecastFeatures, DetailForecast, ForecastInputs, IndividualRow};
pub use market::{DailyObs, MarketOutcomes};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PanelError {
    #[error("prior closing price missing or non-positive")]
    MissingPrice,
    #[error("fewer than two forecasts for dispersion")]
    TooFewForecasts,
    #[error("required field `{0}` missing")]
    MissingField(&'static str),
    #[error("window needs {needed} trading days, {available} available")]
    InsufficientWindow { needed: usize, available: usize },
}
