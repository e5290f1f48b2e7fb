//! File formats, plotting and experiment runners behind the `raman-cnn`
//! command-line tool.

pub mod bundle;
pub mod checkpoint;
pub mod error;
pub mod experiments;
pub mod export;
pub mod fsio;
pub mod hexfloat;
pub mod ingest;
pub mod plot;

pub use error::{Error, Result};
