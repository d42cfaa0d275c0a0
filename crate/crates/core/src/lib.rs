//! Rates, power-allocation games and leader sweeps for two-user multi-band
//! interference relay channels.

pub mod af_analytic;
pub mod afgain;
pub mod error;
pub mod game;
pub mod gen;
pub mod leader;
pub mod numeric;
pub mod rates;
pub mod scenario;

pub use error::{Error, Result};
