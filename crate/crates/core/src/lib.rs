//! Detecting person-to-person transmission from household symptom-onset data.

pub mod arrangements;
pub mod asymptotic;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod optim;
pub mod power;
pub mod resampling;
pub mod simulator;
pub mod streams;

pub use error::{Error, Result};
