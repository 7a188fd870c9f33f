#![forbid(unsafe_code)]

pub mod discrete;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod ode;
pub mod params;
pub mod profile;
pub mod series;
pub mod transforms;

pub use error::{Error, Result};
