pub mod config;
pub mod em;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod modes;
pub mod numerics;
pub mod pinv;
pub mod radiation;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
