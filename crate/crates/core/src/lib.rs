pub mod analysis;
pub mod defense;
pub mod error;
pub mod mic;
pub mod modulation;
pub mod pipeline;
pub mod signal;
pub mod voice;

pub use error::{Error, Result};
