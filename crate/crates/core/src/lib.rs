//! Absorption-time laws for positive self-similar Markov processes whose
//! Lamperti-underlying Lévy process is spectrally negative.

pub mod absorption;
pub mod closed_forms;
pub mod error;
pub mod levy;
pub mod mc;
pub mod models;
pub mod quad;
pub mod roots;
pub mod series;
pub mod special;
pub mod sum;
pub mod validation;

pub use error::{Error, Result};
