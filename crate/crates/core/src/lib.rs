pub mod audio;
pub mod augment;
pub mod classifiers;
pub mod data;
pub mod error;
pub mod experiments;
pub mod gan;
pub mod io;
pub mod nn;

pub use error::{Error, Result};
