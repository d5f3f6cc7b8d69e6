pub mod analysis;
pub mod cascade;
pub mod error;
pub mod model;
pub mod oracle;
pub mod propagation;
pub mod skeleton;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
