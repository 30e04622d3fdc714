pub mod charfun;
pub mod confmap;
pub mod counterexample;
pub mod error;
pub mod harmonic;
pub mod lattice;
pub mod modular;
pub mod profiles;
pub mod quad;

pub use error::{Error, Result};
pub use modular::C64;

/// Crate version recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
