pub mod analysis;
pub mod bie_oracle;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod harmonic_data;
pub mod layer;
pub mod np_spectrum;
pub mod quadrature;
pub mod series;
pub mod spectral_solver;

pub use error::{Error, Result};
