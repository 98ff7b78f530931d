//! Reduced generalized locally Toeplitz (GLT) matrix sequences.
//!
//! Toeplitz and diagonal-sampling generators, restriction of full-grid
//! sequences to subdomains of the unit hypercube, Shortley-Weller finite
//! differences and P1 finite elements on such subdomains, and the numerics
//! needed to compare spectra against their symbols.

pub mod cli;
pub mod domain;
pub mod error;
pub mod export;
pub mod exprlang;
pub mod fd_sw;
pub mod fe_p1;
pub mod glt;
pub mod matrix;
pub mod multiindex;
pub mod reduction;
pub mod spectra;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
