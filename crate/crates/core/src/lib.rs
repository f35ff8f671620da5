//! Denoising of complex-valued hyperspectral cubes.
//!
//! The cube filter projects the spectral dimension onto a minimum-error
//! eigen-subspace, denoises each eigenimage with a complex-domain
//! block-matching HOSVD filter and maps the result back to every band.

pub mod ccf;
pub mod cdbm3d;
pub mod cube;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod subspace;
pub mod synth;

pub use cube::{chsc, reshape_to_cube, reshape_to_matrix, ComplexCube, SpectralMatrix};
pub use error::{Error, Result};
