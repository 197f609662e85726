//! Lowest-order non-conforming virtual element solver for the acoustic
//! vibration eigenproblem in pressure form on polygonal meshes.

pub mod analysis;
pub mod assembly;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod files;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod sparse;
pub mod vem;

pub use error::{Error, Result};
