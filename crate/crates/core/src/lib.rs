pub mod assembly;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod rom;
pub mod study;

pub use error::{Error, Result};
