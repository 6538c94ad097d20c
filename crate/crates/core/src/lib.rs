pub mod analyzer;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod fibergen;
pub mod mesh;
pub mod models;
pub mod network;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
