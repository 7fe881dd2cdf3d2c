//! H(div)-conforming finite elements on arbitrary simple polygons, built from local
//! Poisson problems with polynomial data and tuned to Raviart–Thomas-like degrees of
//! freedom.

pub mod dofs;
pub mod element;
pub mod error;
pub mod geometry;
pub mod hkspace;
pub mod poisson;
pub mod polyspace;
pub mod rtref;
pub mod verify;

pub use error::{Error, Result};
