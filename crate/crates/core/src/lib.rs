//! Numerical laboratory for the Hitchin self-duality equations on a
//! periodic lattice torus.

pub mod cli;
pub mod error;
pub mod flow;
pub mod hitchin;
pub mod kahler;
pub mod lie;
pub(crate) mod mat;
pub mod moment;
pub mod quillen;
pub mod report;
pub mod runconfig;
pub mod slice;
pub mod store;
pub mod suite;
pub mod surface;

pub use error::{LabError, Result};
