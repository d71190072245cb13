//! Distance-equilibrium measures on convex curves, point clouds, gridded regions and graphs.

pub mod cli;
pub mod curve;
pub mod energy;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod report;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
