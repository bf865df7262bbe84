//! Numerical laboratory for quantum stochastic convolution cocycles and
//! quantum Lévy processes on finite-dimensional *-bialgebras.

pub mod algebra;
pub mod cocycle;
pub mod convolution;
pub mod error;
pub mod io;
pub mod linalg;
pub mod perturb;
pub mod report;
pub mod sample;
pub mod schurmann;

pub use error::{Error, Result};
