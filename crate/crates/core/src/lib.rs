//! Reduced-space simulation of quantum annealing protocols on a small
//! maximum-weight independent set instance.

pub mod error;
pub mod problem;
pub mod spinspace;
pub mod hamiltonian;
pub mod protocols;
pub mod observables;
pub mod dynamics;
pub mod optimize;

pub use error::{Error, Result};
