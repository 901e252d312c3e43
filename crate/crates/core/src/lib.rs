//! Quantum annealing with boundary-flat annealing schedules.
//!
//! The crate evolves `i dpsi/ds = tau [(1 - f(s)) H_kin + f(s) H_pot] psi`
//! exactly at desk scale and measures how the final excitation decays with
//! the annealing time `tau` for schedules whose first `m - 1` derivatives
//! vanish at both ends.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod propagator;
pub mod schedules;
pub mod spectral;

pub use error::{Error, Result};
