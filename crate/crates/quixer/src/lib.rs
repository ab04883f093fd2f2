//! Classical simulation, end-to-end training, and hardware resource
//! estimation for the Quixer quantum transformer.
//!
//! The model encodes each token of a context window as a parameterised
//! unitary, mixes the window with a linear combination of unitaries, applies
//! a learned polynomial to the mixture, reads out single-qubit Pauli
//! expectations, and finishes with a small classical head trained on
//! next-token prediction.

pub mod checkpoint;
pub mod circuit;
pub mod config;
pub mod error;
pub mod grad;
pub mod lcu;
pub mod model;
pub mod qsvt;
pub mod resources;
pub mod state;
pub mod text;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
