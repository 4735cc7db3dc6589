//! Variational preparation of multi-qubit states on a dense statevector
//! simulator, with Fubini-Study cost, parameter-shift gradients, Adam and
//! natural-gradient training, readout noise and experiment drivers.

mod error;

pub mod ansatz;
pub mod circuits;
pub mod cost;
pub mod harness;
pub mod noise;
pub mod optim;
pub mod rng;
pub mod statevector;
pub mod targets;

pub use error::{Error, Result};
