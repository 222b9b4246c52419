//! Classical simulation of local projective measurements on a pure entangled
//! qubit pair `√p|00⟩ + √(1−p)|11⟩` using shared randomness and a bounded
//! one-way message, with a Born-rule oracle to check the results against.
//!
//! - [`bloch`]: exact quantum predictions.
//! - [`sampling`]: the densities on the sphere and their samplers.
//! - [`protocols`]: the two-party protocols and the round engine.
//! - [`verify`]: statistical comparison with the oracle and property suites.
//! - [`wire`]: the same protocols split over sockets, with transcript audit.

pub mod bloch;
pub mod error;
pub mod protocols;
pub mod sampling;
pub mod verify;
pub mod wire;

pub use bloch::{BlochVector, CollapseData, JointDistribution, Outcome, StateParam};
pub use error::{Error, Result};
pub use protocols::{ProtocolId, RoundRecord};
