//! Simulation, transformation and auditing of quantum multi-prover interactive
//! proof systems at small scale.
//!
//! A protocol is a [`ProtocolInstance`]: a verifier given as explicit circuits,
//! one circuit per turn for each prover, and a state shared by the provers.
//! [`simulate`] computes acceptance probabilities exactly, [`transforms`]
//! rewrites protocols into equivalent ones with fewer turns or perfect
//! completeness, and [`adversary`] searches for good dishonest strategies.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod circuit;
pub mod error;
pub mod fixtures;
mod exec;
pub mod linalg;
pub mod projector;
pub mod protocol;
pub mod register;
pub mod simulate;
pub mod state;
pub mod tolerance;
pub mod transforms;

pub use circuit::{q, Circuit, Control, Gate, GateOp, QubitRef};
pub use error::{Error, Result};
pub use exec::{BasisIndex, MAX_QUBITS};
pub use projector::ProjectorOp;
pub use protocol::{validate, Claims, ProtocolInstance, ProverStrategy, Step, VerifierSpec, Violation};
pub use register::{Layout, Register};
pub use simulate::{acceptance_probability, run, CoinMode, RunOptions, Transcript};
pub use state::StateVector;
pub use tolerance::Tolerances;
