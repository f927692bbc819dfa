//! Deterministic photon-atom CNOT and photon-atom-atom Toffoli gates built
//! from single-photon reflection off single-sided atom-cavity nodes.
//!
//! The crate is layered bottom-up:
//!
//! * [`cavity`] computes the steady-state reflection amplitude of a node in
//!   the weak-excitation limit, plus a bad-cavity regime diagnostic.
//! * [`state`] holds the sub-normalized joint state of one path-encoded,
//!   polarization-encoded photon and up to a few atomic qubits, and applies
//!   the optical and atomic primitives.
//! * [`circuit`] assembles the two gate circuits, runs them, and reads and
//!   writes a line-oriented circuit description format.
//! * [`metrics`] evaluates per-input fidelity and efficiency both in closed
//!   form and through the engine, and averages them over input angles.
//! * [`sweep`] tabulates the averages against the coupling ratio.
//!
//! Basis ordering used by every dense vector or matrix in the crate is
//! (photon polarization, atom 0, atom 1, ...) with `R < L` and `0 < 1`,
//! the photon being the most significant index.

pub mod cavity;
pub mod circuit;
mod error;
pub mod metrics;
pub mod quadrature;
pub mod state;
pub mod sweep;

pub use error::{Error, Result};

pub use cavity::{CavityParams, ReflectionPair};
pub use circuit::{BoundCircuit, CircuitSpec, GateKind, RunOutput};
pub use metrics::{GateMetrics, InputAngles, ToffoliXi};
pub use state::{HybridState, Polarization};
