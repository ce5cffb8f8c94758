//! Statevector simulation and variational imaginary-time evolution for
//! ground states of Pauli-string Hamiltonians.
//!
//! The crate is organised bottom-up:
//!
//! * [`pauli`]: Pauli strings, Hamiltonians, the text format and builtin systems.
//! * [`statevector`]: dense amplitudes, gate kernels, expectation values.
//! * [`ansatz`]: parametrised circuits, derivative rules and tangent states.
//! * [`exact`]: dense diagonalisation and exact imaginary-time propagation.
//! * [`noise`]: shot-noise and gate-error model with counter-based streams.
//! * [`solver`] and [`engine`]: the `A theta_dot = C` system and Euler stepping.
//! * [`hadamard`]: ancilla circuits that measure individual A/C terms.
//! * [`harness`]: batch experiments, convergence statistics and output files.

pub mod ansatz;
pub mod engine;
pub mod error;
pub mod exact;
pub mod hadamard;
pub mod harness;
pub mod noise;
pub mod pauli;
pub mod solver;
pub mod statevector;

pub use ansatz::{builtin_ansatz, AnsatzCircuit, AnsatzOptions};
pub use engine::{evolve, EvolutionConfig, Method, TrajectoryRecord};
pub use error::{Error, Result};
pub use noise::NoiseConfig;
pub use pauli::{builtin_hamiltonian, parse_hamiltonian, Hamiltonian, Pauli, PauliString};
pub use solver::SolverSpec;
pub use statevector::{Gate, StateVector};
