use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty Hamiltonian input")]
    EmptyInput,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: qubit {qubit} carries more than one Pauli axis")]
    DuplicateAxis { line: usize, qubit: usize },

    #[error("line {line}: negative qubit index")]
    NegativeIndex { line: usize },

    #[error("unknown builtin Hamiltonian `{0}`")]
    UnknownHamiltonian(String),

    #[error("coefficient {0} is not finite")]
    NonFiniteCoefficient(f64),

    #[error("qubit index {index} out of range for {n_qubits} qubit(s)")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("gate addresses qubit {0} more than once")]
    DuplicateQubit(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown ansatz `{0}`")]
    UnknownAnsatz(String),

    #[error("invalid ansatz option: {0}")]
    InvalidOption(String),

    #[error("parameter index {index} out of range for {n_params} parameter(s)")]
    ParamOutOfRange { index: usize, n_params: usize },

    #[error("{n_qubits} qubits exceeds the dense-matrix limit of {limit}")]
    TooLarge { n_qubits: usize, limit: usize },

    #[error("propagated state norm vanished (below 1e-300)")]
    VanishingNorm,

    #[error("expectation {mean} lies outside [-{range}, {range}]")]
    OutsideRange { mean: f64, range: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evolution aborted at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("no candidate step size kept the energy non-increasing")]
    NoStableStep,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
