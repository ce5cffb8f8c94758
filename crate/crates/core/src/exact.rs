//! Dense ground truth: Hamiltonian matrices, Hermitian eigendecomposition,
//! exact normalised imaginary-time propagation, fidelities and finite-difference gradients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::ansatz::AnsatzCircuit;
use crate::error::{Error, Result};
use crate::pauli::Hamiltonian;
use crate::statevector::StateVector;

/// Largest register accepted by the dense routines.
pub const DENSE_QUBIT_LIMIT: usize = 12;

/// Eigenvalues closer than this to the minimum count toward ground-state degeneracy.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

fn guard(n_qubits: usize) -> Result<()> {
    if n_qubits > DENSE_QUBIT_LIMIT {
        return Err(Error::TooLarge { n_qubits, limit: DENSE_QUBIT_LIMIT });
    }
    Ok(())
}

/// `sum_alpha lambda_alpha h_alpha` as a dense `2^n x 2^n` matrix.
pub fn dense_matrix(h: &Hamiltonian) -> Result<DMatrix<Complex64>> {
    let n = h.n_qubits();
    guard(n)?;
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let i_unit = Complex64::new(0.0, 1.0);
    for t in h.terms() {
        let masks = t.string.masks(n);
        let y_phase = i_unit.powu(masks.n_y);
        for col in 0..dim {
            let sign = if (col & masks.sign_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(col ^ masks.flip_mask, col)] += y_phase * sign * t.coefficient;
        }
    }
    Ok(m)
}

/// Eigendecomposition of a Hamiltonian, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    n_qubits: usize,
    energies: Vec<f64>,
    /// Column `k` is the eigenvector of `energies[k]`.
    vectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        let m = dense_matrix(h)?;
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k)).collect::<Vec<_>>());
        Ok(Self { n_qubits: h.n_qubits(), energies, vectors })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Number of eigenvalues within [`DEGENERACY_TOLERANCE`] of the minimum.
    pub fn ground_degeneracy(&self) -> usize {
        let e0 = self.energies[0];
        self.energies.iter().take_while(|&&e| e - e0 < DEGENERACY_TOLERANCE).count()
    }

    pub fn eigenstate(&self, k: usize) -> StateVector {
        let amps = self.vectors.column(k).iter().copied().collect();
        let mut s = StateVector::from_amplitudes(amps).expect("eigenvector dimension is a power of two");
        s.normalise().expect("eigenvectors have unit norm");
        s
    }

    /// Squared norm of the projection of `psi` onto the ground eigenspace.
    pub fn ground_space_weight(&self, psi: &StateVector) -> f64 {
        let d = self.ground_degeneracy();
        let v = DVector::from_column_slice(psi.amplitudes());
        (0..d).map(|k| self.vectors.column(k).dotc(&v).norm_sqr()).sum()
    }

    /// `e^{-H tau} psi0 / ||e^{-H tau} psi0||`.
    pub fn imag_evolve(&self, psi0: &StateVector, tau: f64) -> Result<StateVector> {
        if psi0.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: psi0.n_qubits() });
        }
        if tau < 0.0 || !tau.is_finite() {
            return Err(Error::InvalidConfig(format!("imaginary time {tau} must be finite and non-negative")));
        }
        let v = DVector::from_column_slice(psi0.amplitudes());
        let mut coeffs = self.vectors.ad_mul(&v);
        // shifted by the ground energy so the dominant weights stay O(1)
        let e0 = self.ground_energy();
        for (c, &e) in coeffs.iter_mut().zip(&self.energies) {
            *c *= (-(e - e0) * tau).exp();
        }
        let evolved = &self.vectors * coeffs;
        let norm = evolved.norm();
        if !(norm >= 1e-300) {
            return Err(Error::VanishingNorm);
        }
        let mut s = StateVector::from_amplitudes((evolved / Complex64::new(norm, 0.0)).iter().copied().collect())?;
        s.normalise()?;
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    /// Dimension of the ground eigenspace; `state` is one arbitrary member when above 1.
    pub degeneracy: usize,
}

impl GroundState {
    pub fn is_degenerate(&self) -> bool {
        self.degeneracy > 1
    }
}

pub fn ground_state(h: &Hamiltonian) -> Result<GroundState> {
    let spec = Spectrum::new(h)?;
    Ok(GroundState { energy: spec.ground_energy(), state: spec.eigenstate(0), degeneracy: spec.ground_degeneracy() })
}

pub fn exact_imag_evolve(h: &Hamiltonian, psi0: &StateVector, tau: f64) -> Result<StateVector> {
    Spectrum::new(h)?.imag_evolve(psi0, tau)
}

/// `|<a|b>|^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner_product(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Central differences of `E(theta) = <phi(theta)|H|phi(theta)>`.
pub fn finite_diff_gradient(a: &AnsatzCircuit, h: &Hamiltonian, theta: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference step {step} must be positive")));
    }
    let mut work = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            work[i] = theta[i] + step;
            let up = a.prepare_state(&work)?.expectation(h)?;
            work[i] = theta[i] - step;
            let down = a.prepare_state(&work)?.expectation(h)?;
            work[i] = theta[i];
            Ok((up - down) / (2.0 * step))
        })
        .collect()
}
