//! Ancilla interference circuits that measure individual A and C terms.
//!
//! Each term has the form `a Re(e^{i phase} <0|V~_k^dag U|0>)`. The circuit
//! prepares an ancilla in `(|0> + e^{i phase}|1>)/sqrt(2)`, runs the ansatz on the
//! system register, inserts `sigma_k` controlled on ancilla `|0>` (an X-sandwiched
//! control) and the second operator controlled on ancilla `|1>`, then applies a
//! Hadamard to the ancilla. `<Z_ancilla>` equals the real part above.
//!
//! The ancilla is qubit 0 of an `n + 1` qubit register; system qubit `q` becomes `q + 1`.

use num_complex::Complex64;

use crate::ansatz::AnsatzCircuit;
use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, PauliString};
use crate::statevector::{Gate, StateVector};

const ANCILLA: usize = 0;

/// Which term to measure. `k` and `l` index [`AnsatzCircuit::insertions`] of parameters `i` and `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HadamardTerm {
    /// `Re(e^{i phase} <V~_{k,i} | V~_{l,j}>)`
    A { i: usize, k: usize, j: usize, l: usize },
    /// `Re(e^{i phase} <V~_{k,i} | h_alpha | phi>)`
    C { i: usize, k: usize, alpha: usize },
}

fn insertion<'a>(circuit: &'a AnsatzCircuit, i: usize, k: usize) -> Result<(usize, &'a PauliString, Complex64)> {
    if i >= circuit.n_params() {
        return Err(Error::ParamOutOfRange { index: i, n_params: circuit.n_params() });
    }
    let ins = circuit.insertions(i).get(k).ok_or_else(|| {
        Error::InvalidConfig(format!("parameter {i} has {} insertion(s), asked for {k}", circuit.insertions(i).len()))
    })?;
    Ok((ins.gate_index, &ins.sigma, ins.factor))
}

/// Simulates the interference circuit for `term` and returns `<Z>` on the ancilla.
pub fn hadamard_test_entry(
    circuit: &AnsatzCircuit,
    theta: &[f64],
    h: Option<&Hamiltonian>,
    term: HadamardTerm,
    phase: f64,
) -> Result<f64> {
    let gates = circuit.bind(theta)?;
    let n = circuit.n_qubits();

    // first operator goes on the ancilla-|0> branch, second on the ancilla-|1> branch
    let (first, second_at, second): ((usize, &PauliString), Option<usize>, PauliString) = match term {
        HadamardTerm::A { i, k, j, l } => {
            let (gi, si, _) = insertion(circuit, i, k)?;
            let (gj, sj, _) = insertion(circuit, j, l)?;
            ((gi, si), Some(gj), sj.clone())
        }
        HadamardTerm::C { i, k, alpha } => {
            let h = h.ok_or_else(|| Error::InvalidConfig("C terms need a Hamiltonian".into()))?;
            if h.n_qubits() != n {
                return Err(Error::DimensionMismatch { expected: n, found: h.n_qubits() });
            }
            let (gi, si, _) = insertion(circuit, i, k)?;
            let t = h.terms().get(alpha).ok_or_else(|| {
                Error::InvalidConfig(format!("Hamiltonian has {} term(s), asked for {alpha}", h.len()))
            })?;
            ((gi, si), None, t.string.clone())
        }
    };

    let mut bits = vec![false; n + 1];
    bits[1..].copy_from_slice(circuit.initial_bits());
    let mut state = StateVector::basis_state(n + 1, &bits)?;
    state.apply_unchecked(&Gate::H { qubit: ANCILLA });
    // Rz differs from diag(1, e^{i phase}) by a global phase only
    state.apply_unchecked(&Gate::Rz { qubit: ANCILLA, angle: phase });

    let insert_first = |state: &mut StateVector| {
        state.apply_unchecked(&Gate::X { qubit: ANCILLA });
        state.apply_unchecked(&Gate::ControlledPauli { control: ANCILLA, string: first.1.shifted(1) });
        state.apply_unchecked(&Gate::X { qubit: ANCILLA });
    };
    let insert_second = |state: &mut StateVector| {
        state.apply_unchecked(&Gate::ControlledPauli { control: ANCILLA, string: second.shifted(1) });
    };
    match second_at {
        Some(gj) => {
            // gates after the later insertion act identically on both branches and cancel
            let last = gj.max(first.0);
            for (pos, gate) in gates.iter().enumerate().take(last + 1) {
                if pos == first.0 {
                    insert_first(&mut state);
                }
                if pos == gj {
                    insert_second(&mut state);
                }
                if pos < last {
                    state.apply_unchecked(&gate.shifted(1));
                }
            }
        }
        None => {
            for (pos, gate) in gates.iter().enumerate() {
                if pos == first.0 {
                    insert_first(&mut state);
                }
                state.apply_unchecked(&gate.shifted(1));
            }
            insert_second(&mut state);
        }
    }
    state.apply_unchecked(&Gate::H { qubit: ANCILLA });

    let half = 1usize << n;
    let amps = state.amplitudes();
    let p0: f64 = amps[..half].iter().map(|a| a.norm_sqr()).sum();
    let p1: f64 = amps[half..].iter().map(|a| a.norm_sqr()).sum();
    Ok(p0 - p1)
}

/// Magnitude and phase `(a, phase)` with `a e^{i phase}` the complex weight of `term`:
/// `conj(f_k) f_l` for A terms and `-conj(f_k) lambda_alpha` for C terms.
pub fn term_weight(circuit: &AnsatzCircuit, h: Option<&Hamiltonian>, term: HadamardTerm) -> Result<(f64, f64)> {
    let w = match term {
        HadamardTerm::A { i, k, j, l } => {
            let (_, _, fk) = insertion(circuit, i, k)?;
            let (_, _, fl) = insertion(circuit, j, l)?;
            fk.conj() * fl
        }
        HadamardTerm::C { i, k, alpha } => {
            let h = h.ok_or_else(|| Error::InvalidConfig("C terms need a Hamiltonian".into()))?;
            let (_, _, fk) = insertion(circuit, i, k)?;
            let lambda = h.terms().get(alpha).map(|t| t.coefficient).ok_or_else(|| {
                Error::InvalidConfig(format!("Hamiltonian has {} term(s), asked for {alpha}", h.len()))
            })?;
            -fk.conj() * lambda
        }
    };
    Ok((w.norm(), w.arg()))
}

/// `A_ij` reassembled from interference-circuit measurements.
pub fn hadamard_a_entry(circuit: &AnsatzCircuit, theta: &[f64], i: usize, j: usize) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..circuit.insertions(i).len() {
        for l in 0..circuit.insertions(j).len() {
            let term = HadamardTerm::A { i, k, j, l };
            let (a, phase) = term_weight(circuit, None, term)?;
            total += a * hadamard_test_entry(circuit, theta, None, term, phase)?;
        }
    }
    Ok(total)
}

/// `C_i` reassembled from interference-circuit measurements.
pub fn hadamard_c_entry(circuit: &AnsatzCircuit, theta: &[f64], h: &Hamiltonian, i: usize) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..circuit.insertions(i).len() {
        for alpha in 0..h.len() {
            let term = HadamardTerm::C { i, k, alpha };
            let (a, phase) = term_weight(circuit, Some(h), term)?;
            total += a * hadamard_test_entry(circuit, theta, Some(h), term, phase)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::ansatz::{builtin_ansatz, AnsatzOptions};
    use crate::engine::{compute_a_matrix, compute_c_vector};
    use crate::pauli::builtin_hamiltonian;

    fn direct_term(circuit: &AnsatzCircuit, theta: &[f64], i: usize, k: usize, j: usize, l: usize, phase: f64) -> f64 {
        let (pieces, _) = circuit.insertion_states(theta).unwrap();
        (Complex64::from_polar(1.0, phase) * pieces[i][k].inner_product(&pieces[j][l]).unwrap()).re
    }

    #[test]
    fn identity_overlap() {
        // global-phase insertions are the identity, so U reduces to the identity
        let a = builtin_ansatz("toy-a", &AnsatzOptions::default()).unwrap();
        let theta = [0.4, 1.1, 0.2];
        let term = HadamardTerm::A { i: 2, k: 0, j: 2, l: 0 };
        assert!((hadamard_test_entry(&a, &theta, None, term, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(hadamard_test_entry(&a, &theta, None, term, FRAC_PI_2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn a27_matches_direct() {
        let a = builtin_ansatz("h2-universal", &AnsatzOptions::default()).unwrap();
        let theta = [0.3, 1.2, 2.9, 4.1, 0.8, 5.5, 3.3, 1.7];
        // theta_2 and theta_7 in 1-based labels are indices 1 and 6
        for phase in [0.0, 0.7, FRAC_PI_2, -2.0] {
            let z = hadamard_test_entry(&a, &theta, None, HadamardTerm::A { i: 1, k: 0, j: 6, l: 0 }, phase).unwrap();
            assert!((z - direct_term(&a, &theta, 1, 0, 6, 0, phase)).abs() < 1e-12);
            let z = hadamard_test_entry(&a, &theta, None, HadamardTerm::A { i: 6, k: 0, j: 1, l: 0 }, phase).unwrap();
            assert!((z - direct_term(&a, &theta, 6, 0, 1, 0, phase)).abs() < 1e-12);
        }
        let m = compute_a_matrix(&a, &theta, None).unwrap();
        assert!((hadamard_a_entry(&a, &theta, 1, 6).unwrap() - m[(1, 6)]).abs() < 1e-10);
    }

    #[test]
    fn cry_and_shared_entries() {
        for name in ["toy-a", "toy-b"] {
            let a = builtin_ansatz(name, &AnsatzOptions::default()).unwrap();
            let h = builtin_hamiltonian(name).unwrap();
            let theta = [1.3, -0.6, 0.9];
            let m = compute_a_matrix(&a, &theta, None).unwrap();
            let c = compute_c_vector(&a, &theta, &h, None).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((hadamard_a_entry(&a, &theta, i, j).unwrap() - m[(i, j)]).abs() < 1e-10, "{name} A{i}{j}");
                }
                assert!((hadamard_c_entry(&a, &theta, &h, i).unwrap() - c[i]).abs() < 1e-10, "{name} C{i}");
            }
        }
    }

    #[test]
    fn invalid_terms() {
        let a = builtin_ansatz("toy-a", &AnsatzOptions::default()).unwrap();
        let theta = [0.0; 3];
        assert!(hadamard_test_entry(&a, &theta, None, HadamardTerm::A { i: 5, k: 0, j: 0, l: 0 }, 0.0).is_err());
        assert!(hadamard_test_entry(&a, &theta, None, HadamardTerm::A { i: 0, k: 3, j: 0, l: 0 }, 0.0).is_err());
        assert!(hadamard_test_entry(&a, &theta, None, HadamardTerm::C { i: 0, k: 0, alpha: 0 }, 0.0).is_err());
        let h = builtin_hamiltonian("toy-a").unwrap();
        assert!(hadamard_test_entry(&a, &theta, Some(&h), HadamardTerm::C { i: 0, k: 0, alpha: 9 }, 0.0).is_err());
    }
}
