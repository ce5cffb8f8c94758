//! Dense statevector simulation.
//!
//! Amplitudes are stored in double precision, indexed with qubit 0 as the most
//! significant bit (see [`crate::pauli`]).

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, Pauli, PauliString};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 30;

/// A quantum gate with concrete qubits and angle.
///
/// Rotations implement `exp(-i angle sigma / 2)`, `PauliExp` implements
/// `exp(+i angle sigma_a (x) sigma_b)` and `GlobalPhase` multiplies by `exp(i angle)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    X { qubit: usize },
    Y { qubit: usize },
    Z { qubit: usize },
    H { qubit: usize },
    Cnot { control: usize, target: usize },
    Cry { control: usize, target: usize, angle: f64 },
    PauliExp { qubits: [usize; 2], axes: [Pauli; 2], angle: f64 },
    GlobalPhase { angle: f64 },
    PauliString(PauliString),
    /// Applies the string only on the `control = 1` subspace.
    ControlledPauli { control: usize, string: PauliString },
}

impl Gate {
    pub fn is_parametrised(&self) -> bool {
        matches!(
            self,
            Gate::Rx { .. }
                | Gate::Ry { .. }
                | Gate::Rz { .. }
                | Gate::Cry { .. }
                | Gate::PauliExp { .. }
                | Gate::GlobalPhase { .. }
        )
    }

    /// Copy of a parametrised gate with its angle replaced; other kinds are returned unchanged.
    pub fn with_angle(&self, value: f64) -> Gate {
        let mut g = self.clone();
        match &mut g {
            Gate::Rx { angle, .. }
            | Gate::Ry { angle, .. }
            | Gate::Rz { angle, .. }
            | Gate::Cry { angle, .. }
            | Gate::PauliExp { angle, .. }
            | Gate::GlobalPhase { angle } => *angle = value,
            _ => {}
        }
        g
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::X { qubit }
            | Gate::Y { qubit }
            | Gate::Z { qubit }
            | Gate::H { qubit } => vec![*qubit],
            Gate::Cnot { control, target } | Gate::Cry { control, target, .. } => vec![*control, *target],
            Gate::PauliExp { qubits, .. } => qubits.to_vec(),
            Gate::GlobalPhase { .. } => Vec::new(),
            Gate::PauliString(p) => p.iter().map(|(q, _)| q).collect(),
            Gate::ControlledPauli { control, string } => {
                std::iter::once(*control).chain(string.iter().map(|(q, _)| q)).collect()
            }
        }
    }

    /// Same gate with every qubit index moved up by `offset`.
    pub fn shifted(&self, offset: usize) -> Gate {
        match self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit: qubit + offset, angle: *angle },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit: qubit + offset, angle: *angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit: qubit + offset, angle: *angle },
            Gate::X { qubit } => Gate::X { qubit: qubit + offset },
            Gate::Y { qubit } => Gate::Y { qubit: qubit + offset },
            Gate::Z { qubit } => Gate::Z { qubit: qubit + offset },
            Gate::H { qubit } => Gate::H { qubit: qubit + offset },
            Gate::Cnot { control, target } => Gate::Cnot { control: control + offset, target: target + offset },
            Gate::Cry { control, target, angle } => Gate::Cry {
                control: control + offset,
                target: target + offset,
                angle: *angle,
            },
            Gate::PauliExp { qubits, axes, angle } => Gate::PauliExp {
                qubits: [qubits[0] + offset, qubits[1] + offset],
                axes: *axes,
                angle: *angle,
            },
            Gate::GlobalPhase { angle } => Gate::GlobalPhase { angle: *angle },
            Gate::PauliString(p) => Gate::PauliString(p.shifted(offset)),
            Gate::ControlledPauli { control, string } => Gate::ControlledPauli {
                control: control + offset,
                string: string.shifted(offset),
            },
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for (k, &q) in qs.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            if qs[..k].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        Ok(())
    }

    /// The Pauli string `sigma_a (x) sigma_b` of a `PauliExp` gate.
    pub(crate) fn pauli_pair(qubits: [usize; 2], axes: [Pauli; 2]) -> PauliString {
        PauliString::from_ops([(qubits[0], axes[0]), (qubits[1], axes[1])])
            .expect("validated gates address distinct qubits")
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn rotation_matrix(axis: Pauli, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    match axis {
        Pauli::X => [[c, Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), c]],
        Pauli::Y => [[c, Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), c]],
        Pauli::Z => [[Complex64::from_polar(1.0, -angle / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, angle / 2.0)]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
    normalised: bool,
}

impl StateVector {
    /// Computational basis state; `bits[q]` is the value of qubit `q`.
    pub fn basis_state(n_qubits: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != n_qubits {
            return Err(Error::DimensionMismatch { expected: n_qubits, found: bits.len() });
        }
        check_size(n_qubits)?;
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Ok(Self { n_qubits, amplitudes, normalised: true })
    }

    /// Parses a `0`/`1` bitstring, qubit 0 first.
    pub fn from_bitstring(n_qubits: usize, bits: &str) -> Result<Self> {
        Self::basis_state(n_qubits, &parse_bits(bits)?)
    }

    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        Self::basis_state(n_qubits, &vec![false; n_qubits])
    }

    /// Wraps raw amplitudes. The state is flagged normalised only if its norm is 1 within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: len.next_power_of_two().max(1), found: len });
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits == 0 {
            return Err(Error::DimensionMismatch { expected: 2, found: len });
        }
        let mut s = Self { n_qubits, amplitudes, normalised: false };
        s.normalised = (s.norm_sqr() - 1.0).abs() < 1e-10;
        Ok(s)
    }

    pub(crate) fn zeros_unnormalised(n_qubits: usize) -> Self {
        Self { n_qubits, amplitudes: vec![ZERO; 1 << n_qubits], normalised: false }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// False for tangent states and other vectors not guaranteed to have unit norm.
    pub fn is_normalised(&self) -> bool {
        self.normalised
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. Fails on a zero vector.
    pub fn normalise(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-300 || !n.is_finite() {
            return Err(Error::VanishingNorm);
        }
        let inv = 1.0 / n;
        for a in &mut self.amplitudes {
            *a *= inv;
        }
        self.normalised = true;
        Ok(())
    }

    pub(crate) fn mark_unnormalised(&mut self) {
        self.normalised = false;
    }

    #[cfg(test)]
    pub(crate) fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        if factor.norm_sqr() != 1.0 {
            self.normalised = false;
        }
    }

    /// `self += factor * other`; the result is flagged unnormalised.
    pub(crate) fn add_scaled(&mut self, factor: Complex64, other: &StateVector) {
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += factor * b;
        }
        self.normalised = false;
    }

    fn check_same_dim(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        Ok(())
    }

    /// `sum_k conj(self_k) * ket_k`.
    pub fn inner_product(&self, ket: &StateVector) -> Result<Complex64> {
        self.check_same_dim(ket)?;
        Ok(self.dot_unchecked(ket))
    }

    pub(crate) fn dot_unchecked(&self, ket: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&ket.amplitudes)
            .fold(ZERO, |acc, (b, k)| acc + b.conj() * k)
    }

    /// Returns `gate |self>`, leaving `self` untouched.
    pub fn apply_gate(&self, gate: &Gate) -> Result<StateVector> {
        gate.validate(self.n_qubits)?;
        let mut out = self.clone();
        out.apply_unchecked(gate);
        Ok(out)
    }

    /// In-place application of a gate already validated for this register.
    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        match gate {
            Gate::Rx { qubit, angle } => self.apply_1q(*qubit, &rotation_matrix(Pauli::X, *angle)),
            Gate::Ry { qubit, angle } => self.apply_1q(*qubit, &rotation_matrix(Pauli::Y, *angle)),
            Gate::Rz { qubit, angle } => self.apply_1q(*qubit, &rotation_matrix(Pauli::Z, *angle)),
            Gate::X { qubit } => self.apply_pauli_unchecked(&PauliString::single(*qubit, Pauli::X)),
            Gate::Y { qubit } => self.apply_pauli_unchecked(&PauliString::single(*qubit, Pauli::Y)),
            Gate::Z { qubit } => self.apply_pauli_unchecked(&PauliString::single(*qubit, Pauli::Z)),
            Gate::H { qubit } => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(*qubit, &[[h, h], [h, -h]]);
            }
            Gate::Cnot { control, target } => self.apply_controlled_pauli_unchecked(
                *control,
                &PauliString::single(*target, Pauli::X),
            ),
            Gate::Cry { control, target, angle } => {
                self.apply_controlled_1q(*control, *target, &rotation_matrix(Pauli::Y, *angle))
            }
            Gate::PauliExp { qubits, axes, angle } => {
                // exp(i a P) = cos a + i sin a P for any Pauli string P
                let p = Gate::pauli_pair(*qubits, *axes);
                let mut rotated = self.clone();
                rotated.apply_pauli_unchecked(&p);
                let (s, c) = angle.sin_cos();
                let is = I * s;
                for (a, r) in self.amplitudes.iter_mut().zip(&rotated.amplitudes) {
                    *a = *a * c + is * r;
                }
            }
            Gate::GlobalPhase { angle } => {
                let phase = Complex64::from_polar(1.0, *angle);
                for a in &mut self.amplitudes {
                    *a *= phase;
                }
            }
            Gate::PauliString(p) => self.apply_pauli_unchecked(p),
            Gate::ControlledPauli { control, string } => self.apply_controlled_pauli_unchecked(*control, string),
        }
    }

    fn bit(&self, qubit: usize) -> usize {
        1usize << (self.n_qubits - 1 - qubit)
    }

    fn apply_1q(&mut self, qubit: usize, m: &Mat2) {
        let mask = self.bit(qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_controlled_1q(&mut self, control: usize, target: usize, m: &Mat2) {
        let cmask = self.bit(control);
        let tmask = self.bit(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                let j = i | tmask;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_pauli_unchecked(&mut self, p: &PauliString) {
        if p.is_identity() {
            return;
        }
        let masks = p.masks(self.n_qubits);
        let y_phase = I.powu(masks.n_y);
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (i, &a) in self.amplitudes.iter().enumerate() {
            let sign = if (i & masks.sign_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ masks.flip_mask] = y_phase * sign * a;
        }
        self.amplitudes = out;
    }

    fn apply_controlled_pauli_unchecked(&mut self, control: usize, p: &PauliString) {
        let cmask = self.bit(control);
        let masks = p.masks(self.n_qubits);
        let y_phase = I.powu(masks.n_y);
        let mut out = self.amplitudes.clone();
        for (i, &a) in self.amplitudes.iter().enumerate() {
            if i & cmask != 0 {
                let sign = if (i & masks.sign_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                out[i ^ masks.flip_mask] = y_phase * sign * a;
            }
        }
        self.amplitudes = out;
    }

    /// Returns `p |self>` for a tensor-product Pauli operator.
    pub fn apply_pauli_string(&self, p: &PauliString) -> Result<StateVector> {
        p.check_range(self.n_qubits)?;
        let mut out = self.clone();
        out.apply_pauli_unchecked(p);
        Ok(out)
    }

    /// `<self| p |self>` without allocating.
    fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        let masks = p.masks(self.n_qubits);
        let y_phase = I.powu(masks.n_y);
        let mut acc = ZERO;
        for (i, &a) in self.amplitudes.iter().enumerate() {
            let sign = if (i & masks.sign_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.amplitudes[i ^ masks.flip_mask].conj() * a * sign;
        }
        acc * y_phase
    }

    /// `sum_alpha lambda_alpha <self| h_alpha |self>`, real part only.
    pub fn expectation(&self, h: &Hamiltonian) -> Result<f64> {
        if h.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: h.n_qubits() });
        }
        Ok(h
            .terms()
            .iter()
            .map(|t| t.coefficient * self.pauli_expectation(&t.string).re)
            .sum())
    }

    /// `H |self>` as an unnormalised vector.
    pub fn apply_hamiltonian(&self, h: &Hamiltonian) -> Result<StateVector> {
        if h.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: h.n_qubits() });
        }
        let mut out = StateVector::zeros_unnormalised(self.n_qubits);
        for t in h.terms() {
            let mut term = self.clone();
            term.apply_pauli_unchecked(&t.string);
            out.add_scaled(Complex64::new(t.coefficient, 0.0), &term);
        }
        Ok(out)
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::InvalidConfig("register needs at least one qubit".into()));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooLarge { n_qubits, limit: MAX_QUBITS });
    }
    Ok(())
}

/// Parses a string of `0`/`1` characters, qubit 0 first.
pub fn parse_bits(bits: &str) -> Result<Vec<bool>> {
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidConfig(format!("invalid bit `{other}` in `{bits}`"))),
        })
        .collect()
}

pub fn basis_state(n_qubits: usize, bits: &str) -> Result<StateVector> {
    StateVector::from_bitstring(n_qubits, bits)
}

pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply_gate(gate)
}

pub fn inner_product(bra: &StateVector, ket: &StateVector) -> Result<Complex64> {
    bra.inner_product(ket)
}

pub fn apply_pauli_string(state: &StateVector, p: &PauliString) -> Result<StateVector> {
    state.apply_pauli_string(p)
}

pub fn expectation(state: &StateVector, h: &Hamiltonian) -> Result<f64> {
    state.expectation(h)
}
