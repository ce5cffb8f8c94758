//! Pauli strings, weighted Pauli sums and their line-oriented text format.
//!
//! Qubit `q` of an `n`-qubit register maps to bit `n - 1 - q` of a basis-state
//! index, so qubit 0 is the most significant bit and `|q0 q1 ... q(n-1)>` reads
//! left to right as a binary number.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Coefficients whose merged magnitude falls below this are dropped.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Bit masks describing how a Pauli string acts on computational basis states.
///
/// `P|i> = i^n_y * (-1)^popcount(i & sign_mask) |i ^ flip_mask>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMasks {
    pub flip_mask: usize,
    pub sign_mask: usize,
    pub n_y: u32,
}

/// Tensor product of single-qubit Paulis; absent qubits act as identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    ops: BTreeMap<usize, Pauli>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, op: Pauli) -> Self {
        let mut ops = BTreeMap::new();
        ops.insert(qubit, op);
        Self { ops }
    }

    /// Builds a string from `(qubit, axis)` pairs, rejecting repeated qubits.
    pub fn from_ops<I>(ops: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Pauli)>,
    {
        let mut map = BTreeMap::new();
        for (q, p) in ops {
            if map.insert(q, p).is_some() {
                return Err(Error::DuplicateQubit(q));
            }
        }
        Ok(Self { ops: map })
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        self.ops.get(&qubit).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.ops.iter().map(|(&q, &p)| (q, p))
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.ops.keys().next_back().copied()
    }

    /// Relabels every qubit `q` as `q + offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            ops: self.ops.iter().map(|(&q, &p)| (q + offset, p)).collect(),
        }
    }

    pub fn check_range(&self, n_qubits: usize) -> Result<()> {
        match self.max_qubit() {
            Some(q) if q >= n_qubits => Err(Error::QubitOutOfRange { index: q, n_qubits }),
            _ => Ok(()),
        }
    }

    /// Masks for an `n_qubits` register. Caller guarantees indices are in range.
    pub fn masks(&self, n_qubits: usize) -> PauliMasks {
        let mut flip_mask = 0;
        let mut sign_mask = 0;
        let mut n_y = 0;
        for (&q, &p) in &self.ops {
            let bit = 1usize << (n_qubits - 1 - q);
            match p {
                Pauli::X => flip_mask |= bit,
                Pauli::Y => {
                    flip_mask |= bit;
                    sign_mask |= bit;
                    n_y += 1;
                }
                Pauli::Z => sign_mask |= bit,
            }
        }
        PauliMasks { flip_mask, sign_mask, n_y }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return f.write_str("I");
        }
        for (k, (q, p)) in self.ops.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", p.symbol(), q)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

/// Weighted sum of Pauli strings on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    /// Validates and merges terms. Repeated strings have their coefficients
    /// summed at the position of the first occurrence; near-zero sums are dropped.
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidConfig("Hamiltonian needs at least one qubit".into()));
        }
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(terms.len());
        let mut position: BTreeMap<PauliString, usize> = BTreeMap::new();
        for term in terms {
            if !term.coefficient.is_finite() {
                return Err(Error::NonFiniteCoefficient(term.coefficient));
            }
            term.string.check_range(n_qubits)?;
            match position.get(&term.string) {
                Some(&k) => merged[k].coefficient += term.coefficient,
                None => {
                    position.insert(term.string.clone(), merged.len());
                    merged.push(term);
                }
            }
        }
        merged.retain(|t| t.coefficient.abs() >= MERGE_TOLERANCE);
        Ok(Self { n_qubits, terms: merged })
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        Self::new(
            n_qubits,
            terms
                .into_iter()
                .map(|(coefficient, string)| PauliTerm { coefficient, string })
                .collect(),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `string`, or zero when absent.
    pub fn coefficient(&self, string: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|t| &t.string == string)
            .map_or(0.0, |t| t.coefficient)
    }

    /// Equality up to term order, comparing coefficients exactly.
    pub fn same_terms(&self, other: &Hamiltonian) -> bool {
        self.n_qubits == other.n_qubits
            && self.terms.len() == other.terms.len()
            && self
                .terms
                .iter()
                .all(|t| other.terms.iter().any(|u| u.string == t.string && u.coefficient == t.coefficient))
    }

    /// Serialises to the line format accepted by [`parse_hamiltonian`].
    ///
    /// Coefficients use the shortest decimal form that parses back to the same
    /// `f64`, so a round trip is exact.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        for t in &self.terms {
            out.push_str(&format!("{} {}\n", format_coefficient(t.coefficient), t.string));
        }
        out
    }
}

/// Minimum significant digits written by [`serialize_hamiltonian`].
pub const SERIALIZED_DIGITS: usize = 12;

/// Shortest round-trip decimal form, zero-padded to at least [`SERIALIZED_DIGITS`] significant digits.
fn format_coefficient(c: f64) -> String {
    let shortest = format!("{c:?}");
    let (mantissa, exponent) = match shortest.find('e') {
        Some(at) => shortest.split_at(at),
        None => (shortest.as_str(), ""),
    };
    let digits = mantissa.trim_start_matches('-').replace('.', "");
    let significant = digits.trim_start_matches('0').len().max(1);
    let mut padded = mantissa.to_string();
    if significant < SERIALIZED_DIGITS {
        if !padded.contains('.') {
            padded.push('.');
        }
        padded.extend(std::iter::repeat_n('0', SERIALIZED_DIGITS - significant));
    }
    padded + exponent
}

impl fmt::Display for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Hamiltonian {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_hamiltonian(s)
    }
}

pub fn serialize_hamiltonian(h: &Hamiltonian) -> String {
    h.to_text()
}

/// Parses the line format: optional `qubits <n>` header, then one
/// `<coefficient> <factor>...` term per line. Blank lines and `#` comments are skipped.
pub fn parse_hamiltonian(text: &str) -> Result<Hamiltonian> {
    let mut declared: Option<usize> = None;
    let mut terms = Vec::new();
    let mut seen_content = false;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut fields = content.split_whitespace();
        let head = fields.next().expect("non-empty line has a field");

        if head == "qubits" {
            if seen_content {
                return Err(Error::Parse { line, msg: "`qubits` header must come first".into() });
            }
            seen_content = true;
            let n = fields
                .next()
                .ok_or_else(|| Error::Parse { line, msg: "missing qubit count".into() })?;
            let n: usize = n
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("invalid qubit count `{n}`") })?;
            if n == 0 {
                return Err(Error::Parse { line, msg: "qubit count must be positive".into() });
            }
            if fields.next().is_some() {
                return Err(Error::Parse { line, msg: "trailing tokens after qubit count".into() });
            }
            declared = Some(n);
            continue;
        }
        seen_content = true;

        let coefficient: f64 = head
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("invalid coefficient `{head}`") })?;
        if !coefficient.is_finite() {
            return Err(Error::Parse { line, msg: format!("coefficient `{head}` is not finite") });
        }

        let factors: Vec<&str> = fields.collect();
        if factors.is_empty() {
            return Err(Error::Parse { line, msg: "term has no Pauli factors".into() });
        }
        let string = parse_factors(&factors, line)?;
        terms.push(PauliTerm { coefficient, string });
    }

    if terms.is_empty() {
        return Err(Error::EmptyInput);
    }

    let needed = terms
        .iter()
        .filter_map(|t| t.string.max_qubit())
        .max()
        .map_or(1, |q| q + 1);
    let n_qubits = match declared {
        Some(n) if n < needed => {
            return Err(Error::QubitOutOfRange { index: needed - 1, n_qubits: n });
        }
        Some(n) => n,
        None => needed,
    };
    Hamiltonian::new(n_qubits, terms)
}

fn parse_factors(factors: &[&str], line: usize) -> Result<PauliString> {
    if factors.contains(&"I") {
        if factors.len() == 1 {
            return Ok(PauliString::identity());
        }
        return Err(Error::Parse { line, msg: "`I` must appear alone".into() });
    }
    let mut ops = BTreeMap::new();
    for factor in factors {
        let mut chars = factor.chars();
        let axis = chars
            .next()
            .and_then(Pauli::from_symbol)
            .ok_or_else(|| Error::Parse { line, msg: format!("invalid factor `{factor}`") })?;
        let index = chars.as_str();
        if index.starts_with('-') {
            return Err(Error::NegativeIndex { line });
        }
        if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse { line, msg: format!("invalid factor `{factor}`") });
        }
        let qubit: usize = index
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("qubit index `{index}` too large") })?;
        if ops.insert(qubit, axis).is_some() {
            return Err(Error::DuplicateAxis { line, qubit });
        }
    }
    Ok(PauliString { ops })
}

pub const BUILTIN_HAMILTONIANS: [&str; 3] = ["h2-sto3g-0.75", "toy-a", "toy-b"];

/// Reduced two-qubit H2 coefficients (g0..g5) at 0.75 Angstrom, in Hartree.
pub const H2_STO3G_075: [f64; 6] = [0.2252, 0.3435, -0.4347, 0.5716, 0.0910, 0.0910];

pub fn builtin_hamiltonian(name: &str) -> Result<Hamiltonian> {
    use Pauli::*;
    let z0 = PauliString::single(0, Z);
    let z1 = PauliString::single(1, Z);
    let zz = PauliString::from_ops([(0, Z), (1, Z)])?;
    match name {
        "h2-sto3g-0.75" => {
            let g = H2_STO3G_075;
            Hamiltonian::from_terms(
                2,
                [
                    (g[0], PauliString::identity()),
                    (g[1], z0),
                    (g[2], z1),
                    (g[3], zz),
                    (g[4], PauliString::from_ops([(0, Y), (1, Y)])?),
                    (g[5], PauliString::from_ops([(0, X), (1, X)])?),
                ],
            )
        }
        // diag(1, 2, 3, 0)
        "toy-a" => Hamiltonian::from_terms(2, [(1.5, PauliString::identity()), (0.5, z1), (-1.0, zz)]),
        // diag(1, 1, 2, 0)
        "toy-b" => Hamiltonian::from_terms(2, [(1.0, PauliString::identity()), (0.5, z1), (-0.5, zz)]),
        other => Err(Error::UnknownHamiltonian(other.to_string())),
    }
}
