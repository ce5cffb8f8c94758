//! Parametrised circuits and their analytic tangent states.
//!
//! Every parametrised gate kind has a derivative rule
//! `dU/dtheta = sum_k f_k U sigma_k` with Pauli-string insertions `sigma_k`.
//! The tangent `d|phi>/dtheta_i` sums `f_k V~_k |0>` over every gate bound to
//! parameter `i`, where `V~_k` is the circuit with `sigma_k` inserted just before
//! that gate.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::statevector::{parse_bits, Gate, StateVector};

/// Where a gate's angle comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binding {
    Fixed(f64),
    Param(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundGate {
    pub gate: Gate,
    pub binding: Binding,
}

/// One term `f * sigma` of a gate derivative, placed before the gate at `gate_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct Insertion {
    pub gate_index: usize,
    pub factor: Complex64,
    pub sigma: PauliString,
}

/// `(f_k, sigma_k)` pairs reconstructing `dU/dtheta = sum_k f_k U sigma_k`.
/// Returns `None` for gates without an angle.
pub fn derivative_rule(gate: &Gate) -> Option<Vec<(Complex64, PauliString)>> {
    let half = Complex64::new(0.0, -0.5);
    let rule = match gate {
        Gate::Rx { qubit, .. } => vec![(half, PauliString::single(*qubit, Pauli::X))],
        Gate::Ry { qubit, .. } => vec![(half, PauliString::single(*qubit, Pauli::Y))],
        Gate::Rz { qubit, .. } => vec![(half, PauliString::single(*qubit, Pauli::Z))],
        Gate::Cry { control, target, .. } => vec![
            (Complex64::new(0.0, -0.25), PauliString::single(*target, Pauli::Y)),
            (
                Complex64::new(0.0, 0.25),
                PauliString::from_ops([(*control, Pauli::Z), (*target, Pauli::Y)]).ok()?,
            ),
        ],
        Gate::PauliExp { qubits, axes, .. } => vec![(Complex64::new(0.0, 1.0), Gate::pauli_pair(*qubits, *axes))],
        Gate::GlobalPhase { .. } => vec![(Complex64::new(0.0, 1.0), PauliString::identity())],
        _ => return None,
    };
    Some(rule)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzCircuit {
    n_qubits: usize,
    initial_bits: Vec<bool>,
    gates: Vec<BoundGate>,
    n_params: usize,
    insertions: Vec<Vec<Insertion>>,
}

impl AnsatzCircuit {
    /// Validates gate ranges and requires every index in `0..n_params` to be bound.
    pub fn new(n_qubits: usize, initial_bits: Vec<bool>, gates: Vec<BoundGate>) -> Result<Self> {
        if initial_bits.len() != n_qubits {
            return Err(Error::DimensionMismatch { expected: n_qubits, found: initial_bits.len() });
        }
        let mut n_params = 0;
        for g in &gates {
            g.gate.validate(n_qubits)?;
            if let Binding::Param(i) = g.binding {
                if !g.gate.is_parametrised() {
                    return Err(Error::InvalidConfig(format!("gate {:?} has no angle to bind", g.gate)));
                }
                n_params = n_params.max(i + 1);
            }
        }
        let mut insertions = vec![Vec::new(); n_params];
        for (gate_index, g) in gates.iter().enumerate() {
            if let Binding::Param(i) = g.binding {
                let rule = derivative_rule(&g.gate).expect("parametrised gates have a rule");
                insertions[i].extend(rule.into_iter().map(|(factor, sigma)| Insertion { gate_index, factor, sigma }));
            }
        }
        if let Some(i) = insertions.iter().position(Vec::is_empty) {
            return Err(Error::InvalidConfig(format!("parameter {i} is not bound to any gate")));
        }
        Ok(Self { n_qubits, initial_bits, gates, n_params, insertions })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[BoundGate] {
        &self.gates
    }

    pub fn initial_bits(&self) -> &[bool] {
        &self.initial_bits
    }

    /// Derivative insertions of parameter `i`, in gate order.
    pub fn insertions(&self, i: usize) -> &[Insertion] {
        &self.insertions[i]
    }

    /// Number of gates sharing parameter `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.gates
            .iter()
            .filter(|g| g.binding == Binding::Param(i))
            .count()
    }

    /// Upper bound on the tangent norm for parameter `i`: the sum of `|f_k|` over its insertions.
    pub fn tangent_bound(&self, i: usize) -> f64 {
        self.insertions[i].iter().map(|ins| ins.factor.norm()).sum()
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::basis_state(self.n_qubits, &self.initial_bits).expect("validated on construction")
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch { expected: self.n_params, found: theta.len() });
        }
        Ok(())
    }

    /// Concrete gate list at `theta`.
    pub fn bind(&self, theta: &[f64]) -> Result<Vec<Gate>> {
        self.check_params(theta)?;
        Ok(self.bind_unchecked(theta))
    }

    fn bind_unchecked(&self, theta: &[f64]) -> Vec<Gate> {
        self.gates
            .iter()
            .map(|g| match g.binding {
                Binding::Fixed(v) => g.gate.with_angle(v),
                Binding::Param(i) => g.gate.with_angle(theta[i]),
            })
            .collect()
    }

    pub fn prepare_state(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_params(theta)?;
        let mut state = self.initial_state();
        for g in self.bind_unchecked(theta) {
            state.apply_unchecked(&g);
        }
        Ok(state)
    }

    /// States `U_{g-1} ... U_1 |0>` for every gate position `g`, plus the final state.
    fn prefix_states(&self, gates: &[Gate]) -> Vec<StateVector> {
        let mut out = Vec::with_capacity(gates.len() + 1);
        let mut state = self.initial_state();
        for g in gates {
            out.push(state.clone());
            state.apply_unchecked(g);
        }
        out.push(state);
        out
    }

    /// Normalised states `V~_k |0>` for every insertion of every parameter, with their factors.
    ///
    /// `pieces[i][k]` pairs with `self.insertions(i)[k]`; the last element is the prepared state.
    pub fn insertion_states(&self, theta: &[f64]) -> Result<(Vec<Vec<StateVector>>, StateVector)> {
        self.check_params(theta)?;
        let gates = self.bind_unchecked(theta);
        let prefixes = self.prefix_states(&gates);
        let flat: Vec<(usize, usize)> = self
            .insertions
            .iter()
            .enumerate()
            .flat_map(|(i, ins)| (0..ins.len()).map(move |k| (i, k)))
            .collect();
        let states: Vec<StateVector> = flat
            .par_iter()
            .map(|&(i, k)| {
                let ins = &self.insertions[i][k];
                let mut s = prefixes[ins.gate_index].clone();
                s.apply_unchecked(&Gate::PauliString(ins.sigma.clone()));
                for g in &gates[ins.gate_index..] {
                    s.apply_unchecked(g);
                }
                s
            })
            .collect();
        let mut iter = states.into_iter();
        let pieces = self
            .insertions
            .iter()
            .map(|ins| iter.by_ref().take(ins.len()).collect())
            .collect();
        let prepared = prefixes.into_iter().last().expect("at least the initial state");
        Ok((pieces, prepared))
    }

    /// All tangent states `d|phi>/dtheta_i` together with `|phi>`.
    pub fn tangent_states(&self, theta: &[f64]) -> Result<(Vec<StateVector>, StateVector)> {
        let (pieces, prepared) = self.insertion_states(theta)?;
        let tangents = pieces
            .iter()
            .zip(&self.insertions)
            .map(|(states, ins)| combine(self.n_qubits, ins, states))
            .collect();
        Ok((tangents, prepared))
    }

    /// Unnormalised tangent `d|phi>/dtheta_i`, summing the product rule over shared gates.
    pub fn derivative_state(&self, theta: &[f64], i: usize) -> Result<StateVector> {
        self.check_params(theta)?;
        if i >= self.n_params {
            return Err(Error::ParamOutOfRange { index: i, n_params: self.n_params });
        }
        let gates = self.bind_unchecked(theta);
        let prefixes = self.prefix_states(&gates);
        let states: Vec<StateVector> = self.insertions[i]
            .iter()
            .map(|ins| {
                let mut s = prefixes[ins.gate_index].clone();
                s.apply_unchecked(&Gate::PauliString(ins.sigma.clone()));
                for g in &gates[ins.gate_index..] {
                    s.apply_unchecked(g);
                }
                s
            })
            .collect();
        Ok(combine(self.n_qubits, &self.insertions[i], &states))
    }
}

fn combine(n_qubits: usize, insertions: &[Insertion], states: &[StateVector]) -> StateVector {
    let mut t = StateVector::zeros_unnormalised(n_qubits);
    for (ins, s) in insertions.iter().zip(states) {
        t.add_scaled(ins.factor, s);
    }
    t.mark_unnormalised();
    t
}

pub fn prepare_state(a: &AnsatzCircuit, theta: &[f64]) -> Result<StateVector> {
    a.prepare_state(theta)
}

pub fn derivative_state(a: &AnsatzCircuit, theta: &[f64], i: usize) -> Result<StateVector> {
    a.derivative_state(theta, i)
}

pub const BUILTIN_ANSATZE: [&str; 4] = ["h2-universal", "toy-a", "toy-b", "ldca"];

/// Options for [`builtin_ansatz`]; unset fields take per-ansatz defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnsatzOptions {
    pub n_qubits: Option<usize>,
    pub depth: Option<usize>,
    pub initial_bits: Option<String>,
}

impl AnsatzOptions {
    /// Accepts `n`/`n_qubits`, `M`/`depth` and `bits`/`initial_bits`.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut opts = Self::default();
        for (k, v) in pairs {
            let parse = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::InvalidOption(format!("`{k}` expects a non-negative integer, got `{v}`")))
            };
            match k {
                "n" | "n_qubits" | "qubits" => opts.n_qubits = Some(parse(v)?),
                "M" | "m" | "depth" => opts.depth = Some(parse(v)?),
                "bits" | "initial_bits" => opts.initial_bits = Some(v.to_string()),
                other => return Err(Error::InvalidOption(format!("unknown option `{other}`"))),
            }
        }
        Ok(opts)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        Self::from_pairs(map.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

pub fn builtin_ansatz(name: &str, options: &AnsatzOptions) -> Result<AnsatzCircuit> {
    let fixed_register = |n: usize| -> Result<()> {
        match options.n_qubits {
            Some(m) if m != n => Err(Error::InvalidOption(format!("`{name}` is fixed to {n} qubits"))),
            _ => Ok(()),
        }
    };
    let bits = |default: &str, n: usize| -> Result<Vec<bool>> {
        let bits = parse_bits(options.initial_bits.as_deref().unwrap_or(default))?;
        if bits.len() != n {
            return Err(Error::InvalidOption(format!(
                "initial bitstring has length {}, expected {n}",
                bits.len()
            )));
        }
        Ok(bits)
    };
    match name {
        "h2-universal" => {
            fixed_register(2)?;
            h2_universal(bits("00", 2)?)
        }
        "toy-a" => {
            fixed_register(2)?;
            toy_a(bits("00", 2)?)
        }
        "toy-b" => {
            fixed_register(2)?;
            toy_b(bits("01", 2)?)
        }
        "ldca" => {
            let n = options.n_qubits.unwrap_or(8);
            let depth = options.depth.unwrap_or(3);
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidOption(format!("ldca needs an even qubit count >= 2, got {n}")));
            }
            if depth == 0 {
                return Err(Error::InvalidOption("ldca depth must be at least 1".into()));
            }
            ldca(n, depth, bits(&"0".repeat(n), n)?)
        }
        other => Err(Error::UnknownAnsatz(other.to_string())),
    }
}

fn param(gate: Gate, i: usize) -> BoundGate {
    BoundGate { gate, binding: Binding::Param(i) }
}

fn fixed(gate: Gate) -> BoundGate {
    BoundGate { gate, binding: Binding::Fixed(0.0) }
}

/// Eight-parameter hardware-efficient circuit: RY,RZ on each wire, CNOT(1 -> 0),
/// RY,RZ on each wire. Parameters 0,1,4,5 act on qubit 1 and 2,3,6,7 on qubit 0.
fn h2_universal(bits: Vec<bool>) -> Result<AnsatzCircuit> {
    let gates = vec![
        param(Gate::Ry { qubit: 1, angle: 0.0 }, 0),
        param(Gate::Rz { qubit: 1, angle: 0.0 }, 1),
        param(Gate::Ry { qubit: 0, angle: 0.0 }, 2),
        param(Gate::Rz { qubit: 0, angle: 0.0 }, 3),
        fixed(Gate::Cnot { control: 1, target: 0 }),
        param(Gate::Ry { qubit: 1, angle: 0.0 }, 4),
        param(Gate::Rz { qubit: 1, angle: 0.0 }, 5),
        param(Gate::Ry { qubit: 0, angle: 0.0 }, 6),
        param(Gate::Rz { qubit: 0, angle: 0.0 }, 7),
    ];
    AnsatzCircuit::new(2, bits, gates)
}

fn toy_a(bits: Vec<bool>) -> Result<AnsatzCircuit> {
    let gates = vec![
        param(Gate::Rx { qubit: 0, angle: 0.0 }, 0),
        param(Gate::Cry { control: 0, target: 1, angle: 0.0 }, 1),
        param(Gate::GlobalPhase { angle: 0.0 }, 2),
    ];
    AnsatzCircuit::new(2, bits, gates)
}

fn toy_b(bits: Vec<bool>) -> Result<AnsatzCircuit> {
    let gates = vec![
        param(Gate::Rx { qubit: 0, angle: 0.0 }, 0),
        param(Gate::Rx { qubit: 1, angle: 0.0 }, 0),
        param(Gate::Cry { control: 0, target: 1, angle: 0.0 }, 1),
        param(Gate::GlobalPhase { angle: 0.0 }, 2),
    ];
    AnsatzCircuit::new(2, bits, gates)
}

/// Parameter count of the low-depth ansatz: `5 M (n - 1) + 4 n`.
pub fn ldca_param_count(n_qubits: usize, depth: usize) -> usize {
    5 * depth * (n_qubits - 1) + 4 * n_qubits
}

/// RZ,RY,RX,RZ on every wire, then `depth` brick layers of nearest-neighbour
/// blocks `U = e^{i a YX} e^{i b XY} e^{i c ZZ} e^{i d YY} e^{i e XX}` on pairs
/// (0,1),(2,3),... followed by (1,2),(3,4),....
fn ldca(n: usize, depth: usize, bits: Vec<bool>) -> Result<AnsatzCircuit> {
    use Pauli::*;
    let mut gates = Vec::with_capacity(ldca_param_count(n, depth));
    let mut next = 0;
    let mut push = |gates: &mut Vec<BoundGate>, gate: Gate| {
        gates.push(param(gate, next));
        next += 1;
    };
    for q in 0..n {
        push(&mut gates, Gate::Rz { qubit: q, angle: 0.0 });
        push(&mut gates, Gate::Ry { qubit: q, angle: 0.0 });
        push(&mut gates, Gate::Rx { qubit: q, angle: 0.0 });
        push(&mut gates, Gate::Rz { qubit: q, angle: 0.0 });
    }
    // operator order right to left: XX acts first
    let block = [[X, X], [Y, Y], [Z, Z], [X, Y], [Y, X]];
    for _ in 0..depth {
        let pairs = (0..n - 1).step_by(2).chain((1..n - 1).step_by(2));
        for a in pairs {
            for axes in block {
                push(&mut gates, Gate::PauliExp { qubits: [a, a + 1], axes, angle: 0.0 });
            }
        }
    }
    AnsatzCircuit::new(n, bits, gates)
}
