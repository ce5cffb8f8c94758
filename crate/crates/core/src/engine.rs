//! Variational imaginary-time evolution and the gradient-descent baseline.
//!
//! Each iteration assembles
//!
//! ```text
//! A_ij = Re <d_i phi | d_j phi>
//! C_i  = -Re <d_i phi | H | phi>
//! ```
//!
//! from the tangent states of the ansatz, then advances the parameters by an
//! Euler step: `theta += A^{-1} C dt` for imaginary time, `theta += C dt` for
//! gradient descent. Note `grad E = -2 C`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzCircuit;
use crate::error::{Error, Result};
use crate::exact::{fidelity, Spectrum};
use crate::noise::{NoiseConfig, NoiseSampler};
use crate::pauli::Hamiltonian;
use crate::solver::{solve_theta_dot, SolverSpec};
use crate::statevector::{Gate, StateVector};

pub type AMatrix = DMatrix<f64>;
pub type CVector = DVector<f64>;

/// Runs whose update norm exceeds this are aborted.
pub const MAX_UPDATE_NORM: f64 = 1e6;
/// Fidelity against exact evolution is only tracked up to this register size.
pub const FIDELITY_QUBIT_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ImaginaryTime,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub method: Method,
    pub dt: f64,
    pub n_iterations: usize,
    pub solver: SolverSpec,
    pub noise: Option<NoiseConfig>,
    pub record_fidelity: bool,
    /// Run seed. Noise streams are keyed by `noise.seed`; the harness derives both from it.
    pub seed: u64,
}

impl EvolutionConfig {
    pub fn new(method: Method, dt: f64, n_iterations: usize) -> Self {
        Self {
            method,
            dt,
            n_iterations,
            solver: SolverSpec::default(),
            noise: None,
            record_fidelity: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt >= 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("time step {} must be finite and non-negative", self.dt)));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("at least one iteration is required".into()));
        }
        self.solver.validate()?;
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub tau: f64,
    pub energy: f64,
    pub fidelity: Option<f64>,
    pub params: Vec<f64>,
}

/// Noise sampler plus the iteration it draws for.
#[derive(Debug, Clone, Copy)]
pub struct NoiseDraw<'a> {
    pub sampler: &'a NoiseSampler,
    pub iteration: u64,
}

fn gram_real(tangents: &[StateVector]) -> AMatrix {
    let n = tangents.len();
    let mut a = AMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = tangents[i].dot_unchecked(&tangents[j]).re;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn noisy_a(circuit: &AnsatzCircuit, exact: &AMatrix, noise: NoiseDraw<'_>) -> Result<AMatrix> {
    let n = exact.nrows();
    let bounds: Vec<f64> = (0..n).map(|i| circuit.tangent_bound(i)).collect();
    let mut a = AMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let range = bounds[i] * bounds[j];
            let mean = exact[(i, j)].clamp(-range, range);
            let v = noise.sampler.sample_a(noise.iteration, i, j, mean, range)?;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}

/// `A` from precomputed tangents; N tangent states, N(N+1)/2 inner products.
fn a_from_tangents(circuit: &AnsatzCircuit, tangents: &[StateVector], noise: Option<NoiseDraw<'_>>) -> Result<AMatrix> {
    let exact = gram_real(tangents);
    match noise {
        None => Ok(exact),
        Some(draw) => noisy_a(circuit, &exact, draw),
    }
}

fn c_exact(tangents: &[StateVector], h_phi: &StateVector) -> CVector {
    CVector::from_iterator(tangents.len(), tangents.iter().map(|t| -t.dot_unchecked(h_phi).re))
}

/// Noisy `C`: every `(i, k, alpha)` term `Re(w <V~_k| h_alpha |phi>)`, with
/// `w = -conj(f_k) lambda_alpha`, is sampled as a `[-1, 1]` observable and rescaled by `|w|`.
fn c_noisy(
    circuit: &AnsatzCircuit,
    pieces: &[Vec<StateVector>],
    phi: &StateVector,
    h: &Hamiltonian,
    noise: NoiseDraw<'_>,
) -> Result<CVector> {
    let h_terms: Vec<StateVector> = h
        .terms()
        .iter()
        .map(|t| phi.apply_gate(&Gate::PauliString(t.string.clone())))
        .collect::<Result<_>>()?;
    let mut c = CVector::zeros(pieces.len());
    for (i, states) in pieces.iter().enumerate() {
        let mut acc = 0.0;
        for (k, (ins, piece)) in circuit.insertions(i).iter().zip(states).enumerate() {
            for (alpha, (term, h_phi)) in h.terms().iter().zip(&h_terms).enumerate() {
                let w = -ins.factor.conj() * term.coefficient;
                let weight = w.norm();
                if weight == 0.0 {
                    continue;
                }
                let raw = (w / weight * piece.dot_unchecked(h_phi)).re.clamp(-1.0, 1.0);
                acc += weight * noise.sampler.sample_c(noise.iteration, i, k, alpha, raw)?;
            }
        }
        c[i] = acc;
    }
    Ok(c)
}

fn check_dims(a: &AnsatzCircuit, h: &Hamiltonian) -> Result<()> {
    if a.n_qubits() != h.n_qubits() {
        return Err(Error::DimensionMismatch { expected: a.n_qubits(), found: h.n_qubits() });
    }
    Ok(())
}

pub fn compute_a_matrix(a: &AnsatzCircuit, theta: &[f64], noise: Option<NoiseDraw<'_>>) -> Result<AMatrix> {
    let (tangents, _) = a.tangent_states(theta)?;
    a_from_tangents(a, &tangents, noise)
}

pub fn compute_c_vector(
    a: &AnsatzCircuit,
    theta: &[f64],
    h: &Hamiltonian,
    noise: Option<NoiseDraw<'_>>,
) -> Result<CVector> {
    check_dims(a, h)?;
    assemble(a, theta, h, false, noise).map(|s| s.c)
}

/// One iteration's linear system and the state it was built at.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: Option<AMatrix>,
    pub c: CVector,
    pub state: StateVector,
}

/// Builds `C` (and `A` when `with_a`) from a single pass of tangent-state construction.
pub fn assemble(
    circuit: &AnsatzCircuit,
    theta: &[f64],
    h: &Hamiltonian,
    with_a: bool,
    noise: Option<NoiseDraw<'_>>,
) -> Result<LinearSystem> {
    check_dims(circuit, h)?;
    let (pieces, phi) = circuit.insertion_states(theta)?;
    let tangents: Vec<StateVector> = pieces
        .iter()
        .enumerate()
        .map(|(i, states)| {
            let mut t = StateVector::zeros_unnormalised(circuit.n_qubits());
            for (ins, s) in circuit.insertions(i).iter().zip(states) {
                t.add_scaled(ins.factor, s);
            }
            t
        })
        .collect();
    let a = if with_a { Some(a_from_tangents(circuit, &tangents, noise)?) } else { None };
    let c = match noise {
        None => c_exact(&tangents, &phi.apply_hamiltonian(h)?),
        Some(draw) => c_noisy(circuit, &pieces, &phi, h, draw)?,
    };
    Ok(LinearSystem { a, c, state: phi })
}

/// Euler update. Gradient descent ignores `a`; imaginary time requires it.
pub fn step(
    theta: &[f64],
    method: Method,
    dt: f64,
    a: Option<&AMatrix>,
    c: &CVector,
    solver: &SolverSpec,
) -> Result<Vec<f64>> {
    if c.len() != theta.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), found: c.len() });
    }
    let rate = match method {
        Method::GradientDescent => c.clone(),
        Method::ImaginaryTime => {
            let a = a.ok_or_else(|| Error::InvalidConfig("imaginary-time step needs the A matrix".into()))?;
            solve_theta_dot(a, c, solver)?
        }
    };
    Ok(theta.iter().zip(rate.iter()).map(|(t, r)| t + r * dt).collect())
}

/// Runs `cfg.n_iterations` Euler steps and returns `n_iterations + 1` records, starting at `tau = 0`.
pub fn evolve(
    circuit: &AnsatzCircuit,
    h: &Hamiltonian,
    theta0: &[f64],
    cfg: &EvolutionConfig,
) -> Result<Vec<TrajectoryRecord>> {
    let mut records = Vec::with_capacity(cfg.n_iterations + 1);
    evolve_with(circuit, h, theta0, cfg, |r| {
        records.push(r.clone());
        true
    })?;
    Ok(records)
}

/// Like [`evolve`] but streams records to `sink`; returning `false` stops the run early.
pub fn evolve_with<F>(
    circuit: &AnsatzCircuit,
    h: &Hamiltonian,
    theta0: &[f64],
    cfg: &EvolutionConfig,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(&TrajectoryRecord) -> bool,
{
    cfg.validate()?;
    check_dims(circuit, h)?;
    if theta0.len() != circuit.n_params() {
        return Err(Error::DimensionMismatch { expected: circuit.n_params(), found: theta0.len() });
    }
    if let Some(bad) = theta0.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidConfig(format!("initial parameter {bad} is not finite")));
    }

    let sampler = cfg
        .noise
        .map(|n| NoiseSampler::new(n, circuit.gate_count()))
        .transpose()?;
    let tracker = if cfg.record_fidelity && circuit.n_qubits() <= FIDELITY_QUBIT_LIMIT {
        let spectrum = Spectrum::new(h)?;
        let psi0 = circuit.prepare_state(theta0)?;
        Some((spectrum, psi0))
    } else {
        None
    };

    let record = |iteration: usize, theta: &[f64], state: &StateVector| -> Result<TrajectoryRecord> {
        let energy = state.expectation(h)?;
        if !energy.is_finite() {
            return Err(Error::Diverged { iteration, reason: format!("energy {energy} is not finite") });
        }
        let tau = iteration as f64 * cfg.dt;
        let fid = match &tracker {
            Some((spectrum, psi0)) => match spectrum.imag_evolve(psi0, tau) {
                Ok(exact) => Some(fidelity(state, &exact)?),
                Err(Error::VanishingNorm) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        Ok(TrajectoryRecord { iteration, tau, energy, fidelity: fid, params: theta.to_vec() })
    };

    let with_a = cfg.method == Method::ImaginaryTime;
    let mut theta = theta0.to_vec();
    let mut state = circuit.prepare_state(&theta)?;
    if !sink(&record(0, &theta, &state)?) {
        return Ok(());
    }
    for iteration in 1..=cfg.n_iterations {
        let draw = sampler.as_ref().map(|s| NoiseDraw { sampler: s, iteration: (iteration - 1) as u64 });
        let system = assemble(circuit, &theta, h, with_a, draw)?;
        let next = step(&theta, cfg.method, cfg.dt, system.a.as_ref(), &system.c, &cfg.solver)?;
        let rate_norm = if cfg.dt > 0.0 {
            next.iter().zip(&theta).map(|(n, t)| ((n - t) / cfg.dt).powi(2)).sum::<f64>().sqrt()
        } else {
            0.0
        };
        if !rate_norm.is_finite() || rate_norm > MAX_UPDATE_NORM || next.iter().any(|t| !t.is_finite()) {
            return Err(Error::Diverged {
                iteration,
                reason: format!("parameter update norm {rate_norm:e} exceeds {MAX_UPDATE_NORM:e}"),
            });
        }
        theta = next;
        state = circuit.prepare_state(&theta)?;
        if !sink(&record(iteration, &theta, &state)?) {
            break;
        }
    }
    Ok(())
}

/// `grad E`, from the identity `grad E = -2 C`.
pub fn energy_gradient(a: &AnsatzCircuit, theta: &[f64], h: &Hamiltonian) -> Result<Vec<f64>> {
    Ok(compute_c_vector(a, theta, h, None)?.iter().map(|c| -2.0 * c).collect())
}
