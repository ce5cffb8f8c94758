//! Experiment runner: single runs, random-start batches, convergence statistics,
//! stable step-size search and plot-ready output files.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{builtin_ansatz, AnsatzCircuit, AnsatzOptions};
use crate::engine::{evolve_with, EvolutionConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::exact::{ground_state, DENSE_QUBIT_LIMIT};
use crate::pauli::{builtin_hamiltonian, parse_hamiltonian, Hamiltonian};

/// Default convergence tolerance, in Hartree.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
/// Default half-width of perturbed starts.
pub const DEFAULT_PERTURBATION: f64 = PI / 50.0;
/// Iterations each step-size probe must stay monotone for.
pub const STEPSIZE_PROBE_ITERATIONS: usize = 200;
/// Allowed energy increase per step in the step-size probes.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HamiltonianSource {
    Builtin(String),
    File(PathBuf),
}

impl HamiltonianSource {
    pub fn load(&self) -> Result<Hamiltonian> {
        match self {
            HamiltonianSource::Builtin(name) => builtin_hamiltonian(name),
            HamiltonianSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
                })?;
                parse_hamiltonian(&text)
            }
        }
    }
}

impl FromStr for HamiltonianSource {
    type Err = Error;

    /// `builtin:<name>`, `file:<path>`, or a bare builtin name.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(name) = s.strip_prefix("builtin:") {
            Ok(HamiltonianSource::Builtin(name.to_string()))
        } else if let Some(path) = s.strip_prefix("file:") {
            Ok(HamiltonianSource::File(PathBuf::from(path)))
        } else if s.is_empty() {
            Err(Error::InvalidOption("empty Hamiltonian source".into()))
        } else {
            Ok(HamiltonianSource::Builtin(s.to_string()))
        }
    }
}

impl fmt::Display for HamiltonianSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HamiltonianSource::Builtin(name) => write!(f, "builtin:{name}"),
            HamiltonianSource::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    Zeros,
    /// Each parameter uniform in `[0, 2 pi)`.
    UniformRandom,
    /// Reference plus independent uniform offsets in `[-delta, delta]`.
    Perturb { delta: f64 },
}

impl FromStr for InitMode {
    type Err = Error;

    /// `zeros`, `random`, `perturb` or `perturb:<delta>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(InitMode::Zeros),
            "random" | "uniform-random" => Ok(InitMode::UniformRandom),
            "perturb" => Ok(InitMode::Perturb { delta: DEFAULT_PERTURBATION }),
            _ => {
                let delta = s
                    .strip_prefix("perturb:")
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidOption(format!("unknown init mode '{s}'")))?;
                Ok(InitMode::Perturb { delta })
            }
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitMode::Zeros => write!(f, "zeros"),
            InitMode::UniformRandom => write!(f, "random"),
            InitMode::Perturb { delta } => write!(f, "perturb:{delta}"),
        }
    }
}

/// Starting parameters for one trial.
pub fn initial_params(mode: InitMode, reference: Option<&[f64]>, n_params: usize, seed: u64) -> Result<Vec<f64>> {
    if let Some(r) = reference {
        if r.len() != n_params {
            return Err(Error::DimensionMismatch { expected: n_params, found: r.len() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match mode {
        InitMode::Zeros => vec![0.0; n_params],
        InitMode::UniformRandom => (0..n_params).map(|_| rng.random_range(0.0..TAU)).collect(),
        InitMode::Perturb { delta } => (0..n_params)
            .map(|k| reference.map_or(0.0, |r| r[k]) + rng.random_range(-delta..=delta))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub hamiltonian: HamiltonianSource,
    pub ansatz: String,
    pub ansatz_options: AnsatzOptions,
    pub init: InitMode,
    /// Centre of perturbed starts; zeros when absent.
    pub reference: Option<Vec<f64>>,
    /// `evolution.seed` is the base seed; trial `t` uses `seed + t`.
    pub evolution: EvolutionConfig,
    pub trials: usize,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(hamiltonian: HamiltonianSource, ansatz: &str, evolution: EvolutionConfig) -> Self {
        Self {
            hamiltonian,
            ansatz: ansatz.to_string(),
            ansatz_options: AnsatzOptions::default(),
            init: InitMode::UniformRandom,
            reference: None,
            evolution,
            trials: 1,
            tolerance: DEFAULT_TOLERANCE,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let InitMode::Perturb { delta } = self.init {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::InvalidConfig(format!("perturbation {delta} must be positive")));
            }
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!("tolerance {} must be positive", self.tolerance)));
        }
        self.evolution.validate()
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.evolution.seed.wrapping_add(trial as u64)
    }

    /// Evolution settings for one trial: the trial seed also keys the noise streams.
    pub fn trial_evolution(&self, trial: usize) -> EvolutionConfig {
        let mut cfg = self.evolution.clone();
        cfg.seed = self.trial_seed(trial);
        if let Some(noise) = cfg.noise.as_mut() {
            noise.seed = cfg.seed;
        }
        cfg
    }

    /// Loads the Hamiltonian and ansatz and checks that they fit together.
    pub fn prepare(&self) -> Result<Experiment> {
        self.validate()?;
        let hamiltonian = self.hamiltonian.load()?;
        let circuit = builtin_ansatz(&self.ansatz, &self.ansatz_options)?;
        if hamiltonian.n_qubits() != circuit.n_qubits() {
            return Err(Error::DimensionMismatch { expected: circuit.n_qubits(), found: hamiltonian.n_qubits() });
        }
        let ground_energy = if hamiltonian.n_qubits() <= DENSE_QUBIT_LIMIT {
            Some(ground_state(&hamiltonian)?.energy)
        } else {
            None
        };
        Ok(Experiment { hamiltonian, circuit, ground_energy })
    }

    pub fn initial_params(&self, trial: usize, n_params: usize) -> Result<Vec<f64>> {
        initial_params(self.init, self.reference.as_deref(), n_params, self.trial_seed(trial))
    }
}

/// A loaded Hamiltonian and circuit, with the exact ground energy when it is affordable.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub hamiltonian: Hamiltonian,
    pub circuit: AnsatzCircuit,
    pub ground_energy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<TrajectoryRecord>,
    pub final_energy: f64,
    pub ground_energy: Option<f64>,
}

impl RunOutcome {
    pub fn gap(&self) -> Option<f64> {
        self.ground_energy.map(|e0| self.final_energy - e0)
    }
}

/// One evolution from trial 0's start; writes the JSONL trajectory when an output path is set.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let exp = config.prepare()?;
    let theta0 = config.initial_params(0, exp.circuit.n_params())?;
    let cfg = config.trial_evolution(0);
    let mut records = Vec::with_capacity(cfg.n_iterations + 1);
    evolve_with(&exp.circuit, &exp.hamiltonian, &theta0, &cfg, |r| {
        records.push(r.clone());
        true
    })?;
    if let Some(path) = &config.output {
        write_trajectory(path, &records)?;
    }
    let final_energy = records.last().map(|r| r.energy).unwrap_or(f64::NAN);
    Ok(RunOutcome { records, final_energy, ground_energy: exp.ground_energy })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub best_energy: f64,
    /// First iteration within tolerance of the ground energy.
    pub converged_at: Option<usize>,
    /// Iterations completed; fewer than requested when the run diverged.
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStats {
    pub tau: Vec<f64>,
    /// Fraction of trials within tolerance at some iteration up to each index.
    pub converged_fraction: Vec<f64>,
    /// Mean of `E - E0` over trials converged by each index; `None` when there are none.
    pub mean_residual: Vec<Option<f64>>,
}

impl ConvergenceStats {
    pub fn final_converged_fraction(&self) -> f64 {
        self.converged_fraction.last().copied().unwrap_or(0.0)
    }

    /// Builds the statistics from per-trial energy traces. Traces that end early
    /// hold their last energy for the remaining iterations.
    pub fn from_energies(traces: &[Vec<f64>], ground_energy: f64, tolerance: f64, dt: f64) -> Self {
        let len = traces.iter().map(Vec::len).max().unwrap_or(0);
        let n = traces.len().max(1) as f64;
        let mut converged = vec![false; traces.len()];
        let mut stats = ConvergenceStats { tau: Vec::new(), converged_fraction: Vec::new(), mean_residual: Vec::new() };
        for k in 0..len {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (t, trace) in traces.iter().enumerate() {
                let Some(&e) = trace.get(k).or_else(|| trace.last()) else { continue };
                let residual = e - ground_energy;
                if residual <= tolerance {
                    converged[t] = true;
                }
                if converged[t] {
                    sum += residual;
                    count += 1;
                }
            }
            stats.tau.push(k as f64 * dt);
            stats.converged_fraction.push(count as f64 / n);
            stats.mean_residual.push((count > 0).then(|| sum / count as f64));
        }
        stats
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub trials: Vec<TrialSummary>,
    pub stats: ConvergenceStats,
    pub ground_energy: f64,
}

/// Runs one trajectory per start in parallel; results are ordered by start index.
/// Diverged runs keep the energies reached before the failure.
pub fn run_trials(
    exp: &Experiment,
    starts: &[Vec<f64>],
    evolution: impl Fn(usize) -> EvolutionConfig + Sync,
    tolerance: f64,
) -> Result<BatchOutcome> {
    let ground_energy = exp.ground_energy.ok_or(Error::TooLarge {
        n_qubits: exp.hamiltonian.n_qubits(),
        limit: DENSE_QUBIT_LIMIT,
    })?;
    let results: Vec<Result<(TrialSummary, Vec<f64>)>> = starts
        .par_iter()
        .enumerate()
        .map(|(trial, theta0)| {
            let cfg = evolution(trial);
            let mut energies = Vec::with_capacity(cfg.n_iterations + 1);
            let outcome = evolve_with(&exp.circuit, &exp.hamiltonian, theta0, &cfg, |r| {
                energies.push(r.energy);
                true
            });
            let error = match outcome {
                Ok(()) => None,
                Err(e @ Error::Diverged { .. }) if !energies.is_empty() => Some(e.to_string()),
                Err(e) => return Err(e),
            };
            let best = energies.iter().copied().fold(f64::INFINITY, f64::min);
            let summary = TrialSummary {
                trial,
                seed: cfg.seed,
                initial_energy: energies[0],
                final_energy: *energies.last().expect("initial record"),
                best_energy: best,
                converged_at: energies.iter().position(|e| e - ground_energy <= tolerance),
                iterations: energies.len() - 1,
                error,
            };
            Ok((summary, energies))
        })
        .collect();
    let (trials, traces): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let dt = evolution(0).dt;
    let stats = ConvergenceStats::from_energies(&traces, ground_energy, tolerance, dt);
    Ok(BatchOutcome { trials, stats, ground_energy })
}

/// `trials` independent runs with seeds `seed + t`; writes the statistics CSV and
/// a per-trial summary CSV next to it when an output path is set.
pub fn batch(config: &ExperimentConfig) -> Result<BatchOutcome> {
    let exp = config.prepare()?;
    let starts = (0..config.trials)
        .map(|t| config.initial_params(t, exp.circuit.n_params()))
        .collect::<Result<Vec<_>>>()?;
    let outcome = run_trials(&exp, &starts, |t| config.trial_evolution(t), config.tolerance)?;
    if let Some(path) = &config.output {
        write_stats_csv(path, &outcome.stats)?;
        write_trials_csv(&trials_path(path), &outcome.trials)?;
    }
    Ok(outcome)
}

/// `stats.csv` becomes `stats_trials.csv`.
pub fn trials_path(stats_path: &Path) -> PathBuf {
    let stem = stats_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stats_path.with_file_name(format!("{stem}_trials.csv"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeReport {
    pub stepsize: f64,
    /// Every candidate with whether all probes stayed monotone.
    pub candidates: Vec<(f64, bool)>,
}

/// `true` when no step raises the energy by more than [`MONOTONE_SLACK`].
pub fn is_monotone(energies: &[f64]) -> bool {
    energies.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK)
}

/// Largest candidate step for which every probe start (the config's trial starts)
/// has monotone noise-free energy over [`STEPSIZE_PROBE_ITERATIONS`] iterations.
pub fn stable_stepsize_search(config: &ExperimentConfig, candidates: &[f64]) -> Result<StepsizeReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no step-size candidates given".into()));
    }
    if let Some(bad) = candidates.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidConfig(format!("step-size candidate {bad} must be positive")));
    }
    let exp = config.prepare()?;
    let starts = (0..config.trials)
        .map(|t| config.initial_params(t, exp.circuit.n_params()))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..candidates.len()).flat_map(|c| (0..starts.len()).map(move |s| (c, s))).collect();
    let passed: Vec<bool> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let mut cfg = config.evolution.clone();
            cfg.dt = candidates[c];
            cfg.n_iterations = STEPSIZE_PROBE_ITERATIONS;
            cfg.noise = None;
            cfg.record_fidelity = false;
            let mut energies = Vec::with_capacity(STEPSIZE_PROBE_ITERATIONS + 1);
            let mut monotone = true;
            let outcome = evolve_with(&exp.circuit, &exp.hamiltonian, &starts[s], &cfg, |r| {
                if let Some(&prev) = energies.last() {
                    monotone &= r.energy <= prev + MONOTONE_SLACK;
                }
                energies.push(r.energy);
                monotone
            });
            match outcome {
                Ok(()) => Ok(monotone),
                Err(Error::Diverged { .. }) => Ok(false),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let report: Vec<(f64, bool)> = candidates
        .iter()
        .enumerate()
        .map(|(c, &dt)| (dt, passed[c * starts.len()..(c + 1) * starts.len()].iter().all(|&p| p)))
        .collect();
    let best = report.iter().filter(|(_, ok)| *ok).map(|(dt, _)| *dt).fold(None, |acc: Option<f64>, dt| {
        Some(acc.map_or(dt, |a| a.max(dt)))
    });
    match best {
        Some(stepsize) => Ok(StepsizeReport { stepsize, candidates: report }),
        None => Err(Error::NoStableStep),
    }
}

/// One JSON object per line.
pub fn write_trajectory(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok(records)
}

pub const STATS_HEADER: &str = "iteration,tau,converged_fraction,mean_residual";
pub const TRIALS_HEADER: &str = "trial,seed,initial_energy,final_energy,best_energy,converged_at,iterations,error";

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Per-iteration statistics; an empty `mean_residual` cell means no trial has converged yet.
pub fn write_stats_csv(path: &Path, stats: &ConvergenceStats) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{STATS_HEADER}")?;
    for k in 0..stats.tau.len() {
        writeln!(out, "{k},{},{},{}", stats.tau[k], stats.converged_fraction[k], opt(&stats.mean_residual[k]))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trials_csv(path: &Path, trials: &[TrialSummary]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TRIALS_HEADER}")?;
    for t in trials {
        let error = t.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{error}",
            t.trial,
            t.seed,
            t.initial_energy,
            t.final_energy,
            t.best_energy,
            opt(&t.converged_at),
            t.iterations
        )?;
    }
    out.flush()?;
    Ok(())
}
