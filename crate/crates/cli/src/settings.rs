//! Command-line and config-file settings, merged into an experiment configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use qite::ansatz::AnsatzOptions;
use qite::engine::{EvolutionConfig, Method};
use qite::harness::{ExperimentConfig, HamiltonianSource, InitMode, DEFAULT_TOLERANCE};
use qite::noise::NoiseConfig;
use qite::solver::{SolverSpec, DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_MIN, DEFAULT_TSVD_CUTOFF};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_ITERS: usize = 1000;
pub const DEFAULT_SHOTS: u64 = 10_000;

/// Every setting is optional so that flags can override a config file field by field.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// TOML file with the same keys as the long flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// `builtin:<name>` or `file:<path>`
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// h2-universal, toy-a, toy-b or ldca
    #[arg(long)]
    pub ansatz: Option<String>,
    /// Ansatz option as key=value (n, M, bits); repeatable
    #[arg(long = "ansatz-opt", value_name = "K=V")]
    #[serde(default)]
    pub ansatz_opt: Vec<String>,
    /// imag or gd
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// tikhonov, tsvd or pinv
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Relative singular-value cutoff for tsvd
    #[arg(long)]
    pub tsvd_cutoff: Option<f64>,
    /// zeros, random or perturb:<delta>
    #[arg(long)]
    pub init: Option<String>,
    /// Comma-separated centre for perturbed starts
    #[arg(long, value_delimiter = ',')]
    pub reference: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Convergence tolerance in Hartree
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub shots_a: Option<u64>,
    #[arg(long)]
    pub shots_c: Option<u64>,
    /// Per-gate error probability
    #[arg(long)]
    pub gate_error: Option<f64>,
    /// Gates per circuit for the noise skew (default: ansatz gate count)
    #[arg(long)]
    pub gate_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub record_fidelity: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Settings {
    /// Fills unset fields from the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<Settings> {
        match self.config.clone() {
            Some(path) => Ok(self.over(Settings::from_file(&path)?)),
            None => Ok(self),
        }
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `self` wins wherever it is set.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            config: self.config.or(base.config),
            hamiltonian: self.hamiltonian.or(base.hamiltonian),
            ansatz: self.ansatz.or(base.ansatz),
            ansatz_opt: if self.ansatz_opt.is_empty() { base.ansatz_opt } else { self.ansatz_opt },
            method: self.method.or(base.method),
            dt: self.dt.or(base.dt),
            iters: self.iters.or(base.iters),
            solver: self.solver.or(base.solver),
            lambda_min: self.lambda_min.or(base.lambda_min),
            lambda_max: self.lambda_max.or(base.lambda_max),
            tsvd_cutoff: self.tsvd_cutoff.or(base.tsvd_cutoff),
            init: self.init.or(base.init),
            reference: self.reference.or(base.reference),
            trials: self.trials.or(base.trials),
            tol: self.tol.or(base.tol),
            shots_a: self.shots_a.or(base.shots_a),
            shots_c: self.shots_c.or(base.shots_c),
            gate_error: self.gate_error.or(base.gate_error),
            gate_count: self.gate_count.or(base.gate_count),
            seed: self.seed.or(base.seed),
            record_fidelity: self.record_fidelity || base.record_fidelity,
            out: self.out.or(base.out),
        }
    }

    pub fn hamiltonian_source(&self) -> Result<HamiltonianSource> {
        let Some(source) = &self.hamiltonian else { bail!("--hamiltonian is required") };
        Ok(source.parse()?)
    }

    pub fn method(&self) -> Result<Method> {
        match self.method.as_deref().unwrap_or("imag") {
            "imag" | "imaginary-time" => Ok(Method::ImaginaryTime),
            "gd" | "gradient-descent" => Ok(Method::GradientDescent),
            other => bail!("unknown method '{other}' (expected imag or gd)"),
        }
    }

    pub fn solver(&self) -> Result<SolverSpec> {
        match self.solver.as_deref().unwrap_or("tikhonov") {
            "tikhonov" => Ok(SolverSpec::Tikhonov {
                lambda_min: self.lambda_min.unwrap_or(DEFAULT_LAMBDA_MIN),
                lambda_max: self.lambda_max.unwrap_or(DEFAULT_LAMBDA_MAX),
            }),
            "tsvd" => Ok(SolverSpec::Tsvd { cutoff: self.tsvd_cutoff.unwrap_or(DEFAULT_TSVD_CUTOFF) }),
            "pinv" | "eigen-pinv" => Ok(SolverSpec::EigenPinv),
            other => bail!("unknown solver '{other}' (expected tikhonov, tsvd or pinv)"),
        }
    }

    /// Noise is enabled when any shot count or the gate error rate is given.
    pub fn noise(&self) -> Option<NoiseConfig> {
        if self.shots_a.is_none() && self.shots_c.is_none() && self.gate_error.is_none() {
            return None;
        }
        Some(NoiseConfig {
            gate_error_rate: self.gate_error.unwrap_or(0.0),
            gate_count: self.gate_count,
            shots_a: self.shots_a.unwrap_or(DEFAULT_SHOTS),
            shots_c: self.shots_c.unwrap_or(DEFAULT_SHOTS),
            seed: self.seed.unwrap_or(0),
        })
    }

    pub fn ansatz_options(&self) -> Result<AnsatzOptions> {
        let pairs = self
            .ansatz_opt
            .iter()
            .map(|kv| kv.split_once('=').with_context(|| format!("ansatz option '{kv}' is not key=value")))
            .collect::<Result<Vec<_>>>()?;
        Ok(AnsatzOptions::from_pairs(pairs)?)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let Some(ansatz) = &self.ansatz else { bail!("--ansatz is required") };
        let mut evolution = EvolutionConfig::new(
            self.method()?,
            self.dt.unwrap_or(DEFAULT_DT),
            self.iters.unwrap_or(DEFAULT_ITERS),
        );
        evolution.solver = self.solver()?;
        evolution.noise = self.noise();
        evolution.record_fidelity = self.record_fidelity;
        evolution.seed = self.seed.unwrap_or(0);

        let mut cfg = ExperimentConfig::new(self.hamiltonian_source()?, ansatz, evolution);
        cfg.ansatz_options = self.ansatz_options()?;
        cfg.init = match &self.init {
            Some(s) => s.parse::<InitMode>()?,
            None => InitMode::UniformRandom,
        };
        cfg.reference = self.reference.clone();
        cfg.trials = self.trials.unwrap_or(1);
        cfg.tolerance = self.tol.unwrap_or(DEFAULT_TOLERANCE);
        cfg.output = self.out.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Settings = toml::from_str(
            "hamiltonian = \"builtin:toy-a\"\nansatz = \"toy-a\"\ndt = 0.2\niters = 7\nmethod = \"gd\"\nansatz-opt = [\"bits=00\"]\n",
        )
        .unwrap();
        let flags = Settings { dt: Some(0.05), ..Settings::default() };
        let merged = flags.over(file);
        assert_eq!(merged.dt, Some(0.05));
        assert_eq!(merged.iters, Some(7));
        let cfg = merged.experiment().unwrap();
        assert_eq!(cfg.evolution.method, Method::GradientDescent);
        assert_eq!(cfg.evolution.n_iterations, 7);
        assert_eq!(cfg.ansatz_options.initial_bits.as_deref(), Some("00"));
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        assert!(toml::from_str::<Settings>("colour = 3").is_err());
        let s = Settings { method: Some("newton".into()), ..Settings::default() };
        assert!(s.method().is_err());
        let s = Settings { solver: Some("lu".into()), ..Settings::default() };
        assert!(s.solver().is_err());
        let s = Settings { ansatz_opt: vec!["n8".into()], ..Settings::default() };
        assert!(s.ansatz_options().is_err());
    }

    #[test]
    fn noise_only_when_requested() {
        assert!(Settings::default().noise().is_none());
        let s = Settings { gate_error: Some(1e-4), ..Settings::default() };
        let n = s.noise().unwrap();
        assert_eq!((n.shots_a, n.shots_c), (DEFAULT_SHOTS, DEFAULT_SHOTS));
    }

    #[test]
    fn solver_bounds() {
        let s = Settings { lambda_min: Some(1e-6), ..Settings::default() };
        assert_eq!(s.solver().unwrap(), SolverSpec::Tikhonov { lambda_min: 1e-6, lambda_max: DEFAULT_LAMBDA_MAX });
        let s = Settings { solver: Some("pinv".into()), ..Settings::default() };
        assert_eq!(s.solver().unwrap(), SolverSpec::EigenPinv);
    }
}
