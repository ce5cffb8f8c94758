//! `qite`: run variational imaginary-time and gradient-descent experiments.

mod settings;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use qite::exact::ground_state;
use qite::harness::{batch, run, stable_stepsize_search, trials_path};

use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "qite", version, about = "Variational imaginary-time evolution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve once and write the trajectory as JSON Lines
    Run(#[command(flatten)] Settings),
    /// Run many trials and write convergence statistics as CSV
    Batch(#[command(flatten)] Settings),
    /// Find the largest step whose probe runs decrease the energy monotonically
    Stepsize {
        #[command(flatten)]
        settings: Settings,
        /// Comma-separated candidate steps
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<f64>,
    },
    /// Print the exact ground energy and state of a Hamiltonian
    Oracle(#[command(flatten)] Settings),
}

fn cmd_run(s: Settings) -> Result<()> {
    let cfg = s.experiment()?;
    let out = run(&cfg)?;
    println!("iterations: {}", out.records.len() - 1);
    println!("final energy: {:.12}", out.final_energy);
    if let (Some(e0), Some(gap)) = (out.ground_energy, out.gap()) {
        println!("exact ground energy: {e0:.12}");
        println!("gap: {gap:.3e}");
    }
    if let Some(path) = &cfg.output {
        println!("trajectory: {}", path.display());
    }
    Ok(())
}

fn cmd_batch(s: Settings) -> Result<()> {
    let cfg = s.experiment()?;
    let out = batch(&cfg)?;
    println!("exact ground energy: {:.12}", out.ground_energy);
    println!("trial  seed  final_energy  converged_at");
    for t in &out.trials {
        let at = t.converged_at.map_or_else(|| "-".to_string(), |k| k.to_string());
        let note = t.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default();
        println!("{:>5}  {:>4}  {:>12.8}  {at}{note}", t.trial, t.seed, t.final_energy);
    }
    println!("converged fraction: {}", out.stats.final_converged_fraction());
    if let Some(path) = &cfg.output {
        println!("statistics: {}", path.display());
        println!("trials: {}", trials_path(path).display());
    }
    Ok(())
}

fn cmd_stepsize(s: Settings, candidates: &[f64]) -> Result<()> {
    let cfg = s.experiment()?;
    let report = stable_stepsize_search(&cfg, candidates)?;
    for (dt, ok) in &report.candidates {
        println!("{dt}: {}", if *ok { "monotone" } else { "not monotone" });
    }
    println!("stable step: {}", report.stepsize);
    Ok(())
}

fn cmd_oracle(s: Settings) -> Result<()> {
    let h = s.hamiltonian_source()?.load()?;
    let gs = ground_state(&h)?;
    let n = h.n_qubits();
    println!("qubits: {n}");
    println!("ground energy: {:.12}", gs.energy);
    println!("degeneracy: {}", gs.degeneracy);
    for (index, amp) in gs.state.amplitudes().iter().enumerate() {
        if amp.norm() > 1e-10 {
            println!("|{:0width$b}>  {:+.10} {:+.10}i", index, amp.re, amp.im, width = n);
        }
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(s) => cmd_run(s.resolve()?),
        Command::Batch(s) => cmd_batch(s.resolve()?),
        Command::Stepsize { settings, candidates } => cmd_stepsize(settings.resolve()?, &candidates),
        Command::Oracle(s) => cmd_oracle(s.resolve()?),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
