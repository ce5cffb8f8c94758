//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qite::ansatz::{builtin_ansatz, ldca_param_count, AnsatzCircuit, AnsatzOptions};
use qite::engine::{assemble, compute_a_matrix, compute_c_vector, evolve, step, EvolutionConfig, Method};
use qite::exact::{finite_diff_gradient, ground_state};
use qite::hadamard::{hadamard_test_entry, HadamardTerm};
use qite::harness::{batch, run_trials, stable_stepsize_search, ExperimentConfig, InitMode};
use qite::noise::{skew_factor, NoiseConfig, NoiseSampler};
use qite::pauli::{builtin_hamiltonian, Hamiltonian, Pauli, PauliString, H2_STO3G_075};
use qite::solver::SolverSpec;

const H2: &str = "h2-sto3g-0.75";
const SYSTEMS: [(&str, &str); 3] = [("toy-a", "toy-a"), ("toy-b", "toy-b"), (H2, "h2-universal")];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn ansatz(name: &str) -> AnsatzCircuit {
    builtin_ansatz(name, &AnsatzOptions::default()).unwrap()
}

fn random_theta(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Lowest eigenvalue of the reduced H2 Hamiltonian from its two 2x2 blocks.
fn h2_ground_closed_form() -> f64 {
    let g = H2_STO3G_075;
    // span{|01>, |10>}: centre g0 - g3, splitting g1 - g2, coupling g4 + g5
    let odd = g[0] - g[3] - ((g[1] - g[2]).powi(2) + (g[4] + g[5]).powi(2)).sqrt();
    // span{|00>, |11>}: centre g0 + g3, splitting g1 + g2, coupling g5 - g4
    let even = g[0] + g[3] - ((g[1] + g[2]).powi(2) + (g[5] - g[4]).powi(2)).sqrt();
    odd.min(even)
}

fn h2_config(method: Method, dt: f64, iters: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(H2.parse().unwrap(), "h2-universal", EvolutionConfig::new(method, dt, iters));
    cfg.init = InitMode::UniformRandom;
    cfg.trials = 20;
    cfg
}

fn c1_h2_ground_state() -> Verdict {
    let e0 = h2_ground_closed_form();
    let mut cfg = h2_config(Method::ImaginaryTime, 0.01, 2000);
    cfg.evolution.seed = 100;
    let start = Instant::now();
    let out = batch(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64() / cfg.trials as f64;
    let oracle_gap = (out.ground_energy - e0).abs();
    let failures: Vec<usize> = out.trials.iter().filter(|t| t.converged_at.is_none()).map(|t| t.trial).collect();
    let slowest = out.trials.iter().filter_map(|t| t.converged_at).max().unwrap_or(0);
    verdict(
        failures.is_empty() && oracle_gap < 1e-12 && (e0 + 1.1456).abs() < 1e-4,
        format!(
            "E0 = {:.10} (closed form diff {oracle_gap:.1e}); {}/{} runs within 1 mHa, slowest at iteration {slowest}; {secs:.2} s per run",
            out.ground_energy,
            cfg.trials - failures.len(),
            cfg.trials
        ),
    )
}

fn c2_fidelity() -> Verdict {
    let h = builtin_hamiltonian(H2).unwrap();
    let a = ansatz("h2-universal");
    let gs = ground_state(&h).unwrap();
    let mut cfg = h2_config(Method::ImaginaryTime, 0.01, 2000);
    cfg.evolution.seed = 100;
    cfg.evolution.record_fidelity = true;
    let mut min_tracking = f64::INFINITY;
    let mut min_final = f64::INFINITY;
    for t in 0..cfg.trials {
        let theta0 = cfg.initial_params(t, a.n_params()).unwrap();
        let records = evolve(&a, &h, &theta0, &cfg.trial_evolution(t)).unwrap();
        for r in records.iter().skip(10) {
            min_tracking = min_tracking.min(r.fidelity.unwrap_or(f64::NEG_INFINITY));
        }
        let last = a.prepare_state(&records.last().unwrap().params).unwrap();
        min_final = min_final.min(last.inner_product(&gs.state).unwrap().norm_sqr());
    }
    if min_tracking >= 0.99 {
        verdict(true, format!("tracking fidelity >= {min_tracking:.5} after iteration 10; final ground-state fidelity >= {min_final:.6}"))
    } else {
        verdict(
            min_final >= 0.999,
            format!(
                "tracking fidelity dips to {min_tracking:.4}, using the final-state bound: ground-state fidelity >= {min_final:.6}"
            ),
        )
    }
}

fn c3_monotonicity() -> Verdict {
    let mut violations = 0;
    let mut runs = 0;
    for (k, (ham, anz)) in SYSTEMS.iter().enumerate() {
        let h = builtin_hamiltonian(ham).unwrap();
        let a = ansatz(anz);
        let mut rng = ChaCha8Rng::seed_from_u64(300 + k as u64);
        let mut cfg = EvolutionConfig::new(Method::ImaginaryTime, 1e-3, 1000);
        cfg.solver = SolverSpec::EigenPinv;
        for _ in 0..10 {
            let theta0 = random_theta(&mut rng, a.n_params());
            let energies: Vec<f64> = evolve(&a, &h, &theta0, &cfg).unwrap().iter().map(|r| r.energy).collect();
            violations += energies.windows(2).filter(|w| w[1] > w[0] + 1e-9).count();
            runs += 1;
        }
    }
    verdict(violations == 0, format!("{violations} violations over {runs} runs of 1000 steps"))
}

fn grid_starts() -> Vec<Vec<f64>> {
    // cell centres of an 8x8 grid over [0, 2pi)^2
    let cell = TAU / 8.0;
    (0..64)
        .map(|g| vec![((g / 8) as f64 + 0.5) * cell, ((g % 8) as f64 + 0.5) * cell, 0.0])
        .collect()
}

fn c4_toy_contrast() -> Verdict {
    // both methods share the step and the iteration budget
    const DT: f64 = 0.1;
    const ITERS: usize = 500;
    let mut lines = Vec::new();
    let mut pass = true;
    for name in ["toy-a", "toy-b"] {
        let cfg = ExperimentConfig::new(name.parse().unwrap(), name, EvolutionConfig::new(Method::ImaginaryTime, DT, ITERS));
        let exp = cfg.prepare().unwrap();
        let mut fractions = Vec::new();
        for method in [Method::ImaginaryTime, Method::GradientDescent] {
            let evo = EvolutionConfig::new(method, DT, ITERS);
            let out = run_trials(&exp, &grid_starts(), |_| evo.clone(), 1e-3).unwrap();
            fractions.push(out.stats.final_converged_fraction());
        }
        let (imag, gd) = (fractions[0], fractions[1]);
        if name == "toy-a" {
            pass &= imag >= 0.9 && imag > gd;
        }
        lines.push(format!("{name}: imag {imag:.4} vs gd {gd:.4}"));
    }
    verdict(pass, format!("64 grid starts, dt {DT}, {ITERS} iterations; {}", lines.join("; ")))
}

fn c5_a_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let names = ["h2-universal", "toy-a", "toy-b", "ldca"];
    let circuits: Vec<AnsatzCircuit> = names.iter().map(|n| ansatz(n)).collect();
    let mut worst_asym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for d in 0..200 {
        let a = &circuits[d % names.len()];
        let theta = random_theta(&mut rng, a.n_params());
        let m = compute_a_matrix(a, &theta, None).unwrap();
        worst_asym = worst_asym.max((&m - m.transpose()).amax());
        min_eig = min_eig.min(SymmetricEigen::new(m).eigenvalues.min());
    }
    verdict(
        worst_asym <= 1e-10 && min_eig >= -1e-10,
        format!("200 draws: max asymmetry {worst_asym:.1e}, min eigenvalue {min_eig:.1e}"),
    )
}

fn c6_gradient() -> Verdict {
    let mut worst: f64 = 0.0;
    for (k, (ham, anz)) in SYSTEMS.iter().enumerate() {
        let h = builtin_hamiltonian(ham).unwrap();
        let a = ansatz(anz);
        let mut rng = ChaCha8Rng::seed_from_u64(600 + k as u64);
        for _ in 0..100 {
            let theta = random_theta(&mut rng, a.n_params());
            let fd = finite_diff_gradient(&a, &h, &theta, 1e-5).unwrap();
            let c = compute_c_vector(&a, &theta, &h, None).unwrap();
            for (g, ci) in fd.iter().zip(c.iter()) {
                worst = worst.max((g + 2.0 * ci).abs());
            }
        }
    }
    verdict(worst <= 1e-6, format!("300 draws over 3 systems: max |dE + 2C| = {worst:.1e}"))
}

fn c7_tangent() -> Verdict {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    for name in ["h2-universal", "toy-a", "toy-b", "ldca"] {
        let a = ansatz(name);
        for _ in 0..3 {
            let theta = random_theta(&mut rng, a.n_params());
            for i in 0..a.n_params() {
                let mut up = theta.clone();
                up[i] += h;
                let mut down = theta.clone();
                down[i] -= h;
                let plus = a.prepare_state(&up).unwrap();
                let minus = a.prepare_state(&down).unwrap();
                let exact = a.derivative_state(&theta, i).unwrap();
                for ((p, m), e) in plus.amplitudes().iter().zip(minus.amplitudes()).zip(exact.amplitudes()) {
                    worst = worst.max(((p - m) / (2.0 * h) - e).norm());
                }
            }
        }
    }
    verdict(worst <= 1e-6, format!("all builtin ansatze, 3 draws each: max amplitude error {worst:.1e}"))
}

fn c8_hadamard() -> Verdict {
    let a = ansatz("h2-universal");
    let h = builtin_hamiltonian(H2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut worst: f64 = 0.0;
    let mut terms = 0;
    for _ in 0..10 {
        let theta = random_theta(&mut rng, a.n_params());
        let (pieces, phi) = a.insertion_states(&theta).unwrap();
        let h_phi: Vec<_> = h.terms().iter().map(|t| phi.apply_pauli_string(&t.string).unwrap()).collect();
        for phase in [0.0, FRAC_PI_2] {
            let rot = Complex64::from_polar(1.0, phase);
            for i in 0..a.n_params() {
                for k in 0..a.insertions(i).len() {
                    for j in 0..a.n_params() {
                        for l in 0..a.insertions(j).len() {
                            let z = hadamard_test_entry(&a, &theta, None, HadamardTerm::A { i, k, j, l }, phase).unwrap();
                            let direct = (rot * pieces[i][k].inner_product(&pieces[j][l]).unwrap()).re;
                            worst = worst.max((z - direct).abs());
                            terms += 1;
                        }
                    }
                    for (alpha, hp) in h_phi.iter().enumerate() {
                        let z = hadamard_test_entry(&a, &theta, Some(&h), HadamardTerm::C { i, k, alpha }, phase).unwrap();
                        let direct = (rot * pieces[i][k].inner_product(hp).unwrap()).re;
                        worst = worst.max((z - direct).abs());
                        terms += 1;
                    }
                }
            }
        }
    }
    verdict(worst <= 1e-10, format!("{terms} circuit evaluations: max deviation {worst:.1e}"))
}

fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> Hamiltonian {
    let mut list = Vec::new();
    while list.len() < terms {
        let ops: Vec<(usize, Pauli)> = (0..n)
            .filter_map(|q| match rng.random_range(0..4) {
                1 => Some((q, Pauli::X)),
                2 => Some((q, Pauli::Y)),
                3 => Some((q, Pauli::Z)),
                _ => None,
            })
            .collect();
        let s = PauliString::from_ops(ops).unwrap();
        if list.iter().all(|(_, t): &(f64, PauliString)| *t != s) {
            list.push((rng.random_range(-1.0..1.0), s));
        }
    }
    Hamiltonian::from_terms(n, list).unwrap()
}

fn c9_ldca() -> Verdict {
    let formula_ok = ldca_param_count(8, 3) == 137
        && (1..=5).all(|h| (1..=4).all(|m| ldca_param_count(2 * h, m) == 5 * m * (2 * h - 1) + 8 * h));
    let built_ok = [2, 4, 6].into_iter().all(|n| {
        (1..=3).all(|m| {
            let opts = AnsatzOptions { n_qubits: Some(n), depth: Some(m), initial_bits: None };
            builtin_ansatz("ldca", &opts).unwrap().n_params() == 5 * m * (n - 1) + 4 * n
        })
    });
    let a = ansatz("ldca");
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let h = random_hamiltonian(&mut rng, 8, 20);
    let theta = random_theta(&mut rng, a.n_params());
    let start = Instant::now();
    let system = assemble(&a, &theta, &h, true, None).unwrap();
    let next = step(&theta, Method::ImaginaryTime, 0.01, system.a.as_ref(), &system.c, &SolverSpec::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let finite = next.iter().all(|t| t.is_finite());
    verdict(
        formula_ok && built_ok && a.n_params() == 137 && finite && secs < 10.0,
        format!("default ldca has {} parameters; 8-qubit step on a 20-term Hamiltonian took {secs:.3} s", a.n_params()),
    )
}

fn c10_noise() -> Verdict {
    const DRAWS: usize = 100_000;
    let skew = skew_factor(1e-4, 100);
    let skew_ok = (skew - 0.99005).abs() <= 1e-5;
    let shots = 1000;
    let config = NoiseConfig { gate_error_rate: 1e-3, gate_count: Some(50), shots_a: shots, shots_c: shots, seed: 10 };
    let sampler = NoiseSampler::new(config, 50).unwrap();
    let eps = skew_factor(1e-3, 50);
    let mut worst_mean_z: f64 = 0.0;
    let mut worst_var_rel: f64 = 0.0;
    for (k, a) in [0.2, -0.1, 0.0].into_iter().enumerate() {
        let mean = eps * a;
        let var = (1.0 / 16.0 - mean * mean) / shots as f64;
        let xs: Vec<f64> = (0..DRAWS).map(|d| sampler.sample_a(d as u64, k, 0, a, 0.25).unwrap()).collect();
        let m = xs.iter().sum::<f64>() / DRAWS as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (DRAWS - 1) as f64;
        worst_mean_z = worst_mean_z.max((m - mean).abs() / (var / DRAWS as f64).sqrt());
        worst_var_rel = worst_var_rel.max((v - var).abs() / var);
    }
    verdict(
        skew_ok && worst_mean_z <= 5.0 && worst_var_rel <= 0.1,
        format!(
            "skew_factor(1e-4, 100) = {skew:.7}; worst mean offset {worst_mean_z:.2} standard errors; worst variance error {:.2}%",
            worst_var_rel * 100.0
        ),
    )
}

fn c11_noisy_runs() -> Verdict {
    const CANDIDATES: [f64; 6] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.4];
    const ITERS: usize = 2000;
    let mut fractions = Vec::new();
    for method in [Method::ImaginaryTime, Method::GradientDescent] {
        let mut probe = h2_config(method, 0.01, ITERS);
        probe.trials = 8;
        probe.evolution.seed = 1100;
        let dt = stable_stepsize_search(&probe, &CANDIDATES).unwrap().stepsize;
        let mut cfg = h2_config(method, dt, ITERS);
        cfg.evolution.seed = 1200;
        cfg.evolution.noise =
            Some(NoiseConfig { gate_error_rate: 1e-4, gate_count: None, shots_a: 10_000, shots_c: 10_000, seed: 0 });
        fractions.push((dt, batch(&cfg).unwrap().stats.final_converged_fraction()));
    }
    let [(dt_i, imag), (dt_g, gd)] = [fractions[0], fractions[1]];
    verdict(
        imag >= gd,
        format!("20 starts, {ITERS} iterations at the stable step: imag {imag:.2} (dt {dt_i}) vs gd {gd:.2} (dt {dt_g})"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("H2 ground state from random starts", c1_h2_ground_state),
        ("fidelity to exact imaginary-time evolution", c2_fidelity),
        ("energy monotonicity", c3_monotonicity),
        ("toy-system contrast", c4_toy_contrast),
        ("A symmetric and positive semidefinite", c5_a_properties),
        ("gradient identity", c6_gradient),
        ("tangent states", c7_tangent),
        ("interference-circuit equivalence", c8_hadamard),
        ("LDCA structure and step time", c9_ldca),
        ("noise statistics", c10_noise),
        ("noisy-run sanity", c11_noisy_runs),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {}", k + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

