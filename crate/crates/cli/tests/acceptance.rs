//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use pdiqkd::bounds::{
    concentration_bound, honest_acceptance_bound, min_entropy_bound, BoundConstants,
};
use pdiqkd::games::{classical_optimum, classical_value, magic_square};
use pdiqkd::guessing::{
    anchoring_check, build_guessing_game, c_star_bounds, classical_guessing_value, EveCondition,
    GuessingValue,
};
use pdiqkd::protocol::{DeviceModel, EveModel, Protocol, ProtocolConfig};
use pdiqkd::quantum::{calibrate_noise, ideal_ms_strategy, NoiseModel};
use pdiqkd::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let spent = start.elapsed();
    ensure(spent < budget, format!("took {spent:.2?}, budget {budget:?}"))
}

fn exact_game_values() -> Outcome {
    let start = Instant::now();
    let (game, _) = magic_square();
    let omega_c = classical_value(&game).map_err(|e| e.to_string())?;
    ensure(omega_c == Ratio::new(8, 9), format!("omega_c = {omega_c}"))?;
    let ideal = ideal_ms_strategy()
        .win_probability(&game, NoiseModel::None)
        .map_err(|e| e.to_string())?;
    ensure((ideal - 1.0).abs() <= 1e-9, format!("ideal win = {ideal}"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("omega_c = {omega_c} < ideal win {ideal:.12}"))
}

fn common_bit_law() -> Outcome {
    let (game, bits) = magic_square();
    let mut checked = 0;
    for x in 0..3 {
        for y in 0..3 {
            for a in 0..4 {
                for b in 0..4 {
                    checked += 1;
                    if game.wins(x, y, a, b) {
                        ensure(
                            bits.f(x, y, a) == bits.g(x, y, b),
                            format!("f != g at (x={x}, y={y}, a={a}, b={b})"),
                        )?;
                    }
                }
            }
        }
    }
    ensure(checked == 144, format!("{checked} tuples"))?;
    Ok("144 tuples, zero exceptions".into())
}

fn guessing_game_values() -> Outcome {
    let start = Instant::now();
    let eta = Ratio::new(1, 8);
    let oracle = common::ms_guessing_value_by_triples(eta);
    let (game, bits) = magic_square();
    let omega_c = classical_value(&game).map_err(|e| e.to_string())?;
    let g = build_guessing_game(game, bits, eta, EveCondition::GuessCommonBit).map_err(|e| e.to_string())?;
    let library = classical_guessing_value(&g).map_err(|e| e.to_string())?.value;
    ensure(oracle == Ratio::new(8, 9), format!("oracle value {oracle}"))?;
    ensure(library == oracle, format!("library {library} vs oracle {oracle}"))?;
    ensure(omega_c <= library, "omega_c exceeds the guessing value")?;
    let constants = c_star_bounds(&[GuessingValue::Exact(library)]).map_err(|e| e.to_string())?;
    ensure(
        constants.c_star_upper_bound == GuessingValue::Exact(Ratio::new(1, 9)),
        format!("certified bound {:?}", constants.c_star_upper_bound),
    )?;
    within_budget(start, Duration::from_secs(30))?;
    Ok(format!("value {library} (oracle {oracle}), C* <= 1/9"))
}

fn anchoring() -> Outcome {
    let etas = [Ratio::new(1, 8), Ratio::new(1, 4), Ratio::new(1, 2)];
    for seed in 0..50 {
        for &eta in &etas {
            let (game, bits) = common::random_game(seed);
            let g = build_guessing_game(game, bits, eta, EveCondition::GuessCommonBit)
                .map_err(|e| e.to_string())?;
            ensure(anchoring_check(&g), format!("seed {seed}, eta {eta}"))?;
        }
    }
    Ok("150 guessing games anchored".into())
}

fn honest_completeness() -> Outcome {
    let start = Instant::now();
    let (n, eps, runs) = (2000, 0.1, 500u64);
    let q = calibrate_noise(1.0 - eps / 2.0).map_err(|e| e.to_string())?;
    let protocol =
        Protocol::magic_square(&DeviceModel::NoisyQuantum { q }, &EveModel::RandomGuess).map_err(|e| e.to_string())?;
    let config = ProtocolConfig::new(n, 0.125, 0.25, eps, 2024).map_err(|e| e.to_string())?;
    let results = protocol.run_many(&config, runs).map_err(|e| e.to_string())?;
    let rate = results.iter().filter(|r| r.accepted()).count() as f64 / runs as f64;
    let expected = common::binomial_tail(500, 0.95, 450);
    let sigma = common::frequency_sigma(expected, runs);
    let honest = honest_acceptance_bound(eps, 0.25, n as u64, &BoundConstants::default()).map_err(|e| e.to_string())?;
    ensure(
        (rate - expected).abs() <= 3.0 * sigma,
        format!("acceptance {rate} vs {expected} ± 3·{sigma:e}"),
    )?;
    ensure(rate >= honest, format!("acceptance {rate} below honest bound {honest}"))?;
    within_budget(start, Duration::from_secs(300))?;
    Ok(format!("acceptance {rate} (oracle {expected:.9}, honest bound {honest:.4})"))
}

fn key_agreement() -> Outcome {
    let ideal = Protocol::magic_square(&DeviceModel::IdealQuantum, &EveModel::RandomGuess).map_err(|e| e.to_string())?;
    let mut noiseless = 0;
    for (n, seed) in [(100, 1), (500, 2), (2000, 3)] {
        let config = ProtocolConfig::new(n, 0.125, 0.25, 0.1, seed).map_err(|e| e.to_string())?;
        for r in protocol_runs(&ideal, &config, 100)? {
            ensure(r.k_a == r.k_b, format!("noiseless run {} disagrees", r.run_index))?;
            noiseless += 1;
        }
    }
    let mut noisy = 0;
    for (i, target) in [0.75, 0.9, 0.95, 0.99].into_iter().enumerate() {
        let q = calibrate_noise(target).map_err(|e| e.to_string())?;
        let protocol =
            Protocol::magic_square(&DeviceModel::NoisyQuantum { q }, &EveModel::RandomGuess).map_err(|e| e.to_string())?;
        for include in [false, true] {
            let config = ProtocolConfig::new(400, 0.125, 0.25, 0.5, 10 + i as u64)
                .map_err(|e| e.to_string())?
                .with_exclude_test_rounds(!include);
            for r in protocol_runs(&protocol, &config, 100)? {
                ensure(
                    r.disagreements() <= r.losing_rounds(),
                    format!("{} disagreements > {} losses", r.disagreements(), r.losing_rounds()),
                )?;
                noisy += 1;
            }
        }
    }
    Ok(format!("{noiseless} noiseless runs agree; {noisy} noisy runs within their losses"))
}

fn protocol_runs(
    protocol: &Protocol,
    config: &ProtocolConfig,
    runs: u64,
) -> Result<Vec<pdiqkd::protocol::RunResult>, String> {
    protocol.run_many(config, runs).map_err(|e| e.to_string())
}

fn eve_baselines() -> Outcome {
    // Random guessing: hits on a k-bit key are Bernoulli(2^-k).
    let protocol = Protocol::magic_square(&DeviceModel::IdealQuantum, &EveModel::RandomGuess).map_err(|e| e.to_string())?;
    let config = ProtocolConfig::new(12, 0.125, 1.0 / 6.0, 0.1, 99).map_err(|e| e.to_string())?;
    let results = protocol_runs(&protocol, &config, 100_000)?;
    let (mut hits, mut mean, mut var, mut max_k) = (0u64, 0.0, 0.0, 0);
    for r in results.iter().filter(|r| r.accepted()) {
        let p = 0.5f64.powi(r.key_len() as i32);
        mean += p;
        var += p * (1.0 - p);
        hits += r.eve_guessed_all() as u64;
        max_k = max_k.max(r.key_len());
    }
    ensure(max_k <= 12, format!("key length {max_k}"))?;
    let sigma = var.sqrt();
    ensure(
        (hits as f64 - mean).abs() <= 3.0 * sigma,
        format!("random Eve hits {hits} vs {mean:.1} ± 3·{sigma:.1}"),
    )?;

    // Omniscient Eve against the classical optimum.
    let (game, _) = magic_square();
    let opt = classical_optimum(&game).map_err(|e| e.to_string())?.strategy;
    let protocol = Protocol::magic_square(
        &DeviceModel::DeterministicClassical { strategy: opt.clone() },
        &EveModel::OmniscientClassical { tables: vec![opt] },
    )
    .map_err(|e| e.to_string())?;
    let (eta, gamma, eps, runs) = (0.125, 0.25, 0.05, 2000u64);
    let (mut bits, mut correct) = (0usize, 0usize);
    let mut rates = Vec::new();
    let mut last_oracle = f64::INFINITY;
    for n in [20usize, 80, 320, 1280] {
        let config = ProtocolConfig::new(n, eta, gamma, eps, 5).map_err(|e| e.to_string())?;
        let results = protocol_runs(&protocol, &config, runs)?;
        let accepted: Vec<_> = results.iter().filter(|r| r.accepted()).collect();
        for r in &accepted {
            bits += r.key_len();
            correct += r.eve_correct_bits();
        }
        let rate = accepted.len() as f64 / runs as f64;
        let t = (gamma * n as f64).ceil() as u64;
        let need = ((1.0 - eps) * t as f64 - 1e-9).ceil() as u64;
        let oracle = common::binomial_tail(n as u64, 1.0 - eta, t + 1) * common::binomial_tail(t, 8.0 / 9.0, need);
        let sigma = common::frequency_sigma(oracle, runs);
        ensure(
            (rate - oracle).abs() <= 3.0 * sigma,
            format!("n={n}: acceptance {rate} vs {oracle} ± 3·{sigma:e}"),
        )?;
        ensure(oracle < last_oracle, format!("oracle not decreasing at n={n}"))?;
        last_oracle = oracle;
        rates.push(format!("{n}:{rate}"));
    }
    ensure(bits > 0 && correct == bits, format!("omniscient Eve {correct}/{bits} bits"))?;
    ensure(last_oracle < 0.01, format!("acceptance at the largest n is {last_oracle}"))?;
    Ok(format!(
        "random Eve {hits} hits vs {mean:.1} expected; omniscient per-bit 1.0, acceptance by n {}",
        rates.join(" ")
    ))
}

fn concentration_audit() -> Outcome {
    let start = Instant::now();
    let (n, t, eps) = (12usize, 4usize, 0.25);
    let subsets = (0u32..1 << n).filter(|m| m.count_ones() as usize == t).count();
    ensure(subsets == 495, format!("{subsets} test sets"))?;
    let observed = common::concentration_violation(n, t, eps);
    let bound = concentration_bound(eps, t as f64 / n as f64, n as u64, &BoundConstants::default())
        .map_err(|e| e.to_string())?;
    ensure(observed <= bound, format!("violation {observed} > bound {bound}"))?;
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!("worst violation {observed:.4} <= bound {bound:.4}"))
}

fn bound_calculators() -> Outcome {
    let k = BoundConstants::default();
    let entropy = |n: u64, eps: f64, c: f64| {
        min_entropy_bound(n, eps, 0.01, 1.0, c, &k).map_err(|e| e.to_string())
    };
    let relative = |got: f64, want: f64| ((got - want) / want).abs();
    let mut slopes = 0;
    for c in [0.05, 0.1, 0.3, 0.8] {
        let epsilons = [0.0, 0.05, 0.1, 0.2, 0.3].map(|f| f * c / 2.0 + c * 1e-3);
        for w in epsilons.windows(2) {
            for n in [1_000u64, 1_000_000] {
                let (r1, r2) = (entropy(n, w[0], c)?, entropy(n, w[1], c)?);
                let slope = (r2.entropy_term_bits.ln() - r1.entropy_term_bits.ln()) / (r2.delta.ln() - r1.delta.ln());
                ensure(relative(slope, 9.0) <= 1e-9, format!("delta slope {slope} at c*={c}"))?;
                slopes += 1;
            }
        }
        for eps in epsilons {
            for w in [1_000u64, 10_000, 1_000_000, 1_000_000_000].windows(2) {
                let (r1, r2) = (entropy(w[0], eps, c)?, entropy(w[1], eps, c)?);
                let slope = (r2.entropy_term_bits.ln() - r1.entropy_term_bits.ln())
                    / ((w[1] as f64).ln() - (w[0] as f64).ln());
                ensure(relative(slope, 1.0) <= 1e-9, format!("n slope {slope} at c*={c}"))?;
                slopes += 1;
            }
        }
    }
    let mut edges = 0;
    for c in [0.01f64, 0.05, 0.1, 1.0 / 9.0, 0.3, 1.0] {
        let half = c / 2.0;
        for eps in [half, half.next_up(), half * 1.5, c, half.next_down(), half * 0.5] {
            let result = min_entropy_bound(1000, eps, 0.01, 1.0, c, &k);
            let inapplicable = matches!(result, Err(Error::TheoremInapplicable { .. }));
            ensure(
                inapplicable == (eps >= half),
                format!("c*={c}, eps={eps:e}: {:?}", result.map(|r| r.h_min_bound)),
            )?;
            edges += 1;
        }
    }
    Ok(format!("{slopes} slopes at 9 and 1; {edges} applicability edges"))
}

fn run_cli(args: &[&str], workdir: &Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pdiqkd"))
        .args(args)
        .current_dir(workdir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)),
    )?;
    let file = std::fs::read(workdir.join("out")).map_err(|e| format!("{args:?}: {e}"))?;
    Ok((out.stdout, file))
}

fn cli_determinism() -> Outcome {
    let records = tempfile::tempdir().map_err(|e| e.to_string())?;
    let records_path = records.path().join("records.json");
    let simulate = Command::new(env!("CARGO_BIN_EXE_pdiqkd"))
        .args(["simulate", "--n", "300", "--eps", "0.004", "--runs", "20", "--seed", "3"])
        .arg("--out")
        .arg(&records_path)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(simulate.success(), "recording simulate failed")?;
    let records_arg = records_path.to_str().ok_or("non-UTF-8 temp path")?;

    let invocations: Vec<Vec<&str>> = vec![
        vec!["values"],
        vec!["values", "--format", "text", "--eta", "1/4"],
        vec!["simulate", "--n", "200", "--runs", "20", "--device", "noisy", "--transcripts"],
        vec!["simulate", "--n", "150", "--runs", "20", "--device", "classical", "--eve", "omniscient", "--format", "csv"],
        vec!["simulate", "--n", "150", "--runs", "20", "--device", "classical", "--eve", "predict", "--format", "text"],
        vec!["bounds", "--n", "1e6", "--eps", "0.004", "--gamma", "0.01", "--cstar", "0.01", "--pa", "0.5"],
        vec!["bounds", "--n", "300", "--eps", "0.004", "--attach", records_arg],
        vec!["attack", "--ns", "50,100", "--runs", "20"],
    ];
    for args in &invocations {
        let mut outputs = Vec::new();
        for workers in ["1", "4"] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut full = args.clone();
            full.extend(["--seed", "7", "--workers", workers, "--out", "out"]);
            let (stdout, file) = run_cli(&full, dir.path())?;
            ensure(!file.is_empty(), format!("{args:?} wrote an empty file"))?;
            outputs.push((stdout, file));
        }
        ensure(outputs[0] == outputs[1], format!("{args:?} differs between executions"))?;
    }
    Ok(format!("{} invocations byte-identical across two executions", invocations.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact game values", exact_game_values),
        ("common-bit law", common_bit_law),
        ("guessing-game values", guessing_game_values),
        ("anchoring", anchoring),
        ("honest completeness", honest_completeness),
        ("key agreement", key_agreement),
        ("eavesdropper baselines", eve_baselines),
        ("concentration audit", concentration_audit),
        ("bound calculators", bound_calculators),
        ("CLI determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL {name} ({elapsed:.2?}): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
