use std::path::Path;

use pdiqkd::bounds::{
    concentration_bound, honest_acceptance_bound, min_entropy_bound, theorem_report, BoundConstants,
    BoundKind,
};
use pdiqkd::games::{
    classical_optimum, classical_value, magic_square, CommonBitMaps, DeterministicStrategyPair,
    GameDocument, TwoPlayerFreeGame,
};
use pdiqkd::guessing::{
    build_guessing_game, c_star_bounds, classical_guessing_value, strategy_guessing_value,
    ClassicalEveStrategy, EveCondition, GuessingValue, PlayerStrategy,
};
use pdiqkd::protocol::{DeviceModel, EveModel, Protocol, ProtocolConfig, RunAggregate, RunRecord};
use pdiqkd::quantum::{calibrate_noise, ideal_ms_strategy, NoiseModel};
use pdiqkd::rational::{format_rational, to_f64, Rational};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{
    AttackArgs, BoundsArgs, Condition, ConstantArgs, DeviceKind, EveKind, NoiseArgs, ProtocolArgs,
    SimulateArgs, ValuesArgs,
};
use crate::error::CliError;
use crate::output::{num, to_value, Report, Table};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_game(spec: &str) -> Result<(TwoPlayerFreeGame, Option<CommonBitMaps>), CliError> {
    if spec == "ms" {
        let (game, bits) = magic_square();
        return Ok((game, Some(bits)));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
    Ok(GameDocument::from_json(&text)?.into_game()?)
}

fn exact_row(name: &str, r: &Rational) -> Vec<String> {
    vec![name.into(), format_rational(r), format!("{}", to_f64(r))]
}

fn value_row(name: &str, v: &GuessingValue) -> Vec<String> {
    match v {
        GuessingValue::Exact(r) => exact_row(name, r),
        GuessingValue::Approximate(x) => vec![name.into(), String::new(), format!("{x}")],
    }
}

pub fn values(args: &ValuesArgs) -> Result<Report, CliError> {
    let is_ms = args.game == "ms";
    let (game, bits) = load_game(&args.game)?;
    let bits = bits.ok_or_else(|| usage("the game document has no common_bits maps"))?;
    let condition = match args.condition {
        Condition::CommonBit => EveCondition::GuessCommonBit,
        Condition::FullOutput => EveCondition::GuessFullOutput,
    };
    let guessing = build_guessing_game(game.clone(), bits, args.eta, condition)?;
    let omega_c = classical_value(&game)?;
    let optimum = classical_guessing_value(&guessing)?;

    let mut evaluated = vec![("classical optimal triple", GuessingValue::Exact(optimum.value))];
    let omega_star = if is_ms {
        let strategy = ideal_ms_strategy();
        let players = PlayerStrategy::Quantum {
            strategy: &strategy,
            noise: NoiseModel::None,
        };
        let uniform = ClassicalEveStrategy::uniform(&guessing);
        evaluated.push((
            "ideal quantum, uniform Eve",
            strategy_guessing_value(&guessing, players, &uniform)?,
        ));
        Some(strategy.win_probability(&game, NoiseModel::None)?)
    } else {
        None
    };
    let values: Vec<GuessingValue> = evaluated.iter().map(|(_, v)| *v).collect();
    let constants = c_star_bounds(&values)?.with_working_value(args.cstar)?;

    let mut table = Table::new(&["quantity", "exact", "decimal"]);
    table.push(exact_row("omega_c(G)", &omega_c));
    table.push(exact_row("omega_c(G_eta)", &optimum.value));
    table.push(vec![
        "omega_c(G) <= omega_c(G_eta)".into(),
        (omega_c <= optimum.value).to_string(),
        String::new(),
    ]);
    let mut upper = value_row("C* upper bound", &constants.c_star_upper_bound);
    upper[1] = format!("<= {}", upper[1]);
    table.push(upper);
    table.push(vec![
        "omega*(G) ideal strategy".into(),
        String::new(),
        omega_star.map_or_else(|| "n/a".into(), |w| format!("{w}")),
    ]);
    table.push(vec!["C* working value".into(), String::new(), format!("{}", constants.c_star_ms)]);
    let mut strategies = Table::new(&["evaluated strategy", "exact", "decimal"]).titled("guessing-game strategy values");
    for (name, v) in &evaluated {
        strategies.push(value_row(name, v));
    }

    Ok(Report {
        command: "values",
        config: json!({
            "game": args.game,
            "eta": format_rational(&args.eta),
            "condition": to_value(&condition)?,
            "cstar": args.cstar,
        }),
        body: json!({
            "omega_c": format_rational(&omega_c),
            "omega_c_decimal": to_f64(&omega_c),
            "omega_c_guessing": format_rational(&optimum.value),
            "omega_c_guessing_decimal": to_f64(&optimum.value),
            "classical_value_within_guessing_value": omega_c <= optimum.value,
            "optimal_players": to_value(&optimum.players)?,
            "omega_star_ideal": omega_star,
            "immunization": to_value(&constants)?,
            "evaluated_strategies": evaluated
                .iter()
                .map(|(name, v)| Ok(json!({"strategy": name, "value": to_value(v)?})))
                .collect::<Result<Vec<_>, CliError>>()?,
        }),
        csv: Table {
            title: None,
            header: table.header.clone(),
            rows: table.rows.iter().chain(&strategies.rows).cloned().collect(),
        },
        text: vec![table, strategies],
    })
}

fn protocol_config(args: &ProtocolArgs, seed: u64) -> Result<ProtocolConfig, CliError> {
    Ok(ProtocolConfig::new(args.n, args.eta, args.gamma, args.epsilon, seed)?
        .with_exclude_test_rounds(!args.include_test_rounds))
}

fn classical_strategy() -> Result<DeterministicStrategyPair, CliError> {
    Ok(classical_optimum(&magic_square().0)?.strategy)
}

fn device_model(kind: DeviceKind, noise: &NoiseArgs, epsilon: f64) -> Result<DeviceModel, CliError> {
    Ok(match kind {
        DeviceKind::Ideal => DeviceModel::IdealQuantum,
        DeviceKind::Noisy => {
            let q = match noise.q {
                Some(q) => q,
                None => calibrate_noise(noise.target_win.unwrap_or(1.0 - epsilon / 2.0))?,
            };
            NoiseModel::depolarizing(q)?;
            DeviceModel::NoisyQuantum { q }
        }
        DeviceKind::Classical => DeviceModel::DeterministicClassical {
            strategy: classical_strategy()?,
        },
    })
}

fn eve_model(kind: EveKind, device: &DeviceModel) -> Result<EveModel, CliError> {
    Ok(match kind {
        EveKind::Random => EveModel::RandomGuess,
        EveKind::Predict => {
            let (game, bits) = magic_square();
            EveModel::predictor_for(&game, &bits, &classical_strategy()?.alice_map)
        }
        EveKind::Omniscient => EveModel::OmniscientClassical {
            tables: device
                .tables()
                .ok_or_else(|| usage("the omniscient eavesdropper needs a classical device"))?
                .to_vec(),
        },
    })
}

fn aggregate_rows(agg: &RunAggregate) -> Vec<(&'static str, String)> {
    let eve = agg.eve.as_ref();
    vec![
        ("runs", agg.runs.to_string()),
        ("accepted_runs", agg.accepted_runs.to_string()),
        ("size_aborts", agg.size_aborts.to_string()),
        ("test_aborts", agg.test_aborts.to_string()),
        ("acceptance_rate", num(Some(agg.acceptance_rate))),
        ("mean_key_len", num(Some(agg.mean_key_len))),
        ("disagreement_rate", num(agg.disagreement_rate)),
        ("eve_per_bit_success", num(eve.and_then(|e| e.per_bit_success))),
        ("eve_whole_string_success", num(eve.map(|e| e.whole_string_success))),
        ("eve_min_entropy_floor", num(eve.and_then(|e| e.min_entropy_floor))),
    ]
}

pub fn simulate(args: &SimulateArgs, seed: u64) -> Result<Report, CliError> {
    let config = protocol_config(&args.protocol, seed)?;
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    let device = device_model(args.device, &args.noise, config.epsilon)?;
    let eve = eve_model(args.eve, &device)?;
    let protocol = Protocol::magic_square(&device, &eve)?;
    let results = protocol.run_many(&config, args.runs)?;
    let records: Vec<RunRecord> = results.iter().map(|r| RunRecord::from_result(&config, r)).collect();
    let aggregate = RunAggregate::from_records(&records)?;

    let mut summary = Table::new(&["statistic", "value"]).titled("aggregate over runs");
    for (k, v) in aggregate_rows(&aggregate) {
        summary.push(vec![k.into(), v]);
    }
    let mut csv = Table::new(&[
        "run_index",
        "abort_stage",
        "s_size",
        "t_size",
        "test_wins",
        "key_len",
        "disagreements",
        "losing_rounds",
        "eve_correct_bits",
        "eve_guessed_all",
    ]);
    for r in &records {
        csv.push(vec![
            r.run_index.to_string(),
            to_value(&r.abort_stage)?.as_str().unwrap_or_default().to_string(),
            r.s_size.to_string(),
            r.t_size.to_string(),
            r.test_wins.to_string(),
            r.key_len.to_string(),
            r.disagreements.to_string(),
            r.losing_rounds.to_string(),
            r.eve_correct_bits.to_string(),
            r.eve_guessed_all.to_string(),
        ]);
    }

    let mut config_json = to_value(&config)?;
    config_json["runs"] = json!(args.runs);
    config_json["device"] = to_value(&device)?;
    config_json["eve"] = to_value(&eve)?;
    config_json["config_hash"] = json!(config.config_hash());
    let mut body = json!({ "records": to_value(&records)?, "aggregate": to_value(&aggregate)? });
    if args.transcripts {
        body["transcripts"] = to_value(&results)?;
    }
    Ok(Report {
        command: "simulate",
        config: config_json,
        body,
        text: vec![summary],
        csv,
    })
}

fn bound_constants(args: &ConstantArgs) -> Result<BoundConstants, CliError> {
    let d = BoundConstants::default();
    let constants = BoundConstants {
        conc_constant: args.conc.unwrap_or(d.conc_constant),
        rep_constant: args.rep.unwrap_or(d.rep_constant),
        leak_constant: args.leak.unwrap_or(d.leak_constant),
        honest_constant: args.honest.unwrap_or(d.honest_constant),
    };
    constants.validate()?;
    Ok(constants)
}

fn read_records(path: &Path) -> Result<Vec<RunRecord>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{} is not JSON: {e}", path.display())))?;
    let records = doc
        .get("records")
        .cloned()
        .ok_or_else(|| usage(format!("{} has no run records", path.display())))?;
    serde_json::from_value(records).map_err(|e| usage(format!("malformed run records: {e}")))
}

pub fn bounds(args: &BoundsArgs, seed: u64) -> Result<Report, CliError> {
    let config = protocol_config(&args.protocol, seed)?;
    let constants = bound_constants(&args.constants)?;
    let n = config.n as u64;
    let mut report = min_entropy_bound(n, config.epsilon, config.gamma, args.pa, args.cstar, &constants)?;
    report.config_hash = Some(config.config_hash());
    let honest = honest_acceptance_bound(config.epsilon, config.gamma, n, &constants)?;
    let conc = concentration_bound(config.epsilon, config.gamma, n, &constants)?;
    let theorem = match &args.attach {
        Some(path) => {
            let aggregate = RunAggregate::from_records(&read_records(path)?)?;
            Some(theorem_report(&config, args.cstar, args.pa, &constants, &aggregate)?)
        }
        None => None,
    };

    let mut table = Table::new(&["quantity", "value"]).titled("analytic bounds (all constants shown)");
    let rows: Vec<(&str, f64)> = vec![
        ("n", n as f64),
        ("epsilon", report.epsilon),
        ("gamma", report.gamma),
        ("p_a", report.p_a),
        ("c_star", report.c_star),
        ("conc_constant", constants.conc_constant),
        ("rep_constant", constants.rep_constant),
        ("leak_constant", constants.leak_constant),
        ("honest_constant", constants.honest_constant),
        ("delta", report.delta),
        ("ln_tau_star", report.ln_tau_star),
        ("tau_star", report.tau_star),
        ("entropy_term_bits", report.entropy_term_bits),
        ("conditioning_penalty_bits", report.conditioning_penalty_bits),
        ("leakage_bits", report.leakage_bits),
        ("h_min_bound", report.h_min_bound),
        ("epsilon_s", report.epsilon_s),
        ("concentration_bound", conc),
        ("honest_acceptance_bound", honest),
    ];
    for (k, v) in &rows {
        table.push(vec![k.to_string(), format!("{v}")]);
    }
    let mut csv = Table::new(&["quantity", "value"]);
    csv.rows = table.rows.clone();
    let flags = theorem.as_ref().map_or_else(|| report.vacuity_flags(), |t| t.flags.clone());
    let mut text = vec![table];
    if let Some(t) = &theorem {
        let mut cmp = Table::new(&["quantity", "analytic bound", "bound kind", "empirical estimate"])
            .titled(format!(
                "bound vs estimate over {} runs ({} accepted)",
                t.empirical.runs, t.empirical.accepted_runs
            ));
        for row in &t.rows {
            let kind = match row.bound_kind {
                BoundKind::Lower => "lower",
                BoundKind::Upper => "upper",
                BoundKind::None => "",
            };
            cmp.push(vec![
                row.quantity.clone(),
                num(row.analytic_bound),
                kind.into(),
                num(row.empirical_estimate),
            ]);
        }
        text.push(cmp);
    }
    if !flags.is_empty() {
        let mut table = Table::new(&["flag"]);
        for f in &flags {
            table.push(vec![f.clone()]);
        }
        text.push(table);
    }

    let mut config_json = to_value(&config)?;
    config_json["cstar"] = json!(args.cstar);
    config_json["pa"] = json!(args.pa);
    config_json["constants"] = to_value(&constants)?;
    config_json["attach"] = json!(args.attach.as_ref().map(|p| p.display().to_string()));
    let mut body = json!({
        "report": to_value(&report)?,
        "concentration_bound": conc,
        "honest_acceptance_bound": honest,
        "flags": flags,
    });
    if let Some(t) = &theorem {
        body["theorem_report"] = to_value(t)?;
    }
    Ok(Report {
        command: "bounds",
        config: config_json,
        body,
        text,
        csv,
    })
}

struct Cell {
    device: DeviceKind,
    eve: EveKind,
    epsilon: f64,
    n: usize,
}

fn kind_name<T: clap::ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

pub fn attack(args: &AttackArgs, seed: u64) -> Result<Report, CliError> {
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for &device in &args.devices {
        for &eve in &args.eves {
            if eve == EveKind::Omniscient && device != DeviceKind::Classical {
                skipped.push(format!("{}/{}", kind_name(device), kind_name(eve)));
                continue;
            }
            for &epsilon in &args.epsilons {
                for &n in &args.ns {
                    cells.push(Cell { device, eve, epsilon, n });
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(usage("the attack grid is empty"));
    }
    let mut prepared = Vec::with_capacity(cells.len());
    for cell in &cells {
        let protocol_args = ProtocolArgs {
            n: cell.n,
            eta: args.eta,
            gamma: args.gamma,
            epsilon: cell.epsilon,
            include_test_rounds: args.include_test_rounds,
        };
        let config = protocol_config(&protocol_args, seed)?;
        let device = device_model(cell.device, &args.noise, cell.epsilon)?;
        let eve = eve_model(cell.eve, &device)?;
        prepared.push((config, device, eve));
    }
    let aggregates = prepared
        .par_iter()
        .map(|(config, device, eve)| {
            let protocol = Protocol::magic_square(device, eve)?;
            let records: Vec<RunRecord> = protocol
                .run_many(config, args.runs)?
                .iter()
                .map(|r| RunRecord::from_result(config, r))
                .collect();
            RunAggregate::from_records(&records)
        })
        .collect::<pdiqkd::Result<Vec<_>>>()?;

    let mut header = vec!["device", "eve", "epsilon", "n"];
    let names: Vec<&str> = aggregate_rows(&aggregates[0]).iter().map(|(k, _)| *k).collect();
    header.extend(names);
    let mut table = Table::new(&header);
    for (cell, agg) in cells.iter().zip(&aggregates) {
        let mut row = vec![
            kind_name(cell.device),
            kind_name(cell.eve),
            format!("{}", cell.epsilon),
            cell.n.to_string(),
        ];
        row.extend(aggregate_rows(agg).into_iter().map(|(_, v)| v));
        table.push(row);
    }
    let devices: Vec<String> = args.devices.iter().map(|&d| kind_name(d)).collect();
    let eves: Vec<String> = args.eves.iter().map(|&e| kind_name(e)).collect();
    let config = json!({
        "devices": devices,
        "eves": eves,
        "epsilons": args.epsilons,
        "ns": args.ns,
        "eta": args.eta,
        "gamma": args.gamma,
        "runs": args.runs,
        "master_seed": seed,
        "target_win": args.noise.target_win,
        "q": args.noise.q,
        "exclude_test_rounds_from_key": !args.include_test_rounds,
        "skipped_pairs": skipped,
    });
    let cells_json = cells
        .iter()
        .zip(&prepared)
        .zip(&aggregates)
        .map(|((cell, (_, device, eve)), agg)| {
            Ok(json!({
                "device": to_value(device)?,
                "eve": to_value(eve)?,
                "epsilon": cell.epsilon,
                "n": cell.n,
                "aggregate": to_value(agg)?,
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Report {
        command: "attack",
        config,
        body: json!({ "cells": cells_json }),
        csv: Table {
            title: None,
            header: table.header.clone(),
            rows: table.rows.clone(),
        },
        text: vec![table],
    })
}
