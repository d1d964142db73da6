mod common;

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use pdiqkd::games::{classical_optimum, magic_square, Bit, MS_ALICE_OUTPUTS, MS_BOB_OUTPUTS};
use pdiqkd::protocol::{
    select_s, select_t, stage, Device, DeviceModel, Eavesdropper, EveModel, EveView, Protocol,
    ProtocolConfig,
};
use pdiqkd::rng::{self, StreamRng};
use rand::Rng;
use rayon::prelude::*;

#[test]
fn select_s_mean_matches_binomial() {
    let (n, eta, draws) = (50usize, 0.9, 10_000u64);
    let total: usize = (0..draws)
        .map(|i| select_s(n, eta, &mut rng::stream(1, i, stage::SELECT_S)).len())
        .sum();
    let mean = total as f64 / draws as f64;
    let expected = (1.0 - eta) * n as f64;
    let sigma = (n as f64 * eta * (1.0 - eta) / draws as f64).sqrt();
    assert!((mean - expected).abs() <= 3.0 * sigma, "{mean} vs {expected} ± {sigma}");
}

#[test]
fn select_t_is_uniform_over_subsets() {
    let s = vec![0, 2, 3, 5, 6, 7];
    let draws = 100_000u64;
    let mut counts = std::collections::BTreeMap::<Vec<usize>, u64>::new();
    for i in 0..draws {
        let t = select_t(&s, 0.375, 8, &mut rng::stream(2, i, stage::SELECT_T)).unwrap();
        *counts.entry(t).or_default() += 1;
    }
    assert_eq!(counts.len(), 20);
    let p = 1.0 / 20.0;
    let sigma = common::frequency_sigma(p, draws);
    for (subset, &c) in &counts {
        let freq = c as f64 / draws as f64;
        assert!((freq - p).abs() <= 3.0 * sigma, "{subset:?}: {freq}");
    }
    let observed: Vec<u64> = counts.values().copied().collect();
    let (stat, critical) = common::chi_squared(&observed, &[p; 20]);
    assert!(stat < critical);
}

#[test]
fn per_round_inputs_follow_the_guessing_game_law() {
    // Cell (x, y, leaked) has probability (1/9)(1 − η) if leaked, (1/9)η otherwise.
    let eta = 0.125;
    let protocol = Protocol::magic_square(&DeviceModel::IdealQuantum, &EveModel::RandomGuess).unwrap();
    let config = ProtocolConfig::new(4, eta, 0.25, 0.0, 77).unwrap();
    let runs = 100_000u64;
    let tallies: Vec<[u64; 18]> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let r = protocol.run(&config, i).unwrap();
            let mut cells = [[0u64; 18]; 4];
            for (pos, row) in cells.iter_mut().enumerate() {
                let leaked = r.transcript.s.binary_search(&pos).is_ok() as usize;
                row[(r.rounds.x[pos] * 3 + r.rounds.y[pos]) * 2 + leaked] += 1;
            }
            cells
        })
        .reduce(
            || [[0; 18]; 4],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x += y;
                    }
                }
                a
            },
        )
        .to_vec();
    let expected: Vec<f64> = (0..18)
        .map(|c| if c % 2 == 1 { (1.0 - eta) / 9.0 } else { eta / 9.0 })
        .collect();
    for (pos, observed) in tallies.iter().enumerate() {
        let (stat, critical) = common::chi_squared(observed, &expected);
        assert!(stat < critical, "position {pos}: chi2 {stat} >= {critical}");
    }
}

#[test]
fn ideal_keys_are_the_measured_square_cells() {
    let protocol = Protocol::magic_square(&DeviceModel::IdealQuantum, &EveModel::RandomGuess).unwrap();
    let config = ProtocolConfig::new(300, 0.125, 0.25, 0.0, 5).unwrap();
    let rows = common::ms::alice_rows();
    let cols = common::ms::bob_columns();
    for r in protocol.run_many(&config, 30).unwrap() {
        assert!(r.accepted());
        for (k, &i) in r.key_indices.iter().enumerate() {
            let (x, y) = (r.rounds.x[i], r.rounds.y[i]);
            assert_eq!(r.k_a[k], rows[r.rounds.a[i]][y]);
            assert_eq!(r.k_b[k], cols[r.rounds.b[i]][x]);
        }
        assert_eq!(r.k_a, r.k_b);
    }
}

#[test]
fn oracle_output_tables_match_the_library() {
    assert_eq!(common::ms::alice_rows(), MS_ALICE_OUTPUTS.to_vec());
    assert_eq!(common::ms::bob_columns(), MS_BOB_OUTPUTS.to_vec());
}

#[test]
fn classical_disagreement_rate_matches_the_strategy_table() {
    let (game, _) = magic_square();
    let opt = classical_optimum(&game).unwrap().strategy;
    let rows = common::ms::alice_rows();
    let cols = common::ms::bob_columns();
    let differing = (0..9)
        .filter(|c| {
            let (x, y) = (c / 3, c % 3);
            rows[opt.alice_map[x]][y] != cols[opt.bob_map[y]][x]
        })
        .count();
    let p = differing as f64 / 9.0;

    let protocol = Protocol::magic_square(
        &DeviceModel::DeterministicClassical { strategy: opt },
        &EveModel::RandomGuess,
    )
    .unwrap();
    let config = ProtocolConfig::new(500, 0.125, 0.25, 0.5, 8).unwrap();
    let results = protocol.run_many(&config, 200).unwrap();
    let bits: usize = results.iter().map(|r| r.key_len()).sum();
    let disagreements: usize = results.iter().map(|r| r.disagreements()).sum();
    let rate = disagreements as f64 / bits as f64;
    let sigma = common::frequency_sigma(p, bits as u64);
    assert!((rate - p).abs() <= 3.0 * sigma, "{rate} vs {p} ± {sigma}");
}

#[test]
fn omniscient_eve_matches_every_round_of_s() {
    let (game, _) = magic_square();
    let opt = classical_optimum(&game).unwrap().strategy;
    let protocol = Protocol::magic_square(
        &DeviceModel::DeterministicClassical { strategy: opt.clone() },
        &EveModel::OmniscientClassical { tables: vec![opt] },
    )
    .unwrap();
    let config = ProtocolConfig::new(200, 0.125, 0.25, 0.5, 3)
        .unwrap()
        .with_exclude_test_rounds(false);
    for r in protocol.run_many(&config, 40).unwrap() {
        assert!(r.accepted());
        assert_eq!(r.key_indices, r.transcript.s);
        assert_eq!(r.eve_guess, r.k_a);
    }
}

/// Records every view it is shown and guesses from its own stream.
struct RecordingEve(Arc<Mutex<Vec<String>>>);

impl Eavesdropper for RecordingEve {
    fn guess(&self, view: &EveView<'_>, rng: &mut StreamRng) -> Vec<Bit> {
        self.0.lock().unwrap().push(serde_json::to_string(view).unwrap());
        view.key_indices.iter().map(|_| rng.random_range(0..2)).collect()
    }
}

/// Fixed outputs, with a canary overwriting every round outside `exposed`.
struct CanaryDevice {
    exposed: BTreeSet<usize>,
    canary: usize,
}

impl Device for CanaryDevice {
    fn respond(&self, x: &[usize], _y: &[usize], _rng: &mut StreamRng) -> (Vec<usize>, Vec<usize>) {
        // Row 000 wins with column 001 unless x = 2, where column 010 does.
        (0..x.len())
            .map(|i| {
                if self.exposed.contains(&i) {
                    (0, usize::from(x[i] == 2))
                } else {
                    (self.canary, self.canary)
                }
            })
            .unzip()
    }
}

#[test]
fn eve_sees_nothing_outside_the_leaked_fields() {
    let (seed, n) = (41, 60);
    let config = ProtocolConfig::new(n, 0.125, 0.25, 0.5, seed).unwrap();
    let s = select_s(n, config.eta, &mut rng::stream(seed, 0, stage::SELECT_S));
    let t = select_t(&s, config.gamma, n, &mut rng::stream(seed, 0, stage::SELECT_T)).unwrap();
    let mut guesses = Vec::new();
    let mut views = Vec::new();
    // Every output outside T differs between the four runs.
    for canary in 0..4 {
        let (game, bits) = magic_square();
        let device = CanaryDevice {
            exposed: t.iter().copied().collect(),
            canary,
        };
        let record = Arc::new(Mutex::new(Vec::new()));
        let eve = RecordingEve(Arc::clone(&record));
        let protocol = Protocol::new(game, bits, Box::new(device), Box::new(eve));
        let r = protocol.run(&config, 0).unwrap();
        assert!(r.accepted());
        assert_eq!(r.transcript.t, t);
        guesses.push(r.eve_guess);
        views.push(record.lock().unwrap().clone());
    }
    assert_eq!(views[0].len(), 1);
    assert!(guesses.windows(2).all(|w| w[0] == w[1]));
    assert!(views.windows(2).all(|w| w[0] == w[1]));
}
