//! The parallel DIQKD protocol as a sequential state machine over pluggable
//! device and eavesdropper models.
//!
//! Round indices are 0-based. Every stage draws from its own stream
//! `(master_seed, run_index, label)`, so each stage can be replayed alone.

mod amplify;
mod models;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::games::{magic_square, Bit, CommonBitMaps, InputSampler, TwoPlayerFreeGame};
use crate::repetition::RoundLedger;
use crate::rng::{self, StreamRng};

pub use amplify::privacy_amplify;
pub use models::{Device, DeviceModel, Eavesdropper, EveModel, EveView};

/// Stream labels, one per randomized stage.
pub mod stage {
    pub const INPUTS: &str = "inputs";
    pub const SELECT_S: &str = "select-s";
    pub const DEVICE: &str = "device";
    pub const SELECT_T: &str = "select-t";
    pub const EVE: &str = "eve";
}

/// Slack when comparing a win count against the real-valued `(1 − ε)·|T|`.
const COUNT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub eta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub master_seed: u64,
    pub exclude_test_rounds_from_key: bool,
}

impl ProtocolConfig {
    /// Validated config with `exclude_test_rounds_from_key = true`.
    pub fn new(n: usize, eta: f64, gamma: f64, epsilon: f64, master_seed: u64) -> Result<Self> {
        let config = Self {
            n,
            eta,
            gamma,
            epsilon,
            master_seed,
            exclude_test_rounds_from_key: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_exclude_test_rounds(mut self, exclude: bool) -> Self {
        self.exclude_test_rounds_from_key = exclude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain("n must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(domain(format!("eta = {} outside [0, 1)", self.eta)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 0.5) {
            return Err(domain(format!("gamma = {} outside (0, 1/2]", self.gamma)));
        }
        if !(0.0..=0.5).contains(&self.epsilon) {
            return Err(domain(format!("epsilon = {} outside [0, 1/2]", self.epsilon)));
        }
        Ok(())
    }

    /// `⌈γn⌉`.
    pub fn test_set_size(&self) -> usize {
        test_set_size(self.n, self.gamma)
    }

    /// Hex SHA-256 of the public parameters. The seed is excluded so that
    /// seed sweeps of one configuration share a hash.
    pub fn config_hash(&self) -> String {
        config_hash(
            self.n,
            self.eta,
            self.gamma,
            self.epsilon,
            self.exclude_test_rounds_from_key,
        )
    }
}

/// Hash of a parameter set; see [`ProtocolConfig::config_hash`].
pub fn config_hash(n: usize, eta: f64, gamma: f64, epsilon: f64, exclude: bool) -> String {
    let canonical = format!("n={n};eta={eta:?};gamma={gamma:?};epsilon={epsilon:?};exclude={exclude}");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// `⌈γn⌉`, with products within `1e-9` of an integer snapped to it.
pub fn test_set_size(n: usize, gamma: f64) -> usize {
    let v = gamma * n as f64;
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

/// Each round joins `S` independently with probability `1 − η`. Sorted.
pub fn select_s(n: usize, eta: f64, rng: &mut StreamRng) -> Vec<usize> {
    let keep = (1.0 - eta).clamp(0.0, 1.0);
    (0..n).filter(|_| rng.random_bool(keep)).collect()
}

/// A uniform `⌈γn⌉`-subset of `s`, sorted, or `None` (size abort) when `|S| ≤ ⌈γn⌉`.
pub fn select_t(s: &[usize], gamma: f64, n: usize, rng: &mut StreamRng) -> Option<Vec<usize>> {
    let k = test_set_size(n, gamma);
    if s.len() <= k {
        return None;
    }
    let mut t: Vec<usize> = index::sample(rng, s.len(), k).into_iter().map(|i| s[i]).collect();
    t.sort_unstable();
    Some(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub wins: usize,
    pub passed: bool,
}

/// Passes iff at least `(1 − ε)·|T|` of the test rounds win.
pub fn test_check(
    game: &TwoPlayerFreeGame,
    x_t: &[usize],
    y_t: &[usize],
    a_t: &[usize],
    b_t: &[usize],
    epsilon: f64,
) -> Result<TestOutcome> {
    let len = x_t.len();
    if y_t.len() != len || a_t.len() != len || b_t.len() != len {
        return Err(domain("test-round strings are misaligned"));
    }
    let mut wins = 0;
    for i in 0..len {
        if game.evaluate_predicate(x_t[i], y_t[i], a_t[i], b_t[i])? {
            wins += 1;
        }
    }
    let passed = wins as f64 + COUNT_TOL >= (1.0 - epsilon) * len as f64;
    Ok(TestOutcome { wins, passed })
}

/// `S`, or `S ∖ T` when `exclude_test_rounds`. Both inputs sorted.
pub fn key_index_set(s: &[usize], t: &[usize], exclude_test_rounds: bool) -> Vec<usize> {
    if !exclude_test_rounds {
        return s.to_vec();
    }
    s.iter()
        .copied()
        .filter(|i| t.binary_search(i).is_err())
        .collect()
}

/// All four per-round strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rounds {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl Rounds {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `(K_A)_i = f(x_i, y_i, a_i)` and `(K_B)_i = g(x_i, y_i, b_i)` over `key_indices`.
pub fn extract_raw_keys(
    bits: &CommonBitMaps,
    rounds: &Rounds,
    s: &[usize],
    key_indices: &[usize],
) -> Result<(Vec<Bit>, Vec<Bit>)> {
    let mut k_a = Vec::with_capacity(key_indices.len());
    let mut k_b = Vec::with_capacity(key_indices.len());
    for &i in key_indices {
        if s.binary_search(&i).is_err() {
            return Err(domain(format!("round {i} is not in S; its inputs were never exchanged")));
        }
        k_a.push(bits.f(rounds.x[i], rounds.y[i], rounds.a[i]));
        k_b.push(bits.g(rounds.x[i], rounds.y[i], rounds.b[i]));
    }
    Ok((k_a, k_b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortStage {
    None,
    SizeCheck,
    TestCheck,
}

/// The public classical messages of one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub s: Vec<usize>,
    pub x_s: Vec<usize>,
    pub y_s: Vec<usize>,
    pub t: Vec<usize>,
    pub a_t: Vec<usize>,
    pub b_t: Vec<usize>,
    pub abort_stage: AbortStage,
    pub test_win_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_index: u64,
    pub transcript: Transcript,
    /// Private to Alice and Bob; never shown to Eve.
    pub rounds: Rounds,
    /// Empty when the run aborts.
    pub key_indices: Vec<usize>,
    pub k_a: Vec<Bit>,
    pub k_b: Vec<Bit>,
    /// Eve's guess of `K_A`, aligned with `key_indices`.
    pub eve_guess: Vec<Bit>,
    pub per_round_wins: RoundLedger,
}

impl RunResult {
    pub fn accepted(&self) -> bool {
        self.transcript.abort_stage == AbortStage::None
    }

    pub fn key_len(&self) -> usize {
        self.key_indices.len()
    }

    pub fn disagreements(&self) -> usize {
        self.k_a.iter().zip(&self.k_b).filter(|(a, b)| a != b).count()
    }

    pub fn eve_correct_bits(&self) -> usize {
        self.k_a.iter().zip(&self.eve_guess).filter(|(a, e)| a == e).count()
    }

    pub fn eve_guessed_all(&self) -> bool {
        self.eve_guess == self.k_a
    }

    pub fn losing_rounds(&self) -> usize {
        self.per_round_wins.loss_count()
    }
}

/// A protocol instance: game, common-bit maps, device and eavesdropper.
pub struct Protocol {
    game: TwoPlayerFreeGame,
    bits: CommonBitMaps,
    inputs: InputSampler,
    device: Box<dyn Device>,
    eve: Box<dyn Eavesdropper>,
}

impl Protocol {
    pub fn new(
        game: TwoPlayerFreeGame,
        bits: CommonBitMaps,
        device: Box<dyn Device>,
        eve: Box<dyn Eavesdropper>,
    ) -> Self {
        let inputs = InputSampler::new(&game);
        Self {
            game,
            bits,
            inputs,
            device,
            eve,
        }
    }

    /// The Magic Square protocol with the given device and Eve models.
    pub fn magic_square(device: &DeviceModel, eve: &EveModel) -> Result<Self> {
        let (game, bits) = magic_square();
        let device = device.build(&game)?;
        let eve = eve.build(&game, &bits)?;
        Ok(Self::new(game, bits, device, eve))
    }

    pub fn game(&self) -> &TwoPlayerFreeGame {
        &self.game
    }

    pub fn common_bits(&self) -> &CommonBitMaps {
        &self.bits
    }

    /// Executes one run. Aborts are outcomes, not errors.
    pub fn run(&self, config: &ProtocolConfig, run_index: u64) -> Result<RunResult> {
        config.validate()?;
        let seed = config.master_seed;
        let n = config.n;

        let mut rng = rng::stream(seed, run_index, stage::INPUTS);
        let (x, y): (Vec<usize>, Vec<usize>) = (0..n).map(|_| self.inputs.sample(&mut rng)).unzip();

        let s = select_s(n, config.eta, &mut rng::stream(seed, run_index, stage::SELECT_S));
        let x_s = s.iter().map(|&i| x[i]).collect();
        let y_s = s.iter().map(|&i| y[i]).collect();

        let (a, b) = self
            .device
            .respond(&x, &y, &mut rng::stream(seed, run_index, stage::DEVICE));
        if a.len() != n || b.len() != n {
            return Err(Error::MalformedStrategy(format!(
                "device answered {} and {} rounds out of {n}",
                a.len(),
                b.len()
            )));
        }
        for i in 0..n {
            self.game.check_outputs(a[i], b[i])?;
        }
        let rounds = Rounds { x, y, a, b };
        let per_round_wins = RoundLedger::new(
            (0..n)
                .map(|i| self.game.wins(rounds.x[i], rounds.y[i], rounds.a[i], rounds.b[i]))
                .collect(),
        );

        let mut transcript = Transcript {
            s,
            x_s,
            y_s,
            t: Vec::new(),
            a_t: Vec::new(),
            b_t: Vec::new(),
            abort_stage: AbortStage::SizeCheck,
            test_win_count: 0,
        };
        let aborted = |transcript: Transcript, rounds: Rounds, per_round_wins: RoundLedger| RunResult {
            run_index,
            transcript,
            rounds,
            key_indices: Vec::new(),
            k_a: Vec::new(),
            k_b: Vec::new(),
            eve_guess: Vec::new(),
            per_round_wins,
        };

        let Some(t) = select_t(
            &transcript.s,
            config.gamma,
            n,
            &mut rng::stream(seed, run_index, stage::SELECT_T),
        ) else {
            return Ok(aborted(transcript, rounds, per_round_wins));
        };
        transcript.a_t = t.iter().map(|&i| rounds.a[i]).collect();
        transcript.b_t = t.iter().map(|&i| rounds.b[i]).collect();
        let x_t: Vec<usize> = t.iter().map(|&i| rounds.x[i]).collect();
        let y_t: Vec<usize> = t.iter().map(|&i| rounds.y[i]).collect();
        transcript.t = t;
        let outcome = test_check(&self.game, &x_t, &y_t, &transcript.a_t, &transcript.b_t, config.epsilon)?;
        transcript.test_win_count = outcome.wins;
        if !outcome.passed {
            transcript.abort_stage = AbortStage::TestCheck;
            return Ok(aborted(transcript, rounds, per_round_wins));
        }
        transcript.abort_stage = AbortStage::None;

        let key_indices = key_index_set(&transcript.s, &transcript.t, config.exclude_test_rounds_from_key);
        let (k_a, k_b) = extract_raw_keys(&self.bits, &rounds, &transcript.s, &key_indices)?;
        let eve_guess = self.eve_guess(config, run_index, &transcript, &key_indices);
        Ok(RunResult {
            run_index,
            transcript,
            rounds,
            key_indices,
            k_a,
            k_b,
            eve_guess,
            per_round_wins,
        })
    }

    /// Eve's guess, computed from public data only.
    pub fn eve_guess(
        &self,
        config: &ProtocolConfig,
        run_index: u64,
        transcript: &Transcript,
        key_indices: &[usize],
    ) -> Vec<Bit> {
        let view = EveView {
            n: config.n,
            eta: config.eta,
            gamma: config.gamma,
            epsilon: config.epsilon,
            s: &transcript.s,
            x_s: &transcript.x_s,
            y_s: &transcript.y_s,
            t: &transcript.t,
            a_t: &transcript.a_t,
            b_t: &transcript.b_t,
            key_indices,
        };
        let mut guess = self
            .eve
            .guess(&view, &mut rng::stream(config.master_seed, run_index, stage::EVE));
        guess.resize(key_indices.len(), 0);
        guess
    }

    /// Runs `0..runs` in parallel; results are in run order.
    pub fn run_many(&self, config: &ProtocolConfig, runs: u64) -> Result<Vec<RunResult>> {
        (0..runs).into_par_iter().map(|i| self.run(config, i)).collect()
    }
}

/// One run of the Magic Square protocol at run index 0.
pub fn run_protocol(config: &ProtocolConfig, device: &DeviceModel, eve: &EveModel) -> Result<RunResult> {
    Protocol::magic_square(device, eve)?.run(config, 0)
}

/// Per-run summary as written to run-record files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub run_index: u64,
    pub abort_stage: AbortStage,
    pub s_size: usize,
    pub t_size: usize,
    pub test_wins: usize,
    pub key_len: usize,
    pub disagreements: usize,
    pub losing_rounds: usize,
    pub eve_correct_bits: usize,
    pub eve_guessed_all: bool,
}

impl RunRecord {
    pub fn from_result(config: &ProtocolConfig, result: &RunResult) -> Self {
        Self {
            config_hash: config.config_hash(),
            seed: config.master_seed,
            run_index: result.run_index,
            abort_stage: result.transcript.abort_stage,
            s_size: result.transcript.s.len(),
            t_size: result.transcript.t.len(),
            test_wins: result.transcript.test_win_count,
            key_len: result.key_len(),
            disagreements: result.disagreements(),
            losing_rounds: result.losing_rounds(),
            eve_correct_bits: result.eve_correct_bits(),
            eve_guessed_all: result.accepted() && result.eve_guessed_all(),
        }
    }

    pub fn accepted(&self) -> bool {
        self.abort_stage == AbortStage::None
    }
}

/// Eve's success over accepted runs only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessStats {
    pub runs: u64,
    pub accepted_runs: u64,
    pub key_bits: u64,
    pub correct_bits: u64,
    pub whole_string_hits: u64,
    /// `None` when no accepted run produced key bits.
    pub per_bit_success: Option<f64>,
    pub whole_string_success: f64,
    /// `−log2(whole_string_success)`; `None` when Eve never guessed a whole key.
    pub min_entropy_floor: Option<f64>,
}

impl GuessStats {
    pub fn from_records(records: &[RunRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Precondition("guessing statistics need runs >= 1".into()));
        }
        let accepted: Vec<&RunRecord> = records.iter().filter(|r| r.accepted()).collect();
        if accepted.is_empty() {
            return Err(Error::DegenerateStatistics(format!(
                "all {} runs aborted; nothing to condition on",
                records.len()
            )));
        }
        let key_bits: u64 = accepted.iter().map(|r| r.key_len as u64).sum();
        let correct_bits: u64 = accepted.iter().map(|r| r.eve_correct_bits as u64).sum();
        let whole_string_hits = accepted.iter().filter(|r| r.eve_guessed_all).count() as u64;
        let whole_string_success = whole_string_hits as f64 / accepted.len() as f64;
        Ok(Self {
            runs: records.len() as u64,
            accepted_runs: accepted.len() as u64,
            key_bits,
            correct_bits,
            whole_string_hits,
            per_bit_success: (key_bits > 0).then(|| correct_bits as f64 / key_bits as f64),
            whole_string_success,
            min_entropy_floor: (whole_string_hits > 0).then(|| 0.0 - whole_string_success.log2()),
        })
    }
}

/// Runs the protocol `runs` times and reports Eve's success conditioned on acceptance.
pub fn empirical_guessing_probability(
    protocol: &Protocol,
    config: &ProtocolConfig,
    runs: u64,
) -> Result<GuessStats> {
    if runs == 0 {
        return Err(Error::Precondition("guessing statistics need runs >= 1".into()));
    }
    let records: Vec<RunRecord> = (0..runs)
        .into_par_iter()
        .map(|i| protocol.run(config, i).map(|r| RunRecord::from_result(config, &r)))
        .collect::<Result<_>>()?;
    GuessStats::from_records(&records)
}

/// Summary over a batch of run records sharing one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub config_hash: String,
    pub runs: u64,
    pub accepted_runs: u64,
    pub size_aborts: u64,
    pub test_aborts: u64,
    pub acceptance_rate: f64,
    /// Over accepted runs; `0` when none.
    pub mean_key_len: f64,
    /// Disagreeing key bits over all key bits of accepted runs; `None` without key bits.
    pub disagreement_rate: Option<f64>,
    /// `None` when every run aborted.
    pub eve: Option<GuessStats>,
}

impl RunAggregate {
    pub fn from_records(records: &[RunRecord]) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::Precondition("cannot aggregate zero runs".into()));
        };
        if records.iter().any(|r| r.config_hash != first.config_hash) {
            return Err(Error::Consistency("run records mix configuration hashes".into()));
        }
        let count = |stage| records.iter().filter(|r| r.abort_stage == stage).count() as u64;
        let accepted_runs = count(AbortStage::None);
        let key_bits: u64 = records.iter().map(|r| r.key_len as u64).sum();
        let disagreements: u64 = records.iter().map(|r| r.disagreements as u64).sum();
        let eve = match GuessStats::from_records(records) {
            Ok(stats) => Some(stats),
            Err(Error::DegenerateStatistics(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            config_hash: first.config_hash.clone(),
            runs: records.len() as u64,
            accepted_runs,
            size_aborts: count(AbortStage::SizeCheck),
            test_aborts: count(AbortStage::TestCheck),
            acceptance_rate: accepted_runs as f64 / records.len() as f64,
            mean_key_len: if accepted_runs == 0 {
                0.0
            } else {
                key_bits as f64 / accepted_runs as f64
            },
            disagreement_rate: (key_bits > 0).then(|| disagreements as f64 / key_bits as f64),
            eve,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::classical_optimum;
    use crate::quantum::calibrate_noise;

    fn config(n: usize, eta: f64, gamma: f64, epsilon: f64, seed: u64) -> ProtocolConfig {
        ProtocolConfig::new(n, eta, gamma, epsilon, seed).unwrap()
    }

    fn ms() -> (TwoPlayerFreeGame, CommonBitMaps) {
        magic_square()
    }

    #[test]
    fn config_ranges() {
        assert!(ProtocolConfig::new(10, 0.0, 0.5, 0.0, 1).is_ok());
        assert!(ProtocolConfig::new(10, 0.0, 0.5, 0.5, 1).is_ok());
        assert!(ProtocolConfig::new(0, 0.1, 0.25, 0.1, 1).is_err());
        assert!(ProtocolConfig::new(10, 1.0, 0.25, 0.1, 1).is_err());
        assert!(ProtocolConfig::new(10, -0.1, 0.25, 0.1, 1).is_err());
        assert!(ProtocolConfig::new(10, 0.1, 0.0, 0.1, 1).is_err());
        assert!(ProtocolConfig::new(10, 0.1, 0.6, 0.1, 1).is_err());
        assert!(ProtocolConfig::new(10, 0.1, 0.25, 0.51, 1).is_err());
    }

    #[test]
    fn hash_ignores_seed_only() {
        let a = config(100, 0.125, 0.25, 0.1, 1);
        let b = config(100, 0.125, 0.25, 0.1, 2);
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        assert_ne!(a.config_hash(), config(100, 0.125, 0.25, 0.05, 1).config_hash());
        assert_ne!(
            a.config_hash(),
            a.clone().with_exclude_test_rounds(false).config_hash()
        );
    }

    #[test]
    fn test_set_size_is_integral_ceiling() {
        assert_eq!(test_set_size(2000, 0.25), 500);
        assert_eq!(test_set_size(30, 0.1), 3);
        assert_eq!(test_set_size(10, 0.25), 3);
        assert_eq!(test_set_size(1, 0.01), 1);
    }

    #[test]
    fn eta_zero_selects_everything() {
        let mut rng = rng::stream(3, 0, stage::SELECT_S);
        assert_eq!(select_s(50, 0.0, &mut rng), (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn select_t_is_a_subset_or_aborts() {
        let s: Vec<usize> = (0..8).step_by(2).collect();
        assert!(select_t(&s, 0.5, 8, &mut rng::stream(1, 0, "t")).is_none());
        let s: Vec<usize> = vec![0, 1, 2, 4, 5, 7];
        for run in 0..100 {
            let t = select_t(&s, 0.375, 8, &mut rng::stream(1, run, "t")).unwrap();
            assert_eq!(t.len(), 3);
            assert!(t.iter().all(|i| s.contains(i)));
            assert!(t.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn test_check_boundaries() {
        let (game, _) = ms();
        let opt = classical_optimum(&game).unwrap().strategy;
        // Collect one winning and one losing input pair under the optimal strategy.
        let mut win = None;
        let mut lose = None;
        for x in 0..3 {
            for y in 0..3 {
                let w = game.wins(x, y, opt.alice_map[x], opt.bob_map[y]);
                if w { win.get_or_insert((x, y)); } else { lose.get_or_insert((x, y)); }
            }
        }
        let (win, lose) = (win.unwrap(), lose.unwrap());
        let build = |wins: usize| {
            let cells: Vec<(usize, usize)> = (0..100).map(|i| if i < wins { win } else { lose }).collect();
            let x: Vec<usize> = cells.iter().map(|c| c.0).collect();
            let y: Vec<usize> = cells.iter().map(|c| c.1).collect();
            let a: Vec<usize> = x.iter().map(|&x| opt.alice_map[x]).collect();
            let b: Vec<usize> = y.iter().map(|&y| opt.bob_map[y]).collect();
            (x, y, a, b)
        };
        let (x, y, a, b) = build(94);
        assert!(!test_check(&game, &x, &y, &a, &b, 0.05).unwrap().passed);
        let (x, y, a, b) = build(95);
        let out = test_check(&game, &x, &y, &a, &b, 0.05).unwrap();
        assert_eq!(out, TestOutcome { wins: 95, passed: true });
        let (x, y, a, b) = build(100);
        assert!(test_check(&game, &x, &y, &a, &b, 0.0).unwrap().passed);
        assert!(test_check(&game, &x[..99], &y, &a, &b, 0.0).is_err());
    }

    #[test]
    fn raw_keys_reject_rounds_outside_s() {
        let (_, bits) = ms();
        let rounds = Rounds {
            x: vec![0, 1, 2],
            y: vec![0, 1, 2],
            a: vec![0, 1, 2],
            b: vec![0, 1, 2],
        };
        assert!(extract_raw_keys(&bits, &rounds, &[0, 2], &[0, 1]).is_err());
        assert_eq!(extract_raw_keys(&bits, &rounds, &[0, 2], &[0, 2]).unwrap().0.len(), 2);
    }

    #[test]
    fn ideal_devices_agree_and_never_fail_the_test() {
        let protocol = Protocol::magic_square(&DeviceModel::IdealQuantum, &EveModel::RandomGuess).unwrap();
        let cfg = config(200, 0.125, 0.25, 0.0, 11);
        for result in protocol.run_many(&cfg, 20).unwrap() {
            assert_ne!(result.transcript.abort_stage, AbortStage::TestCheck);
            assert_eq!(result.k_a, result.k_b);
            assert_eq!(result.losing_rounds(), 0);
        }
    }

    #[test]
    fn runs_are_deterministic_and_ordered() {
        let q = calibrate_noise(0.95).unwrap();
        let protocol =
            Protocol::magic_square(&DeviceModel::NoisyQuantum { q }, &EveModel::RandomGuess).unwrap();
        let cfg = config(300, 0.125, 0.25, 0.1, 5);
        let first = protocol.run_many(&cfg, 8).unwrap();
        let second = protocol.run_many(&cfg, 8).unwrap();
        assert_eq!(first, second);
        assert_eq!(first[3], protocol.run(&cfg, 3).unwrap());
        assert!(first.iter().enumerate().all(|(i, r)| r.run_index == i as u64));
    }

    #[test]
    fn exclusion_changes_only_the_index_set() {
        let q = calibrate_noise(0.97).unwrap();
        let protocol =
            Protocol::magic_square(&DeviceModel::NoisyQuantum { q }, &EveModel::RandomGuess).unwrap();
        let with = config(400, 0.125, 0.25, 0.2, 9);
        let without = with.clone().with_exclude_test_rounds(false);
        let a = protocol.run(&with, 0).unwrap();
        let b = protocol.run(&without, 0).unwrap();
        assert!(a.accepted() && b.accepted());
        assert_eq!(b.key_indices, b.transcript.s);
        for (k, i) in a.key_indices.iter().enumerate() {
            let j = b.key_indices.binary_search(i).unwrap();
            assert_eq!(a.k_a[k], b.k_a[j]);
            assert_eq!(a.k_b[k], b.k_b[j]);
        }
    }

    #[test]
    fn omniscient_eve_reads_classical_devices() {
        let (game, _) = ms();
        let opt = classical_optimum(&game).unwrap().strategy;
        let protocol = Protocol::magic_square(
            &DeviceModel::DeterministicClassical { strategy: opt.clone() },
            &EveModel::OmniscientClassical { tables: vec![opt] },
        )
        .unwrap();
        let cfg = config(60, 0.125, 0.25, 0.5, 2);
        let stats = empirical_guessing_probability(&protocol, &cfg, 50).unwrap();
        assert_eq!(stats.per_bit_success, Some(1.0));
        assert_eq!(stats.whole_string_success, 1.0);
        assert_eq!(stats.min_entropy_floor, Some(0.0));
    }

    #[test]
    fn guessing_statistics_preconditions() {
        let protocol = Protocol::magic_square(&DeviceModel::IdealQuantum, &EveModel::RandomGuess).unwrap();
        let cfg = config(20, 0.125, 0.25, 0.1, 1);
        assert!(matches!(
            empirical_guessing_probability(&protocol, &cfg, 0),
            Err(Error::Precondition(_))
        ));
        // η close to 1 leaves S too small for a test set.
        let cfg = config(4, 0.99, 0.5, 0.1, 1);
        assert!(matches!(
            empirical_guessing_probability(&protocol, &cfg, 5),
            Err(Error::DegenerateStatistics(_))
        ));
    }

    #[test]
    fn aggregate_rejects_mixed_hashes() {
        let protocol = Protocol::magic_square(&DeviceModel::IdealQuantum, &EveModel::RandomGuess).unwrap();
        let c1 = config(40, 0.125, 0.25, 0.1, 1);
        let c2 = config(40, 0.125, 0.25, 0.2, 1);
        let r1 = RunRecord::from_result(&c1, &protocol.run(&c1, 0).unwrap());
        let r2 = RunRecord::from_result(&c2, &protocol.run(&c2, 0).unwrap());
        assert!(matches!(
            RunAggregate::from_records(&[r1.clone(), r2]),
            Err(Error::Consistency(_))
        ));
        let agg = RunAggregate::from_records(&[r1]).unwrap();
        assert_eq!(agg.runs, 1);
    }

    #[test]
    fn eve_guess_depends_only_on_the_transcript() {
        let protocol = Protocol::magic_square(
            &DeviceModel::IdealQuantum,
            &EveModel::PredictFromLeak { predictor: vec![1, 0, 1, 0, 1, 0, 1, 0, 1] },
        )
        .unwrap();
        let cfg = config(100, 0.125, 0.25, 0.1, 4);
        let result = protocol.run(&cfg, 0).unwrap();
        let replay = protocol.eve_guess(&cfg, 0, &result.transcript, &result.key_indices);
        assert_eq!(replay, result.eve_guess);
    }
}
