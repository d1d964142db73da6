//! Threshold repetition: `n` parallel rounds, won when at least a `t` fraction win.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::games::{DeterministicStrategyPair, InputSampler, TwoPlayerFreeGame};
use crate::quantum::BornSampler;
use crate::rng::{self, StreamRng};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGameSpec {
    pub n: usize,
    pub t: f64,
}

impl ThresholdGameSpec {
    pub fn new(n: usize, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("threshold game needs n >= 1"));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(domain(format!("threshold t = {t} outside [0, 1]")));
        }
        Ok(Self { n, t })
    }
}

/// Per-round win indicators `W_1 .. W_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundLedger {
    pub wins: Vec<bool>,
}

impl RoundLedger {
    pub fn new(wins: Vec<bool>) -> Self {
        Self { wins }
    }

    pub fn len(&self) -> usize {
        self.wins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wins.is_empty()
    }

    pub fn win_count(&self) -> usize {
        self.wins.iter().filter(|&&w| w).count()
    }

    pub fn loss_count(&self) -> usize {
        self.len() - self.win_count()
    }
}

/// Whether `wins / n >= t`. The comparison is inclusive.
pub fn threshold_win(ledger: &RoundLedger, spec: &ThresholdGameSpec) -> Result<bool> {
    if ledger.len() != spec.n {
        return Err(domain(format!(
            "ledger has {} rounds, game has {}",
            ledger.len(),
            spec.n
        )));
    }
    Ok(fraction_at_least(ledger.win_count(), spec.n, spec.t))
}

/// `count / total >= threshold`, treating an empty set as fraction 1.
///
/// The quotient is formed before comparing so that decimal thresholds such as
/// `0.7` compare equal to `7 / 10`.
pub(crate) fn fraction_at_least(count: usize, total: usize, threshold: f64) -> bool {
    if total == 0 {
        return true;
    }
    count as f64 / total as f64 >= threshold
}

/// The hidden constant `c` in the bound `exp(−c·δ⁹·n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionConstants {
    pub exponent_constant: f64,
}

impl Default for RepetitionConstants {
    fn default() -> Self {
        Self {
            exponent_constant: 1.0,
        }
    }
}

/// Natural log of the threshold-game value bound: `min(0, −c·δ⁹·n)`.
pub fn ln_tau_star_bound(n: u64, delta: f64, constants: &RepetitionConstants) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(domain(format!("delta = {delta} must be positive")));
    }
    if !(constants.exponent_constant > 0.0) {
        return Err(domain("repetition exponent constant must be positive"));
    }
    Ok((-constants.exponent_constant * delta.powi(9) * n as f64).min(0.0))
}

/// `min(1, exp(−c·δ⁹·n))`.
pub fn tau_star_bound(n: u64, delta: f64, constants: &RepetitionConstants) -> Result<f64> {
    Ok(ln_tau_star_bound(n, delta, constants)?.exp())
}

/// A strategy that plays each round independently with fresh inputs.
pub trait IidRoundStrategy {
    /// Samples one round's inputs and outputs and reports whether it was won.
    fn play_round(&self, rng: &mut StreamRng) -> bool;
}

/// A quantum strategy's Born table driven by the game's input distribution.
pub struct QuantumRounds<'a> {
    game: &'a TwoPlayerFreeGame,
    inputs: InputSampler,
    sampler: BornSampler,
}

impl<'a> QuantumRounds<'a> {
    pub fn new(game: &'a TwoPlayerFreeGame, sampler: BornSampler) -> Self {
        Self {
            game,
            inputs: InputSampler::new(game),
            sampler,
        }
    }
}

impl IidRoundStrategy for QuantumRounds<'_> {
    fn play_round(&self, rng: &mut StreamRng) -> bool {
        let (x, y) = self.inputs.sample(rng);
        let (a, b) = self.sampler.sample_round(x, y, rng);
        self.game.wins(x, y, a, b)
    }
}

pub struct DeterministicRounds<'a> {
    game: &'a TwoPlayerFreeGame,
    inputs: InputSampler,
    pair: DeterministicStrategyPair,
}

impl<'a> DeterministicRounds<'a> {
    pub fn new(game: &'a TwoPlayerFreeGame, pair: DeterministicStrategyPair) -> Result<Self> {
        pair.validate(game)?;
        Ok(Self {
            game,
            inputs: InputSampler::new(game),
            pair,
        })
    }
}

impl IidRoundStrategy for DeterministicRounds<'_> {
    fn play_round(&self, rng: &mut StreamRng) -> bool {
        let (x, y) = self.inputs.sample(rng);
        self.game.wins(x, y, self.pair.alice_map[x], self.pair.bob_map[y])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub n: usize,
    pub t: f64,
    pub trials: u64,
    pub wins: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Fraction of trials in which the threshold game is won.
///
/// Trial `i` draws from the stream `(seed, i, "threshold-trial")`; trials run
/// in parallel and the result does not depend on scheduling.
pub fn monte_carlo_threshold<S: IidRoundStrategy + Sync>(
    strategy: &S,
    spec: &ThresholdGameSpec,
    trials: u64,
    seed: u64,
) -> Result<ThresholdEstimate> {
    if trials == 0 {
        return Err(Error::Precondition("monte_carlo_threshold needs trials >= 1".into()));
    }
    let wins: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, trial, "threshold-trial");
            let won = (0..spec.n).filter(|_| strategy.play_round(&mut rng)).count();
            fraction_at_least(won, spec.n, spec.t) as u64
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(wins, trials);
    Ok(ThresholdEstimate {
        n: spec.n,
        t: spec.t,
        trials,
        wins,
        estimate: wins as f64 / trials as f64,
        ci_low,
        ci_high,
        seed,
    })
}
