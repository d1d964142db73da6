//! Pluggable device and eavesdropper models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::games::{Bit, CommonBitMaps, DeterministicStrategyPair, TwoPlayerFreeGame};
use crate::quantum::{ideal_ms_strategy, BornSampler, NoiseModel};
use crate::rng::StreamRng;

/// An untrusted device pair. It receives all `n` inputs of both parties at
/// once, so it may correlate its answers across rounds.
pub trait Device: Send + Sync {
    fn respond(&self, x: &[usize], y: &[usize], rng: &mut StreamRng) -> (Vec<usize>, Vec<usize>);
}

/// Everything Eve learns from the public channel. Nothing else reaches her.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EveView<'a> {
    pub n: usize,
    pub eta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub s: &'a [usize],
    pub x_s: &'a [usize],
    pub y_s: &'a [usize],
    pub t: &'a [usize],
    pub a_t: &'a [usize],
    pub b_t: &'a [usize],
    /// Rounds forming the raw key; a function of `S`, `T` and the public configuration.
    pub key_indices: &'a [usize],
}

impl EveView<'_> {
    /// Leaked inputs of round `i`, if `i ∈ S`.
    pub fn inputs_of(&self, i: usize) -> Option<(usize, usize)> {
        self.s
            .binary_search(&i)
            .ok()
            .map(|k| (self.x_s[k], self.y_s[k]))
    }
}

/// An eavesdropper producing one guess bit per key round.
pub trait Eavesdropper: Send + Sync {
    fn guess(&self, view: &EveView<'_>, rng: &mut StreamRng) -> Vec<Bit>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DeviceModel {
    IdealQuantum,
    NoisyQuantum { q: f64 },
    DeterministicClassical { strategy: DeterministicStrategyPair },
    /// Round `i` plays `table[i mod len]`.
    CustomCorrelated { table: Vec<DeterministicStrategyPair> },
}

impl DeviceModel {
    /// Prepares the model against a game. Quantum devices require the Magic Square game.
    pub fn build(&self, game: &TwoPlayerFreeGame) -> Result<Box<dyn Device>> {
        Ok(match self {
            Self::IdealQuantum => Box::new(QuantumDevice {
                sampler: ideal_ms_strategy().sampler(game, NoiseModel::None)?,
            }),
            Self::NoisyQuantum { q } => Box::new(QuantumDevice {
                sampler: ideal_ms_strategy().sampler(game, NoiseModel::depolarizing(*q)?)?,
            }),
            Self::DeterministicClassical { strategy } => {
                strategy.validate(game)?;
                Box::new(TableDevice {
                    table: vec![strategy.clone()],
                })
            }
            Self::CustomCorrelated { table } => {
                if table.is_empty() {
                    return Err(Error::MalformedStrategy("empty strategy table".into()));
                }
                for s in table {
                    s.validate(game)?;
                }
                Box::new(TableDevice {
                    table: table.clone(),
                })
            }
        })
    }

    /// The strategy tables, for classical devices.
    pub fn tables(&self) -> Option<&[DeterministicStrategyPair]> {
        match self {
            Self::DeterministicClassical { strategy } => Some(std::slice::from_ref(strategy)),
            Self::CustomCorrelated { table } => Some(table),
            _ => None,
        }
    }
}

struct QuantumDevice {
    sampler: BornSampler,
}

impl Device for QuantumDevice {
    fn respond(&self, x: &[usize], y: &[usize], rng: &mut StreamRng) -> (Vec<usize>, Vec<usize>) {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| self.sampler.sample_round(xi, yi, rng))
            .unzip()
    }
}

struct TableDevice {
    table: Vec<DeterministicStrategyPair>,
}

impl Device for TableDevice {
    fn respond(&self, x: &[usize], y: &[usize], _rng: &mut StreamRng) -> (Vec<usize>, Vec<usize>) {
        x.iter()
            .zip(y)
            .enumerate()
            .map(|(i, (&xi, &yi))| {
                let s = &self.table[i % self.table.len()];
                (s.alice_map[xi], s.bob_map[yi])
            })
            .unzip()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EveModel {
    RandomGuess,
    /// Guesses `predictor[x·|Y| + y]` on every key round with leaked inputs `(x, y)`.
    PredictFromLeak { predictor: Vec<Bit> },
    /// Knows the device's strategy tables and recomputes `f(x, y, A(x))`.
    OmniscientClassical { tables: Vec<DeterministicStrategyPair> },
}

impl EveModel {
    /// Predictor that assumes Alice plays `alice_map` deterministically.
    pub fn predictor_for(
        game: &TwoPlayerFreeGame,
        bits: &CommonBitMaps,
        alice_map: &[usize],
    ) -> Self {
        let ny = game.num_bob_inputs();
        let predictor = (0..game.num_alice_inputs() * ny)
            .map(|cell| {
                let (x, y) = (cell / ny, cell % ny);
                bits.f(x, y, alice_map[x])
            })
            .collect();
        Self::PredictFromLeak { predictor }
    }

    pub fn build(
        &self,
        game: &TwoPlayerFreeGame,
        bits: &CommonBitMaps,
    ) -> Result<Box<dyn Eavesdropper>> {
        Ok(match self {
            Self::RandomGuess => Box::new(RandomEve),
            Self::PredictFromLeak { predictor } => {
                if predictor.len() != game.num_alice_inputs() * game.num_bob_inputs()
                    || predictor.iter().any(|&b| b > 1)
                {
                    return Err(domain("predictor must give one bit per input pair"));
                }
                Box::new(PredictingEve {
                    num_bob_inputs: game.num_bob_inputs(),
                    predictor: predictor.clone(),
                })
            }
            Self::OmniscientClassical { tables } => {
                if tables.is_empty() {
                    return Err(Error::MalformedStrategy("omniscient Eve needs device tables".into()));
                }
                for s in tables {
                    s.validate(game)?;
                }
                Box::new(OmniscientEve {
                    tables: tables.clone(),
                    bits: bits.clone(),
                })
            }
        })
    }
}

struct RandomEve;

impl Eavesdropper for RandomEve {
    fn guess(&self, view: &EveView<'_>, rng: &mut StreamRng) -> Vec<Bit> {
        view.key_indices
            .iter()
            .map(|_| rng.random::<bool>() as Bit)
            .collect()
    }
}

struct PredictingEve {
    num_bob_inputs: usize,
    predictor: Vec<Bit>,
}

impl Eavesdropper for PredictingEve {
    fn guess(&self, view: &EveView<'_>, _rng: &mut StreamRng) -> Vec<Bit> {
        view.key_indices
            .iter()
            .map(|&i| match view.inputs_of(i) {
                Some((x, y)) => self.predictor[x * self.num_bob_inputs + y],
                None => 0,
            })
            .collect()
    }
}

struct OmniscientEve {
    tables: Vec<DeterministicStrategyPair>,
    bits: CommonBitMaps,
}

impl Eavesdropper for OmniscientEve {
    fn guess(&self, view: &EveView<'_>, _rng: &mut StreamRng) -> Vec<Bit> {
        view.key_indices
            .iter()
            .map(|&i| match view.inputs_of(i) {
                Some((x, y)) => {
                    let s = &self.tables[i % self.tables.len()];
                    self.bits.f(x, y, s.alice_map[x])
                }
                None => 0,
            })
            .collect()
    }
}
