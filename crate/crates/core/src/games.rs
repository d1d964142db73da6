//! Two-player free games, the Magic Square game, and exact classical values.
//!
//! A game stores its predicate as an explicit truth table indexed by
//! `(x, y, a, b)`. Inputs and outputs are referred to by index; the string
//! labels only matter for display and for the JSON game document.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rational::{self, Rational};

/// Maximum number of deterministic strategy combinations a brute-force search will visit.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

/// Index of a bit value (0 or 1).
pub type Bit = u8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoPlayerFreeGame {
    alice_inputs: Vec<String>,
    bob_inputs: Vec<String>,
    alice_outputs: Vec<String>,
    bob_outputs: Vec<String>,
    alice_input_dist: Vec<Rational>,
    bob_input_dist: Vec<Rational>,
    predicate: Vec<bool>,
}

/// Input-pair weights `π(x)·π(y)` scaled to integers over a common denominator.
#[derive(Clone, Debug)]
pub struct InputWeights {
    pub denominator: i64,
    weights: Vec<i64>,
    num_bob_inputs: usize,
}

impl InputWeights {
    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.weights[x * self.num_bob_inputs + y]
    }
}

impl TwoPlayerFreeGame {
    /// Builds a game from labels, marginals and a flat truth table in `(x, y, a, b)` row-major order.
    pub fn new(
        alice_inputs: Vec<String>,
        bob_inputs: Vec<String>,
        alice_outputs: Vec<String>,
        bob_outputs: Vec<String>,
        alice_input_dist: Vec<Rational>,
        bob_input_dist: Vec<Rational>,
        predicate: Vec<bool>,
    ) -> Result<Self> {
        for (name, set) in [
            ("alice_inputs", &alice_inputs),
            ("bob_inputs", &bob_inputs),
            ("alice_outputs", &alice_outputs),
            ("bob_outputs", &bob_outputs),
        ] {
            if set.is_empty() {
                return Err(domain(format!("{name} must be non-empty")));
            }
        }
        if alice_input_dist.len() != alice_inputs.len() || !rational::is_probability_vector(&alice_input_dist)
        {
            return Err(domain("alice_input_dist must be a probability vector over alice_inputs"));
        }
        if bob_input_dist.len() != bob_inputs.len() || !rational::is_probability_vector(&bob_input_dist) {
            return Err(domain("bob_input_dist must be a probability vector over bob_inputs"));
        }
        let expected =
            alice_inputs.len() * bob_inputs.len() * alice_outputs.len() * bob_outputs.len();
        if predicate.len() != expected {
            return Err(domain(format!(
                "predicate table has {} entries, expected {expected}",
                predicate.len()
            )));
        }
        Ok(Self {
            alice_inputs,
            bob_inputs,
            alice_outputs,
            bob_outputs,
            alice_input_dist,
            bob_input_dist,
            predicate,
        })
    }

    /// Builds a game with uniform marginals and numeric labels from a predicate closure.
    pub fn uniform_from_fn(
        num_alice_inputs: usize,
        num_bob_inputs: usize,
        num_alice_outputs: usize,
        num_bob_outputs: usize,
        predicate: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let labels = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let uniform = |n: usize| {
            if n == 0 {
                Vec::new()
            } else {
                vec![Rational::new(1, n as i64); n]
            }
        };
        let mut table = Vec::with_capacity(
            num_alice_inputs * num_bob_inputs * num_alice_outputs * num_bob_outputs,
        );
        for x in 0..num_alice_inputs {
            for y in 0..num_bob_inputs {
                for a in 0..num_alice_outputs {
                    for b in 0..num_bob_outputs {
                        table.push(predicate(x, y, a, b));
                    }
                }
            }
        }
        Self::new(
            labels(num_alice_inputs),
            labels(num_bob_inputs),
            labels(num_alice_outputs),
            labels(num_bob_outputs),
            uniform(num_alice_inputs),
            uniform(num_bob_inputs),
            table,
        )
    }

    pub fn num_alice_inputs(&self) -> usize {
        self.alice_inputs.len()
    }

    pub fn num_bob_inputs(&self) -> usize {
        self.bob_inputs.len()
    }

    pub fn num_alice_outputs(&self) -> usize {
        self.alice_outputs.len()
    }

    pub fn num_bob_outputs(&self) -> usize {
        self.bob_outputs.len()
    }

    pub fn alice_inputs(&self) -> &[String] {
        &self.alice_inputs
    }

    pub fn bob_inputs(&self) -> &[String] {
        &self.bob_inputs
    }

    pub fn alice_outputs(&self) -> &[String] {
        &self.alice_outputs
    }

    pub fn bob_outputs(&self) -> &[String] {
        &self.bob_outputs
    }

    pub fn alice_input_dist(&self) -> &[Rational] {
        &self.alice_input_dist
    }

    pub fn bob_input_dist(&self) -> &[Rational] {
        &self.bob_input_dist
    }

    /// Probability of the input pair under the product distribution.
    pub fn input_probability(&self, x: usize, y: usize) -> Rational {
        self.alice_input_dist[x] * self.bob_input_dist[y]
    }

    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.bob_inputs.len() + y) * self.alice_outputs.len() + a) * self.bob_outputs.len() + b
    }

    /// Predicate lookup without bounds reporting. Panics on out-of-range indices.
    #[inline]
    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.predicate[self.index(x, y, a, b)]
    }

    pub fn check_inputs(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.num_alice_inputs() {
            return Err(domain(format!("alice input {x} out of range")));
        }
        if y >= self.num_bob_inputs() {
            return Err(domain(format!("bob input {y} out of range")));
        }
        Ok(())
    }

    pub fn check_outputs(&self, a: usize, b: usize) -> Result<()> {
        if a >= self.num_alice_outputs() {
            return Err(domain(format!("alice output {a} out of range")));
        }
        if b >= self.num_bob_outputs() {
            return Err(domain(format!("bob output {b} out of range")));
        }
        Ok(())
    }

    pub fn evaluate_predicate(&self, x: usize, y: usize, a: usize, b: usize) -> Result<bool> {
        self.check_inputs(x, y)?;
        self.check_outputs(a, b)?;
        Ok(self.wins(x, y, a, b))
    }

    pub fn input_weights(&self) -> Result<InputWeights> {
        let denominator = rational::common_denominator(
            self.alice_input_dist.iter().chain(self.bob_input_dist.iter()),
        )?;
        let denominator = denominator
            .checked_mul(denominator)
            .ok_or_else(|| Error::Overflow("input weight denominator".into()))?;
        let mut weights = Vec::with_capacity(self.num_alice_inputs() * self.num_bob_inputs());
        for x in 0..self.num_alice_inputs() {
            for y in 0..self.num_bob_inputs() {
                weights.push(rational::scaled_numerator(&self.input_probability(x, y), denominator)?);
            }
        }
        Ok(InputWeights {
            denominator,
            weights,
            num_bob_inputs: self.num_bob_inputs(),
        })
    }

    /// `|A|^|X| · |B|^|Y|`, saturating at `u128::MAX`.
    pub fn strategy_count(&self) -> u128 {
        saturating_pow(self.num_alice_outputs(), self.num_alice_inputs())
            .saturating_mul(saturating_pow(self.num_bob_outputs(), self.num_bob_inputs()))
    }

    /// Exact winning probability of a deterministic strategy pair.
    pub fn win_probability(&self, pair: &DeterministicStrategyPair) -> Result<Rational> {
        pair.validate(self)?;
        let weights = self.input_weights()?;
        let mut total = 0i64;
        for x in 0..self.num_alice_inputs() {
            for y in 0..self.num_bob_inputs() {
                if self.wins(x, y, pair.alice_map[x], pair.bob_map[y]) {
                    total += weights.get(x, y);
                }
            }
        }
        Ok(Rational::new(total, weights.denominator))
    }

    /// The same game with inputs and outputs renamed by the given permutations.
    ///
    /// `alice_input_perm[x]` is the new index of old input `x`, and so on.
    pub fn relabeled(
        &self,
        alice_input_perm: &[usize],
        bob_input_perm: &[usize],
        alice_output_perm: &[usize],
        bob_output_perm: &[usize],
    ) -> Result<Self> {
        let inverse = |perm: &[usize], n: usize| -> Result<Vec<usize>> {
            if perm.len() != n {
                return Err(domain("permutation has wrong length"));
            }
            let mut inv = vec![usize::MAX; n];
            for (old, &new) in perm.iter().enumerate() {
                if new >= n || inv[new] != usize::MAX {
                    return Err(domain("not a permutation"));
                }
                inv[new] = old;
            }
            Ok(inv)
        };
        let ix = inverse(alice_input_perm, self.num_alice_inputs())?;
        let iy = inverse(bob_input_perm, self.num_bob_inputs())?;
        let ia = inverse(alice_output_perm, self.num_alice_outputs())?;
        let ib = inverse(bob_output_perm, self.num_bob_outputs())?;
        let pick = |labels: &[String], inv: &[usize]| inv.iter().map(|&o| labels[o].clone()).collect();
        let mut table = Vec::with_capacity(self.predicate.len());
        for &x in &ix {
            for &y in &iy {
                for &a in &ia {
                    for &b in &ib {
                        table.push(self.wins(x, y, a, b));
                    }
                }
            }
        }
        Self::new(
            pick(&self.alice_inputs, &ix),
            pick(&self.bob_inputs, &iy),
            pick(&self.alice_outputs, &ia),
            pick(&self.bob_outputs, &ib),
            ix.iter().map(|&o| self.alice_input_dist[o]).collect(),
            iy.iter().map(|&o| self.bob_input_dist[o]).collect(),
            table,
        )
    }
}

fn saturating_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// The common-bit maps `f(x, y, a)` and `g(x, y, b)`: on every winning tuple the two bits agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonBitMaps {
    num_bob_inputs: usize,
    num_alice_outputs: usize,
    num_bob_outputs: usize,
    f: Vec<Bit>,
    g: Vec<Bit>,
}

impl CommonBitMaps {
    /// Tabulates `f` and `g` over the game's domain and checks the matching property.
    pub fn new(
        game: &TwoPlayerFreeGame,
        f: impl Fn(usize, usize, usize) -> Bit,
        g: impl Fn(usize, usize, usize) -> Bit,
    ) -> Result<Self> {
        let (nx, ny, na, nb) = (
            game.num_alice_inputs(),
            game.num_bob_inputs(),
            game.num_alice_outputs(),
            game.num_bob_outputs(),
        );
        let mut ft = Vec::with_capacity(nx * ny * na);
        let mut gt = Vec::with_capacity(nx * ny * nb);
        for x in 0..nx {
            for y in 0..ny {
                ft.extend((0..na).map(|a| f(x, y, a)));
                gt.extend((0..nb).map(|b| g(x, y, b)));
            }
        }
        Self::from_tables(game, ft, gt)
    }

    /// Flat tables in `(x, y, a)` and `(x, y, b)` row-major order.
    pub fn from_tables(game: &TwoPlayerFreeGame, f: Vec<Bit>, g: Vec<Bit>) -> Result<Self> {
        let (nx, ny, na, nb) = (
            game.num_alice_inputs(),
            game.num_bob_inputs(),
            game.num_alice_outputs(),
            game.num_bob_outputs(),
        );
        if f.len() != nx * ny * na || g.len() != nx * ny * nb {
            return Err(domain("common-bit tables have the wrong shape"));
        }
        if f.iter().chain(g.iter()).any(|&bit| bit > 1) {
            return Err(domain("common-bit tables must contain only 0 and 1"));
        }
        let maps = Self {
            num_bob_inputs: ny,
            num_alice_outputs: na,
            num_bob_outputs: nb,
            f,
            g,
        };
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    for b in 0..nb {
                        if game.wins(x, y, a, b) && maps.f(x, y, a) != maps.g(x, y, b) {
                            return Err(domain(format!(
                                "common bits disagree on winning tuple (x={x}, y={y}, a={a}, b={b})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(maps)
    }

    #[inline]
    pub fn f(&self, x: usize, y: usize, a: usize) -> Bit {
        self.f[(x * self.num_bob_inputs + y) * self.num_alice_outputs + a]
    }

    #[inline]
    pub fn g(&self, x: usize, y: usize, b: usize) -> Bit {
        self.g[(x * self.num_bob_inputs + y) * self.num_bob_outputs + b]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategyPair {
    pub alice_map: Vec<usize>,
    pub bob_map: Vec<usize>,
}

impl DeterministicStrategyPair {
    pub fn validate(&self, game: &TwoPlayerFreeGame) -> Result<()> {
        if self.alice_map.len() != game.num_alice_inputs()
            || self.bob_map.len() != game.num_bob_inputs()
        {
            return Err(Error::MalformedStrategy("strategy maps are not total".into()));
        }
        if self.alice_map.iter().any(|&a| a >= game.num_alice_outputs())
            || self.bob_map.iter().any(|&b| b >= game.num_bob_outputs())
        {
            return Err(Error::MalformedStrategy("strategy output out of range".into()));
        }
        Ok(())
    }
}

/// Decodes index `i` of the mixed-radix space `outputs^inputs` into a map.
fn decode_map(mut i: u128, inputs: usize, outputs: usize) -> Vec<usize> {
    (0..inputs)
        .map(|_| {
            let digit = (i % outputs as u128) as usize;
            i /= outputs as u128;
            digit
        })
        .collect()
}

/// Index space of all deterministic strategy pairs of a game.
///
/// Pair `i` uses Alice map `i / bob_count` and Bob map `i % bob_count`, so a
/// contiguous index range can be handed to each worker.
#[derive(Clone, Debug)]
pub struct StrategySpace {
    alice_inputs: usize,
    alice_outputs: usize,
    bob_inputs: usize,
    bob_outputs: usize,
    alice_count: u128,
    bob_count: u128,
}

impl StrategySpace {
    pub fn new(game: &TwoPlayerFreeGame) -> Result<Self> {
        let count = game.strategy_count();
        if count > ENUMERATION_LIMIT {
            return Err(Error::Capacity {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(Self {
            alice_inputs: game.num_alice_inputs(),
            alice_outputs: game.num_alice_outputs(),
            bob_inputs: game.num_bob_inputs(),
            bob_outputs: game.num_bob_outputs(),
            alice_count: saturating_pow(game.num_alice_outputs(), game.num_alice_inputs()),
            bob_count: saturating_pow(game.num_bob_outputs(), game.num_bob_inputs()),
        })
    }

    pub fn len(&self) -> u128 {
        self.alice_count * self.bob_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn alice_count(&self) -> u128 {
        self.alice_count
    }

    pub fn alice_map(&self, i: u128) -> Vec<usize> {
        decode_map(i, self.alice_inputs, self.alice_outputs)
    }

    pub fn bob_map(&self, i: u128) -> Vec<usize> {
        decode_map(i, self.bob_inputs, self.bob_outputs)
    }

    pub fn pair_at(&self, i: u128) -> DeterministicStrategyPair {
        DeterministicStrategyPair {
            alice_map: self.alice_map(i / self.bob_count),
            bob_map: self.bob_map(i % self.bob_count),
        }
    }

    pub fn iter_range(
        &self,
        range: std::ops::Range<u128>,
    ) -> impl Iterator<Item = DeterministicStrategyPair> + '_ {
        let end = range.end.min(self.len());
        (range.start..end).map(move |i| self.pair_at(i))
    }
}

/// Every deterministic strategy pair, each exactly once.
pub fn enumerate_strategies(
    game: &TwoPlayerFreeGame,
) -> Result<impl Iterator<Item = DeterministicStrategyPair>> {
    let space = StrategySpace::new(game)?;
    let len = space.len();
    Ok((0..len).map(move |i| space.pair_at(i)))
}

/// Exact classical value together with a strategy pair attaining it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalOptimum {
    pub value: Rational,
    pub strategy: DeterministicStrategyPair,
}

/// Exact classical value of a free game.
///
/// Enumerates Alice's deterministic maps; for each one Bob's best response is
/// chosen independently per input, which attains the maximum over all pairs.
pub fn classical_value(game: &TwoPlayerFreeGame) -> Result<Rational> {
    Ok(classical_optimum(game)?.value)
}

pub fn classical_optimum(game: &TwoPlayerFreeGame) -> Result<ClassicalOptimum> {
    let space = StrategySpace::new(game)?;
    let weights = game.input_weights()?;
    let mut best: Option<(i64, Vec<usize>, Vec<usize>)> = None;
    for ai in 0..space.alice_count() {
        let alice_map = space.alice_map(ai);
        let mut total = 0i64;
        let mut bob_map = Vec::with_capacity(game.num_bob_inputs());
        for y in 0..game.num_bob_inputs() {
            let (best_b, best_w) = (0..game.num_bob_outputs())
                .map(|b| {
                    let w: i64 = (0..game.num_alice_inputs())
                        .filter(|&x| game.wins(x, y, alice_map[x], b))
                        .map(|x| weights.get(x, y))
                        .sum();
                    (b, w)
                })
                .fold((0, i64::MIN), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            bob_map.push(best_b);
            total += best_w;
        }
        if best.as_ref().is_none_or(|(w, _, _)| total > *w) {
            best = Some((total, alice_map, bob_map));
        }
    }
    let (total, alice_map, bob_map) = best.expect("strategy space is never empty");
    Ok(ClassicalOptimum {
        value: Rational::new(total, weights.denominator),
        strategy: DeterministicStrategyPair { alice_map, bob_map },
    })
}

/// Draws input pairs from a game's product distribution.
#[derive(Clone, Debug)]
pub struct InputSampler {
    alice: WeightedIndex<f64>,
    bob: WeightedIndex<f64>,
}

impl InputSampler {
    pub fn new(game: &TwoPlayerFreeGame) -> Self {
        let weights = |d: &[Rational]| {
            WeightedIndex::new(d.iter().map(rational::to_f64))
                .expect("validated distributions have positive mass")
        };
        Self {
            alice: weights(game.alice_input_dist()),
            bob: weights(game.bob_input_dist()),
        }
    }

    /// Alice's input first, then Bob's.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let x = self.alice.sample(rng);
        (x, self.bob.sample(rng))
    }
}

// ---------------------------------------------------------------------------
// Magic Square

/// Alice's four even-parity row assignments in lexicographic order of the first two bits.
pub const MS_ALICE_OUTPUTS: [[Bit; 3]; 4] = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]];
/// Bob's four odd-parity column assignments in lexicographic order of the first two bits.
pub const MS_BOB_OUTPUTS: [[Bit; 3]; 4] = [[0, 0, 1], [0, 1, 0], [1, 0, 0], [1, 1, 1]];

pub fn ms_alice_output_index(bits: [Bit; 3]) -> Option<usize> {
    MS_ALICE_OUTPUTS.iter().position(|&o| o == bits)
}

pub fn ms_bob_output_index(bits: [Bit; 3]) -> Option<usize> {
    MS_BOB_OUTPUTS.iter().position(|&o| o == bits)
}

/// The Magic Square game and its common-bit maps.
///
/// Alice gets a row `x` and answers an even-parity assignment of that row;
/// Bob gets a column `y` and answers an odd-parity assignment of that column.
/// They win iff they agree on cell `(x, y)`. The common bit is that cell.
pub fn magic_square() -> (TwoPlayerFreeGame, CommonBitMaps) {
    let bits = |t: &[Bit; 3]| format!("{}{}{}", t[0], t[1], t[2]);
    let third = vec![Rational::new(1, 3); 3];
    let mut table = Vec::with_capacity(144);
    for x in 0..3 {
        for y in 0..3 {
            for a in &MS_ALICE_OUTPUTS {
                for b in &MS_BOB_OUTPUTS {
                    table.push(a[y] == b[x]);
                }
            }
        }
    }
    let game = TwoPlayerFreeGame::new(
        (0..3).map(|r| format!("row{r}")).collect(),
        (0..3).map(|c| format!("col{c}")).collect(),
        MS_ALICE_OUTPUTS.iter().map(bits).collect(),
        MS_BOB_OUTPUTS.iter().map(bits).collect(),
        third.clone(),
        third,
        table,
    )
    .expect("magic square is well formed");
    let maps = CommonBitMaps::new(
        &game,
        |_, y, a| MS_ALICE_OUTPUTS[a][y],
        |x, _, b| MS_BOB_OUTPUTS[b][x],
    )
    .expect("magic square common bits agree on winning tuples");
    (game, maps)
}

// ---------------------------------------------------------------------------
// JSON game documents

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommonBitDocument {
    /// `f[x][y][a]`
    pub f: Vec<Vec<Vec<Bit>>>,
    /// `g[x][y][b]`
    pub g: Vec<Vec<Vec<Bit>>>,
}

/// Serializable form of a game: label arrays, marginals as `[num, den]`
/// pairs, and the predicate as a nested truth table `predicate[x][y][a][b]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub alice_inputs: Vec<String>,
    pub bob_inputs: Vec<String>,
    pub alice_outputs: Vec<String>,
    pub bob_outputs: Vec<String>,
    #[serde(with = "rational::pair_vec")]
    pub alice_input_dist: Vec<Rational>,
    #[serde(with = "rational::pair_vec")]
    pub bob_input_dist: Vec<Rational>,
    pub predicate: Vec<Vec<Vec<Vec<bool>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common_bits: Option<CommonBitDocument>,
}

impl GameDocument {
    pub fn from_game(
        name: Option<String>,
        game: &TwoPlayerFreeGame,
        common_bits: Option<&CommonBitMaps>,
    ) -> Self {
        let (nx, ny, na, nb) = (
            game.num_alice_inputs(),
            game.num_bob_inputs(),
            game.num_alice_outputs(),
            game.num_bob_outputs(),
        );
        let predicate = (0..nx)
            .map(|x| {
                (0..ny)
                    .map(|y| (0..na).map(|a| (0..nb).map(|b| game.wins(x, y, a, b)).collect()).collect())
                    .collect()
            })
            .collect();
        let common_bits = common_bits.map(|m| CommonBitDocument {
            f: (0..nx)
                .map(|x| (0..ny).map(|y| (0..na).map(|a| m.f(x, y, a)).collect()).collect())
                .collect(),
            g: (0..nx)
                .map(|x| (0..ny).map(|y| (0..nb).map(|b| m.g(x, y, b)).collect()).collect())
                .collect(),
        });
        Self {
            name,
            alice_inputs: game.alice_inputs.clone(),
            bob_inputs: game.bob_inputs.clone(),
            alice_outputs: game.alice_outputs.clone(),
            bob_outputs: game.bob_outputs.clone(),
            alice_input_dist: game.alice_input_dist.clone(),
            bob_input_dist: game.bob_input_dist.clone(),
            predicate,
            common_bits,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::GameFormat(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game documents always serialize")
    }

    /// Validates the document and builds the game (and its common-bit maps, when present).
    pub fn into_game(self) -> Result<(TwoPlayerFreeGame, Option<CommonBitMaps>)> {
        let (nx, ny, na, nb) = (
            self.alice_inputs.len(),
            self.bob_inputs.len(),
            self.alice_outputs.len(),
            self.bob_outputs.len(),
        );
        let shape_err = || Error::GameFormat("predicate table does not match the label sets".into());
        if self.predicate.len() != nx {
            return Err(shape_err());
        }
        let mut flat = Vec::with_capacity(nx * ny * na * nb);
        for row in &self.predicate {
            if row.len() != ny {
                return Err(shape_err());
            }
            for cell in row {
                if cell.len() != na {
                    return Err(shape_err());
                }
                for outs in cell {
                    if outs.len() != nb {
                        return Err(shape_err());
                    }
                    flat.extend_from_slice(outs);
                }
            }
        }
        let game = TwoPlayerFreeGame::new(
            self.alice_inputs,
            self.bob_inputs,
            self.alice_outputs,
            self.bob_outputs,
            self.alice_input_dist,
            self.bob_input_dist,
            flat,
        )
        .map_err(|e| Error::GameFormat(e.to_string()))?;
        let maps = match self.common_bits {
            None => None,
            Some(doc) => {
                let flatten = |t: Vec<Vec<Vec<Bit>>>, inner: usize| -> Result<Vec<Bit>> {
                    if t.len() != nx
                        || t.iter().any(|r| r.len() != ny || r.iter().any(|c| c.len() != inner))
                    {
                        return Err(Error::GameFormat("common-bit table has the wrong shape".into()));
                    }
                    Ok(t.into_iter().flatten().flatten().collect())
                };
                let f = flatten(doc.f, na)?;
                let g = flatten(doc.g, nb)?;
                Some(
                    CommonBitMaps::from_tables(&game, f, g)
                        .map_err(|e| Error::GameFormat(e.to_string()))?,
                )
            }
        };
        Ok((game, maps))
    }
}

/// The all-winning or all-losing game on the given sizes; handy in tests and docs.
pub fn constant_game(
    num_alice_inputs: usize,
    num_bob_inputs: usize,
    num_alice_outputs: usize,
    num_bob_outputs: usize,
    value: bool,
) -> Result<TwoPlayerFreeGame> {
    TwoPlayerFreeGame::uniform_from_fn(
        num_alice_inputs,
        num_bob_inputs,
        num_alice_outputs,
        num_bob_outputs,
        |_, _, _, _| value,
    )
}
