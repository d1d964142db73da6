//! η-guessing games: a base game plus an eavesdropper who must predict Alice.
//!
//! With probability `1 − η` Eve is told both inputs `(x, y)` and must guess
//! either Alice's whole answer or just the common bit `f(x, y, a)`; with
//! probability `η` she is told nothing and her answer is ignored. The
//! anchor event is what makes the threshold repetition bound applicable.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::games::{CommonBitMaps, DeterministicStrategyPair, StrategySpace, TwoPlayerFreeGame};
use crate::quantum::{NoiseModel, QuantumStrategy};
use crate::rational::{self, Rational};

/// Working value of `C*_MS` used by the bound calculators when none is given.
pub const DEFAULT_C_STAR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveCondition {
    /// Eve must output Alice's full answer `a`.
    GuessFullOutput,
    /// Eve must output the common bit `f(x, y, a)`.
    GuessCommonBit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EveInput {
    Pair { x: usize, y: usize },
    Anchor,
}

#[derive(Clone, Debug)]
pub struct GuessingGame {
    base: TwoPlayerFreeGame,
    common_bits: CommonBitMaps,
    eta: Rational,
    eve_condition: EveCondition,
    pair_prob: Vec<Rational>,
    anchor_prob: Vec<Rational>,
}

fn check_eta(eta: Rational) -> Result<()> {
    if eta <= Rational::zero() || eta > Rational::one() {
        return Err(domain(format!(
            "eta = {} must satisfy 0 < eta <= 1",
            rational::format_rational(&eta)
        )));
    }
    Ok(())
}

/// The η-guessing game of `base`, with Eve informed independently of `(x, y)`.
pub fn build_guessing_game(
    base: TwoPlayerFreeGame,
    common_bits: CommonBitMaps,
    eta: Rational,
    eve_condition: EveCondition,
) -> Result<GuessingGame> {
    check_eta(eta)?;
    let mut pair_prob = Vec::new();
    let mut anchor_prob = Vec::new();
    for x in 0..base.num_alice_inputs() {
        for y in 0..base.num_bob_inputs() {
            let p = base.input_probability(x, y);
            pair_prob.push(p * (Rational::one() - eta));
            anchor_prob.push(p * eta);
        }
    }
    Ok(GuessingGame {
        base,
        common_bits,
        eta,
        eve_condition,
        pair_prob,
        anchor_prob,
    })
}

impl GuessingGame {
    /// A guessing game with an explicit joint law of `(x, y, Eve's tag)`.
    ///
    /// `pair_prob[x·|Y| + y]` and `anchor_prob[x·|Y| + y]` must form a
    /// probability distribution. No anchoring is assumed, so this is how
    /// non-anchored counterexamples are built.
    pub fn with_input_law(
        base: TwoPlayerFreeGame,
        common_bits: CommonBitMaps,
        eta: Rational,
        eve_condition: EveCondition,
        pair_prob: Vec<Rational>,
        anchor_prob: Vec<Rational>,
    ) -> Result<Self> {
        check_eta(eta)?;
        let cells = base.num_alice_inputs() * base.num_bob_inputs();
        if pair_prob.len() != cells || anchor_prob.len() != cells {
            return Err(domain("input law has the wrong number of cells"));
        }
        let all: Vec<Rational> = pair_prob.iter().chain(anchor_prob.iter()).copied().collect();
        if !rational::is_probability_vector(&all) {
            return Err(domain("input law is not a probability distribution"));
        }
        Ok(Self {
            base,
            common_bits,
            eta,
            eve_condition,
            pair_prob,
            anchor_prob,
        })
    }

    pub fn base(&self) -> &TwoPlayerFreeGame {
        &self.base
    }

    pub fn common_bits(&self) -> &CommonBitMaps {
        &self.common_bits
    }

    pub fn eta(&self) -> Rational {
        self.eta
    }

    pub fn eve_condition(&self) -> EveCondition {
        self.eve_condition
    }

    /// Size of Eve's answer alphabet: 2 for the common bit, `|A|` for the full output.
    pub fn eve_alphabet(&self) -> usize {
        match self.eve_condition {
            EveCondition::GuessCommonBit => 2,
            EveCondition::GuessFullOutput => self.base.num_alice_outputs(),
        }
    }

    fn cell(&self, x: usize, y: usize) -> usize {
        x * self.base.num_bob_inputs() + y
    }

    pub fn pair_probability(&self, x: usize, y: usize) -> Rational {
        self.pair_prob[self.cell(x, y)]
    }

    pub fn anchor_probability(&self, x: usize, y: usize) -> Rational {
        self.anchor_prob[self.cell(x, y)]
    }

    /// What Eve has to output to win a round where she was told `(x, y)`.
    pub fn eve_target(&self, x: usize, y: usize, a: usize) -> usize {
        match self.eve_condition {
            EveCondition::GuessCommonBit => self.common_bits.f(x, y, a) as usize,
            EveCondition::GuessFullOutput => a,
        }
    }

    pub fn guessing_predicate(
        &self,
        x: usize,
        y: usize,
        eve_in: EveInput,
        a: usize,
        b: usize,
        e: usize,
    ) -> Result<bool> {
        self.base.check_inputs(x, y)?;
        self.base.check_outputs(a, b)?;
        if e >= self.eve_alphabet() {
            return Err(domain(format!("eve output {e} out of range")));
        }
        if let EveInput::Pair { x: ex, y: ey } = eve_in {
            if (ex, ey) != (x, y) {
                return Err(domain("eve's pair input must equal the players' inputs"));
            }
        }
        if !self.base.wins(x, y, a, b) {
            return Ok(false);
        }
        Ok(match eve_in {
            EveInput::Anchor => true,
            EveInput::Pair { .. } => e == self.eve_target(x, y, a),
        })
    }

    fn weights(&self) -> Result<(i64, Vec<i64>, Vec<i64>)> {
        let den = rational::common_denominator(self.pair_prob.iter().chain(self.anchor_prob.iter()))?;
        let scale = |v: &[Rational]| -> Result<Vec<i64>> {
            v.iter().map(|r| rational::scaled_numerator(r, den)).collect()
        };
        Ok((den, scale(&self.pair_prob)?, scale(&self.anchor_prob)?))
    }
}

/// One of Eve's guessing rules: a fixed answer or a uniformly random one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EveGuess {
    Fixed(usize),
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalEveStrategy {
    /// Guess when told `(x, y)`, indexed by `x·|Y| + y`.
    pub on_pair: Vec<EveGuess>,
    pub on_anchor: EveGuess,
}

impl ClassicalEveStrategy {
    /// Eve ignores her input and guesses uniformly.
    pub fn uniform(game: &GuessingGame) -> Self {
        let cells = game.base.num_alice_inputs() * game.base.num_bob_inputs();
        Self {
            on_pair: vec![EveGuess::Uniform; cells],
            on_anchor: EveGuess::Uniform,
        }
    }

    /// Eve knows Alice's deterministic map and outputs exactly the target.
    pub fn predicting(game: &GuessingGame, alice_map: &[usize]) -> Self {
        let ny = game.base.num_bob_inputs();
        let on_pair = (0..game.base.num_alice_inputs() * ny)
            .map(|cell| {
                let (x, y) = (cell / ny, cell % ny);
                EveGuess::Fixed(game.eve_target(x, y, alice_map[x]))
            })
            .collect();
        Self {
            on_pair,
            on_anchor: EveGuess::Fixed(0),
        }
    }

    fn validate(&self, game: &GuessingGame) -> Result<()> {
        let cells = game.base.num_alice_inputs() * game.base.num_bob_inputs();
        let ok = |g: &EveGuess| match g {
            EveGuess::Fixed(e) => *e < game.eve_alphabet(),
            EveGuess::Uniform => true,
        };
        if self.on_pair.len() != cells || !self.on_pair.iter().all(ok) || !ok(&self.on_anchor) {
            return Err(Error::MalformedStrategy("eve strategy is not total on her inputs".into()));
        }
        Ok(())
    }

    /// Probability that this rule outputs `target` when told `(x, y)`.
    fn match_probability(&self, cell: usize, target: usize, alphabet: usize) -> Rational {
        match self.on_pair[cell] {
            EveGuess::Fixed(e) => {
                if e == target {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            EveGuess::Uniform => Rational::new(1, alphabet as i64),
        }
    }
}

/// A strategy value that is exact when the players are classical.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessingValue {
    Exact(#[serde(with = "rational::pair")] Rational),
    Approximate(f64),
}

impl GuessingValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Exact(r) => rational::to_f64(r),
            Self::Approximate(v) => *v,
        }
    }

    /// `1 − self`, keeping exactness.
    pub fn complement(&self) -> Self {
        match self {
            Self::Exact(r) => Self::Exact(Rational::one() - r),
            Self::Approximate(v) => Self::Approximate(1.0 - v),
        }
    }

    fn greater_than(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Exact(a), Self::Exact(b)) => a > b,
            _ => self.to_f64() > other.to_f64(),
        }
    }
}

impl std::fmt::Display for GuessingValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Exact(r) => write!(f, "{}", rational::format_rational(r)),
            Self::Approximate(v) => write!(f, "{v:.12}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuessingOptimum {
    pub value: Rational,
    pub players: DeterministicStrategyPair,
    pub eve: ClassicalEveStrategy,
}

/// Number of deterministic (Alice, Bob, Eve) triples, saturating.
pub fn triple_count(game: &GuessingGame) -> u128 {
    let cells = game.base.num_alice_inputs() * game.base.num_bob_inputs();
    let alphabet = game.eve_alphabet() as u128;
    let mut eve: u128 = alphabet;
    for _ in 0..cells {
        eve = eve.saturating_mul(alphabet);
    }
    game.base.strategy_count().saturating_mul(eve)
}

/// Exact classical value of the guessing game, with an optimal triple.
///
/// Eve's deterministic strategy is an independent choice per information
/// set (each pair `(x, y)` and the anchor) and the payoff is additive over
/// them, so for each Alice/Bob pair her best response is found per set.
pub fn classical_guessing_value(game: &GuessingGame) -> Result<GuessingOptimum> {
    let count = triple_count(game);
    if count > crate::games::ENUMERATION_LIMIT {
        return Err(Error::Capacity {
            count,
            limit: crate::games::ENUMERATION_LIMIT,
        });
    }
    let space = StrategySpace::new(&game.base)?;
    let (den, pair_w, anchor_w) = game.weights()?;
    let (nx, ny) = (game.base.num_alice_inputs(), game.base.num_bob_inputs());
    let mut best: Option<(i64, DeterministicStrategyPair)> = None;
    for pair in space.iter_range(0..space.len()) {
        let mut total = 0i64;
        for x in 0..nx {
            for y in 0..ny {
                if game.base.wins(x, y, pair.alice_map[x], pair.bob_map[y]) {
                    // Eve's best pair-round answer is the target itself.
                    total += anchor_w[x * ny + y] + pair_w[x * ny + y];
                }
            }
        }
        if best.as_ref().is_none_or(|(w, _)| total > *w) {
            best = Some((total, pair));
        }
    }
    let (total, players) = best.expect("strategy space is never empty");
    let eve = ClassicalEveStrategy::predicting(game, &players.alice_map);
    Ok(GuessingOptimum {
        value: Rational::new(total, den),
        players,
        eve,
    })
}

/// Alice and Bob's part of a guessing-game strategy.
#[derive(Clone, Copy, Debug)]
pub enum PlayerStrategy<'a> {
    Deterministic(&'a DeterministicStrategyPair),
    Quantum {
        strategy: &'a QuantumStrategy,
        noise: NoiseModel,
    },
}

/// Exact expected value of `guessing_predicate` for fixed player and Eve strategies.
pub fn strategy_guessing_value(
    game: &GuessingGame,
    players: PlayerStrategy<'_>,
    eve: &ClassicalEveStrategy,
) -> Result<GuessingValue> {
    eve.validate(game)?;
    let (nx, ny) = (game.base.num_alice_inputs(), game.base.num_bob_inputs());
    let alphabet = game.eve_alphabet();
    match players {
        PlayerStrategy::Deterministic(pair) => {
            pair.validate(&game.base)?;
            let mut total = Rational::zero();
            for x in 0..nx {
                for y in 0..ny {
                    let (a, b) = (pair.alice_map[x], pair.bob_map[y]);
                    if !game.base.wins(x, y, a, b) {
                        continue;
                    }
                    let cell = x * ny + y;
                    let matched = eve.match_probability(cell, game.eve_target(x, y, a), alphabet);
                    total += game.anchor_prob[cell] + game.pair_prob[cell] * matched;
                }
            }
            Ok(GuessingValue::Exact(total))
        }
        PlayerStrategy::Quantum { strategy, noise } => {
            let dist = strategy.joint_distribution(&game.base, noise)?;
            let mut total = 0.0;
            for x in 0..nx {
                for y in 0..ny {
                    let cell = x * ny + y;
                    let anchor = rational::to_f64(&game.anchor_prob[cell]);
                    let pair = rational::to_f64(&game.pair_prob[cell]);
                    for a in 0..game.base.num_alice_outputs() {
                        let matched = rational::to_f64(&eve.match_probability(
                            cell,
                            game.eve_target(x, y, a),
                            alphabet,
                        ));
                        for b in 0..game.base.num_bob_outputs() {
                            if game.base.wins(x, y, a, b) {
                                total += dist.prob(x, y, a, b) * (anchor + pair * matched);
                            }
                        }
                    }
                }
            }
            Ok(GuessingValue::Approximate(total))
        }
    }
}

/// True iff Eve's anchor event has probability exactly `η` independently of
/// `(x, y)` and the `(x, y)` marginal is the base game's product distribution.
pub fn anchoring_check(game: &GuessingGame) -> bool {
    let mut anchor_total = Rational::zero();
    for x in 0..game.base.num_alice_inputs() {
        for y in 0..game.base.num_bob_inputs() {
            let p = game.base.input_probability(x, y);
            let anchor = game.anchor_probability(x, y);
            if game.pair_probability(x, y) + anchor != p || anchor != p * game.eta {
                return false;
            }
            anchor_total += anchor;
        }
    }
    anchor_total == game.eta
}

/// What the evaluated strategies certify about `C*_MS = 1 − ω*(MS_{1/8})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImmunizationConstants {
    /// Working value handed to the bound calculators.
    pub c_star_ms: f64,
    /// Best strategy value seen, hence a lower bound on the entangled value.
    pub lower_bound_on_omega_star: GuessingValue,
    #[serde(with = "rational::pair")]
    pub upper_bound_on_omega_star: Rational,
    /// `1 − lower_bound_on_omega_star`.
    pub c_star_upper_bound: GuessingValue,
}

impl ImmunizationConstants {
    /// Replaces the working value; it must lie in `(0, c_star_upper_bound]`.
    pub fn with_working_value(mut self, c_star: f64) -> Result<Self> {
        let upper = self.c_star_upper_bound.to_f64();
        if !(c_star > 0.0 && c_star <= upper) {
            return Err(domain(format!(
                "working C* = {c_star} is outside the certified range (0, {upper}]"
            )));
        }
        self.c_star_ms = c_star;
        Ok(self)
    }
}

/// Certified constants from a set of evaluated strategy values.
pub fn c_star_bounds(values: &[GuessingValue]) -> Result<ImmunizationConstants> {
    let mut iter = values.iter();
    let first = *iter
        .next()
        .ok_or_else(|| Error::Precondition("at least one evaluated strategy is required".into()))?;
    let best = iter.fold(first, |acc, v| if v.greater_than(&acc) { *v } else { acc });
    let upper = best.complement();
    Ok(ImmunizationConstants {
        c_star_ms: DEFAULT_C_STAR.min(upper.to_f64()),
        lower_bound_on_omega_star: best,
        upper_bound_on_omega_star: Rational::one(),
        c_star_upper_bound: upper,
    })
}
