//! Exact simulation of entangled strategies on small dense Hilbert spaces.
//!
//! The ideal Magic Square strategy shares two EPR pairs (a 16-dimensional
//! joint state) and measures the commuting Pauli observables of the
//! Mermin-Peres grid. Noise is modelled by depolarizing the shared state.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::games::{magic_square, Bit, TwoPlayerFreeGame, MS_ALICE_OUTPUTS, MS_BOB_OUTPUTS};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for Hermiticity and projector algebra.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Tolerance for probabilities and traces.
pub const PROBABILITY_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    matrix: CMatrix,
}

impl DensityState {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::MalformedStrategy("density matrix must be square".into()));
        }
        if max_abs(&(&matrix - matrix.adjoint())) > STRUCTURE_TOL {
            return Err(Error::MalformedStrategy("density matrix is not Hermitian".into()));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > STRUCTURE_TOL || trace.im.abs() > STRUCTURE_TOL {
            return Err(Error::MalformedStrategy(format!("density matrix has trace {trace}")));
        }
        let min_eig = SymmetricEigen::new(matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PROBABILITY_TOL {
            return Err(Error::MalformedStrategy(format!(
                "density matrix has negative eigenvalue {min_eig}"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ`.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `Tr[M ρ]` without forming the product.
    pub fn expectation(&self, operator: &CMatrix) -> Complex64 {
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += operator[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc
    }
}

/// `(1 − q)·ρ + q·I/dim`.
pub fn depolarize(state: &DensityState, q: f64) -> Result<DensityState> {
    if !(0.0..=1.0).contains(&q) {
        return Err(domain(format!("depolarizing probability {q} outside [0, 1]")));
    }
    let dim = state.dim();
    let matrix = state.matrix() * c(1.0 - q) + CMatrix::identity(dim, dim) * c(q / dim as f64);
    Ok(DensityState { matrix })
}

/// A projective measurement whose outcomes are labelled by game output indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveMeasurement {
    outcomes: Vec<(usize, CMatrix)>,
}

impl ProjectiveMeasurement {
    pub fn new(outcomes: Vec<(usize, CMatrix)>) -> Result<Self> {
        let bad = |msg: String| Err(Error::MalformedStrategy(msg));
        let Some((_, first)) = outcomes.first() else {
            return bad("measurement has no outcomes".into());
        };
        let dim = first.nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for (i, (label, p)) in outcomes.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return bad(format!("projector {label} has the wrong shape"));
            }
            if max_abs(&(p - p.adjoint())) > STRUCTURE_TOL {
                return bad(format!("projector {label} is not Hermitian"));
            }
            if max_abs(&(p * p - p)) > STRUCTURE_TOL {
                return bad(format!("projector {label} is not idempotent"));
            }
            for (other, q) in &outcomes[i + 1..] {
                if *other == *label {
                    return bad(format!("duplicate outcome label {label}"));
                }
                if max_abs(&(p * q)) > STRUCTURE_TOL {
                    return bad(format!("projectors {label} and {other} are not orthogonal"));
                }
            }
            sum += p;
        }
        if max_abs(&(sum - CMatrix::identity(dim, dim))) > STRUCTURE_TOL {
            return bad("projectors do not sum to the identity".into());
        }
        Ok(Self { outcomes })
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].1.nrows()
    }

    pub fn outcomes(&self) -> &[(usize, CMatrix)] {
        &self.outcomes
    }
}

/// Depolarizing noise on the shared state, or none.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    None,
    Depolarizing(f64),
}

impl NoiseModel {
    pub fn depolarizing(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(domain(format!("depolarizing probability {q} outside [0, 1]")));
        }
        Ok(Self::Depolarizing(q))
    }

    pub fn strength(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Depolarizing(q) => *q,
        }
    }

    fn apply(&self, state: &DensityState) -> Result<DensityState> {
        match self {
            Self::None => Ok(state.clone()),
            Self::Depolarizing(q) => depolarize(state, *q),
        }
    }
}

/// A shared state plus local projective measurements for each input.
///
/// Alice's projectors act on the first tensor factor and Bob's on the second.
#[derive(Clone, Debug)]
pub struct QuantumStrategy {
    shared_state: DensityState,
    alice_dim: usize,
    bob_dim: usize,
    alice_measurements: Vec<ProjectiveMeasurement>,
    bob_measurements: Vec<ProjectiveMeasurement>,
}

/// `p(a, b | x, y)` for every input and output pair.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    num_bob_inputs: usize,
    num_alice_outputs: usize,
    num_bob_outputs: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probs[self.offset(x, y) + a * self.num_bob_outputs + b]
    }

    fn offset(&self, x: usize, y: usize) -> usize {
        (x * self.num_bob_inputs + y) * self.num_alice_outputs * self.num_bob_outputs
    }

    /// The `|A|·|B|` outcome probabilities for one input pair, `a`-major.
    pub fn conditional(&self, x: usize, y: usize) -> &[f64] {
        let start = self.offset(x, y);
        &self.probs[start..start + self.num_alice_outputs * self.num_bob_outputs]
    }

    pub fn alice_marginal(&self, x: usize, y: usize) -> Vec<f64> {
        self.conditional(x, y)
            .chunks(self.num_bob_outputs)
            .map(|row| row.iter().sum())
            .collect()
    }
}

impl QuantumStrategy {
    pub fn new(
        shared_state: DensityState,
        alice_dim: usize,
        bob_dim: usize,
        alice_measurements: Vec<ProjectiveMeasurement>,
        bob_measurements: Vec<ProjectiveMeasurement>,
    ) -> Result<Self> {
        if alice_dim * bob_dim != shared_state.dim() {
            return Err(Error::MalformedStrategy(format!(
                "register split {alice_dim}x{bob_dim} does not match state dimension {}",
                shared_state.dim()
            )));
        }
        if alice_measurements.iter().any(|m| m.dim() != alice_dim)
            || bob_measurements.iter().any(|m| m.dim() != bob_dim)
        {
            return Err(Error::MalformedStrategy(
                "measurement acts on the wrong register".into(),
            ));
        }
        Ok(Self {
            shared_state,
            alice_dim,
            bob_dim,
            alice_measurements,
            bob_measurements,
        })
    }

    pub fn shared_state(&self) -> &DensityState {
        &self.shared_state
    }

    pub fn alice_measurements(&self) -> &[ProjectiveMeasurement] {
        &self.alice_measurements
    }

    pub fn bob_measurements(&self) -> &[ProjectiveMeasurement] {
        &self.bob_measurements
    }

    fn check_against(&self, game: &TwoPlayerFreeGame) -> Result<()> {
        if self.alice_measurements.len() != game.num_alice_inputs()
            || self.bob_measurements.len() != game.num_bob_inputs()
        {
            return Err(Error::MalformedStrategy(
                "strategy must provide one measurement per input".into(),
            ));
        }
        let labels_ok = |ms: &[ProjectiveMeasurement], n: usize| {
            ms.iter().all(|m| m.outcomes().iter().all(|(l, _)| *l < n))
        };
        if !labels_ok(&self.alice_measurements, game.num_alice_outputs())
            || !labels_ok(&self.bob_measurements, game.num_bob_outputs())
        {
            return Err(Error::MalformedStrategy("outcome label is not a game output".into()));
        }
        Ok(())
    }

    /// Born-rule probabilities `Tr[(A^x_a ⊗ B^y_b) ρ]` of the (noisy) shared state.
    pub fn joint_distribution(
        &self,
        game: &TwoPlayerFreeGame,
        noise: NoiseModel,
    ) -> Result<JointDistribution> {
        self.check_against(game)?;
        let state = noise.apply(&self.shared_state)?;
        let (na, nb) = (game.num_alice_outputs(), game.num_bob_outputs());
        let mut probs = vec![0.0; game.num_alice_inputs() * game.num_bob_inputs() * na * nb];
        let id_b = CMatrix::identity(self.bob_dim, self.bob_dim);
        let id_a = CMatrix::identity(self.alice_dim, self.alice_dim);
        let lifted_bob: Vec<Vec<(usize, CMatrix)>> = self
            .bob_measurements
            .iter()
            .map(|m| {
                m.outcomes()
                    .iter()
                    .map(|(l, p)| (*l, id_a.kronecker(p)))
                    .collect()
            })
            .collect();
        for (x, am) in self.alice_measurements.iter().enumerate() {
            for (y, bm) in lifted_bob.iter().enumerate() {
                let base = (x * game.num_bob_inputs() + y) * na * nb;
                for (a, pa) in am.outcomes() {
                    let lifted_a = pa.kronecker(&id_b);
                    for (b, pb) in bm {
                        let p = state.expectation(&(&lifted_a * pb)).re;
                        probs[base + a * nb + b] = p.max(0.0);
                    }
                }
            }
        }
        Ok(JointDistribution {
            num_bob_inputs: game.num_bob_inputs(),
            num_alice_outputs: na,
            num_bob_outputs: nb,
            probs,
        })
    }

    /// Exact winning probability `Σ π(x)π(y) Σ_{winning a,b} p(a, b | x, y)`.
    pub fn win_probability(&self, game: &TwoPlayerFreeGame, noise: NoiseModel) -> Result<f64> {
        let dist = self.joint_distribution(game, noise)?;
        Ok(win_probability_of(game, &dist))
    }

    pub fn sampler(&self, game: &TwoPlayerFreeGame, noise: NoiseModel) -> Result<BornSampler> {
        BornSampler::new(game, &self.joint_distribution(game, noise)?)
    }
}

pub(crate) fn win_probability_of(game: &TwoPlayerFreeGame, dist: &JointDistribution) -> f64 {
    let mut total = 0.0;
    for x in 0..game.num_alice_inputs() {
        for y in 0..game.num_bob_inputs() {
            let weight = crate::rational::to_f64(&game.input_probability(x, y));
            let mut win = 0.0;
            for a in 0..game.num_alice_outputs() {
                for b in 0..game.num_bob_outputs() {
                    if game.wins(x, y, a, b) {
                        win += dist.prob(x, y, a, b);
                    }
                }
            }
            total += weight * win;
        }
    }
    total
}

/// Pre-tabulated Born distributions for fast round sampling.
#[derive(Clone, Debug)]
pub struct BornSampler {
    num_bob_inputs: usize,
    num_bob_outputs: usize,
    per_input: Vec<WeightedIndex<f64>>,
}

impl BornSampler {
    pub fn new(game: &TwoPlayerFreeGame, dist: &JointDistribution) -> Result<Self> {
        let mut per_input = Vec::with_capacity(game.num_alice_inputs() * game.num_bob_inputs());
        for x in 0..game.num_alice_inputs() {
            for y in 0..game.num_bob_inputs() {
                per_input.push(
                    WeightedIndex::new(dist.conditional(x, y).iter().copied())
                        .map_err(|e| Error::MalformedStrategy(e.to_string()))?,
                );
            }
        }
        Ok(Self {
            num_bob_inputs: game.num_bob_inputs(),
            num_bob_outputs: game.num_bob_outputs(),
            per_input,
        })
    }

    /// Draws `(a, b)` for one round. Consumes exactly one draw from `rng`.
    pub fn sample_round<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R) -> (usize, usize) {
        let k = self.per_input[x * self.num_bob_inputs + y].sample(rng);
        (k / self.num_bob_outputs, k % self.num_bob_outputs)
    }
}

/// Samples one round of `strategy` under `noise`.
///
/// Rebuilds the Born table on each call; use [`QuantumStrategy::sampler`] in loops.
pub fn sample_round<R: Rng + ?Sized>(
    strategy: &QuantumStrategy,
    game: &TwoPlayerFreeGame,
    noise: NoiseModel,
    x: usize,
    y: usize,
    rng: &mut R,
) -> Result<(usize, usize)> {
    game.check_inputs(x, y)?;
    Ok(strategy.sampler(game, noise)?.sample_round(x, y, rng))
}

// ---------------------------------------------------------------------------
// Mermin-Peres strategy

fn pauli(name: char) -> CMatrix {
    let z0 = Complex64::new(0.0, 0.0);
    let one = c(1.0);
    let i = Complex64::new(0.0, 1.0);
    match name {
        'I' => CMatrix::from_row_slice(2, 2, &[one, z0, z0, one]),
        'X' => CMatrix::from_row_slice(2, 2, &[z0, one, one, z0]),
        'Y' => CMatrix::from_row_slice(2, 2, &[z0, -i, i, z0]),
        'Z' => CMatrix::from_row_slice(2, 2, &[one, z0, z0, -one]),
        _ => unreachable!("unknown Pauli {name}"),
    }
}

fn two_qubit(sign: f64, first: char, second: char) -> CMatrix {
    pauli(first).kronecker(&pauli(second)) * c(sign)
}

/// The 3×3 grid of two-qubit observables. Each row multiplies to `+I`, each column to `−I`.
pub fn mermin_peres_grid() -> [[CMatrix; 3]; 3] {
    [
        [
            two_qubit(1.0, 'X', 'I'),
            two_qubit(1.0, 'I', 'X'),
            two_qubit(1.0, 'X', 'X'),
        ],
        [
            two_qubit(1.0, 'I', 'Z'),
            two_qubit(1.0, 'Z', 'I'),
            two_qubit(1.0, 'Z', 'Z'),
        ],
        [
            two_qubit(-1.0, 'X', 'Z'),
            two_qubit(-1.0, 'Z', 'X'),
            two_qubit(1.0, 'Y', 'Y'),
        ],
    ]
}

/// Joint eigenprojector of three commuting ±1 observables for the given outcome bits.
fn joint_projector(observables: [&CMatrix; 3], bits: [Bit; 3]) -> CMatrix {
    let dim = observables[0].nrows();
    let id = CMatrix::identity(dim, dim);
    observables
        .iter()
        .zip(bits)
        .fold(id.clone(), |acc, (o, bit)| {
            let sign = if bit == 0 { 1.0 } else { -1.0 };
            acc * ((&id + *o * c(sign)) * c(0.5))
        })
}

/// Two EPR pairs shared as `(1/2) Σ_k |k⟩_A |k⟩_B` on two 4-dimensional registers.
pub fn two_epr_pairs() -> DensityState {
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    for k in 0..4 {
        amps[k * 4 + k] = c(0.5);
    }
    DensityState::pure(&amps).expect("two EPR pairs form a valid state")
}

/// The perfect Magic Square strategy.
///
/// Alice measures row `x` of the grid, Bob measures the transposes of column `y`.
/// On the maximally entangled state `M ⊗ I` and `I ⊗ Mᵀ` act identically, so the
/// shared cell always agrees.
pub fn ideal_ms_strategy() -> QuantumStrategy {
    let grid = mermin_peres_grid();
    let alice = (0..3)
        .map(|x| {
            let obs = [&grid[x][0], &grid[x][1], &grid[x][2]];
            let outcomes = MS_ALICE_OUTPUTS
                .iter()
                .enumerate()
                .map(|(a, bits)| (a, joint_projector(obs, *bits)))
                .collect();
            ProjectiveMeasurement::new(outcomes).expect("row observables commute")
        })
        .collect();
    let bob = (0..3)
        .map(|y| {
            let obs = [&grid[0][y], &grid[1][y], &grid[2][y]];
            let outcomes = MS_BOB_OUTPUTS
                .iter()
                .enumerate()
                .map(|(b, bits)| (b, joint_projector(obs, *bits).transpose()))
                .collect();
            ProjectiveMeasurement::new(outcomes).expect("column observables commute")
        })
        .collect();
    QuantumStrategy::new(two_epr_pairs(), 4, 4, alice, bob).expect("ideal strategy is well formed")
}

/// Depolarizing strength `q` at which `strategy` wins with probability `target_win`.
///
/// The win probability is affine in `q`, so the solution is a single interpolation
/// between the noiseless and fully mixed values.
pub fn calibrate_depolarizing(
    strategy: &QuantumStrategy,
    game: &TwoPlayerFreeGame,
    target_win: f64,
) -> Result<f64> {
    let clean = strategy.win_probability(game, NoiseModel::None)?;
    let mixed = strategy.win_probability(game, NoiseModel::Depolarizing(1.0))?;
    let (lo, hi) = (clean.min(mixed), clean.max(mixed));
    if !(lo - PROBABILITY_TOL..=hi + PROBABILITY_TOL).contains(&target_win) {
        return Err(domain(format!(
            "target win probability {target_win} outside the achievable range [{lo}, {hi}]"
        )));
    }
    if (clean - mixed).abs() < PROBABILITY_TOL || (clean - target_win).abs() < PROBABILITY_TOL {
        return Ok(0.0);
    }
    Ok(((clean - target_win) / (clean - mixed)).clamp(0.0, 1.0))
}

/// Depolarizing strength that makes the ideal Magic Square strategy win with probability `target_win`.
pub fn calibrate_noise(target_win: f64) -> Result<f64> {
    let (game, _) = magic_square();
    calibrate_depolarizing(&ideal_ms_strategy(), &game, target_win)
}
