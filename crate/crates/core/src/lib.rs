//! Simulation and analysis of parallel device-independent QKD built on the
//! Magic Square game.
//!
//! - [`games`]: two-player free games, exact classical values, the Magic Square game.
//! - [`quantum`]: density matrices, projective measurements, the Mermin-Peres strategy.
//! - [`guessing`]: η-guessing games with a third player and their classical values.
//! - [`repetition`]: threshold games over `n` parallel rounds.
//! - [`protocol`]: the key-distribution protocol over pluggable devices and eavesdroppers.
//! - [`bounds`]: entropy, smoothing, concentration and acceptance calculators.
//!
//! Exact values use [`rational::Rational`]; all randomness flows through
//! [`rng::stream`], so every result is reproducible from a seed.
//!
//! ```
//! use pdiqkd::games::{classical_value, magic_square};
//! use pdiqkd::quantum::{ideal_ms_strategy, NoiseModel};
//! use pdiqkd::rational::Rational;
//!
//! let (game, _) = magic_square();
//! assert_eq!(classical_value(&game)?, Rational::new(8, 9));
//! let w = ideal_ms_strategy().win_probability(&game, NoiseModel::None)?;
//! assert!((w - 1.0).abs() < 1e-9);
//! # Ok::<(), pdiqkd::Error>(())
//! ```

pub mod bounds;
pub mod error;
pub mod games;
pub mod guessing;
pub mod protocol;
pub mod quantum;
pub mod rational;
pub mod repetition;
pub mod rng;

pub use error::{Error, Result};
