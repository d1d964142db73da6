//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls into the library's solvers; each oracle recomputes its
//! quantity from first principles.

#![allow(dead_code)]

use num_rational::Ratio;
use pdiqkd::games::{CommonBitMaps, TwoPlayerFreeGame};
use pdiqkd::rational::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

/// `Pr[Bin(n, p) ≥ k]`.
pub fn binomial_tail(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    Binomial::new(p, n).unwrap().sf(k - 1)
}

/// Standard error of a frequency estimated from `trials` Bernoulli(p) draws.
pub fn frequency_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Pearson statistic and its 0.999 critical value for `observed` against `expected` probabilities.
pub fn chi_squared(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    let total: u64 = observed.iter().sum();
    let stat = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new((observed.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    (stat, critical)
}

/// Magic Square from scratch: rows with even parity, columns with odd parity.
pub mod ms {
    pub fn alice_rows() -> Vec<[u8; 3]> {
        triples().filter(|t| t.iter().sum::<u8>() % 2 == 0).collect()
    }

    pub fn bob_columns() -> Vec<[u8; 3]> {
        triples().filter(|t| t.iter().sum::<u8>() % 2 == 1).collect()
    }

    fn triples() -> impl Iterator<Item = [u8; 3]> {
        (0..8u8).map(|m| [(m >> 2) & 1, (m >> 1) & 1, m & 1])
    }

    /// Row `x` and column `y` meet at cell `(x, y)`.
    pub fn wins(x: usize, y: usize, row: [u8; 3], col: [u8; 3]) -> bool {
        row[y] == col[x]
    }
}

/// Classical value of MS_η with the common-bit condition by brute force over
/// every deterministic (Alice, Bob, Eve) triple.
///
/// Eve maps each of the nine input pairs and the anchor to a bit: 2^10 strategies.
pub fn ms_guessing_value_by_triples(eta: Rational) -> Rational {
    let rows = ms::alice_rows();
    let cols = ms::bob_columns();
    let alice_maps: Vec<[usize; 3]> = (0..64).map(|i| [i / 16, (i / 4) % 4, i % 4]).collect();
    let pairs: Vec<([usize; 3], [usize; 3])> = alice_maps
        .iter()
        .flat_map(|&a| alice_maps.iter().map(move |&b| (a, b)))
        .collect();
    // Weights in units of 1 / (9 · den(η)).
    let den = *eta.denom();
    let num = *eta.numer();
    let best = pairs
        .par_iter()
        .map(|(amap, bmap)| {
            let mut best = 0i64;
            for eve in 0..1024u32 {
                let mut total = 0i64;
                for x in 0..3 {
                    for y in 0..3 {
                        let row = rows[amap[x]];
                        let col = cols[bmap[y]];
                        if !ms::wins(x, y, row, col) {
                            continue;
                        }
                        // Anchor branch: Eve holds no input and is not asked to guess.
                        total += num;
                        let guess = ((eve >> (x * 3 + y)) & 1) as u8;
                        if guess == row[y] {
                            total += den - num;
                        }
                    }
                }
                best = best.max(total);
            }
            best
        })
        .max()
        .unwrap();
    Ratio::new(best, 9 * den)
}

/// For every win pattern with at most `(1 − 2ε)n` wins, the fraction of
/// `k`-subsets on which the test passes at `1 − ε`. Returns the worst case.
pub fn concentration_violation(n: usize, k: usize, epsilon: f64) -> f64 {
    let subsets: Vec<u32> = (0u32..1 << n).filter(|m| m.count_ones() as usize == k).collect();
    let max_wins = ((1.0 - 2.0 * epsilon) * n as f64 + 1e-9).floor();
    let need = (1.0 - epsilon) * k as f64 - 1e-9;
    (0u32..1 << n)
        .into_par_iter()
        .filter(|w| w.count_ones() as f64 <= max_wins)
        .map(|w| {
            let passing = subsets
                .iter()
                .filter(|&&t| (w & t).count_ones() as f64 >= need)
                .count();
            passing as f64 / subsets.len() as f64
        })
        .reduce(|| 0.0, f64::max)
}

/// A random game with a random product distribution, random predicate and
/// common-bit maps that agree on every winning tuple.
pub fn random_game(seed: u64) -> (TwoPlayerFreeGame, CommonBitMaps) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, ny) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let (na, nb) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let f: Vec<u8> = (0..nx * ny * na).map(|_| rng.random_range(0..2)).collect();
    let g: Vec<u8> = (0..nx * ny * nb).map(|_| rng.random_range(0..2)).collect();
    let mut predicate = Vec::with_capacity(nx * ny * na * nb);
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                for b in 0..nb {
                    let agree = f[(x * ny + y) * na + a] == g[(x * ny + y) * nb + b];
                    predicate.push(agree && rng.random_bool(0.7));
                }
            }
        }
    }
    let mut dist = |len: usize| {
        let w: Vec<i64> = (0..len).map(|_| rng.random_range(1..=5)).collect();
        let total: i64 = w.iter().sum();
        w.into_iter().map(|v| Ratio::new(v, total)).collect::<Vec<Rational>>()
    };
    let (dx, dy) = (dist(nx), dist(ny));
    let labels = |n: usize, p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let game = TwoPlayerFreeGame::new(
        labels(nx, "x"),
        labels(ny, "y"),
        labels(na, "a"),
        labels(nb, "b"),
        dx,
        dy,
        predicate,
    )
    .unwrap();
    let bits = CommonBitMaps::from_tables(&game, f, g).unwrap();
    (game, bits)
}
