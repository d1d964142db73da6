//! Toeplitz-matrix hashing over GF(2) for privacy amplification.

use rand::Rng;

use crate::error::{domain, Result};
use crate::games::Bit;
use crate::rng;

/// Compresses `key` to `out_len` bits with a seeded binary Toeplitz matrix.
///
/// The `out_len × |key|` matrix has constant diagonals drawn from
/// `out_len + |key| − 1` seeded bits, so entry `(i, j)` is `diag[i + |key| − 1 − j]`.
/// The map is linear: `amplify(k1 ⊕ k2) = amplify(k1) ⊕ amplify(k2)`.
pub fn privacy_amplify(key: &[Bit], out_len: usize, seed: u64) -> Result<Vec<Bit>> {
    if out_len > key.len() {
        return Err(domain(format!(
            "cannot extract {out_len} bits from a {}-bit key",
            key.len()
        )));
    }
    if key.iter().any(|&b| b > 1) {
        return Err(domain("key must contain only 0 and 1"));
    }
    if out_len == 0 {
        return Ok(Vec::new());
    }
    let mut rng = rng::stream(seed, key.len() as u64, "toeplitz");
    let diag: Vec<Bit> = (0..out_len + key.len() - 1)
        .map(|_| rng.random::<bool>() as Bit)
        .collect();
    let k = key.len();
    Ok((0..out_len)
        .map(|i| {
            key.iter()
                .enumerate()
                .fold(0, |acc, (j, &bit)| acc ^ (diag[i + k - 1 - j] & bit))
        })
        .collect())
}
