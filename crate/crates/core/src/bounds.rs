//! Explicit-constant calculators for the min-entropy, smoothing, concentration
//! and honest-acceptance bounds.
//!
//! Entropies are in bits. Exponents are natural-log and converted with `log2(e)`.
//! Every hidden constant is a field of [`BoundConstants`] and is echoed in each report.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::protocol::{ProtocolConfig, RunAggregate};
use crate::repetition::{ln_tau_star_bound, RepetitionConstants};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Exponent constant of the test-set concentration bound.
    pub conc_constant: f64,
    /// Exponent constant of the threshold repetition bound.
    pub rep_constant: f64,
    /// Bits lost per leaked test round.
    pub leak_constant: f64,
    /// Exponent constant of the honest acceptance bound.
    pub honest_constant: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            conc_constant: 0.5,
            rep_constant: 1.0,
            leak_constant: 1.0,
            honest_constant: 0.1,
        }
    }
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("conc_constant", self.conc_constant),
            ("rep_constant", self.rep_constant),
            ("leak_constant", self.leak_constant),
            ("honest_constant", self.honest_constant),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(domain(format!("gamma = {gamma} outside (0, 1/2]")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(domain(format!("epsilon = {epsilon} outside (0, 1/2]")));
    }
    Ok(())
}

/// `min(1, exp(−conc·ε²·γ·n))`: bounds the chance that the test passes at
/// `1 − ε` while at most `(1 − 2ε)n` rounds win overall.
pub fn concentration_bound(epsilon: f64, gamma: f64, n: u64, constants: &BoundConstants) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_gamma(gamma)?;
    constants.validate()?;
    Ok((-constants.conc_constant * epsilon * epsilon * gamma * n as f64)
        .min(0.0)
        .exp())
}

/// `1 − min(1, exp(−honest·ε²·γ·n))`.
pub fn honest_acceptance_bound(epsilon: f64, gamma: f64, n: u64, constants: &BoundConstants) -> Result<f64> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(domain(format!("epsilon = {epsilon} outside [0, 1/2]")));
    }
    check_gamma(gamma)?;
    constants.validate()?;
    let failure = (-constants.honest_constant * epsilon * epsilon * gamma * n as f64)
        .min(0.0)
        .exp();
    Ok(1.0 - failure)
}

/// `−log2(p_guess)`.
pub fn guessing_to_min_entropy(p_guess: f64) -> Result<f64> {
    if !(p_guess > 0.0 && p_guess <= 1.0) {
        return Err(domain(format!("guessing probability {p_guess} outside (0, 1]")));
    }
    // `0 − x` keeps `p_guess = 1` at +0 rather than −0.
    Ok(0.0 - p_guess.log2())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Probability of the conditioning event.
    pub p_a: f64,
    pub c_star: f64,
    pub constants: BoundConstants,
    /// `c* − 2ε`.
    pub delta: f64,
    pub tau_star: f64,
    pub ln_tau_star: f64,
    /// `rep·δ⁹·n·log2(e)`.
    pub entropy_term_bits: f64,
    /// `log2(1/p_a)`.
    pub conditioning_penalty_bits: f64,
    /// `leak·γ·n`.
    pub leakage_bits: f64,
    pub h_min_bound: f64,
    /// `min(1, exp(−conc·ε²·γ·n) / p_a)`.
    pub epsilon_s: f64,
    /// Hash of the protocol configuration this report describes, when known.
    pub config_hash: Option<String>,
}

/// Evaluates the smooth min-entropy lower bound and its smoothing parameter.
///
/// Requires `0 < ε < c*/2`; `ε ≥ c*/2` is [`Error::TheoremInapplicable`].
pub fn min_entropy_bound(
    n: u64,
    epsilon: f64,
    gamma: f64,
    p_a: f64,
    c_star: f64,
    constants: &BoundConstants,
) -> Result<BoundReport> {
    constants.validate()?;
    check_gamma(gamma)?;
    if !(c_star > 0.0 && c_star <= 1.0) {
        return Err(domain(format!("c_star = {c_star} outside (0, 1]")));
    }
    if !(p_a > 0.0 && p_a <= 1.0) {
        return Err(domain(format!("p_a = {p_a} outside (0, 1]")));
    }
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon = {epsilon} must be positive")));
    }
    if epsilon >= c_star / 2.0 {
        return Err(Error::TheoremInapplicable {
            epsilon,
            half_c_star: c_star / 2.0,
        });
    }
    let delta = c_star - 2.0 * epsilon;
    let rep = RepetitionConstants {
        exponent_constant: constants.rep_constant,
    };
    let ln_tau_star = ln_tau_star_bound(n, delta, &rep)?;
    let entropy_term_bits = -ln_tau_star * std::f64::consts::LOG2_E;
    let conditioning_penalty_bits = 0.0 - p_a.log2();
    let leakage_bits = constants.leak_constant * gamma * n as f64;
    let ln_eps_s = -constants.conc_constant * epsilon * epsilon * gamma * n as f64 - p_a.ln();
    Ok(BoundReport {
        n,
        epsilon,
        gamma,
        p_a,
        c_star,
        constants: *constants,
        delta,
        tau_star: ln_tau_star.exp(),
        ln_tau_star,
        entropy_term_bits,
        conditioning_penalty_bits,
        leakage_bits,
        h_min_bound: entropy_term_bits - conditioning_penalty_bits - leakage_bits,
        epsilon_s: ln_eps_s.min(0.0).exp(),
        config_hash: None,
    })
}

impl BoundReport {
    /// Notes on bounds that are vacuous at the chosen constants.
    pub fn vacuity_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.h_min_bound <= 0.0 {
            flags.push("h_min_bound is not positive at these constants; the entropy bound is vacuous".into());
        }
        if self.epsilon_s >= 1.0 {
            flags.push("epsilon_s is clamped at 1; the smoothing bound is vacuous".into());
        }
        flags
    }
}

/// Which side of a comparison row is a proven bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// The true value is at least the bound.
    Lower,
    /// The true value is at most the bound.
    Upper,
    /// Estimate only.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub bound_kind: BoundKind,
    pub analytic_bound: Option<f64>,
    pub empirical_estimate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub bounds: BoundReport,
    pub honest_acceptance_bound: f64,
    pub empirical: RunAggregate,
    pub rows: Vec<ComparisonRow>,
    pub flags: Vec<String>,
}

/// Juxtaposes the analytic bounds for `config` with empirical run statistics.
///
/// Fails with [`Error::Consistency`] when `empirical` was produced under a different configuration.
pub fn theorem_report(
    config: &ProtocolConfig,
    c_star: f64,
    p_a: f64,
    constants: &BoundConstants,
    empirical: &RunAggregate,
) -> Result<TheoremReport> {
    config.validate()?;
    let hash = config.config_hash();
    if empirical.config_hash != hash {
        return Err(Error::Consistency(format!(
            "run statistics carry config hash {} but the bounds describe {}",
            empirical.config_hash, hash
        )));
    }
    let n = config.n as u64;
    let mut bounds = min_entropy_bound(n, config.epsilon, config.gamma, p_a, c_star, constants)?;
    bounds.config_hash = Some(hash);
    let honest = honest_acceptance_bound(config.epsilon, config.gamma, n, constants)?;
    let guess_bound = (-bounds.h_min_bound.max(0.0)).exp2();

    let eve = empirical.eve.as_ref();
    let rows = vec![
        ComparisonRow {
            quantity: "acceptance probability (honest devices)".into(),
            bound_kind: BoundKind::Lower,
            analytic_bound: Some(honest),
            empirical_estimate: Some(empirical.acceptance_rate),
        },
        ComparisonRow {
            quantity: "smooth min-entropy of K_A (bits)".into(),
            bound_kind: BoundKind::Lower,
            analytic_bound: Some(bounds.h_min_bound),
            empirical_estimate: eve.and_then(|e| e.min_entropy_floor),
        },
        ComparisonRow {
            quantity: "Eve whole-string success".into(),
            bound_kind: BoundKind::Upper,
            analytic_bound: Some(guess_bound),
            empirical_estimate: eve.map(|e| e.whole_string_success),
        },
        ComparisonRow {
            quantity: "Eve per-bit success".into(),
            bound_kind: BoundKind::None,
            analytic_bound: None,
            empirical_estimate: eve.and_then(|e| e.per_bit_success),
        },
        ComparisonRow {
            quantity: "smoothing parameter epsilon_s".into(),
            bound_kind: BoundKind::Upper,
            analytic_bound: Some(bounds.epsilon_s),
            empirical_estimate: None,
        },
        ComparisonRow {
            quantity: "mean raw key length".into(),
            bound_kind: BoundKind::None,
            analytic_bound: None,
            empirical_estimate: Some(empirical.mean_key_len),
        },
        ComparisonRow {
            quantity: "key disagreement rate".into(),
            bound_kind: BoundKind::None,
            analytic_bound: None,
            empirical_estimate: empirical.disagreement_rate,
        },
    ];

    let mut flags = bounds.vacuity_flags();
    if empirical.acceptance_rate < honest {
        flags.push(
            "acceptance rate is below the honest acceptance bound; the devices do not meet the honest-device premise"
                .into(),
        );
    }
    match eve {
        None => flags.push("every run aborted; Eve statistics are undefined".into()),
        Some(e) if e.whole_string_success > guess_bound => flags.push(
            "Eve's whole-string success exceeds 2^-h_min_bound; the devices lie outside the theorem's premise"
                .into(),
        ),
        Some(e) if e.min_entropy_floor.is_none() => flags.push(format!(
            "Eve never guessed a whole key in {} accepted runs; the empirical floor exceeds log2({}) bits",
            e.accepted_runs, e.accepted_runs
        )),
        Some(_) => {}
    }
    Ok(TheoremReport {
        bounds,
        honest_acceptance_bound: honest,
        empirical: empirical.clone(),
        rows,
        flags,
    })
}
