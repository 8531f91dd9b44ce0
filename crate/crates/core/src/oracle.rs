//! Exact small-instance channel probabilities.
//!
//! For a sensing node with neighbor send probabilities `p_1..p_m`, the chance
//! of an idle channel is `q0 = Π(1−p_i)` and the chance of exactly one
//! transmitter is `q1 = Σ_i p_i·Π_{j≠i}(1−p_j)`. These closed forms validate
//! the simulator's coin machinery, and with all `p_i ≤ p̂` they satisfy
//! `q0·p ≤ q1 ≤ q0·p/(1−p̂)` where `p = Σp_i`.

use serde::Serialize;

use crate::engine::rng::transmit_coin;
use crate::{Error, NodeId, Result};

/// Comparison slack for closed-form probability identities.
pub const EXACT_TOL: f64 = 1e-12;

/// Per-node send probabilities, each in `(0, 1)`. May be empty (an isolated
/// sensing node): then `q0 = 1` and `q1 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(i) = probs
            .iter()
            .position(|p| !p.is_finite() || *p <= 0.0 || *p >= 1.0)
        {
            return Err(Error::Precondition(format!(
                "probability {} at index {i} not in (0, 1)",
                probs[i]
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `p = Σ p_i`.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `(q0, q1)`: probability of zero transmitters and of exactly one.
pub fn exact_q0_q1(pv: &ProbVector) -> (f64, f64) {
    let probs = pv.probs();
    let q0: f64 = probs.iter().map(|p| 1.0 - p).product();
    let q1: f64 = (0..probs.len())
        .map(|i| {
            probs[i]
                * probs
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, p)| 1.0 - p)
                    .product::<f64>()
        })
        .sum();
    (q0, q1)
}

/// Check `q0·p ≤ q1 ≤ q0·p/(1−p̂)` with `p = Σp_i`, within [`EXACT_TOL`].
/// The bounds require every `p_i ≤ p̂`.
pub fn check_q1_bounds(pv: &ProbVector, p_hat: f64) -> Result<bool> {
    if !p_hat.is_finite() || p_hat <= 0.0 || p_hat >= 1.0 {
        return Err(Error::Precondition(format!("p_hat {p_hat} not in (0, 1)")));
    }
    if let Some(i) = pv.probs().iter().position(|&p| p > p_hat) {
        return Err(Error::Precondition(format!(
            "probability {} at index {i} exceeds p_hat {p_hat}",
            pv.probs()[i]
        )));
    }
    let (q0, q1) = exact_q0_q1(pv);
    let p = pv.total();
    Ok(q0 * p <= q1 + EXACT_TOL && q1 <= q0 * p / (1.0 - p_hat) + EXACT_TOL)
}

/// Simulated idle/exactly-one frequencies against the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationReport {
    pub trials: u64,
    pub exact_q0: f64,
    pub exact_q1: f64,
    pub sim_q0: f64,
    pub sim_q1: f64,
    /// Binomial standard errors √(q(1−q)/trials) at the exact values.
    pub se_q0: f64,
    pub se_q1: f64,
}

impl DeviationReport {
    /// Are both simulated frequencies within `sigmas` standard errors?
    pub fn within(&self, sigmas: f64) -> bool {
        (self.sim_q0 - self.exact_q0).abs() <= sigmas * self.se_q0 + EXACT_TOL
            && (self.sim_q1 - self.exact_q1).abs() <= sigmas * self.se_q1 + EXACT_TOL
    }
}

/// Monte Carlo the channel with the engine's own transmit coins and compare
/// the idle / exactly-one frequencies against `q0`, `q1`.
pub fn empirical_vs_exact(pv: &ProbVector, trials: u64, seed: u64) -> Result<DeviationReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let (exact_q0, exact_q1) = exact_q0_q1(pv);
    let probs = pv.probs();
    let mut idle = 0u64;
    let mut single = 0u64;
    for trial in 0..trials {
        let mut transmitters = 0u32;
        for (i, &p) in probs.iter().enumerate() {
            if transmit_coin(seed, i as NodeId, trial) < p {
                transmitters += 1;
                if transmitters > 1 {
                    break;
                }
            }
        }
        match transmitters {
            0 => idle += 1,
            1 => single += 1,
            _ => {}
        }
    }
    let t = trials as f64;
    Ok(DeviationReport {
        trials,
        exact_q0,
        exact_q1,
        sim_q0: idle as f64 / t,
        sim_q1: single as f64 / t,
        se_q0: (exact_q0 * (1.0 - exact_q0) / t).sqrt(),
        se_q1: (exact_q1 * (1.0 - exact_q1) / t).sqrt(),
    })
}
