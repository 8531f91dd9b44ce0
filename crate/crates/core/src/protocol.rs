//! The JADE per-node state machine.
//!
//! Each node maintains a send probability `p_v = p̂·(1+γ)^(−k)`, a busy
//! threshold `T_v`, and a round counter `c_v`. The probability is stored as
//! the integer exponent `k`, so millions of multiplicative updates stay exact
//! and `p_v` is only materialized for coin flips.

use serde::Serialize;

use crate::{Error, NodeId, Result, Round};

pub const DEFAULT_P_HAT: f64 = 1.0 / 24.0;
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Global protocol parameters: the probability cap `p̂ ∈ (0, 1/24]`, the
/// multiplicative step `γ > 0`, and the derived threshold cap
/// `⌊2^(1/(4γ))⌋` (at least 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolParams {
    p_hat: f64,
    gamma: f64,
    t_cap: u32,
}

impl ProtocolParams {
    pub fn new(p_hat: f64, gamma: f64) -> Result<Self> {
        if !p_hat.is_finite() || p_hat <= 0.0 || p_hat > 1.0 / 24.0 {
            return Err(Error::InvalidConfig(
                "protocol.p_hat: must be in (0, 1/24]".into(),
            ));
        }
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidConfig(
                "protocol.gamma: must be positive and finite".into(),
            ));
        }
        let raw = 2f64.powf(1.0 / (4.0 * gamma)).floor();
        let t_cap = if raw >= u32::MAX as f64 {
            u32::MAX
        } else {
            (raw as u32).max(1)
        };
        Ok(Self {
            p_hat,
            gamma,
            t_cap,
        })
    }

    pub fn p_hat(&self) -> f64 {
        self.p_hat
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_cap(&self) -> u32 {
        self.t_cap
    }
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self::new(DEFAULT_P_HAT, DEFAULT_GAMMA).expect("defaults are valid")
    }
}

/// What one node experienced in one round: it either transmitted, or it
/// sensed the channel and saw exactly one of idle / busy / a received message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Transmitted,
    Idle,
    Busy,
    Received(NodeId),
}

/// One node's protocol variables.
///
/// Invariants after every completed update: `k ≥ 0` (so `0 < p_v ≤ p̂`),
/// `1 ≤ T_v ≤ t_cap`, and `1 ≤ c_v ≤ T_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    k: u32,
    threshold: u32,
    counter: u32,
    last_useful: Option<Round>,
    last_applied: Option<Round>,
}

impl NodeState {
    /// Initial state: `k = 0` (p_v = p̂), `T_v = 1`, `c_v = 1`.
    pub fn initial() -> Self {
        Self {
            k: 0,
            threshold: 1,
            counter: 1,
            last_useful: None,
            last_applied: None,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn counter(&self) -> u32 {
        self.counter
    }

    /// Most recent round in which this node sensed idle or received a message.
    pub fn last_useful_round(&self) -> Option<Round> {
        self.last_useful
    }

    /// Materialize `p_v = p̂·(1+γ)^(−k)`.
    pub fn current_p(&self, params: &ProtocolParams) -> f64 {
        params.p_hat * (1.0 + params.gamma).powi(-(self.k.min(i32::MAX as u32) as i32))
    }

    /// Transmit decision for one round given a unit-uniform coin.
    pub fn decide_transmit(&self, params: &ProtocolParams, coin: f64) -> bool {
        debug_assert!((0.0..1.0).contains(&coin));
        coin < self.current_p(params)
    }

    /// Apply this node's outcome for `round`. Rounds must be applied in
    /// strictly increasing order.
    ///
    /// In order: an idle observation raises `p_v` (capped at `p̂`) and a
    /// received message lowers `p_v` and decrements `T_v`; both mark the
    /// round useful. Then `c_v` advances, and on overflow (`c_v > T_v`) it
    /// resets — penalizing `p_v` and raising `T_v` if none of the past `T_v`
    /// rounds (current included, judged against the current `T_v`) was
    /// useful. Rounds spent transmitting sense nothing and count as neither.
    pub fn apply_observation(
        &mut self,
        obs: Observation,
        round: Round,
        params: &ProtocolParams,
    ) -> Result<()> {
        if let Some(last) = self.last_applied {
            if round <= last {
                return Err(Error::OutOfOrderRound { got: round, last });
            }
        }
        self.last_applied = Some(round);

        match obs {
            Observation::Idle => {
                self.k = self.k.saturating_sub(1);
                self.last_useful = Some(round);
            }
            Observation::Received(_) => {
                self.k = self.k.saturating_add(1);
                self.threshold = self.threshold.saturating_sub(1).max(1);
                self.last_useful = Some(round);
            }
            Observation::Transmitted | Observation::Busy => {}
        }

        self.counter += 1;
        if self.counter > self.threshold {
            self.counter = 1;
            let window_start = (round + 1).saturating_sub(self.threshold as u64);
            let useful_in_window = self.last_useful.is_some_and(|r| r >= window_start);
            if !useful_in_window {
                self.k = self.k.saturating_add(1);
                self.threshold = (self.threshold + 1).min(params.t_cap);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults() -> ProtocolParams {
        ProtocolParams::default()
    }

    #[test]
    fn params_validation() {
        assert!(ProtocolParams::new(0.0, 0.1).is_err());
        assert!(ProtocolParams::new(0.05, 0.1).is_err()); // > 1/24
        assert!(ProtocolParams::new(1.0 / 24.0, 0.0).is_err());
        assert!(ProtocolParams::new(1.0 / 24.0, -0.1).is_err());
        assert!(ProtocolParams::new(1.0 / 24.0, 0.1).is_ok());
    }

    #[test]
    fn threshold_cap_values() {
        assert_eq!(defaults().t_cap(), 5); // ⌊2^2.5⌋
        assert_eq!(ProtocolParams::new(0.01, 0.05).unwrap().t_cap(), 32); // 2^5
        assert_eq!(ProtocolParams::new(0.01, 1.0).unwrap().t_cap(), 1); // ⌊2^0.25⌋
    }

    #[test]
    fn initial_state_matches_protocol() {
        let p = defaults();
        let s = NodeState::initial();
        assert_eq!(s.k(), 0);
        assert_eq!(s.threshold(), 1);
        assert_eq!(s.counter(), 1);
        assert_eq!(s.last_useful_round(), None);
        assert_eq!(s.current_p(&p), 1.0 / 24.0);

        let tiny = ProtocolParams::new(0.01, 0.1).unwrap();
        assert_eq!(s.current_p(&tiny), 0.01);
    }

    #[test]
    fn current_p_closed_form() {
        let p = defaults();
        let mut s = NodeState::initial();
        s.k = 1;
        assert!((s.current_p(&p) - 1.0 / 26.4).abs() < 1e-15);
        s.k = 2;
        assert!((s.current_p(&p) - 1.0 / 29.04).abs() < 1e-15);
    }

    #[test]
    fn decide_transmit_edges() {
        let p = defaults();
        let s = NodeState::initial();
        assert!(!s.decide_transmit(&p, 0.5));
        assert!(s.decide_transmit(&p, 0.0)); // p_v > 0 always
        assert!(s.decide_transmit(&p, 1.0 / 24.0 - 1e-12));
        assert!(!s.decide_transmit(&p, 1.0 / 24.0));
    }

    #[test]
    fn transmit_frequency_matches_p() {
        use crate::engine::rng::transmit_coin;
        let p = defaults();
        let s = NodeState::initial();
        let mut hits = 0u64;
        let trials = 1_000_000u64;
        for t in 0..trials {
            if s.decide_transmit(&p, transmit_coin(31, 0, t)) {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        assert!((freq - 1.0 / 24.0).abs() < 0.002, "freq {freq}");
    }

    // Hand trace: idle at round 0 keeps p at the p̂ cap and counts as useful.
    #[test]
    fn idle_clamps_at_cap_and_counts_useful() {
        let p = defaults();
        let mut s = NodeState::initial();
        s.apply_observation(Observation::Idle, 0, &p).unwrap();
        assert_eq!((s.k(), s.threshold(), s.counter()), (0, 1, 1));
        assert_eq!(s.last_useful_round(), Some(0));
    }

    // Hand trace: a receive lowers p, leaves T at its floor, and is useful.
    #[test]
    fn receive_rule() {
        let p = defaults();
        let mut s = NodeState::initial();
        s.apply_observation(Observation::Received(7), 0, &p).unwrap();
        assert_eq!((s.k(), s.threshold(), s.counter()), (1, 1, 1));
        assert_eq!(s.last_useful_round(), Some(0));
    }

    // Hand trace: two busy rounds from the initial state. Round 0 times out
    // with no useful round ever seen, so k and T both rise; round 1 then fits
    // under the larger threshold.
    #[test]
    fn busy_timeout_penalty() {
        let p = defaults();
        let mut s = NodeState::initial();
        s.apply_observation(Observation::Busy, 0, &p).unwrap();
        assert_eq!((s.k(), s.threshold(), s.counter()), (1, 2, 1));
        s.apply_observation(Observation::Busy, 1, &p).unwrap();
        assert_eq!((s.k(), s.threshold(), s.counter()), (1, 2, 2));
    }

    #[test]
    fn out_of_order_round_rejected() {
        let p = defaults();
        let mut s = NodeState::initial();
        s.apply_observation(Observation::Busy, 5, &p).unwrap();
        assert!(matches!(
            s.apply_observation(Observation::Busy, 5, &p),
            Err(Error::OutOfOrderRound { got: 5, last: 5 })
        ));
        assert!(s.apply_observation(Observation::Busy, 4, &p).is_err());
        assert!(s.apply_observation(Observation::Busy, 6, &p).is_ok());
    }

    // The exponent walk is exact: climbing k via receives and walking back
    // down via idles restores p̂ bit-for-bit, and every visited k matches the
    // closed form.
    #[test]
    fn exponent_roundtrip_without_drift() {
        let p = defaults();
        let mut s = NodeState::initial();
        let closed = |k: u32| p.p_hat() * (1.0 + p.gamma()).powi(-(k as i32));
        let mut round = 0u64;
        for step in 0..10_000u32 {
            s.apply_observation(Observation::Received(1), round, &p).unwrap();
            round += 1;
            assert_eq!(s.k(), step + 1);
            assert_eq!(s.current_p(&p), closed(s.k()));
        }
        for _ in 0..10_000u32 {
            s.apply_observation(Observation::Idle, round, &p).unwrap();
            round += 1;
            assert_eq!(s.current_p(&p), closed(s.k()));
        }
        assert_eq!(s.k(), 0);
        assert_eq!(s.current_p(&p), p.p_hat());
    }

    fn arbitrary_obs() -> impl Strategy<Value = Observation> {
        prop_oneof![
            Just(Observation::Transmitted),
            Just(Observation::Idle),
            Just(Observation::Busy),
            Just(Observation::Received(3)),
        ]
    }

    proptest! {
        // State invariants hold under arbitrary observation sequences, and
        // the monotonicity rules match the update table: busy never raises
        // p_v, only idle raises it, only a receive lowers T_v.
        #[test]
        fn invariants_under_random_sequences(
            obs in proptest::collection::vec(arbitrary_obs(), 1..600),
            gamma in 0.05f64..1.0,
        ) {
            let p = ProtocolParams::new(1.0 / 24.0, gamma).unwrap();
            let mut s = NodeState::initial();
            for (round, &o) in obs.iter().enumerate() {
                let k_before = s.k();
                let t_before = s.threshold();
                s.apply_observation(o, round as Round, &p).unwrap();
                prop_assert!(s.threshold() >= 1 && s.threshold() <= p.t_cap());
                prop_assert!(s.counter() >= 1 && s.counter() <= s.threshold());
                match o {
                    Observation::Busy | Observation::Transmitted =>
                        prop_assert!(s.k() >= k_before),
                    Observation::Received(_) => {
                        prop_assert!(s.k() > k_before);
                        prop_assert!(s.threshold() <= t_before.max(1));
                    }
                    Observation::Idle =>
                        prop_assert!(s.k() >= k_before.saturating_sub(1)),
                }
                // Every update moves k by at most 1 here: a useful round can
                // never coincide with a timeout penalty.
                prop_assert!(s.k().abs_diff(k_before) <= 1);
            }
        }
    }
}
