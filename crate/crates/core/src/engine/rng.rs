//! Counter-based random streams.
//!
//! Every random decision in a run is addressed by
//! `(master seed, purpose, node, round)`. A stream is a SplitMix64 generator
//! whose key is a hash of that address, so any coin can be reproduced in
//! isolation and per-node work within a round is order-independent.

use rand::RngCore;

use crate::{NodeId, Round};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a full-avalanche 64-bit mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn combine(h: u64, v: u64) -> u64 {
    mix64(h.wrapping_add(mix64(v.wrapping_add(GOLDEN))))
}

/// Derive an independent seed from a master seed and a salt (used to fan out
/// sweep members and seed batches).
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    combine(mix64(master), salt)
}

/// What a derived stream is consumed for. The tag keeps streams for different
/// purposes disjoint even when their node/round coordinates coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Transmit,
    Placement,
    Adversary,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::Transmit => 0x5452_414e_534d_4954,
            StreamPurpose::Placement => 0x504c_4143_454d_4e54,
            StreamPurpose::Adversary => 0x4144_5645_5253_4152,
        }
    }
}

/// A small, fast, reproducible random stream (SplitMix64).
#[derive(Debug, Clone)]
pub struct StreamRng {
    state: u64,
}

impl StreamRng {
    fn from_key(key: u64) -> Self {
        Self { state: key }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// A uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        (StreamRng::next_u64(self) >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        StreamRng::next_u64(self)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = StreamRng::next_u64(self).to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

// Key derivation mixes in the order (purpose, round, node) so the engine can
// hoist the per-round prefix out of its per-node loops.
fn opt_code(v: Option<u64>) -> u64 {
    match v {
        Some(x) => x.wrapping_add(1),
        None => 0,
    }
}

/// Statistically independent, reproducible sub-stream for one address.
///
/// The transmit coin of node `v` at round `t` depends only on
/// `(master_seed, Transmit, v, t)`.
pub fn derive_stream(
    master_seed: u64,
    purpose: StreamPurpose,
    node: Option<NodeId>,
    round: Option<Round>,
) -> StreamRng {
    let key = RoundKey::new(master_seed, purpose, round).node_key(node);
    StreamRng::from_key(key)
}

/// Pre-mixed `(seed, purpose, round)` prefix; the per-node suffix is two mixes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RoundKey {
    prefix: u64,
}

impl RoundKey {
    pub(crate) fn new(master_seed: u64, purpose: StreamPurpose, round: Option<Round>) -> Self {
        let h = combine(mix64(master_seed), purpose.tag());
        Self {
            prefix: combine(h, opt_code(round)),
        }
    }

    fn node_key(self, node: Option<NodeId>) -> u64 {
        combine(self.prefix, opt_code(node.map(u64::from)))
    }

    /// First uniform draw of the per-node stream under this key.
    #[inline]
    pub(crate) fn coin(self, node: NodeId) -> f64 {
        StreamRng::from_key(self.node_key(Some(node))).uniform()
    }
}

/// The transmit coin of node `v` at round `t`.
pub fn transmit_coin(master_seed: u64, node: NodeId, round: Round) -> f64 {
    derive_stream(master_seed, StreamPurpose::Transmit, Some(node), Some(round)).uniform()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_inputs_same_stream() {
        let mut a = derive_stream(7, StreamPurpose::Transmit, Some(3), Some(9));
        let mut b = derive_stream(7, StreamPurpose::Transmit, Some(3), Some(9));
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_nodes_different_streams() {
        let a: Vec<u64> = {
            let mut rng = derive_stream(7, StreamPurpose::Transmit, Some(0), Some(0));
            (0..8).map(|_| rng.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut rng = derive_stream(7, StreamPurpose::Transmit, Some(1), Some(0));
            (0..8).map(|_| rng.next_u64()).collect()
        };
        assert_ne!(a, b);
    }

    #[test]
    fn purposes_are_disjoint() {
        let mut a = derive_stream(7, StreamPurpose::Transmit, None, None);
        let mut b = derive_stream(7, StreamPurpose::Adversary, None, None);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn cell_coins_look_uniform() {
        // Mean of one draw per (node, round) cell over 10^4 cells.
        let mut sum = 0.0;
        let mut count = 0u64;
        for node in 0..100u32 {
            for round in 0..100u64 {
                sum += transmit_coin(42, node, round);
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn round_key_matches_derive_stream() {
        let key = RoundKey::new(11, StreamPurpose::Transmit, Some(5));
        assert_eq!(key.coin(2), transmit_coin(11, 2, 5));
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = derive_stream(1, StreamPurpose::Placement, None, None);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
