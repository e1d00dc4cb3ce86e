//! Seeded random streams.
//!
//! Every party in a session draws from its own ChaCha8 stream derived from
//! the session seed, so attaching an attacker never shifts the honest
//! parties' choices.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids used inside a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    Server = 1,
    Receiver = 2,
    Sender = 3,
    Adversary = 4,
    Nature = 5,
    Message = 6,
}

/// Deterministic random stream. The only mutable shared-nothing state in
/// the simulator.
#[derive(Debug, Clone)]
pub struct RandomStream(ChaCha8Rng);

impl RandomStream {
    pub fn seeded(seed: u64) -> Self {
        RandomStream(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent substream of `seed` for one actor.
    pub fn substream(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        RandomStream(rng)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// `k` distinct elements of `candidates`, chosen uniformly, returned in
    /// ascending order of their position in `candidates`.
    pub fn choose_subset(&mut self, candidates: &[usize], k: usize) -> Vec<usize> {
        let mut picked: Vec<usize> = index::sample(&mut self.0, candidates.len(), k)
            .into_iter()
            .collect();
        picked.sort_unstable();
        picked.into_iter().map(|i| candidates[i]).collect()
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ_and_repeat() {
        let mut a = RandomStream::substream(7, StreamId::Receiver);
        let mut b = RandomStream::substream(7, StreamId::Sender);
        let mut a2 = RandomStream::substream(7, StreamId::Receiver);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xa2: Vec<u64> = (0..4).map(|_| a2.next_u64()).collect();
        assert_ne!(xa, xb);
        assert_eq!(xa, xa2);
    }

    #[test]
    fn subset_is_sorted_and_distinct() {
        let mut rng = RandomStream::seeded(3);
        let cands: Vec<usize> = (10..60).collect();
        let s = rng.choose_subset(&cands, 20);
        assert_eq!(s.len(), 20);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|x| (10..60).contains(x)));
    }
}
