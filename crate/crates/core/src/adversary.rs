//! Channel interposition and attack strategies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::protocol::{Lab, Photon, PhotonSequence};
use crate::qudit::{make_bell_state, BasisSet, PauliIndex};
use crate::rng::RandomStream;

/// The three legs S_B travels in one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLeg {
    AliceToCharlie,
    CharlieToBob,
    BobToAlice,
}

impl ChannelLeg {
    pub const ALL: [ChannelLeg; 3] = [
        ChannelLeg::AliceToCharlie,
        ChannelLeg::CharlieToBob,
        ChannelLeg::BobToAlice,
    ];
}

/// Who attacks and where.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EveStrategy {
    #[default]
    None,
    /// Measure every passing photon in a uniformly random basis of the
    /// users' set and resend the observed eigenstate.
    InterceptResend {
        legs: BTreeSet<ChannelLeg>,
        /// Relay server at which the attacker sits; `None` means the
        /// attacker taps the leg directly.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at_relay: Option<u32>,
    },
    /// The serving server itself: holds S_A, hears every announcement,
    /// intercepts S_B between Charlie and Bob and reads Bob's coding on the
    /// way back.
    DishonestServer,
}

impl EveStrategy {
    pub fn intercept_resend(legs: impl IntoIterator<Item = ChannelLeg>) -> Self {
        EveStrategy::InterceptResend {
            legs: legs.into_iter().collect(),
            at_relay: None,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, EveStrategy::None)
    }

    /// Earliest leg the attacker disturbs.
    pub fn first_attacked_leg(&self) -> Option<ChannelLeg> {
        match self {
            EveStrategy::None => None,
            EveStrategy::InterceptResend { legs, .. } => legs.iter().next().copied(),
            EveStrategy::DishonestServer => Some(ChannelLeg::CharlieToBob),
        }
    }
}

/// What the attacker believes about each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EveKnowledge {
    pub dim: usize,
    pub guessed_key: Vec<Option<PauliIndex>>,
    pub guessed_message: Vec<Option<PauliIndex>>,
    /// Probability the attacker assigns to her key guess being right.
    pub confidence: Vec<f64>,
}

impl EveKnowledge {
    /// Uniform prior over `d²` symbols for every slot.
    pub fn blank(dim: usize, slots: usize) -> Self {
        EveKnowledge {
            dim,
            guessed_key: vec![None; slots],
            guessed_message: vec![None; slots],
            confidence: vec![1.0 / (dim * dim) as f64; slots],
        }
    }
}

/// Intercept-resend in a random basis of `set` on every photon of `seq`.
/// Returns the number of photons touched. Guesses are not updated: a single
/// basis outcome on one half carries no information about `U_nm`.
pub fn intercept_resend_mub(
    seq: &mut PhotonSequence,
    set: &BasisSet,
    lab: &mut Lab,
    rng: &mut RandomStream,
) -> Result<usize> {
    let live = seq.live_slots();
    for &slot in &live {
        let photon = seq.take(slot).expect("live slot");
        let basis = &set.bases()[rng.below(set.len())];
        let (_, resent) = lab.measure_and_resend(photon, basis)?;
        seq.put(slot, resent);
    }
    Ok(live.len())
}

/// Charlie→Bob interception by the server.
///
/// For every photon in transit the server Bell-measures it together with
/// the partner she still holds (or with half of a fresh `Ψ_00` if she has
/// none), which reveals Charlie's `U_C` on entangled slots. She then keeps
/// one half of a fresh `Ψ_00` in S_A and forwards the other to Bob, so a
/// second Bell measurement on the way back reveals Bob's operation.
pub fn dishonest_server_attack(
    retained: &mut PhotonSequence,
    in_transit: &mut PhotonSequence,
    lab: &mut Lab,
    knowledge: &mut EveKnowledge,
) -> Result<Vec<(usize, PauliIndex)>> {
    let d = lab.dim();
    let mut guesses = Vec::new();
    for slot in in_transit.live_slots() {
        let intercepted = in_transit.take(slot).expect("live slot");
        let partner = match retained.take(slot) {
            Some(p) => p,
            None => lab.create_pair(make_bell_state(0, 0, d)?)?.0,
        };
        let guess = lab.bell_measure(partner, intercepted)?;
        knowledge.guessed_key[slot] = Some(guess);
        knowledge.confidence[slot] = 1.0;
        guesses.push((slot, guess));

        let (keep, forward) = lab.create_pair(make_bell_state(0, 0, d)?)?;
        retained.put(slot, keep);
        in_transit.put(slot, forward);
    }
    Ok(guesses)
}

/// Bob→Alice readout by the dishonest server: Bell-measures each returned
/// photon with the substitute partner she kept, learning Bob's operation.
pub fn dishonest_server_readout(
    retained: &mut PhotonSequence,
    returned: &mut PhotonSequence,
    lab: &mut Lab,
    knowledge: &mut EveKnowledge,
) -> Result<Vec<(usize, PauliIndex)>> {
    let mut guesses = Vec::new();
    for slot in returned.live_slots() {
        let Some(mine) = retained.take(slot) else {
            continue;
        };
        let theirs: Photon = returned.take(slot).expect("live slot");
        let op = lab.bell_measure(mine, theirs)?;
        knowledge.guessed_message[slot] = Some(op);
        guesses.push((slot, op));
    }
    Ok(guesses)
}

/// The true key and message per slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub key: BTreeMap<usize, PauliIndex>,
    pub message: BTreeMap<usize, PauliIndex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveReport {
    /// `None` when no key symbol existed yet.
    pub key_recovery_rate: Option<f64>,
    /// `None` when no message symbol existed yet.
    pub message_recovery_rate: Option<f64>,
}

/// Fraction of slots where the attacker's guess equals the truth. A slot
/// without a guess is credited with the uniform-prior probability `1/d²`.
pub fn eve_report(knowledge: &EveKnowledge, truth: &GroundTruth) -> EveReport {
    let prior = 1.0 / (knowledge.dim * knowledge.dim) as f64;
    let score = |guesses: &[Option<PauliIndex>], truth: &BTreeMap<usize, PauliIndex>| {
        if truth.is_empty() {
            return None;
        }
        let total: f64 = truth
            .iter()
            .map(|(&slot, t)| match guesses.get(slot).copied().flatten() {
                Some(g) if g == *t => 1.0,
                Some(_) => 0.0,
                None => prior,
            })
            .sum();
        Some(total / truth.len() as f64)
    };
    EveReport {
        key_recovery_rate: score(&knowledge.guessed_key, &truth.key),
        message_recovery_rate: score(&knowledge.guessed_message, &truth.message),
    }
}
