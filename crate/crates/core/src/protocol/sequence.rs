//! Photons, the pair store that holds their joint states, and the ordered
//! sequences S_A and S_B.

use serde::{Deserialize, Serialize};

use crate::error::{QsdcError, Result};
use crate::qudit::{
    apply_to_photon_a, apply_to_photon_b, bell_measure, measure_pair_local, measure_single, Basis,
    BasisSet, PairSide, PairState, PauliIndex, QuditState, Unitary,
};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairId(pub usize);

/// A photon in someone's hands. Not `Clone`: a photon can be in one place.
#[derive(Debug, PartialEq)]
pub enum Photon {
    /// One half of a pair whose joint state lives in the [`Lab`].
    Half { pair: PairId, side: PairSide },
    /// A photon in a known-separable pure state.
    Free(QuditState),
}

#[derive(Debug, Clone)]
enum Joint {
    Entangled(PairState),
    /// Separable after a local measurement; `None` once that photon is gone.
    Split {
        a: Option<QuditState>,
        b: Option<QuditState>,
    },
}

/// The physical state of every pair plus the stream that decides
/// measurement outcomes.
///
/// Each pair is simulated on its own; operations that would entangle two
/// different pairs are rejected.
#[derive(Debug, Clone)]
pub struct Lab {
    dim: usize,
    pairs: Vec<Joint>,
    nature: RandomStream,
}

impl Lab {
    pub fn new(dim: usize, nature: RandomStream) -> Self {
        Lab {
            dim,
            pairs: Vec::new(),
            nature,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn create_pair(&mut self, state: PairState) -> Result<(Photon, Photon)> {
        if state.dim() != self.dim {
            return Err(QsdcError::domain("pair dimension does not match the lab"));
        }
        let id = PairId(self.pairs.len());
        self.pairs.push(Joint::Entangled(state));
        Ok((
            Photon::Half {
                pair: id,
                side: PairSide::A,
            },
            Photon::Half {
                pair: id,
                side: PairSide::B,
            },
        ))
    }

    fn joint_mut(&mut self, id: PairId) -> Result<&mut Joint> {
        self.pairs
            .get_mut(id.0)
            .ok_or_else(|| QsdcError::domain(format!("no pair {}", id.0)))
    }

    /// Joint state of a pair that is still entangled.
    pub fn joint_state(&self, id: PairId) -> Option<&PairState> {
        match self.pairs.get(id.0) {
            Some(Joint::Entangled(p)) => Some(p),
            _ => None,
        }
    }

    /// Pure state of a photon that is not entangled with anything.
    pub fn local_state(&self, photon: &Photon) -> Result<QuditState> {
        match photon {
            Photon::Free(q) => Ok(q.clone()),
            Photon::Half { pair, side } => match self.pairs.get(pair.0) {
                Some(Joint::Split { a, b }) => {
                    let s = if *side == PairSide::A { a } else { b };
                    s.clone()
                        .ok_or_else(|| QsdcError::domain("photon was already consumed"))
                }
                Some(Joint::Entangled(_)) => Err(QsdcError::domain(
                    "photon is entangled and has no pure local state",
                )),
                None => Err(QsdcError::domain(format!("no pair {}", pair.0))),
            },
        }
    }

    pub fn apply(&mut self, photon: &mut Photon, u: &Unitary) -> Result<()> {
        match photon {
            Photon::Free(q) => {
                *q = u.apply(q)?;
                Ok(())
            }
            Photon::Half { pair, side } => {
                let side = *side;
                match self.joint_mut(*pair)? {
                    Joint::Entangled(p) => {
                        *p = match side {
                            PairSide::A => apply_to_photon_a(p, u)?,
                            PairSide::B => apply_to_photon_b(p, u)?,
                        };
                        Ok(())
                    }
                    Joint::Split { a, b } => {
                        let slot = if side == PairSide::A { a } else { b };
                        let q = slot
                            .as_mut()
                            .ok_or_else(|| QsdcError::domain("photon was already consumed"))?;
                        *q = u.apply(q)?;
                        Ok(())
                    }
                }
            }
        }
    }

    /// Removes a half from the store, collapsing its partner if needed.
    fn take_local(&mut self, pair: PairId, side: PairSide, basis: &Basis) -> Result<usize> {
        let nature = &mut self.nature;
        let joint = self
            .pairs
            .get_mut(pair.0)
            .ok_or_else(|| QsdcError::domain(format!("no pair {}", pair.0)))?;
        match joint {
            Joint::Entangled(p) => {
                let out = measure_pair_local(p, side, basis, nature)?;
                *joint = match side {
                    PairSide::A => Joint::Split {
                        a: None,
                        b: Some(out.partner),
                    },
                    PairSide::B => Joint::Split {
                        a: Some(out.partner),
                        b: None,
                    },
                };
                Ok(out.outcome)
            }
            Joint::Split { a, b } => {
                let slot = if side == PairSide::A { a } else { b };
                let q = slot
                    .take()
                    .ok_or_else(|| QsdcError::domain("photon was already consumed"))?;
                Ok(measure_single(&q, basis, nature)?.0)
            }
        }
    }

    /// Projective measurement that absorbs the photon.
    pub fn measure(&mut self, photon: Photon, basis: &Basis) -> Result<usize> {
        if basis.dim() != self.dim {
            return Err(QsdcError::domain("basis dimension does not match the lab"));
        }
        match photon {
            Photon::Free(q) => Ok(measure_single(&q, basis, &mut self.nature)?.0),
            Photon::Half { pair, side } => self.take_local(pair, side, basis),
        }
    }

    /// Measures and emits a fresh photon in the observed basis vector.
    pub fn measure_and_resend(&mut self, photon: Photon, basis: &Basis) -> Result<(usize, Photon)> {
        let k = self.measure(photon, basis)?;
        Ok((k, Photon::Free(basis.vectors()[k].clone())))
    }

    /// Drops a photon. An entangled half is measured in the computational
    /// basis first so its partner stays pure.
    pub fn discard(&mut self, photon: Photon, z: &Basis) -> Result<()> {
        if let Photon::Half { .. } = photon {
            self.measure(photon, z)?;
        }
        Ok(())
    }

    /// Joint Bell-basis measurement of two photons, absorbing both.
    pub fn bell_measure(&mut self, a: Photon, b: Photon) -> Result<PauliIndex> {
        if let (
            Photon::Half {
                pair: pa,
                side: PairSide::A,
            },
            Photon::Half {
                pair: pb,
                side: PairSide::B,
            },
        ) = (&a, &b)
        {
            if pa == pb {
                if let Some(Joint::Entangled(p)) = self.pairs.get(pa.0) {
                    let p = p.clone();
                    let idx = bell_measure(&p, &mut self.nature)?;
                    self.pairs[pa.0] = Joint::Split { a: None, b: None };
                    return Ok(idx);
                }
            }
        }
        let qa = self.local_state(&a)?;
        let qb = self.local_state(&b)?;
        let product = PairState::product(&qa, &qb)?;
        for photon in [a, b] {
            if let Photon::Half { pair, side } = photon {
                if let Some(Joint::Split { a, b }) = self.pairs.get_mut(pair.0) {
                    if side == PairSide::A {
                        *a = None;
                    } else {
                        *b = None;
                    }
                }
            }
        }
        bell_measure(&product, &mut self.nature)
    }
}

/// An ordered photon sequence. Slots are never reordered; a consumed slot
/// stays in place as `None`.
#[derive(Debug, Default, PartialEq)]
pub struct PhotonSequence {
    slots: Vec<Option<Photon>>,
}

impl PhotonSequence {
    pub fn with_len(n: usize) -> Self {
        PhotonSequence {
            slots: (0..n).map(|_| None).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, slot: usize) -> Option<&Photon> {
        self.slots.get(slot).and_then(|s| s.as_ref())
    }

    pub fn get_mut(&mut self, slot: usize) -> Option<&mut Photon> {
        self.slots.get_mut(slot).and_then(|s| s.as_mut())
    }

    pub fn take(&mut self, slot: usize) -> Option<Photon> {
        self.slots.get_mut(slot).and_then(|s| s.take())
    }

    pub fn put(&mut self, slot: usize, photon: Photon) -> Option<Photon> {
        self.slots[slot].replace(photon)
    }

    /// Positions that still hold a photon, ascending.
    pub fn live_slots(&self) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|_| i))
            .collect()
    }

    pub fn live_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Why a slot left the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsumeReason {
    FirstCheck,
    DecoyCheck,
    BellMeasured,
    Removed,
}

/// Audit view of one S_B position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SlotState {
    EntangledHalf {
        pair_id: usize,
    },
    Decoy {
        basis_id: usize,
        vector_index: usize,
    },
    Consumed {
        reason: ConsumeReason,
    },
}

/// Forward-only slot bookkeeping kept by the session.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotLedger {
    states: Vec<SlotState>,
}

impl SlotLedger {
    pub fn new(n: usize) -> Self {
        SlotLedger {
            states: (0..n)
                .map(|i| SlotState::EntangledHalf { pair_id: i })
                .collect(),
        }
    }

    pub fn states(&self) -> &[SlotState] {
        &self.states
    }

    pub fn get(&self, slot: usize) -> Option<SlotState> {
        self.states.get(slot).copied()
    }

    /// Applies a transition, rejecting any that moves backwards.
    pub fn transition(&mut self, slot: usize, next: SlotState) -> Result<()> {
        let cur = self
            .states
            .get(slot)
            .copied()
            .ok_or_else(|| QsdcError::order(format!("slot {slot} does not exist")))?;
        let ok = matches!(
            (cur, next),
            (SlotState::EntangledHalf { .. }, SlotState::Consumed { .. })
                | (SlotState::EntangledHalf { .. }, SlotState::Decoy { .. })
                | (SlotState::Decoy { .. }, SlotState::Consumed { .. })
        );
        if !ok {
            return Err(QsdcError::order(format!(
                "slot {slot}: illegal transition {cur:?} -> {next:?}"
            )));
        }
        self.states[slot] = next;
        Ok(())
    }
}

/// Convenience used by parties: measurement basis by id.
pub(crate) fn basis_by_id(set: &BasisSet, id: usize) -> Result<&Basis> {
    set.get(id)
        .ok_or_else(|| QsdcError::domain(format!("basis id {id} not in a set of {}", set.len())))
}
