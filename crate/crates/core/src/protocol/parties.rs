//! The three party state machines. Each holds only its own photons,
//! random stream and private records; everything it learns about the others
//! arrives as a photon sequence or a public announcement.

use std::collections::BTreeMap;

use crate::error::{QsdcError, Result};
use crate::qudit::{
    basis_change, builtin_basis_set, correlation_rules, make_bell_state, max_builtin_bases,
    partner_set, pauli_unitary_of, BasisSet, CorrelationRule, PauliIndex, QuditState,
};
use crate::rng::RandomStream;

use super::sequence::{basis_by_id, Lab, Photon, PhotonSequence};
use super::transcript::{Actor, CheckId, ClassicalAnnouncement, Event, Transcript};

/// Error count over a check's samples. A check with no samples has rate 0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckTally {
    pub errors: u64,
    pub samples: u64,
    pub rate: f64,
}

impl CheckTally {
    pub fn new(errors: u64, samples: u64) -> Self {
        let rate = if samples == 0 {
            0.0
        } else {
            errors as f64 / samples as f64
        };
        CheckTally {
            errors,
            samples,
            rate,
        }
    }
}

/// The bases a session uses.
#[derive(Debug, Clone)]
pub struct ProtocolBases {
    /// The `M` bases used for sampling and decoys.
    pub set: BasisSet,
    /// Every built-in basis for `d`; `set` is a prefix. Basis ids in
    /// records index into this list.
    pub family: BasisSet,
    /// How Charlie certifies a sample Alice measured in each basis of `set`.
    pub rules: Vec<CorrelationRule>,
    /// The bases Charlie measures samples in, one per basis of `set`.
    pub partners: BasisSet,
}

impl ProtocolBases {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        let set = builtin_basis_set(d, m)?;
        let family = builtin_basis_set(d, max_builtin_bases(d))?;
        let rules = correlation_rules(&set, &family)?;
        let partners = partner_set(&family, &rules)?;
        Ok(ProtocolBases {
            set,
            family,
            rules,
            partners,
        })
    }
}

/// A public `(slot, basis, outcome)` triple from Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleReport {
    pub slot: usize,
    pub basis_id: usize,
    pub outcome: usize,
}

fn uniform_pauli(rng: &mut RandomStream, d: usize) -> PauliIndex {
    PauliIndex::from_ordinal(rng.below(d * d), d).expect("ordinal below d²")
}

/// The serving server: prepares the pairs, keeps S_A and performs the Bell
/// measurements.
#[derive(Debug)]
pub struct Server {
    rng: RandomStream,
    retained: PhotonSequence,
}

impl Server {
    pub fn new(rng: RandomStream) -> Self {
        Server {
            rng,
            retained: PhotonSequence::default(),
        }
    }

    /// Creates `n` copies of `Ψ_00`, keeps the A halves and returns S_B.
    pub fn prepare(
        &mut self,
        lab: &mut Lab,
        n: usize,
        log: &mut Transcript,
    ) -> Result<PhotonSequence> {
        let d = lab.dim();
        let bell = make_bell_state(0, 0, d)?;
        let mut s_a = PhotonSequence::with_len(n);
        let mut s_b = PhotonSequence::with_len(n);
        for i in 0..n {
            let (a, b) = lab.create_pair(bell.clone())?;
            s_a.put(i, a);
            s_b.put(i, b);
        }
        self.retained = s_a;
        log.push(Actor::Alice, Event::PairsPrepared { count: n });
        Ok(s_b)
    }

    /// Measures her halves at `slots`, each in a basis drawn uniformly from
    /// the first `choices` bases of `set`, and announces the results.
    pub fn measure_samples(
        &mut self,
        lab: &mut Lab,
        set: &BasisSet,
        slots: &[usize],
        choices: usize,
        log: &mut Transcript,
    ) -> Result<Vec<SampleReport>> {
        let mut reports = Vec::with_capacity(slots.len());
        for &slot in slots {
            let photon = self
                .retained
                .take(slot)
                .ok_or_else(|| QsdcError::order(format!("Alice holds no photon at slot {slot}")))?;
            let basis_id = self.rng.below(choices);
            let outcome = lab.measure(photon, basis_by_id(set, basis_id)?)?;
            log.announce(
                Actor::Alice,
                ClassicalAnnouncement::BasisAndOutcome {
                    slot,
                    basis_id,
                    outcome,
                },
            );
            reports.push(SampleReport {
                slot,
                basis_id,
                outcome,
            });
        }
        Ok(reports)
    }

    /// Drops her halves at `slots` (partners of displaced photons).
    pub fn release(&mut self, lab: &mut Lab, set: &BasisSet, slots: &[usize]) -> Result<()> {
        for &slot in slots {
            if let Some(p) = self.retained.take(slot) {
                lab.discard(p, &set.bases()[0])?;
            }
        }
        Ok(())
    }

    /// Bell-measures every returned photon against her partner and
    /// announces each result in slot order. Slots where either photon is
    /// missing are skipped.
    pub fn bell_measure_all(
        &mut self,
        lab: &mut Lab,
        returned: &mut PhotonSequence,
        log: &mut Transcript,
    ) -> Result<BTreeMap<usize, PauliIndex>> {
        let mut out = BTreeMap::new();
        for slot in returned.live_slots() {
            let Some(a) = self.retained.take(slot) else {
                continue;
            };
            let b = returned.take(slot).expect("live slot");
            let index = lab.bell_measure(a, b)?;
            log.announce(
                Actor::Alice,
                ClassicalAnnouncement::BellResult { slot, index },
            );
            out.insert(slot, index);
        }
        Ok(out)
    }

    pub(crate) fn retained_mut(&mut self) -> &mut PhotonSequence {
        &mut self.retained
    }
}

/// Receiver Charlie: runs the first check, encrypts S_B and owns the decoys.
#[derive(Debug)]
pub struct Receiver {
    rng: RandomStream,
    held: Option<PhotonSequence>,
    key: BTreeMap<usize, PauliIndex>,
    decoys: BTreeMap<usize, (usize, usize)>,
}

impl Receiver {
    pub fn new(rng: RandomStream) -> Self {
        Receiver {
            rng,
            held: None,
            key: BTreeMap::new(),
            decoys: BTreeMap::new(),
        }
    }

    pub fn receive(&mut self, seq: PhotonSequence) {
        self.held = Some(seq);
    }

    pub fn send(&mut self) -> Result<PhotonSequence> {
        self.held
            .take()
            .ok_or_else(|| QsdcError::order("Charlie holds no sequence"))
    }

    fn held_mut(&mut self) -> Result<&mut PhotonSequence> {
        self.held
            .as_mut()
            .ok_or_else(|| QsdcError::order("Charlie holds no sequence"))
    }

    /// Uniform sample of `count` live slots, ascending.
    pub fn choose_samples(&mut self, count: usize) -> Result<Vec<usize>> {
        let live = self.held_mut()?.live_slots();
        if count > live.len() {
            return Err(QsdcError::config(
                "n_pairs",
                format!("need {count} live slots, only {} remain", live.len()),
            ));
        }
        Ok(self.rng.choose_subset(&live, count))
    }

    /// Splits `slots` into `(kept, rest)` with `keep` uniformly chosen
    /// members in `kept`.
    pub fn split_samples(&mut self, slots: &[usize], keep: usize) -> (Vec<usize>, Vec<usize>) {
        let kept = self.rng.choose_subset(slots, keep);
        let rest = slots
            .iter()
            .copied()
            .filter(|s| kept.binary_search(s).is_err())
            .collect();
        (kept, rest)
    }

    /// Measures his photons at the reported slots in the partner basis and
    /// counts mismatches against the certified outcome.
    pub fn check_samples(
        &mut self,
        lab: &mut Lab,
        bases: &ProtocolBases,
        reports: &[SampleReport],
        log: &mut Transcript,
    ) -> Result<CheckTally> {
        let mut errors = 0;
        for r in reports {
            let rule = bases.rules.get(r.basis_id).ok_or_else(|| {
                QsdcError::domain(format!("basis id {} out of range", r.basis_id))
            })?;
            let photon = self.held_mut()?.take(r.slot).ok_or_else(|| {
                QsdcError::order(format!("Charlie holds no photon at slot {}", r.slot))
            })?;
            let outcome = lab.measure(photon, basis_by_id(&bases.family, rule.partner_basis)?)?;
            log.push(
                Actor::Charlie,
                Event::SampleMeasured {
                    slot: r.slot,
                    basis_id: rule.partner_basis,
                    outcome,
                },
            );
            if rule.outcome_map.get(r.outcome) != Some(&outcome) {
                errors += 1;
            }
        }
        Ok(CheckTally::new(errors, reports.len() as u64))
    }

    /// Keeps the partners of Alice's reported measurements as decoys. Each
    /// is now an eigenstate of the partner basis; with `rotate` it is moved
    /// into a uniformly chosen basis of the set.
    pub fn keep_as_decoys(
        &mut self,
        lab: &mut Lab,
        bases: &ProtocolBases,
        reports: &[SampleReport],
        rotate: bool,
        log: &mut Transcript,
    ) -> Result<()> {
        for r in reports {
            let rule = &bases.rules[r.basis_id];
            let from = rule.partner_basis;
            let vector_index = rule.outcome_map[r.outcome];
            let target = if rotate {
                self.rng.below(bases.set.len())
            } else {
                from
            };
            let photon = self.held_mut()?.get_mut(r.slot).ok_or_else(|| {
                QsdcError::order(format!("Charlie holds no photon at slot {}", r.slot))
            })?;
            if target != from {
                let w = basis_change(&bases.family.bases()[from], &bases.family.bases()[target])?;
                lab.apply(photon, &w)?;
            }
            self.decoys.insert(r.slot, (target, vector_index));
            log.push(
                Actor::Charlie,
                Event::DecoyKept {
                    slot: r.slot,
                    basis_id: target,
                    vector_index,
                    rotated_from: (target != from).then_some(from),
                },
            );
        }
        Ok(())
    }

    /// Swaps `count` uniformly chosen live photons for fresh decoys. The
    /// displaced photons are measured in `Z_d` and discarded. Returns the
    /// decoy slots with their `(basis, vector)` labels.
    pub fn insert_fresh_decoys(
        &mut self,
        lab: &mut Lab,
        set: &BasisSet,
        count: usize,
        log: &mut Transcript,
    ) -> Result<Vec<(usize, usize, usize)>> {
        let slots = self.choose_samples(count)?;
        let d = set.dim();
        let mut out = Vec::with_capacity(count);
        for slot in slots {
            let basis_id = self.rng.below(set.len());
            let vector_index = self.rng.below(d);
            let state: QuditState = set.bases()[basis_id].vectors()[vector_index].clone();
            let displaced = self.held_mut()?.put(slot, Photon::Free(state));
            if let Some(p) = displaced {
                lab.discard(p, &set.bases()[0])?;
            }
            self.decoys.insert(slot, (basis_id, vector_index));
            log.push(
                Actor::Charlie,
                Event::DecoyPrepared {
                    slot,
                    basis_id,
                    vector_index,
                },
            );
            out.push((slot, basis_id, vector_index));
        }
        Ok(out)
    }

    /// Applies a uniformly random `U_C` to every live non-decoy photon.
    pub fn encrypt(&mut self, lab: &mut Lab, log: &mut Transcript) -> Result<()> {
        let d = lab.dim();
        let live = self.held_mut()?.live_slots();
        for slot in live {
            if self.decoys.contains_key(&slot) {
                continue;
            }
            let key = uniform_pauli(&mut self.rng, d);
            let photon = self.held_mut()?.get_mut(slot).expect("live slot");
            lab.apply(photon, &pauli_unitary_of(&key))?;
            self.key.insert(slot, key);
            log.push(Actor::Charlie, Event::KeyApplied { slot, key });
        }
        Ok(())
    }

    /// Announces every decoy's position and state, in slot order.
    pub fn reveal_decoys(&self, log: &mut Transcript) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.decoys.len());
        for (&slot, &(basis_id, vector_index)) in &self.decoys {
            log.announce(
                Actor::Charlie,
                ClassicalAnnouncement::DecoyReveal {
                    slot,
                    basis_id,
                    vector_index,
                },
            );
            out.push((slot, basis_id, vector_index));
        }
        out
    }

    pub fn key(&self) -> &BTreeMap<usize, PauliIndex> {
        &self.key
    }

    pub fn decoy_slots(&self) -> Vec<usize> {
        self.decoys.keys().copied().collect()
    }
}

/// Sender Bob: checks decoys, then codes the message and his check
/// operations.
#[derive(Debug)]
pub struct Sender {
    rng: RandomStream,
    held: Option<PhotonSequence>,
    check_ops: BTreeMap<usize, PauliIndex>,
    message: BTreeMap<usize, PauliIndex>,
}

impl Sender {
    pub fn new(rng: RandomStream) -> Self {
        Sender {
            rng,
            held: None,
            check_ops: BTreeMap::new(),
            message: BTreeMap::new(),
        }
    }

    pub fn receive(&mut self, seq: PhotonSequence) {
        self.held = Some(seq);
    }

    pub fn send(&mut self) -> Result<PhotonSequence> {
        self.held
            .take()
            .ok_or_else(|| QsdcError::order("Bob holds no sequence"))
    }

    fn held_mut(&mut self) -> Result<&mut PhotonSequence> {
        self.held
            .as_mut()
            .ok_or_else(|| QsdcError::order("Bob holds no sequence"))
    }

    /// Measures each announced decoy in its basis and counts outcomes that
    /// differ from the announced vector.
    pub fn decoy_check(
        &mut self,
        lab: &mut Lab,
        set: &BasisSet,
        reveals: &[(usize, usize, usize)],
        log: &mut Transcript,
    ) -> Result<CheckTally> {
        let mut errors = 0;
        for &(slot, basis_id, vector_index) in reveals {
            let photon = self.held_mut()?.take(slot).ok_or_else(|| {
                QsdcError::order(format!("decoy slot {slot} holds no photon at Bob"))
            })?;
            let outcome = lab.measure(photon, basis_by_id(set, basis_id)?)?;
            log.push(Actor::Bob, Event::DecoyMeasured { slot, outcome });
            if outcome != vector_index {
                errors += 1;
            }
        }
        Ok(CheckTally::new(errors, reveals.len() as u64))
    }

    /// Applies `s_e2_count` random check operations on uniformly chosen live
    /// slots and codes `message` on the rest, in slot order.
    pub fn encode(
        &mut self,
        lab: &mut Lab,
        message: &[PauliIndex],
        s_e2_count: usize,
        log: &mut Transcript,
    ) -> Result<()> {
        let d = lab.dim();
        let live = self.held_mut()?.live_slots();
        if s_e2_count > live.len() || message.len() != live.len() - s_e2_count {
            return Err(QsdcError::domain(format!(
                "message has {} symbols, expected {} ({} live slots, {s_e2_count} check slots)",
                message.len(),
                live.len().saturating_sub(s_e2_count),
                live.len()
            )));
        }
        if let Some(bad) = message.iter().find(|s| s.dim() != d) {
            return Err(QsdcError::domain(format!(
                "symbol {bad} is not in dimension {d}"
            )));
        }
        let checks = self.rng.choose_subset(&live, s_e2_count);
        let mut symbols = message.iter();
        for slot in live {
            let (op, event) = if checks.binary_search(&slot).is_ok() {
                let op = uniform_pauli(&mut self.rng, d);
                self.check_ops.insert(slot, op);
                (op, Event::CheckOpApplied { slot, op })
            } else {
                let symbol = *symbols.next().expect("length checked");
                self.message.insert(slot, symbol);
                (symbol, Event::MessageEncoded { slot, symbol })
            };
            let photon = self.held_mut()?.get_mut(slot).expect("live slot");
            lab.apply(photon, &pauli_unitary_of(&op))?;
            log.push(Actor::Bob, event);
        }
        Ok(())
    }

    /// Discloses the check operations, in slot order.
    pub fn reveal_check_ops(&self, log: &mut Transcript) -> BTreeMap<usize, PauliIndex> {
        for (&slot, &op) in &self.check_ops {
            log.announce(
                Actor::Bob,
                ClassicalAnnouncement::CheckOpReveal { slot, op },
            );
        }
        self.check_ops.clone()
    }

    pub fn message(&self) -> &BTreeMap<usize, PauliIndex> {
        &self.message
    }
}

/// Outcome of the whole-loop check plus the decoded message.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalCheck {
    pub tally: CheckTally,
    /// Check slots whose Bell result disagrees with `U_C` then `U_check`.
    pub flagged: Vec<usize>,
    /// Message symbols in slot order.
    pub decoded: Vec<PauliIndex>,
}

/// Compares each check slot's Bell result with the index predicted from the
/// key and Bob's revealed operation, then decodes every remaining keyed
/// slot as `U_A − U_C`.
pub fn final_check_and_decode(
    key: &BTreeMap<usize, PauliIndex>,
    bell: &BTreeMap<usize, PauliIndex>,
    check_ops: &BTreeMap<usize, PauliIndex>,
) -> Result<FinalCheck> {
    let mut flagged = Vec::new();
    for (&slot, op) in check_ops {
        let k = key
            .get(&slot)
            .ok_or_else(|| QsdcError::order(format!("check slot {slot} carries no key")))?;
        let expected = k.add(op)?;
        if bell.get(&slot) != Some(&expected) {
            flagged.push(slot);
        }
    }
    let mut decoded = Vec::new();
    for (&slot, k) in key {
        if check_ops.contains_key(&slot) {
            continue;
        }
        let a = bell
            .get(&slot)
            .ok_or_else(|| QsdcError::order(format!("no Bell result for message slot {slot}")))?;
        decoded.push(a.sub(k)?);
    }
    Ok(FinalCheck {
        tally: CheckTally::new(flagged.len() as u64, check_ops.len() as u64),
        flagged,
        decoded,
    })
}

/// Bookkeeping common to all three checks.
pub(crate) fn verdict(check: CheckId, tally: &CheckTally, epsilon_t: f64) -> ClassicalAnnouncement {
    if tally.rate > epsilon_t {
        ClassicalAnnouncement::AbortNotice {
            check_id: check,
            rate: tally.rate,
        }
    } else {
        ClassicalAnnouncement::CheckPassed { check }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, m: usize, d: usize) -> PauliIndex {
        PauliIndex::new(n, m, d).unwrap()
    }

    #[test]
    fn decode_inverts_key() {
        let key = BTreeMap::from([(0, p(2, 1, 3))]);
        let bell = BTreeMap::from([(0, p(2, 1, 3))]);
        let fc = final_check_and_decode(&key, &bell, &BTreeMap::new()).unwrap();
        assert_eq!(fc.decoded, vec![p(0, 0, 3)]);
        assert_eq!(fc.tally, CheckTally::new(0, 0));
    }

    #[test]
    fn tampered_check_slot_is_flagged() {
        let key = BTreeMap::from([(0, p(1, 0, 2)), (1, p(0, 1, 2)), (2, p(1, 1, 2))]);
        let ops = BTreeMap::from([(0, p(0, 1, 2)), (2, p(1, 0, 2))]);
        let mut bell = BTreeMap::from([(0, p(1, 1, 2)), (1, p(0, 1, 2)), (2, p(0, 1, 2))]);
        let fc = final_check_and_decode(&key, &bell, &ops).unwrap();
        assert!(fc.flagged.is_empty());
        assert_eq!(fc.decoded, vec![p(0, 0, 2)]);

        bell.insert(2, p(1, 1, 2));
        let fc = final_check_and_decode(&key, &bell, &ops).unwrap();
        assert_eq!(fc.flagged, vec![2]);
        assert_eq!(fc.tally.rate, 0.5);
    }

    #[test]
    fn missing_bell_result_is_an_order_error() {
        let key = BTreeMap::from([(3, p(0, 0, 2))]);
        assert!(matches!(
            final_check_and_decode(&key, &BTreeMap::new(), &BTreeMap::new()),
            Err(QsdcError::ProtocolOrder(_))
        ));
    }

    #[test]
    fn wrong_key_gives_wrong_symbol() {
        for d in [2, 3, 4] {
            for true_key in PauliIndex::all(d) {
                for msg in PauliIndex::all(d) {
                    let bell = BTreeMap::from([(0, true_key.add(&msg).unwrap())]);
                    for wrong in PauliIndex::all(d).filter(|k| *k != true_key) {
                        let key = BTreeMap::from([(0, wrong)]);
                        let fc = final_check_and_decode(&key, &bell, &BTreeMap::new()).unwrap();
                        assert_ne!(fc.decoded[0], msg);
                    }
                }
            }
        }
    }

    #[test]
    fn tally_rates() {
        assert_eq!(CheckTally::new(0, 0).rate, 0.0);
        assert_eq!(CheckTally::new(1, 4).rate, 0.25);
    }

    fn setup(d: usize, n: usize, seed: u64) -> (Lab, Server, Receiver, Transcript) {
        let mut lab = Lab::new(d, RandomStream::seeded(seed));
        let mut alice = Server::new(RandomStream::seeded(seed + 1));
        let mut charlie = Receiver::new(RandomStream::seeded(seed + 2));
        let mut log = Transcript::new();
        let s_b = alice.prepare(&mut lab, n, &mut log).unwrap();
        charlie.receive(s_b);
        (lab, alice, charlie, log)
    }

    // Projecting photon A of Ψ_00 onto |a_k⟩ leaves photon B in conj(a_k).
    #[test]
    fn kept_decoys_match_collapse_oracle() {
        for (d, m) in [(2, 3), (3, 4), (5, 2)] {
            let bases = ProtocolBases::new(d, m).unwrap();
            for rotate in [false, true] {
                let (mut lab, mut alice, mut charlie, mut log) = setup(d, 40, 3);
                let slots: Vec<usize> = (0..40).collect();
                let reports = alice
                    .measure_samples(&mut lab, &bases.set, &slots, m, &mut log)
                    .unwrap();
                charlie
                    .keep_as_decoys(&mut lab, &bases, &reports, rotate, &mut log)
                    .unwrap();
                for r in &reports {
                    let photon = charlie.held.as_ref().unwrap().get(r.slot).unwrap();
                    let state = lab.local_state(photon).unwrap();
                    let (basis_id, k) = charlie.decoys[&r.slot];
                    let recorded = &bases.family.bases()[basis_id].vectors()[k];
                    assert!(state.same_ray(recorded, 1e-9));
                    if !rotate {
                        let oracle = bases.set.bases()[r.basis_id].vectors()[r.outcome].conj();
                        assert!(state.same_ray(&oracle, 1e-9));
                    }
                }
            }
        }
    }

    #[test]
    fn key_symbols_are_uniform() {
        let d = 3;
        let n = 10_000;
        let (mut lab, _alice, mut charlie, mut log) = setup(d, n, 17);
        charlie.encrypt(&mut lab, &mut log).unwrap();
        let mut counts = vec![0f64; d * d];
        for k in charlie.key().values() {
            counts[k.ordinal()] += 1.0;
        }
        let expected = n as f64 / (d * d) as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 8 degrees of freedom; the 0.99865 quantile is about 25.9.
        assert!(chi2 < 25.9, "chi2 = {chi2}");
    }

    #[test]
    fn decoys_are_labelled_states() {
        let bases = ProtocolBases::new(3, 4).unwrap();
        let (mut lab, _alice, mut charlie, mut log) = setup(3, 30, 5);
        let inserted = charlie
            .insert_fresh_decoys(&mut lab, &bases.set, 12, &mut log)
            .unwrap();
        assert_eq!(inserted.len(), 12);
        for (slot, b, k) in inserted {
            let photon = charlie.held.as_ref().unwrap().get(slot).unwrap();
            let state = lab.local_state(photon).unwrap();
            assert!(state.approx_eq(&bases.set.bases()[b].vectors()[k], 1e-12));
        }
        assert!(charlie.insert_fresh_decoys(&mut lab, &bases.set, 31, &mut log).is_err());
    }

    #[test]
    fn missing_decoy_photon_is_an_order_error() {
        let set = ProtocolBases::new(2, 2).unwrap().family;
        let (mut lab, _alice, mut charlie, mut log) = setup(2, 4, 1);
        let mut seq = charlie.send().unwrap();
        let p = seq.take(2).unwrap();
        lab.discard(p, &set.bases()[0]).unwrap();
        let mut bob = Sender::new(RandomStream::seeded(0));
        bob.receive(seq);
        let err = bob.decoy_check(&mut lab, &set, &[(2, 0, 0)], &mut log);
        assert!(matches!(err, Err(QsdcError::ProtocolOrder(_))));
    }

    #[test]
    fn all_sixteen_qubit_chains() {
        // Bell index after U_C then U_B equals their index sum.
        for key in PauliIndex::all(2) {
            for op in PauliIndex::all(2) {
                let mut lab = Lab::new(2, RandomStream::seeded(key.ordinal() as u64));
                let (a, mut b) = lab.create_pair(make_bell_state(0, 0, 2).unwrap()).unwrap();
                lab.apply(&mut b, &pauli_unitary_of(&key)).unwrap();
                lab.apply(&mut b, &pauli_unitary_of(&op)).unwrap();
                let got = lab.bell_measure(a, b).unwrap();
                assert_eq!(
                    (got.n(), got.m()),
                    ((key.n() + op.n()) % 2, (key.m() + op.m()) % 2)
                );
            }
        }
    }
}
