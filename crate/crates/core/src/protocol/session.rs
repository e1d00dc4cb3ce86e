//! Session orchestrator for steps S1 to S7.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adversary::{
    dishonest_server_attack, dishonest_server_readout, eve_report, intercept_resend_mub,
    ChannelLeg, EveKnowledge, EveReport, EveStrategy, GroundTruth,
};
use crate::error::{QsdcError, Result};
use crate::qudit::{BasisSet, PauliIndex};
use crate::rng::{RandomStream, StreamId};

use super::config::{DecoySource, SessionConfig};
use super::parties::{
    final_check_and_decode, verdict, CheckTally, ProtocolBases, Receiver, Sender, Server,
};
use super::sequence::{ConsumeReason, Lab, PhotonSequence, SlotLedger, SlotState};
use super::transcript::{
    Actor, CheckId, ClassicalAnnouncement, Event, Transcript, TranscriptRecord,
};

/// Relay servers each leg passes through, in travel order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkPlan {
    pub relays: BTreeMap<ChannelLeg, Vec<u32>>,
}

impl LinkPlan {
    /// Every leg is a single direct link.
    pub fn direct() -> Self {
        Self::default()
    }

    pub fn relays(&self, leg: ChannelLeg) -> &[u32] {
        self.relays.get(&leg).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SessionStatus {
    Completed,
    Aborted { check_id: CheckId },
}

/// Per-check tallies. `None` for a check that never ran.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub first_check: Option<CheckTally>,
    pub decoy_check: Option<CheckTally>,
    pub final_check: Option<CheckTally>,
}

impl ErrorRates {
    pub fn get(&self, check: CheckId) -> Option<CheckTally> {
        match check {
            CheckId::First => self.first_check,
            CheckId::Decoy => self.decoy_check,
            CheckId::Final => self.final_check,
        }
    }

    fn set(&mut self, check: CheckId, tally: CheckTally) {
        match check {
            CheckId::First => self.first_check = Some(tally),
            CheckId::Decoy => self.decoy_check = Some(tally),
            CheckId::Final => self.final_check = Some(tally),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub status: SessionStatus,
    /// Empty unless the session completed.
    pub decoded_message: Vec<PauliIndex>,
    pub error_rates: ErrorRates,
    pub eve_report: EveReport,
    pub transcript: Vec<TranscriptRecord>,
}

impl SessionResult {
    pub fn is_completed(&self) -> bool {
        self.status == SessionStatus::Completed
    }

    /// Bob's symbols in slot order, read from his private records.
    pub fn sent_message(&self) -> Vec<PauliIndex> {
        self.transcript
            .iter()
            .filter_map(|r| match r.event {
                Event::MessageEncoded { symbol, .. } => Some(symbol),
                _ => None,
            })
            .collect()
    }

    /// Message bits delivered: `len · 2·log2(d)` when completed, else 0.
    pub fn delivered_bits(&self, d: usize) -> f64 {
        if self.is_completed() {
            self.decoded_message.len() as f64 * PauliIndex::bits_per_symbol(d)
        } else {
            0.0
        }
    }

    pub fn announcements(&self) -> impl Iterator<Item = (Actor, ClassicalAnnouncement)> + '_ {
        self.transcript
            .iter()
            .filter_map(|r| r.event.announcement().map(|a| (r.actor, a)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Fresh,
    Prepared,
    FirstChecked,
    Encrypted,
    DecoyChecked,
    Encoded,
    Measured,
    Done,
}

/// One session, driven step by step or end to end with [`Session::run`].
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    bases: ProtocolBases,
    plan: LinkPlan,
    lab: Lab,
    alice: Server,
    charlie: Receiver,
    bob: Sender,
    eve_rng: RandomStream,
    knowledge: EveKnowledge,
    log: Transcript,
    ledger: SlotLedger,
    stage: Stage,
    rates: ErrorRates,
    aborted_at: Option<CheckId>,
    returned: Option<PhotonSequence>,
    bell: BTreeMap<usize, PauliIndex>,
    decoded: Vec<PauliIndex>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        Self::with_links(config, LinkPlan::direct())
    }

    pub fn with_links(config: SessionConfig, plan: LinkPlan) -> Result<Self> {
        config.validate()?;
        let bases = ProtocolBases::new(config.d, config.m_bases)?;
        let seed = config.seed;
        Ok(Session {
            lab: Lab::new(config.d, RandomStream::substream(seed, StreamId::Nature)),
            alice: Server::new(RandomStream::substream(seed, StreamId::Server)),
            charlie: Receiver::new(RandomStream::substream(seed, StreamId::Receiver)),
            bob: Sender::new(RandomStream::substream(seed, StreamId::Sender)),
            eve_rng: RandomStream::substream(seed, StreamId::Adversary),
            knowledge: EveKnowledge::blank(config.d, config.n_pairs),
            log: Transcript::new(),
            ledger: SlotLedger::new(config.n_pairs),
            stage: Stage::Fresh,
            rates: ErrorRates::default(),
            aborted_at: None,
            returned: None,
            bell: BTreeMap::new(),
            decoded: Vec::new(),
            bases,
            plan,
            config,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn basis_set(&self) -> &BasisSet {
        &self.bases.set
    }

    pub fn transcript(&self) -> &Transcript {
        &self.log
    }

    pub fn slot_states(&self) -> &[SlotState] {
        self.ledger.states()
    }

    pub fn error_rates(&self) -> ErrorRates {
        self.rates
    }

    pub fn aborted_at(&self) -> Option<CheckId> {
        self.aborted_at
    }

    /// Live view of the physical store, for tests and diagnostics.
    pub fn lab(&self) -> &Lab {
        &self.lab
    }

    fn expect_stage(&self, want: Stage, step: &str) -> Result<()> {
        if self.aborted_at.is_some() {
            return Err(QsdcError::order(format!("{step}: session already aborted")));
        }
        if self.stage != want {
            return Err(QsdcError::order(format!(
                "{step} called at stage {:?}, expected {want:?}",
                self.stage
            )));
        }
        Ok(())
    }

    /// Sends `seq` down `leg`, through its relays and past any attacker.
    fn transmit(&mut self, leg: ChannelLeg, mut seq: PhotonSequence) -> Result<PhotonSequence> {
        self.log.push(
            Actor::Channel,
            Event::Transmit {
                leg,
                photons: seq.live_count(),
            },
        );
        let (tapped, at_relay) = match &self.config.eve {
            EveStrategy::InterceptResend { legs, at_relay } => (legs.contains(&leg), *at_relay),
            _ => (false, None),
        };
        if tapped && at_relay.is_none() {
            self.intercept(leg, None, &mut seq)?;
        }
        let relays = self.plan.relays(leg).to_vec();
        for relay in relays {
            self.log.push(Actor::Channel, Event::Hop { leg, relay });
            if tapped && at_relay == Some(relay) {
                self.intercept(leg, Some(relay), &mut seq)?;
            }
        }
        if self.config.eve == EveStrategy::DishonestServer && leg == ChannelLeg::CharlieToBob {
            let photons = seq.live_count();
            self.log.push(
                Actor::Eve,
                Event::Intercepted {
                    leg,
                    relay: None,
                    photons,
                },
            );
            let guesses = dishonest_server_attack(
                self.alice.retained_mut(),
                &mut seq,
                &mut self.lab,
                &mut self.knowledge,
            )?;
            for (slot, guess) in guesses {
                self.log.push(Actor::Eve, Event::KeyGuess { slot, guess });
            }
        }
        self.log.push(Actor::Channel, Event::Deliver { leg });
        Ok(seq)
    }

    fn intercept(
        &mut self,
        leg: ChannelLeg,
        relay: Option<u32>,
        seq: &mut PhotonSequence,
    ) -> Result<()> {
        // On the first leg the photons are correlated with Alice's halves in
        // the partner bases, so that is the set worth guessing from.
        let set = match leg {
            ChannelLeg::AliceToCharlie => &self.bases.partners,
            _ => &self.bases.set,
        };
        let photons = intercept_resend_mub(seq, set, &mut self.lab, &mut self.eve_rng)?;
        self.log.push(
            Actor::Eve,
            Event::Intercepted {
                leg,
                relay,
                photons,
            },
        );
        Ok(())
    }

    fn conclude(&mut self, check: CheckId, tally: CheckTally, actor: Actor) {
        self.log.push(
            actor,
            Event::CheckTallied {
                check,
                errors: tally.errors,
                samples: tally.samples,
            },
        );
        let a = verdict(check, &tally, self.config.epsilon_t);
        if matches!(a, ClassicalAnnouncement::AbortNotice { .. }) {
            self.aborted_at = Some(check);
        }
        self.log.announce(actor, a);
        self.rates.set(check, tally);
    }

    /// S1: prepares `N` copies of `Ψ_00` and sends S_B to Charlie.
    pub fn prepare_sequences(&mut self) -> Result<()> {
        self.expect_stage(Stage::Fresh, "prepare_sequences")?;
        let s_b = self
            .alice
            .prepare(&mut self.lab, self.config.n_pairs, &mut self.log)?;
        let s_b = self.transmit(ChannelLeg::AliceToCharlie, s_b)?;
        self.charlie.receive(s_b);
        self.stage = Stage::Prepared;
        Ok(())
    }

    /// S2 with fresh decoys: correlation check on `⌈p·N⌉` sampled pairs.
    pub fn first_check(&mut self) -> Result<CheckTally> {
        self.expect_stage(Stage::Prepared, "first_check")?;
        if self.config.decoy_source != DecoySource::Fresh {
            return Err(QsdcError::config(
                "decoy_source",
                "first_check runs only with fresh decoys; use decoys_by_measurement",
            ));
        }
        let slots = self
            .charlie
            .choose_samples(self.config.first_check_size())?;
        self.log.announce(
            Actor::Charlie,
            ClassicalAnnouncement::SampleRequest {
                check: CheckId::First,
                slots: slots.clone(),
            },
        );
        let m = self.bases.set.len();
        let reports =
            self.alice
                .measure_samples(&mut self.lab, &self.bases.set, &slots, m, &mut self.log)?;
        let tally =
            self.charlie
                .check_samples(&mut self.lab, &self.bases, &reports, &mut self.log)?;
        for &slot in &slots {
            self.ledger.transition(
                slot,
                SlotState::Consumed {
                    reason: ConsumeReason::FirstCheck,
                },
            )?;
        }
        self.conclude(CheckId::First, tally, Actor::Charlie);
        self.stage = Stage::FirstChecked;
        Ok(tally)
    }

    /// S2 with decoys made by measurement: Alice measures `n1 + n2` halves in
    /// `Z_d`/`X_d`; Charlie checks `n1` and keeps `n2` as decoys.
    pub fn decoys_by_measurement(&mut self) -> Result<CheckTally> {
        self.expect_stage(Stage::Prepared, "decoys_by_measurement")?;
        let DecoySource::ByMeasurement { n1, n2, rotate } = self.config.decoy_source else {
            return Err(QsdcError::config(
                "decoy_source",
                "decoys_by_measurement needs decoy_source by_measurement",
            ));
        };
        let slots = self.charlie.choose_samples(n1 + n2)?;
        self.log.announce(
            Actor::Charlie,
            ClassicalAnnouncement::SampleRequest {
                check: CheckId::First,
                slots: slots.clone(),
            },
        );
        let choices = self.bases.set.len().min(2);
        let reports = self.alice.measure_samples(
            &mut self.lab,
            &self.bases.set,
            &slots,
            choices,
            &mut self.log,
        )?;
        let (kept, checked) = self.charlie.split_samples(&slots, n2);
        let (keep_reports, check_reports): (Vec<_>, Vec<_>) = reports
            .into_iter()
            .partition(|r| kept.binary_search(&r.slot).is_ok());
        let tally = self.charlie.check_samples(
            &mut self.lab,
            &self.bases,
            &check_reports,
            &mut self.log,
        )?;
        self.charlie.keep_as_decoys(
            &mut self.lab,
            &self.bases,
            &keep_reports,
            rotate,
            &mut self.log,
        )?;
        for &slot in &checked {
            self.ledger.transition(
                slot,
                SlotState::Consumed {
                    reason: ConsumeReason::FirstCheck,
                },
            )?;
        }
        for &slot in &kept {
            self.mark_decoy(slot)?;
        }
        self.conclude(CheckId::First, tally, Actor::Charlie);
        self.stage = Stage::FirstChecked;
        Ok(tally)
    }

    fn mark_decoy(&mut self, slot: usize) -> Result<()> {
        let (basis_id, vector_index) = self
            .log
            .records()
            .iter()
            .rev()
            .find_map(|r| match r.event {
                Event::DecoyPrepared {
                    slot: s,
                    basis_id,
                    vector_index,
                }
                | Event::DecoyKept {
                    slot: s,
                    basis_id,
                    vector_index,
                    ..
                } if s == slot => Some((basis_id, vector_index)),
                _ => None,
            })
            .expect("decoy was just recorded");
        self.ledger.transition(
            slot,
            SlotState::Decoy {
                basis_id,
                vector_index,
            },
        )
    }

    /// S3: Charlie inserts fresh decoys (if so configured), encrypts every
    /// remaining entangled half and sends S_B to Bob.
    pub fn encrypt_and_insert_decoys(&mut self) -> Result<()> {
        self.expect_stage(Stage::FirstChecked, "encrypt_and_insert_decoys")?;
        if self.config.decoy_source == DecoySource::Fresh {
            let inserted = self.charlie.insert_fresh_decoys(
                &mut self.lab,
                &self.bases.set,
                self.config.decoy_count,
                &mut self.log,
            )?;
            for (slot, _, _) in inserted {
                self.mark_decoy(slot)?;
            }
        }
        self.charlie.encrypt(&mut self.lab, &mut self.log)?;
        let s_b = self.charlie.send()?;
        let s_b = self.transmit(ChannelLeg::CharlieToBob, s_b)?;
        self.bob.receive(s_b);
        self.stage = Stage::Encrypted;
        Ok(())
    }

    /// S4: Charlie reveals the decoys and Bob checks them. Alice drops the
    /// partners of displaced photons.
    pub fn decoy_check(&mut self) -> Result<CheckTally> {
        self.expect_stage(Stage::Encrypted, "decoy_check")?;
        let reveals = self.charlie.reveal_decoys(&mut self.log);
        let slots: Vec<usize> = reveals.iter().map(|r| r.0).collect();
        self.alice.release(&mut self.lab, &self.bases.set, &slots)?;
        let tally =
            self.bob
                .decoy_check(&mut self.lab, &self.bases.family, &reveals, &mut self.log)?;
        for &slot in &slots {
            self.ledger.transition(
                slot,
                SlotState::Consumed {
                    reason: ConsumeReason::DecoyCheck,
                },
            )?;
        }
        self.conclude(CheckId::Decoy, tally, Actor::Bob);
        self.stage = Stage::DecoyChecked;
        Ok(tally)
    }

    /// S5: Bob codes `message` and his check operations, then returns S_B
    /// to Alice.
    pub fn encode_message(&mut self, message: &[PauliIndex]) -> Result<()> {
        self.expect_stage(Stage::DecoyChecked, "encode_message")?;
        self.bob.encode(
            &mut self.lab,
            message,
            self.config.s_e2_count,
            &mut self.log,
        )?;
        let s_b = self.bob.send()?;
        let s_b = self.transmit(ChannelLeg::BobToAlice, s_b)?;
        self.returned = Some(s_b);
        self.stage = Stage::Encoded;
        Ok(())
    }

    /// S6: Alice Bell-measures each returned pair and announces the result.
    /// A dishonest server instead reads Bob's operations and announces
    /// `key guess + operation`.
    pub fn server_bell_measure(&mut self) -> Result<BTreeMap<usize, PauliIndex>> {
        self.expect_stage(Stage::Encoded, "server_bell_measure")?;
        let mut returned = self.returned.take().expect("set by encode_message");
        let results = if self.config.eve == EveStrategy::DishonestServer {
            let reads = dishonest_server_readout(
                self.alice.retained_mut(),
                &mut returned,
                &mut self.lab,
                &mut self.knowledge,
            )?;
            let mut out = BTreeMap::new();
            for (slot, op) in reads {
                self.log
                    .push(Actor::Eve, Event::MessageGuess { slot, guess: op });
                let key_guess = self.knowledge.guessed_key[slot]
                    .unwrap_or_else(|| PauliIndex::identity(self.config.d).expect("valid d"));
                let index = key_guess.add(&op)?;
                self.log.announce(
                    Actor::Alice,
                    ClassicalAnnouncement::BellResult { slot, index },
                );
                out.insert(slot, index);
            }
            out
        } else {
            self.alice
                .bell_measure_all(&mut self.lab, &mut returned, &mut self.log)?
        };
        for &slot in results.keys() {
            self.ledger.transition(
                slot,
                SlotState::Consumed {
                    reason: ConsumeReason::BellMeasured,
                },
            )?;
        }
        self.bell = results.clone();
        self.stage = Stage::Measured;
        Ok(results)
    }

    /// S7: Bob reveals his check operations, Charlie checks them and, if the
    /// check passes, decodes the message.
    pub fn final_check_and_decode(&mut self) -> Result<CheckTally> {
        self.expect_stage(Stage::Measured, "final_check_and_decode")?;
        let ops = self.bob.reveal_check_ops(&mut self.log);
        let fc = final_check_and_decode(self.charlie.key(), &self.bell, &ops)?;
        self.conclude(CheckId::Final, fc.tally, Actor::Charlie);
        if self.aborted_at.is_none() {
            self.decoded = fc.decoded;
        }
        self.stage = Stage::Done;
        Ok(fc.tally)
    }

    /// Runs every remaining step, stopping at the first failed check.
    pub fn run(mut self, message: &[PauliIndex]) -> Result<SessionResult> {
        self.prepare_sequences()?;
        match self.config.decoy_source {
            DecoySource::Fresh => self.first_check()?,
            DecoySource::ByMeasurement { .. } => self.decoys_by_measurement()?,
        };
        if self.aborted_at.is_none() {
            self.encrypt_and_insert_decoys()?;
            self.decoy_check()?;
        }
        if self.aborted_at.is_none() {
            self.encode_message(message)?;
            self.server_bell_measure()?;
            self.final_check_and_decode()?;
        }
        self.finish()
    }

    /// Closes the session and scores the attacker against the truth.
    pub fn finish(mut self) -> Result<SessionResult> {
        let status = match self.aborted_at {
            Some(check_id) => SessionStatus::Aborted { check_id },
            None if self.stage == Stage::Done => SessionStatus::Completed,
            None => return Err(QsdcError::order("finish called before the final check")),
        };
        if self.aborted_at.is_some() {
            for slot in 0..self.config.n_pairs {
                if !matches!(self.ledger.get(slot), Some(SlotState::Consumed { .. })) {
                    self.ledger.transition(
                        slot,
                        SlotState::Consumed {
                            reason: ConsumeReason::Removed,
                        },
                    )?;
                }
            }
        }
        let truth = GroundTruth {
            key: self.charlie.key().clone(),
            message: self.bob.message().clone(),
        };
        Ok(SessionResult {
            status,
            decoded_message: self.decoded,
            error_rates: self.rates,
            eve_report: eve_report(&self.knowledge, &truth),
            transcript: self.log.into_records(),
        })
    }
}

/// A uniformly random message of the session's capacity, drawn from the
/// message stream of `seed`.
pub fn random_message(config: &SessionConfig) -> Vec<PauliIndex> {
    let mut rng = RandomStream::substream(config.seed, StreamId::Message);
    let d = config.d;
    (0..config.message_capacity())
        .map(|_| PauliIndex::from_ordinal(rng.below(d * d), d).expect("ordinal below d²"))
        .collect()
}

/// Runs a full session with a random message.
pub fn run_session(config: &SessionConfig) -> Result<SessionResult> {
    config.validate()?;
    let message = random_message(config);
    Session::new(config.clone())?.run(&message)
}

/// Runs a full session carrying `message`.
pub fn run_session_with_message(
    config: &SessionConfig,
    message: &[PauliIndex],
) -> Result<SessionResult> {
    Session::new(config.clone())?.run(message)
}
