//! Rebuilds a session result from its transcript alone.

use std::collections::BTreeMap;

use crate::adversary::{eve_report, EveKnowledge, GroundTruth};
use crate::error::{QsdcError, Result};
use crate::qudit::PauliIndex;

use super::config::SessionConfig;
use super::parties::{final_check_and_decode, verdict, CheckTally, ProtocolBases};
use super::session::{ErrorRates, SessionResult, SessionStatus};
use super::transcript::{CheckId, ClassicalAnnouncement, Event, TranscriptRecord};

struct Bounds {
    n: usize,
    d: usize,
    m: usize,
}

impl Bounds {
    fn slot(&self, slot: usize) -> Result<usize> {
        if slot < self.n {
            Ok(slot)
        } else {
            Err(QsdcError::transcript(format!(
                "slot {slot} outside 0..{}",
                self.n
            )))
        }
    }

    fn basis(&self, id: usize) -> Result<usize> {
        if id < self.m {
            Ok(id)
        } else {
            Err(QsdcError::transcript(format!(
                "basis id {id} outside 0..{}",
                self.m
            )))
        }
    }

    fn outcome(&self, k: usize) -> Result<usize> {
        if k < self.d {
            Ok(k)
        } else {
            Err(QsdcError::transcript(format!(
                "outcome {k} outside 0..{}",
                self.d
            )))
        }
    }

    fn pauli(&self, p: PauliIndex) -> Result<PauliIndex> {
        if p.dim() == self.d {
            Ok(p)
        } else {
            Err(QsdcError::transcript(format!(
                "operator {p} is not in dimension {}",
                self.d
            )))
        }
    }
}

/// Recomputes every check, the verdicts, the decoded message and the
/// attacker score from `records` under `config`, and fails if any recorded
/// verdict or tally disagrees with the recomputation.
pub fn replay_transcript(
    config: &SessionConfig,
    records: &[TranscriptRecord],
) -> Result<SessionResult> {
    config
        .validate()
        .map_err(|e| QsdcError::transcript(format!("config does not validate: {e}")))?;
    let bases = ProtocolBases::new(config.d, config.m_bases)?;
    let rules = &bases.rules;
    let b = Bounds {
        n: config.n_pairs,
        d: config.d,
        m: bases.family.len(),
    };

    let mut alice_reports: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut charlie_samples: Vec<(usize, usize, usize)> = Vec::new();
    let mut reveals: BTreeMap<usize, usize> = BTreeMap::new();
    let mut bob_decoys: Vec<(usize, usize)> = Vec::new();
    let mut key = BTreeMap::new();
    let mut message = BTreeMap::new();
    let mut check_ops = BTreeMap::new();
    let mut bell = BTreeMap::new();
    let mut tallied: BTreeMap<CheckId, (u64, u64)> = BTreeMap::new();
    let mut verdicts: Vec<ClassicalAnnouncement> = Vec::new();
    let mut knowledge = EveKnowledge::blank(config.d, config.n_pairs);

    for (i, r) in records.iter().enumerate() {
        if r.seq_no != i as u64 {
            return Err(QsdcError::transcript(format!(
                "record {i} has seq_no {}",
                r.seq_no
            )));
        }
        if r.visibility != r.event.visibility() {
            return Err(QsdcError::transcript(format!(
                "record {i} has the wrong visibility"
            )));
        }
        match r.event {
            Event::BasisAndOutcome {
                slot,
                basis_id,
                outcome,
            } => {
                if basis_id >= rules.len() {
                    return Err(QsdcError::transcript(format!(
                        "Alice used basis {basis_id} outside the set"
                    )));
                }
                alice_reports.insert(b.slot(slot)?, (basis_id, b.outcome(outcome)?));
            }
            Event::SampleMeasured {
                slot,
                basis_id,
                outcome,
            } => {
                charlie_samples.push((b.slot(slot)?, b.basis(basis_id)?, b.outcome(outcome)?));
            }
            Event::DecoyReveal {
                slot,
                basis_id,
                vector_index,
            } => {
                b.basis(basis_id)?;
                reveals.insert(b.slot(slot)?, b.outcome(vector_index)?);
            }
            Event::DecoyMeasured { slot, outcome } => {
                bob_decoys.push((b.slot(slot)?, b.outcome(outcome)?));
            }
            Event::KeyApplied { slot, key: k } => {
                key.insert(b.slot(slot)?, b.pauli(k)?);
            }
            Event::MessageEncoded { slot, symbol } => {
                message.insert(b.slot(slot)?, b.pauli(symbol)?);
            }
            Event::CheckOpReveal { slot, op } => {
                check_ops.insert(b.slot(slot)?, b.pauli(op)?);
            }
            Event::BellResult { slot, index } => {
                bell.insert(b.slot(slot)?, b.pauli(index)?);
            }
            Event::CheckTallied {
                check,
                errors,
                samples,
            } => {
                tallied.insert(check, (errors, samples));
            }
            Event::KeyGuess { slot, guess } => {
                let slot = b.slot(slot)?;
                knowledge.guessed_key[slot] = Some(b.pauli(guess)?);
                knowledge.confidence[slot] = 1.0;
            }
            Event::MessageGuess { slot, guess } => {
                knowledge.guessed_message[b.slot(slot)?] = Some(b.pauli(guess)?);
            }
            Event::CheckPassed { .. } | Event::AbortNotice { .. } => {
                verdicts.push(r.event.announcement().expect("announcement event"));
            }
            _ => {}
        }
    }

    let first = {
        let mut errors = 0;
        for &(slot, basis_id, outcome) in &charlie_samples {
            let &(a_basis, a_outcome) = alice_reports.get(&slot).ok_or_else(|| {
                QsdcError::transcript(format!(
                    "slot {slot} measured by Charlie without Alice's report"
                ))
            })?;
            let rule = &rules[a_basis];
            if rule.partner_basis != basis_id {
                return Err(QsdcError::transcript(format!(
                    "slot {slot}: Charlie used basis {basis_id}, partner of {a_basis} is {}",
                    rule.partner_basis
                )));
            }
            if rule.outcome_map[a_outcome] != outcome {
                errors += 1;
            }
        }
        CheckTally::new(errors, charlie_samples.len() as u64)
    };
    let decoy = {
        let mut errors = 0;
        for &(slot, outcome) in &bob_decoys {
            let want = reveals.get(&slot).ok_or_else(|| {
                QsdcError::transcript(format!("slot {slot} measured by Bob but never revealed"))
            })?;
            if *want != outcome {
                errors += 1;
            }
        }
        CheckTally::new(errors, bob_decoys.len() as u64)
    };

    let mut rates = ErrorRates::default();
    let mut status = None;
    let mut decoded = Vec::new();
    let order = [CheckId::First, CheckId::Decoy, CheckId::Final];
    if verdicts.len() > order.len() {
        return Err(QsdcError::transcript("more verdicts than checks"));
    }
    for (announced, check) in verdicts.iter().zip(order) {
        if status.is_some() {
            return Err(QsdcError::transcript("verdict after an abort"));
        }
        let tally = match check {
            CheckId::First => first,
            CheckId::Decoy => decoy,
            CheckId::Final => {
                let fc = final_check_and_decode(&key, &bell, &check_ops)
                    .map_err(|e| QsdcError::transcript(format!("final check: {e}")))?;
                decoded = fc.decoded;
                fc.tally
            }
        };
        if tallied.get(&check) != Some(&(tally.errors, tally.samples)) {
            return Err(QsdcError::transcript(format!(
                "{check:?} check: recorded tally {:?} differs from recomputed ({}, {})",
                tallied.get(&check),
                tally.errors,
                tally.samples
            )));
        }
        let expected = verdict(check, &tally, config.epsilon_t);
        if *announced != expected {
            return Err(QsdcError::transcript(format!(
                "{check:?} check: announced {announced:?}, recomputed {expected:?}"
            )));
        }
        match check {
            CheckId::First => rates.first_check = Some(tally),
            CheckId::Decoy => rates.decoy_check = Some(tally),
            CheckId::Final => rates.final_check = Some(tally),
        }
        if let ClassicalAnnouncement::AbortNotice { .. } = expected {
            status = Some(SessionStatus::Aborted { check_id: check });
        } else if check == CheckId::Final {
            status = Some(SessionStatus::Completed);
        }
    }
    let status = status
        .ok_or_else(|| QsdcError::transcript("transcript ends before the session concluded"))?;
    if status != SessionStatus::Completed {
        decoded.clear();
    }

    let truth = GroundTruth { key, message };
    Ok(SessionResult {
        status,
        decoded_message: decoded,
        error_rates: rates,
        eve_report: eve_report(&knowledge, &truth),
        transcript: records.to_vec(),
    })
}
