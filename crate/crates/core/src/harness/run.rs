use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{ChannelLeg, EveStrategy};
use crate::error::{QsdcError, Result};
use crate::netsim::{run_network_session, SessionRoute};
use crate::protocol::{
    run_session, write_transcript, CheckId, CheckTally, SessionConfig, SessionResult,
    SessionStatus,
};
use crate::stats::{estimate_rate, theoretical_eve_error_rate, uniform_substitution_error_rate, RateEstimate};

use super::config::RunConfig;

/// Version of the report JSON layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One trial, without its transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub status: SessionStatus,
    pub first_check: Option<CheckTally>,
    pub decoy_check: Option<CheckTally>,
    pub final_check: Option<CheckTally>,
    pub message_symbols: usize,
    /// Fraction of decoded symbols equal to the sent ones; `None` unless
    /// the session completed.
    pub fidelity: Option<f64>,
    pub delivered_bits: f64,
    pub key_recovery_rate: Option<f64>,
    pub message_recovery_rate: Option<f64>,
}

impl TrialSummary {
    pub fn from_result(trial: usize, config: &SessionConfig, r: &SessionResult) -> Self {
        let sent = r.sent_message();
        let fidelity = r.is_completed().then(|| {
            if sent.is_empty() {
                1.0
            } else {
                let same = sent.iter().zip(&r.decoded_message).filter(|(a, b)| a == b).count();
                same as f64 / sent.len() as f64
            }
        });
        TrialSummary {
            trial,
            seed: config.seed,
            status: r.status,
            first_check: r.error_rates.first_check,
            decoy_check: r.error_rates.decoy_check,
            final_check: r.error_rates.final_check,
            message_symbols: sent.len(),
            fidelity,
            delivered_bits: r.delivered_bits(config.d),
            key_recovery_rate: r.eve_report.key_recovery_rate,
            message_recovery_rate: r.eve_report.message_recovery_rate,
        }
    }

    pub fn tally(&self, check: CheckId) -> Option<CheckTally> {
        match check {
            CheckId::First => self.first_check,
            CheckId::Decoy => self.decoy_check,
            CheckId::Final => self.final_check,
        }
    }
}

/// The check where the configured attack first shows, and the per-sample
/// error rate it should cause there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub check: CheckId,
    /// `(M·d + 1 − M − d)/(M·d)` for the configured `d` and `M`.
    pub theoretical_eve_error_rate: f64,
    /// Expected rate at `check` under the configured attack.
    pub expected_rate: f64,
}

pub fn expectation(config: &SessionConfig) -> Result<Expectation> {
    let eps = theoretical_eve_error_rate(config.d, config.m_bases)?;
    let (check, expected_rate) = match &config.eve {
        EveStrategy::None => (CheckId::Decoy, 0.0),
        EveStrategy::InterceptResend { legs, .. } => match legs.iter().next() {
            Some(ChannelLeg::AliceToCharlie) => (CheckId::First, eps),
            Some(ChannelLeg::CharlieToBob) => (CheckId::Decoy, eps),
            Some(ChannelLeg::BobToAlice) => (CheckId::Final, uniform_substitution_error_rate(config.d)),
            None => (CheckId::Decoy, 0.0),
        },
        EveStrategy::DishonestServer => (CheckId::Decoy, uniform_substitution_error_rate(config.d)),
    };
    Ok(Expectation { check, theoretical_eve_error_rate: eps, expected_rate })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerCheck<T> {
    pub first_check: T,
    pub decoy_check: T,
    pub final_check: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub completed: usize,
    pub aborted: usize,
    pub abort_fraction: f64,
    pub aborted_at: PerCheck<usize>,
    /// Mean per-trial rate over the trials where the check ran.
    pub mean_error_rates: PerCheck<Option<f64>>,
    /// Mean fidelity over completed trials.
    pub message_fidelity: Option<f64>,
    pub delivered_bits: f64,
    pub mean_key_recovery_rate: Option<f64>,
    pub mean_message_recovery_rate: Option<f64>,
    #[serde(flatten)]
    pub expectation: Expectation,
    /// Errors and samples at `check`, pooled over all trials.
    pub empirical: Option<RateEstimate>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(trials: &[TrialSummary], expectation: Expectation) -> Aggregate {
    let completed = trials.iter().filter(|t| t.status == SessionStatus::Completed).count();
    let mut aborted_at = PerCheck::default();
    for t in trials {
        match t.status {
            SessionStatus::Aborted { check_id: CheckId::First } => aborted_at.first_check += 1,
            SessionStatus::Aborted { check_id: CheckId::Decoy } => aborted_at.decoy_check += 1,
            SessionStatus::Aborted { check_id: CheckId::Final } => aborted_at.final_check += 1,
            SessionStatus::Completed => {}
        }
    }
    let mean_rate = |c: CheckId| mean(trials.iter().filter_map(|t| t.tally(c)).map(|x| x.rate));
    let (errors, samples) = trials
        .iter()
        .filter_map(|t| t.tally(expectation.check))
        .fold((0, 0), |(e, s), x| (e + x.errors, s + x.samples));
    Aggregate {
        trials: trials.len(),
        completed,
        aborted: trials.len() - completed,
        abort_fraction: (trials.len() - completed) as f64 / trials.len().max(1) as f64,
        aborted_at,
        mean_error_rates: PerCheck {
            first_check: mean_rate(CheckId::First),
            decoy_check: mean_rate(CheckId::Decoy),
            final_check: mean_rate(CheckId::Final),
        },
        message_fidelity: mean(trials.iter().filter_map(|t| t.fidelity)),
        delivered_bits: trials.iter().map(|t| t.delivered_bits).sum(),
        mean_key_recovery_rate: mean(trials.iter().filter_map(|t| t.key_recovery_rate)),
        mean_message_recovery_rate: mean(trials.iter().filter_map(|t| t.message_recovery_rate)),
        expectation,
        empirical: estimate_rate(errors, samples).ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<SessionRoute>,
    pub trials: Vec<TrialSummary>,
    pub aggregate: Aggregate,
}

/// How to execute trials.
#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` or 1 runs sequentially.
    pub parallel: Option<usize>,
    /// Directory to receive one NDJSON transcript per trial.
    pub transcripts: Option<&'a Path>,
}

/// Runs trial `t` of `cfg`.
pub fn run_trial(cfg: &RunConfig, trial: usize) -> Result<SessionResult> {
    let sc = cfg.session_config(trial);
    match cfg.placement()? {
        Some(p) => run_network_session(&p.topology, &p.route, &sc),
        None => run_session(&sc),
    }
}

pub fn transcript_file_name(trial: usize) -> String {
    format!("trial-{trial:05}.ndjson")
}

/// Runs every trial of `cfg` with seeds `seed, seed+1, …` and summarises
/// them. Output does not depend on `parallel`.
pub fn cmd_run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let route = cfg.placement()?.map(|p| p.route);
    if let Some(dir) = opts.transcripts {
        std::fs::create_dir_all(dir)?;
    }
    let one = |t: usize| -> Result<TrialSummary> {
        let r = run_trial(cfg, t)?;
        if let Some(dir) = opts.transcripts {
            std::fs::write(dir.join(transcript_file_name(t)), write_transcript(&r.transcript))?;
        }
        Ok(TrialSummary::from_result(t, &cfg.session_config(t), &r))
    };
    let trials: Vec<TrialSummary> = match opts.parallel {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| QsdcError::Io(e.to_string()))?;
            pool.install(|| (0..cfg.trials).into_par_iter().map(one).collect::<Result<_>>())?
        }
        _ => (0..cfg.trials).map(one).collect::<Result<_>>()?,
    };
    let aggregate = aggregate(&trials, expectation(&cfg.session_config(0))?);
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        route,
        trials,
        aggregate,
    })
}

pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CsvTrial {
    trial: usize,
    seed: u64,
    status: &'static str,
    aborted_at: Option<&'static str>,
    first_errors: Option<u64>,
    first_samples: Option<u64>,
    first_rate: Option<f64>,
    decoy_errors: Option<u64>,
    decoy_samples: Option<u64>,
    decoy_rate: Option<f64>,
    final_errors: Option<u64>,
    final_samples: Option<u64>,
    final_rate: Option<f64>,
    message_symbols: usize,
    fidelity: Option<f64>,
    delivered_bits: f64,
    key_recovery_rate: Option<f64>,
    message_recovery_rate: Option<f64>,
}

pub(crate) fn check_name(c: CheckId) -> &'static str {
    match c {
        CheckId::First => "first",
        CheckId::Decoy => "decoy",
        CheckId::Final => "final",
    }
}

/// One CSV row per trial.
pub fn report_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in &report.trials {
        let (status, aborted_at) = match t.status {
            SessionStatus::Completed => ("completed", None),
            SessionStatus::Aborted { check_id } => ("aborted", Some(check_name(check_id))),
        };
        w.serialize(CsvTrial {
            trial: t.trial,
            seed: t.seed,
            status,
            aborted_at,
            first_errors: t.first_check.map(|x| x.errors),
            first_samples: t.first_check.map(|x| x.samples),
            first_rate: t.first_check.map(|x| x.rate),
            decoy_errors: t.decoy_check.map(|x| x.errors),
            decoy_samples: t.decoy_check.map(|x| x.samples),
            decoy_rate: t.decoy_check.map(|x| x.rate),
            final_errors: t.final_check.map(|x| x.errors),
            final_samples: t.final_check.map(|x| x.samples),
            final_rate: t.final_check.map(|x| x.rate),
            message_symbols: t.message_symbols,
            fidelity: t.fidelity,
            delivered_bits: t.delivered_bits,
            key_recovery_rate: t.key_recovery_rate,
            message_recovery_rate: t.message_recovery_rate,
        })
        .expect("csv row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse_run_config;

    #[test]
    fn honest_baseline() {
        let cfg = parse_run_config(r#"{"d":2,"m_bases":2,"n_pairs":64,"trials":10}"#).unwrap();
        let r = cmd_run(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(r.aggregate.trials, 10);
        assert_eq!(r.aggregate.abort_fraction, 0.0);
        assert_eq!(r.aggregate.message_fidelity, Some(1.0));
        assert_eq!(r.aggregate.expectation.expected_rate, 0.0);
        assert_eq!(r.trials.iter().map(|t| t.seed).collect::<Vec<_>>(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = parse_run_config(
            r#"{"d":3,"m_bases":4,"n_pairs":128,"trials":8,"seed":40,
                "eve":{"kind":"intercept_resend","legs":["bob_to_alice"]},"epsilon_t":0.9}"#,
        )
        .unwrap();
        let a = cmd_run(&cfg, &RunOptions::default()).unwrap();
        let b = cmd_run(&cfg, &RunOptions { parallel: Some(4), transcripts: None }).unwrap();
        assert_eq!(report_json(&a), report_json(&b));
        assert_eq!(report_csv(&a), report_csv(&b));
    }

    #[test]
    fn tapping_the_return_leg_scrambles_bell_results() {
        let mut cfg = parse_run_config(
            r#"{"d":3,"m_bases":2,"n_pairs":4000,"trials":2,"s_e2_count":1500,"decoy_count":10,"p_check":0.01,
                "eve":{"kind":"intercept_resend","legs":["bob_to_alice"]}}"#,
        )
        .unwrap();
        cfg.epsilon_t = 0.99;
        let r = cmd_run(&cfg, &RunOptions::default()).unwrap();
        let e = r.aggregate.empirical.unwrap();
        assert_eq!(r.aggregate.expectation.check, CheckId::Final);
        let sigma = crate::stats::binomial_sigma(2.0 / 3.0, e.samples);
        assert!((e.rate - 2.0 / 3.0).abs() < 3.0 * sigma, "rate {}", e.rate);
    }

    #[test]
    fn csv_header_and_rows() {
        let cfg = parse_run_config(r#"{"d":2,"m_bases":2,"n_pairs":40,"trials":2}"#).unwrap();
        let text = report_csv(&cmd_run(&cfg, &RunOptions::default()).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("trial,seed,status,aborted_at,first_errors"));
        assert!(lines[1].starts_with("0,0,completed,,0,10,0.0,"));
    }
}
