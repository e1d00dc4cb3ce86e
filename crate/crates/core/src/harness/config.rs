use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adversary::EveStrategy;
use crate::error::{QsdcError, Result};
use crate::netsim::{build_topology, link_plan, route_session, SessionRoute, Topology, TopologySpec};
use crate::protocol::{default_sample_count, DecoySource, SessionConfig};

/// Largest trial count a run accepts.
pub const MAX_TRIALS: usize = 100_000;

fn default_p_check() -> f64 {
    0.25
}

fn default_epsilon_t() -> f64 {
    0.05
}

fn default_trials() -> usize {
    1
}

/// Contents of a run config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub m_bases: usize,
    pub n_pairs: usize,
    #[serde(default = "default_p_check")]
    pub p_check: f64,
    /// Defaults to `⌈0.1·n_pairs⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoy_count: Option<usize>,
    /// Defaults to `⌈0.1·n_pairs⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_e2_count: Option<usize>,
    #[serde(default = "default_epsilon_t")]
    pub epsilon_t: f64,
    #[serde(default)]
    pub decoy_source: DecoySource,
    #[serde(default)]
    pub eve: EveStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sender: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver: Option<u32>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Deserializes JSON, reporting the path of the first bad field.
pub(crate) fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut *de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        QsdcError::config(field, e.into_inner().to_string())
    })?;
    de.end()
        .map_err(|e| QsdcError::config("<root>", e.to_string()))?;
    Ok(value)
}

/// Parses and validates a run config.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Network placement resolved from a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub topology: Topology,
    pub route: SessionRoute,
}

impl RunConfig {
    pub fn from_session(config: &SessionConfig, trials: usize) -> Self {
        RunConfig {
            d: config.d,
            m_bases: config.m_bases,
            n_pairs: config.n_pairs,
            p_check: config.p_check,
            decoy_count: Some(config.decoy_count),
            s_e2_count: Some(config.s_e2_count),
            epsilon_t: config.epsilon_t,
            decoy_source: config.decoy_source.clone(),
            eve: config.eve.clone(),
            topology: None,
            sender: None,
            receiver: None,
            trials,
            seed: config.seed,
        }
    }

    /// Session config for trial `t`: seed `seed + t`.
    pub fn session_config(&self, trial: usize) -> SessionConfig {
        SessionConfig {
            d: self.d,
            m_bases: self.m_bases,
            n_pairs: self.n_pairs,
            p_check: self.p_check,
            decoy_count: self.decoy_count.unwrap_or(default_sample_count(self.n_pairs)),
            s_e2_count: self.s_e2_count.unwrap_or(default_sample_count(self.n_pairs)),
            epsilon_t: self.epsilon_t,
            decoy_source: self.decoy_source.clone(),
            eve: self.eve.clone(),
            seed: self.seed.wrapping_add(trial as u64),
        }
    }

    /// Builds the topology and route, if the config names one.
    pub fn placement(&self) -> Result<Option<Placement>> {
        let Some(spec) = &self.topology else {
            if self.sender.is_some() || self.receiver.is_some() {
                return Err(QsdcError::config("topology", "sender and receiver need a topology"));
            }
            return Ok(None);
        };
        let topology = build_topology(spec).map_err(|e| QsdcError::config("topology", e.to_string()))?;
        let (Some(sender), Some(receiver)) = (self.sender, self.receiver) else {
            return Err(QsdcError::config(
                if self.sender.is_none() { "sender" } else { "receiver" },
                "a topology needs both sender and receiver",
            ));
        };
        let route = route_session(&topology, sender, receiver)
            .map_err(|e| QsdcError::config("sender", e.to_string()))?;
        Ok(Some(Placement { topology, route }))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.trials > MAX_TRIALS {
            return Err(QsdcError::config(
                "trials",
                format!("must be in 1..={MAX_TRIALS}, got {}", self.trials),
            ));
        }
        self.session_config(0).validate()?;
        let placement = self.placement()?;
        if let EveStrategy::InterceptResend { legs, at_relay: Some(relay) } = &self.eve {
            let on_path = placement.as_ref().is_some_and(|p| {
                let plan = link_plan(&p.route);
                legs.iter().any(|l| plan.relays(*l).contains(relay))
            });
            if !on_path {
                return Err(QsdcError::config(
                    "eve.at_relay",
                    format!("server {relay} is not a relay on any attacked leg"),
                ));
            }
        }
        Ok(())
    }
}
