use serde::{Deserialize, Serialize};

use crate::adversary::EveStrategy;
use crate::error::{QsdcError, Result};
use crate::qudit::builtin_basis_set;

/// Largest dimension a session accepts.
pub const MAX_DIM: usize = 32;
/// Largest number of pairs a session accepts.
pub const MAX_PAIRS: usize = 1_000_000;

/// Where Charlie's decoy photons come from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecoySource {
    /// Charlie prepares single photons in random basis states and swaps
    /// them in for randomly chosen entangled halves.
    #[default]
    Fresh,
    /// Alice measures `n1 + n2` of her halves in `Z_d`/`X_d`; Charlie checks
    /// `n1` partners and keeps the other `n2`, now in known states, as
    /// decoys. With `rotate`, each kept photon is moved into a uniformly
    /// random basis of the set.
    ByMeasurement {
        n1: usize,
        n2: usize,
        #[serde(default)]
        rotate: bool,
    },
}

/// `⌈x⌉`, treating values within 1e-9 of an integer as that integer.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Default decoy and check-operation count: `⌈0.1·N⌉`.
pub fn default_sample_count(n_pairs: usize) -> usize {
    n_pairs.div_ceil(10)
}

/// Everything needed to run one session deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub d: usize,
    pub m_bases: usize,
    pub n_pairs: usize,
    /// Fraction of pairs spent on the first check.
    pub p_check: f64,
    pub decoy_count: usize,
    /// Number of Bob's random check operations.
    pub s_e2_count: usize,
    pub epsilon_t: f64,
    pub decoy_source: DecoySource,
    pub eve: EveStrategy,
    pub seed: u64,
}

impl SessionConfig {
    /// Defaults: `p_check = 0.25`, decoys and check operations `⌈0.1·N⌉`,
    /// `epsilon_t = 0.05`, fresh decoys, no attacker, seed 0.
    pub fn new(d: usize, m_bases: usize, n_pairs: usize) -> Self {
        SessionConfig {
            d,
            m_bases,
            n_pairs,
            p_check: 0.25,
            decoy_count: default_sample_count(n_pairs),
            s_e2_count: default_sample_count(n_pairs),
            epsilon_t: 0.05,
            decoy_source: DecoySource::Fresh,
            eve: EveStrategy::None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eve(mut self, eve: EveStrategy) -> Self {
        self.eve = eve;
        self
    }

    /// Number of slots consumed by the first check.
    pub fn first_check_size(&self) -> usize {
        match self.decoy_source {
            DecoySource::Fresh => ceil_tolerant(self.p_check * self.n_pairs as f64),
            DecoySource::ByMeasurement { n1, .. } => n1,
        }
    }

    /// Slots left for message symbols in a session that runs to the end.
    pub fn message_capacity(&self) -> usize {
        self.n_pairs
            .saturating_sub(self.first_check_size())
            .saturating_sub(self.decoy_count)
            .saturating_sub(self.s_e2_count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.d > MAX_DIM {
            return Err(QsdcError::config(
                "d",
                format!("must be in 2..={MAX_DIM}, got {}", self.d),
            ));
        }
        if let Err(e) = builtin_basis_set(self.d, self.m_bases) {
            return Err(QsdcError::config("m_bases", e.to_string()));
        }
        if self.n_pairs == 0 || self.n_pairs > MAX_PAIRS {
            return Err(QsdcError::config(
                "n_pairs",
                format!("must be in 1..={MAX_PAIRS}, got {}", self.n_pairs),
            ));
        }
        if !self.p_check.is_finite() || !(0.0..1.0).contains(&self.p_check) {
            return Err(QsdcError::config(
                "p_check",
                format!("must be in [0, 1), got {}", self.p_check),
            ));
        }
        if !self.epsilon_t.is_finite() || self.epsilon_t <= 0.0 || self.epsilon_t >= 1.0 {
            return Err(QsdcError::config(
                "epsilon_t",
                format!("must be in (0, 1), got {}", self.epsilon_t),
            ));
        }
        if let DecoySource::ByMeasurement { n2, .. } = self.decoy_source {
            if n2 != self.decoy_count {
                return Err(QsdcError::config(
                    "decoy_source.n2",
                    format!("must equal decoy_count ({}), got {n2}", self.decoy_count),
                ));
            }
        }
        if let EveStrategy::InterceptResend { legs, .. } = &self.eve {
            if legs.is_empty() {
                return Err(QsdcError::config(
                    "eve.legs",
                    "intercept_resend needs at least one leg",
                ));
            }
        }
        let used = self
            .first_check_size()
            .checked_add(self.decoy_count)
            .and_then(|x| x.checked_add(self.s_e2_count));
        match used {
            Some(u) if u < self.n_pairs => Ok(()),
            _ => Err(QsdcError::config(
                "n_pairs",
                format!(
                    "first check ({}) + decoy_count ({}) + s_e2_count ({}) must be below n_pairs ({})",
                    self.first_check_size(),
                    self.decoy_count,
                    self.s_e2_count,
                    self.n_pairs
                ),
            )),
        }
    }
}
