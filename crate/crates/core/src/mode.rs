//! Decoding modes and diversity policies.
//!
//! A decoding mode bundles the base decoding randomness (seed, temperature)
//! with an optional auxiliary perturbation. A diversity policy describes the
//! distribution modes are drawn from; the regular policy fixes the auxiliary
//! component to "absent".

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::input::Perturbation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingMode {
    pub eta_seed: u64,
    pub temperature: f64,
    /// Absent means the baseline reference setting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Perturbation>,
}

impl DecodingMode {
    pub fn baseline(eta_seed: u64, temperature: f64) -> Self {
        DecodingMode {
            eta_seed,
            temperature,
            xi: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModeError> {
        if !(self.temperature >= 0.0) {
            return Err(ModeError::NegativeTemperature(self.temperature));
        }
        Ok(())
    }
}

/// Base decoding randomness spec: the set of temperatures the seed stream
/// draws from. A single entry realizes the fixed-temperature setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    pub temperatures: Vec<f64>,
}

impl Default for BaseSpec {
    fn default() -> Self {
        BaseSpec {
            temperatures: vec![0.6],
        }
    }
}

/// Auxiliary diversity source, by reference. `None` reproduces the regular
/// policy exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AuxiliaryPolicy {
    None,
    TaskPool { pool_id: String },
    IdeaSet { set_id: String },
    RephraseSet { set_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiversityPolicy {
    #[serde(default)]
    pub base: BaseSpec,
    pub auxiliary: AuxiliaryPolicy,
}

impl DiversityPolicy {
    pub fn regular() -> Self {
        DiversityPolicy {
            base: BaseSpec::default(),
            auxiliary: AuxiliaryPolicy::None,
        }
    }
}

/// A policy with its auxiliary set resolved to concrete perturbations.
#[derive(Debug, Clone)]
pub struct MaterializedPolicy {
    pub temperatures: Vec<f64>,
    /// `None` is the regular policy; `Some` holds the auxiliary pool the
    /// draws select from uniformly, with replacement.
    pub auxiliary: Option<Vec<Perturbation>>,
}

impl MaterializedPolicy {
    pub fn regular(temperature: f64) -> Self {
        MaterializedPolicy {
            temperatures: vec![temperature],
            auxiliary: None,
        }
    }

    pub fn with_auxiliary(temperature: f64, auxiliary: Vec<Perturbation>) -> Self {
        MaterializedPolicy {
            temperatures: vec![temperature],
            auxiliary: Some(auxiliary),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModeError {
    #[error("temperature must be >= 0, got {0}")]
    NegativeTemperature(f64),
    #[error("policy temperature set is empty")]
    EmptyTemperatures,
    #[error("auxiliary set is empty")]
    EmptyAuxiliary,
}

/// Draw one decoding mode from the policy. Deterministic given the seed:
/// temperature, then eta seed, then the auxiliary pick.
pub fn draw_mode(policy: &MaterializedPolicy, seed: u64) -> Result<DecodingMode, ModeError> {
    if policy.temperatures.is_empty() {
        return Err(ModeError::EmptyTemperatures);
    }
    if let Some(temp) = policy.temperatures.iter().find(|t| !(**t >= 0.0)) {
        return Err(ModeError::NegativeTemperature(*temp));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let temperature = if policy.temperatures.len() == 1 {
        policy.temperatures[0]
    } else {
        policy.temperatures[rng.gen_range(0..policy.temperatures.len())]
    };
    let eta_seed = rng.next_u64();
    let xi = match &policy.auxiliary {
        None => None,
        Some(pool) => {
            if pool.is_empty() {
                return Err(ModeError::EmptyAuxiliary);
            }
            Some(pool[rng.gen_range(0..pool.len())].clone())
        }
    };
    Ok(DecodingMode {
        eta_seed,
        temperature,
        xi,
    })
}
