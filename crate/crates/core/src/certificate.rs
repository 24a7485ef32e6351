//! "OPT >= t + 1" declarations and their machine-checkable payloads.
//!
//! A declaration names the guess `t` and the mode it was produced under, so a
//! verifier can rebuild the reduced context deterministically and recheck the
//! witness without re-running the core that emitted it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{fraction_serde, IndexedInstance, Rational, SolveMode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declaration {
    pub t: i64,
    pub mode: String,
    #[serde(default, with = "fraction_serde::option", skip_serializing_if = "Option::is_none")]
    pub beta: Option<Rational>,
    #[serde(flatten)]
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Certificate {
    DedicatedOverflow(OverflowPayload),
    MultiCycleComponent(MultiCyclePayload),
    HallViolation(HallPayload),
    ActivatedSet(ActivatedSetPayload),
    PreflowHeight(PreflowPayload),
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::DedicatedOverflow(_) => "dedicated_overflow",
            Certificate::MultiCycleComponent(_) => "multi_cycle_component",
            Certificate::HallViolation(_) => "hall_violation",
            Certificate::ActivatedSet(_) => "activated_set",
            Certificate::PreflowHeight(_) => "preflow_height",
        }
    }
}

/// A machine whose unavoidable load already exceeds `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverflowPayload {
    pub machine: String,
    pub load: i64,
}

/// A rock component with more rocks than machines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiCyclePayload {
    pub nodes: Vec<String>,
    pub rocks: Vec<String>,
}

/// Jobs whose fitting neighbourhood is smaller than the job set, in a regime
/// where no machine can take two of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallPayload {
    pub jobs: Vec<String>,
    pub neighborhood: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemStatusTag {
    Good,
    Bad,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSnapshot {
    pub kind: String,
    pub nodes: Vec<String>,
    pub status: SystemStatusTag,
}

/// Snapshot of a stuck local search: the activated machines with their
/// levels, where every pebble sits, and the loads at the time of the stop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivatedSetPayload {
    pub levels: BTreeMap<String, usize>,
    #[serde(default)]
    pub conflict_set: Vec<String>,
    #[serde(default)]
    pub systems: Vec<SystemSnapshot>,
    pub placement: BTreeMap<String, String>,
    pub pl: BTreeMap<String, i64>,
    pub dl: BTreeMap<String, i64>,
    pub min_rock_load: Option<i64>,
}

/// A machine set `cut` such that the jobs eligible only inside it, together
/// with the dedicated load of the set, exceed `|cut| * t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreflowPayload {
    pub cut: Vec<String>,
    pub heights: BTreeMap<String, usize>,
    pub captive_jobs: Vec<String>,
    pub captive_weight: i64,
    pub cut_dedicated: i64,
}

impl Declaration {
    pub fn new(t: i64, mode: SolveMode, certificate: Certificate) -> Self {
        Declaration {
            t,
            mode: mode.name().to_string(),
            beta: mode.beta(),
            certificate,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("declaration serialization cannot fail")
    }

    /// Rebuilds the solving mode this declaration was produced under.
    pub fn solve_mode(&self, instance: &IndexedInstance) -> Result<SolveMode, ModelError> {
        match self.mode.as_str() {
            "general" => {
                let beta = self.beta.ok_or_else(|| ModelError::Invalid {
                    mode: "general".into(),
                    details: "declaration lacks beta".into(),
                })?;
                Ok(SolveMode::General { beta })
            }
            "two_valued" => {
                let weights = instance.multi_machine_weights();
                if weights.len() != 2 {
                    return Err(ModelError::Invalid {
                        mode: "two_valued".into(),
                        details: format!("instance has multi-machine weights {weights:?}"),
                    });
                }
                Ok(SolveMode::TwoValued {
                    heavy: weights[1],
                    light: weights[0],
                })
            }
            other => Err(ModelError::Invalid {
                mode: other.into(),
                details: "unknown mode".into(),
            }),
        }
    }
}
