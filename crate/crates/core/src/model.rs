//! Instance data model, structural checks and mode validation.
//!
//! Instances are plain data: machines with an optional dedicated load and
//! jobs with an integer weight and a set of eligible machines. All solver
//! logic works on [`IndexedInstance`], where machine references are resolved
//! to indices and eligible sets are sorted by machine index.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Exact fraction with a positive denominator, always in lowest terms.
pub type Rational = num_rational::Ratio<i64>;

/// Upper limit on the total load of an instance. Keeps every scaled
/// threshold comparison well inside `i64`.
pub const MAX_TOTAL_LOAD: i64 = 1 << 40;

/// Parses a fraction written as `p/q` (or a bare integer). Floats are rejected.
pub fn parse_fraction(text: &str) -> Result<Rational, ModelError> {
    let bad = || ModelError::BadFraction(text.to_string());
    let trimmed = text.trim();
    let (num, den) = match trimmed.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (trimmed, "1"),
    };
    let num: i64 = num.parse().map_err(|_| bad())?;
    let den: i64 = den.parse().map_err(|_| bad())?;
    if den == 0 {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

pub fn format_fraction(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `4/7 <= beta < 1`.
pub fn beta_in_range(beta: Rational) -> bool {
    beta >= Rational::new(4, 7) && beta < Rational::from_integer(1)
}

/// Compares an integer with a fraction by cross-multiplication.
pub fn cmp_int_ratio(x: i64, r: Rational) -> Ordering {
    (x as i128 * *r.denom() as i128).cmp(&(*r.numer() as i128))
}

/// Serde adapter storing a [`Rational`] as the string `"p/q"`.
pub mod fraction_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_fraction, parse_fraction, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_fraction(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_fraction(&text).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        use super::super::{format_fraction, parse_fraction, Rational};

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_some(&format_fraction(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let text: Option<String> = Option::deserialize(d)?;
            text.map(|t| parse_fraction(&t).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    pub id: String,
    #[serde(default)]
    pub dedicated_load: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub id: String,
    pub weight: i64,
    pub eligible: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeHint {
    TwoValued,
    General,
    #[default]
    Auto,
}

impl fmt::Display for ModeHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeHint::TwoValued => "two_valued",
            ModeHint::General => "general",
            ModeHint::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub machines: Vec<MachineSpec>,
    pub jobs: Vec<JobSpec>,
    #[serde(default)]
    pub mode_hint: ModeHint,
}

/// Parses and structurally checks an instance document.
pub fn parse_instance(text: &str) -> Result<Instance, ModelError> {
    let instance: Instance = serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    instance.indexed()?;
    Ok(instance)
}

impl Instance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    /// Resolves machine references. Fails on any structural defect.
    pub fn indexed(&self) -> Result<IndexedInstance, ModelError> {
        let mut machine_index = HashMap::with_capacity(self.machines.len());
        let mut total: i64 = 0;
        for (i, m) in self.machines.iter().enumerate() {
            if machine_index.insert(m.id.as_str(), i).is_some() {
                return Err(ModelError::DuplicateMachine(m.id.clone()));
            }
            if m.dedicated_load < 0 {
                return Err(ModelError::NegativeLoad(m.id.clone(), m.dedicated_load));
            }
            total = total.saturating_add(m.dedicated_load);
        }
        let mut seen_jobs = HashSet::with_capacity(self.jobs.len());
        let mut jobs = Vec::with_capacity(self.jobs.len());
        for job in &self.jobs {
            if !seen_jobs.insert(job.id.as_str()) {
                return Err(ModelError::DuplicateJob(job.id.clone()));
            }
            if job.weight <= 0 {
                return Err(ModelError::NonPositiveWeight(job.id.clone(), job.weight));
            }
            if job.eligible.is_empty() {
                return Err(ModelError::EmptyEligible(job.id.clone()));
            }
            let mut eligible = Vec::with_capacity(job.eligible.len());
            for m in &job.eligible {
                let &idx = machine_index
                    .get(m.as_str())
                    .ok_or_else(|| ModelError::DanglingMachine {
                        job: job.id.clone(),
                        machine: m.clone(),
                    })?;
                if eligible.contains(&idx) {
                    return Err(ModelError::DuplicateEligible {
                        job: job.id.clone(),
                        machine: m.clone(),
                    });
                }
                eligible.push(idx);
            }
            eligible.sort_unstable();
            total = total.saturating_add(job.weight);
            jobs.push(IndexedJob {
                id: job.id.clone(),
                weight: job.weight,
                eligible,
            });
        }
        if total > MAX_TOTAL_LOAD {
            return Err(ModelError::TooLarge(total));
        }
        Ok(IndexedInstance {
            machine_ids: self.machines.iter().map(|m| m.id.clone()).collect(),
            dedicated: self.machines.iter().map(|m| m.dedicated_load).collect(),
            jobs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedJob {
    pub id: String,
    pub weight: i64,
    /// Machine indices, ascending.
    pub eligible: Vec<usize>,
}

/// An instance with machine references resolved to indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedInstance {
    pub machine_ids: Vec<String>,
    /// Dedicated loads declared on the machines themselves.
    pub dedicated: Vec<i64>,
    pub jobs: Vec<IndexedJob>,
}

impl IndexedInstance {
    pub fn machine_count(&self) -> usize {
        self.machine_ids.len()
    }

    pub fn total_weight(&self) -> i64 {
        self.jobs.iter().map(|j| j.weight).sum()
    }

    pub fn max_weight(&self) -> i64 {
        self.jobs.iter().map(|j| j.weight).max().unwrap_or(0)
    }

    /// Declared loads plus every job that has a single eligible machine.
    pub fn folded_dedicated(&self) -> Vec<i64> {
        let mut dl = self.dedicated.clone();
        for job in self.jobs.iter().filter(|j| j.eligible.len() == 1) {
            dl[job.eligible[0]] += job.weight;
        }
        dl
    }

    /// Distinct weights of jobs with at least two eligible machines, ascending.
    pub fn multi_machine_weights(&self) -> Vec<i64> {
        let mut weights: Vec<i64> = self
            .jobs
            .iter()
            .filter(|j| j.eligible.len() >= 2)
            .map(|j| j.weight)
            .collect();
        weights.sort_unstable();
        weights.dedup();
        weights
    }

    pub fn machine_position(&self, id: &str) -> Option<usize> {
        self.machine_ids.iter().position(|m| m == id)
    }
}

/// A fully resolved solving mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Two multi-machine weights `light < heavy`.
    TwoValued {
        heavy: i64,
        light: i64,
    },
    General {
        beta: Rational,
    },
}

impl SolveMode {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMode::TwoValued { .. } => "two_valued",
            SolveMode::General { .. } => "general",
        }
    }

    pub fn beta(&self) -> Option<Rational> {
        match self {
            SolveMode::General { beta } => Some(*beta),
            SolveMode::TwoValued { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingBeta,
    BetaOutOfRange(Rational),
    /// Two-valued mode needs exactly two multi-machine weights.
    WeightCount(Vec<i64>),
    HeavyJobTooManyMachines {
        job: String,
        weight: i64,
        machines: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingBeta => write!(f, "general mode requires beta"),
            Violation::BetaOutOfRange(b) => write!(f, "beta {b} is outside [4/7, 1)"),
            Violation::WeightCount(ws) => {
                write!(f, "expected exactly two multi-machine weights, found {ws:?}")
            }
            Violation::HeavyJobTooManyMachines { job, weight, machines } => write!(
                f,
                "heavy job `{job}` (weight {weight}) has {machines} eligible machines"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub requested: ModeHint,
    pub resolved: Option<SolveMode>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.resolved.is_some()
    }

    pub fn into_mode(self) -> Result<SolveMode, ModelError> {
        if let Some(mode) = self.resolved {
            return Ok(mode);
        }
        if let Some(Violation::BetaOutOfRange(b)) = self
            .violations
            .iter()
            .find(|v| matches!(v, Violation::BetaOutOfRange(_)))
        {
            return Err(ModelError::BetaOutOfRange(*b));
        }
        let details = self
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        Err(ModelError::Invalid {
            mode: self.requested.to_string(),
            details,
        })
    }
}

fn two_valued_violations(inst: &IndexedInstance) -> (Option<SolveMode>, Vec<Violation>) {
    let weights = inst.multi_machine_weights();
    if weights.len() != 2 {
        return (None, vec![Violation::WeightCount(weights)]);
    }
    let (light, heavy) = (weights[0], weights[1]);
    let violations: Vec<Violation> = inst
        .jobs
        .iter()
        .filter(|j| j.weight == heavy && j.eligible.len() > 2)
        .map(|j| Violation::HeavyJobTooManyMachines {
            job: j.id.clone(),
            weight: j.weight,
            machines: j.eligible.len(),
        })
        .collect();
    if violations.is_empty() {
        (Some(SolveMode::TwoValued { heavy, light }), violations)
    } else {
        (None, violations)
    }
}

fn general_violations(inst: &IndexedInstance, beta: Option<Rational>) -> (Option<SolveMode>, Vec<Violation>) {
    let Some(beta) = beta else {
        return (None, vec![Violation::MissingBeta]);
    };
    if !beta_in_range(beta) {
        return (None, vec![Violation::BetaOutOfRange(beta)]);
    }
    let w_max = inst.max_weight() as i128;
    let (p, q) = (*beta.numer() as i128, *beta.denom() as i128);
    let violations: Vec<Violation> = inst
        .jobs
        .iter()
        .filter(|j| j.weight as i128 * q > p * w_max && j.eligible.len() > 2)
        .map(|j| Violation::HeavyJobTooManyMachines {
            job: j.id.clone(),
            weight: j.weight,
            machines: j.eligible.len(),
        })
        .collect();
    if violations.is_empty() {
        (Some(SolveMode::General { beta }), violations)
    } else {
        (None, violations)
    }
}

/// Checks the structural assumptions of the requested mode. `Auto` resolves
/// to two-valued when exactly two multi-machine weights exist and every heavy
/// job has at most two eligible machines, otherwise to general.
pub fn validate(instance: &Instance, mode: ModeHint, beta: Option<Rational>) -> Result<ValidationReport, ModelError> {
    let inst = instance.indexed()?;
    Ok(validate_indexed(&inst, mode, beta))
}

pub fn validate_indexed(inst: &IndexedInstance, mode: ModeHint, beta: Option<Rational>) -> ValidationReport {
    let (resolved, violations) = match mode {
        ModeHint::TwoValued => two_valued_violations(inst),
        ModeHint::General => general_violations(inst, beta),
        ModeHint::Auto => match two_valued_violations(inst) {
            (Some(m), v) => (Some(m), v),
            (None, _) => general_violations(inst, beta),
        },
    };
    ValidationReport {
        requested: mode,
        resolved,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(id: &str, weight: i64, eligible: &[&str]) -> JobSpec {
        JobSpec {
            id: id.into(),
            weight,
            eligible: eligible.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn machines(n: usize) -> Vec<MachineSpec> {
        (1..=n)
            .map(|i| MachineSpec {
                id: format!("m{i}"),
                dedicated_load: 0,
            })
            .collect()
    }

    #[test]
    fn minimal_document() {
        let inst =
            parse_instance(r#"{"machines":[{"id":"m1"}],"jobs":[{"id":"j1","weight":5,"eligible":["m1"]}]}"#).unwrap();
        assert_eq!(inst.machines.len(), 1);
        assert_eq!(inst.jobs.len(), 1);
        assert_eq!(inst.mode_hint, ModeHint::Auto);
    }

    #[test]
    fn dangling_reference() {
        let err = parse_instance(r#"{"machines":[{"id":"m1"}],"jobs":[{"id":"j1","weight":5,"eligible":["m9"]}]}"#)
            .unwrap_err();
        assert!(matches!(err, ModelError::DanglingMachine { ref machine, .. } if machine == "m9"));
    }

    #[test]
    fn structural_errors() {
        let err = parse_instance(r#"{"machines":[{"id":"m1"},{"id":"m1"}],"jobs":[]}"#).unwrap_err();
        assert_eq!(err, ModelError::DuplicateMachine("m1".into()));
        let err = parse_instance(r#"{"machines":[{"id":"m1"}],"jobs":[{"id":"j","weight":0,"eligible":["m1"]}]}"#)
            .unwrap_err();
        assert_eq!(err, ModelError::NonPositiveWeight("j".into(), 0));
        let err = parse_instance(r#"{"machines":[],"jobs":[],"extra":1}"#).unwrap_err();
        assert!(matches!(err, ModelError::Syntax { .. }));
        let err = parse_instance("{\n  \"machines\": [,]\n}").unwrap_err();
        match err {
            ModelError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_instance(r#"{"machines":[{"id":"m1"}],"jobs":[{"id":"j","weight":2.5,"eligible":["m1"]}]}"#)
            .unwrap_err();
        assert!(matches!(err, ModelError::Syntax { .. }));
    }

    #[test]
    fn fractions() {
        assert_eq!(parse_fraction("7/10").unwrap(), Rational::new(7, 10));
        assert_eq!(parse_fraction("14/20").unwrap(), Rational::new(7, 10));
        assert!(parse_fraction("0.7").is_err());
        assert!(parse_fraction("1/0").is_err());
        assert!(beta_in_range(Rational::new(4, 7)));
        assert!(!beta_in_range(Rational::new(4, 7) - Rational::new(1, 1000)));
        assert!(!beta_in_range(Rational::from_integer(1)));
        assert_eq!(cmp_int_ratio(8, Rational::new(15, 2)), Ordering::Greater);
        assert_eq!(cmp_int_ratio(7, Rational::new(15, 2)), Ordering::Less);
    }

    #[test]
    fn two_valued_eligibility() {
        let inst = Instance {
            machines: machines(3),
            jobs: vec![
                job("a", 7, &["m1", "m2"]),
                job("b", 3, &["m1", "m2", "m3"]),
                job("c", 11, &["m3"]),
            ],
            mode_hint: ModeHint::Auto,
        };
        let report = validate(&inst, ModeHint::TwoValued, None).unwrap();
        assert_eq!(report.resolved, Some(SolveMode::TwoValued { heavy: 7, light: 3 }));
        let report = validate(&inst, ModeHint::Auto, None).unwrap();
        assert_eq!(report.resolved, Some(SolveMode::TwoValued { heavy: 7, light: 3 }));
    }

    #[test]
    fn general_boundary_at_beta_w_max() {
        let mut jobs = vec![job("top", 100, &["m1", "m2"]), job("x", 71, &["m1", "m2", "m3"])];
        let inst = Instance {
            machines: machines(3),
            jobs: jobs.clone(),
            mode_hint: ModeHint::General,
        };
        let report = validate(&inst, ModeHint::General, Some(Rational::new(7, 10))).unwrap();
        assert!(!report.is_valid());
        assert!(matches!(
            report.violations[0],
            Violation::HeavyJobTooManyMachines { weight: 71, .. }
        ));
        jobs[1].weight = 70;
        let inst = Instance { jobs, ..inst };
        let report = validate(&inst, ModeHint::General, Some(Rational::new(7, 10))).unwrap();
        assert_eq!(
            report.resolved,
            Some(SolveMode::General {
                beta: Rational::new(7, 10)
            })
        );
    }

    #[test]
    fn beta_range_error() {
        let inst = Instance {
            machines: machines(2),
            jobs: vec![job("a", 5, &["m1", "m2"])],
            mode_hint: ModeHint::General,
        };
        let beta = Rational::new(4, 7) - Rational::new(1, 1000);
        let err = validate(&inst, ModeHint::General, Some(beta))
            .unwrap()
            .into_mode()
            .unwrap_err();
        assert_eq!(err, ModelError::BetaOutOfRange(beta));
    }

    #[test]
    fn auto_falls_back_to_general() {
        let inst = Instance {
            machines: machines(3),
            jobs: vec![
                job("a", 7, &["m1", "m2"]),
                job("b", 3, &["m1", "m2"]),
                job("c", 5, &["m2", "m3"]),
            ],
            mode_hint: ModeHint::Auto,
        };
        let report = validate(&inst, ModeHint::Auto, Some(Rational::new(2, 3))).unwrap();
        assert_eq!(
            report.resolved,
            Some(SolveMode::General {
                beta: Rational::new(2, 3)
            })
        );
        let report = validate(&inst, ModeHint::TwoValued, None).unwrap();
        assert_eq!(report.violations, vec![Violation::WeightCount(vec![3, 5, 7])]);
    }
}
