//! Binary search over the guessed makespan.
//!
//! The bracket `[lo, hi]` keeps two facts: `hi` was accepted by a core, and
//! either `lo` is the initial lower bound or some core declared `lo - 1`.
//! Acceptance is never assumed to be monotone in `t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::certificate::Declaration;
use crate::error::SolveError;
use crate::general::run_core_general;
use crate::matching::solve_unit_capacity;
use crate::model::{fraction_serde, IndexedInstance, Rational, SolveMode};
use crate::outcome::{CoreOutcome, CoreStats};
use crate::preprocess::{reduce, Reduced};
use crate::relief::run_preflow_core;
use crate::trace::{Trace, TraceEvent};
use crate::two_valued::{run_core_two_valued, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub assignment: BTreeMap<String, String>,
    pub makespan: i64,
    pub t_star: i64,
    pub lower_bound: i64,
    #[serde(with = "fraction_serde")]
    pub ratio_certified: Rational,
    #[serde(default)]
    pub declarations: Vec<Declaration>,
}

impl Solution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialization cannot fail")
    }
}

/// Which core handles a guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreKind {
    Matching,
    TwoValued(Variant),
    Relief,
    General,
}

impl CoreKind {
    pub fn name(&self) -> &'static str {
        match self {
            CoreKind::Matching => "matching",
            CoreKind::TwoValued(Variant::Standard) => "two_valued",
            CoreKind::TwoValued(Variant::Improved) => "two_valued_improved",
            CoreKind::Relief => "relief",
            CoreKind::General => "general",
        }
    }

    /// The largest load an accepted assignment of this core may have.
    pub fn makespan_bound(&self, t: i64, mode: SolveMode) -> Rational {
        let t_r = Rational::from_integer(t);
        match (self, mode) {
            (CoreKind::Matching, _) => t_r,
            (CoreKind::TwoValued(Variant::Standard), _) => t_r * Rational::new(3, 2),
            (CoreKind::TwoValued(Variant::Improved), SolveMode::TwoValued { heavy, .. }) => {
                Rational::from_integer(t + heavy / 2)
            }
            (CoreKind::Relief, SolveMode::TwoValued { heavy, .. }) => Rational::from_integer(t + heavy - 1),
            (_, SolveMode::General { beta }) => t_r * (Rational::new(5, 3) + beta / 3),
            // Two-valued cores never run in general mode.
            (_, SolveMode::TwoValued { .. }) => t_r * Rational::new(3, 2),
        }
    }
}

pub fn core_for(mode: SolveMode, t: i64) -> CoreKind {
    match mode {
        SolveMode::General { .. } => CoreKind::General,
        SolveMode::TwoValued { heavy, light } => {
            if t < 2 * light {
                CoreKind::Matching
            } else if t < 2 * heavy {
                if heavy >= 2 * light {
                    CoreKind::TwoValued(Variant::Improved)
                } else {
                    CoreKind::TwoValued(Variant::Standard)
                }
            } else {
                CoreKind::Relief
            }
        }
    }
}

/// The approximation factor the solver guarantees in this mode.
pub fn certified_ratio_bound(mode: SolveMode) -> Rational {
    match mode {
        SolveMode::TwoValued { heavy, light } if heavy >= 2 * light => {
            Rational::from_integer(1) + Rational::new(heavy / 2, heavy)
        }
        SolveMode::TwoValued { .. } => Rational::new(3, 2),
        SolveMode::General { beta } => Rational::new(5, 3) + beta / 3,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Accepted {
        assignment: BTreeMap<String, String>,
        makespan: i64,
    },
    Declared(Declaration),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub core_invocations: usize,
    pub core: CoreStats,
}

/// Load of every machine under `assignment`, or `None` if a job is missing,
/// unknown, or placed on a machine it is not eligible for.
pub fn machine_loads(instance: &IndexedInstance, assignment: &BTreeMap<String, String>) -> Option<Vec<i64>> {
    if assignment.len() != instance.jobs.len() {
        return None;
    }
    let mut loads = instance.dedicated.clone();
    for job in &instance.jobs {
        let v = instance.machine_position(assignment.get(&job.id)?)?;
        if !job.eligible.contains(&v) {
            return None;
        }
        loads[v] += job.weight;
    }
    Some(loads)
}

/// Runs the reduction and the core that owns guess `t`.
pub fn decide(
    instance: &IndexedInstance,
    t: i64,
    mode: SolveMode,
    stats: &mut SearchStats,
    trace: &mut Trace,
) -> Result<Decision, SolveError> {
    let kind = core_for(mode, t);
    stats.core_invocations += 1;
    trace.record(|| TraceEvent::Guess { t, core: kind.name() });
    let ctx = match reduce(instance, t, mode)? {
        Reduced::Declared(decl) => {
            trace.record(|| TraceEvent::Outcome {
                t,
                accepted: false,
                detail: decl.certificate.kind().to_string(),
            });
            return Ok(Decision::Declared(decl));
        }
        Reduced::Context(ctx) => ctx,
    };
    for step in &ctx.reductions {
        trace.record(|| TraceEvent::Reduction { t, step: step.clone() });
    }
    let mut core_stats = CoreStats::default();
    let outcome = match kind {
        CoreKind::Matching => solve_unit_capacity(&ctx)?,
        CoreKind::TwoValued(variant) => run_core_two_valued(&ctx, variant, &mut core_stats, trace)?,
        CoreKind::Relief => run_preflow_core(&ctx, &mut core_stats)?,
        CoreKind::General => run_core_general(&ctx, &mut core_stats, trace)?,
    };
    stats.core.absorb(&core_stats);
    match outcome {
        CoreOutcome::Declared(decl) => {
            trace.record(|| TraceEvent::Outcome {
                t,
                accepted: false,
                detail: decl.certificate.kind().to_string(),
            });
            Ok(Decision::Declared(decl))
        }
        CoreOutcome::Accepted(ctx_assignment) => {
            let assignment = ctx.lift(&ctx_assignment);
            let loads = machine_loads(instance, &assignment)
                .ok_or_else(|| SolveError::Invariant(format!("lifted assignment at t = {t} is not valid")))?;
            let makespan = loads.into_iter().max().unwrap_or(0);
            let bound = kind.makespan_bound(t, mode);
            if Rational::from_integer(makespan) > bound {
                return Err(SolveError::Invariant(format!(
                    "{} core returned makespan {makespan} above {bound} at t = {t}",
                    kind.name()
                )));
            }
            trace.record(|| TraceEvent::Outcome {
                t,
                accepted: true,
                detail: format!("makespan {makespan}"),
            });
            Ok(Decision::Accepted { assignment, makespan })
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveOptions {
    pub trace: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Solution,
    pub stats: SearchStats,
    pub trace: Trace,
}

/// `max(W_max, max dl, ceil((sum w + sum dl) / m))`, with single-machine
/// jobs folded into `dl`.
pub fn initial_lower_bound(instance: &IndexedInstance) -> i64 {
    let dl = instance.folded_dedicated();
    let m = instance.machine_count().max(1) as i64;
    let total = instance.dedicated.iter().sum::<i64>() + instance.total_weight();
    let average = (total + m - 1) / m;
    instance
        .max_weight()
        .max(dl.iter().copied().max().unwrap_or(0))
        .max(average)
}

/// Every job on its lowest-index eligible machine.
pub fn trivial_assignment(instance: &IndexedInstance) -> BTreeMap<String, String> {
    instance
        .jobs
        .iter()
        .map(|j| (j.id.clone(), instance.machine_ids[j.eligible[0]].clone()))
        .collect()
}

pub fn solve(instance: &IndexedInstance, mode: SolveMode, options: &SolveOptions) -> Result<SolveReport, SolveError> {
    let mut trace = if options.trace {
        Trace::enabled()
    } else {
        Trace::disabled()
    };
    let mut stats = SearchStats::default();
    let lower = initial_lower_bound(instance);
    let finish = |assignment: BTreeMap<String, String>,
                  makespan: i64,
                  t_star: i64,
                  declarations: Vec<Declaration>,
                  stats: SearchStats,
                  trace: Trace| {
        let lower_bound = declarations.iter().map(|d| d.t + 1).fold(lower, i64::max);
        if lower_bound > t_star {
            return Err(SolveError::Invariant(format!(
                "lower bound {lower_bound} exceeds accepted guess {t_star}"
            )));
        }
        let ratio_certified = if lower_bound == 0 {
            Rational::from_integer(1)
        } else {
            Rational::new(makespan, lower_bound)
        };
        Ok(SolveReport {
            solution: Solution {
                assignment,
                makespan,
                t_star,
                lower_bound,
                ratio_certified,
                declarations,
            },
            stats,
            trace,
        })
    };

    if instance.jobs.is_empty() {
        let makespan = instance.dedicated.iter().copied().max().unwrap_or(0);
        return finish(BTreeMap::new(), makespan, makespan, Vec::new(), stats, trace);
    }

    let trivial = trivial_assignment(instance);
    let high = machine_loads(instance, &trivial)
        .ok_or_else(|| SolveError::Invariant("trivial assignment is invalid".into()))?
        .into_iter()
        .max()
        .unwrap_or(0);
    let mut declarations = Vec::new();
    let mut best = match decide(instance, high, mode, &mut stats, &mut trace)? {
        Decision::Accepted { assignment, makespan } => (assignment, makespan),
        Decision::Declared(decl) => {
            return Err(SolveError::Invariant(format!(
                "{} declared at t = {high}, which the trivial assignment achieves",
                decl.certificate.kind()
            )));
        }
    };
    let (mut lo, mut hi) = (lower.min(high), high);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match decide(instance, mid, mode, &mut stats, &mut trace)? {
            Decision::Accepted { assignment, makespan } => {
                hi = mid;
                best = (assignment, makespan);
            }
            Decision::Declared(decl) => {
                lo = mid + 1;
                declarations.push(decl);
            }
        }
    }
    let (assignment, makespan) = best;
    finish(assignment, makespan, hi, declarations, stats, trace)
}
