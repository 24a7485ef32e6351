//! Exact core for guesses where no machine can take two jobs.
//!
//! Every context job needs its own machine with enough spare room, so the
//! guess is feasible iff a job-saturating bipartite matching exists.

use std::collections::VecDeque;

use crate::certificate::{Certificate, Declaration, HallPayload};
use crate::error::SolveError;
use crate::outcome::CoreOutcome;
use crate::preprocess::{ContextAssignment, ContextJob, GuessContext};

/// Machines a job fits on: eligible and `dl(v) + w_j <= t`.
pub fn fitting_machines(ctx: &GuessContext, job: ContextJob) -> Vec<usize> {
    let w = ctx.job_weight(job);
    ctx.job_eligible(job)
        .into_iter()
        .filter(|&v| ctx.dl[v] + w <= ctx.t)
        .collect()
}

/// Whether any two context jobs together exceed `t`.
pub fn in_unit_regime(ctx: &GuessContext) -> bool {
    let mut weights: Vec<i64> = ctx.jobs().into_iter().map(|j| ctx.job_weight(j)).collect();
    weights.sort_unstable();
    weights.len() < 2 || weights[0] + weights[1] > ctx.t
}

fn augment(job: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &v in &adj[job] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if owner[v].is_none_or(|other| augment(other, adj, owner, seen)) {
            owner[v] = Some(job);
            return true;
        }
    }
    false
}

pub fn solve_unit_capacity(ctx: &GuessContext) -> Result<CoreOutcome, SolveError> {
    if !in_unit_regime(ctx) {
        return Err(SolveError::Precondition(format!(
            "two jobs fit together under t = {}",
            ctx.t
        )));
    }
    if let Some(v) = ctx.dl.iter().position(|&l| l > ctx.t) {
        return Err(SolveError::Precondition(format!(
            "dedicated load of `{}` exceeds t",
            ctx.machine_ids[v]
        )));
    }
    let jobs = ctx.jobs();
    let adj: Vec<Vec<usize>> = jobs.iter().map(|&j| fitting_machines(ctx, j)).collect();
    let mut owner = vec![None; ctx.machine_count()];
    let mut unmatched = None;
    for j in 0..jobs.len() {
        let mut seen = vec![false; ctx.machine_count()];
        if !augment(j, &adj, &mut owner, &mut seen) && unmatched.is_none() {
            unmatched = Some(j);
        }
    }

    if let Some(start) = unmatched {
        // Alternating search from an unmatched job: every machine reached is
        // matched, and its owner is reached too.
        let mut job_seen = vec![false; jobs.len()];
        let mut machine_seen = vec![false; ctx.machine_count()];
        job_seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(j) = queue.pop_front() {
            for &v in &adj[j] {
                if machine_seen[v] {
                    continue;
                }
                machine_seen[v] = true;
                let o = owner[v].ok_or_else(|| SolveError::Invariant("augmenting path left after matching".into()))?;
                if !job_seen[o] {
                    job_seen[o] = true;
                    queue.push_back(o);
                }
            }
        }
        let mut job_ids: Vec<String> = (0..jobs.len())
            .filter(|&j| job_seen[j])
            .map(|j| ctx.job_id(jobs[j]).to_string())
            .collect();
        job_ids.sort();
        let neighborhood: Vec<String> = (0..ctx.machine_count())
            .filter(|&v| machine_seen[v])
            .map(|v| ctx.machine_ids[v].clone())
            .collect();
        return Ok(CoreOutcome::Declared(Declaration::new(
            ctx.t,
            ctx.mode,
            Certificate::HallViolation(HallPayload {
                jobs: job_ids,
                neighborhood,
            }),
        )));
    }

    let mut rock_heads = vec![usize::MAX; ctx.rocks().len()];
    let mut pebble_at = vec![usize::MAX; ctx.pebbles.len()];
    for (v, o) in owner.iter().enumerate() {
        match o.map(|j| jobs[j]) {
            Some(ContextJob::Rock(r)) => rock_heads[r] = v,
            Some(ContextJob::Pebble(p)) => pebble_at[p] = v,
            None => {}
        }
    }
    Ok(CoreOutcome::Accepted(ContextAssignment { rock_heads, pebble_at }))
}
