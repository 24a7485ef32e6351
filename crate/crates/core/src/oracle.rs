//! Exact answers for small instances and independent checks of solver output.
//!
//! Single-machine jobs are folded into the dedicated load first, so the
//! budget counts only jobs with a real choice.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use crate::certificate::{
    ActivatedSetPayload, Certificate, Declaration, HallPayload, MultiCyclePayload, OverflowPayload, PreflowPayload,
};
use crate::error::OracleError;
use crate::model::{IndexedInstance, SolveMode};
use crate::preprocess::{is_rock, min_rock_load_into, reduce, GuessContext, Reduced, RockLoad};
use crate::search::machine_loads;

/// Most multi-machine jobs the oracle accepts.
pub const JOB_BUDGET: usize = 16;
/// Wall-clock cap for one oracle call.
pub const TIME_CAP: Duration = Duration::from_secs(30);

const CLOCK_INTERVAL: u64 = 1024;

struct Dfs {
    jobs: Vec<(i64, Vec<usize>)>,
    /// `suffix[i]` is the weight of jobs `i..`.
    suffix: Vec<i64>,
    loads: Vec<i64>,
    nodes: u64,
    start: Instant,
}

impl Dfs {
    fn new(instance: &IndexedInstance) -> Result<Self, OracleError> {
        let mut jobs: Vec<(i64, Vec<usize>)> = instance
            .jobs
            .iter()
            .filter(|j| j.eligible.len() > 1)
            .map(|j| (j.weight, j.eligible.clone()))
            .collect();
        if jobs.len() > JOB_BUDGET {
            return Err(OracleError::BudgetExceeded {
                jobs: jobs.len(),
                limit: JOB_BUDGET,
            });
        }
        jobs.sort_by_key(|j| std::cmp::Reverse(j.0));
        let mut suffix = vec![0; jobs.len() + 1];
        for i in (0..jobs.len()).rev() {
            suffix[i] = suffix[i + 1] + jobs[i].0;
        }
        Ok(Dfs {
            jobs,
            suffix,
            loads: instance.folded_dedicated(),
            nodes: 0,
            start: Instant::now(),
        })
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes.is_multiple_of(CLOCK_INTERVAL) && self.start.elapsed() > TIME_CAP {
            return Err(OracleError::Timeout(TIME_CAP));
        }
        Ok(())
    }

    /// Machines for job `i`, least loaded first.
    fn choices(&self, i: usize) -> Vec<usize> {
        let mut vs = self.jobs[i].1.clone();
        vs.sort_by_key(|&v| (self.loads[v], v));
        vs
    }

    fn minimize(&mut self, i: usize, current: i64, best: &mut i64) -> Result<(), OracleError> {
        self.tick()?;
        if i == self.jobs.len() {
            *best = (*best).min(current);
            return Ok(());
        }
        let m = self.loads.len() as i64;
        let average = (self.loads.iter().sum::<i64>() + self.suffix[i] + m - 1) / m;
        if current.max(average) >= *best {
            return Ok(());
        }
        let w = self.jobs[i].0;
        for v in self.choices(i) {
            if self.loads[v] + w >= *best {
                continue;
            }
            self.loads[v] += w;
            let r = self.minimize(i + 1, current.max(self.loads[v]), best);
            self.loads[v] -= w;
            r?;
        }
        Ok(())
    }

    fn fits(&mut self, i: usize, t: i64) -> Result<bool, OracleError> {
        self.tick()?;
        if i == self.jobs.len() {
            return Ok(true);
        }
        let slack: i64 = self.loads.iter().map(|&l| t - l).sum();
        if slack < self.suffix[i] {
            return Ok(false);
        }
        let w = self.jobs[i].0;
        for v in self.choices(i) {
            if self.loads[v] + w > t {
                continue;
            }
            self.loads[v] += w;
            let r = self.fits(i + 1, t);
            self.loads[v] -= w;
            if r? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Minimum makespan over all eligible assignments.
pub fn exact_opt(instance: &IndexedInstance) -> Result<i64, OracleError> {
    let mut dfs = Dfs::new(instance)?;
    let current = dfs.loads.iter().copied().max().unwrap_or(0);
    // Any assignment is an upper bound; the search looks for strictly less.
    let mut best = current + dfs.suffix[0];
    let mut greedy = dfs.loads.clone();
    for (w, el) in &dfs.jobs {
        let v = *el
            .iter()
            .min_by_key(|&&v| greedy[v])
            .expect("eligible set is non-empty");
        greedy[v] += w;
    }
    best = best.min(greedy.into_iter().max().unwrap_or(0));
    dfs.minimize(0, current, &mut best)?;
    Ok(best)
}

/// Whether some assignment has makespan at most `t`.
pub fn feasible_at(instance: &IndexedInstance, t: i64) -> Result<bool, OracleError> {
    let mut dfs = Dfs::new(instance)?;
    if dfs.loads.iter().any(|&l| l > t) {
        return Ok(false);
    }
    dfs.fits(0, t)
}

/// `(valid, makespan)`: every job placed exactly once on an eligible machine,
/// with the makespan recomputed from scratch. Invalid assignments report 0.
pub fn verify_solution(instance: &IndexedInstance, assignment: &BTreeMap<String, String>) -> (bool, i64) {
    match machine_loads(instance, assignment) {
        Some(loads) => (true, loads.into_iter().max().unwrap_or(0)),
        None => (false, 0),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Confirmed,
    Refuted(String),
    /// The polynomial check was inconclusive.
    NeedsExhaustive,
}

fn refuted(reason: impl Into<String>) -> Result<Verdict, OracleError> {
    Ok(Verdict::Refuted(reason.into()))
}

fn machine_set(instance: &IndexedInstance, ids: &[String]) -> Result<BTreeSet<usize>, OracleError> {
    let mut out = BTreeSet::new();
    for id in ids {
        let v = instance
            .machine_position(id)
            .ok_or_else(|| OracleError::MalformedPayload(format!("unknown machine `{id}`")))?;
        if !out.insert(v) {
            return Err(OracleError::MalformedPayload(format!("machine `{id}` listed twice")));
        }
    }
    Ok(out)
}

fn rebuild(instance: &IndexedInstance, t: i64, mode: SolveMode) -> Result<Option<GuessContext>, OracleError> {
    Ok(reduce(instance, t, mode)?.context())
}

/// Checks a declaration against the instance it was produced for.
pub fn verify_certificate(instance: &IndexedInstance, declaration: &Declaration) -> Result<Verdict, OracleError> {
    let mode = declaration.solve_mode(instance)?;
    let t = declaration.t;
    if t < instance.max_weight() {
        return Ok(Verdict::Confirmed);
    }
    match &declaration.certificate {
        Certificate::DedicatedOverflow(p) => check_overflow(instance, t, mode, declaration, p),
        Certificate::MultiCycleComponent(p) => check_multi_cycle(instance, t, mode, p),
        Certificate::HallViolation(p) => check_hall(instance, t, mode, p),
        Certificate::PreflowHeight(p) => check_preflow(instance, t, mode, p),
        Certificate::ActivatedSet(p) => check_activated(instance, t, mode, p),
    }
}

/// Confirmed or refuted, falling back to exhaustive search when the
/// certificate alone is inconclusive.
pub fn verify_declaration(instance: &IndexedInstance, declaration: &Declaration) -> Result<bool, OracleError> {
    match verify_certificate(instance, declaration)? {
        Verdict::Confirmed => Ok(true),
        Verdict::Refuted(_) => Ok(false),
        Verdict::NeedsExhaustive => Ok(!feasible_at(instance, declaration.t)?),
    }
}

fn check_overflow(
    instance: &IndexedInstance,
    t: i64,
    mode: SolveMode,
    declaration: &Declaration,
    p: &OverflowPayload,
) -> Result<Verdict, OracleError> {
    let v = *machine_set(instance, std::slice::from_ref(&p.machine))?
        .iter()
        .next()
        .expect("one machine");
    if instance.folded_dedicated()[v] > t {
        return Ok(Verdict::Confirmed);
    }
    // The overflow only appears after rocks were folded into leaves.
    match reduce(instance, t, mode)? {
        Reduced::Declared(d) if d.certificate == declaration.certificate => Ok(Verdict::Confirmed),
        _ => refuted(format!("machine `{}` does not overflow at t = {t}", p.machine)),
    }
}

fn check_multi_cycle(
    instance: &IndexedInstance,
    t: i64,
    mode: SolveMode,
    p: &MultiCyclePayload,
) -> Result<Verdict, OracleError> {
    let nodes = machine_set(instance, &p.nodes)?;
    let mut seen = BTreeSet::new();
    for id in &p.rocks {
        if !seen.insert(id) {
            return Err(OracleError::MalformedPayload(format!("rock `{id}` listed twice")));
        }
        let Some(job) = instance.jobs.iter().find(|j| &j.id == id) else {
            return refuted(format!("`{id}` is not a job"));
        };
        if job.eligible.len() != 2 || !is_rock(job.weight, t, mode) {
            return refuted(format!("`{id}` is not a rock at t = {t}"));
        }
        if !job.eligible.iter().all(|v| nodes.contains(v)) {
            return refuted(format!("rock `{id}` leaves the component"));
        }
    }
    if p.rocks.len() > nodes.len() {
        Ok(Verdict::Confirmed)
    } else {
        refuted(format!("{} rocks on {} machines", p.rocks.len(), nodes.len()))
    }
}

fn check_hall(instance: &IndexedInstance, t: i64, mode: SolveMode, p: &HallPayload) -> Result<Verdict, OracleError> {
    let Some(ctx) = rebuild(instance, t, mode)? else {
        return refuted("the reduction declares before any matching is tried");
    };
    let mut weights = Vec::new();
    let mut neighborhood = BTreeSet::new();
    for id in &p.jobs {
        let Some(job) = ctx.jobs().into_iter().find(|&j| ctx.job_id(j) == id) else {
            return Err(OracleError::MalformedPayload(format!(
                "`{id}` is not a job of the reduced context"
            )));
        };
        let w = ctx.job_weight(job);
        weights.push(w);
        neighborhood.extend(ctx.job_eligible(job).into_iter().filter(|&v| ctx.dl[v] + w <= t));
    }
    if p.jobs.iter().collect::<BTreeSet<_>>().len() != p.jobs.len() {
        return Err(OracleError::MalformedPayload("job listed twice".into()));
    }
    weights.sort_unstable();
    if weights.len() >= 2 && weights[0] + weights[1] <= t {
        return refuted("two of the jobs fit on one machine");
    }
    if neighborhood.len() < p.jobs.len() {
        Ok(Verdict::Confirmed)
    } else {
        refuted(format!("{} jobs see {} machines", p.jobs.len(), neighborhood.len()))
    }
}

fn check_preflow(
    instance: &IndexedInstance,
    t: i64,
    mode: SolveMode,
    p: &PreflowPayload,
) -> Result<Verdict, OracleError> {
    let cut = machine_set(instance, &p.cut)?;
    let Some(ctx) = rebuild(instance, t, mode)? else {
        return refuted("the reduction declares before the flow core runs");
    };
    let mut captive = Vec::new();
    let mut captive_weight = 0;
    for job in ctx.jobs() {
        if ctx.job_eligible(job).iter().all(|v| cut.contains(v)) {
            captive.push(ctx.job_id(job).to_string());
            captive_weight += ctx.job_weight(job);
        }
    }
    captive.sort();
    let cut_dedicated: i64 = cut.iter().map(|&v| ctx.dl[v]).sum();
    let mut claimed = p.captive_jobs.clone();
    claimed.sort();
    if claimed != captive || p.captive_weight != captive_weight || p.cut_dedicated != cut_dedicated {
        return refuted("captive jobs or loads do not match the recount");
    }
    if captive_weight + cut_dedicated > cut.len() as i64 * t {
        Ok(Verdict::Confirmed)
    } else {
        refuted(format!(
            "captive load {} fits in {} machines",
            captive_weight + cut_dedicated,
            cut.len()
        ))
    }
}

fn check_activated(
    instance: &IndexedInstance,
    t: i64,
    mode: SolveMode,
    p: &ActivatedSetPayload,
) -> Result<Verdict, OracleError> {
    let ids: Vec<String> = p.levels.keys().cloned().collect();
    let active = machine_set(instance, &ids)?;
    let Some(ctx) = rebuild(instance, t, mode)? else {
        return refuted("the reduction declares before the local search runs");
    };
    if p.placement.len() != ctx.pebbles.len() {
        return refuted("placement does not cover the pebbles of the reduced context");
    }
    let mut pl = vec![0i64; ctx.machine_count()];
    let mut closed = true;
    for pebble in &ctx.pebbles {
        let Some(at) = p.placement.get(&pebble.id) else {
            return refuted(format!("pebble `{}` has no position", pebble.id));
        };
        let v = ctx
            .machine_ids
            .iter()
            .position(|m| m == at)
            .ok_or_else(|| OracleError::MalformedPayload(format!("unknown machine `{at}`")))?;
        if !pebble.eligible.contains(&v) {
            return refuted(format!("pebble `{}` sits on ineligible `{at}`", pebble.id));
        }
        pl[v] += pebble.weight;
        if active.contains(&v) && !pebble.eligible.iter().all(|u| active.contains(u)) {
            closed = false;
        }
    }
    for (v, id) in ctx.machine_ids.iter().enumerate() {
        if p.pl.get(id) != Some(&pl[v]) || p.dl.get(id) != Some(&ctx.dl[v]) {
            return refuted(format!("pl or dl of `{id}` does not match the recount"));
        }
    }
    if !closed {
        return refuted("a pebble in the activated set may leave it");
    }
    let subset: Vec<usize> = active.iter().copied().collect();
    let rock_load = min_rock_load_into(&ctx.graph, &subset)?;
    if rock_load.finite() != p.min_rock_load {
        return refuted("min_rock_load does not match the recount");
    }
    let RockLoad::Finite(rock_load) = rock_load else {
        return Ok(Verdict::Confirmed);
    };
    let load: i64 = subset.iter().map(|&v| pl[v] + ctx.dl[v]).sum::<i64>() + rock_load;
    if load > subset.len() as i64 * t {
        return Ok(Verdict::Confirmed);
    }
    match mode {
        SolveMode::General { .. } => refuted(format!("load {load} fits in {} machines", subset.len())),
        SolveMode::TwoValued { .. } => Ok(Verdict::NeedsExhaustive),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, JobSpec, MachineSpec, ModeHint, Rational};

    fn instance(loads: &[i64], jobs: &[(i64, &[usize])]) -> IndexedInstance {
        Instance {
            machines: loads
                .iter()
                .enumerate()
                .map(|(i, &l)| MachineSpec {
                    id: format!("m{}", i + 1),
                    dedicated_load: l,
                })
                .collect(),
            jobs: jobs
                .iter()
                .enumerate()
                .map(|(i, (w, el))| JobSpec {
                    id: format!("j{}", i + 1),
                    weight: *w,
                    eligible: el.iter().map(|v| format!("m{}", v + 1)).collect(),
                })
                .collect(),
            mode_hint: ModeHint::Auto,
        }
        .indexed()
        .unwrap()
    }

    #[test]
    fn two_jobs_with_dedicated_load() {
        let inst = instance(&[3, 0], &[(5, &[0, 1]), (5, &[0, 1])]);
        assert_eq!(exact_opt(&inst).unwrap(), 8);
        assert!(feasible_at(&inst, 8).unwrap());
        assert!(!feasible_at(&inst, 7).unwrap());
    }

    #[test]
    fn single_machine_job() {
        let inst = instance(&[0], &[(9, &[0])]);
        assert_eq!(exact_opt(&inst).unwrap(), 9);
    }

    #[test]
    fn budget_guard() {
        let jobs: Vec<(i64, &[usize])> = (0..17).map(|_| (1, &[0usize, 1][..])).collect();
        let inst = instance(&[0, 0], &jobs);
        assert!(matches!(
            exact_opt(&inst),
            Err(OracleError::BudgetExceeded { jobs: 17, limit: 16 })
        ));
    }

    #[test]
    fn solution_checks() {
        let inst = instance(&[0, 0], &[(4, &[0, 1]), (2, &[1])]);
        let mut a = BTreeMap::from([
            ("j1".to_string(), "m1".to_string()),
            ("j2".to_string(), "m2".to_string()),
        ]);
        assert_eq!(verify_solution(&inst, &a), (true, 4));
        a.insert("j2".into(), "m1".into());
        assert!(!verify_solution(&inst, &a).0);
        a.remove("j2");
        assert!(!verify_solution(&inst, &a).0);
    }

    #[test]
    fn multi_cycle_recount() {
        // Five rocks on four machines.
        let inst = instance(
            &[0, 0, 0, 0],
            &[(6, &[0, 1]), (6, &[1, 2]), (6, &[2, 3]), (6, &[0, 3]), (6, &[0, 2])],
        );
        let mode = SolveMode::General {
            beta: Rational::new(7, 10),
        };
        let Reduced::Declared(decl) = reduce(&inst, 8, mode).unwrap() else {
            panic!("expected a declaration");
        };
        assert_eq!(decl.certificate.kind(), "multi_cycle_component");
        assert_eq!(verify_certificate(&inst, &decl).unwrap(), Verdict::Confirmed);
        let mut bad = decl.clone();
        if let Certificate::MultiCycleComponent(p) = &mut bad.certificate {
            p.rocks.pop();
        }
        assert!(matches!(verify_certificate(&inst, &bad).unwrap(), Verdict::Refuted(_)));
    }

    #[test]
    fn overflow_recount() {
        let inst = instance(&[3, 0], &[(6, &[0])]);
        let mode = SolveMode::General {
            beta: Rational::new(7, 10),
        };
        let decl = Declaration::new(
            8,
            mode,
            Certificate::DedicatedOverflow(OverflowPayload {
                machine: "m1".into(),
                load: 9,
            }),
        );
        assert_eq!(verify_certificate(&inst, &decl).unwrap(), Verdict::Confirmed);
        let decl = Declaration { t: 9, ..decl };
        assert!(matches!(verify_certificate(&inst, &decl).unwrap(), Verdict::Refuted(_)));
    }
}
