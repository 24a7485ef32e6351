//! Flow core for large guesses.
//!
//! A push-relabel max-flow on `source -> job -> machine -> sink`, where a
//! machine can absorb `t - dl(v)`. A flow that routes every job gives a
//! fractional schedule within `t`; after cancelling cycles among split jobs
//! their support is a forest and each machine takes at most one split job,
//! so the rounded makespan is at most `t + W - 1`. A smaller max-flow yields
//! a cut of machines that cannot hold the jobs confined to it.

use std::collections::{BTreeMap, VecDeque};

use crate::certificate::{Certificate, Declaration, PreflowPayload};
use crate::error::SolveError;
use crate::outcome::{CoreOutcome, CoreStats};
use crate::preprocess::{ContextAssignment, ContextJob, GuessContext};

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    initial: i64,
    rev: usize,
}

/// Residual network solved by FIFO push-relabel.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Vec<Arc>>,
    height: Vec<usize>,
    excess: Vec<i64>,
    ops: u64,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            arcs: vec![Vec::new(); nodes],
            height: vec![0; nodes],
            excess: vec![0; nodes],
            ops: 0,
        }
    }

    /// Returns the position of the arc in `from`'s list.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let fwd = self.arcs[from].len();
        let back = self.arcs[to].len() + usize::from(from == to);
        self.arcs[from].push(Arc {
            to,
            cap,
            initial: cap,
            rev: back,
        });
        self.arcs[to].push(Arc {
            to: from,
            cap: 0,
            initial: 0,
            rev: fwd,
        });
        fwd
    }

    pub fn node_count(&self) -> usize {
        self.arcs.len()
    }

    fn arc_count(&self) -> u64 {
        self.arcs.iter().map(|a| a.len() as u64).sum::<u64>() / 2
    }

    /// Generic bound on pushes plus relabels.
    pub fn op_limit(&self) -> u64 {
        let n = self.node_count() as u64;
        let e = self.arc_count().max(1);
        2 * n * n + 2 * n * e + 4 * n * n * e
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn height(&self, v: usize) -> usize {
        self.height[v]
    }

    /// Flow currently on the arc `arc` leaving `from`.
    pub fn flow(&self, from: usize, arc: usize) -> i64 {
        let a = &self.arcs[from][arc];
        a.initial - a.cap
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> Result<i64, SolveError> {
        let n = self.node_count();
        let limit = self.op_limit();
        self.height[source] = n;
        let mut queue = VecDeque::new();
        let mut queued = vec![false; n];
        for i in 0..self.arcs[source].len() {
            let cap = self.arcs[source][i].cap;
            if cap > 0 {
                self.push(source, i, cap);
                let to = self.arcs[source][i].to;
                if to != sink && !queued[to] {
                    queued[to] = true;
                    queue.push_back(to);
                }
            }
        }
        let mut cursor = vec![0usize; n];
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            while self.excess[u] > 0 {
                if self.ops > limit {
                    return Err(SolveError::Invariant(format!(
                        "push-relabel exceeded its operation bound {limit}"
                    )));
                }
                if cursor[u] == self.arcs[u].len() {
                    let lowest = self.arcs[u]
                        .iter()
                        .filter(|a| a.cap > 0)
                        .map(|a| self.height[a.to])
                        .min()
                        .ok_or_else(|| SolveError::Invariant("excess with no residual arc".into()))?;
                    self.height[u] = lowest + 1;
                    self.ops += 1;
                    cursor[u] = 0;
                    continue;
                }
                let i = cursor[u];
                let (to, cap) = (self.arcs[u][i].to, self.arcs[u][i].cap);
                if cap > 0 && self.height[u] == self.height[to] + 1 {
                    let amount = cap.min(self.excess[u]);
                    self.push(u, i, amount);
                    if to != source && to != sink && !queued[to] {
                        queued[to] = true;
                        queue.push_back(to);
                    }
                } else {
                    cursor[u] += 1;
                }
            }
        }
        Ok(self.excess[sink])
    }

    fn push(&mut self, from: usize, arc: usize, amount: i64) {
        let (to, rev) = (self.arcs[from][arc].to, self.arcs[from][arc].rev);
        self.arcs[from][arc].cap -= amount;
        self.arcs[to][rev].cap += amount;
        self.excess[from] -= amount;
        self.excess[to] += amount;
        self.ops += 1;
    }

    /// Nodes reachable from `source` through arcs with residual capacity.
    pub fn residual_reach(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for a in &self.arcs[u] {
                if a.cap > 0 && !seen[a.to] {
                    seen[a.to] = true;
                    queue.push_back(a.to);
                }
            }
        }
        seen
    }
}

/// Finds a cycle in the bipartite support graph (jobs then machines).
/// Returns the cycle as a node sequence, first node repeated at the end.
fn find_cycle(support: &[BTreeMap<usize, i64>], jobs: usize, machines: usize) -> Option<Vec<usize>> {
    let total = jobs + machines;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (j, flows) in support.iter().enumerate() {
        for &v in flows.keys() {
            adj[j].push(jobs + v);
            adj[jobs + v].push(j);
        }
    }
    let mut parent = vec![usize::MAX; total];
    let mut depth = vec![usize::MAX; total];
    for start in 0..total {
        if depth[start] != usize::MAX || adj[start].is_empty() {
            continue;
        }
        depth[start] = 0;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if y == parent[x] {
                    continue;
                }
                if depth[y] == usize::MAX {
                    depth[y] = depth[x] + 1;
                    parent[y] = x;
                    stack.push(y);
                } else {
                    // Non-tree edge x-y closes a cycle through their common ancestor.
                    let (mut a, mut b) = (x, y);
                    let mut left = vec![a];
                    let mut right = vec![b];
                    while a != b {
                        if depth[a] >= depth[b] {
                            a = parent[a];
                            left.push(a);
                        } else {
                            b = parent[b];
                            right.push(b);
                        }
                    }
                    right.pop();
                    right.reverse();
                    left.extend(right);
                    left.push(x);
                    return Some(left);
                }
            }
        }
    }
    None
}

/// Rotates flow around cycles among split jobs until their support is a forest.
fn cancel_cycles(support: &mut [BTreeMap<usize, i64>], jobs: usize, machines: usize) {
    while let Some(cycle) = find_cycle(support, jobs, machines) {
        let steps: Vec<(usize, usize)> = cycle.windows(2).map(|p| (p[0], p[1])).collect();
        // Job->machine steps gain, machine->job steps lose.
        let edge = |a: usize, b: usize| {
            if a < jobs {
                (a, b - jobs, true)
            } else {
                (b, a - jobs, false)
            }
        };
        let delta = steps
            .iter()
            .map(|&(a, b)| edge(a, b))
            .filter(|&(_, _, gain)| !gain)
            .map(|(j, v, _)| support[j][&v])
            .min()
            .expect("a cycle has losing edges");
        for &(a, b) in &steps {
            let (j, v, gain) = edge(a, b);
            let f = support[j].get_mut(&v).expect("cycle edge in support");
            if gain {
                *f += delta;
            } else {
                *f -= delta;
            }
            if *f == 0 {
                support[j].remove(&v);
            }
        }
    }
}

pub fn run_preflow_core(ctx: &GuessContext, stats: &mut CoreStats) -> Result<CoreOutcome, SolveError> {
    let t = ctx.t;
    let jobs = ctx.jobs();
    let m = ctx.machine_count();
    let nj = jobs.len();
    let source = 0;
    let sink = nj + m + 1;
    let machine_node = |v: usize| 1 + nj + v;
    let total: i64 = jobs.iter().map(|&j| ctx.job_weight(j)).sum();
    let mut net = FlowNetwork::new(nj + m + 2);
    let mut job_arcs = Vec::with_capacity(nj);
    for (i, &job) in jobs.iter().enumerate() {
        net.add_arc(source, 1 + i, ctx.job_weight(job));
        let arcs: Vec<(usize, usize)> = ctx
            .job_eligible(job)
            .into_iter()
            .map(|v| (v, net.add_arc(1 + i, machine_node(v), total + 1)))
            .collect();
        job_arcs.push(arcs);
    }
    for v in 0..m {
        net.add_arc(machine_node(v), sink, (t - ctx.dl[v]).max(0));
    }
    let value = net.max_flow(source, sink)?;
    stats.flow_ops += net.ops();

    if value < total {
        let reach = net.residual_reach(source);
        let cut: Vec<usize> = (0..m).filter(|&v| reach[machine_node(v)]).collect();
        let in_cut = |v: usize| cut.binary_search(&v).is_ok();
        let captive: Vec<ContextJob> = jobs
            .iter()
            .copied()
            .filter(|&j| ctx.job_eligible(j).into_iter().all(in_cut))
            .collect();
        let captive_weight: i64 = captive.iter().map(|&j| ctx.job_weight(j)).sum();
        let cut_dedicated: i64 = cut.iter().map(|&v| ctx.dl[v]).sum();
        if captive_weight + cut_dedicated <= cut.len() as i64 * t {
            return Err(SolveError::Invariant("flow cut does not separate".into()));
        }
        let mut captive_jobs: Vec<String> = captive.iter().map(|&j| ctx.job_id(j).to_string()).collect();
        captive_jobs.sort();
        return Ok(CoreOutcome::Declared(Declaration::new(
            t,
            ctx.mode,
            Certificate::PreflowHeight(PreflowPayload {
                cut: cut.iter().map(|&v| ctx.machine_ids[v].clone()).collect(),
                heights: (0..m)
                    .map(|v| (ctx.machine_ids[v].clone(), net.height(machine_node(v))))
                    .collect(),
                captive_jobs,
                captive_weight,
                cut_dedicated,
            }),
        )));
    }

    let mut support: Vec<BTreeMap<usize, i64>> = job_arcs
        .iter()
        .enumerate()
        .map(|(i, arcs)| {
            arcs.iter()
                .map(|&(v, a)| (v, net.flow(1 + i, a)))
                .filter(|&(_, f)| f > 0)
                .collect()
        })
        .collect();
    cancel_cycles(&mut support, nj, m);

    let mut target = vec![usize::MAX; nj];
    for (i, flows) in support.iter().enumerate() {
        if flows.len() == 1 {
            target[i] = *flows.keys().next().expect("one entry");
        }
    }
    // Split jobs: root each tree of the support forest at a machine and give
    // every job to one of its child machines.
    let mut machine_jobs: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, flows) in support.iter().enumerate() {
        if flows.len() > 1 {
            for &v in flows.keys() {
                machine_jobs[v].push(i);
            }
        }
    }
    let mut visited_machine = vec![false; m];
    for root in 0..m {
        if visited_machine[root] || machine_jobs[root].is_empty() {
            continue;
        }
        visited_machine[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &i in &machine_jobs[v] {
                if target[i] != usize::MAX {
                    continue;
                }
                let children: Vec<usize> = support[i].keys().copied().filter(|&c| c != v).collect();
                target[i] = children[0];
                for c in children {
                    if !visited_machine[c] {
                        visited_machine[c] = true;
                        queue.push_back(c);
                    }
                }
            }
        }
    }

    let mut rock_heads = vec![usize::MAX; ctx.rocks().len()];
    let mut pebble_at = vec![usize::MAX; ctx.pebbles.len()];
    for (i, &job) in jobs.iter().enumerate() {
        match job {
            ContextJob::Rock(r) => rock_heads[r] = target[i],
            ContextJob::Pebble(p) => pebble_at[p] = target[i],
        }
    }
    let assignment = ContextAssignment { rock_heads, pebble_at };
    let w_max = jobs.iter().map(|&j| ctx.job_weight(j)).max().unwrap_or(1);
    if assignment.makespan(ctx) > t + w_max - 1 {
        return Err(SolveError::Invariant(format!(
            "rounded flow has makespan {} above t + W - 1 = {}",
            assignment.makespan(ctx),
            t + w_max - 1
        )));
    }
    Ok(CoreOutcome::Accepted(assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, JobSpec, MachineSpec, ModeHint, SolveMode};
    use crate::preprocess::reduce;

    fn ctx(loads: &[i64], jobs: &[(i64, &[usize])], t: i64) -> GuessContext {
        let inst = Instance {
            machines: loads
                .iter()
                .enumerate()
                .map(|(i, &l)| MachineSpec {
                    id: format!("m{i}"),
                    dedicated_load: l,
                })
                .collect(),
            jobs: jobs
                .iter()
                .enumerate()
                .map(|(i, (w, el))| JobSpec {
                    id: format!("j{i}"),
                    weight: *w,
                    eligible: el.iter().map(|v| format!("m{v}")).collect(),
                })
                .collect(),
            mode_hint: ModeHint::TwoValued,
        };
        reduce(&inst.indexed().unwrap(), t, SolveMode::TwoValued { heavy: 3, light: 1 })
            .unwrap()
            .context()
            .unwrap()
    }

    #[test]
    fn four_threes_on_two_machines() {
        let c = ctx(&[0, 0], &[(3, &[0, 1]), (3, &[0, 1]), (3, &[0, 1]), (3, &[0, 1])], 6);
        let mut stats = CoreStats::default();
        match run_preflow_core(&c, &mut stats).unwrap() {
            CoreOutcome::Accepted(a) => assert!(a.makespan(&c) <= 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(stats.flow_ops > 0);
    }

    #[test]
    fn only_dedicated_load() {
        let c = ctx(&[4, 2], &[], 6);
        let mut stats = CoreStats::default();
        assert!(matches!(
            run_preflow_core(&c, &mut stats).unwrap(),
            CoreOutcome::Accepted(_)
        ));
    }

    #[test]
    fn overfull_pair_gives_cut() {
        let c = ctx(&[4, 0, 0], &[(3, &[0, 1]), (3, &[0, 1]), (3, &[0, 1]), (1, &[1, 2])], 6);
        let mut stats = CoreStats::default();
        match run_preflow_core(&c, &mut stats).unwrap() {
            CoreOutcome::Declared(d) => match d.certificate {
                Certificate::PreflowHeight(p) => {
                    assert_eq!(p.cut, vec!["m0", "m1"]);
                    assert_eq!(p.captive_weight, 9);
                    assert!(p.captive_weight + p.cut_dedicated > 2 * 6);
                }
                other => panic!("unexpected {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_cancelling_leaves_a_forest() {
        // Two jobs split over the same two machines form a 4-cycle.
        let mut support = vec![BTreeMap::from([(0, 2), (1, 3)]), BTreeMap::from([(0, 3), (1, 2)])];
        cancel_cycles(&mut support, 2, 2);
        assert!(find_cycle(&support, 2, 2).is_none());
        let job_totals: Vec<i64> = support.iter().map(|f| f.values().sum()).collect();
        assert_eq!(job_totals, vec![5, 5]);
        let m0: i64 = support.iter().filter_map(|f| f.get(&0)).sum();
        assert_eq!(m0, 5);
    }
}
