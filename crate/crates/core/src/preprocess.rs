//! Per-guess reductions.
//!
//! For a guessed makespan `t` the instance is turned into a [`GuessContext`]:
//! single-machine jobs are folded into dedicated loads, the remaining jobs are
//! split into rocks (heavy, exactly two machines) and pebbles, and the rock
//! graph is simplified until every component is a tree, a cycle of length at
//! least three, or an isolated machine. Any step may instead prove that no
//! schedule of makespan `t` exists, in which case a [`Declaration`] is
//! returned.

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::certificate::{
    ActivatedSetPayload, Certificate, Declaration, MultiCyclePayload, OverflowPayload, SystemSnapshot,
};
use crate::error::SolveError;
use crate::model::{IndexedInstance, Instance, JobSpec, MachineSpec, ModeHint, SolveMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rock {
    pub id: String,
    pub u: usize,
    pub v: usize,
    pub weight: i64,
}

impl Rock {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pebble {
    pub id: String,
    pub weight: i64,
    /// Machine indices, ascending, at least two.
    pub eligible: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Isolated,
    Tree,
    /// Simple cycle: as many edges as nodes, every node of degree two.
    Cycle,
    /// Exactly one cycle with trees hanging off it.
    Unicyclic,
    /// More edges than nodes.
    Overfull,
}

impl ComponentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComponentKind::Isolated => "isolated",
            ComponentKind::Tree => "tree",
            ComponentKind::Cycle => "cycle",
            ComponentKind::Unicyclic => "unicyclic",
            ComponentKind::Overfull => "overfull",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub kind: ComponentKind,
    /// Ascending.
    pub nodes: Vec<usize>,
    /// Ascending edge indices.
    pub edges: Vec<usize>,
}

/// Multigraph of rocks over machines, with its connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RockGraph {
    node_count: usize,
    edges: Vec<Rock>,
    adjacency: Vec<Vec<(usize, usize)>>,
    components: Vec<Component>,
    component_of: Vec<usize>,
}

impl RockGraph {
    pub fn new(node_count: usize, edges: Vec<Rock>) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        for (e, r) in edges.iter().enumerate() {
            adjacency[r.u].push((r.v, e));
            adjacency[r.v].push((r.u, e));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mut component_of = vec![usize::MAX; node_count];
        let mut components = Vec::new();
        for start in 0..node_count {
            if component_of[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut nodes = vec![start];
            let mut edge_set = HashSet::new();
            component_of[start] = id;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &(y, e) in &adjacency[x] {
                    edge_set.insert(e);
                    if component_of[y] == usize::MAX {
                        component_of[y] = id;
                        nodes.push(y);
                        queue.push_back(y);
                    }
                }
            }
            nodes.sort_unstable();
            let mut comp_edges: Vec<usize> = edge_set.into_iter().collect();
            comp_edges.sort_unstable();
            let kind = match comp_edges.len().cmp(&nodes.len()) {
                _ if comp_edges.is_empty() => ComponentKind::Isolated,
                std::cmp::Ordering::Less => ComponentKind::Tree,
                std::cmp::Ordering::Equal => {
                    if nodes.iter().all(|&x| adjacency[x].len() == 2) {
                        ComponentKind::Cycle
                    } else {
                        ComponentKind::Unicyclic
                    }
                }
                std::cmp::Ordering::Greater => ComponentKind::Overfull,
            };
            components.push(Component {
                kind,
                nodes,
                edges: comp_edges,
            });
        }
        RockGraph {
            node_count,
            edges,
            adjacency,
            components,
            component_of,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Rock] {
        &self.edges
    }

    /// `(neighbour, edge index)` pairs, ascending.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    /// Nodes of a unicyclic (or cycle) component that lie on its cycle.
    fn cycle_nodes(&self, comp: &Component) -> Vec<usize> {
        let mut degree: BTreeMap<usize, usize> = comp.nodes.iter().map(|&x| (x, self.adjacency[x].len())).collect();
        let mut removed = HashSet::new();
        let mut queue: VecDeque<usize> = degree.iter().filter(|(_, &d)| d == 1).map(|(&x, _)| x).collect();
        while let Some(x) = queue.pop_front() {
            if !removed.insert(x) {
                continue;
            }
            for &(y, _) in &self.adjacency[x] {
                if removed.contains(&y) {
                    continue;
                }
                let d = degree.get_mut(&y).expect("neighbour in component");
                *d -= 1;
                if *d == 1 {
                    queue.push_back(y);
                }
            }
        }
        comp.nodes.iter().copied().filter(|x| !removed.contains(x)).collect()
    }

    /// Walks the cycle of a unicyclic component starting at its lowest cycle
    /// node. Returns `(edge, from, to)` triples in walking order.
    pub fn cycle_walk(&self, comp: &Component) -> Vec<(usize, usize, usize)> {
        let on_cycle: HashSet<usize> = self.cycle_nodes(comp).into_iter().collect();
        let Some(&start) = comp.nodes.iter().find(|x| on_cycle.contains(x)) else {
            return Vec::new();
        };
        let mut walk = Vec::new();
        let mut used = HashSet::new();
        let mut at = start;
        loop {
            let next = self.adjacency[at]
                .iter()
                .find(|&&(y, e)| on_cycle.contains(&y) && !used.contains(&e));
            let Some(&(y, e)) = next else { break };
            used.insert(e);
            walk.push((e, at, y));
            at = y;
            if at == start {
                break;
            }
        }
        walk
    }

    /// For every edge, the endpoint it points to when every edge of the
    /// component is directed away from `root`. Only meaningful for trees.
    pub fn orient_away_from(&self, root: usize, heads: &mut [usize]) {
        let mut seen = HashSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in &self.adjacency[x] {
                if seen.insert(y) {
                    heads[e] = y;
                    queue.push_back(y);
                }
            }
        }
    }
}

/// Result of [`min_rock_load_into`]: `Unreachable` when some component admits
/// no orientation with at most one incoming rock per machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RockLoad {
    Finite(i64),
    Unreachable,
}

impl RockLoad {
    pub fn finite(self) -> Option<i64> {
        match self {
            RockLoad::Finite(x) => Some(x),
            RockLoad::Unreachable => None,
        }
    }
}

/// Minimum total rock weight directed into `subset`, over all orientations
/// where every machine receives at most one rock.
pub fn min_rock_load_into(graph: &RockGraph, subset: &[usize]) -> Result<RockLoad, SolveError> {
    let mut in_set = vec![false; graph.node_count()];
    for &v in subset {
        if v >= graph.node_count() {
            return Err(SolveError::Precondition(format!("unknown node {v}")));
        }
        in_set[v] = true;
    }
    let cost = |head: usize, w: i64| if in_set[head] { w } else { 0 };
    let mut total = 0i64;
    for comp in graph.components() {
        match comp.kind {
            ComponentKind::Isolated => {}
            ComponentKind::Overfull => return Ok(RockLoad::Unreachable),
            ComponentKind::Tree => {
                total += tree_min_load(graph, comp.nodes[0], &cost);
            }
            ComponentKind::Cycle | ComponentKind::Unicyclic => {
                let walk = graph.cycle_walk(comp);
                let forward: i64 = walk.iter().map(|&(e, _, to)| cost(to, graph.edges()[e].weight)).sum();
                let backward: i64 = walk
                    .iter()
                    .map(|&(e, from, _)| cost(from, graph.edges()[e].weight))
                    .sum();
                let cycle_edges: HashSet<usize> = walk.iter().map(|&(e, _, _)| e).collect();
                let cycle_nodes: HashSet<usize> = walk.iter().map(|&(_, from, _)| from).collect();
                // Hanging trees point away from the cycle.
                let mut hanging = 0;
                let mut seen = cycle_nodes.clone();
                let mut queue: VecDeque<usize> = cycle_nodes.iter().copied().collect();
                while let Some(x) = queue.pop_front() {
                    for &(y, e) in graph.incident(x) {
                        if cycle_edges.contains(&e) || !seen.insert(y) {
                            continue;
                        }
                        hanging += cost(y, graph.edges()[e].weight);
                        queue.push_back(y);
                    }
                }
                total += hanging + forward.min(backward);
            }
        }
    }
    Ok(RockLoad::Finite(total))
}

/// Rooted DP over a tree component. For every node two values are kept:
/// the cheapest subtree cost when the node already receives its parent edge
/// (all child edges then point down), and when it does not (one child edge
/// may point up into it).
fn tree_min_load(graph: &RockGraph, root: usize, cost: &dyn Fn(usize, i64) -> i64) -> i64 {
    let mut order = Vec::new();
    let mut parent: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut stack = vec![root];
    let mut seen = HashSet::from([root]);
    while let Some(x) = stack.pop() {
        order.push(x);
        for &(y, e) in graph.incident(x) {
            if seen.insert(y) {
                parent.insert(y, (x, e));
                stack.push(y);
            }
        }
    }
    let mut receiving: BTreeMap<usize, i64> = BTreeMap::new();
    let mut free: BTreeMap<usize, i64> = BTreeMap::new();
    for &x in order.iter().rev() {
        let mut down_sum = 0;
        let mut best_swap = 0;
        for &(c, e) in graph.incident(x) {
            if parent.get(&c).map(|&(p, pe)| p == x && pe == e) != Some(true) {
                continue;
            }
            let w = graph.edges()[e].weight;
            let down = cost(c, w) + receiving[&c];
            let up = cost(x, w) + free[&c];
            down_sum += down;
            best_swap = best_swap.min(up - down);
        }
        receiving.insert(x, down_sum);
        free.insert(x, down_sum + best_swap);
    }
    free[&root]
}

/// One step of the reduction log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Reduction {
    FoldSingle {
        job: String,
        machine: String,
        weight: i64,
    },
    Classify {
        rocks: usize,
        pebbles: usize,
    },
    FoldTreeRock {
        rock: String,
        machine: String,
        weight: i64,
    },
    ParallelPair {
        heavy: String,
        light: String,
        u: String,
        v: String,
        shared: i64,
        pebble: Option<String>,
        difference: i64,
    },
}

/// Two parallel rocks replaced by shared dedicated load and a difference pebble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    pub heavy: String,
    pub light: String,
    pub u: usize,
    pub v: usize,
    pub pebble: Option<usize>,
}

/// A job of the reduced context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextJob {
    Rock(usize),
    Pebble(usize),
}

/// Where every rock and pebble of a context goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextAssignment {
    pub rock_heads: Vec<usize>,
    pub pebble_at: Vec<usize>,
}

impl ContextAssignment {
    pub fn loads(&self, ctx: &GuessContext) -> Vec<i64> {
        let mut loads = ctx.dl.clone();
        for (r, &h) in self.rock_heads.iter().enumerate() {
            loads[h] += ctx.graph.edges()[r].weight;
        }
        for (p, &v) in self.pebble_at.iter().enumerate() {
            loads[v] += ctx.pebbles[p].weight;
        }
        loads
    }

    pub fn makespan(&self, ctx: &GuessContext) -> i64 {
        self.loads(ctx).into_iter().max().unwrap_or(0)
    }
}

/// Derived state for one guess `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessContext {
    pub t: i64,
    pub mode: SolveMode,
    pub machine_ids: Vec<String>,
    pub dl: Vec<i64>,
    pub pebbles: Vec<Pebble>,
    pub graph: RockGraph,
    pub reductions: Vec<Reduction>,
    /// Original jobs whose machine is fixed by the reductions.
    pub forced: Vec<(String, usize)>,
    pub pairs: Vec<ParallelPair>,
}

impl GuessContext {
    pub fn machine_count(&self) -> usize {
        self.machine_ids.len()
    }

    pub fn rocks(&self) -> &[Rock] {
        self.graph.edges()
    }

    /// Rocks first, then pebbles.
    pub fn jobs(&self) -> Vec<ContextJob> {
        (0..self.rocks().len())
            .map(ContextJob::Rock)
            .chain((0..self.pebbles.len()).map(ContextJob::Pebble))
            .collect()
    }

    pub fn job_weight(&self, job: ContextJob) -> i64 {
        match job {
            ContextJob::Rock(r) => self.rocks()[r].weight,
            ContextJob::Pebble(p) => self.pebbles[p].weight,
        }
    }

    pub fn job_id(&self, job: ContextJob) -> &str {
        match job {
            ContextJob::Rock(r) => &self.rocks()[r].id,
            ContextJob::Pebble(p) => &self.pebbles[p].id,
        }
    }

    pub fn job_eligible(&self, job: ContextJob) -> Vec<usize> {
        match job {
            ContextJob::Rock(r) => {
                let rock = &self.rocks()[r];
                vec![rock.u.min(rock.v), rock.u.max(rock.v)]
            }
            ContextJob::Pebble(p) => self.pebbles[p].eligible.clone(),
        }
    }

    /// Starting placement: every pebble on its lowest-indexed eligible machine.
    pub fn initial_placement(&self) -> Vec<usize> {
        self.pebbles.iter().map(|p| p.eligible[0]).collect()
    }

    /// The reduced context as a standalone instance (rocks then pebbles).
    pub fn to_instance(&self) -> Instance {
        let machines = self
            .machine_ids
            .iter()
            .zip(&self.dl)
            .map(|(id, &dl)| MachineSpec {
                id: id.clone(),
                dedicated_load: dl,
            })
            .collect();
        let jobs = self
            .jobs()
            .into_iter()
            .map(|j| JobSpec {
                id: self.job_id(j).to_string(),
                weight: self.job_weight(j),
                eligible: self
                    .job_eligible(j)
                    .into_iter()
                    .map(|v| self.machine_ids[v].clone())
                    .collect(),
            })
            .collect();
        Instance {
            machines,
            jobs,
            mode_hint: match self.mode {
                SolveMode::TwoValued { .. } => ModeHint::TwoValued,
                SolveMode::General { .. } => ModeHint::General,
            },
        }
    }

    /// Declaration payload for a stuck local search. `levels` is indexed by
    /// machine, `None` meaning not activated.
    pub fn activated_payload(
        &self,
        levels: &[Option<usize>],
        conflict: &[usize],
        systems: Vec<SystemSnapshot>,
        placement: &[usize],
    ) -> Result<ActivatedSetPayload, SolveError> {
        let name = |v: usize| self.machine_ids[v].clone();
        let activated: Vec<usize> = (0..self.machine_count()).filter(|&v| levels[v].is_some()).collect();
        let mut pl = vec![0; self.machine_count()];
        for (p, &v) in placement.iter().enumerate() {
            pl[v] += self.pebbles[p].weight;
        }
        Ok(ActivatedSetPayload {
            levels: activated
                .iter()
                .map(|&v| (name(v), levels[v].expect("activated")))
                .collect(),
            conflict_set: conflict.iter().map(|&v| name(v)).collect(),
            systems,
            placement: placement
                .iter()
                .enumerate()
                .map(|(p, &v)| (self.pebbles[p].id.clone(), name(v)))
                .collect(),
            pl: (0..self.machine_count()).map(|v| (name(v), pl[v])).collect(),
            dl: (0..self.machine_count()).map(|v| (name(v), self.dl[v])).collect(),
            min_rock_load: min_rock_load_into(&self.graph, &activated)?.finite(),
        })
    }

    /// Maps a context assignment back onto the jobs of the original instance.
    pub fn lift(&self, assignment: &ContextAssignment) -> BTreeMap<String, String> {
        let name = |v: usize| self.machine_ids[v].clone();
        let mut out = BTreeMap::new();
        for (job, v) in &self.forced {
            out.insert(job.clone(), name(*v));
        }
        for (r, rock) in self.rocks().iter().enumerate() {
            out.insert(rock.id.clone(), name(assignment.rock_heads[r]));
        }
        let synthetic: HashSet<usize> = self.pairs.iter().filter_map(|p| p.pebble).collect();
        for (p, pebble) in self.pebbles.iter().enumerate() {
            if !synthetic.contains(&p) {
                out.insert(pebble.id.clone(), name(assignment.pebble_at[p]));
            }
        }
        for pair in &self.pairs {
            let heavy_at = match pair.pebble {
                Some(p) if assignment.pebble_at[p] == pair.v => pair.v,
                _ => pair.u,
            };
            let light_at = if heavy_at == pair.u { pair.v } else { pair.u };
            out.insert(pair.heavy.clone(), name(heavy_at));
            out.insert(pair.light.clone(), name(light_at));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Reduced {
    Context(Box<GuessContext>),
    Declared(Declaration),
}

impl Reduced {
    pub fn context(self) -> Option<GuessContext> {
        match self {
            Reduced::Context(ctx) => Some(*ctx),
            Reduced::Declared(_) => None,
        }
    }
}

/// Whether a multi-machine job of this weight is a rock at guess `t`.
pub fn is_rock(weight: i64, t: i64, mode: SolveMode) -> bool {
    match mode {
        SolveMode::TwoValued { heavy, .. } => weight == heavy && 2 * weight > t,
        SolveMode::General { beta } => weight as i128 * *beta.denom() as i128 > *beta.numer() as i128 * t as i128,
    }
}

/// Splits the multi-machine jobs into rocks and pebbles. Indices refer to
/// `instance.jobs`.
pub fn classify_jobs(
    instance: &IndexedInstance,
    t: i64,
    mode: SolveMode,
) -> Result<(Vec<usize>, Vec<usize>), SolveError> {
    let mut rocks = Vec::new();
    let mut pebbles = Vec::new();
    for (i, job) in instance.jobs.iter().enumerate() {
        if job.eligible.len() < 2 {
            continue;
        }
        if is_rock(job.weight, t, mode) {
            if job.eligible.len() > 2 {
                return Err(SolveError::Precondition(format!(
                    "rock `{}` has {} eligible machines",
                    job.id,
                    job.eligible.len()
                )));
            }
            rocks.push(i);
        } else {
            pebbles.push(i);
        }
    }
    Ok((rocks, pebbles))
}

fn overflow(t: i64, mode: SolveMode, dl: &[i64], ids: &[String]) -> Option<Declaration> {
    dl.iter().position(|&x| x > t).map(|v| {
        Declaration::new(
            t,
            mode,
            Certificate::DedicatedOverflow(OverflowPayload {
                machine: ids[v].clone(),
                load: dl[v],
            }),
        )
    })
}

fn unique_id(base: String, taken: &mut HashSet<String>) -> String {
    let mut id = base;
    while taken.contains(&id) {
        id.push('\'');
    }
    taken.insert(id.clone());
    id
}

/// Applies every reduction for guess `t`, to a fixpoint.
pub fn reduce(instance: &IndexedInstance, t: i64, mode: SolveMode) -> Result<Reduced, SolveError> {
    if t < instance.max_weight() {
        return Err(SolveError::Precondition(format!(
            "guess {t} is below the largest job weight {}",
            instance.max_weight()
        )));
    }
    let ids = &instance.machine_ids;
    let mut dl = instance.dedicated.clone();
    let mut reductions = Vec::new();
    let mut forced = Vec::new();
    for job in instance.jobs.iter().filter(|j| j.eligible.len() == 1) {
        let v = job.eligible[0];
        dl[v] += job.weight;
        forced.push((job.id.clone(), v));
        reductions.push(Reduction::FoldSingle {
            job: job.id.clone(),
            machine: ids[v].clone(),
            weight: job.weight,
        });
    }
    if let Some(decl) = overflow(t, mode, &dl, ids) {
        return Ok(Reduced::Declared(decl));
    }

    let (rock_jobs, pebble_jobs) = classify_jobs(instance, t, mode)?;
    reductions.push(Reduction::Classify {
        rocks: rock_jobs.len(),
        pebbles: pebble_jobs.len(),
    });
    let mut taken: HashSet<String> = instance.jobs.iter().map(|j| j.id.clone()).collect();
    let mut rocks: Vec<Rock> = rock_jobs
        .iter()
        .map(|&i| {
            let job = &instance.jobs[i];
            Rock {
                id: job.id.clone(),
                u: job.eligible[0],
                v: job.eligible[1],
                weight: job.weight,
            }
        })
        .collect();
    let mut pebbles: Vec<Pebble> = pebble_jobs
        .iter()
        .map(|&i| {
            let job = &instance.jobs[i];
            Pebble {
                id: job.id.clone(),
                weight: job.weight,
                eligible: job.eligible.clone(),
            }
        })
        .collect();
    let mut pairs = Vec::new();

    loop {
        let graph = RockGraph::new(dl.len(), rocks.clone());
        if let Some(comp) = graph.components().iter().find(|c| c.kind == ComponentKind::Overfull) {
            return Ok(Reduced::Declared(Declaration::new(
                t,
                mode,
                Certificate::MultiCycleComponent(MultiCyclePayload {
                    nodes: comp.nodes.iter().map(|&v| ids[v].clone()).collect(),
                    rocks: comp.edges.iter().map(|&e| rocks[e].id.clone()).collect(),
                }),
            )));
        }

        let mut removed = vec![false; rocks.len()];
        let mut changed = false;

        // Tree edges hanging off a cycle must point away from it: fold them,
        // leaf by leaf, into the machine they point to.
        for comp in graph.components().iter().filter(|c| c.kind == ComponentKind::Unicyclic) {
            let mut degree: BTreeMap<usize, usize> = comp.nodes.iter().map(|&x| (x, graph.incident(x).len())).collect();
            let mut leaves: VecDeque<usize> = degree.iter().filter(|(_, &d)| d == 1).map(|(&x, _)| x).collect();
            while let Some(leaf) = leaves.pop_front() {
                let Some(&(parent, e)) = graph.incident(leaf).iter().find(|&&(_, e)| !removed[e]) else {
                    continue;
                };
                removed[e] = true;
                changed = true;
                dl[leaf] += rocks[e].weight;
                forced.push((rocks[e].id.clone(), leaf));
                reductions.push(Reduction::FoldTreeRock {
                    rock: rocks[e].id.clone(),
                    machine: ids[leaf].clone(),
                    weight: rocks[e].weight,
                });
                *degree.get_mut(&leaf).expect("leaf in component") -= 1;
                let d = degree.get_mut(&parent).expect("parent in component");
                *d -= 1;
                if *d == 1 {
                    leaves.push_back(parent);
                }
            }
        }
        if changed {
            if let Some(decl) = overflow(t, mode, &dl, ids) {
                return Ok(Reduced::Declared(decl));
            }
        }

        // Two rocks between the same machines: each machine takes one of them.
        let mut by_ends: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (e, r) in rocks.iter().enumerate() {
            if !removed[e] {
                by_ends.entry((r.u.min(r.v), r.u.max(r.v))).or_default().push(e);
            }
        }
        let mut paired = false;
        for ((u, v), es) in by_ends.into_iter().filter(|(_, es)| es.len() == 2) {
            let (a, b) = (es[0], es[1]);
            let (heavy, light) = if rocks[a].weight >= rocks[b].weight {
                (a, b)
            } else {
                (b, a)
            };
            let shared = rocks[light].weight;
            let difference = rocks[heavy].weight - shared;
            dl[u] += shared;
            dl[v] += shared;
            removed[a] = true;
            removed[b] = true;
            let pebble = (difference > 0).then(|| {
                let id = unique_id(format!("{}+{}", rocks[heavy].id, rocks[light].id), &mut taken);
                pebbles.push(Pebble {
                    id,
                    weight: difference,
                    eligible: vec![u, v],
                });
                pebbles.len() - 1
            });
            reductions.push(Reduction::ParallelPair {
                heavy: rocks[heavy].id.clone(),
                light: rocks[light].id.clone(),
                u: ids[u].clone(),
                v: ids[v].clone(),
                shared,
                pebble: pebble.map(|p| pebbles[p].id.clone()),
                difference,
            });
            pairs.push(ParallelPair {
                heavy: rocks[heavy].id.clone(),
                light: rocks[light].id.clone(),
                u,
                v,
                pebble,
            });
            paired = true;
        }
        if paired {
            changed = true;
            if let Some(decl) = overflow(t, mode, &dl, ids) {
                return Ok(Reduced::Declared(decl));
            }
        }

        if !changed {
            return Ok(Reduced::Context(Box::new(GuessContext {
                t,
                mode,
                machine_ids: ids.clone(),
                dl,
                pebbles,
                graph,
                reductions,
                forced,
                pairs,
            })));
        }
        rocks = rocks
            .into_iter()
            .zip(removed)
            .filter_map(|(r, gone)| (!gone).then_some(r))
            .collect();
    }
}
