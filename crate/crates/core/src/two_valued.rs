//! Local search for two job weights when `2w <= t < 2W`.
//!
//! Rocks have weight `W`, pebbles weight `w`. Machines are classified by
//! `dl + pl` against three thresholds; a system (component of the rock graph)
//! is bad when it cannot be oriented within the makespan bound. Pebbles are
//! pushed outward through levels computed by [`State2V::explore1`] until no
//! bad system remains, or no push is possible and the guess is refuted.

use crate::certificate::{Certificate, Declaration, SystemSnapshot, SystemStatusTag};
use crate::error::SolveError;
use crate::model::{Rational, SolveMode};
use crate::outcome::{levels_monotone, potential, CoreOutcome, CoreStats};
use crate::preprocess::{Component, ComponentKind, ContextAssignment, GuessContext};
use crate::trace::{Trace, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Bound `1.5 t`.
    Standard,
    /// Bound `t + floor(W / 2)`, valid when `W >= 2w`.
    Improved,
}

/// Classification thresholds, stored doubled so half-integers stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds2V {
    pub variant: Variant,
    uncritical_max2: i64,
    critical_min2: i64,
    hyper_min2: i64,
    bound2: i64,
}

impl Thresholds2V {
    pub fn new(t: i64, heavy: i64, light: i64, variant: Variant) -> Self {
        let (top2, bound2) = match variant {
            Variant::Standard => (3 * t, 3 * t),
            Variant::Improved => (2 * (t + heavy / 2), 2 * (t + heavy / 2)),
        };
        Thresholds2V {
            variant,
            uncritical_max2: top2 - 2 * heavy - 2 * light,
            critical_min2: top2 - 2 * heavy,
            hyper_min2: top2,
            bound2,
        }
    }

    pub fn uncritical_max(&self) -> Rational {
        Rational::new(self.uncritical_max2, 2)
    }

    pub fn critical_min_exclusive(&self) -> Rational {
        Rational::new(self.critical_min2, 2)
    }

    pub fn hyper_min_exclusive(&self) -> Rational {
        Rational::new(self.hyper_min2, 2)
    }

    pub fn makespan_bound(&self) -> Rational {
        Rational::new(self.bound2, 2)
    }

    pub fn within_bound(&self, load: i64) -> bool {
        2 * load <= self.bound2
    }

    pub fn classify(&self, load: i64) -> NodeClass {
        let x = 2 * load;
        if x > self.hyper_min2 {
            NodeClass::Hypercritical
        } else if x > self.critical_min2 {
            NodeClass::Critical
        } else if x <= self.uncritical_max2 {
            NodeClass::Uncritical
        } else {
            NodeClass::Middle
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeClass {
    Uncritical,
    /// Neither uncritical nor critical.
    Middle,
    Critical,
    Hypercritical,
}

impl NodeClass {
    /// Hypercritical nodes are critical too.
    pub fn is_critical(self) -> bool {
        self >= NodeClass::Critical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemStatus {
    Good,
    Bad,
}

pub fn system_status(kind: ComponentKind, classes: impl IntoIterator<Item = NodeClass>) -> SystemStatus {
    let mut critical = 0;
    for c in classes {
        if c == NodeClass::Hypercritical {
            return SystemStatus::Bad;
        }
        if c.is_critical() {
            critical += 1;
        }
    }
    let bad = match kind {
        ComponentKind::Tree => critical >= 2,
        ComponentKind::Cycle | ComponentKind::Unicyclic | ComponentKind::Overfull => critical >= 1,
        ComponentKind::Isolated => false,
    };
    if bad {
        SystemStatus::Bad
    } else {
        SystemStatus::Good
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PushMove {
    pub pebble: usize,
    pub from: usize,
    pub to: usize,
    generation: u64,
}

/// Pebble placement and the levels derived from it.
#[derive(Debug, Clone)]
pub struct State2V<'a> {
    ctx: &'a GuessContext,
    th: Thresholds2V,
    placement: Vec<usize>,
    pl: Vec<i64>,
    levels: Vec<Option<usize>>,
    generation: u64,
}

impl<'a> State2V<'a> {
    pub fn new(ctx: &'a GuessContext, th: Thresholds2V) -> Self {
        Self::with_placement(ctx, th, ctx.initial_placement())
    }

    pub fn with_placement(ctx: &'a GuessContext, th: Thresholds2V, placement: Vec<usize>) -> Self {
        let mut pl = vec![0; ctx.machine_count()];
        for (p, &v) in placement.iter().enumerate() {
            pl[v] += ctx.pebbles[p].weight;
        }
        let mut state = State2V {
            ctx,
            th,
            placement,
            pl,
            levels: vec![None; ctx.machine_count()],
            generation: 0,
        };
        state.explore1();
        state
    }

    pub fn placement(&self) -> &[usize] {
        &self.placement
    }

    pub fn pl(&self, v: usize) -> i64 {
        self.pl[v]
    }

    pub fn levels(&self) -> &[Option<usize>] {
        &self.levels
    }

    pub fn potential(&self) -> u64 {
        potential(&self.levels, &self.placement)
    }

    pub fn classify_node(&self, v: usize) -> NodeClass {
        self.th.classify(self.ctx.dl[v] + self.pl[v])
    }

    fn component(&self, v: usize) -> &Component {
        &self.ctx.graph.components()[self.ctx.graph.component_of(v)]
    }

    /// Status of the system containing `v`, with `extra` added to `v`'s load.
    fn status_with(&self, v: usize, extra: i64) -> SystemStatus {
        let comp = self.component(v);
        system_status(
            comp.kind,
            comp.nodes.iter().map(|&x| {
                let load = self.ctx.dl[x] + self.pl[x] + if x == v { extra } else { 0 };
                self.th.classify(load)
            }),
        )
    }

    pub fn system_status_of(&self, v: usize) -> SystemStatus {
        self.status_with(v, 0)
    }

    pub fn has_bad_system(&self) -> bool {
        self.ctx
            .graph
            .components()
            .iter()
            .any(|c| self.system_status_of(c.nodes[0]) == SystemStatus::Bad)
    }

    fn reachable(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.placement
            .iter()
            .enumerate()
            .filter(move |&(_, &at)| at == u)
            .flat_map(move |(p, _)| self.ctx.pebbles[p].eligible.iter().copied())
            .filter(move |&v| v != u)
    }

    /// Recomputes levels from scratch.
    pub fn explore1(&mut self) -> &[Option<usize>] {
        let n = self.ctx.machine_count();
        let mut levels: Vec<Option<usize>> = (0..n)
            .map(|v| {
                let class = self.classify_node(v);
                let seed = class == NodeClass::Hypercritical
                    || (class.is_critical() && self.system_status_of(v) == SystemStatus::Bad);
                seed.then_some(0)
            })
            .collect();
        let mut round = 0;
        loop {
            let mut fresh = vec![false; n];
            for u in (0..n).filter(|&u| levels[u].is_some()) {
                for v in self.reachable(u) {
                    if levels[v].is_none() {
                        fresh[v] = true;
                    }
                }
            }
            if !fresh.iter().any(|&f| f) {
                break;
            }
            round += 1;
            let mut added = fresh.clone();
            for v in (0..n).filter(|&v| fresh[v]) {
                for &x in &self.component(v).nodes {
                    if levels[x].is_none()
                        && !added[x]
                        && self.classify_node(x).is_critical()
                        && self.system_status_of(x) == SystemStatus::Good
                    {
                        added[x] = true;
                    }
                }
            }
            for v in (0..n).filter(|&v| added[v]) {
                levels[v] = Some(round);
            }
        }
        self.levels = levels;
        &self.levels
    }

    pub fn find_push(&self) -> Option<PushMove> {
        let mut best: Option<(usize, usize, usize, usize)> = None;
        for (p, &u) in self.placement.iter().enumerate() {
            let Some(lu) = self.levels[u] else { continue };
            let weight = self.ctx.pebbles[p].weight;
            for &v in &self.ctx.pebbles[p].eligible {
                if v == u || self.levels[v] != Some(lu + 1) {
                    continue;
                }
                let fits = self.classify_node(v) == NodeClass::Uncritical
                    || (self.system_status_of(v) == SystemStatus::Good
                        && self.status_with(v, weight) == SystemStatus::Good);
                if fits {
                    let key = (lu, u, p, v);
                    if best.is_none_or(|b| key < b) {
                        best = Some(key);
                    }
                }
            }
        }
        best.map(|(_, from, pebble, to)| PushMove {
            pebble,
            from,
            to,
            generation: self.generation,
        })
    }

    pub fn apply_push(&mut self, mv: PushMove) -> Result<(), SolveError> {
        if mv.generation != self.generation || self.placement.get(mv.pebble) != Some(&mv.from) {
            return Err(SolveError::StaleMove);
        }
        let w = self.ctx.pebbles[mv.pebble].weight;
        self.placement[mv.pebble] = mv.to;
        self.pl[mv.from] -= w;
        self.pl[mv.to] += w;
        self.generation += 1;
        self.explore1();
        Ok(())
    }

    /// Orients every system so each node receives at most one rock: trees
    /// away from their critical node (or lowest node), cycles from their
    /// lowest node.
    pub fn orient_systems(&self) -> Result<Vec<usize>, SolveError> {
        let graph = &self.ctx.graph;
        let mut heads = vec![usize::MAX; graph.edges().len()];
        for comp in graph.components() {
            match comp.kind {
                ComponentKind::Isolated => {}
                ComponentKind::Tree => {
                    let root = comp
                        .nodes
                        .iter()
                        .copied()
                        .find(|&v| self.classify_node(v).is_critical())
                        .unwrap_or(comp.nodes[0]);
                    graph.orient_away_from(root, &mut heads);
                }
                ComponentKind::Cycle => {
                    for (e, _, to) in graph.cycle_walk(comp) {
                        heads[e] = to;
                    }
                }
                other => {
                    return Err(SolveError::Invariant(format!(
                        "{} component left after reduction",
                        other.as_str()
                    )))
                }
            }
        }
        Ok(heads)
    }

    pub fn system_snapshots(&self) -> Vec<SystemSnapshot> {
        self.ctx
            .graph
            .components()
            .iter()
            .map(|c| SystemSnapshot {
                kind: c.kind.as_str().to_string(),
                nodes: c.nodes.iter().map(|&v| self.ctx.machine_ids[v].clone()).collect(),
                status: match self.system_status_of(c.nodes[0]) {
                    SystemStatus::Good => SystemStatusTag::Good,
                    SystemStatus::Bad => SystemStatusTag::Bad,
                },
            })
            .collect()
    }
}

/// Whether `t` lies in the regime the variant is defined for.
pub fn regime_ok(t: i64, heavy: i64, light: i64, variant: Variant) -> bool {
    let lower = match variant {
        Variant::Standard => 2 * light <= t,
        Variant::Improved => heavy >= 2 * light,
    };
    lower && t < 2 * heavy && t >= heavy
}

pub fn run_core_two_valued(
    ctx: &GuessContext,
    variant: Variant,
    stats: &mut CoreStats,
    trace: &mut Trace,
) -> Result<CoreOutcome, SolveError> {
    let SolveMode::TwoValued { heavy, light } = ctx.mode else {
        return Err(SolveError::Precondition("two-valued core needs two-valued mode".into()));
    };
    if !regime_ok(ctx.t, heavy, light, variant) {
        return Err(SolveError::Precondition(format!(
            "t = {} outside the {variant:?} regime for W = {heavy}, w = {light}",
            ctx.t
        )));
    }
    if let Some(p) = ctx.pebbles.iter().find(|p| p.weight != light) {
        return Err(SolveError::Precondition(format!(
            "pebble `{}` has weight {}",
            p.id, p.weight
        )));
    }
    let th = Thresholds2V::new(ctx.t, heavy, light, variant);
    let mut state = State2V::new(ctx, th);
    let limit = ctx.machine_count() * ctx.pebbles.len();
    stats.push_limit = stats.push_limit.max(limit);
    let mut pushes = 0;
    while state.has_bad_system() {
        let Some(mv) = state.find_push() else {
            let payload = ctx.activated_payload(state.levels(), &[], state.system_snapshots(), state.placement())?;
            return Ok(CoreOutcome::Declared(Declaration::new(
                ctx.t,
                ctx.mode,
                Certificate::ActivatedSet(payload),
            )));
        };
        let before = state.levels().to_vec();
        let phi_before = state.potential();
        state.apply_push(mv)?;
        let phi_after = state.potential();
        if !levels_monotone(&before, state.levels()) {
            stats.level_regressions += 1;
        }
        if phi_after >= phi_before {
            stats.potential_failures += 1;
        }
        pushes += 1;
        stats.pushes += 1;
        trace.record(|| TraceEvent::Push {
            t: ctx.t,
            round: pushes,
            pebble: ctx.pebbles[mv.pebble].id.clone(),
            from: ctx.machine_ids[mv.from].clone(),
            to: ctx.machine_ids[mv.to].clone(),
            potential: phi_after,
        });
        if pushes > limit {
            return Err(SolveError::Invariant(format!("more than |V|*|P| = {limit} pushes")));
        }
    }
    let assignment = ContextAssignment {
        rock_heads: state.orient_systems()?,
        pebble_at: state.placement().to_vec(),
    };
    let loads = assignment.loads(ctx);
    if let Some(v) = (0..loads.len()).find(|&v| !th.within_bound(loads[v])) {
        return Err(SolveError::Invariant(format!(
            "machine `{}` has load {} above {}",
            ctx.machine_ids[v],
            loads[v],
            th.makespan_bound()
        )));
    }
    Ok(CoreOutcome::Accepted(assignment))
}
