//! Local search for arbitrary weights where rocks exceed `beta * t`.
//!
//! Rock orientations are derived on the fly. [`Explorer::forced_orientations`]
//! directs edges that a node cannot afford to receive, [`Explorer::explore2`]
//! grows the activated set `A` round by round together with the conflict set
//! `C` of nodes that route rocks into trouble, and pebbles are pushed from
//! one level to the next until no node is overloaded. When no push is left
//! the activated machines provably cannot hold their load.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::certificate::{Certificate, Declaration};
use crate::error::SolveError;
use crate::model::{Rational, SolveMode};
use crate::outcome::{levels_monotone, potential, CoreOutcome, CoreStats};
use crate::preprocess::{ContextAssignment, GuessContext};
use crate::trace::{OrientationEvent, Trace, TraceEvent};

/// The three bounds, compared in integer form scaled by `3q` for `beta = p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdsG {
    t: i128,
    p: i128,
    q: i128,
}

impl ThresholdsG {
    pub fn new(t: i64, beta: Rational) -> Self {
        ThresholdsG {
            t: t as i128,
            p: *beta.numer() as i128,
            q: *beta.denom() as i128,
        }
    }

    fn ratio(&self, coeff: i128) -> Rational {
        let num = coeff * self.t;
        let den = 3 * self.q;
        let g = num_integer::gcd(num, den);
        Rational::new((num / g) as i64, (den / g) as i64)
    }

    /// `(5/3 + beta/3) t`
    pub fn overload_bound(&self) -> Rational {
        self.ratio(5 * self.q + self.p)
    }

    /// `(5/3 - 2 beta/3) t`
    pub fn push_bound(&self) -> Rational {
        self.ratio(5 * self.q - 2 * self.p)
    }

    /// `(2/3 + beta/3) t`
    pub fn rule2_bound(&self) -> Rational {
        self.ratio(2 * self.q + self.p)
    }

    pub fn overloaded(&self, load: i64) -> bool {
        3 * self.q * load as i128 > (5 * self.q + self.p) * self.t
    }

    pub fn within_push(&self, load: i64) -> bool {
        3 * self.q * load as i128 <= (5 * self.q - 2 * self.p) * self.t
    }

    pub fn below_rule2(&self, weight: i64) -> bool {
        3 * self.q * (weight as i128) < (2 * self.q + self.p) * self.t
    }
}

/// How fake orientations are picked among the candidates.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum FakeOrder {
    /// Lowest conflict node with a neutral edge, then its lowest neighbour.
    Lowest,
    Random(ChaCha8Rng),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PushMove {
    pub pebble: usize,
    pub from: usize,
    pub to: usize,
}

/// State of one exploration: placement, orientations, `C` and levels.
#[derive(Debug, Clone)]
pub struct Explorer<'a> {
    ctx: &'a GuessContext,
    th: ThresholdsG,
    placement: Vec<usize>,
    pl: Vec<i64>,
    heads: Vec<Option<usize>>,
    rl: Vec<i64>,
    in_c: Vec<bool>,
    levels: Vec<Option<usize>>,
    round: usize,
    frontier: Vec<usize>,
    recording: bool,
    events: Vec<(OrientationEvent, Value)>,
}

impl<'a> Explorer<'a> {
    pub fn new(ctx: &'a GuessContext, th: ThresholdsG, placement: Vec<usize>) -> Self {
        let n = ctx.machine_count();
        let mut pl = vec![0; n];
        for (p, &v) in placement.iter().enumerate() {
            pl[v] += ctx.pebbles[p].weight;
        }
        Explorer {
            ctx,
            th,
            placement,
            pl,
            heads: vec![None; ctx.rocks().len()],
            rl: vec![0; n],
            in_c: vec![false; n],
            levels: vec![None; n],
            round: 0,
            frontier: Vec::new(),
            recording: false,
            events: Vec::new(),
        }
    }

    pub fn record_events(&mut self, on: bool) {
        self.recording = on;
    }

    pub fn take_events(&mut self) -> Vec<(OrientationEvent, Value)> {
        std::mem::take(&mut self.events)
    }

    /// Records an event whose payload maps each key to a machine name.
    fn note(&mut self, kind: OrientationEvent, fields: &[(&str, usize)]) {
        if self.recording {
            let payload: serde_json::Map<String, Value> = fields
                .iter()
                .map(|&(k, v)| (k.to_string(), Value::from(self.ctx.machine_ids[v].as_str())))
                .collect();
            self.events.push((kind, Value::Object(payload)));
        }
    }

    pub fn thresholds(&self) -> ThresholdsG {
        self.th
    }

    pub fn placement(&self) -> &[usize] {
        &self.placement
    }

    pub fn levels(&self) -> &[Option<usize>] {
        &self.levels
    }

    /// Head of every rock, `None` while neutral.
    pub fn heads(&self) -> &[Option<usize>] {
        &self.heads
    }

    pub fn in_conflict(&self, v: usize) -> bool {
        self.in_c[v]
    }

    pub fn conflict_set(&self) -> Vec<usize> {
        (0..self.in_c.len()).filter(|&v| self.in_c[v]).collect()
    }

    /// Nodes activated in the current round so far.
    pub fn frontier(&self) -> &[usize] {
        &self.frontier
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// `dl + pl`.
    pub fn own_load(&self, v: usize) -> i64 {
        self.ctx.dl[v] + self.pl[v]
    }

    /// `dl + pl + rl`.
    pub fn load(&self, v: usize) -> i64 {
        self.own_load(v) + self.rl[v]
    }

    pub fn is_overloaded(&self, v: usize) -> bool {
        self.th.overloaded(self.load(v))
    }

    fn direct(&mut self, e: usize, toward: usize) {
        debug_assert!(self.heads[e].is_none());
        self.heads[e] = Some(toward);
        self.rl[toward] += self.ctx.rocks()[e].weight;
    }

    /// Sets orientations directly; for building test states.
    pub fn set_heads(&mut self, heads: Vec<Option<usize>>) {
        self.rl = vec![0; self.ctx.machine_count()];
        for (e, h) in heads.iter().enumerate() {
            if let Some(h) = *h {
                self.rl[h] += self.ctx.rocks()[e].weight;
            }
        }
        self.heads = heads;
    }

    /// Smallest `(v, u)` with a neutral edge `vu` that `v` cannot afford.
    fn forcing_pair(&self, marked: Option<&[bool]>) -> Option<(usize, usize, usize)> {
        let graph = &self.ctx.graph;
        (0..self.ctx.machine_count())
            .filter(|&v| marked.is_none_or(|m| m[v]))
            .find_map(|v| {
                graph
                    .incident(v)
                    .iter()
                    .find(|&&(_, e)| {
                        self.heads[e].is_none() && self.th.overloaded(self.load(v) + graph.edges()[e].weight)
                    })
                    .map(|&(u, e)| (v, u, e))
            })
    }

    pub fn forced_orientations(&mut self) {
        while let Some((v, u, e)) = self.forcing_pair(None) {
            self.direct(e, u);
            self.note(OrientationEvent::Forced, &[("from", v), ("to", u)]);
            let mut marked = vec![false; self.ctx.machine_count()];
            marked[u] = true;
            while let Some((v2, u2, e2)) = self.forcing_pair(Some(&marked)) {
                self.direct(e2, u2);
                self.note(OrientationEvent::Forced, &[("from", v2), ("to", u2)]);
                marked[u2] = true;
            }
        }
    }

    /// `(u, edge)` pairs where `u` is in `C` and a father of `v`.
    pub fn fathers(&self, v: usize) -> Vec<(usize, usize)> {
        self.ctx
            .graph
            .incident(v)
            .iter()
            .copied()
            .filter(|&(u, e)| self.heads[e] == Some(u) && self.in_c[u])
            .collect()
    }

    /// `(u, edge)` pairs where `u` is in `C` and a child of `v`.
    pub fn children(&self, v: usize) -> Vec<(usize, usize)> {
        self.ctx
            .graph
            .incident(v)
            .iter()
            .copied()
            .filter(|&(u, e)| self.heads[e] == Some(v) && self.in_c[u])
            .collect()
    }

    /// Seeds round `i`: overloaded nodes in round 0, later the nodes reachable
    /// from the previous round. Returns false when there is nothing to add.
    pub fn start_round(&mut self) -> bool {
        let n = self.ctx.machine_count();
        let fresh: Vec<usize> = if self.round == 0 {
            (0..n).filter(|&v| self.is_overloaded(v)).collect()
        } else {
            let mut reach = vec![false; n];
            for (p, &u) in self.placement.iter().enumerate() {
                if self.levels[u] == Some(self.round - 1) {
                    for &v in &self.ctx.pebbles[p].eligible {
                        if self.levels[v].is_none() {
                            reach[v] = true;
                        }
                    }
                }
            }
            (0..n).filter(|&v| reach[v]).collect()
        };
        if fresh.is_empty() {
            return false;
        }
        for &v in &fresh {
            self.levels[v] = Some(self.round);
            self.in_c[v] = true;
        }
        self.frontier = fresh;
        true
    }

    fn absorb_closure(&mut self) {
        loop {
            let mut changed = false;
            for (e, rock) in self.ctx.rocks().iter().enumerate() {
                let Some(h) = self.heads[e] else { continue };
                let tail = rock.other(h);
                if self.in_c[h] && !self.in_c[tail] {
                    self.in_c[tail] = true;
                    changed = true;
                    self.note(OrientationEvent::Absorb, &[("node", tail)]);
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn fake_candidates(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for v in (0..self.ctx.machine_count()).filter(|&v| self.in_c[v]) {
            for &(u, e) in self.ctx.graph.incident(v) {
                if self.heads[e].is_none() {
                    out.push((v, u, e));
                }
            }
        }
        out
    }

    /// Absorbs nodes with a father in `C` and applies fake orientations
    /// until neither is possible.
    pub fn conflict_construction(&mut self, order: &mut FakeOrder) {
        loop {
            self.absorb_closure();
            let candidates = self.fake_candidates();
            if candidates.is_empty() {
                break;
            }
            let (v, u, e) = match order {
                FakeOrder::Lowest => candidates[0],
                FakeOrder::Random(rng) => candidates[rng.gen_range(0..candidates.len())],
            };
            self.direct(e, u);
            self.note(OrientationEvent::Fake, &[("from", v), ("to", u)]);
            self.forced_orientations();
        }
    }

    /// Activation rules 1 and 2, to a fixpoint.
    pub fn activate(&mut self) {
        loop {
            let mut hit = None;
            for v in (0..self.ctx.machine_count()).filter(|&v| self.in_c[v] && self.levels[v].is_none()) {
                let rule1 = self
                    .fathers(v)
                    .iter()
                    .any(|&(_, e)| self.th.overloaded(self.own_load(v) + self.ctx.rocks()[e].weight));
                if rule1 {
                    hit = Some((v, OrientationEvent::ActivateR1));
                    break;
                }
                let rule2 = self
                    .fathers(v)
                    .into_iter()
                    .chain(self.children(v))
                    .any(|(u, e)| self.levels[u].is_some() && self.th.below_rule2(self.ctx.rocks()[e].weight));
                if rule2 {
                    hit = Some((v, OrientationEvent::ActivateR2));
                    break;
                }
            }
            let Some((v, kind)) = hit else { break };
            self.levels[v] = Some(self.round);
            self.frontier.push(v);
            self.note(kind, &[("node", v)]);
        }
    }

    /// Full exploration; `hook` sees the state at the start of every round,
    /// right before its conflict set construction.
    pub fn explore_with(&mut self, order: &mut FakeOrder, mut hook: impl FnMut(&Explorer<'a>)) {
        self.forced_orientations();
        while self.start_round() {
            hook(self);
            self.conflict_construction(order);
            self.activate();
            self.round += 1;
        }
    }

    pub fn explore2(&mut self, order: &mut FakeOrder) {
        self.explore_with(order, |_| {});
    }

    pub fn activated_empty(&self) -> bool {
        self.levels.iter().all(|l| l.is_none())
    }

    pub fn potential(&self) -> u64 {
        potential(&self.levels, &self.placement)
    }

    pub fn find_push(&self) -> Option<PushMove> {
        let mut best: Option<(usize, usize, usize)> = None;
        for (p, &u) in self.placement.iter().enumerate() {
            let Some(lu) = self.levels[u] else { continue };
            for &v in &self.ctx.pebbles[p].eligible {
                if v == u || self.levels[v] != Some(lu + 1) || !self.th.within_push(self.load(v)) {
                    continue;
                }
                let leaf_or_safe = self.children(v).is_empty()
                    || self
                        .fathers(v)
                        .iter()
                        .all(|&(_, e)| self.th.within_push(self.own_load(v) + self.ctx.rocks()[e].weight));
                if leaf_or_safe && best.is_none_or(|b| (u, p, v) < b) {
                    best = Some((u, p, v));
                }
            }
        }
        best.map(|(from, pebble, to)| PushMove { pebble, from, to })
    }

    /// Orients the remaining neutral edges so that each node gets at most one
    /// of them: trees away from a node that already receives a rock (or the
    /// lowest node), cycles from their lowest node.
    pub fn complete_orientation(&self) -> Vec<usize> {
        let graph = &self.ctx.graph;
        let n = self.ctx.machine_count();
        let mut heads: Vec<Option<usize>> = self.heads.clone();
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut nodes = vec![start];
            let mut edges = std::collections::BTreeSet::new();
            seen[start] = true;
            let mut i = 0;
            while i < nodes.len() {
                let x = nodes[i];
                i += 1;
                for &(y, e) in graph.incident(x) {
                    if self.heads[e].is_none() {
                        edges.insert(e);
                        if !seen[y] {
                            seen[y] = true;
                            nodes.push(y);
                        }
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            nodes.sort_unstable();
            if edges.len() == nodes.len() {
                let mut at = nodes[0];
                loop {
                    let next = graph
                        .incident(at)
                        .iter()
                        .find(|&&(_, e)| edges.contains(&e) && heads[e].is_none());
                    let Some(&(y, e)) = next else { break };
                    heads[e] = Some(y);
                    at = y;
                }
            } else {
                let root = nodes.iter().copied().find(|&v| self.rl[v] > 0).unwrap_or(nodes[0]);
                let mut queue = std::collections::VecDeque::from([root]);
                let mut reached = std::collections::HashSet::from([root]);
                while let Some(x) = queue.pop_front() {
                    for &(y, e) in graph.incident(x) {
                        if edges.contains(&e) && reached.insert(y) {
                            heads[e] = Some(y);
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        heads.into_iter().map(|h| h.expect("every edge oriented")).collect()
    }
}

pub fn run_core_general(
    ctx: &GuessContext,
    stats: &mut CoreStats,
    trace: &mut Trace,
) -> Result<CoreOutcome, SolveError> {
    let SolveMode::General { beta } = ctx.mode else {
        return Err(SolveError::Precondition("general core needs general mode".into()));
    };
    let th = ThresholdsG::new(ctx.t, beta);
    let limit = ctx.machine_count() * ctx.pebbles.len();
    stats.push_limit = stats.push_limit.max(limit);
    let mut placement = ctx.initial_placement();
    let mut previous: Option<(Vec<Option<usize>>, u64)> = None;
    let mut pushes = 0;
    for iteration in 0.. {
        let mut ex = Explorer::new(ctx, th, placement.clone());
        ex.record_events(trace.is_enabled());
        ex.explore2(&mut FakeOrder::Lowest);
        for (kind, payload) in ex.take_events() {
            trace.record(|| TraceEvent::Orientation {
                t: ctx.t,
                iteration,
                kind,
                payload,
            });
        }
        if let Some((levels, phi)) = previous.take() {
            if !levels_monotone(&levels, ex.levels()) {
                stats.level_regressions += 1;
            }
            if ex.potential() >= phi {
                stats.potential_failures += 1;
            }
        }
        if ex.activated_empty() {
            let assignment = ContextAssignment {
                rock_heads: ex.complete_orientation(),
                pebble_at: placement,
            };
            let loads = assignment.loads(ctx);
            if let Some(v) = (0..loads.len()).find(|&v| th.overloaded(loads[v])) {
                return Err(SolveError::Invariant(format!(
                    "machine `{}` has load {} above {}",
                    ctx.machine_ids[v],
                    loads[v],
                    th.overload_bound()
                )));
            }
            return Ok(CoreOutcome::Accepted(assignment));
        }
        let Some(mv) = ex.find_push() else {
            let payload = ctx.activated_payload(ex.levels(), &ex.conflict_set(), Vec::new(), &placement)?;
            return Ok(CoreOutcome::Declared(Declaration::new(
                ctx.t,
                ctx.mode,
                Certificate::ActivatedSet(payload),
            )));
        };
        previous = Some((ex.levels().to_vec(), ex.potential()));
        placement[mv.pebble] = mv.to;
        pushes += 1;
        stats.pushes += 1;
        trace.record(|| TraceEvent::Orientation {
            t: ctx.t,
            iteration,
            kind: OrientationEvent::Push,
            payload: json!({
                "pebble": ctx.pebbles[mv.pebble].id,
                "from": ctx.machine_ids[mv.from],
                "to": ctx.machine_ids[mv.to],
            }),
        });
        if pushes > limit {
            return Err(SolveError::Invariant(format!("more than |V|*|P| = {limit} pushes")));
        }
    }
    unreachable!("the iteration counter is unbounded")
}
