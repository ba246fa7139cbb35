use std::collections::{HashMap, HashSet};

use super::strategy::{Strategy, StrategySpec, View};
use super::world::World;
use super::{render_string, AdversaryConfig, AdversaryRun, RunStats};
use crate::error::{FipError, Result};
use crate::trace::EventKind;

/// Bounded strings seen so far. A string, once bounded, stays bounded, so
/// the set only grows; `entered[id]` is the stage it first became bounded.
#[derive(Default)]
struct Strings {
    list: Vec<Vec<usize>>,
    ids: HashMap<Vec<usize>, usize>,
    entered: Vec<u64>,
}

impl Strings {
    fn id(&self, sigma: &[usize]) -> Option<usize> {
        self.ids.get(sigma).copied()
    }

    fn add(&mut self, sigma: Vec<usize>, s: u64) -> bool {
        if self.ids.contains_key(&sigma) {
            return false;
        }
        self.ids.insert(sigma.clone(), self.list.len());
        self.list.push(sigma);
        self.entered.push(s);
        true
    }

    /// Add the strings that become bounded at stage `s >= 1`: the singleton
    /// `<s>` and every ordering of a clique that uses the (unique) edge with
    /// witness `s - 1`. Returns the ids added.
    fn advance(&mut self, world: &World, s: u64, max_len: usize) -> Vec<usize> {
        let first = self.list.len();
        if s == 0 {
            return Vec::new();
        }
        if s == 1 {
            self.add(vec![0], s);
        }
        self.add(vec![s as usize], s);
        if s >= 2 {
            let edges = world.edges_below(s - 1);
            if let Some(&(w, a, b)) = edges.last() {
                if w == s - 1 {
                    let mut cliques = Vec::new();
                    let common: Vec<usize> = intersect_sorted(
                        &world.neighbors_below(a, s - 1),
                        &world.neighbors_below(b, s - 1),
                    );
                    grow(world, s - 1, &mut vec![a, b], &common, max_len.min(s as usize), &mut cliques);
                    let mut fresh: Vec<Vec<usize>> = Vec::new();
                    for c in cliques {
                        permutations(&c, &mut fresh);
                    }
                    fresh.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
                    for sigma in fresh {
                        self.add(sigma, s);
                    }
                }
            }
        }
        (first..self.list.len()).collect()
    }
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

/// Every clique extending `base` by vertices of `candidates` (all adjacent
/// to everything in `base`), base included.
fn grow(world: &World, bound: u64, base: &mut Vec<usize>, candidates: &[usize], max_len: usize, out: &mut Vec<Vec<usize>>) {
    out.push(base.clone());
    if base.len() >= max_len {
        return;
    }
    let floor = base[2..].last().copied();
    for (k, &v) in candidates.iter().enumerate() {
        if floor.is_some_and(|f| v <= f) {
            continue;
        }
        let rest = intersect_sorted(&candidates[k + 1..], &world.neighbors_below(v, bound));
        base.push(v);
        grow(world, bound, base, &rest, max_len, out);
        base.pop();
    }
}

fn permutations(set: &[usize], out: &mut Vec<Vec<usize>>) {
    fn go(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for k in 0..rest.len() {
            let v = rest.remove(k);
            cur.push(v);
            go(rest, cur, out);
            cur.pop();
            rest.insert(k, v);
        }
    }
    go(&mut set.to_vec(), &mut Vec::with_capacity(set.len()), out);
}

struct Potential {
    set: usize,
    stage: u64,
    label: u8,
}

/// One viable string at some level, with the length of the viable string
/// one level down that it extends (0 at level 0).
#[derive(Clone, Copy)]
struct Viable {
    id: usize,
    pred: usize,
}

struct Lane {
    strategy: Box<dyn Strategy>,
    history: Vec<(usize, u64)>,
    trap: Option<usize>,
    redefined: bool,
    /// Potential of each string id, if defined.
    pot: Vec<Option<Potential>>,
    pot_sets: Vec<usize>,
    /// String ids given a potential at the previous active stage.
    last_batch: Vec<usize>,
    /// Step 3 items skipped because a type-2 potential met the current trap.
    blocked: Vec<(usize, usize)>,
    levels: Vec<Vec<Viable>>,
    progressive: Vec<u64>,
    withheld: usize,
}

impl Lane {
    fn new(strategy: Box<dyn Strategy>) -> Self {
        Lane {
            strategy,
            history: Vec::new(),
            trap: None,
            redefined: false,
            pot: Vec::new(),
            pot_sets: Vec::new(),
            last_batch: Vec::new(),
            blocked: Vec::new(),
            levels: Vec::new(),
            progressive: Vec::new(),
            withheld: 0,
        }
    }

    fn potential(&self, id: usize) -> Option<&Potential> {
        self.pot.get(id).and_then(Option::as_ref)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Reveal {
    Silent,
    Accepted,
    Withheld,
}

/// Reveal one value of a strategy at stage `s`, enforcing the enumeration
/// convention (a new value must meet every earlier one below `s`).
pub(crate) fn reveal(
    world: &mut World,
    lane_e: usize,
    s: u64,
    strategy: &mut dyn Strategy,
    history: &mut Vec<(usize, u64)>,
    trap: Option<usize>,
    pot_sets: &[usize],
) -> Reveal {
    let view = View {
        world,
        e: lane_e,
        trap,
        potentials: pot_sets,
    };
    let Some(v) = strategy.propose(s, history, &view) else {
        return Reveal::Silent;
    };
    let reason = if history.iter().any(|&(j, _)| j == v) {
        Some("repeat".to_string())
    } else {
        history
            .iter()
            .find(|&&(j, _)| !world.meets_below(v, j, s))
            .map(|&(j, _)| format!("disjoint-{j}"))
    };
    match reason {
        Some(reason) => {
            world.trace.push(
                s,
                None,
                EventKind::Withhold,
                vec![("e", lane_e.to_string()), ("value", v.to_string()), ("reason", reason)],
            );
            Reveal::Withheld
        }
        None => {
            world.mention(v as u64);
            world.trace.push(
                s,
                None,
                EventKind::Converge,
                vec![
                    ("e", lane_e.to_string()),
                    ("a", history.len().to_string()),
                    ("value", v.to_string()),
                ],
            );
            history.push((v, s));
            Reveal::Accepted
        }
    }
}

struct Run<'a> {
    world: World,
    strings: Strings,
    lanes: Vec<Lane>,
    /// Potential set → (lane, owner string id).
    owners: HashMap<usize, (usize, usize)>,
    config: &'a AdversaryConfig,
}

impl Run<'_> {
    fn define(&mut self, s: u64, e: usize, role: &str, extra: Vec<(&str, String)>) -> usize {
        let set = self.world.fresh(s) as usize;
        let mut args = vec![("set", set.to_string()), ("role", role.to_string()), ("e", e.to_string())];
        args.extend(extra);
        self.world.trace.push(s, Some(e as u64), EventKind::Define, args);
        set
    }

    fn step1(&mut self, s: u64, e: usize) {
        let lane = &self.lanes[e];
        if lane.trap.is_none() {
            let t = self.define(s, e, "trap", Vec::new());
            self.lanes[e].trap = Some(t);
            return;
        }
        let converged_now = lane.history.first().is_some_and(|&(_, st)| st == s);
        if !converged_now || lane.redefined {
            return;
        }
        let t = self.define(s, e, "trap", vec![("redefine", "true".into())]);
        let lane = &mut self.lanes[e];
        lane.trap = Some(t);
        lane.redefined = true;
        for p in lane.pot.iter_mut().flatten() {
            if p.label == 1 {
                p.label = 2;
                self.world.trace.push(
                    s,
                    Some(e as u64),
                    EventKind::Relabel,
                    vec![("e", e.to_string()), ("set", p.set.to_string()), ("from", "1".into()), ("to", "2".into())],
                );
            }
        }
    }

    fn step2(&mut self, s: u64, e: usize) {
        let total = self.strings.list.len();
        let lane = &mut self.lanes[e];
        if lane.pot.len() < total {
            lane.pot.resize_with(total, || None);
        }
        let mut batch = Vec::new();
        for id in 0..total {
            if self.lanes[e].pot[id].is_some() {
                continue;
            }
            let sigma = &self.strings.list[id];
            let trap = self.lanes[e].trap;
            let label: u8 = if trap.is_some_and(|t| sigma.contains(&t)) { 1 } else { 2 };
            let owner = render_string(sigma);
            let set = self.define(s, e, "potential", vec![("owner", owner), ("label", label.to_string())]);
            let lane = &mut self.lanes[e];
            lane.pot[id] = Some(Potential { set, stage: s, label });
            lane.pot_sets.push(set);
            self.owners.insert(set, (e, id));
            batch.push(id);
        }
        self.lanes[e].last_batch = batch;
    }

    fn step3_item(&mut self, s: u64, e: usize, sid: usize, tid: usize) {
        let lane = &self.lanes[e];
        let Some(p) = lane.potential(tid) else { return };
        if p.stage >= s {
            return;
        }
        let (set, label) = (p.set, p.label);
        let sigma = &self.strings.list[sid];
        if label == 2 && lane.trap.is_some_and(|t| sigma.contains(&t)) {
            self.lanes[e].blocked.push((sid, tid));
            return;
        }
        let members = sigma.clone();
        for i in members {
            self.world.intersect(set, i, s, e, 3);
        }
    }

    /// `batch` holds the strings given potentials at the previous stage.
    fn step3(&mut self, s: u64, e: usize, new_ids: &[usize], batch: &[usize], retry_blocked: bool) {
        let mut items: Vec<(usize, usize)> = Vec::new();
        if retry_blocked {
            items.append(&mut self.lanes[e].blocked);
        }
        for &sid in new_ids.iter().chain(batch.iter()) {
            let sigma = &self.strings.list[sid];
            for k in 1..=sigma.len() {
                if let Some(tid) = self.strings.id(&sigma[..k]) {
                    items.push((sid, tid));
                }
            }
        }
        for (sid, tid) in items {
            self.step3_item(s, e, sid, tid);
        }
    }

    /// The least e-potential enumerated by `sigma` whose owner lies between
    /// `sigma[..pred]` (inclusive) and `sigma` (exclusive), with its position.
    fn progress_potential(&self, e: usize, sigma: &[usize], pred: usize) -> Option<(usize, usize)> {
        let lane = &self.lanes[e];
        (pred.max(1)..sigma.len())
            .filter_map(|k| self.strings.id(&sigma[..k]))
            .filter_map(|tid| lane.potential(tid).map(|p| p.set))
            .filter_map(|set| sigma.iter().position(|&x| x == set).map(|pos| (set, pos)))
            .min()
    }

    fn step4(&mut self, s: u64, e: usize, a: usize) -> Result<()> {
        let Some(level) = self.lanes[e].levels.get(a).cloned() else {
            return Ok(());
        };
        let Some(t) = self.lanes[e].trap else { return Ok(()) };
        if level.is_empty() {
            return Ok(());
        }
        let mut chosen = Vec::with_capacity(level.len());
        for v in &level {
            let sigma = &self.strings.list[v.id];
            match self.progress_potential(e, sigma, v.pred) {
                Some(found) => chosen.push((v.id, found)),
                None => return Ok(()),
            }
        }
        let excluded: HashSet<usize> = chosen.iter().map(|&(_, (p, _))| p).collect();
        let mut targets = Vec::with_capacity(chosen.len());
        for &(id, (p, pos)) in &chosen {
            if self.world.meets(p, t) {
                return Ok(());
            }
            let sigma = &self.strings.list[id];
            let k = (0..pos).rev().find(|&k| {
                let i = sigma[k];
                i != t && !self.world.meets(i, t) && !excluded.contains(&i)
            });
            match k {
                Some(k) => targets.push((id, k)),
                None => return Ok(()),
            }
        }
        let rendered: Vec<String> = level.iter().map(|v| render_string(&self.strings.list[v.id])).collect();
        self.world.trace.push(
            s,
            Some(e as u64),
            EventKind::Progressive,
            vec![
                ("e", e.to_string()),
                ("a", a.to_string()),
                ("count", level.len().to_string()),
                ("strings", rendered.join("|")),
            ],
        );
        for (id, k) in targets {
            let members: Vec<usize> = self.strings.list[id][..=k].to_vec();
            for i in members {
                if i != t {
                    self.world.intersect(t, i, s, e, 4);
                }
            }
        }
        self.lanes[e].progressive.push(s);
        Ok(())
    }

    /// Viable strings for lane `e` at level `a`, computed at stage `s = s_{e,a}`.
    fn level(&self, e: usize, a: usize, s: u64) -> Vec<Viable> {
        let width = self.lanes.len();
        if a == 0 {
            if s == 0 {
                return Vec::new();
            }
            return (0..=s as usize)
                .filter_map(|i| self.strings.id(&[i]))
                .map(|id| Viable { id, pred: 0 })
                .collect();
        }
        let lower = &self.lanes[e].levels[a - 1];
        if lower.is_empty() {
            return Vec::new();
        }
        let lower: HashSet<usize> = lower.iter().map(|v| v.id).collect();
        let mut out = Vec::new();
        for (id, sigma) in self.strings.list.iter().enumerate() {
            if sigma.len() < 2 {
                continue;
            }
            let pred = (1..sigma.len()).find(|&m| {
                self.strings.id(&sigma[..m]).is_some_and(|pid| lower.contains(&pid))
                    && (0..a.min(width)).all(|c| {
                        (m..sigma.len()).any(|k| {
                            self.strings
                                .id(&sigma[..k])
                                .and_then(|tid| self.lanes[c].potential(tid))
                                .is_some_and(|p| sigma.contains(&p.set))
                        })
                    })
            });
            if let Some(pred) = pred {
                out.push(Viable { id, pred });
            }
        }
        out
    }
}

/// Run the full construction for `config.stages` stages against `strategies`.
pub fn run_full(strategies: &[StrategySpec], config: &AdversaryConfig) -> Result<AdversaryRun> {
    let width = config.width.max(strategies.len());
    let mut lanes: Vec<Lane> = strategies.iter().map(|s| Lane::new(s.build())).collect();
    while lanes.len() < width {
        lanes.push(Lane::new(StrategySpec::Silent.build()));
    }
    let mut run = Run {
        world: World::new("adversary-full"),
        strings: Strings::default(),
        lanes,
        owners: HashMap::new(),
        config,
    };
    for lane in &mut run.lanes {
        lane.strategy.reset();
    }

    for s in 0..config.stages {
        let mut converged = vec![None; width];
        for (e, slot) in converged.iter_mut().enumerate() {
            let Lane { strategy, history, trap, pot_sets, withheld, .. } = &mut run.lanes[e];
            let before = history.len();
            match reveal(&mut run.world, e, s, strategy.as_mut(), history, *trap, pot_sets) {
                Reveal::Accepted => *slot = Some(before),
                Reveal::Withheld => *withheld += 1,
                Reveal::Silent => {}
            }
        }

        let new_ids = run.strings.advance(&run.world, s, run.config.max_len);
        if run.strings.list.len() > run.config.max_bounded {
            return Err(FipError::BoundExceeded(format!(
                "{} bounded strings at stage {s} (limit {})",
                run.strings.list.len(),
                run.config.max_bounded
            )));
        }

        for (e, a) in converged.iter().enumerate() {
            if let Some(a) = *a {
                let level = run.level(e, a, s);
                run.lanes[e].levels.push(level);
            }
        }

        let top = (s as usize).min(width.saturating_sub(1));
        let mut ran = false;
        for (e, &conv) in converged.iter().enumerate().take(width.min(top + 1)) {
            ran = true;
            let redefined_before = run.lanes[e].redefined;
            run.step1(s, e);
            let retry = run.lanes[e].redefined && !redefined_before;
            let batch = std::mem::take(&mut run.lanes[e].last_batch);
            run.step2(s, e);
            run.step3(s, e, &new_ids, &batch, retry);
            if let Some(a) = conv {
                if a > e {
                    run.step4(s, e, a)?;
                }
            }
            run.world.totalize(s, Some(e as u64));
        }
        if !ran {
            run.world.totalize(s, None);
        }
    }

    let family = run.world.finish(config.stages)?;
    let stats = RunStats {
        mentioned: run.world.mentioned(),
        potential_sets: run.owners.len(),
        intersections: run.world.intersections(),
        enumerations: run.lanes.iter().map(|l| l.history.clone()).collect(),
        withheld: run.lanes.iter().map(|l| l.withheld).collect(),
        progressive: run.lanes.iter().map(|l| l.progressive.clone()).collect(),
        trap_redefinitions: run.lanes.iter().map(|l| usize::from(l.redefined)).collect(),
    };
    Ok(AdversaryRun {
        family,
        trace: run.world.trace,
        stats,
    })
}
