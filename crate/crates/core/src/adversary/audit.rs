//! Checks recomputed from a construction trace alone.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::parse_string;
use crate::error::{FipError, Result};
use crate::trace::{replay, EventKind, StageTrace, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialRecord {
    pub e: usize,
    pub owner: Vec<usize>,
    pub set: usize,
    pub stage: u64,
}

/// What a trace says about a run: intersections, potential and trap sets,
/// and the values each opponent revealed.
#[derive(Debug, Clone, Default)]
pub struct TraceModel {
    pairs: HashMap<(usize, usize), u64>,
    potentials: Vec<PotentialRecord>,
    by_owner: HashMap<(usize, Vec<usize>), usize>,
    /// Accepted values `(value, stage)` per opponent.
    pub convergences: BTreeMap<usize, Vec<(usize, u64)>>,
    /// Progressive stages per opponent.
    pub progressive: BTreeMap<usize, Vec<u64>>,
    /// Number of substages with their own potential sets.
    pub width: usize,
    /// Stage count of the run (the stage of its `finish` record).
    pub stages: u64,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TraceModel {
    pub fn from_trace(trace: &StageTrace) -> Result<Self> {
        let mut m = TraceModel::default();
        for ev in trace.events() {
            match ev.kind {
                EventKind::Intersect => {
                    let (a, b, x) = (ev.arg_usize("a")?, ev.arg_usize("b")?, ev.arg_u64("x")?);
                    m.pairs.entry(key(a, b)).or_insert(x);
                }
                EventKind::Define => {
                    let e = ev.arg_usize("e")?;
                    m.width = m.width.max(e + 1);
                    if ev.arg("role") == Some("potential") {
                        if let Some(owner) = ev.arg("owner") {
                            let owner = parse_string(owner)?;
                            let rec = PotentialRecord {
                                e,
                                owner: owner.clone(),
                                set: ev.arg_usize("set")?,
                                stage: ev.stage,
                            };
                            m.by_owner.insert((e, owner), m.potentials.len());
                            m.potentials.push(rec);
                        }
                    }
                }
                EventKind::Converge => {
                    m.convergences
                        .entry(ev.arg_usize("e")?)
                        .or_default()
                        .push((ev.arg_usize("value")?, ev.stage));
                }
                EventKind::Progressive => {
                    m.progressive.entry(ev.arg_usize("e")?).or_default().push(ev.stage);
                }
                EventKind::Finish => m.stages = ev.stage,
                _ => {}
            }
        }
        Ok(m)
    }

    /// The element that first made `a` and `b` meet, if any.
    pub fn witness(&self, a: usize, b: usize) -> Option<u64> {
        self.pairs.get(&key(a, b)).copied()
    }

    pub fn potential(&self, e: usize, owner: &[usize]) -> Option<&PotentialRecord> {
        self.by_owner.get(&(e, owner.to_vec())).map(|&k| &self.potentials[k])
    }

    pub fn potentials(&self) -> &[PotentialRecord] {
        &self.potentials
    }

    /// Least stage by which `sigma` is bounded, ignoring the run length.
    pub fn bounded_from(&self, sigma: &[usize]) -> Option<u64> {
        let top = *sigma.iter().max()? as u64;
        let mut s = (sigma.len() as u64).max(top).max(1);
        for (k, &i) in sigma.iter().enumerate() {
            for &j in &sigma[k + 1..] {
                if i == j {
                    return None;
                }
                s = s.max(self.witness(i, j)? + 1);
            }
        }
        Some(s)
    }

    pub fn is_bounded(&self, sigma: &[usize], s: u64) -> bool {
        self.bounded_from(sigma).is_some_and(|b| b <= s)
    }

    /// Earliest definition stage of a `c`-potential set enumerated by
    /// `sigma` whose owner is `sigma[..m]` for some `lo <= m < sigma.len()`.
    fn potential_stage(&self, c: usize, sigma: &[usize], lo: usize) -> Option<u64> {
        (lo.max(1)..sigma.len())
            .filter_map(|m| self.potential(c, &sigma[..m]))
            .filter(|p| sigma.contains(&p.set))
            .map(|p| p.stage)
            .min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub examined: usize,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations.is_empty())
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn violation_count(&self) -> usize {
        self.checks.iter().map(|c| c.violations.len()).sum()
    }

    fn push(&mut self, name: &str, examined: usize, violations: Vec<String>) {
        self.checks.push(AuditCheck {
            name: name.into(),
            examined,
            violations,
        });
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.violations.is_empty() { "ok" } else { "FAILED" };
            writeln!(f, "{:<18} {status:<6} examined={} violations={}", c.name, c.examined, c.violations.len())?;
            for v in c.violations.iter().take(5) {
                writeln!(f, "    {v}")?;
            }
        }
        Ok(())
    }
}

/// Every defined set and every intersection element must exceed the stage
/// and every number mentioned earlier; no set may be defined twice.
fn freshness(events: &[TraceEvent]) -> Result<(usize, Vec<String>)> {
    let mut mentioned = 0u64;
    let mut defined = HashSet::new();
    let mut examined = 0;
    let mut bad = Vec::new();
    for ev in events {
        let fresh = match ev.kind {
            EventKind::Define => {
                let set = ev.arg_u64("set")?;
                if !defined.insert(set) {
                    bad.push(format!("stage {}: set {set} defined twice", ev.stage));
                }
                Some(set)
            }
            EventKind::Intersect => Some(ev.arg_u64("x")?),
            EventKind::Converge => {
                mentioned = mentioned.max(ev.arg_u64("value")?);
                None
            }
            EventKind::Totalize => {
                mentioned = mentioned.max(ev.arg_u64("through")?);
                None
            }
            _ => None,
        };
        if let Some(x) = fresh {
            examined += 1;
            if x <= ev.stage || x <= mentioned {
                bad.push(format!(
                    "stage {}: {} {x} is not fresh (mentioned {mentioned})",
                    ev.stage, ev.kind
                ));
            }
            mentioned = mentioned.max(x);
        }
    }
    Ok((examined, bad))
}

fn totality(trace: &StageTrace) -> Result<(Vec<String>, Vec<String>)> {
    let mut mentioned = 0u64;
    let mut total = Vec::new();
    for ev in trace.events() {
        match ev.kind {
            EventKind::Define => mentioned = mentioned.max(ev.arg_u64("set")?),
            EventKind::Intersect => mentioned = mentioned.max(ev.arg_u64("x")?),
            EventKind::Converge => mentioned = mentioned.max(ev.arg_u64("value")?),
            EventKind::Totalize => {
                let through = ev.arg_u64("through")?;
                if through < mentioned {
                    total.push(format!("stage {}: totalized through {through} below {mentioned}", ev.stage));
                }
                mentioned = mentioned.max(through);
            }
            _ => {}
        }
    }
    let replayed = replay(trace)?;
    if !replayed.complete {
        total.push("trace has no finish record".into());
    }
    if !replayed.family.is_fully_decided() {
        total.push("replayed family is not fully decided".into());
    }
    let markers = match replayed.family.check_marker_convention() {
        Ok(()) => Vec::new(),
        Err(err) => vec![err.to_string()],
    };
    Ok((total, markers))
}

/// Audit a full-construction trace: freshness, type-2 discipline, trap
/// redefinitions, totality and the marker convention.
pub fn audit_full(trace: &StageTrace) -> Result<AuditReport> {
    let events = trace.events();
    let mut report = AuditReport::default();
    let (examined, bad) = freshness(events)?;
    report.push("freshness", examined, bad);

    let mut labels: HashMap<usize, (usize, u8)> = HashMap::new();
    let mut traps: HashMap<usize, usize> = HashMap::new();
    let mut redefinitions: HashMap<usize, usize> = HashMap::new();
    let mut first_convergence: HashMap<usize, u64> = HashMap::new();
    let mut progressive: HashSet<(usize, u64)> = HashSet::new();
    let mut type2 = Vec::new();
    let mut redefs = Vec::new();
    let mut examined_type2 = 0;
    for ev in events {
        match ev.kind {
            EventKind::Define => {
                let (set, e) = (ev.arg_usize("set")?, ev.arg_usize("e")?);
                match ev.arg("role") {
                    Some("trap") => {
                        if ev.arg("redefine") == Some("true") {
                            let n = redefinitions.entry(e).or_default();
                            *n += 1;
                            if *n > 1 {
                                redefs.push(format!("stage {}: trap of {e} redefined again", ev.stage));
                            }
                            if first_convergence.get(&e) != Some(&ev.stage) {
                                redefs.push(format!("stage {}: trap of {e} redefined away from its first convergence", ev.stage));
                            }
                        }
                        traps.insert(e, set);
                    }
                    Some("potential") => {
                        let label = ev.arg("label").map(str::parse::<u8>).transpose().map_err(|_| {
                            FipError::CorruptTrace(format!("event {}: bad label", ev.seq))
                        })?;
                        labels.insert(set, (e, label.unwrap_or(1)));
                    }
                    _ => {}
                }
            }
            EventKind::Relabel => {
                let set = ev.arg_usize("set")?;
                if let Some(entry) = labels.get_mut(&set) {
                    entry.1 = ev.arg("to").and_then(|t| t.parse().ok()).unwrap_or(2);
                }
            }
            EventKind::Converge => {
                first_convergence.entry(ev.arg_usize("e")?).or_insert(ev.stage);
            }
            EventKind::Progressive => {
                progressive.insert((ev.arg_usize("e")?, ev.stage));
            }
            EventKind::Intersect => {
                let (a, b) = (ev.arg_usize("a")?, ev.arg_usize("b")?);
                for (p, other) in [(a, b), (b, a)] {
                    let Some(&(e, 2)) = labels.get(&p) else { continue };
                    if traps.get(&e) != Some(&other) {
                        continue;
                    }
                    examined_type2 += 1;
                    let ok = ev.arg("step") == Some("4")
                        && ev.substage == Some(e as u64)
                        && progressive.contains(&(e, ev.stage));
                    if !ok {
                        type2.push(format!(
                            "stage {}: type-2 set {p} of {e} met its trap {other} outside a progressive step",
                            ev.stage
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    report.push("type2-discipline", examined_type2, type2);
    report.push("trap-redefinition", redefinitions.values().sum(), redefs);
    let totalizes = trace.of_kind(EventKind::Totalize).count();
    let (total, markers) = totality(trace)?;
    report.push("totality", totalizes, total);
    report.push("markers", 1, markers);
    Ok(report)
}

/// Audit a warm-up trace: freshness, and at the end of every stage each
/// opponent with a trap has enumerated some set the trap does not meet.
pub fn audit_warmup(trace: &StageTrace) -> Result<AuditReport> {
    let events = trace.events();
    let mut report = AuditReport::default();
    let (examined, bad) = freshness(events)?;
    report.push("freshness", examined, bad);

    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    let mut traps: BTreeMap<usize, usize> = BTreeMap::new();
    let mut enumerated: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut soundness = Vec::new();
    let mut checked = 0;
    let mut k = 0;
    while k < events.len() {
        let stage = events[k].stage;
        while k < events.len() && events[k].stage == stage {
            let ev = &events[k];
            match ev.kind {
                EventKind::Intersect => {
                    pairs.insert(key(ev.arg_usize("a")?, ev.arg_usize("b")?));
                }
                EventKind::Define if ev.arg("role") == Some("trap") => {
                    traps.insert(ev.arg_usize("e")?, ev.arg_usize("set")?);
                }
                EventKind::Converge => enumerated.entry(ev.arg_usize("e")?).or_default().push(ev.arg_usize("value")?),
                _ => {}
            }
            k += 1;
        }
        for (&e, &t) in &traps {
            let Some(list) = enumerated.get(&e).filter(|l| !l.is_empty()) else {
                continue;
            };
            checked += 1;
            if !list.iter().any(|&i| i != t && !pairs.contains(&key(i, t))) {
                soundness.push(format!("stage {stage}: trap {t} of {e} meets every enumerated set"));
            }
        }
    }
    report.push("trap-disjoint", checked, soundness);
    let (total, markers) = totality(trace)?;
    report.push("totality", trace.of_kind(EventKind::Totalize).count(), total);
    report.push("markers", 1, markers);
    Ok(report)
}

/// A finite part of the witness function computed from a subfamily `J`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFunction {
    pub f: Vec<u64>,
    pub chain: Vec<Vec<usize>>,
    /// Set when the next value could not be found within the run.
    pub partial: bool,
}

/// Compute `f(0), ..., f(levels - 1)` from the initial segment `j` of a
/// subfamily. `f(0) = 2 J(0)`; `f(a + 1)` is the least stage by which some
/// longer prefix of `j` is bounded and enumerates, for each lower
/// substage `b <= a`, a `b`-potential set owned between the previous
/// prefix and itself.
pub fn extract_witness_function(j: &[usize], model: &TraceModel, levels: usize) -> Result<WitnessFunction> {
    let Some(&first) = j.first() else {
        return Err(FipError::InvalidParameter("empty subfamily prefix".into()));
    };
    let mut out = WitnessFunction {
        f: vec![2 * first as u64],
        chain: vec![vec![first]],
        partial: false,
    };
    while out.f.len() < levels {
        let a = out.f.len() - 1;
        let lo = out.chain[a].len();
        let lanes = (a + 1).min(model.width);
        let best = (lo + 1..=j.len())
            .filter_map(|k| {
                let sigma = &j[..k];
                let mut s = model.bounded_from(sigma)?;
                for b in 0..lanes {
                    s = s.max(model.potential_stage(b, sigma, lo)?);
                }
                Some((s, k))
            })
            .min();
        match best {
            Some((s, k)) if s < model.stages => {
                out.f.push(s);
                out.chain.push(j[..k].to_vec());
            }
            _ => {
                out.partial = true;
                break;
            }
        }
    }
    Ok(out)
}

/// Check that each `chain[a]` is viable for `e` at its convergence stage
/// `s_{e,a}`. Returns the violations found.
pub fn audit_viability(chain: &[Vec<usize>], e: usize, model: &TraceModel) -> Vec<String> {
    let mut bad = Vec::new();
    let conv = model.convergences.get(&e).map(Vec::as_slice).unwrap_or(&[]);
    for (a, sigma) in chain.iter().enumerate() {
        let Some(&(_, s)) = conv.get(a) else {
            bad.push(format!("level {a}: opponent {e} never converged there"));
            continue;
        };
        if a == 0 && sigma.len() != 1 {
            bad.push(format!("level 0: string of length {}", sigma.len()));
        }
        if !model.is_bounded(sigma, s) {
            bad.push(format!("level {a}: {sigma:?} is not bounded at stage {s}"));
        }
        if a > 0 {
            let prev = &chain[a - 1];
            if sigma.len() <= prev.len() || !sigma.starts_with(prev) {
                bad.push(format!("level {a}: {sigma:?} does not extend {prev:?}"));
                continue;
            }
            for c in 0..a.min(model.width) {
                match model.potential_stage(c, sigma, prev.len()) {
                    Some(stage) if stage <= s => {}
                    _ => bad.push(format!("level {a}: no {c}-potential set owned between {prev:?} and {sigma:?}")),
                }
            }
        }
    }
    bad
}
