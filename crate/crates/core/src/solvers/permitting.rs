//! Permitting solver.
//!
//! The constructed set `M` holds Cantor-coded copies `⟨i, n⟩` of indices.
//! A copy may enter or leave `M` between stages `s` and `s + 1` only when the
//! c.e. set `W` changes below its code in that step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, IndexMap, IntersectionProperty, Meet, WitnessCertificate};
use crate::property::{is_maximal, MaximalityVerdict};
use crate::trace::{EventKind, StageTrace};

/// `⟨i, n⟩ = (i + n)(i + n + 1) / 2 + n`.
pub fn cantor_pair(i: u64, n: u64) -> Result<u64> {
    let d = i
        .checked_add(n)
        .ok_or_else(|| FipError::BoundExceeded(format!("pair ⟨{i},{n}⟩ overflows")))?;
    d.checked_mul(d + 1)
        .map(|t| t / 2)
        .and_then(|t| t.checked_add(n))
        .ok_or_else(|| FipError::BoundExceeded(format!("pair ⟨{i},{n}⟩ overflows")))
}

pub fn cantor_unpair(z: u64) -> (u64, u64) {
    // Largest d with d(d+1)/2 <= z.
    let mut d = (((8.0 * z as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while d * (d + 1) / 2 > z {
        d -= 1;
    }
    while (d + 1) * (d + 2) / 2 <= z {
        d += 1;
    }
    let n = z - d * (d + 1) / 2;
    (d - n, n)
}

/// Stage-by-stage enumeration of a c.e. set: `increments[s] = W_s − W_{s−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CeEnumeration {
    increments: Vec<BTreeSet<u64>>,
}

impl CeEnumeration {
    /// Every stage after the first must add at least one element not seen before.
    pub fn from_increments(increments: Vec<BTreeSet<u64>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (s, inc) in increments.iter().enumerate() {
            if s > 0 && inc.is_empty() {
                return Err(FipError::Contract(format!("W gains nothing at stage {s}")));
            }
            if let Some(x) = inc.iter().find(|x| seen.contains(*x)) {
                return Err(FipError::Contract(format!("{x} enumerated twice (again at stage {s})")));
            }
            seen.extend(inc.iter().copied());
        }
        Ok(CeEnumeration { increments })
    }

    /// `W_s = {0, ..., s − 1}`: one fresh element per stage, in order.
    pub fn one_per_stage(snapshots: usize) -> Self {
        let increments = (0..snapshots)
            .map(|s| if s == 0 { BTreeSet::new() } else { [s as u64 - 1].into() })
            .collect();
        CeEnumeration { increments }
    }

    /// Number of snapshots `W_0, ..., W_{len-1}`.
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self) -> &[BTreeSet<u64>] {
        &self.increments
    }

    pub fn snapshot(&self, s: usize) -> BTreeSet<u64> {
        self.increments[..=s.min(self.len().saturating_sub(1))]
            .iter()
            .flatten()
            .copied()
            .collect()
    }

    /// `min(W_{s+1} − W_s)`.
    pub fn least_change(&self, s: usize) -> Result<u64> {
        self.increments
            .get(s + 1)
            .and_then(|inc| inc.first().copied())
            .ok_or_else(|| FipError::Exhausted(format!("no W change recorded after stage {s}")))
    }

    /// `W_s ↾ m ≠ W_{s+1} ↾ m`.
    pub fn changes_below(&self, s: usize, m: u64) -> Result<bool> {
        Ok(self.least_change(s)? < m)
    }

    /// ```text
    /// ce v1
    /// stage <s>: <elements>
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line, msg: String| FipError::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "ce v1")) => {}
            Some((n, _)) => return Err(perr(n, "expected header `ce v1`".into())),
            None => return Err(perr(1, "empty enumeration file".into())),
        }
        let mut stages: BTreeMap<usize, BTreeSet<u64>> = BTreeMap::new();
        for (n, line) in lines {
            let (head, elems) = line
                .strip_prefix("stage ")
                .and_then(|r| r.split_once(':'))
                .ok_or_else(|| perr(n, format!("expected `stage <s>: ...`, got `{line}`")))?;
            let s: usize = head.trim().parse().map_err(|_| perr(n, format!("bad stage `{head}`")))?;
            let set = elems
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| perr(n, format!("bad element `{t}`"))))
                .collect::<Result<BTreeSet<u64>>>()?;
            if stages.insert(s, set).is_some() {
                return Err(perr(n, format!("stage {s} listed twice")));
            }
        }
        let len = stages.keys().next_back().map_or(0, |s| s + 1);
        let increments = (0..len).map(|s| stages.remove(&s).unwrap_or_default()).collect();
        CeEnumeration::from_increments(increments)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("ce v1\n");
        for (s, inc) in self.increments.iter().enumerate() {
            let elems: Vec<String> = inc.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "stage {s}: {}", elems.join(" "));
        }
        out
    }
}

/// Approximations `M_0, M_1, ...` as sets of codes, plus the run's trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermittingState {
    pub history: Vec<BTreeSet<u64>>,
    pub stage: u64,
    #[serde(skip)]
    pub trace: StageTrace,
}

impl PermittingState {
    pub fn current(&self) -> &BTreeSet<u64> {
        self.history.last().expect("M_0 is always recorded")
    }

    /// Index → code of its copy in `M_s`.
    pub fn copies_at(&self, s: usize) -> BTreeMap<usize, u64> {
        copies(&self.history[s])
    }
}

fn copies(m: &BTreeSet<u64>) -> BTreeMap<usize, u64> {
    m.iter().map(|&c| (cantor_unpair(c).0 as usize, c)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermittingOutcome {
    /// Indices with a copy in the final `M`, in increasing order.
    pub index_map: IndexMap,
    pub state: PermittingState,
    /// One certificate per stage covering every index copied in `M_s`.
    pub certificates: Vec<WitnessCertificate>,
    pub verdict: MaximalityVerdict,
}

/// Greatest copied `k` such that some number `<= bound` lies in `A_i` and
/// in every copied `A_j`, `j <= k`.
fn ell(a: &Family, copied: &BTreeMap<usize, u64>, i: usize, bound: u64) -> Result<Option<usize>> {
    let mut group = vec![i];
    let mut best = None;
    for &k in copied.keys() {
        group.push(k);
        match a.meet(&group, bound)? {
            Meet::Witness(_) => best = Some(k),
            Meet::Empty => break,
            Meet::Undecided => {
                return Err(FipError::Undecided(format!("meet of {group:?} below {bound}")));
            }
        }
    }
    Ok(best)
}

fn certify(a: &Family, m: &BTreeSet<u64>) -> Result<WitnessCertificate> {
    let indices: Vec<usize> = copies(m).into_keys().collect();
    let w = a.witness(&indices)?.ok_or_else(|| {
        FipError::Contract(format!("copied sets {indices:?} have no common element"))
    })?;
    Ok(WitnessCertificate::new(indices, w))
}

fn indices_arg(c: &WitnessCertificate) -> String {
    c.indices.iter().map(usize::to_string).collect::<Vec<_>>().join("|")
}

/// Run stages `1..=stages`; `w` must supply snapshots `W_0..=W_stages`.
pub fn solve_permitting(a: &Family, w: &CeEnumeration, stages: usize) -> Result<PermittingOutcome> {
    if a.index_bound() == 0 || a.set(0)?.least_member().is_none() {
        return Err(FipError::InvalidParameter("the construction starts from a nonempty A_0".into()));
    }
    if w.len() < stages + 1 {
        return Err(FipError::InvalidParameter(format!(
            "enumeration has {} snapshots, {} needed",
            w.len(),
            stages + 1
        )));
    }
    let mut trace = StageTrace::new("permitting");
    let m0: BTreeSet<u64> = [cantor_pair(0, 0)?].into();
    trace.push(0, None, EventKind::Insert, vec![("i", "0".into()), ("n", "0".into()), ("code", "0".into())]);
    let c0 = certify(a, &m0)?;
    trace.push(0, None, EventKind::Certify, vec![("indices", indices_arg(&c0)), ("witness", c0.witness.to_string())]);
    let mut history = vec![m0];
    let mut certificates = vec![c0];

    for s in 0..stages {
        let stage = s as u64 + 1;
        let m = history.last().expect("M_s").clone();
        let copied = copies(&m);
        let change = w.least_change(s)?;
        let bound = (s as u64).min(a.universe_bound());
        let top = s.min(a.index_bound() - 1);

        let mut pick = None;
        for i in (0..=top).filter(|i| !copied.contains_key(i)) {
            let Some(l) = ell(a, &copied, i, bound)? else {
                continue;
            };
            if copied.keys().any(|&j| l < j && j < i) {
                continue;
            }
            if copied.iter().any(|(&j, &code)| j > l && change >= code) {
                continue;
            }
            pick = Some((i, l));
            break;
        }

        let mut next = m.clone();
        match pick {
            None => {
                trace.push(stage, None, EventKind::Hold, vec![("change", change.to_string())]);
            }
            Some((i, l)) => {
                trace.push(
                    stage,
                    None,
                    EventKind::Permit,
                    vec![("i", i.to_string()), ("ell", l.to_string()), ("change", change.to_string())],
                );
                for (&j, &code) in copied.range(l + 1..) {
                    next.remove(&code);
                    let (_, n) = cantor_unpair(code);
                    trace.push(
                        stage,
                        None,
                        EventKind::Remove,
                        vec![("i", j.to_string()), ("n", n.to_string()), ("code", code.to_string())],
                    );
                }
                let floor = change.max(m.last().copied().unwrap_or(0));
                let mut n = 0u64;
                let code = loop {
                    let c = cantor_pair(i as u64, n)?;
                    if c > floor {
                        break c;
                    }
                    n += 1;
                };
                next.insert(code);
                trace.push(
                    stage,
                    None,
                    EventKind::Insert,
                    vec![("i", i.to_string()), ("n", n.to_string()), ("code", code.to_string())],
                );
            }
        }
        let cert = certify(a, &next)?;
        trace.push(
            stage,
            None,
            EventKind::Certify,
            vec![("indices", indices_arg(&cert)), ("witness", cert.witness.to_string())],
        );
        certificates.push(cert);
        history.push(next);
    }

    let final_copies = copies(history.last().expect("M"));
    let range: BTreeSet<usize> = final_copies.keys().copied().collect();
    let verdict = is_maximal(a, &range, IntersectionProperty::F)?;
    trace.push(
        stages as u64 + 1,
        None,
        EventKind::Finish,
        vec![("maximal", verdict.maximal.to_string())],
    );
    Ok(PermittingOutcome {
        index_map: IndexMap(range.into_iter().collect()),
        state: PermittingState {
            history,
            stage: stages as u64,
            trace,
        },
        certificates,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermittingAudit {
    pub stages: usize,
    pub violations: Vec<String>,
}

impl PermittingAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Rebuild every `M_s` from the trace alone and check the invariants:
/// `⟨0,0⟩ ∈ M_s`, at most one copy per index, the permitting rule between
/// consecutive stages, and a valid certificate at each stage.
pub fn audit_permitting(trace: &StageTrace, w: &CeEnumeration, a: &Family) -> Result<PermittingAudit> {
    let mut per_stage: BTreeMap<u64, Vec<&crate::trace::TraceEvent>> = BTreeMap::new();
    for e in trace.events() {
        per_stage.entry(e.stage).or_default().push(e);
    }
    let mut violations = Vec::new();
    let mut m: BTreeSet<u64> = BTreeSet::new();
    let mut stages = 0;
    for (&stage, events) in &per_stage {
        let before = m.clone();
        let mut certified = false;
        for e in events {
            match e.kind {
                EventKind::Insert => {
                    let code = e.arg_u64("code")?;
                    if cantor_pair(e.arg_u64("i")?, e.arg_u64("n")?)? != code {
                        violations.push(format!("stage {stage}: insert code {code} mislabeled"));
                    }
                    m.insert(code);
                }
                EventKind::Remove => {
                    let code = e.arg_u64("code")?;
                    if !m.remove(&code) {
                        violations.push(format!("stage {stage}: removed absent code {code}"));
                    }
                }
                EventKind::Certify => {
                    certified = true;
                    let indices = e
                        .arg("indices")
                        .unwrap_or("")
                        .split('|')
                        .filter(|t| !t.is_empty())
                        .map(|t| t.parse().map_err(|_| FipError::CorruptTrace(format!("bad index `{t}`"))))
                        .collect::<Result<BTreeSet<usize>>>()?;
                    let cert = WitnessCertificate::new(indices.iter().copied(), e.arg_u64("witness")?);
                    let held: BTreeSet<usize> = copies(&m).into_keys().collect();
                    if indices != held || !cert.verify(a) {
                        violations.push(format!("stage {stage}: certificate {cert} does not cover M"));
                    }
                }
                _ => {}
            }
        }
        if e_is_finish(events) {
            continue;
        }
        stages += 1;
        if !certified {
            violations.push(format!("stage {stage}: no certificate"));
        }
        if !m.contains(&0) {
            violations.push(format!("stage {stage}: ⟨0,0⟩ missing"));
        }
        if copies(&m).len() != m.len() {
            violations.push(format!("stage {stage}: an index has two copies"));
        }
        if stage > 0 {
            let s = stage as usize - 1;
            let change = w.least_change(s)?;
            for &code in before.symmetric_difference(&m) {
                if change >= code {
                    violations.push(format!(
                        "stage {stage}: M changed at {code} but W changed first at {change}"
                    ));
                }
            }
        }
    }
    Ok(PermittingAudit { stages, violations })
}

fn e_is_finish(events: &[&crate::trace::TraceEvent]) -> bool {
    events.iter().all(|e| e.kind == EventKind::Finish)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(u: u64, m: &[&[u64]]) -> Family {
        let v: Vec<Vec<u64>> = m.iter().map(|s| s.to_vec()).collect();
        Family::from_members(u, &v).unwrap()
    }

    #[test]
    fn pairing_round_trips() {
        for i in 0..40 {
            for n in 0..40 {
                let z = cantor_pair(i, n).unwrap();
                assert_eq!(cantor_unpair(z), (i, n));
            }
        }
        assert_eq!(cantor_pair(0, 0).unwrap(), 0);
        assert_eq!(cantor_pair(1, 0).unwrap(), 1);
        assert_eq!(cantor_pair(0, 1).unwrap(), 2);
        assert!(cantor_pair(u64::MAX, 1).is_err());
    }

    #[test]
    fn freshness_is_enforced() {
        assert!(CeEnumeration::from_increments(vec![[].into(), [].into()]).is_err());
        assert!(CeEnumeration::from_increments(vec![[3].into(), [3].into()]).is_err());
        let w = CeEnumeration::one_per_stage(4);
        assert_eq!(w.snapshot(3), [0, 1, 2].into());
        assert_eq!(CeEnumeration::parse(&w.render()).unwrap(), w);
    }

    #[test]
    fn common_element_collects_everything() {
        let f = fam(6, &[&[0, 1], &[1, 2], &[1, 4], &[1, 6]]);
        let w = CeEnumeration::one_per_stage(12);
        let out = solve_permitting(&f, &w, 11).unwrap();
        assert_eq!(out.index_map, IndexMap(vec![0, 1, 2, 3]));
        assert!(out.verdict.maximal);
        for m in &out.state.history {
            assert!(m.contains(&0));
        }
        let audit = audit_permitting(&out.state.trace, &w, &f).unwrap();
        assert!(audit.passed(), "{:?}", audit.violations);
        assert_eq!(audit.stages, 12);
    }

    #[test]
    fn frozen_enumeration_freezes_low_codes() {
        let f = fam(9, &[&[0, 1, 3], &[2, 1], &[4, 3, 5], &[6, 5, 1], &[8, 7]]);
        // From stage 3 on, W only grows above 50.
        let mut inc: Vec<BTreeSet<u64>> = vec![[].into(), [0].into(), [1].into()];
        inc.extend((0..10).map(|k| [51 + k].into()));
        let w = CeEnumeration::from_increments(inc).unwrap();
        let out = solve_permitting(&f, &w, 12).unwrap();
        let low = |m: &BTreeSet<u64>| m.range(..50).copied().collect::<Vec<_>>();
        for pair in out.state.history[3..].windows(2) {
            assert_eq!(low(&pair[0]), low(&pair[1]));
        }
        assert!(audit_permitting(&out.state.trace, &w, &f).unwrap().passed());
    }

    #[test]
    fn audit_catches_tampering() {
        let f = fam(6, &[&[0, 1], &[1, 2], &[1, 4]]);
        let w = CeEnumeration::one_per_stage(6);
        let out = solve_permitting(&f, &w, 5).unwrap();
        let mut text = out.state.trace.render(crate::trace::TraceFormat::Text);
        text = text.replacen("code=0", "code=7", 1);
        let bad = StageTrace::parse(&text).unwrap();
        assert!(!audit_permitting(&bad, &w, &f).unwrap().passed());
    }

    #[test]
    fn only_a0_nonempty() {
        let f = fam(4, &[&[0], &[], &[]]);
        let w = CeEnumeration::one_per_stage(6);
        let out = solve_permitting(&f, &w, 5).unwrap();
        assert_eq!(out.index_map, IndexMap(vec![0]));
    }
}
