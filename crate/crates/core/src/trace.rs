//! Append-only stage traces and their line-oriented serialization.
//!
//! Text grammar (one record per line, `#` starts a comment):
//!
//! ```text
//! trace v1 source=<name>
//! seq=<n> stage=<s> [substage=<e>] event=<kind> args=<k>=<v>,<k>=<v>,...
//! ```
//!
//! Keys and values never contain `,`, `=` or whitespace. Replaying the
//! family-building events (`mark`, `enum`, `exclude`, `intersect`,
//! `totalize`, `finish`) reconstructs the run's final family exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, StagedSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Mark,
    Enum,
    Exclude,
    Intersect,
    Totalize,
    Define,
    Relabel,
    Converge,
    Withhold,
    Progressive,
    Window,
    Permit,
    Insert,
    Remove,
    Hold,
    Certify,
    Trigger,
    Finish,
    Note,
}

impl EventKind {
    const ALL: [EventKind; 19] = [
        EventKind::Mark,
        EventKind::Enum,
        EventKind::Exclude,
        EventKind::Intersect,
        EventKind::Totalize,
        EventKind::Define,
        EventKind::Relabel,
        EventKind::Converge,
        EventKind::Withhold,
        EventKind::Progressive,
        EventKind::Window,
        EventKind::Permit,
        EventKind::Insert,
        EventKind::Remove,
        EventKind::Hold,
        EventKind::Certify,
        EventKind::Trigger,
        EventKind::Finish,
        EventKind::Note,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Mark => "mark",
            EventKind::Enum => "enum",
            EventKind::Exclude => "exclude",
            EventKind::Intersect => "intersect",
            EventKind::Totalize => "totalize",
            EventKind::Define => "define",
            EventKind::Relabel => "relabel",
            EventKind::Converge => "converge",
            EventKind::Withhold => "withhold",
            EventKind::Progressive => "progressive",
            EventKind::Window => "window",
            EventKind::Permit => "permit",
            EventKind::Insert => "insert",
            EventKind::Remove => "remove",
            EventKind::Hold => "hold",
            EventKind::Certify => "certify",
            EventKind::Trigger => "trigger",
            EventKind::Finish => "finish",
            EventKind::Note => "note",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = FipError;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FipError::CorruptTrace(format!("unknown event kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub stage: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub substage: Option<u64>,
    pub kind: EventKind,
    pub args: Vec<(String, String)>,
}

impl TraceEvent {
    pub fn arg(&self, key: &str) -> Option<&str> {
        self.args
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn arg_u64(&self, key: &str) -> Result<u64> {
        let v = self
            .arg(key)
            .ok_or_else(|| FipError::CorruptTrace(format!("event {} lacks `{key}`", self.seq)))?;
        v.parse()
            .map_err(|_| FipError::CorruptTrace(format!("event {}: `{key}={v}` is not a number", self.seq)))
    }

    pub fn arg_usize(&self, key: &str) -> Result<usize> {
        Ok(self.arg_u64(key)? as usize)
    }

    pub fn to_line(&self) -> String {
        let mut line = format!("seq={} stage={}", self.seq, self.stage);
        if let Some(e) = self.substage {
            line.push_str(&format!(" substage={e}"));
        }
        line.push_str(&format!(" event={}", self.kind));
        let args: Vec<String> = self.args.iter().map(|(k, v)| format!("{k}={v}")).collect();
        line.push_str(" args=");
        line.push_str(&args.join(","));
        line
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let bad = |m: &str| FipError::CorruptTrace(format!("{m}: `{line}`"));
        let mut seq = None;
        let mut stage = None;
        let mut substage = None;
        let mut kind = None;
        let mut args = Vec::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("token without `=`"))?;
            match k {
                "seq" => seq = Some(v.parse().map_err(|_| bad("bad seq"))?),
                "stage" => stage = Some(v.parse().map_err(|_| bad("bad stage"))?),
                "substage" => substage = Some(v.parse().map_err(|_| bad("bad substage"))?),
                "event" => kind = Some(v.parse()?),
                "args" => {
                    for kv in v.split(',').filter(|s| !s.is_empty()) {
                        let (ak, av) = kv.split_once('=').ok_or_else(|| bad("bad arg"))?;
                        args.push((ak.to_string(), av.to_string()));
                    }
                }
                _ => return Err(bad("unknown field")),
            }
        }
        Ok(TraceEvent {
            seq: seq.ok_or_else(|| bad("missing seq"))?,
            stage: stage.ok_or_else(|| bad("missing stage"))?,
            substage,
            kind: kind.ok_or_else(|| bad("missing event"))?,
            args,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Text,
    JsonLines,
}

impl FromStr for TraceFormat {
    type Err = FipError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(TraceFormat::Text),
            "json-lines" | "jsonl" => Ok(TraceFormat::JsonLines),
            _ => Err(FipError::InvalidParameter(format!("unknown format `{s}`"))),
        }
    }
}

/// An append-only construction log owned by one run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StageTrace {
    pub source: String,
    events: Vec<TraceEvent>,
}

impl StageTrace {
    pub fn new(source: impl Into<String>) -> Self {
        StageTrace {
            source: source.into(),
            events: Vec::new(),
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn push(
        &mut self,
        stage: u64,
        substage: Option<u64>,
        kind: EventKind,
        args: Vec<(&str, String)>,
    ) {
        debug_assert!(
            args.iter().all(|(k, v)| !k.contains([' ', ',', '=']) && !v.contains([' ', ',', '='])),
            "trace arguments must not contain separators: {args:?}"
        );
        let seq = self.events.len() as u64;
        self.events.push(TraceEvent {
            seq,
            stage,
            substage,
            kind,
            args: args.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        });
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Keep only the first `n` events (used to test partial replay).
    pub fn truncated(&self, n: usize) -> StageTrace {
        StageTrace {
            source: self.source.clone(),
            events: self.events[..n.min(self.events.len())].to_vec(),
        }
    }

    pub fn render(&self, format: TraceFormat) -> String {
        let mut out = String::new();
        match format {
            TraceFormat::Text => {
                out.push_str(&format!("trace v1 source={}\n", self.source));
                for e in &self.events {
                    out.push_str(&e.to_line());
                    out.push('\n');
                }
            }
            TraceFormat::JsonLines => {
                out.push_str(
                    &serde_json::json!({"trace": "v1", "source": self.source}).to_string(),
                );
                out.push('\n');
                for e in &self.events {
                    out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parse either serialization (detected from the header line).
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| FipError::CorruptTrace("empty trace".into()))?;
        let mut trace;
        if header.starts_with('{') {
            let h: serde_json::Value = serde_json::from_str(header)
                .map_err(|e| FipError::CorruptTrace(format!("bad header: {e}")))?;
            if h.get("trace").and_then(|v| v.as_str()) != Some("v1") {
                return Err(FipError::CorruptTrace("unsupported trace version".into()));
            }
            let source = h.get("source").and_then(|v| v.as_str()).unwrap_or("");
            trace = StageTrace::new(source);
            for l in lines {
                let e: TraceEvent = serde_json::from_str(l)
                    .map_err(|e| FipError::CorruptTrace(format!("bad event: {e}")))?;
                trace.events.push(e);
            }
        } else {
            let rest = header
                .strip_prefix("trace v1")
                .ok_or_else(|| FipError::CorruptTrace(format!("bad header `{header}`")))?;
            let source = rest.trim().strip_prefix("source=").unwrap_or("");
            trace = StageTrace::new(source);
            for l in lines {
                trace.events.push(TraceEvent::parse_line(l)?);
            }
        }
        for (i, e) in trace.events.iter().enumerate() {
            if e.seq != i as u64 {
                return Err(FipError::CorruptTrace(format!(
                    "sequence number {} at position {i}",
                    e.seq
                )));
            }
        }
        Ok(trace)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub family: Family,
    /// False when the trace ends before its `finish` record.
    pub complete: bool,
}

/// Rebuild the family recorded by a construction trace.
///
/// `totalize` records must not shrink their bound or set count; they are
/// applied once at the end, and any enumeration below a bound already
/// totalized is rejected as corrupt.
pub fn replay(trace: &StageTrace) -> Result<Replay> {
    let mut sets: BTreeMap<usize, StagedSet> = BTreeMap::new();
    let mut index_bound = 0usize;
    let mut universe = 0u64;
    let mut complete = false;
    // (through, sets, stage) of the latest totalize record.
    let mut total: Option<(u64, usize, u64)> = None;
    fn get(sets: &mut BTreeMap<usize, StagedSet>, i: usize) -> &mut StagedSet {
        sets.entry(i).or_insert_with(|| StagedSet::new(i))
    }
    let settled = |total: Option<(u64, usize, u64)>, sets: &BTreeMap<usize, StagedSet>, i: usize, x: u64| {
        total.is_some_and(|(through, count, _)| {
            i < count && x <= through && !sets.get(&i).is_some_and(|s| s.contains(x))
        })
    };
    for e in trace.events() {
        if complete {
            return Err(FipError::CorruptTrace(format!("event {} after finish", e.seq)));
        }
        match e.kind {
            EventKind::Mark => {
                let i = e.arg_usize("set")?;
                get(&mut sets, i).enumerate(2 * i as u64)?;
                index_bound = index_bound.max(i + 1);
            }
            EventKind::Enum | EventKind::Intersect => {
                let x = e.arg_u64("x")?;
                let keys: &[&str] = if e.kind == EventKind::Enum { &["set"] } else { &["a", "b"] };
                for key in keys {
                    let i = e.arg_usize(key)?;
                    if settled(total, &sets, i, x) {
                        return Err(FipError::CorruptTrace(format!(
                            "event {} enumerates {x} into set {i} after it was decided",
                            e.seq
                        )));
                    }
                    get(&mut sets, i).enumerate(x)?;
                    index_bound = index_bound.max(i + 1);
                }
            }
            EventKind::Exclude => {
                let i = e.arg_usize("set")?;
                get(&mut sets, i).exclude(e.arg_u64("x")?)?;
                index_bound = index_bound.max(i + 1);
            }
            EventKind::Totalize => {
                let through = e.arg_u64("through")?;
                let count = e.arg_usize("sets")?;
                if let Some((t, c, _)) = total {
                    if through < t || count < c {
                        return Err(FipError::CorruptTrace(format!("event {} totalizes backwards", e.seq)));
                    }
                }
                total = Some((through, count, e.stage));
                index_bound = index_bound.max(count);
                universe = universe.max(through);
            }
            EventKind::Finish => {
                index_bound = e.arg_usize("I")?;
                universe = e.arg_u64("U")?;
                complete = true;
            }
            _ => {}
        }
    }
    if let Some((through, count, stage)) = total {
        for i in 0..count {
            let s = get(&mut sets, i);
            s.decide_through(through);
            s.advance_stage(stage);
        }
    }
    let family_sets: Vec<StagedSet> = (0..index_bound)
        .map(|i| sets.remove(&i).unwrap_or_else(|| StagedSet::new(i)))
        .collect();
    Ok(Replay {
        family: Family::new(family_sets, universe)?,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StageTrace {
        let mut t = StageTrace::new("unit");
        t.push(0, None, EventKind::Mark, vec![("set", "0".into())]);
        t.push(0, None, EventKind::Mark, vec![("set", "1".into())]);
        t.push(1, Some(0), EventKind::Intersect, vec![("a", "0".into()), ("b", "1".into()), ("x", "3".into())]);
        t.push(1, None, EventKind::Totalize, vec![("through", "4".into()), ("sets", "2".into())]);
        t.push(1, None, EventKind::Finish, vec![("I", "2".into()), ("U", "4".into())]);
        t
    }

    #[test]
    fn text_and_json_parse_back() {
        let t = sample();
        for fmt in [TraceFormat::Text, TraceFormat::JsonLines] {
            let back = StageTrace::parse(&t.render(fmt)).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn replay_rebuilds_family() {
        let r = replay(&sample()).unwrap();
        assert!(r.complete);
        let expected = Family::from_members(4, &[vec![0, 3], vec![2, 3]]).unwrap();
        assert_eq!(r.family.member_table(), expected.member_table());
        assert!(r.family.is_fully_decided());
    }

    #[test]
    fn truncated_trace_is_partial() {
        let r = replay(&sample().truncated(3)).unwrap();
        assert!(!r.complete);
        assert!(!r.family.is_fully_decided());
    }

    #[test]
    fn corrupt_lines_are_rejected() {
        assert!(StageTrace::parse("trace v1 source=x\nseq=0 stage=0 event=bogus args=\n").is_err());
        assert!(StageTrace::parse("trace v1 source=x\nseq=3 stage=0 event=mark args=set=0\n").is_err());
        assert!(StageTrace::parse("").is_err());
    }
}
