use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::world::World;
use crate::error::{FipError, Result};

/// What a strategy may look at when deciding its next value: the family as
/// built so far, and its own trap and potential sets.
pub struct View<'a> {
    pub(crate) world: &'a World,
    pub(crate) e: usize,
    pub(crate) trap: Option<usize>,
    pub(crate) potentials: &'a [usize],
}

impl View<'_> {
    pub fn e(&self) -> usize {
        self.e
    }

    pub fn meets_below(&self, a: usize, b: usize, bound: u64) -> bool {
        self.world.meets_below(a, b, bound)
    }

    pub fn neighbors_below(&self, a: usize, bound: u64) -> Vec<usize> {
        self.world.neighbors_below(a, bound)
    }

    pub fn trap(&self) -> Option<usize> {
        self.trap
    }

    /// This strategy's potential sets, in order of definition.
    pub fn potentials(&self) -> &[usize] {
        self.potentials
    }

    pub fn mentioned(&self) -> u64 {
        self.world.mentioned()
    }
}

/// An opponent `Φ_e`, revealed one value per stage at most.
pub trait Strategy {
    fn name(&self) -> String;

    fn reset(&mut self) {}

    /// Proposal for the next value at stage `s`. `history` holds the accepted
    /// values with the stages they converged; a withheld proposal may be
    /// made again later.
    fn propose(&mut self, s: u64, history: &[(usize, u64)], view: &View<'_>) -> Option<usize>;
}

/// Scripted value: `Φ(a) = value`, offered from `stage` on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub a: usize,
    pub value: usize,
    pub stage: u64,
}

/// Built-in strategies.
///
/// * `silent`: never converges.
/// * `greedy delay=<d>`: starts with `0`, then waits `d` stages between
///   values and takes the least index meeting every value so far below the
///   current stage.
/// * `chaser delay=<d>`: like `greedy` but takes the greatest such index.
/// * `eager`: the least unused index at every stage, ignoring intersections.
/// * `script <a>:<value>@<stage>,...`: fixed values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategySpec {
    Silent,
    Greedy { delay: u64 },
    Chaser { delay: u64 },
    Eager,
    Script(Vec<ScriptEntry>),
}

impl StrategySpec {
    pub fn build(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }

    /// The ten strategies used for suite runs.
    pub fn suite() -> Vec<StrategySpec> {
        let mut v: Vec<StrategySpec> = (0..=5).map(|delay| StrategySpec::Greedy { delay }).collect();
        v.push(StrategySpec::Chaser { delay: 1 });
        v.push(StrategySpec::Silent);
        v.push(StrategySpec::Eager);
        v.push(StrategySpec::Script(vec![
            ScriptEntry { a: 0, value: 0, stage: 1 },
            ScriptEntry { a: 1, value: 1, stage: 2 },
            ScriptEntry { a: 2, value: 2, stage: 3 },
        ]));
        v
    }

    fn waited(delay: u64, s: u64, history: &[(usize, u64)]) -> bool {
        match history.last() {
            Some(&(_, last)) => s > last + delay,
            None => s >= delay,
        }
    }

    fn compatible(s: u64, history: &[(usize, u64)], view: &View<'_>) -> Vec<usize> {
        let Some(&(first, _)) = history.first() else {
            return vec![0];
        };
        view.neighbors_below(first, s)
            .into_iter()
            .filter(|&i| i as u64 <= s)
            .filter(|i| history.iter().all(|&(j, _)| j != *i && view.meets_below(*i, j, s)))
            .collect()
    }
}

impl Strategy for StrategySpec {
    fn name(&self) -> String {
        self.to_string()
    }

    fn propose(&mut self, s: u64, history: &[(usize, u64)], view: &View<'_>) -> Option<usize> {
        match self {
            StrategySpec::Silent => None,
            StrategySpec::Greedy { delay } => {
                if !Self::waited(*delay, s, history) {
                    return None;
                }
                Self::compatible(s, history, view).first().copied()
            }
            StrategySpec::Chaser { delay } => {
                if !Self::waited(*delay, s, history) {
                    return None;
                }
                Self::compatible(s, history, view).last().copied()
            }
            StrategySpec::Eager => (0..=s as usize).find(|i| history.iter().all(|&(j, _)| j != *i)),
            StrategySpec::Script(entries) => {
                let a = history.len();
                entries.iter().find(|x| x.a == a && x.stage <= s).map(|x| x.value)
            }
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::Silent => f.write_str("silent"),
            StrategySpec::Greedy { delay } => write!(f, "greedy delay={delay}"),
            StrategySpec::Chaser { delay } => write!(f, "chaser delay={delay}"),
            StrategySpec::Eager => f.write_str("eager"),
            StrategySpec::Script(entries) => {
                let parts: Vec<String> = entries.iter().map(|x| format!("{}:{}@{}", x.a, x.value, x.stage)).collect();
                write!(f, "script {}", parts.join(","))
            }
        }
    }
}

impl FromStr for StrategySpec {
    type Err = FipError;

    fn from_str(line: &str) -> Result<Self> {
        let bad = |msg: String| FipError::InvalidParameter(msg);
        let mut toks = line.split_whitespace();
        let name = toks.next().ok_or_else(|| bad("empty strategy".into()))?;
        let rest: Vec<&str> = toks.collect();
        let delay = || -> Result<u64> {
            match rest.as_slice() {
                [] => Ok(0),
                [d] => d
                    .strip_prefix("delay=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad(format!("expected delay=<d>, got `{d}`"))),
                _ => Err(bad(format!("too many parameters for {name}"))),
            }
        };
        match name {
            "silent" | "eager" if !rest.is_empty() => Err(bad(format!("{name} takes no parameters"))),
            "silent" => Ok(StrategySpec::Silent),
            "eager" => Ok(StrategySpec::Eager),
            "greedy" => Ok(StrategySpec::Greedy { delay: delay()? }),
            "chaser" => Ok(StrategySpec::Chaser { delay: delay()? }),
            "script" => {
                let mut entries = Vec::new();
                for part in rest.join(",").split(',').filter(|p| !p.is_empty()) {
                    let parsed = part.split_once(':').and_then(|(a, r)| {
                        let (v, st) = r.split_once('@')?;
                        Some(ScriptEntry {
                            a: a.parse().ok()?,
                            value: v.parse().ok()?,
                            stage: st.parse().ok()?,
                        })
                    });
                    entries.push(parsed.ok_or_else(|| bad(format!("bad script entry `{part}`")))?);
                }
                Ok(StrategySpec::Script(entries))
            }
            other => Err(bad(format!("unknown strategy `{other}`"))),
        }
    }
}

/// One strategy per line; blank lines and `#` comments are skipped.
pub fn parse_strategies(text: &str) -> Result<Vec<StrategySpec>> {
    text.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            l.parse().map_err(|e: FipError| FipError::Parse {
                line: n,
                msg: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip() {
        for spec in StrategySpec::suite() {
            assert_eq!(spec.to_string().parse::<StrategySpec>().unwrap(), spec);
        }
        assert_eq!(StrategySpec::suite().len(), 10);
    }

    #[test]
    fn strategy_file() {
        let v = parse_strategies("# suite\ngreedy delay=2\n\nsilent\nscript 0:4@1, 1:6@3\n").unwrap();
        assert_eq!(v[0], StrategySpec::Greedy { delay: 2 });
        assert_eq!(v[1], StrategySpec::Silent);
        assert_eq!(
            v[2],
            StrategySpec::Script(vec![
                ScriptEntry { a: 0, value: 4, stage: 1 },
                ScriptEntry { a: 1, value: 6, stage: 3 }
            ])
        );
        assert!(matches!(parse_strategies("greedy speed=2"), Err(FipError::Parse { line: 1, .. })));
        assert!(parse_strategies("silent now").is_err());
    }
}
