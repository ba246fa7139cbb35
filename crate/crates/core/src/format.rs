//! Family files.
//!
//! ```text
//! # comments and blank lines are ignored
//! family v1 I=<index_bound> U=<universe_bound>
//! set <i>: <strictly increasing members, each <= U>
//! ```
//!
//! Every element `<= U` not listed for a set is decided out; indices with no
//! `set` line are empty. Instead of `set` lines a file may hold exactly one
//! generator line:
//!
//! ```text
//! gen skeleton                 # A_i = {2i}
//! gen common a=<odd>           # A_i = {2i, a}
//! gen range table=<f0,f1,...>  # A_i = {2i} ∪ {2a+1 : ∃b <= a, f(b) = i}
//! ```
//!
//! For `gen range` the header's `U` is ignored; the universe is fixed by the
//! table length.

use std::collections::BTreeMap;

use crate::error::{FipError, Result};
use crate::family::Family;
use crate::reductions::encode_range;

fn perr(line: usize, msg: impl Into<String>) -> FipError {
    FipError::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_field<T: std::str::FromStr>(tok: Option<&str>, key: &str, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("header lacks {key}=")))?;
    let v = tok
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| perr(line, format!("expected {key}=<n>, got `{tok}`")))?;
    v.parse()
        .map_err(|_| perr(line, format!("bad value for {key}: `{v}`")))
}

pub fn parse_family(text: &str) -> Result<Family> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hn, header) = lines.next().ok_or_else(|| perr(1, "empty family file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("family") || toks.next() != Some("v1") {
        return Err(perr(hn, "expected header `family v1 I=<n> U=<n>`"));
    }
    let index_bound: usize = header_field(toks.next(), "I", hn)?;
    let universe_bound: u64 = header_field(toks.next(), "U", hn)?;
    if let Some(extra) = toks.next() {
        return Err(perr(hn, format!("unexpected header token `{extra}`")));
    }

    let mut members: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    let mut generator: Option<(usize, String)> = None;
    for (n, line) in lines {
        if let Some(rest) = line.strip_prefix("gen ") {
            if generator.is_some() || !members.is_empty() {
                return Err(perr(n, "a generator must be the only body line"));
            }
            generator = Some((n, rest.trim().to_string()));
            continue;
        }
        if generator.is_some() {
            return Err(perr(n, "a generator must be the only body line"));
        }
        let rest = line
            .strip_prefix("set ")
            .ok_or_else(|| perr(n, format!("expected `set` or `gen`, got `{line}`")))?;
        let (idx, elems) = rest
            .split_once(':')
            .ok_or_else(|| perr(n, "expected `set <i>: ...`"))?;
        let i: usize = idx
            .trim()
            .parse()
            .map_err(|_| perr(n, format!("bad set index `{}`", idx.trim())))?;
        if i >= index_bound {
            return Err(perr(n, format!("set {i} outside I={index_bound}")));
        }
        if members.contains_key(&i) {
            return Err(perr(n, format!("set {i} listed twice")));
        }
        let mut v = Vec::new();
        for t in elems.split_whitespace() {
            let x: u64 = t.parse().map_err(|_| perr(n, format!("bad element `{t}`")))?;
            if x > universe_bound {
                return Err(perr(n, format!("element {x} exceeds U={universe_bound}")));
            }
            if v.last().is_some_and(|&p| p >= x) {
                return Err(perr(n, "elements must be strictly increasing"));
            }
            v.push(x);
        }
        members.insert(i, v);
    }

    if let Some((n, spec)) = generator {
        return generate(n, &spec, index_bound, universe_bound);
    }
    let table: Vec<Vec<u64>> = (0..index_bound)
        .map(|i| members.remove(&i).unwrap_or_default())
        .collect();
    Family::from_members(universe_bound, &table)
}

fn generate(line: usize, spec: &str, index_bound: usize, universe_bound: u64) -> Result<Family> {
    let mut toks = spec.split_whitespace();
    let name = toks.next().ok_or_else(|| perr(line, "empty generator"))?;
    let params: BTreeMap<&str, &str> = toks
        .map(|t| {
            t.split_once('=')
                .ok_or_else(|| perr(line, format!("bad generator parameter `{t}`")))
        })
        .collect::<Result<_>>()?;
    let fail = |e: FipError| perr(line, e.to_string());
    match name {
        "skeleton" => {
            let table: Vec<Vec<u64>> = (0..index_bound).map(|i| vec![2 * i as u64]).collect();
            Family::from_members(universe_bound, &table).map_err(fail)
        }
        "common" => {
            let a: u64 = params
                .get("a")
                .ok_or_else(|| perr(line, "gen common needs a=<odd>"))?
                .parse()
                .map_err(|_| perr(line, "bad a="))?;
            if a.is_multiple_of(2) || a > universe_bound {
                return Err(perr(line, "common element must be odd and <= U"));
            }
            let table: Vec<Vec<u64>> = (0..index_bound)
                .map(|i| {
                    let mut v = vec![2 * i as u64, a];
                    v.sort_unstable();
                    v
                })
                .collect();
            Family::from_members(universe_bound.max(2 * index_bound as u64), &table).map_err(fail)
        }
        "range" => {
            let raw = params
                .get("table")
                .ok_or_else(|| perr(line, "gen range needs table=<f0,f1,...>"))?;
            let table: Vec<usize> = raw
                .split(',')
                .map(|t| t.parse().map_err(|_| perr(line, format!("bad table entry `{t}`"))))
                .collect::<Result<_>>()?;
            encode_range(&table, index_bound).map_err(fail)
        }
        other => Err(perr(line, format!("unknown generator `{other}`"))),
    }
}

/// Serialize the decided-in part of every set (up to `U`).
pub fn write_family(family: &Family) -> String {
    let mut out = format!(
        "family v1 I={} U={}\n",
        family.index_bound(),
        family.universe_bound()
    );
    for (i, row) in family.member_table().iter().enumerate() {
        let elems: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        if elems.is_empty() {
            out.push_str(&format!("set {i}:\n"));
        } else {
            out.push_str(&format!("set {i}: {}\n", elems.join(" ")));
        }
    }
    out
}

/// Comma- or whitespace-separated list of naturals.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| FipError::InvalidParameter(format!("bad list entry `{t}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_explicit_sets() {
        let f = parse_family("# demo\nfamily v1 I=3 U=5\nset 0: 0 1\nset 2: 4 5\n").unwrap();
        assert_eq!(f.member_table(), vec![vec![0, 1], vec![], vec![4, 5]]);
        assert!(f.is_fully_decided());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let f = Family::from_members(9, &[vec![0, 3], vec![2, 3, 9], vec![]]).unwrap();
        assert_eq!(parse_family(&write_family(&f)).unwrap(), f);
    }

    #[test]
    fn generators() {
        let f = parse_family("family v1 I=3 U=6\ngen common a=5\n").unwrap();
        assert_eq!(f.member_table(), vec![vec![0, 5], vec![2, 5], vec![4, 5]]);
        let g = parse_family("family v1 I=2 U=0\ngen range table=0,0,0,0,0\n").unwrap();
        assert_eq!(g.member_table()[0], vec![0, 1, 3, 5, 7, 9]);
        assert_eq!(g.member_table()[1], vec![2]);
        let s = parse_family("family v1 I=2 U=3\ngen skeleton\n").unwrap();
        assert_eq!(s.member_table(), vec![vec![0], vec![2]]);
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "",
            "family v2 I=1 U=1\n",
            "family v1 I=1\n",
            "family v1 I=1 U=3\nset 0: 3 1\n",
            "family v1 I=1 U=3\nset 0: 9\n",
            "family v1 I=1 U=3\nset 4: 1\n",
            "family v1 I=1 U=3\nset 0: 1\nset 0: 1\n",
            "family v1 I=1 U=3\nbogus\n",
            "family v1 I=1 U=3\ngen nope\n",
        ] {
            assert!(matches!(parse_family(bad), Err(FipError::Parse { .. })), "{bad:?}");
        }
    }
}
