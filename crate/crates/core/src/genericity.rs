//! Maximal subfamilies from generic bit strings.
//!
//! Positions of a bit string code finite strings `τ·b` through a fixed
//! bijection [`Coding`]. A set position whose `τ` has a common element
//! `<= b` is *acceptable*; chaining acceptable positions with strictly
//! growing `τ` gives the acceptable sequence, and its last `τ` is the
//! current approximation to the subfamily.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, IndexMap, IntersectionProperty, Meet, WitnessCertificate};
use crate::property::{is_maximal, MaximalityVerdict};

/// The canonical bijection between naturals and finite strings of naturals.
///
/// The *weight* of a string is its length plus the sum of its entries.
/// `c(0)` is the empty string; the `2^(w-1)` strings of weight `w >= 1`
/// occupy codes `2^(w-1) .. 2^w`, ordered by length and then
/// lexicographically. Codes are `u128`, so weights up to 127 are representable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coding;

const MAX_WEIGHT: u64 = 127;

/// Strings of length `len` and weight `w`: compositions of `w` into `len` parts.
fn count(w: u64, len: u64) -> u128 {
    if len == 0 {
        return u128::from(w == 0);
    }
    if w < len {
        return 0;
    }
    binom(w - 1, len - 1)
}

fn binom(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for j in 0..k {
        r = r * u128::from(n - j) / u128::from(j + 1);
    }
    r
}

impl Coding {
    pub fn weight(s: &[u64]) -> Option<u64> {
        s.iter().try_fold(s.len() as u64, |acc, &e| acc.checked_add(e))
    }

    /// `c^{-1}(s)`.
    pub fn encode(&self, s: &[u64]) -> Result<u128> {
        let w = Coding::weight(s).filter(|&w| w <= MAX_WEIGHT).ok_or_else(|| {
            FipError::BoundExceeded(format!("string {s:?} is too heavy to code"))
        })?;
        if w == 0 {
            return Ok(0);
        }
        let len = s.len() as u64;
        let mut rank: u128 = (1..len).map(|l| count(w, l)).sum();
        let mut rest = w;
        for (k, &e) in s.iter().enumerate() {
            let tail = len - k as u64 - 1;
            for v in 0..e {
                rank += count(rest - (v + 1), tail);
            }
            rest -= e + 1;
        }
        Ok((1u128 << (w - 1)) + rank)
    }

    /// `c(n)`.
    pub fn decode(&self, n: u128) -> Vec<u64> {
        if n == 0 {
            return Vec::new();
        }
        let w = 128 - u64::from(n.leading_zeros());
        let mut rank = n - (1u128 << (w - 1));
        let mut len = 1;
        while rank >= count(w, len) {
            rank -= count(w, len);
            len += 1;
        }
        let mut out = Vec::with_capacity(len as usize);
        let mut rest = w;
        for k in 0..len {
            let tail = len - k - 1;
            let mut v = 0;
            loop {
                let c = count(rest - (v + 1), tail);
                if rank < c {
                    break;
                }
                rank -= c;
                v += 1;
            }
            out.push(v);
            rest -= v + 1;
        }
        out
    }
}

/// A finite binary string stored as its length and the positions of its 1s.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitString {
    len: u128,
    ones: BTreeSet<u128>,
}

impl BitString {
    pub fn new() -> Self {
        BitString::default()
    }

    pub fn from_ones(len: u128, ones: impl IntoIterator<Item = u128>) -> Result<Self> {
        let ones: BTreeSet<u128> = ones.into_iter().collect();
        if ones.last().is_some_and(|&p| p >= len) {
            return Err(FipError::InvalidParameter(format!("a 1 lies beyond length {len}")));
        }
        Ok(BitString { len, ones })
    }

    pub fn from_bits(bits: &str) -> Result<Self> {
        let mut ones = BTreeSet::new();
        for (p, ch) in bits.chars().enumerate() {
            match ch {
                '1' => {
                    ones.insert(p as u128);
                }
                '0' => {}
                other => return Err(FipError::InvalidParameter(format!("bit `{other}`"))),
            }
        }
        Ok(BitString { len: bits.chars().count() as u128, ones })
    }

    pub fn len(&self) -> u128 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> &BTreeSet<u128> {
        &self.ones
    }

    pub fn get(&self, p: u128) -> bool {
        self.ones.contains(&p)
    }

    pub fn prefix(&self, t: u128) -> BitString {
        BitString {
            len: t.min(self.len),
            ones: self.ones.range(..t).copied().collect(),
        }
    }

    /// Pad with 0s to length `p` and append a 1.
    pub fn push_one_at(&mut self, p: u128) -> Result<()> {
        if p < self.len {
            return Err(FipError::Contract(format!("position {p} is inside the string")));
        }
        self.ones.insert(p);
        self.len = p + 1;
        Ok(())
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.prefix(self.len) == *self
    }

    /// `len=<n> ones=<p>,<p>,...`
    pub fn render(&self) -> String {
        let ones: Vec<String> = self.ones.iter().map(u128::to_string).collect();
        format!("len={} ones={}", self.len, ones.join(","))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if !text.starts_with("len=") {
            return BitString::from_bits(text);
        }
        let bad = || FipError::InvalidParameter(format!("bad bit string `{text}`"));
        let mut len = None;
        let mut ones = Vec::new();
        for tok in text.split_whitespace() {
            match tok.split_once('=').ok_or_else(bad)? {
                ("len", v) => len = Some(v.parse().map_err(|_| bad())?),
                ("ones", v) => {
                    for p in v.split(',').filter(|p| !p.is_empty()) {
                        ones.push(p.parse().map_err(|_| bad())?);
                    }
                }
                _ => return Err(bad()),
            }
        }
        BitString::from_ones(len.ok_or_else(bad)?, ones)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Why a set position is or is not acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Acceptance {
    Accepted { witness: u64 },
    /// `c(n)` is the empty string.
    EmptyCode,
    /// `τ` names an index at or beyond the truncation's index bound.
    OutOfTruncation,
    /// No common element `<= b`.
    NoWitness,
    /// No common element up to `U`, but `b > U`: the answer lies beyond the truncation.
    BeyondTruncation,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCheck {
    pub n: u128,
    pub tau: Vec<usize>,
    pub b: u64,
    pub acceptance: Acceptance,
}

impl CodeCheck {
    pub fn accepted(&self) -> bool {
        matches!(self.acceptance, Acceptance::Accepted { .. })
    }
}

fn check_code(n: u128, a: &Family, c: &Coding) -> Result<CodeCheck> {
    let mut s = c.decode(n);
    let Some(b) = s.pop() else {
        return Ok(CodeCheck { n, tau: Vec::new(), b: 0, acceptance: Acceptance::EmptyCode });
    };
    let tau: Vec<usize> = s.iter().map(|&x| x as usize).collect();
    let acceptance = if tau.iter().any(|&i| i >= a.index_bound()) {
        Acceptance::OutOfTruncation
    } else {
        let u = a.universe_bound();
        match a.meet(&tau, b.min(u))? {
            Meet::Witness(witness) => Acceptance::Accepted { witness },
            Meet::Empty if b > u => Acceptance::BeyondTruncation,
            Meet::Empty => Acceptance::NoWitness,
            Meet::Undecided => Acceptance::Undecided,
        }
    };
    Ok(CodeCheck { n, tau, b, acceptance })
}

/// Every set position of `sigma` with its acceptance status.
pub fn acceptable_numbers(sigma: &BitString, a: &Family, c: &Coding) -> Result<Vec<CodeCheck>> {
    sigma.ones().iter().map(|&n| check_code(n, a, c)).collect()
}

fn properly_extends(longer: &[usize], shorter: &[usize]) -> bool {
    longer.len() > shorter.len() && longer.starts_with(shorter)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptableSequence {
    pub numbers: Vec<u128>,
    /// `(τ_i, b_i)` for each entry.
    pub witnesses: Vec<(Vec<usize>, u64)>,
}

impl AcceptableSequence {
    pub fn is_empty(&self) -> bool {
        self.numbers.is_empty()
    }

    pub fn last_tau(&self) -> Option<&[usize]> {
        self.witnesses.last().map(|(t, _)| t.as_slice())
    }

    pub fn extends(&self, other: &AcceptableSequence) -> bool {
        self.numbers.starts_with(&other.numbers)
    }
}

pub fn acceptable_sequence(sigma: &BitString, a: &Family, c: &Coding) -> Result<AcceptableSequence> {
    let mut seq = AcceptableSequence::default();
    for check in acceptable_numbers(sigma, a, c)? {
        if !check.accepted() {
            continue;
        }
        let fits = match seq.last_tau() {
            None => true,
            Some(prev) => properly_extends(&check.tau, prev),
        };
        if fits {
            seq.numbers.push(check.n);
            seq.witnesses.push((check.tau, check.b));
        }
    }
    Ok(seq)
}

/// Membership query for the dense set `D_i`, with the witness-search
/// budget standing in for the emptiness test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseSetQuery {
    pub i: usize,
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DenseReason {
    /// The final `τ` lists `i` at this position.
    Enumerates { position: usize },
    /// `A_i` meets nothing in the final `τ` up to the budget.
    NoCommonElement,
    EmptySequence,
    /// The final `τ` and `A_i` share this element.
    Meets { witness: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseVerdict {
    pub member: bool,
    pub reason: DenseReason,
    pub budget: u64,
    /// Whether an emptiness claim covers the whole truncation.
    pub exact: bool,
}

pub fn dense_membership(q: DenseSetQuery, sigma: &BitString, a: &Family, c: &Coding) -> Result<DenseVerdict> {
    let exact = q.budget >= a.universe_bound() && a.is_fully_decided();
    let seq = acceptable_sequence(sigma, a, c)?;
    let verdict = |member, reason| Ok(DenseVerdict { member, reason, budget: q.budget, exact });
    let Some(tau) = seq.last_tau() else {
        return verdict(false, DenseReason::EmptySequence);
    };
    if let Some(position) = tau.iter().position(|&j| j == q.i) {
        return verdict(true, DenseReason::Enumerates { position });
    }
    a.check_index(q.i)?;
    let mut group = tau.to_vec();
    group.push(q.i);
    match a.meet(&group, q.budget.min(a.universe_bound()))? {
        Meet::Witness(witness) => verdict(false, DenseReason::Meets { witness }),
        Meet::Empty => verdict(true, DenseReason::NoCommonElement),
        Meet::Undecided => Err(FipError::Undecided(format!("meet of {group:?}"))),
    }
}

/// Extend the empty string until it meets every target.
///
/// For each unmet target `D_i` the string gains a single 1 at the least
/// position that codes `τ·i·b`, where `τ` is the current final string and
/// `b` is at least the least common element, and which lies beyond every
/// position used so far.
pub fn build_generic(a: &Family, c: &Coding, targets: &[DenseSetQuery]) -> Result<BitString> {
    let mut g = BitString::new();
    for q in targets {
        a.check_index(q.i)?;
        if dense_membership(*q, &g, a, c)?.member {
            continue;
        }
        let seq = acceptable_sequence(&g, a, c)?;
        let mut tau: Vec<usize> = seq.last_tau().map(<[usize]>::to_vec).unwrap_or_default();
        tau.push(q.i);
        let least = match a.meet(&tau, a.universe_bound())? {
            Meet::Witness(x) => x,
            _ => {
                return Err(FipError::Exhausted(format!(
                    "target D_{}: no extension of {tau:?} within the truncation",
                    q.i
                )))
            }
        };
        let mut b = least;
        let code = loop {
            let s: Vec<u64> = tau.iter().map(|&j| j as u64).chain([b]).collect();
            let code = c.encode(&s).map_err(|_| {
                FipError::Exhausted(format!("target D_{}: codes for {tau:?} overflow", q.i))
            })?;
            if code >= g.len() {
                break code;
            }
            b += 1;
        };
        g.push_one_at(code)?;
        if !dense_membership(*q, &g, a, c)?.member {
            return Err(FipError::Contract(format!("extension at {code} missed D_{}", q.i)));
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub index_map: IndexMap,
    /// `(t, τ_t)` at every prefix length `t >= s` where `τ_t` changes.
    pub chain: Vec<(u128, Vec<usize>)>,
    /// One certificate per distinct `τ_t` in the chain.
    pub certificates: Vec<WitnessCertificate>,
    pub verdict: MaximalityVerdict,
}

/// Follow `τ_t` along the prefixes of `g` and return `J = ⋃ τ_t`.
pub fn extract_subfamily(g: &BitString, a: &Family, c: &Coding) -> Result<Extraction> {
    let mut chain: Vec<(u128, Vec<usize>)> = Vec::new();
    // The sequence only changes right after a set position.
    for &p in g.ones() {
        let seq = acceptable_sequence(&g.prefix(p + 1), a, c)?;
        let Some(tau) = seq.last_tau() else { continue };
        if let Some((_, prev)) = chain.last() {
            if !tau.starts_with(prev) {
                return Err(FipError::Contract(format!(
                    "τ at prefix {} does not extend {prev:?}",
                    p + 1
                )));
            }
            if tau == prev.as_slice() {
                continue;
            }
        }
        chain.push((p + 1, tau.to_vec()));
    }
    let Some((_, j)) = chain.last().cloned() else {
        return Err(FipError::Exhausted("no acceptable prefix".into()));
    };
    let certificates = chain
        .iter()
        .map(|(_, tau)| {
            let w = a.witness(tau)?.ok_or_else(|| FipError::Contract(format!("{tau:?} has no common element")))?;
            Ok(WitnessCertificate::new(tau.iter().copied(), w))
        })
        .collect::<Result<Vec<_>>>()?;
    let range: BTreeSet<usize> = j.iter().copied().collect();
    let verdict = is_maximal(a, &range, IntersectionProperty::F)?;
    Ok(Extraction { index_map: IndexMap(j), chain, certificates, verdict })
}

/// Greedy maximal subfamily (start at the least nonempty set, then add each
/// index that keeps a common element). At a finite truncation one always
/// exists; callers opt in to short-circuiting the generic route with it.
pub fn finite_maximal_subfamily(a: &Family) -> Result<Option<IndexMap>> {
    let Some((start, _)) = a.nontrivial_witness() else {
        return Ok(None);
    };
    let mut chosen = vec![start];
    for i in 0..a.index_bound() {
        if i == start {
            continue;
        }
        let mut trial = chosen.clone();
        trial.push(i);
        if matches!(a.meet(&trial, a.universe_bound())?, Meet::Witness(_)) {
            chosen = trial;
        }
    }
    Ok(Some(IndexMap(chosen)))
}
