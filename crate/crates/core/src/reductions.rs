//! Effective transforms between intersection principles.
//!
//! * [`hat_transform`] builds `Â` from `A` so that for every finite `F` with
//!   `|F| >= n`, `⋂_{i∈F} Â_i ≠ ∅` iff every `n`-subset of `F` meets in `A`.
//!   A maximal F-subfamily of `Â` then pulls back to a maximal
//!   `D̄_n`-subfamily of `A` ([`pull_back_solution`]).
//! * [`hat_transform_bounded`] is the variant that only looks at `|F| = n+1`.
//! * [`encode_range`] / [`decode_range`] turn a function table into a family
//!   whose maximal subfamilies reveal the table's range.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, IntersectionProperty, StagedSet};
use crate::property::{distinct, distinct_representatives, for_each_combination, is_maximal};
use crate::trace::{replay, EventKind, StageTrace};

/// Subsets of `0..I` are handled as bitmasks; beyond this the sweep is refused.
pub const MAX_HAT_INDEX_BOUND: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HatVariant {
    /// Trigger on every `F` with `|F| >= n`.
    AtLeast,
    /// Trigger only on `F` with `|F| = n + 1`.
    NextSize,
}

impl HatVariant {
    fn admits(self, size: usize, n: usize) -> bool {
        match self {
            HatVariant::AtLeast => size >= n,
            HatVariant::NextSize => size == n + 1,
        }
    }
}

/// Running state of the `Â` construction.
#[derive(Debug, Clone)]
pub struct HatTransformState<'a> {
    source: &'a Family,
    n: usize,
    variant: HatVariant,
    /// Least witness of each `n`-subset of `A`, keyed by bitmask.
    pair_witness: std::collections::HashMap<u32, Option<u64>>,
    next_odd: u64,
    stage: u64,
    trace: StageTrace,
}

#[derive(Debug, Clone)]
pub struct HatOutcome {
    pub family: Family,
    pub trace: StageTrace,
    pub stages: u64,
    /// Sets `F` that qualify on the truncation of `A` but received no common
    /// element within the stage budget.
    pub unwitnessed: Vec<BTreeSet<usize>>,
}

fn mask_members(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

impl<'a> HatTransformState<'a> {
    pub fn new(source: &'a Family, n: usize, variant: HatVariant) -> Result<Self> {
        IntersectionProperty::dbar(n)?;
        if !source.is_nontrivial() {
            return Err(FipError::TrivialFamily);
        }
        let index_bound = source.index_bound();
        if index_bound > MAX_HAT_INDEX_BOUND {
            return Err(FipError::BoundExceeded(format!(
                "hat transform supports I <= {MAX_HAT_INDEX_BOUND}, got {index_bound}"
            )));
        }
        let all: Vec<usize> = (0..index_bound).collect();
        let mut pair_witness = std::collections::HashMap::new();
        for_each_combination(&all, n, |g| {
            let mask = g.iter().fold(0u32, |m, &i| m | (1 << i));
            pair_witness.insert(mask, source.witness(g)?);
            Ok(true)
        })?;
        let mut trace = StageTrace::new(match variant {
            HatVariant::AtLeast => "hat-transform",
            HatVariant::NextSize => "hat-transform-bounded",
        });
        for i in 0..index_bound {
            trace.push(0, None, EventKind::Mark, vec![("set", i.to_string())]);
        }
        Ok(HatTransformState {
            source,
            n,
            variant,
            pair_witness,
            next_odd: 1,
            stage: 0,
            trace,
        })
    }

    /// Does `F` (a bitmask) qualify at stage `s`: right size, and every
    /// `n`-subset has a witness `<= s` in `A`?
    fn qualifies(&self, mask: u32, s: u64) -> Result<bool> {
        let members = mask_members(mask);
        if !self.variant.admits(members.len(), self.n) {
            return Ok(false);
        }
        let mut ok = true;
        for_each_combination(&members, self.n, |g| {
            let gm = g.iter().fold(0u32, |m, &i| m | (1 << i));
            ok = self.pair_witness[&gm].is_some_and(|w| w <= s);
            Ok(ok)
        })?;
        Ok(ok)
    }

    /// Sets triggered at stage `s`, ordered by size then lexicographically.
    fn triggered(&self, s: u64) -> Result<Vec<Vec<usize>>> {
        let index_bound = self.source.index_bound();
        let width = (s as usize + 1).min(index_bound);
        let mut out = Vec::new();
        for mask in 1u32..(1u32 << width) {
            if self.qualifies(mask, s)? {
                out.push(mask_members(mask));
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(out)
    }

    /// Run one stage, deciding the next block of odd numbers.
    pub fn step(&mut self) -> Result<()> {
        let s = self.stage;
        let index_bound = self.source.index_bound();
        let sets = self.triggered(s)?;
        if sets.is_empty() {
            let x = self.next_odd;
            self.next_odd += 2;
            for i in 0..index_bound {
                self.trace.push(s, None, EventKind::Exclude, vec![("set", i.to_string()), ("x", x.to_string())]);
            }
        }
        for f in &sets {
            let x = self.next_odd;
            self.next_odd += 2;
            let names: Vec<String> = f.iter().map(|i| i.to_string()).collect();
            self.trace.push(s, None, EventKind::Trigger, vec![("F", names.join(".")), ("x", x.to_string())]);
            for i in 0..index_bound {
                let kind = if f.contains(&i) { EventKind::Enum } else { EventKind::Exclude };
                self.trace.push(s, None, kind, vec![("set", i.to_string()), ("x", x.to_string())]);
            }
        }
        self.stage += 1;
        Ok(())
    }

    pub fn next_odd(&self) -> u64 {
        self.next_odd
    }

    pub fn finish(mut self) -> Result<HatOutcome> {
        let index_bound = self.source.index_bound();
        let universe = (self.next_odd - 2).max(2 * index_bound.saturating_sub(1) as u64);
        let last = self.stage.saturating_sub(1);
        self.trace.push(last, None, EventKind::Totalize, vec![("through", universe.to_string()), ("sets", index_bound.to_string())]);
        self.trace.push(last, None, EventKind::Finish, vec![("I", index_bound.to_string()), ("U", universe.to_string())]);
        let family = replay(&self.trace)?.family;

        // Qualifying sets on the truncation that never got a common element.
        let mut unwitnessed = Vec::new();
        let full = self.source.universe_bound().max(self.stage);
        for mask in 1u32..(1u32 << index_bound) {
            if self.qualifies(mask, full)? {
                let members = mask_members(mask);
                if family.witness(&members)?.is_none() {
                    unwitnessed.push(members.into_iter().collect());
                }
            }
        }
        Ok(HatOutcome {
            family,
            trace: self.trace,
            stages: self.stage,
            unwitnessed,
        })
    }
}

fn run_hat(a: &Family, n: usize, stages: u64, variant: HatVariant) -> Result<HatOutcome> {
    let mut state = HatTransformState::new(a, n, variant)?;
    for _ in 0..stages {
        state.step()?;
    }
    state.finish()
}

/// Build `Â` for the `|F| >= n` reduction, running `stages` stages.
///
/// With `stages > max(I - 1, U)` every qualifying `F` has been served.
pub fn hat_transform(a: &Family, n: usize, stages: u64) -> Result<HatOutcome> {
    run_hat(a, n, stages, HatVariant::AtLeast)
}

/// Build `Â` for the `|F| = n + 1` reduction.
pub fn hat_transform_bounded(a: &Family, n: usize, stages: u64) -> Result<HatOutcome> {
    run_hat(a, n, stages, HatVariant::NextSize)
}

/// Stage budget after which every qualifying set has been triggered.
pub fn sufficient_stages(a: &Family) -> u64 {
    a.universe_bound().max(a.index_bound() as u64) + 1
}

/// Turn a maximal F-subfamily of `Â` into a maximal `D̄_n`-subfamily of `A`.
///
/// Both ends are verified on the truncation. On finite families the
/// reduction needs the pulled-back subfamily to have enough members to pad
/// an empty intersection up to size `n`; when it does not (possible only for
/// `n >= 3`) the postcondition check reports it.
pub fn pull_back_solution(
    a: &Family,
    hat: &Family,
    hat_chosen: &BTreeSet<usize>,
    n: usize,
) -> Result<BTreeSet<usize>> {
    let prop = IntersectionProperty::dbar(n)?;
    if a.index_bound() != hat.index_bound() {
        return Err(FipError::InvalidParameter(
            "source and transformed family differ in index bound".into(),
        ));
    }
    let v = is_maximal(hat, hat_chosen, IntersectionProperty::F)?;
    if let Some(extending) = v.extending {
        return Err(FipError::NotMaximal { extending });
    }
    let pulled = hat_chosen.clone();
    let back = is_maximal(a, &pulled, prop)?;
    if let Some(extending) = back.extending {
        return Err(FipError::NotMaximal { extending });
    }
    Ok(pulled)
}

/// A finite function table and the family encoding its range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeFamilySpec {
    pub table: Vec<usize>,
    pub index_bound: usize,
}

impl RangeFamilySpec {
    pub fn range(&self) -> BTreeSet<usize> {
        self.table.iter().copied().collect()
    }

    pub fn family(&self) -> Result<Family> {
        encode_range(&self.table, self.index_bound)
    }
}

/// `A_i = {2i} ∪ {2a+1 : (∃b <= a) f(b) = i}` for `a` below the table length.
pub fn encode_range(table: &[usize], index_bound: usize) -> Result<Family> {
    if index_bound == 0 {
        return Err(FipError::InvalidParameter("index bound must be positive".into()));
    }
    if let Some((b, &v)) = table.iter().enumerate().find(|(_, &v)| v >= index_bound) {
        return Err(FipError::InvalidParameter(format!(
            "f({b}) = {v} is outside the index bound {index_bound}"
        )));
    }
    let odd_top = (2 * table.len() as u64).saturating_sub(1);
    let universe = odd_top.max(2 * (index_bound as u64 - 1));
    let mut first_hit: Vec<Option<usize>> = vec![None; index_bound];
    for (b, &v) in table.iter().enumerate() {
        first_hit[v].get_or_insert(b);
    }
    let mut sets = Vec::with_capacity(index_bound);
    for (i, hit) in first_hit.iter().enumerate() {
        let mut s = StagedSet::new(i);
        s.enumerate(2 * i as u64)?;
        if let Some(b) = *hit {
            for a in b..table.len() {
                s.enumerate(2 * a as u64 + 1)?;
            }
        }
        s.decide_through(universe);
        sets.push(s);
    }
    Family::new(sets, universe)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedRange {
    pub range: BTreeSet<usize>,
    /// For `D_n` only: chosen indices that lie in the range (at most `n - 1`).
    pub exceptions: BTreeSet<usize>,
}

fn has_odd_member(family: &Family, i: usize) -> Result<bool> {
    Ok(family.set(i)?.decided_in().any(|x| x % 2 == 1))
}

/// Read the range of `f` off a maximal subfamily of its encoding family.
///
/// For `F`/`D̄_n` the range is the set of chosen indices. A solution made of
/// a single marker-only set (`{2i}` with `i` outside the range) carries no
/// information and is rejected as degenerate. For `D_n` the range is the
/// complement of the chosen indices, with the chosen in-range indices
/// returned separately as exceptions.
pub fn decode_range(
    family: &Family,
    chosen: &BTreeSet<usize>,
    prop: IntersectionProperty,
) -> Result<DecodedRange> {
    let v = is_maximal(family, chosen, prop)?;
    if let Some(extending) = v.extending {
        return Err(FipError::NotMaximal { extending });
    }
    let in_chosen = |i: usize| -> Result<bool> {
        for &c in chosen {
            if !distinct(family, c, i)? {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let mut decoded = DecodedRange {
        range: BTreeSet::new(),
        exceptions: BTreeSet::new(),
    };
    match prop {
        IntersectionProperty::F | IntersectionProperty::DBar(_) => {
            let reps = distinct_representatives(family, chosen)?;
            if let [only] = reps[..] {
                if !has_odd_member(family, only)? {
                    return Err(FipError::DegenerateSolution(format!(
                        "solution is the lone marker set of index {only}"
                    )));
                }
            }
            for i in 0..family.index_bound() {
                if in_chosen(i)? {
                    decoded.range.insert(i);
                }
            }
        }
        IntersectionProperty::D(_) => {
            for i in 0..family.index_bound() {
                if !in_chosen(i)? {
                    decoded.range.insert(i);
                } else if has_odd_member(family, i)? {
                    decoded.exceptions.insert(i);
                }
            }
        }
    }
    Ok(decoded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::IntersectionProperty as P;

    fn fam(u: u64, m: &[&[u64]]) -> Family {
        let v: Vec<Vec<u64>> = m.iter().map(|s| s.to_vec()).collect();
        Family::from_members(u, &v).unwrap()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn hat_markers() {
        let a = fam(8, &[&[0, 1], &[2, 3], &[4, 1, 3]]);
        let out = hat_transform(&a, 2, sufficient_stages(&a)).unwrap();
        out.family.check_marker_convention().unwrap();
        assert!(out.family.is_fully_decided());
        for i in 0..3 {
            for j in 0..3 {
                let want = i == j;
                assert_eq!(out.family.sets()[i].contains(2 * j as u64), want);
            }
        }
    }

    #[test]
    fn hat_keeps_disjoint_pair_disjoint() {
        let a = fam(8, &[&[0, 1], &[2, 3], &[4, 1, 3]]);
        let out = hat_transform(&a, 2, sufficient_stages(&a)).unwrap();
        assert_eq!(out.family.witness(&[0, 1]).unwrap(), None);
        assert!(out.family.witness(&[0, 2]).unwrap().is_some());
        assert!(out.family.witness(&[1, 2]).unwrap().is_some());
        assert_eq!(out.family.witness(&[0, 1, 2]).unwrap(), None);
        assert!(out.unwitnessed.is_empty());
    }

    #[test]
    fn short_budget_reports_unwitnessed() {
        let a = fam(9, &[&[0, 9], &[2, 9]]);
        let out = hat_transform(&a, 2, 3).unwrap();
        assert_eq!(out.unwitnessed, vec![set(&[0, 1])]);
        let full = hat_transform(&a, 2, sufficient_stages(&a)).unwrap();
        assert!(full.unwitnessed.is_empty());
    }

    #[test]
    fn hat_rejects_bad_input() {
        let a = fam(4, &[&[0], &[2]]);
        assert!(hat_transform(&a, 1, 3).is_err());
        let empty = fam(4, &[&[], &[]]);
        assert_eq!(hat_transform(&empty, 2, 3).unwrap_err(), FipError::TrivialFamily);
    }

    #[test]
    fn bounded_variant_only_serves_next_size() {
        // Every pair meets, so every triple qualifies; no pair is served alone.
        let a = fam(6, &[&[0, 1], &[2, 1], &[4, 1], &[6, 1]]);
        let out = hat_transform_bounded(&a, 2, sufficient_stages(&a)).unwrap();
        for t in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            assert!(out.family.witness(&t).unwrap().is_some());
        }
        assert_eq!(out.family.witness(&[0, 1, 2, 3]).unwrap(), None);
        let b = fam(6, &[&[0, 1], &[2, 3], &[4, 1, 3]]);
        let out = hat_transform_bounded(&b, 2, sufficient_stages(&b)).unwrap();
        assert_eq!(out.family.witness(&[0, 1, 2]).unwrap(), None);
    }

    #[test]
    fn pull_back_examples() {
        let a = fam(6, &[&[0, 1], &[2, 1], &[4, 1]]);
        let hat = hat_transform(&a, 2, sufficient_stages(&a)).unwrap().family;
        assert_eq!(pull_back_solution(&a, &hat, &set(&[0, 1, 2]), 2).unwrap(), set(&[0, 1, 2]));

        let b = fam(8, &[&[0, 1], &[2, 3], &[4, 1, 3]]);
        let hat = hat_transform(&b, 2, sufficient_stages(&b)).unwrap().family;
        assert_eq!(pull_back_solution(&b, &hat, &set(&[0, 2]), 2).unwrap(), set(&[0, 2]));
        assert!(!crate::property::check_property_on(&b, &set(&[0, 1, 2]), P::DBar(2)).unwrap().holds);
        assert!(matches!(
            pull_back_solution(&b, &hat, &set(&[0]), 2),
            Err(FipError::NotMaximal { extending: 2 })
        ));
    }

    #[test]
    fn pull_back_gap_for_small_solutions_at_n3() {
        // No triple meets, so Â is the bare marker skeleton and {0} is
        // F-maximal there, but {0} is not Dbar_3-maximal in A (any two sets
        // form a vacuous Dbar_3 family).
        let a = fam(6, &[&[0, 1], &[2, 1], &[4, 3]]);
        let hat = hat_transform(&a, 3, sufficient_stages(&a)).unwrap().family;
        assert!(matches!(
            pull_back_solution(&a, &hat, &set(&[0]), 3),
            Err(FipError::NotMaximal { .. })
        ));
    }

    #[test]
    fn encode_examples() {
        let f = encode_range(&[0, 0, 0, 0, 0], 2).unwrap();
        assert_eq!(f.member_table()[0], vec![0, 1, 3, 5, 7, 9]);
        assert_eq!(f.member_table()[1], vec![2]);
        let g = encode_range(&[0, 1, 2], 3).unwrap();
        assert_eq!(g.witness(&[0, 1, 2]).unwrap(), Some(5));
        let h = encode_range(&[7], 9).unwrap();
        assert_eq!(h.member_table()[3], vec![6]);
        assert!(encode_range(&[3], 3).is_err());
    }

    #[test]
    fn decode_examples() {
        let f = encode_range(&[0, 0, 0, 0, 0], 2).unwrap();
        assert_eq!(decode_range(&f, &set(&[0]), P::F).unwrap().range, set(&[0]));
        assert!(matches!(
            decode_range(&f, &set(&[1]), P::F),
            Err(FipError::DegenerateSolution(_))
        ));

        let g = encode_range(&[0, 1, 2], 3).unwrap();
        let d = decode_range(&g, &set(&[1]), P::D(2)).unwrap();
        assert_eq!(d.range, set(&[0, 2]));
        assert_eq!(d.exceptions, set(&[1]));

        let h = encode_range(&[7], 9).unwrap();
        assert_eq!(decode_range(&h, &set(&[7]), P::DBar(2)).unwrap().range, set(&[7]));
        assert!(matches!(
            decode_range(&g, &set(&[0, 1]), P::F),
            Err(FipError::NotMaximal { extending: 2 })
        ));
    }
}
