//! Families of staged sets at an explicit truncation.
//!
//! A [`StagedSet`] is tri-state: an element is known to be in, known to be
//! out, or not yet decided. A [`Family`] is an indexed sequence of such sets
//! together with the bounds (`index_bound`, `universe_bound`) every verdict
//! about it is relative to.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    In,
    Out,
    Undecided,
}

/// A set of naturals revealed by a monotone stage enumeration.
///
/// Non-members are stored compactly: everything `<= decided_through` that is
/// not a member is out, and `excluded` holds isolated non-members above that
/// line (typically foreign markers).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedSet {
    index: usize,
    members: BTreeSet<u64>,
    decided_through: Option<u64>,
    excluded: BTreeSet<u64>,
    stage: u64,
}

impl StagedSet {
    pub fn new(index: usize) -> Self {
        StagedSet {
            index,
            members: BTreeSet::new(),
            decided_through: None,
            excluded: BTreeSet::new(),
            stage: 0,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn decided_through(&self) -> Option<u64> {
        self.decided_through
    }

    pub fn membership(&self, x: u64) -> Membership {
        if self.members.contains(&x) {
            Membership::In
        } else if self.decided_through.is_some_and(|d| x <= d) || self.excluded.contains(&x) {
            Membership::Out
        } else {
            Membership::Undecided
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        self.members.contains(&x)
    }

    /// Enumerate `x` into the set. Fails if `x` was already decided out.
    pub fn enumerate(&mut self, x: u64) -> Result<()> {
        if self.membership(x) == Membership::Out {
            return Err(FipError::Monotonicity {
                index: self.index,
                reason: format!("{x} is already decided out"),
            });
        }
        self.members.insert(x);
        Ok(())
    }

    /// Enumerate `x` into the complement. Fails if `x` is a member.
    pub fn exclude(&mut self, x: u64) -> Result<()> {
        if self.members.contains(&x) {
            return Err(FipError::Monotonicity {
                index: self.index,
                reason: format!("{x} is already a member"),
            });
        }
        if !self.decided_through.is_some_and(|d| x <= d) {
            self.excluded.insert(x);
        }
        Ok(())
    }

    /// Decide every element `<= bound`: anything not enumerated goes out.
    pub fn decide_through(&mut self, bound: u64) {
        if self.decided_through.is_some_and(|d| d >= bound) {
            return;
        }
        self.decided_through = Some(bound);
        self.excluded = self.excluded.split_off(&(bound + 1));
    }

    pub fn advance_stage(&mut self, stage: u64) {
        self.stage = self.stage.max(stage);
    }

    pub fn decided_in(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied()
    }

    /// Decided non-members up to `bound`.
    pub fn decided_out_upto(&self, bound: u64) -> impl Iterator<Item = u64> + '_ {
        (0..=bound).filter(move |&x| self.membership(x) == Membership::Out)
    }

    pub fn is_decided_through(&self, bound: u64) -> bool {
        if self.decided_through.is_some_and(|d| d >= bound) {
            return true;
        }
        (0..=bound).all(|x| self.membership(x) != Membership::Undecided)
    }

    pub fn least_member(&self) -> Option<u64> {
        self.members.first().copied()
    }

    pub fn members_upto(&self, bound: u64) -> impl Iterator<Item = u64> + '_ {
        self.members.range(..=bound).copied()
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }
}

/// Which intersection property a (sub)family is asked to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntersectionProperty {
    /// Any `n` distinct sets have empty intersection.
    D(usize),
    /// Any `n` distinct sets have nonempty intersection.
    DBar(usize),
    /// Any `m >= 2` distinct sets have nonempty intersection.
    F,
}

impl IntersectionProperty {
    pub fn d(n: usize) -> Result<Self> {
        Self::check_n(n)?;
        Ok(Self::D(n))
    }

    pub fn dbar(n: usize) -> Result<Self> {
        Self::check_n(n)?;
        Ok(Self::DBar(n))
    }

    fn check_n(n: usize) -> Result<()> {
        if n < 2 {
            return Err(FipError::InvalidParameter(format!(
                "intersection size must be >= 2, got {n}"
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::D(n) | Self::DBar(n) => Self::check_n(n),
            Self::F => Ok(()),
        }
    }
}

impl fmt::Display for IntersectionProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::D(n) => write!(f, "D{n}"),
            Self::DBar(n) => write!(f, "Dbar{n}"),
            Self::F => write!(f, "F"),
        }
    }
}

impl FromStr for IntersectionProperty {
    type Err = FipError;

    /// Accepts `F`, `D<n>`, `Dbar<n>` (also `D_<n>`, `Dbar_<n>`).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("f") {
            return Ok(Self::F);
        }
        let parse_n = |rest: &str| {
            rest.trim_start_matches('_')
                .parse::<usize>()
                .map_err(|_| FipError::InvalidParameter(format!("bad property `{s}`")))
        };
        let lower = t.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("dbar") {
            Self::dbar(parse_n(rest)?)
        } else if let Some(rest) = lower.strip_prefix('d') {
            Self::d(parse_n(rest)?)
        } else {
            Err(FipError::InvalidParameter(format!("bad property `{s}`")))
        }
    }
}

/// A finite index set `F` and an element `a` in every `A_i`, `i ∈ F`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub indices: BTreeSet<usize>,
    pub witness: u64,
}

impl WitnessCertificate {
    pub fn new(indices: impl IntoIterator<Item = usize>, witness: u64) -> Self {
        WitnessCertificate {
            indices: indices.into_iter().collect(),
            witness,
        }
    }

    pub fn verify(&self, family: &Family) -> bool {
        self.indices.iter().all(|&i| {
            family
                .sets
                .get(i)
                .is_some_and(|s| s.contains(self.witness))
        })
    }

    /// True if this certificate also certifies every subset of `indices`.
    pub fn covers(&self, subset: &BTreeSet<usize>) -> bool {
        subset.is_subset(&self.indices)
    }
}

impl fmt::Display for WitnessCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}} witness={}", idx.join(","), self.witness)
    }
}

/// A map `J: ℕ → ℕ` (finite prefix) defining the subfamily `⟨A_{J(i)}⟩`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexMap(pub Vec<usize>);

impl IndexMap {
    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn range(&self) -> BTreeSet<usize> {
        self.0.iter().copied().collect()
    }

    pub fn validate(&self, family: &Family) -> Result<()> {
        for &j in &self.0 {
            family.check_index(j)?;
        }
        Ok(())
    }
}

impl fmt::Display for IndexMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", v.join(","))
    }
}

/// Outcome of a bounded witness search over an intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Meet {
    Witness(u64),
    Empty,
    Undecided,
}

/// An indexed family truncated at `index_bound` sets and `universe_bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    sets: Vec<StagedSet>,
    universe_bound: u64,
    nontrivial_witness: Option<(usize, u64)>,
}

impl Family {
    /// Wrap already-built sets. `sets[i].index()` must equal `i`.
    pub fn new(sets: Vec<StagedSet>, universe_bound: u64) -> Result<Self> {
        for (i, s) in sets.iter().enumerate() {
            if s.index != i {
                return Err(FipError::MalformedSet {
                    index: i,
                    reason: format!("stored index {} does not match position", s.index),
                });
            }
        }
        let mut fam = Family {
            sets,
            universe_bound,
            nontrivial_witness: None,
        };
        fam.nontrivial_witness = fam.least_member_pair();
        Ok(fam)
    }

    /// A family fully decided on `0..=universe_bound` with the given members.
    pub fn from_members(universe_bound: u64, members: &[Vec<u64>]) -> Result<Self> {
        let mut sets = Vec::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            let mut s = StagedSet::new(i);
            for &x in m {
                if x > universe_bound {
                    return Err(FipError::InvalidParameter(format!(
                        "element {x} of set {i} exceeds universe bound {universe_bound}"
                    )));
                }
                s.enumerate(x)?;
            }
            s.decide_through(universe_bound);
            sets.push(s);
        }
        Family::new(sets, universe_bound)
    }

    pub fn index_bound(&self) -> usize {
        self.sets.len()
    }

    pub fn universe_bound(&self) -> u64 {
        self.universe_bound
    }

    pub fn sets(&self) -> &[StagedSet] {
        &self.sets
    }

    pub fn nontrivial_witness(&self) -> Option<(usize, u64)> {
        self.nontrivial_witness
    }

    pub fn is_nontrivial(&self) -> bool {
        self.nontrivial_witness.is_some()
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.sets.len() {
            return Err(FipError::IndexOutOfBounds {
                index: i,
                bound: self.sets.len(),
            });
        }
        Ok(())
    }

    pub fn set(&self, i: usize) -> Result<&StagedSet> {
        self.check_index(i)?;
        Ok(&self.sets[i])
    }

    fn least_member_pair(&self) -> Option<(usize, u64)> {
        self.sets
            .iter()
            .find_map(|s| s.least_member().map(|a| (s.index, a)))
    }

    /// Least element `<= bound` in every listed set, tri-state.
    ///
    /// The empty index list meets at 0 (the empty intersection is everything).
    pub fn meet(&self, indices: &[usize], bound: u64) -> Result<Meet> {
        for &i in indices {
            self.check_index(i)?;
        }
        let Some((&first, rest)) = indices.split_first() else {
            return Ok(Meet::Witness(0));
        };
        let pivot = rest
            .iter()
            .copied()
            .min_by_key(|&i| self.sets[i].member_count())
            .filter(|&i| self.sets[i].member_count() < self.sets[first].member_count())
            .unwrap_or(first);
        for x in self.sets[pivot].members_upto(bound) {
            if indices.iter().all(|&i| self.sets[i].contains(x)) {
                return Ok(Meet::Witness(x));
            }
        }
        let not_excluded = |x: u64| {
            indices
                .iter()
                .all(|&i| self.sets[i].membership(x) != Membership::Out)
        };
        // A set decided through `bound` rules out everything but its members.
        let decided = indices
            .iter()
            .copied()
            .find(|&i| self.sets[i].decided_through.is_some_and(|d| d >= bound));
        let undecided = match decided {
            Some(d) => self.sets[d].members_upto(bound).any(not_excluded),
            None => (0..=bound).any(not_excluded),
        };
        Ok(if undecided { Meet::Undecided } else { Meet::Empty })
    }

    /// Like [`Family::meet`] at the universe bound, failing loudly on undecided.
    pub fn witness(&self, indices: &[usize]) -> Result<Option<u64>> {
        match self.meet(indices, self.universe_bound)? {
            Meet::Witness(x) => Ok(Some(x)),
            Meet::Empty => Ok(None),
            Meet::Undecided => Err(FipError::Undecided(format!(
                "intersection of {indices:?} below {}",
                self.universe_bound
            ))),
        }
    }

    /// Every set decided on every element `<= universe_bound`.
    pub fn is_fully_decided(&self) -> bool {
        self.sets
            .iter()
            .all(|s| s.is_decided_through(self.universe_bound))
    }

    /// Check that `2i ∈ A_i`, `2j ∉ A_i` for decided `j ≠ i`, and that every
    /// other decided member is odd.
    pub fn check_marker_convention(&self) -> Result<()> {
        for s in &self.sets {
            let i = s.index;
            if s.membership(2 * i as u64) != Membership::In {
                return Err(FipError::MalformedSet {
                    index: i,
                    reason: format!("marker {} is not a member", 2 * i),
                });
            }
            if let Some(x) = s.decided_in().find(|&x| x % 2 == 0 && x != 2 * i as u64) {
                return Err(FipError::MalformedSet {
                    index: i,
                    reason: format!("foreign even member {x}"),
                });
            }
        }
        Ok(())
    }

    pub fn check_invariants(&self) -> Result<()> {
        for (i, s) in self.sets.iter().enumerate() {
            if s.index != i {
                return Err(FipError::MalformedSet {
                    index: i,
                    reason: "index mismatch".into(),
                });
            }
            if let Some(x) = s.excluded.iter().find(|x| s.members.contains(x)) {
                return Err(FipError::MalformedSet {
                    index: i,
                    reason: format!("{x} both in and out"),
                });
            }
        }
        if let Some((i, a)) = self.nontrivial_witness {
            if !self.sets[i].contains(a) {
                return Err(FipError::MalformedSet {
                    index: i,
                    reason: format!("nontrivial witness {a} is not a member"),
                });
            }
        }
        Ok(())
    }

    /// Members of every set up to `universe_bound`, one vector per set.
    pub fn member_table(&self) -> Vec<Vec<u64>> {
        self.sets
            .iter()
            .map(|s| s.members_upto(self.universe_bound).collect())
            .collect()
    }
}
