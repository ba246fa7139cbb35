//! Exhaustive oracles used as ground truth by tests and scenarios.
//!
//! Nothing here calls into `property`, `reductions` or the solvers: sets are
//! flattened into boolean membership rows and every question is answered by
//! enumerating subsets directly.

use std::collections::BTreeSet;

use crate::error::{FipError, Result};
use crate::family::{Family, IntersectionProperty, Membership};
use crate::par::{self, Exec};

/// Exhaustive search is refused above this many sets.
pub const MAX_ORACLE_INDEX_BOUND: usize = 12;

/// Fully decided membership rows `row[i][x]` for `x <= U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberTable {
    rows: Vec<Vec<bool>>,
}

impl MemberTable {
    pub fn from_family(family: &Family) -> Result<Self> {
        let u = family.universe_bound();
        let mut rows = Vec::with_capacity(family.index_bound());
        for s in family.sets() {
            let mut row = Vec::with_capacity(u as usize + 1);
            for x in 0..=u {
                match s.membership(x) {
                    Membership::In => row.push(true),
                    Membership::Out => row.push(false),
                    Membership::Undecided => {
                        return Err(FipError::Undecided(format!(
                            "oracle needs set {} decided at {x}",
                            s.index()
                        )))
                    }
                }
            }
            rows.push(row);
        }
        Ok(MemberTable { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Is some column set in every row of `members`?
    pub fn meets(&self, members: &[usize]) -> bool {
        (0..self.width()).any(|x| members.iter().all(|&i| self.rows[i][x]))
    }

    fn same(&self, i: usize, j: usize) -> bool {
        self.rows[i] == self.rows[j]
    }

    /// Least index extensionally equal to `i`.
    fn class_of(&self, i: usize) -> usize {
        (0..=i).find(|&j| self.same(i, j)).unwrap_or(i)
    }

    /// Bitmask closed under extensional equality.
    fn closure(&self, mask: u32) -> u32 {
        let mut out = mask;
        for i in 0..self.len() {
            if mask & (1 << i) != 0 {
                for j in 0..self.len() {
                    if self.same(i, j) {
                        out |= 1 << j;
                    }
                }
            }
        }
        out
    }

    fn representatives(&self, mask: u32) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| mask & (1 << i) != 0 && self.class_of(i) == i)
            .collect()
    }

    /// Does the subfamily on a closed `mask` have `prop`?
    pub fn holds(&self, mask: u32, prop: IntersectionProperty) -> bool {
        let reps = self.representatives(self.closure(mask));
        let r = reps.len();
        // Visit every subset of the representatives by its own bitmask.
        for sub in 0u32..(1u32 << r) {
            let size = sub.count_ones() as usize;
            let pick: Vec<usize> = (0..r).filter(|b| sub & (1 << b) != 0).map(|b| reps[b]).collect();
            let violated = match prop {
                IntersectionProperty::D(n) => size == n && self.meets(&pick),
                IntersectionProperty::DBar(n) => size == n && !self.meets(&pick),
                IntersectionProperty::F => size >= 2 && !self.meets(&pick),
            };
            if violated {
                return false;
            }
        }
        true
    }
}

fn mask_of(set: &BTreeSet<usize>) -> u32 {
    set.iter().fold(0, |m, &i| m | (1 << i))
}

fn set_of(mask: u32) -> BTreeSet<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

/// All maximal subfamilies with `prop`, as index sets closed under
/// extensional equality, in increasing bitmask order.
pub fn brute_force_maximal(family: &Family, prop: IntersectionProperty) -> Result<Vec<BTreeSet<usize>>> {
    brute_force_maximal_with(family, prop, Exec::default())
}

pub fn brute_force_maximal_with(
    family: &Family,
    prop: IntersectionProperty,
    exec: Exec,
) -> Result<Vec<BTreeSet<usize>>> {
    prop.validate()?;
    let n = family.index_bound();
    if n > MAX_ORACLE_INDEX_BOUND {
        return Err(FipError::BoundExceeded(format!(
            "brute force limited to I <= {MAX_ORACLE_INDEX_BOUND}, got {n}"
        )));
    }
    let table = MemberTable::from_family(family)?;
    let good: Vec<u32> = par::filter_map_range(exec, 1u64 << n, |m| {
        let m = m as u32;
        (table.closure(m) == m && table.holds(m, prop)).then_some(m)
    });
    let maximal = par::map(exec, good.clone(), |m| {
        let dominated = good.iter().any(|&o| o != m && o & m == m);
        (!dominated).then_some(m)
    });
    Ok(maximal.into_iter().flatten().map(set_of).collect())
}

/// Is the closure of `chosen` one of the brute-force maximal solutions?
pub fn oracle_is_maximal(family: &Family, chosen: &BTreeSet<usize>, prop: IntersectionProperty) -> Result<bool> {
    let table = MemberTable::from_family(family)?;
    let closed = set_of(table.closure(mask_of(chosen)));
    Ok(brute_force_maximal(family, prop)?.contains(&closed))
}

/// Does the subfamily on `chosen` have `prop`? (exhaustive)
pub fn oracle_holds(family: &Family, chosen: &BTreeSet<usize>, prop: IntersectionProperty) -> Result<bool> {
    if family.index_bound() > 32 {
        return Err(FipError::BoundExceeded("oracle masks hold 32 sets".into()));
    }
    let table = MemberTable::from_family(family)?;
    Ok(table.holds(mask_of(chosen), prop))
}

/// Sets `F` (`|F| >= n`) where `⋂ Â_F ≠ ∅` disagrees with "every `n`-subset
/// of `F` meets in `A`". Empty means the law holds on the truncation.
pub fn law_violations(a: &Family, hat: &Family, n: usize) -> Result<Vec<BTreeSet<usize>>> {
    law_violations_sized(a, hat, n, |size| size >= n)
}

/// As [`law_violations`] but only over sets with `|F| = n + 1`.
pub fn law_violations_next_size(a: &Family, hat: &Family, n: usize) -> Result<Vec<BTreeSet<usize>>> {
    law_violations_sized(a, hat, n, |size| size == n + 1)
}

fn law_violations_sized(
    a: &Family,
    hat: &Family,
    n: usize,
    admit: impl Fn(usize) -> bool,
) -> Result<Vec<BTreeSet<usize>>> {
    let ta = MemberTable::from_family(a)?;
    let th = MemberTable::from_family(hat)?;
    if ta.len() != th.len() || ta.len() > 20 {
        return Err(FipError::InvalidParameter("index bounds differ or exceed 20".into()));
    }
    let k = ta.len();
    let mut bad = Vec::new();
    for mask in 0u32..(1u32 << k) {
        let size = mask.count_ones() as usize;
        if !admit(size) {
            continue;
        }
        let members: Vec<usize> = set_of(mask).into_iter().collect();
        let lhs = th.meets(&members);
        let rhs = (0u32..(1u32 << k))
            .filter(|g| g & mask == *g && g.count_ones() as usize == n)
            .all(|g| ta.meets(&set_of(g).into_iter().collect::<Vec<_>>()));
        if lhs != rhs {
            bad.push(set_of(mask));
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::IntersectionProperty as P;

    fn fam(u: u64, m: &[&[u64]]) -> Family {
        let v: Vec<Vec<u64>> = m.iter().map(|s| s.to_vec()).collect();
        Family::from_members(u, &v).unwrap()
    }

    fn sets(v: &[&[usize]]) -> Vec<BTreeSet<usize>> {
        v.iter().map(|s| s.iter().copied().collect()).collect()
    }

    #[test]
    fn disjoint_family_has_singleton_solutions() {
        let f = fam(4, &[&[0], &[2], &[4]]);
        assert_eq!(brute_force_maximal(&f, P::DBar(2)).unwrap(), sets(&[&[0], &[1], &[2]]));
    }

    #[test]
    fn common_element_has_one_solution() {
        let f = fam(4, &[&[0, 1], &[2, 1], &[4, 1]]);
        assert_eq!(brute_force_maximal(&f, P::F).unwrap(), sets(&[&[0, 1, 2]]));
    }

    #[test]
    fn duplicates_collapse() {
        let f = fam(6, &[&[5], &[5], &[3]]);
        assert_eq!(brute_force_maximal(&f, P::F).unwrap(), sets(&[&[0, 1], &[2]]));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let f = fam(9, &[&[0, 1, 3], &[2, 1], &[4, 3, 5], &[6, 5, 1], &[8, 7]]);
        for p in [P::F, P::DBar(2), P::D(2), P::DBar(3)] {
            assert_eq!(
                brute_force_maximal_with(&f, p, Exec::Sequential).unwrap(),
                brute_force_maximal_with(&f, p, Exec::Parallel).unwrap()
            );
        }
    }

    #[test]
    fn guard_on_size() {
        let rows: Vec<Vec<u64>> = (0..13).map(|i| vec![2 * i]).collect();
        let f = Family::from_members(30, &rows).unwrap();
        assert!(matches!(brute_force_maximal(&f, P::F), Err(FipError::BoundExceeded(_))));
    }
}
