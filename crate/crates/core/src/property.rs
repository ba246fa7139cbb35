//! Distinctness, intersection-property checks, maximality, and marker decoding.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, IntersectionProperty, Membership, StagedSet, WitnessCertificate};

/// The bounds a verdict is relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub index_bound: usize,
    pub universe_bound: u64,
}

impl Truncation {
    pub fn of(family: &Family) -> Self {
        Truncation {
            index_bound: family.index_bound(),
            universe_bound: family.universe_bound(),
        }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I={} U={}", self.index_bound, self.universe_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub indices: BTreeSet<usize>,
    /// For `D_n` failures: an element common to the offending sets.
    pub witness: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub truncation: Truncation,
    pub property: IntersectionProperty,
    pub holds: bool,
    /// On success for `Dbar_n`/`F`: every checked subset is covered by one of
    /// these (a certificate covers all subsets of its index set).
    pub certificates: Vec<WitnessCertificate>,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalityVerdict {
    pub truncation: Truncation,
    pub property: IntersectionProperty,
    pub maximal: bool,
    /// Least index whose set is new to the chosen subfamily and can be added.
    pub extending: Option<usize>,
}

/// Whether `A_i` and `A_j` differ extensionally on the decided universe.
pub fn distinct(family: &Family, i: usize, j: usize) -> Result<bool> {
    let a = family.set(i)?;
    let b = family.set(j)?;
    if i == j {
        return Ok(false);
    }
    let mi = 2 * i as u64;
    let mj = 2 * j as u64;
    let by_marker = |x: u64| {
        matches!(
            (a.membership(x), b.membership(x)),
            (Membership::In, Membership::Out) | (Membership::Out, Membership::In)
        )
    };
    if by_marker(mi) || by_marker(mj) {
        return Ok(true);
    }
    let mut undecided = false;
    for x in 0..=family.universe_bound() {
        match (a.membership(x), b.membership(x)) {
            (Membership::In, Membership::Out) | (Membership::Out, Membership::In) => {
                return Ok(true)
            }
            (Membership::Undecided, _) | (_, Membership::Undecided) => undecided = true,
            _ => {}
        }
    }
    if undecided {
        return Err(FipError::Undecided(format!(
            "sets {i} and {j} agree where decided but are not fully decided"
        )));
    }
    Ok(false)
}

/// One representative (the least index) per extensional class among `indices`.
pub fn distinct_representatives(family: &Family, indices: &BTreeSet<usize>) -> Result<Vec<usize>> {
    let mut reps: Vec<usize> = Vec::new();
    for &i in indices {
        family.check_index(i)?;
        let mut fresh = true;
        for &r in &reps {
            if !distinct(family, r, i)? {
                fresh = false;
                break;
            }
        }
        if fresh {
            reps.push(i);
        }
    }
    Ok(reps)
}

/// Visit every `k`-subset of `items` in lexicographic order of positions.
/// Stops early when `visit` returns `false`.
pub(crate) fn for_each_combination<F>(items: &[usize], k: usize, mut visit: F) -> Result<bool>
where
    F: FnMut(&[usize]) -> Result<bool>,
{
    let n = items.len();
    if k > n {
        return Ok(true);
    }
    let mut pos: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &p) in buf.iter_mut().zip(&pos) {
            *b = items[p];
        }
        if !visit(&buf)? {
            return Ok(false);
        }
        let Some(t) = (0..k).rev().find(|&t| pos[t] < t + n - k) else {
            return Ok(true);
        };
        pos[t] += 1;
        for u in t + 1..k {
            pos[u] = pos[u - 1] + 1;
        }
    }
}

/// Check `prop` on the subfamily selected by `chosen`.
///
/// Undecided intersections surface as [`FipError::Undecided`]; the checker
/// never defaults them.
pub fn check_property_on(
    family: &Family,
    chosen: &BTreeSet<usize>,
    prop: IntersectionProperty,
) -> Result<PropertyVerdict> {
    prop.validate()?;
    let reps = distinct_representatives(family, chosen)?;
    let mut verdict = PropertyVerdict {
        truncation: Truncation::of(family),
        property: prop,
        holds: true,
        certificates: Vec::new(),
        counterexample: None,
    };
    match prop {
        IntersectionProperty::D(n) => {
            for_each_combination(&reps, n, |g| {
                if let Some(x) = family.witness(g)? {
                    verdict.holds = false;
                    verdict.counterexample = Some(Counterexample {
                        indices: g.iter().copied().collect(),
                        witness: Some(x),
                    });
                    return Ok(false);
                }
                Ok(true)
            })?;
        }
        IntersectionProperty::DBar(n) => {
            for_each_combination(&reps, n, |g| {
                match family.witness(g)? {
                    Some(x) => verdict
                        .certificates
                        .push(WitnessCertificate::new(g.iter().copied(), x)),
                    None => {
                        verdict.holds = false;
                        verdict.certificates.clear();
                        verdict.counterexample = Some(Counterexample {
                            indices: g.iter().copied().collect(),
                            witness: None,
                        });
                        return Ok(false);
                    }
                }
                Ok(true)
            })?;
        }
        IntersectionProperty::F => {
            if reps.len() >= 2 {
                // A common element of all representatives certifies every subset.
                match family.witness(&reps)? {
                    Some(x) => verdict
                        .certificates
                        .push(WitnessCertificate::new(reps.iter().copied(), x)),
                    None => {
                        verdict.holds = false;
                        verdict.counterexample = Some(Counterexample {
                            indices: smallest_empty_subset(family, &reps)?,
                            witness: None,
                        });
                    }
                }
            }
        }
    }
    Ok(verdict)
}

fn smallest_empty_subset(family: &Family, reps: &[usize]) -> Result<BTreeSet<usize>> {
    const SEARCH_LIMIT: usize = 16;
    if reps.len() <= SEARCH_LIMIT {
        for k in 2..=reps.len() {
            let mut found = None;
            for_each_combination(reps, k, |g| {
                if family.witness(g)?.is_none() {
                    found = Some(g.iter().copied().collect());
                    return Ok(false);
                }
                Ok(true)
            })?;
            if let Some(f) = found {
                return Ok(f);
            }
        }
    }
    Ok(reps.iter().copied().collect())
}

pub fn check_property(family: &Family, prop: IntersectionProperty) -> Result<PropertyVerdict> {
    let all: BTreeSet<usize> = (0..family.index_bound()).collect();
    check_property_on(family, &all, prop)
}

/// Whether the `chosen` subfamily is maximal for `prop` on the truncation.
///
/// All three properties are closed under subfamilies, so it suffices to try
/// each single new set.
pub fn is_maximal(
    family: &Family,
    chosen: &BTreeSet<usize>,
    prop: IntersectionProperty,
) -> Result<MaximalityVerdict> {
    let base = check_property_on(family, chosen, prop)?;
    if !base.holds {
        return Err(FipError::ChosenFailsProperty(prop.to_string()));
    }
    let mut verdict = MaximalityVerdict {
        truncation: Truncation::of(family),
        property: prop,
        maximal: true,
        extending: None,
    };
    'candidates: for i in 0..family.index_bound() {
        for &c in chosen {
            if !distinct(family, c, i)? {
                continue 'candidates;
            }
        }
        let mut ext = chosen.clone();
        ext.insert(i);
        if check_property_on(family, &ext, prop)?.holds {
            verdict.maximal = false;
            verdict.extending = Some(i);
            break;
        }
    }
    Ok(verdict)
}

/// Recover `j` from a set obeying the marker convention (its unique even member is `2j`).
pub fn subfamily_index_of(b: &StagedSet) -> Result<usize> {
    let mut evens = b.decided_in().filter(|x| x % 2 == 0);
    let Some(first) = evens.next() else {
        return Err(FipError::MarkerUndecided);
    };
    if let Some(second) = evens.next() {
        return Err(FipError::MalformedSet {
            index: b.index(),
            reason: format!("two even members {first} and {second}"),
        });
    }
    Ok((first / 2) as usize)
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
    fn combinations_enumerate_all() {
        let mut seen = Vec::new();
        for_each_combination(&[1, 2, 3, 4], 2, |g| {
            seen.push(g.to_vec());
            Ok(true)
        })
        .unwrap();
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![1, 2]);
        assert_eq!(seen[5], vec![3, 4]);
        let mut count = 0;
        for_each_combination(&[1, 2], 3, |_| {
            count += 1;
            Ok(true)
        })
        .unwrap();
        assert_eq!(count, 0);
    }

    #[test]
    fn distinct_examples() {
        let f = fam(6, &[&[0, 1], &[2, 1], &[4]]);
        assert!(distinct(&f, 0, 1).unwrap());
        assert!(!distinct(&f, 2, 2).unwrap());
        let same = fam(6, &[&[5], &[5]]);
        assert!(!distinct(&same, 0, 1).unwrap());
        assert!(distinct(&f, 0, 9).is_err());
    }

    #[test]
    fn disjoint_singletons_have_d2() {
        let f = fam(4, &[&[0], &[2], &[4]]);
        assert!(check_property(&f, P::D(2)).unwrap().holds);
        assert!(!check_property(&f, P::DBar(2)).unwrap().holds);
    }

    #[test]
    fn common_element_gives_f() {
        let f = fam(4, &[&[0, 1], &[2, 1], &[4, 1]]);
        let v = check_property(&f, P::F).unwrap();
        assert!(v.holds);
        assert_eq!(v.certificates, vec![WitnessCertificate::new([0, 1, 2], 1)]);
        assert!(v.certificates[0].verify(&f));
    }

    #[test]
    fn f_failure_reports_smallest_empty_subset() {
        let f = fam(6, &[&[0, 1], &[2, 1, 3], &[4, 3]]);
        let v = check_property(&f, P::F).unwrap();
        assert!(!v.holds);
        assert_eq!(v.counterexample.unwrap().indices, set(&[0, 2]));
    }

    #[test]
    fn maximality_examples() {
        let f = fam(4, &[&[0, 1], &[2, 1], &[4, 3]]);
        let v = is_maximal(&f, &set(&[0, 1]), P::DBar(2)).unwrap();
        assert!(v.maximal);
        let g = fam(4, &[&[0, 1], &[2, 1], &[4, 1]]);
        assert!(is_maximal(&g, &set(&[0, 1, 2]), P::F).unwrap().maximal);
        let v = is_maximal(&g, &set(&[0]), P::F).unwrap();
        assert_eq!(v.extending, Some(1));
    }

    #[test]
    fn maximality_rejects_failing_chosen() {
        let f = fam(4, &[&[0], &[2]]);
        assert!(matches!(
            is_maximal(&f, &set(&[0, 1]), P::F),
            Err(FipError::ChosenFailsProperty(_))
        ));
    }

    #[test]
    fn duplicates_are_not_extensions() {
        let f = fam(6, &[&[5], &[5], &[3]]);
        let v = is_maximal(&f, &set(&[0]), P::F).unwrap();
        assert!(v.maximal, "index 1 is the same set as index 0");
    }

    #[test]
    fn undecided_is_loud() {
        let mut a = StagedSet::new(0);
        a.enumerate(0).unwrap();
        let mut b = StagedSet::new(1);
        b.enumerate(2).unwrap();
        let f = Family::new(vec![a, b], 4).unwrap();
        assert!(matches!(check_property(&f, P::DBar(2)), Err(FipError::Undecided(_))));
    }

    #[test]
    fn marker_recovery() {
        let f = fam(8, &[&[6, 1, 3], &[0], &[1, 3, 5], &[0, 2]]);
        assert_eq!(subfamily_index_of(&f.sets()[0]).unwrap(), 3);
        assert_eq!(subfamily_index_of(&f.sets()[1]).unwrap(), 0);
        assert_eq!(subfamily_index_of(&f.sets()[2]), Err(FipError::MarkerUndecided));
        assert!(matches!(
            subfamily_index_of(&f.sets()[3]),
            Err(FipError::MalformedSet { .. })
        ));
    }
}
