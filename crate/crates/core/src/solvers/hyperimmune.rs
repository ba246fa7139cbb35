//! Domination-guided solver.
//!
//! `g(s)` bounds the least witnesses of every meeting subfamily of
//! `A_0, ..., A_s`. A function that escapes `g` lets the solver find each of
//! those witnesses by bounded search, which is all the construction needs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, IndexMap, IntersectionProperty, Meet, WitnessCertificate};
use crate::property::{is_maximal, MaximalityVerdict};
use crate::trace::{EventKind, StageTrace};

/// A total function table on `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominationOracle {
    values: Vec<u64>,
}

impl DominationOracle {
    pub fn new(values: Vec<u64>) -> Self {
        DominationOracle { values }
    }

    pub fn constant(c: u64, len: usize) -> Self {
        DominationOracle::new(vec![c; len])
    }

    /// `s ↦ g(s) + offset` for `s < len`.
    pub fn from_g(a: &Family, len: usize, offset: u64) -> Result<Self> {
        let values = (0..len as u64)
            .map(|s| compute_g(a, s).map(|g| g + offset))
            .collect::<Result<_>>()?;
        Ok(DominationOracle::new(values))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn at(&self, s: usize) -> Result<u64> {
        self.values.get(s).copied().ok_or_else(|| {
            FipError::InvalidParameter(format!("oracle defined on 0..{}, asked at {s}", self.len()))
        })
    }

    pub fn dominates(&self, other: &DominationOracle) -> bool {
        self.len() >= other.len() && other.values.iter().zip(&self.values).all(|(o, v)| v >= o)
    }
}

/// Least `n` bounding a witness for every meeting `F ⊆ {0, ..., s}`.
///
/// Indices above `I - 1` are clamped away. On a fully decided family the
/// searches are exact; otherwise an undecided meet is an error.
pub fn compute_g(a: &Family, s: u64) -> Result<u64> {
    let top = (s as usize).min(a.index_bound().saturating_sub(1));
    if a.index_bound() == 0 {
        return Ok(0);
    }
    let mut best = 0;
    let mut stack: Vec<Vec<usize>> = (0..=top).map(|i| vec![i]).collect();
    while let Some(f) = stack.pop() {
        match a.meet(&f, a.universe_bound())? {
            Meet::Empty => continue,
            Meet::Undecided => {
                return Err(FipError::Undecided(format!("g({s}) needs the meet of {f:?}")));
            }
            Meet::Witness(x) => {
                best = best.max(x);
                let last = *f.last().expect("nonempty");
                for j in last + 1..=top {
                    let mut g = f.clone();
                    g.push(j);
                    stack.push(g);
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperimmuneOutcome {
    /// `J(0), ..., J(steps)`.
    pub index_map: IndexMap,
    /// Certificate for the range of each prefix `J(0..=s)`.
    pub certificates: Vec<WitnessCertificate>,
    pub verdict: MaximalityVerdict,
    /// The family is decided on its whole universe, so every bounded search was exact.
    pub truncation_exact: bool,
    #[serde(skip)]
    pub trace: StageTrace,
}

impl HyperimmuneOutcome {
    pub fn range(&self) -> BTreeSet<usize> {
        self.index_map.range()
    }
}

/// Run `steps` stages of the construction guided by `f`.
pub fn solve_hyperimmune(a: &Family, f: &DominationOracle, steps: usize) -> Result<HyperimmuneOutcome> {
    if a.index_bound() == 0 || a.set(0)?.least_member().is_none() {
        return Err(FipError::InvalidParameter("the construction starts from a nonempty A_0".into()));
    }
    if f.len() < steps {
        return Err(FipError::InvalidParameter(format!(
            "oracle covers {} stages, {steps} requested",
            f.len()
        )));
    }
    let u = a.universe_bound();
    let mut trace = StageTrace::new("hyperimmune");
    let mut j = vec![0usize];
    let mut range: BTreeSet<usize> = [0].into_iter().collect();
    let w0 = a.witness(&[0])?.expect("A_0 is nonempty");
    let mut certificates = vec![WitnessCertificate::new([0], w0)];
    trace.push(0, None, EventKind::Define, vec![("j", "0".into()), ("witness", w0.to_string())]);

    for s in 0..steps {
        let bound = f.at(s)?.min(u);
        let top = s.min(a.index_bound() - 1);
        let current: Vec<usize> = range.iter().copied().collect();
        let mut next = None;
        for i in (0..=top).filter(|i| !range.contains(i)) {
            let mut with_i = current.clone();
            with_i.push(i);
            match a.meet(&with_i, bound)? {
                Meet::Witness(x) => {
                    next = Some((i, x));
                    break;
                }
                Meet::Empty => {}
                Meet::Undecided => {
                    return Err(FipError::Undecided(format!("stage {s}: meet of {with_i:?} below {bound}")));
                }
            }
        }
        let stage = s as u64 + 1;
        match next {
            Some((i, x)) => {
                j.push(i);
                range.insert(i);
                certificates.push(WitnessCertificate::new(range.iter().copied(), x));
                trace.push(stage, None, EventKind::Define, vec![("j", i.to_string()), ("witness", x.to_string())]);
            }
            None => {
                j.push(0);
                let last = certificates.last().expect("prefix certificate").clone();
                certificates.push(last);
                trace.push(stage, None, EventKind::Hold, vec![("j", "0".into()), ("bound", bound.to_string())]);
            }
        }
    }

    let verdict = is_maximal(a, &range, IntersectionProperty::F)?;
    trace.push(
        steps as u64 + 1,
        None,
        EventKind::Finish,
        vec![("maximal", verdict.maximal.to_string())],
    );
    Ok(HyperimmuneOutcome {
        index_map: IndexMap(j),
        certificates,
        verdict,
        truncation_exact: a.is_fully_decided(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(u: u64, m: &[&[u64]]) -> Family {
        let v: Vec<Vec<u64>> = m.iter().map(|s| s.to_vec()).collect();
        Family::from_members(u, &v).unwrap()
    }

    #[test]
    fn g_takes_the_pair_witness() {
        let f = fam(9, &[&[0, 9], &[2, 9]]);
        assert_eq!(compute_g(&f, 1).unwrap(), 9);
        assert_eq!(compute_g(&f, 0).unwrap(), 0);
    }

    #[test]
    fn g_on_disjoint_family_is_max_singleton() {
        let f = fam(8, &[&[0], &[2], &[4], &[6]]);
        for s in 0..6 {
            assert_eq!(compute_g(&f, s).unwrap(), 2 * s.min(3));
        }
    }

    #[test]
    fn g_with_common_element() {
        let f = fam(6, &[&[0, 1], &[1, 2], &[1, 4]]);
        assert_eq!(compute_g(&f, 0).unwrap(), 0);
        assert_eq!(compute_g(&f, 1).unwrap(), 1);
        assert_eq!(compute_g(&f, 2).unwrap(), 1);
    }

    #[test]
    fn escaping_g_is_maximal() {
        let f = fam(9, &[&[0, 1, 3], &[2, 1], &[4, 3, 5], &[6, 5, 1], &[8, 7]]);
        let oracle = DominationOracle::from_g(&f, 12, 1).unwrap();
        let out = solve_hyperimmune(&f, &oracle, 12).unwrap();
        assert!(out.verdict.maximal);
        assert!(out.truncation_exact);
        for (k, &v) in out.index_map.entries().iter().enumerate() {
            assert!(v <= k);
        }
        for c in &out.certificates {
            assert!(c.verify(&f));
        }
    }

    #[test]
    fn zero_oracle_stays_at_zero() {
        let f = fam(5, &[&[0, 3], &[2, 3], &[4, 5]]);
        let out = solve_hyperimmune(&f, &DominationOracle::constant(0, 6), 6).unwrap();
        assert_eq!(out.index_map, IndexMap(vec![0; 7]));
        assert!(!out.verdict.maximal);
        assert_eq!(out.verdict.extending, Some(1));
    }

    #[test]
    fn common_element_in_order() {
        let f = fam(6, &[&[0, 1], &[1, 2], &[1, 4]]);
        let out = solve_hyperimmune(&f, &DominationOracle::constant(1, 3), 3).unwrap();
        assert_eq!(out.index_map, IndexMap(vec![0, 0, 1, 2]));
        assert!(out.verdict.maximal);
    }

    #[test]
    fn only_a0_nonempty() {
        let f = fam(4, &[&[0], &[], &[]]);
        let out = solve_hyperimmune(&f, &DominationOracle::constant(9, 4), 4).unwrap();
        assert_eq!(out.range(), [0].into_iter().collect());
        assert!(out.verdict.maximal);
    }
}
