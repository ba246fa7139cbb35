//! Forcing-style solver: grow a condition string one requirement at a time.
//!
//! A condition is a string whose last entry bounds a common witness of the
//! sets named by the earlier entries. Odd-numbered steps of the classical
//! construction ask a jump question; here they go through a pluggable
//! [`JumpHook`] that by default does nothing.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, IndexMap, Meet, WitnessCertificate};

/// A string `σ` over naturals: `body` names sets, `bound` is the last entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForcingCondition {
    body: Vec<usize>,
    bound: u64,
}

impl ForcingCondition {
    pub fn new(body: Vec<usize>, bound: u64) -> Self {
        ForcingCondition { body, bound }
    }

    pub fn body(&self) -> &[usize] {
        &self.body
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Some number `<= bound` lies in every set named by the body.
    pub fn is_valid(&self, family: &Family) -> Result<bool> {
        match family.meet(&self.body, self.bound.min(family.universe_bound()))? {
            Meet::Witness(_) => Ok(true),
            Meet::Empty => Ok(false),
            Meet::Undecided => Err(FipError::Undecided(format!("condition {self}"))),
        }
    }

    /// `self <= other` in the forcing order: our body extends theirs.
    pub fn extends(&self, other: &ForcingCondition) -> bool {
        self.body.starts_with(&other.body)
    }
}

impl fmt::Display for ForcingCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .body
            .iter()
            .map(|i| i.to_string())
            .chain(std::iter::once(self.bound.to_string()))
            .collect();
        write!(f, "<{}>", parts.join(","))
    }
}

/// Stand-in for the jump-deciding steps. Returning `Some` replaces the
/// current condition; the replacement must extend it.
pub trait JumpHook {
    fn step(&mut self, _e: usize, _current: &ForcingCondition, _family: &Family) -> Option<ForcingCondition> {
        None
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoJump;

impl JumpHook for NoJump {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyOutcome {
    pub index_map: IndexMap,
    /// `σ_0` followed by every condition the run moved to.
    pub conditions: Vec<ForcingCondition>,
    pub certificate: WitnessCertificate,
    /// Requirements the witness budget could not settle either way.
    pub unsettled: Vec<usize>,
    pub partial: bool,
}

/// Greedy forcing run with the default no-op jump hook.
///
/// `budget` caps the witness search; requirements whose answer depends on
/// witnesses above the budget are reported as unsettled.
pub fn solve_greedy(a: &Family, requirements: &[usize], budget: u64) -> Result<GreedyOutcome> {
    solve_greedy_with(a, requirements, budget, &mut NoJump)
}

pub fn solve_greedy_with(
    a: &Family,
    requirements: &[usize],
    budget: u64,
    hook: &mut dyn JumpHook,
) -> Result<GreedyOutcome> {
    let (start, w) = a.nontrivial_witness().ok_or(FipError::TrivialFamily)?;
    for &e in requirements {
        a.check_index(e)?;
    }
    let limit = budget.min(a.universe_bound());
    let mut sigma = ForcingCondition::new(vec![start], w);
    let mut conditions = vec![sigma.clone()];
    let mut unsettled = Vec::new();

    for &e in requirements {
        if let Some(next) = hook.step(e, &sigma, a) {
            if !next.extends(&sigma) || !next.is_valid(a)? {
                return Err(FipError::Contract(format!(
                    "jump hook returned {next}, which is not a condition below {sigma}"
                )));
            }
            sigma = next;
            conditions.push(sigma.clone());
        }
        if sigma.body.contains(&e) {
            continue;
        }
        let mut body = sigma.body.clone();
        body.push(e);
        match a.meet(&body, limit)? {
            Meet::Witness(x) => {
                sigma = ForcingCondition::new(body, x);
                conditions.push(sigma.clone());
            }
            Meet::Empty if limit == a.universe_bound() => {}
            Meet::Empty | Meet::Undecided => {
                // Settled only if the full truncation agrees that nothing exists.
                if a.meet(&body, a.universe_bound())? != Meet::Empty {
                    unsettled.push(e);
                }
            }
        }
    }

    let certificate = WitnessCertificate::new(sigma.body.iter().copied(), sigma.bound);
    Ok(GreedyOutcome {
        index_map: IndexMap(sigma.body.clone()),
        conditions,
        certificate,
        partial: !unsettled.is_empty(),
        unsettled,
    })
}

/// Chosen index set of a greedy run.
pub fn chosen(outcome: &GreedyOutcome) -> BTreeSet<usize> {
    outcome.index_map.range()
}
