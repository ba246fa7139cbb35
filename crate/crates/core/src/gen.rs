//! Seeded generators for families, range tables and enumerations.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::family::Family;
use crate::solvers::CeEnumeration;

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A_i = {2i}` plus each odd `x <= U` independently with probability `density`.
pub fn marker_family(rng: &mut GenRng, index_bound: usize, universe_bound: u64, density: f64) -> Result<Family> {
    let u = universe_bound.max(2 * index_bound.saturating_sub(1) as u64);
    let rows: Vec<Vec<u64>> = (0..index_bound)
        .map(|i| {
            let mut row: Vec<u64> = (1..=u).step_by(2).filter(|_| rng.gen_bool(density)).collect();
            row.push(2 * i as u64);
            row.sort_unstable();
            row
        })
        .collect();
    Family::from_members(u, &rows)
}

/// Marker family whose odd elements each land in a random block of sets,
/// so that larger common intersections are likely.
pub fn clustered_family(rng: &mut GenRng, index_bound: usize, universe_bound: u64) -> Result<Family> {
    let u = universe_bound.max(2 * index_bound.saturating_sub(1) as u64);
    let mut rows: Vec<Vec<u64>> = (0..index_bound).map(|i| vec![2 * i as u64]).collect();
    let mut idx: Vec<usize> = (0..index_bound).collect();
    for x in (1..=u).step_by(2) {
        idx.shuffle(rng);
        let k = rng.gen_range(0..=index_bound);
        for &i in &idx[..k] {
            rows[i].push(x);
        }
    }
    for row in &mut rows {
        row.sort_unstable();
    }
    Family::from_members(u, &rows)
}

pub fn range_table(rng: &mut GenRng, len: usize, index_bound: usize) -> Vec<usize> {
    (0..len).map(|_| rng.gen_range(0..index_bound)).collect()
}

/// Enumeration with `1..=max_new` fresh elements below `ceiling` per stage
/// after the first (falling back to the next unused number when crowded).
pub fn ce_enumeration(rng: &mut GenRng, snapshots: usize, max_new: usize, ceiling: u64) -> CeEnumeration {
    let mut seen = BTreeSet::new();
    let mut increments = Vec::with_capacity(snapshots);
    for s in 0..snapshots {
        let mut inc = BTreeSet::new();
        if s > 0 {
            for _ in 0..rng.gen_range(1..=max_new.max(1)) {
                let mut x = rng.gen_range(0..ceiling.max(1));
                while seen.contains(&x) || inc.contains(&x) {
                    x += 1;
                }
                inc.insert(x);
            }
        }
        seen.extend(inc.iter().copied());
        increments.push(inc);
    }
    CeEnumeration::from_increments(increments).expect("fresh by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible() {
        let a = marker_family(&mut rng(7), 5, 20, 0.4).unwrap();
        let b = marker_family(&mut rng(7), 5, 20, 0.4).unwrap();
        assert_eq!(a, b);
        a.check_marker_convention().unwrap();
        clustered_family(&mut rng(3), 6, 15).unwrap().check_marker_convention().unwrap();
    }

    #[test]
    fn enumerations_are_fresh() {
        let w = ce_enumeration(&mut rng(1), 30, 3, 20);
        assert_eq!(w.len(), 30);
        assert!(CeEnumeration::from_increments(w.increments().to_vec()).is_ok());
    }
}
