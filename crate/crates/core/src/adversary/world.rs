use std::collections::HashMap;

use crate::error::Result;
use crate::family::{Family, StagedSet};
use crate::trace::{EventKind, StageTrace};

/// Sets under construction: markers are implicit, odd members are kept per
/// set, and every intersection is recorded with its (fresh) witness.
#[derive(Debug, Clone)]
pub(crate) struct World {
    odd: Vec<Vec<u64>>,
    /// `(min, max)` → the element that made them meet first.
    pairs: HashMap<(usize, usize), u64>,
    adjacency: HashMap<usize, Vec<(usize, u64)>>,
    /// `(witness, a, b)` in increasing witness order.
    edges: Vec<(u64, usize, usize)>,
    mentioned: u64,
    marked: usize,
    last_total: u64,
    pub trace: StageTrace,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl World {
    pub fn new(source: &str) -> Self {
        World {
            odd: Vec::new(),
            pairs: HashMap::new(),
            adjacency: HashMap::new(),
            edges: Vec::new(),
            mentioned: 0,
            marked: 0,
            last_total: 0,
            trace: StageTrace::new(source),
        }
    }

    pub fn mentioned(&self) -> u64 {
        self.mentioned
    }

    pub fn mention(&mut self, x: u64) {
        self.mentioned = self.mentioned.max(x);
    }

    pub fn intersections(&self) -> usize {
        self.edges.len()
    }

    /// Larger than `s` and every number mentioned so far.
    pub fn fresh(&mut self, s: u64) -> u64 {
        let x = self.mentioned.max(s) + 1;
        self.mentioned = x;
        x
    }

    fn fresh_odd(&mut self, s: u64) -> u64 {
        let mut x = self.mentioned.max(s) + 1;
        if x.is_multiple_of(2) {
            x += 1;
        }
        self.mentioned = x;
        x
    }

    pub fn meets(&self, a: usize, b: usize) -> bool {
        a == b || self.pairs.contains_key(&key(a, b))
    }

    /// Some number `<= bound` lies in both sets.
    pub fn meets_below(&self, a: usize, b: usize, bound: u64) -> bool {
        if a == b {
            return 2 * a as u64 <= bound || self.odd.get(a).and_then(|v| v.first()).is_some_and(|&x| x <= bound);
        }
        self.pairs.get(&key(a, b)).is_some_and(|&x| x <= bound)
    }

    /// Sets meeting `a` with a witness `<= bound`, in increasing index order.
    pub fn neighbors_below(&self, a: usize, bound: u64) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .adjacency
            .get(&a)
            .map(|v| v.iter().take_while(|(_, w)| *w <= bound).map(|(j, _)| *j).collect())
            .unwrap_or_default();
        out.sort_unstable();
        out
    }

    /// Intersections whose witness is `<= bound`.
    pub fn edges_below(&self, bound: u64) -> &[(u64, usize, usize)] {
        let end = self.edges.partition_point(|(w, _, _)| *w <= bound);
        &self.edges[..end]
    }

    /// Make `a` and `b` meet with a fresh odd number unless they already do.
    pub fn intersect(&mut self, a: usize, b: usize, s: u64, e: usize, step: u8) -> bool {
        if self.meets(a, b) {
            return false;
        }
        let x = self.fresh_odd(s);
        for i in [a, b] {
            if self.odd.len() <= i {
                self.odd.resize(i + 1, Vec::new());
            }
            self.odd[i].push(x);
        }
        self.pairs.insert(key(a, b), x);
        self.adjacency.entry(a).or_default().push((b, x));
        self.adjacency.entry(b).or_default().push((a, x));
        self.edges.push((x, key(a, b).0, key(a, b).1));
        self.trace.push(
            s,
            Some(e as u64),
            EventKind::Intersect,
            vec![
                ("a", a.to_string()),
                ("b", b.to_string()),
                ("x", x.to_string()),
                ("step", step.to_string()),
                ("e", e.to_string()),
            ],
        );
        true
    }

    /// Mark every new index and decide all sets through the largest number mentioned.
    pub fn totalize(&mut self, s: u64, substage: Option<u64>) {
        let through = self.mentioned.max(s);
        self.mentioned = through;
        let count = through as usize + 1;
        while self.marked < count {
            self.trace.push(s, substage, EventKind::Mark, vec![("set", self.marked.to_string())]);
            self.marked += 1;
        }
        self.trace.push(
            s,
            substage,
            EventKind::Totalize,
            vec![("through", through.to_string()), ("sets", count.to_string())],
        );
        self.last_total = s;
    }

    /// The decided family, built from the internal tables.
    pub fn finish(&mut self, stage: u64) -> Result<Family> {
        if self.marked <= self.mentioned as usize {
            self.totalize(stage, None);
        }
        let u = self.mentioned;
        let count = self.marked;
        self.trace.push(stage, None, EventKind::Finish, vec![("I", count.to_string()), ("U", u.to_string())]);
        let mut sets = Vec::with_capacity(count);
        for i in 0..count {
            let mut s = StagedSet::new(i);
            s.enumerate(2 * i as u64)?;
            for &x in self.odd.get(i).map(Vec::as_slice).unwrap_or(&[]) {
                s.enumerate(x)?;
            }
            s.decide_through(u);
            s.advance_stage(self.last_total);
            sets.push(s);
        }
        Family::new(sets, u)
    }
}
