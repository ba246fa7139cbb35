//! Stage constructions that defeat opponent enumerations of maximal
//! subfamilies.
//!
//! Opponents are [`Strategy`] objects revealing a partial function `Φ_e`
//! one value per stage. The warm-up construction diagonalizes against each
//! `Φ_e` directly; the full construction works with bounded strings,
//! potential sets and traps so that every maximal subfamily with the `D̄_2`
//! property computes a witness function. Both runs emit a [`StageTrace`]
//! from which the family, and every audit in [`audit`], can be recomputed.

pub mod audit;
mod full;
mod strategy;
mod warmup;
mod world;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FipError, Result};
use crate::family::{Family, Meet};
use crate::trace::StageTrace;

pub use audit::{
    audit_full, audit_viability, audit_warmup, extract_witness_function, AuditReport, TraceModel, WitnessFunction,
};
pub use full::run_full;
pub use strategy::{parse_strategies, Strategy, StrategySpec, View};
pub use warmup::run_warmup;

/// Bounds of a finite run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub stages: u64,
    /// Substages run per stage; strategies beyond the given list are silent.
    pub width: usize,
    /// Longest bounded string considered.
    pub max_len: usize,
    /// Refuse to continue once a stage has more bounded strings than this.
    pub max_bounded: usize,
}

impl AdversaryConfig {
    pub fn new(stages: u64, width: usize) -> Self {
        AdversaryConfig {
            stages,
            width,
            max_len: 6,
            max_bounded: 200_000,
        }
    }
}

/// Summary of a run; the authoritative record is the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    /// Largest number mentioned; the family is decided up to here.
    pub mentioned: u64,
    pub potential_sets: usize,
    pub intersections: usize,
    /// Accepted values of each strategy, with the stage they converged.
    pub enumerations: Vec<Vec<(usize, u64)>>,
    pub withheld: Vec<usize>,
    pub progressive: Vec<Vec<u64>>,
    pub trap_redefinitions: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct AdversaryRun {
    pub family: Family,
    pub trace: StageTrace,
    pub stats: RunStats,
}

/// Whether a nonempty string is bounded by `s` in `family`.
///
/// Fresh elements always exceed the stage at which they are enumerated, so
/// every element `<= s - 1` of a recorded family was already present at
/// stage `s - 1`.
pub fn is_bounded(sigma: &[usize], s: u64, family: &Family) -> Result<bool> {
    if sigma.is_empty() {
        return Err(FipError::InvalidParameter("boundedness needs a nonempty string".into()));
    }
    if sigma.len() as u64 > s || sigma.iter().any(|&i| i as u64 > s) {
        return Ok(false);
    }
    if sigma.len() == 1 {
        return Ok(true);
    }
    for (k, &i) in sigma.iter().enumerate() {
        for &j in &sigma[k..] {
            match family.meet(&[i, j], s - 1)? {
                Meet::Witness(_) => {}
                Meet::Empty => return Ok(false),
                Meet::Undecided => {
                    return Err(FipError::Undecided(format!("meet of {i} and {j} below {}", s - 1)));
                }
            }
        }
    }
    Ok(true)
}

/// `i.j.k` rendering of a string, `-` for the empty one.
pub fn render_string(sigma: &[usize]) -> String {
    if sigma.is_empty() {
        return "-".into();
    }
    sigma.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
}

pub fn parse_string(text: &str) -> Result<Vec<usize>> {
    if text == "-" {
        return Ok(Vec::new());
    }
    text.split('.')
        .map(|t| {
            t.parse()
                .map_err(|_| FipError::CorruptTrace(format!("bad string entry `{t}` in `{text}`")))
        })
        .collect()
}

/// Count progressive stages per strategy.
pub fn progressive_counts(stats: &RunStats) -> BTreeMap<usize, usize> {
    stats.progressive.iter().enumerate().map(|(e, p)| (e, p.len())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::StageTrace;

    #[test]
    fn bounded_examples() {
        let f = Family::from_members(9, &[vec![0, 5], vec![2], vec![4, 5], vec![6]]).unwrap();
        assert!(is_bounded(&[3], 3, &f).unwrap());
        assert!(!is_bounded(&[0, 1], 9, &f).unwrap());
        assert!(is_bounded(&[0, 2], 6, &f).unwrap());
        assert!(!is_bounded(&[0, 2], 5, &f).unwrap());
        assert!(!is_bounded(&[0, 2, 1], 9, &f).unwrap());
        assert!(is_bounded(&[], 3, &f).is_err());
    }

    #[test]
    fn string_rendering() {
        assert_eq!(render_string(&[3, 10, 2]), "3.10.2");
        assert_eq!(parse_string("3.10.2").unwrap(), vec![3, 10, 2]);
        assert_eq!(parse_string(&render_string(&[])).unwrap(), Vec::<usize>::new());
    }

    fn greedy(d: u64) -> StrategySpec {
        StrategySpec::Greedy { delay: d }
    }

    #[test]
    fn no_strategies_leave_the_skeleton() {
        let run = run_full(&[], &AdversaryConfig::new(12, 0)).unwrap();
        assert_eq!(run.family.index_bound(), 12);
        let u = run.family.universe_bound();
        for i in 0..12 {
            let members: Vec<u64> = run.family.set(i).unwrap().members_upto(u).collect();
            let expected: Vec<u64> = Some(2 * i as u64).filter(|&m| m <= u).into_iter().collect();
            assert_eq!(members, expected);
        }
        assert!(audit_full(&run.trace).unwrap().passed());
    }

    #[test]
    fn silent_strategy_never_progresses() {
        let run = run_full(&[StrategySpec::Silent], &AdversaryConfig::new(60, 1)).unwrap();
        assert!(run.stats.progressive[0].is_empty());
        assert_eq!(run.trace.of_kind(crate::trace::EventKind::Progressive).count(), 0);
        assert!(run.stats.potential_sets > 50);
        assert!(audit_full(&run.trace).unwrap().passed());
    }

    #[test]
    fn replay_matches_the_constructed_family() {
        let run = run_full(&[greedy(1), greedy(0)], &AdversaryConfig::new(80, 2)).unwrap();
        let text = run.trace.render(crate::trace::TraceFormat::Text);
        let parsed = StageTrace::parse(&text).unwrap();
        assert_eq!(crate::trace::replay(&parsed).unwrap().family, run.family);
        let report = audit_full(&parsed).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn interleaved_strategies_are_audited_separately() {
        let run = run_full(&[greedy(0), StrategySpec::Chaser { delay: 2 }], &AdversaryConfig::new(120, 2)).unwrap();
        assert_eq!(run.stats.enumerations.len(), 2);
        assert!(!run.stats.enumerations[0].is_empty() && !run.stats.enumerations[1].is_empty());
        assert!(run.stats.trap_redefinitions.iter().all(|&n| n <= 1));
        assert!(audit_full(&run.trace).unwrap().passed());
    }

    #[test]
    fn bounded_agrees_with_the_trace_model() {
        let run = run_full(&[greedy(0)], &AdversaryConfig::new(150, 2)).unwrap();
        let model = TraceModel::from_trace(&run.trace).unwrap();
        let mut rng = crate::gen::rng(11);
        use rand::Rng;
        let edges: Vec<(usize, usize)> = run
            .trace
            .of_kind(crate::trace::EventKind::Intersect)
            .map(|ev| (ev.arg_usize("a").unwrap(), ev.arg_usize("b").unwrap()))
            .collect();
        for _ in 0..20 {
            let (a, b) = edges[rng.gen_range(0..edges.len())];
            let s = rng.gen_range(1..150);
            for sigma in [vec![a, b], vec![b, a], vec![a], vec![a, b, a]] {
                assert_eq!(model.is_bounded(&sigma, s), is_bounded(&sigma, s, &run.family).unwrap(), "{sigma:?} at {s}");
            }
        }
    }

    #[test]
    fn witness_function_starts_at_twice_the_first_value() {
        let run = run_full(&[greedy(0)], &AdversaryConfig::new(150, 2)).unwrap();
        let model = TraceModel::from_trace(&run.trace).unwrap();
        let j: Vec<usize> = run.stats.enumerations[0].iter().map(|&(v, _)| v).collect();
        let wf = extract_witness_function(&j, &model, 4).unwrap();
        assert_eq!(wf.f[0], 2 * j[0] as u64);
        assert_eq!(wf.chain[0], vec![j[0]]);
        assert!(wf.f.windows(2).all(|w| w[0] <= w[1] || w[0] == 2 * j[0] as u64));
        let short = extract_witness_function(&j[..1], &model, 4).unwrap();
        assert!(short.partial);
        assert_eq!(short.f.len(), 1);
    }

    #[test]
    fn warmup_against_greedy_keeps_a_set_off_the_trap() {
        let run = run_warmup(&[greedy(0), greedy(2)], &AdversaryConfig::new(100, 2)).unwrap();
        assert!(run.stats.progressive[0].len() >= 3, "{:?}", run.stats.progressive);
        let report = audit_warmup(&run.trace).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(crate::trace::replay(&run.trace).unwrap().family, run.family);
    }

    #[test]
    fn warmup_against_silence_touches_nothing() {
        let run = run_warmup(&[StrategySpec::Silent], &AdversaryConfig::new(30, 1)).unwrap();
        assert_eq!(run.stats.potential_sets, 0);
        assert_eq!(run.stats.intersections, 0);
    }

    #[test]
    #[ignore = "timing probe"]
    fn suite_probe() {
        for spec in StrategySpec::suite() {
            let t = std::time::Instant::now();
            let run = run_full(std::slice::from_ref(&spec), &AdversaryConfig::new(2000, 3)).unwrap();
            let report = audit_full(&run.trace).unwrap();
            let model = TraceModel::from_trace(&run.trace).unwrap();
            let j: Vec<usize> = run.stats.enumerations[0].iter().map(|&(v, _)| v).collect();
            let wf = if j.is_empty() { None } else { Some(extract_witness_function(&j, &model, 4).unwrap()) };
            let via = wf.as_ref().map(|w| audit_viability(&w.chain, 0, &model));
            println!(
                "{spec}: {:?} mentioned={} pots={} edges={} enum={} withheld={:?} prog={:?} audit={} wf={:?} via={:?}",
                t.elapsed(),
                run.stats.mentioned,
                run.stats.potential_sets,
                run.stats.intersections,
                j.len(),
                run.stats.withheld,
                run.stats.progressive[0].len(),
                report.violation_count(),
                wf.map(|w| (w.f, w.chain, w.partial)),
                via
            );
        }
    }
}
