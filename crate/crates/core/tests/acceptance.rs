//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;

use fip_core::adversary::{
    audit_full, audit_viability, extract_witness_function, run_full, AdversaryConfig, StrategySpec, TraceModel,
};
use fip_core::gen::{self, ce_enumeration, clustered_family, marker_family, range_table, GenRng};
use fip_core::genericity::{acceptable_sequence, build_generic, extract_subfamily, BitString, Coding, DenseSetQuery};
use fip_core::harness::{check_intersection_law, check_pull_back, determinism_check, golden_scenarios, range_round_trip, run_scenario, Status};
use fip_core::oracle::oracle_is_maximal;
use fip_core::reductions::{hat_transform, sufficient_stages};
use fip_core::solvers::{audit_permitting, solve_hyperimmune, solve_permitting, CeEnumeration, DominationOracle};
use fip_core::{Family, IntersectionProperty, Result};

const LAW_CASES: usize = 500;
const LAW_MAX_INDEX_BOUND: usize = 5;
const LAW_MAX_UNIVERSE: u64 = 30;
const LAW_TIME_LIMIT: Duration = Duration::from_secs(60);
const PULLBACK_CASES: usize = 200;
const RANGE_CASES: usize = 300;
const RANGE_MAX_DOMAIN: usize = 6;
const RANGE_MAX_RANGE: usize = 6;
const DOMINATION_CASES: usize = 100;
const PERMITTING_CASES: usize = 100;
const ADVERSARY_STAGES: u64 = 2000;
const ADVERSARY_WIDTH: usize = 3;
const ADVERSARY_MIN_PROGRESSIVE: usize = 3;
const ADVERSARY_LEVELS: usize = 4;
const GENERIC_CASES: usize = 100;
const GENERIC_MAX_INDEX_BOUND: usize = 6;
const MONOTONICITY_PAIRS: usize = 1000;

struct Verdict {
    failures: usize,
    detail: String,
}

fn random_family(rng: &mut GenRng, max_i: usize, max_u: u64) -> Result<Family> {
    let i = rng.gen_range(1..=max_i);
    let u = rng.gen_range(2 * (i as u64 - 1).max(1)..=max_u);
    if rng.gen_bool(0.5) {
        let density = rng.gen_range(0.1..0.6);
        marker_family(rng, i, u, density)
    } else {
        clustered_family(rng, i, u)
    }
}

fn law_suite() -> Result<Verdict> {
    let start = Instant::now();
    let mut rng = gen::rng(0xE01);
    let mut failures = 0;
    for _ in 0..LAW_CASES {
        let a = random_family(&mut rng, LAW_MAX_INDEX_BOUND, LAW_MAX_UNIVERSE)?;
        for n in [2, 3] {
            let hat = hat_transform(&a, n, sufficient_stages(&a))?;
            if !check_intersection_law(&a, &hat.family, n)?.is_empty() {
                failures += 1;
            }
        }
    }
    let took = start.elapsed();
    if took > LAW_TIME_LIMIT {
        failures += 1;
    }
    Ok(Verdict {
        failures,
        detail: format!("{} transforms in {:.1?} (limit {:?})", 2 * LAW_CASES, took, LAW_TIME_LIMIT),
    })
}

fn pull_back_suite() -> Result<Verdict> {
    let mut rng = gen::rng(0xB4C);
    let mut failures = 0;
    for _ in 0..PULLBACK_CASES {
        let a = random_family(&mut rng, LAW_MAX_INDEX_BOUND, 20)?;
        let hat = hat_transform(&a, 2, sufficient_stages(&a))?;
        if !check_pull_back(&a, &hat.family, 2)?.is_empty() {
            failures += 1;
        }
    }
    Ok(Verdict {
        failures,
        detail: format!("{PULLBACK_CASES} families, n = 2"),
    })
}

fn range_suite() -> Result<Verdict> {
    let mut rng = gen::rng(0x4A6);
    let props = [
        IntersectionProperty::F,
        IntersectionProperty::DBar(2),
        IntersectionProperty::D(2),
        IntersectionProperty::D(3),
    ];
    let mut failures = 0;
    let mut solutions = 0;
    for _ in 0..RANGE_CASES {
        let domain = rng.gen_range(1..=RANGE_MAX_DOMAIN);
        let ib = rng.gen_range(1..=RANGE_MAX_RANGE);
        let table = range_table(&mut rng, domain, ib);
        for prop in props {
            let (checked, bad) = range_round_trip(&table, ib, prop)?;
            solutions += checked;
            failures += bad.len();
        }
    }
    Ok(Verdict {
        failures,
        detail: format!("{RANGE_CASES} tables, {solutions} maximal solutions decoded"),
    })
}

fn domination_suite() -> Result<Verdict> {
    let mut rng = gen::rng(0xD0E);
    let mut failures = 0;
    let mut zero_cases = 0;
    let mut done = 0;
    while done < DOMINATION_CASES {
        let a = random_family(&mut rng, 6, 24)?;
        let steps = 2 * a.index_bound() + 2;
        let f = DominationOracle::from_g(&a, steps + 1, 1)?;
        let h = solve_hyperimmune(&a, &f, steps)?;
        let oracle = oracle_is_maximal(&a, &h.range(), IntersectionProperty::F)?;
        if !(h.verdict.maximal && oracle && h.truncation_exact) {
            failures += 1;
        }
        // The zero guide is only informative when A_0 meets another set.
        let a0_meets = (1..a.index_bound()).any(|i| matches!(a.witness(&[0, i]), Ok(Some(_))));
        if a0_meets {
            zero_cases += 1;
            let z = solve_hyperimmune(&a, &DominationOracle::constant(0, steps + 1), steps)?;
            let oracle = oracle_is_maximal(&a, &z.range(), IntersectionProperty::F)?;
            if z.index_map.entries().iter().any(|&j| j != 0) || z.verdict.maximal || oracle || !z.truncation_exact {
                failures += 1;
            }
        }
        done += 1;
    }
    Ok(Verdict {
        failures,
        detail: format!("{DOMINATION_CASES} families with g + 1, {zero_cases} with the zero guide"),
    })
}

fn permitting_suite() -> Result<Verdict> {
    let mut rng = gen::rng(0x9E2);
    let mut failures = 0;
    let mut audited = 0;
    for k in 0..PERMITTING_CASES {
        let a = random_family(&mut rng, 5, 20)?;
        let stages = 40;
        let fresh_per_stage = k % 2 == 0;
        let w = if fresh_per_stage {
            CeEnumeration::one_per_stage(stages + 1)
        } else {
            ce_enumeration(&mut rng, stages + 1, 3, 60)
        };
        let p = solve_permitting(&a, &w, stages)?;
        let audit = audit_permitting(&p.state.trace, &w, &a)?;
        audited += audit.stages;
        failures += audit.violations.len();
        if p.certificates.len() != p.state.history.len() || !p.certificates.iter().all(|c| c.verify(&a)) {
            failures += 1;
        }
        if fresh_per_stage && !(p.verdict.maximal && oracle_is_maximal(&a, &p.index_map.range(), IntersectionProperty::F)?) {
            failures += 1;
        }
    }
    Ok(Verdict {
        failures,
        detail: format!("{PERMITTING_CASES} runs, {audited} stage transitions audited"),
    })
}

fn adversary_suite() -> Result<Verdict> {
    let suite = StrategySpec::suite();
    let results: Vec<Result<(usize, String)>> = suite
        .iter()
        .map(|spec| -> Result<(usize, String)> {
            let config = AdversaryConfig::new(ADVERSARY_STAGES, ADVERSARY_WIDTH);
            let run = run_full(std::slice::from_ref(spec), &config)?;
            let report = audit_full(&run.trace)?;
            let mut failures = report.violation_count();
            let progressive = run.stats.progressive[0].len();
            let respects = run.stats.withheld[0] == 0;
            let mut note = format!("{spec}: progressive {progressive}");
            if respects && progressive >= ADVERSARY_MIN_PROGRESSIVE {
                let model = TraceModel::from_trace(&run.trace)?;
                let j: Vec<usize> = run.stats.enumerations[0].iter().map(|&(v, _)| v).collect();
                let wf = extract_witness_function(&j, &model, ADVERSARY_LEVELS)?;
                failures += audit_viability(&wf.chain, 0, &model).len();
                note.push_str(&format!(", chain of {} checked", wf.chain.len()));
            }
            Ok((failures, note))
        })
        .collect();
    let mut failures = 0;
    let mut notes = Vec::new();
    let mut eligible = 0;
    for r in results {
        let (f, note) = r?;
        failures += f;
        if note.contains("chain") {
            eligible += 1;
        }
        notes.push(note);
    }
    for n in &notes {
        println!("    {n}");
    }
    Ok(Verdict {
        failures,
        detail: format!(
            "{} strategies at S = {ADVERSARY_STAGES}; {eligible} reached {ADVERSARY_MIN_PROGRESSIVE} progressive stages{}",
            suite.len(),
            if eligible == 0 { " (viability check vacuous)" } else { "" }
        ),
    })
}

fn generic_suite() -> Result<Verdict> {
    let mut rng = gen::rng(0x6E7);
    let c = Coding;
    let mut failures = 0;
    for _ in 0..GENERIC_CASES {
        let a = random_family(&mut rng, GENERIC_MAX_INDEX_BOUND, 24)?;
        let budget = a.universe_bound();
        let targets: Vec<DenseSetQuery> = (0..a.index_bound()).map(|i| DenseSetQuery { i, budget }).collect();
        let ok = build_generic(&a, &c, &targets)
            .and_then(|g| extract_subfamily(&g, &a, &c))
            .and_then(|ex| Ok(ex.verdict.maximal && oracle_is_maximal(&a, &ex.index_map.range(), IntersectionProperty::F)?));
        if !matches!(ok, Ok(true)) {
            failures += 1;
        }
    }
    let mut mono_failures = 0;
    for _ in 0..MONOTONICITY_PAIRS {
        let a = random_family(&mut rng, 4, 12)?;
        let len: u128 = rng.gen_range(1..=48);
        let ones: BTreeSet<u128> = (0..len).filter(|_| rng.gen_bool(0.3)).collect();
        let sigma = BitString::from_ones(len, ones.iter().copied())?;
        let extra: u128 = rng.gen_range(1..=32);
        let more = (len..len + extra).filter(|_| rng.gen_bool(0.3));
        let ext = BitString::from_ones(len + extra, ones.iter().copied().chain(more))?;
        let (s1, s2) = (acceptable_sequence(&sigma, &a, &c)?, acceptable_sequence(&ext, &a, &c)?);
        if !s2.extends(&s1) {
            mono_failures += 1;
        }
    }
    Ok(Verdict {
        failures: failures + mono_failures,
        detail: format!(
            "{GENERIC_CASES} round trips ({failures} failed), {MONOTONICITY_PAIRS} prefix pairs ({mono_failures} failed)"
        ),
    })
}

fn determinism_suite() -> Result<Verdict> {
    let mut failures = 0;
    let scenarios = golden_scenarios();
    for s in &scenarios {
        failures += determinism_check(s)?.len();
        if run_scenario(s).status != Status::Pass {
            failures += 1;
        }
    }
    Ok(Verdict {
        failures,
        detail: format!("{} golden scenarios run twice and replayed", scenarios.len()),
    })
}

fn main() {
    type Criterion = (&'static str, fn() -> Result<Verdict>);
    let criteria: [Criterion; 8] = [
        ("intersection law of the transform", law_suite),
        ("reduction pull-back", pull_back_suite),
        ("range round trip", range_suite),
        ("domination escape", domination_suite),
        ("permitting audit", permitting_suite),
        ("adversary trace invariants", adversary_suite),
        ("genericity round trip", generic_suite),
        ("golden determinism", determinism_suite),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let line = match run() {
            Ok(v) if v.failures == 0 => format!("PASS {}. {name}: {} [{:.1?}]", k + 1, v.detail, start.elapsed()),
            Ok(v) => {
                failed += 1;
                format!("FAIL {}. {name}: {} failures; {}", k + 1, v.failures, v.detail)
            }
            Err(e) => {
                failed += 1;
                format!("FAIL {}. {name}: error: {e}", k + 1)
            }
        };
        println!("{line}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
