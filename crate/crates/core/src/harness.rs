//! Scenario files, the golden scenario registry and the checks they run.
//!
//! A scenario names one operation, its inputs and an optional oracle check:
//!
//! ```toml
//! name = "hat-law"
//! operation = "hat-transform"
//! expected = "property"
//!
//! [inputs]
//! family = "families/small.fam"   # or family_text = """..."""
//! n = 2
//! ```
//!
//! Running a scenario never panics on bad input; every outcome maps to one
//! of four [`Status`] values with distinct exit codes.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{self, parse_strategies, AdversaryConfig};
use crate::error::{FipError, Result};
use crate::family::{Family, IntersectionProperty};
use crate::format::{parse_family, write_family};
use crate::genericity::{build_generic, extract_subfamily, finite_maximal_subfamily, Coding, DenseSetQuery};
use crate::oracle::{brute_force_maximal, law_violations, oracle_holds, oracle_is_maximal};
use crate::par::{self, Exec};
use crate::property::is_maximal;
use crate::reductions::{decode_range, encode_range, hat_transform, pull_back_solution, sufficient_stages};
use crate::solvers::{
    audit_permitting, chosen, solve_greedy, solve_hyperimmune, solve_permitting, CeEnumeration, DominationOracle,
};
use crate::trace::{replay, StageTrace, TraceFormat};

/// Outcome classes of a run, with their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    OracleFailure,
    InputError,
    Undecided,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::OracleFailure => 1,
            Status::InputError => 2,
            Status::Undecided => 3,
        }
    }

    pub fn of_error(err: &FipError) -> Status {
        use FipError::*;
        match err {
            Undecided(_) | Exhausted(_) => Status::Undecided,
            ChosenFailsProperty(_) | NotMaximal { .. } | DegenerateSolution(_) | Contract(_) => Status::OracleFailure,
            IndexOutOfBounds { .. } | TrivialFamily | InvalidParameter(_) | MarkerUndecided | MalformedSet { .. }
            | Monotonicity { .. } | Parse { .. } | Io(_) | CorruptTrace(_) | BoundExceeded(_) => Status::InputError,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::OracleFailure => "FAIL",
            Status::InputError => "INPUT-ERROR",
            Status::Undecided => "UNDECIDED",
        })
    }
}

/// Default bounds, overridable through `FIP_INDEX_BOUND`,
/// `FIP_UNIVERSE_BOUND` and `FIP_STAGE_BOUND`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub index_bound: usize,
    pub universe_bound: u64,
    pub stages: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            index_bound: 6,
            universe_bound: 30,
            stages: 200,
        }
    }
}

impl Bounds {
    pub const INDEX_VAR: &'static str = "FIP_INDEX_BOUND";
    pub const UNIVERSE_VAR: &'static str = "FIP_UNIVERSE_BOUND";
    pub const STAGE_VAR: &'static str = "FIP_STAGE_BOUND";

    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        fn read<T: std::str::FromStr>(get: &dyn Fn(&str) -> Option<String>, key: &str, default: T) -> Result<T> {
            match get(key) {
                None => Ok(default),
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| FipError::InvalidParameter(format!("{key}={v} is not a natural number"))),
            }
        }
        let d = Bounds::default();
        Ok(Bounds {
            index_bound: read(&get, Self::INDEX_VAR, d.index_bound)?,
            universe_bound: read(&get, Self::UNIVERSE_VAR, d.universe_bound)?,
            stages: read(&get, Self::STAGE_VAR, d.stages)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    HatTransform,
    EncodeRange,
    SolveGreedy,
    SolveHyperimmune,
    SolvePermitting,
    AdversaryWarmup,
    AdversaryFull,
    GenericRoundTrip,
    Maximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Property,
    Maximality,
    RoundTrip,
    TraceInvariant,
}

impl Operation {
    /// Checks that make sense for this operation.
    pub fn checks(self) -> &'static [Check] {
        use Check::*;
        match self {
            Operation::HatTransform => &[Property, Maximality],
            Operation::EncodeRange => &[RoundTrip],
            Operation::SolveGreedy => &[Property],
            Operation::SolveHyperimmune => &[Maximality],
            Operation::SolvePermitting => &[TraceInvariant, Maximality],
            Operation::AdversaryWarmup | Operation::AdversaryFull => &[TraceInvariant],
            Operation::GenericRoundTrip => &[Maximality],
            Operation::Maximal => &[Maximality],
        }
    }
}

/// Operation parameters. Paths are resolved against the scenario file's
/// directory; `*_text` fields hold the same content inline.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub family: Option<PathBuf>,
    pub family_text: Option<String>,
    pub n: Option<usize>,
    pub prop: Option<String>,
    pub stages: Option<u64>,
    pub table: Option<Vec<usize>>,
    pub index_bound: Option<usize>,
    pub requirements: Option<Vec<usize>>,
    pub budget: Option<u64>,
    /// Hyperimmune guide: `g + offset` unless `constant` is given.
    pub offset: Option<u64>,
    pub constant: Option<u64>,
    pub enumeration: Option<PathBuf>,
    pub enumeration_text: Option<String>,
    pub strategies: Option<Vec<String>>,
    pub width: Option<usize>,
    pub targets: Option<Vec<usize>>,
    pub precheck: Option<bool>,
    pub chosen: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub operation: Operation,
    #[serde(default)]
    pub inputs: Inputs,
    pub expected: Option<Check>,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base: Option<PathBuf>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| FipError::Parse {
            line: e.span().map(|r| text[..r.start].lines().count().max(1)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FipError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text)?;
        s.base = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(check) = self.expected {
            if !self.operation.checks().contains(&check) {
                return Err(FipError::InvalidParameter(format!(
                    "check {check:?} is not available for {:?}",
                    self.operation
                )));
            }
        }
        Ok(())
    }

    fn read(&self, path: &Path) -> Result<String> {
        let full = match &self.base {
            Some(b) if path.is_relative() => b.join(path),
            _ => path.to_path_buf(),
        };
        std::fs::read_to_string(&full).map_err(|e| FipError::Io(format!("{}: {e}", full.display())))
    }

    pub fn family(&self) -> Result<Family> {
        match (&self.inputs.family_text, &self.inputs.family) {
            (Some(text), _) => parse_family(text),
            (None, Some(path)) => parse_family(&self.read(path)?),
            (None, None) => Err(FipError::InvalidParameter(format!("scenario {} needs a family", self.name))),
        }
    }

    fn enumeration(&self, stages: usize) -> Result<CeEnumeration> {
        match (&self.inputs.enumeration_text, &self.inputs.enumeration) {
            (Some(text), _) => CeEnumeration::parse(text),
            (None, Some(path)) => CeEnumeration::parse(&self.read(path)?),
            (None, None) => Ok(CeEnumeration::one_per_stage(stages + 1)),
        }
    }

    fn prop(&self, default: IntersectionProperty) -> Result<IntersectionProperty> {
        self.inputs.prop.as_deref().map_or(Ok(default), str::parse)
    }
}

/// Result of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: String,
    pub operation: Operation,
    pub check: Option<Check>,
    pub status: Status,
    /// Human-readable findings, one per line.
    pub lines: Vec<String>,
    /// The operation's primary output in a stable text form.
    pub output: String,
    pub trace: Option<StageTrace>,
    /// The family the trace constructs, when it constructs one.
    pub constructed: Option<Family>,
}

impl ScenarioReport {
    pub fn render(&self) -> String {
        let mut out = format!("{} {} ({:?}", self.status, self.name, self.operation);
        if let Some(c) = self.check {
            out.push_str(&format!(", check {c:?}"));
        }
        out.push_str(")\n");
        for l in &self.lines {
            out.push_str("  ");
            out.push_str(l);
            out.push('\n');
        }
        out
    }
}

struct Outcome {
    lines: Vec<String>,
    violations: Vec<String>,
    output: String,
    trace: Option<StageTrace>,
    constructed: Option<Family>,
}

impl Outcome {
    fn new(output: String) -> Self {
        Outcome {
            lines: Vec::new(),
            violations: Vec::new(),
            output,
            trace: None,
            constructed: None,
        }
    }
}

/// Run a scenario end to end on the current thread.
pub fn run_scenario(s: &Scenario) -> ScenarioReport {
    let mut report = ScenarioReport {
        name: s.name.clone(),
        operation: s.operation,
        check: s.expected,
        status: Status::Pass,
        lines: Vec::new(),
        output: String::new(),
        trace: None,
        constructed: None,
    };
    match s.validate().and_then(|_| execute(s)) {
        Ok(out) => {
            report.status = if out.violations.is_empty() { Status::Pass } else { Status::OracleFailure };
            report.lines = out.lines;
            report.lines.extend(out.violations.iter().take(20).map(|v| format!("violation: {v}")));
            report.output = out.output;
            report.trace = out.trace;
            report.constructed = out.constructed;
        }
        Err(err) => {
            report.status = Status::of_error(&err);
            report.lines.push(err.to_string());
        }
    }
    report
}

/// Run scenarios side by side; each one stays single-threaded.
pub fn run_batch(scenarios: Vec<Scenario>, exec: Exec) -> Vec<ScenarioReport> {
    par::map(exec, scenarios, |s| run_scenario(&s))
}

fn set_text(set: &BTreeSet<usize>) -> String {
    let v: Vec<String> = set.iter().map(usize::to_string).collect();
    format!("{{{}}}", v.join(","))
}

fn execute(s: &Scenario) -> Result<Outcome> {
    let inp = &s.inputs;
    let check = s.expected;
    match s.operation {
        Operation::HatTransform => {
            let a = s.family()?;
            let n = inp.n.unwrap_or(2);
            let stages = inp.stages.unwrap_or_else(|| sufficient_stages(&a));
            let hat = hat_transform(&a, n, stages)?;
            let mut out = Outcome::new(write_family(&hat.family));
            out.lines.push(format!("transformed I={} U={} in {} stages", hat.family.index_bound(), hat.family.universe_bound(), hat.stages));
            match check {
                Some(Check::Property) => {
                    out.violations = check_intersection_law(&a, &hat.family, n)?;
                    out.lines.push(format!("intersection law checked over {} index sets", (1u64 << a.index_bound()) - 1));
                }
                Some(Check::Maximality) => {
                    out.violations = check_pull_back(&a, &hat.family, n)?;
                    out.lines.push("every maximal F-solution pulls back".into());
                }
                _ => {}
            }
            out.constructed = Some(hat.family);
            out.trace = Some(hat.trace);
            Ok(out)
        }
        Operation::EncodeRange => {
            let table = inp
                .table
                .clone()
                .ok_or_else(|| FipError::InvalidParameter("encode-range needs a table".into()))?;
            let ib = inp.index_bound.unwrap_or_else(|| table.iter().max().map_or(1, |m| m + 1));
            let fam = encode_range(&table, ib)?;
            let mut out = Outcome::new(write_family(&fam));
            if check == Some(Check::RoundTrip) {
                let prop = s.prop(IntersectionProperty::DBar(2))?;
                let (checked, violations) = range_round_trip(&table, ib, prop)?;
                out.lines.push(format!("{checked} maximal {prop} solutions decoded"));
                out.violations = violations;
            }
            Ok(out)
        }
        Operation::SolveGreedy => {
            let a = s.family()?;
            let reqs = inp.requirements.clone().unwrap_or_else(|| (0..a.index_bound()).collect());
            let budget = inp.budget.unwrap_or(a.universe_bound());
            let g = solve_greedy(&a, &reqs, budget)?;
            let conds: Vec<String> = g.conditions.iter().map(ToString::to_string).collect();
            let mut out = Outcome::new(format!("J = {:?}\nconditions {}\n", g.index_map.entries(), conds.join(" ")));
            if g.partial {
                out.lines.push(format!("unsettled requirements {:?}", g.unsettled));
            }
            if check == Some(Check::Property) {
                let range = chosen(&g);
                if !g.certificate.verify(&a) {
                    out.violations.push("final certificate does not verify".into());
                }
                if !oracle_holds(&a, &range, IntersectionProperty::F)? {
                    out.violations.push(format!("{} lacks F", set_text(&range)));
                }
            }
            Ok(out)
        }
        Operation::SolveHyperimmune => {
            let a = s.family()?;
            let steps = inp.stages.unwrap_or(a.index_bound() as u64 * 2) as usize;
            let f = match inp.constant {
                Some(c) => DominationOracle::constant(c, steps + 1),
                None => DominationOracle::from_g(&a, steps + 1, inp.offset.unwrap_or(1))?,
            };
            let h = solve_hyperimmune(&a, &f, steps)?;
            let mut out = Outcome::new(format!("J = {:?}\nmaximal {}\n", h.index_map.entries(), h.verdict.maximal));
            if check == Some(Check::Maximality) {
                let range = h.range();
                let oracle = oracle_is_maximal(&a, &range, IntersectionProperty::F)?;
                if oracle != h.verdict.maximal {
                    out.violations.push(format!("verdict {} disagrees with the oracle", h.verdict.maximal));
                }
                if !oracle {
                    out.violations.push(format!("{} is not maximal", set_text(&range)));
                }
            }
            out.trace = Some(h.trace);
            Ok(out)
        }
        Operation::SolvePermitting => {
            let a = s.family()?;
            let stages = inp.stages.unwrap_or(3 * a.index_bound() as u64) as usize;
            let w = s.enumeration(stages)?;
            let p = solve_permitting(&a, &w, stages)?;
            let mut out = Outcome::new(format!("J = {:?}\nmaximal {}\n", p.index_map.entries(), p.verdict.maximal));
            match check {
                Some(Check::TraceInvariant) => {
                    let audit = audit_permitting(&p.state.trace, &w, &a)?;
                    out.lines.push(format!("permitting audit over {} stages", audit.stages));
                    out.violations = audit.violations;
                }
                Some(Check::Maximality)
                    if !oracle_is_maximal(&a, &p.index_map.range(), IntersectionProperty::F)? => {
                        out.violations.push(format!("{} is not maximal", set_text(&p.index_map.range())));
                    }
                _ => {}
            }
            out.trace = Some(p.state.trace);
            Ok(out)
        }
        Operation::AdversaryWarmup | Operation::AdversaryFull => {
            let lines = inp.strategies.clone().unwrap_or_default().join("\n");
            let strategies = parse_strategies(&lines)?;
            let stages = inp.stages.unwrap_or(Bounds::from_env()?.stages);
            let config = AdversaryConfig::new(stages, inp.width.unwrap_or(strategies.len()));
            let warm = s.operation == Operation::AdversaryWarmup;
            let run = if warm {
                adversary::run_warmup(&strategies, &config)?
            } else {
                adversary::run_full(&strategies, &config)?
            };
            let mut out = Outcome::new(write_family(&run.family));
            out.lines.push(format!(
                "{} sets, {} intersections, progressive stages {:?}",
                run.family.index_bound(),
                run.stats.intersections,
                run.stats.progressive.iter().map(Vec::len).collect::<Vec<_>>()
            ));
            if check == Some(Check::TraceInvariant) {
                let report = if warm {
                    adversary::audit_warmup(&run.trace)?
                } else {
                    adversary::audit_full(&run.trace)?
                };
                for c in &report.checks {
                    out.lines.push(format!("{}: examined {}, violations {}", c.name, c.examined, c.violations.len()));
                    out.violations.extend(c.violations.iter().map(|v| format!("{}: {v}", c.name)));
                }
            }
            out.constructed = Some(run.family);
            out.trace = Some(run.trace);
            Ok(out)
        }
        Operation::GenericRoundTrip => {
            let a = s.family()?;
            if inp.precheck.unwrap_or(false) {
                if let Some(j) = finite_maximal_subfamily(&a)? {
                    let mut out = Outcome::new(format!("J = {:?}\n", j.entries()));
                    out.lines.push("precheck short-circuit".into());
                    if check == Some(Check::Maximality) && !oracle_is_maximal(&a, &j.range(), IntersectionProperty::F)? {
                        out.violations.push(format!("{} is not maximal", set_text(&j.range())));
                    }
                    return Ok(out);
                }
            }
            let targets = inp.targets.clone().unwrap_or_else(|| (0..a.index_bound()).collect());
            let budget = inp.budget.unwrap_or(a.universe_bound());
            let queries: Vec<DenseSetQuery> = targets.iter().map(|&i| DenseSetQuery { i, budget }).collect();
            let c = Coding;
            let g = build_generic(&a, &c, &queries)?;
            let ex = extract_subfamily(&g, &a, &c)?;
            let mut out = Outcome::new(format!("G = {}\nJ = {:?}\n", g.render(), ex.index_map.entries()));
            if check == Some(Check::Maximality) {
                let range = ex.index_map.range();
                if !ex.verdict.maximal || !oracle_is_maximal(&a, &range, IntersectionProperty::F)? {
                    out.violations.push(format!("{} is not maximal", set_text(&range)));
                }
            }
            Ok(out)
        }
        Operation::Maximal => {
            let a = s.family()?;
            let prop = s.prop(IntersectionProperty::F)?;
            let chosen: BTreeSet<usize> = inp
                .chosen
                .clone()
                .ok_or_else(|| FipError::InvalidParameter("maximal needs chosen indices".into()))?
                .into_iter()
                .collect();
            let v = is_maximal(&a, &chosen, prop)?;
            let mut out = Outcome::new(format!("maximal {} extending {:?}\n", v.maximal, v.extending));
            if check == Some(Check::Maximality) {
                let oracle = oracle_is_maximal(&a, &chosen, prop)?;
                if oracle != v.maximal {
                    out.violations.push(format!("solver says {}, oracle says {oracle}", v.maximal));
                }
                if !v.maximal {
                    out.violations.push(format!("{} is not maximal; {:?} extends it", set_text(&chosen), v.extending));
                }
            }
            Ok(out)
        }
    }
}

/// Index sets on which `Â` breaks the intersection law of the transform.
pub fn check_intersection_law(a: &Family, hat: &Family, n: usize) -> Result<Vec<String>> {
    Ok(law_violations(a, hat, n)?.iter().map(set_text).collect())
}

/// Pull back every brute-force maximal F-solution of `Â` and confirm it is a
/// brute-force maximal `D̄_n` solution of `A`.
pub fn check_pull_back(a: &Family, hat: &Family, n: usize) -> Result<Vec<String>> {
    let prop = IntersectionProperty::dbar(n)?;
    let mut bad = Vec::new();
    for sol in brute_force_maximal(hat, IntersectionProperty::F)? {
        match pull_back_solution(a, hat, &sol, n) {
            Ok(back) => {
                if !oracle_is_maximal(a, &back, prop)? {
                    bad.push(format!("{} pulls back to a non-maximal set", set_text(&sol)));
                }
            }
            Err(e) => bad.push(format!("{}: {e}", set_text(&sol))),
        }
    }
    Ok(bad)
}

/// Decode every brute-force maximal solution of the range encoding of
/// `table`. Returns the number of solutions checked and the mismatches.
///
/// Marker-only singletons are reported as degenerate by `decode_range`; for
/// `F` and `D̄_n` exactly the indices outside the range produce them.
pub fn range_round_trip(table: &[usize], index_bound: usize, prop: IntersectionProperty) -> Result<(usize, Vec<String>)> {
    let fam = encode_range(table, index_bound)?;
    let range: BTreeSet<usize> = table.iter().copied().collect();
    let mut bad = Vec::new();
    let sols = brute_force_maximal(&fam, prop)?;
    for sol in &sols {
        match (decode_range(&fam, sol, prop), prop) {
            (Ok(d), IntersectionProperty::D(n)) => {
                let union: BTreeSet<usize> = d.range.union(&d.exceptions).copied().collect();
                if union != range || d.exceptions.len() > n - 1 {
                    bad.push(format!("{}: decoded {:?} + {:?}", set_text(sol), d.range, d.exceptions));
                }
            }
            (Ok(d), _) => {
                if d.range != range || !d.exceptions.is_empty() {
                    bad.push(format!("{}: decoded {:?}", set_text(sol), d.range));
                }
            }
            (Err(FipError::DegenerateSolution(_)), IntersectionProperty::F | IntersectionProperty::DBar(_)) => {
                let lone = sol.iter().next().copied();
                if sol.len() != 1 || lone.is_some_and(|i| range.contains(&i)) {
                    bad.push(format!("{}: unexpected degenerate solution", set_text(sol)));
                }
            }
            (Err(e), _) => bad.push(format!("{}: {e}", set_text(sol))),
        }
    }
    Ok((sols.len(), bad))
}

/// Run a scenario twice and compare outputs and traces byte for byte; when
/// the trace constructs a family, replaying the rendered trace must give
/// that family back.
pub fn determinism_check(s: &Scenario) -> Result<Vec<String>> {
    let first = run_scenario(s);
    let second = run_scenario(s);
    let mut bad = Vec::new();
    if first.status != second.status || first.output != second.output || first.lines != second.lines {
        bad.push(format!("{}: outputs differ between runs", s.name));
    }
    let render = |r: &ScenarioReport| r.trace.as_ref().map(|t| t.render(TraceFormat::Text));
    let (t1, t2) = (render(&first), render(&second));
    if t1 != t2 {
        bad.push(format!("{}: traces differ between runs", s.name));
    }
    if let Some(text) = t1 {
        let parsed = StageTrace::parse(&text)?;
        if parsed.render(TraceFormat::Text) != text {
            bad.push(format!("{}: trace does not survive a parse round trip", s.name));
        }
        if let Some(fam) = &first.constructed {
            let rep = replay(&parsed)?;
            if !rep.complete || &rep.family != fam {
                bad.push(format!("{}: replayed family differs from the constructed one", s.name));
            }
        }
    }
    Ok(bad)
}

fn inline(name: &str, operation: Operation, expected: Check, family: &str, inputs: Inputs) -> Scenario {
    Scenario {
        name: name.into(),
        operation,
        inputs: Inputs {
            family_text: (!family.is_empty()).then(|| family.to_string()),
            ..inputs
        },
        expected: Some(expected),
        base: None,
    }
}

const SMALL: &str = "family v1 I=4 U=15\nset 0: 0 1 5 9\nset 1: 1 2 7\nset 2: 4 5 7 11\nset 3: 6 9 11 13\n";
const CHAIN: &str = "family v1 I=3 U=5\nset 0: 0 1\nset 1: 1 2\nset 2: 3 4\n";
const COMMON: &str = "family v1 I=5 U=9\ngen common a=9\n";

/// The built-in scenarios, in a fixed order.
pub fn golden_scenarios() -> Vec<Scenario> {
    let strategies = |v: &[&str]| Some(v.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    vec![
        inline("hat-law", Operation::HatTransform, Check::Property, SMALL, Inputs { n: Some(2), ..Inputs::default() }),
        inline("hat-law-n3", Operation::HatTransform, Check::Property, SMALL, Inputs { n: Some(3), ..Inputs::default() }),
        inline("hat-pullback", Operation::HatTransform, Check::Maximality, SMALL, Inputs { n: Some(2), ..Inputs::default() }),
        inline(
            "range-roundtrip",
            Operation::EncodeRange,
            Check::RoundTrip,
            "",
            Inputs {
                table: Some(vec![1, 3, 1, 0]),
                index_bound: Some(5),
                prop: Some("Dbar2".into()),
                ..Inputs::default()
            },
        ),
        inline(
            "range-roundtrip-d2",
            Operation::EncodeRange,
            Check::RoundTrip,
            "",
            Inputs {
                table: Some(vec![2, 0, 2]),
                index_bound: Some(4),
                prop: Some("D2".into()),
                ..Inputs::default()
            },
        ),
        inline(
            "greedy-forcing",
            Operation::SolveGreedy,
            Check::Property,
            CHAIN,
            Inputs { requirements: Some(vec![1, 2]), ..Inputs::default() },
        ),
        inline(
            "hyperimmune-escape",
            Operation::SolveHyperimmune,
            Check::Maximality,
            SMALL,
            Inputs { stages: Some(8), offset: Some(1), ..Inputs::default() },
        ),
        inline(
            "permitting-invariant",
            Operation::SolvePermitting,
            Check::TraceInvariant,
            COMMON,
            Inputs { stages: Some(12), ..Inputs::default() },
        ),
        inline(
            "permitting-maximal",
            Operation::SolvePermitting,
            Check::Maximality,
            COMMON,
            Inputs { stages: Some(24), ..Inputs::default() },
        ),
        inline(
            "adversary-warmup",
            Operation::AdversaryWarmup,
            Check::TraceInvariant,
            "",
            Inputs {
                strategies: strategies(&["greedy delay=0", "greedy delay=2", "silent"]),
                stages: Some(100),
                ..Inputs::default()
            },
        ),
        inline(
            "adversary-full",
            Operation::AdversaryFull,
            Check::TraceInvariant,
            "",
            Inputs {
                strategies: strategies(&["greedy delay=1", "chaser delay=2"]),
                stages: Some(120),
                width: Some(2),
                ..Inputs::default()
            },
        ),
        inline("generic-roundtrip", Operation::GenericRoundTrip, Check::Maximality, SMALL, Inputs::default()),
        inline(
            "maximal-common",
            Operation::Maximal,
            Check::Maximality,
            COMMON,
            Inputs { chosen: Some(vec![0, 1, 2, 3, 4]), ..Inputs::default() },
        ),
    ]
}

pub fn golden(name: &str) -> Option<Scenario> {
    golden_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_scenarios_pass() {
        for s in golden_scenarios() {
            let r = run_scenario(&s);
            assert_eq!(r.status, Status::Pass, "{}", r.render());
        }
    }

    #[test]
    fn malformed_family_is_an_input_error() {
        let s = Scenario::parse(
            "name = \"bad\"\noperation = \"hat-transform\"\nexpected = \"property\"\n[inputs]\nfamily_text = \"family v1 I=2\\nset 0: 0 x\\n\"\n",
        )
        .unwrap();
        let r = run_scenario(&s);
        assert_eq!(r.status, Status::InputError);
        assert_ne!(r.status.code(), Status::OracleFailure.code());
    }

    #[test]
    fn oracle_failures_are_distinguished() {
        let s = inline(
            "zero-guide",
            Operation::SolveHyperimmune,
            Check::Maximality,
            SMALL,
            Inputs { stages: Some(6), constant: Some(0), ..Inputs::default() },
        );
        assert_eq!(run_scenario(&s).status, Status::OracleFailure);
    }

    #[test]
    fn scenario_files_round_trip() {
        for s in golden_scenarios() {
            let back = Scenario::parse(&s.to_toml()).unwrap();
            assert_eq!(back, s);
        }
        assert!(Scenario::parse("name = \"x\"\noperation = \"encode-range\"\nexpected = \"maximality\"\n").is_err());
        assert!(Scenario::parse("name = \"x\"\noperation = \"teleport\"\n").is_err());
    }

    #[test]
    fn bounds_from_environment() {
        let b = Bounds::from_lookup(|k| (k == Bounds::STAGE_VAR).then(|| "42".to_string())).unwrap();
        assert_eq!(b.stages, 42);
        assert_eq!(b.index_bound, Bounds::default().index_bound);
        assert!(Bounds::from_lookup(|_| Some("many".into())).is_err());
    }

    #[test]
    fn golden_runs_are_deterministic() {
        for s in golden_scenarios() {
            assert!(determinism_check(&s).unwrap().is_empty(), "{}", s.name);
        }
    }
}
