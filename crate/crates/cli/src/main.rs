use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fip_core::adversary::{self, parse_strategies, AdversaryConfig};
use fip_core::format::{parse_family, parse_list, write_family};
use fip_core::genericity::{build_generic, extract_subfamily, finite_maximal_subfamily, BitString, Coding, DenseSetQuery};
use fip_core::harness::{self, determinism_check, golden_scenarios, run_scenario, Bounds, Scenario, Status};
use fip_core::oracle::{brute_force_maximal, law_violations, oracle_is_maximal};
use fip_core::property::{check_property, check_property_on, is_maximal};
use fip_core::reductions::{decode_range, encode_range, hat_transform, hat_transform_bounded, sufficient_stages};
use fip_core::solvers::{
    audit_permitting, solve_greedy, solve_hyperimmune, solve_permitting, CeEnumeration, DominationOracle,
};
use fip_core::trace::{replay, StageTrace, TraceFormat};
use fip_core::{Family, FipError, IntersectionProperty};

/// Families of sets, intersection properties and their maximal subfamilies.
///
/// Exit codes: 0 pass, 1 oracle failure, 2 input error, 3 undecided at the
/// current truncation. Default bounds come from FIP_INDEX_BOUND,
/// FIP_UNIVERSE_BOUND and FIP_STAGE_BOUND where a command uses them.
#[derive(Parser)]
#[command(name = "fip", version)]
struct Cli {
    /// Write the run's construction trace here.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

impl From<Format> for TraceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => TraceFormat::Text,
            Format::JsonLines => TraceFormat::JsonLines,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the transformed family whose F-solutions are D̄_n-solutions of the input.
    HatTransform {
        #[arg(long)]
        family: PathBuf,
        #[arg(short, long, default_value_t = 2)]
        n: usize,
        /// Stage budget (default: enough to serve every qualifying set).
        #[arg(long)]
        stages: Option<u64>,
        /// Use the |F| = n + 1 variant.
        #[arg(long)]
        next_size: bool,
        /// Check the intersection law against the brute-force checker.
        #[arg(long)]
        check: bool,
    },
    /// Encode the range of a finite function table as a family.
    EncodeRange {
        /// Comma-separated values f(0), f(1), ...
        #[arg(long)]
        table: String,
        #[arg(long, env = "FIP_INDEX_BOUND")]
        index_bound: Option<usize>,
    },
    /// Read the range back off a maximal subfamily of an encoding family.
    DecodeRange {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        chosen: String,
        #[arg(long, default_value = "Dbar2")]
        prop: IntersectionProperty,
    },
    /// Constructions of maximal F-subfamilies.
    Solve {
        #[command(subcommand)]
        solver: Solver,
    },
    /// Stage constructions against opponent strategies.
    Adversary {
        #[command(subcommand)]
        mode: AdversaryMode,
    },
    /// Generic bit strings and the subfamilies they code.
    Generic {
        #[command(subcommand)]
        op: GenericOp,
    },
    /// Rebuild a family from a trace file.
    Replay {
        file: PathBuf,
        /// Run the adversary audit on the trace as well.
        #[arg(long, value_enum)]
        audit: Option<AuditKind>,
    },
    /// Run scenario files or built-in golden scenarios.
    Scenario(ScenarioArgs),
    /// Decide an intersection property for a (sub)family.
    Check {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        prop: IntersectionProperty,
        /// Restrict to these indices (default: all).
        #[arg(long)]
        chosen: Option<String>,
    },
    /// Decide whether a subfamily is maximal, optionally against the brute-force oracle.
    Maximal {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        prop: IntersectionProperty,
        #[arg(long)]
        chosen: Option<String>,
        /// List every maximal subfamily by exhaustive search instead.
        #[arg(long)]
        all: bool,
        /// Cross-check the verdict with the exhaustive oracle.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Subcommand)]
enum Solver {
    /// Greedy forcing over the given requirements.
    Greedy {
        #[arg(long)]
        family: PathBuf,
        /// Comma-separated requirement indices (default: all).
        #[arg(long)]
        requirements: Option<String>,
        #[arg(long, env = "FIP_UNIVERSE_BOUND")]
        budget: Option<u64>,
    },
    /// Stagewise construction guided by a bounding function.
    Hyperimmune {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, env = "FIP_STAGE_BOUND")]
        steps: Option<usize>,
        /// Use g + offset as the guide.
        #[arg(long, default_value_t = 1)]
        offset: u64,
        /// Use a constant guide instead.
        #[arg(long)]
        constant: Option<u64>,
    },
    /// Permitting construction below a c.e. enumeration.
    Permitting {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, env = "FIP_STAGE_BOUND")]
        stages: Option<usize>,
        /// Enumeration file (default: one new element per stage).
        #[arg(long)]
        enumeration: Option<PathBuf>,
        /// Audit the run's trace.
        #[arg(long)]
        audit: bool,
    },
}

#[derive(Args)]
struct AdversaryArgs {
    /// Strategy file, one strategy per line.
    #[arg(long)]
    strategies: PathBuf,
    #[arg(long, env = "FIP_STAGE_BOUND")]
    stages: Option<u64>,
    #[arg(long)]
    width: Option<usize>,
    /// Audit the trace and fail on violations.
    #[arg(long)]
    audit: bool,
    /// Also write the constructed family here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AdversaryMode {
    Warmup(AdversaryArgs),
    Full(AdversaryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditKind {
    Warmup,
    Full,
}

#[derive(Subcommand)]
enum GenericOp {
    /// Build a string meeting the dense sets of the given targets.
    Build {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        targets: Option<String>,
        #[arg(long, env = "FIP_UNIVERSE_BOUND")]
        budget: Option<u64>,
    },
    /// Extract the subfamily coded by a string (`len=N ones=a,b` or raw bits).
    Extract {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        generic: String,
        /// Short-circuit with a greedy maximal subfamily when one exists.
        #[arg(long)]
        precheck: bool,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario files (TOML).
    files: Vec<PathBuf>,
    /// Run one built-in scenario by name.
    #[arg(long)]
    golden: Option<String>,
    /// Run every built-in scenario.
    #[arg(long)]
    all_golden: bool,
    /// List the built-in scenarios.
    #[arg(long)]
    list: bool,
    /// Run each scenario twice and compare outputs and traces.
    #[arg(long)]
    determinism: bool,
    /// Print each scenario's primary output.
    #[arg(long)]
    verbose: bool,
}

/// Failures carrying their exit status.
struct Failure {
    status: Status,
    message: String,
}

impl From<FipError> for Failure {
    fn from(e: FipError) -> Self {
        Failure {
            status: Status::of_error(&e),
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let status = e.downcast_ref::<FipError>().map_or(Status::InputError, Status::of_error);
        Failure {
            status,
            message: format!("{e:#}"),
        }
    }
}

fn oracle_failure(message: impl Into<String>) -> Failure {
    Failure {
        status: Status::OracleFailure,
        message: message.into(),
    }
}

type Outcome = std::result::Result<(), Failure>;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_family(path: &Path) -> anyhow::Result<Family> {
    let text = read(path)?;
    parse_family(&text).with_context(|| format!("parsing {}", path.display()))
}

fn index_set(text: &str) -> Result<BTreeSet<usize>, FipError> {
    Ok(parse_list::<usize>(text)?.into_iter().collect())
}

fn fmt_set(s: &BTreeSet<usize>) -> String {
    let v: Vec<String> = s.iter().map(usize::to_string).collect();
    format!("{{{}}}", v.join(","))
}

fn write_trace(cli: &Cli, trace: &StageTrace) -> anyhow::Result<()> {
    if let Some(path) = &cli.trace {
        fs::write(path, trace.render(cli.format.into())).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fip: {}", f.message);
            ExitCode::from(f.status.code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::HatTransform {
            family,
            n,
            stages,
            next_size,
            check,
        } => {
            let a = load_family(family)?;
            let stages = stages.unwrap_or_else(|| sufficient_stages(&a));
            let out = if *next_size {
                hat_transform_bounded(&a, *n, stages)?
            } else {
                hat_transform(&a, *n, stages)?
            };
            print!("{}", write_family(&out.family));
            write_trace(cli, &out.trace)?;
            if !out.unwitnessed.is_empty() {
                eprintln!("note: {} qualifying sets not served within {stages} stages", out.unwitnessed.len());
            }
            if *check {
                let bad = if *next_size {
                    fip_core::oracle::law_violations_next_size(&a, &out.family, *n)?
                } else {
                    law_violations(&a, &out.family, *n)?
                };
                if !bad.is_empty() {
                    let shown: Vec<String> = bad.iter().take(5).map(fmt_set).collect();
                    return Err(oracle_failure(format!("intersection law fails on {}", shown.join(" "))));
                }
                eprintln!("intersection law holds on the truncation");
            }
            Ok(())
        }
        Command::EncodeRange { table, index_bound } => {
            let t: Vec<usize> = parse_list(table)?;
            let ib = index_bound.unwrap_or_else(|| t.iter().max().map_or(1, |m| m + 1));
            print!("{}", write_family(&encode_range(&t, ib)?));
            Ok(())
        }
        Command::DecodeRange { family, chosen, prop } => {
            let a = load_family(family)?;
            let d = decode_range(&a, &index_set(chosen)?, *prop)?;
            println!("range {}", fmt_set(&d.range));
            if !d.exceptions.is_empty() {
                println!("exceptions {}", fmt_set(&d.exceptions));
            }
            Ok(())
        }
        Command::Solve { solver } => run_solver(cli, solver),
        Command::Adversary { mode } => run_adversary(cli, mode),
        Command::Generic { op } => run_generic(op),
        Command::Replay { file, audit } => {
            let trace = StageTrace::parse(&read(file)?)?;
            let rep = replay(&trace)?;
            print!("{}", write_family(&rep.family));
            if let Some(kind) = audit {
                let report = match kind {
                    AuditKind::Warmup => adversary::audit_warmup(&trace)?,
                    AuditKind::Full => adversary::audit_full(&trace)?,
                };
                eprint!("{report}");
                if !report.passed() {
                    return Err(oracle_failure(format!("{} audit violations", report.violation_count())));
                }
            }
            if !rep.complete {
                return Err(Failure {
                    status: Status::Undecided,
                    message: "trace ends before its finish record; family is partial".into(),
                });
            }
            Ok(())
        }
        Command::Scenario(args) => run_scenarios(cli, args),
        Command::Check { family, prop, chosen } => {
            let a = load_family(family)?;
            let v = match chosen {
                Some(c) => check_property_on(&a, &index_set(c)?, *prop)?,
                None => check_property(&a, *prop)?,
            };
            println!("{} {} holds={}", v.truncation, v.property, v.holds);
            if let Some(c) = &v.counterexample {
                println!("counterexample {} witness {:?}", fmt_set(&c.indices), c.witness);
            }
            Ok(())
        }
        Command::Maximal {
            family,
            prop,
            chosen,
            all,
            oracle,
        } => {
            let a = load_family(family)?;
            if *all {
                for sol in brute_force_maximal(&a, *prop)? {
                    println!("{}", fmt_set(&sol));
                }
                return Ok(());
            }
            let chosen = chosen
                .as_deref()
                .ok_or_else(|| anyhow!("--chosen is required unless --all is given"))?;
            let chosen = index_set(chosen)?;
            let v = is_maximal(&a, &chosen, *prop)?;
            match v.extending {
                Some(i) => println!("{} {} maximal=false extending={i}", v.truncation, v.property),
                None => println!("{} {} maximal=true", v.truncation, v.property),
            }
            if *oracle {
                let o = oracle_is_maximal(&a, &chosen, *prop)?;
                if o != v.maximal {
                    return Err(oracle_failure(format!("oracle says maximal={o}")));
                }
                eprintln!("oracle agrees");
            }
            Ok(())
        }
    }
}

fn run_solver(cli: &Cli, solver: &Solver) -> Outcome {
    match solver {
        Solver::Greedy {
            family,
            requirements,
            budget,
        } => {
            let a = load_family(family)?;
            let reqs: Vec<usize> = match requirements {
                Some(r) => parse_list(r)?,
                None => (0..a.index_bound()).collect(),
            };
            let out = solve_greedy(&a, &reqs, budget.unwrap_or(a.universe_bound()))?;
            println!("J = {:?}", out.index_map.entries());
            for c in &out.conditions {
                println!("condition {c}");
            }
            if out.partial {
                println!("unsettled {:?}", out.unsettled);
            }
            Ok(())
        }
        Solver::Hyperimmune {
            family,
            steps,
            offset,
            constant,
        } => {
            let a = load_family(family)?;
            let steps = steps.unwrap_or(2 * a.index_bound());
            let f = match constant {
                Some(c) => DominationOracle::constant(*c, steps + 1),
                None => DominationOracle::from_g(&a, steps + 1, *offset)?,
            };
            let out = solve_hyperimmune(&a, &f, steps)?;
            write_trace(cli, &out.trace)?;
            println!("J = {:?}", out.index_map.entries());
            println!("maximal={} exact={}", out.verdict.maximal, out.truncation_exact);
            if let Some(i) = out.verdict.extending {
                println!("extending {i}");
            }
            Ok(())
        }
        Solver::Permitting {
            family,
            stages,
            enumeration,
            audit,
        } => {
            let a = load_family(family)?;
            let stages = stages.unwrap_or(3 * a.index_bound());
            let w = match enumeration {
                Some(p) => CeEnumeration::parse(&read(p)?)?,
                None => CeEnumeration::one_per_stage(stages + 1),
            };
            let out = solve_permitting(&a, &w, stages)?;
            write_trace(cli, &out.state.trace)?;
            println!("J = {:?}", out.index_map.entries());
            println!("maximal={}", out.verdict.maximal);
            if *audit {
                let report = audit_permitting(&out.state.trace, &w, &a)?;
                if !report.passed() {
                    return Err(oracle_failure(report.violations.join("; ")));
                }
                eprintln!("permitting audit passed over {} stages", report.stages);
            }
            Ok(())
        }
    }
}

fn run_adversary(cli: &Cli, mode: &AdversaryMode) -> Outcome {
    let (args, warm) = match mode {
        AdversaryMode::Warmup(a) => (a, true),
        AdversaryMode::Full(a) => (a, false),
    };
    let strategies = parse_strategies(&read(&args.strategies)?)?;
    let stages = match args.stages {
        Some(s) => s,
        None => Bounds::from_env()?.stages,
    };
    let config = AdversaryConfig::new(stages, args.width.unwrap_or(strategies.len()));
    let run = if warm {
        adversary::run_warmup(&strategies, &config)?
    } else {
        adversary::run_full(&strategies, &config)?
    };
    write_trace(cli, &run.trace)?;
    if let Some(out) = &args.out {
        fs::write(out, write_family(&run.family)).with_context(|| format!("writing {}", out.display()))?;
    }
    println!(
        "stages={stages} sets={} universe={} intersections={}",
        run.family.index_bound(),
        run.family.universe_bound(),
        run.stats.intersections
    );
    for (e, spec) in strategies.iter().enumerate() {
        println!(
            "opponent {e} [{spec}]: enumerated={} withheld={} progressive={}",
            run.stats.enumerations[e].len(),
            run.stats.withheld[e],
            run.stats.progressive[e].len()
        );
    }
    if args.audit {
        let report = if warm {
            adversary::audit_warmup(&run.trace)?
        } else {
            adversary::audit_full(&run.trace)?
        };
        print!("{report}");
        if !report.passed() {
            return Err(oracle_failure(format!("{} audit violations", report.violation_count())));
        }
    }
    Ok(())
}

fn run_generic(op: &GenericOp) -> Outcome {
    let c = Coding;
    match op {
        GenericOp::Build { family, targets, budget } => {
            let a = load_family(family)?;
            let targets: Vec<usize> = match targets {
                Some(t) => parse_list(t)?,
                None => (0..a.index_bound()).collect(),
            };
            let budget = budget.unwrap_or(a.universe_bound());
            let q: Vec<DenseSetQuery> = targets.iter().map(|&i| DenseSetQuery { i, budget }).collect();
            println!("{}", build_generic(&a, &c, &q)?.render());
            Ok(())
        }
        GenericOp::Extract {
            family,
            generic,
            precheck,
        } => {
            let a = load_family(family)?;
            if *precheck {
                if let Some(j) = finite_maximal_subfamily(&a)? {
                    println!("J = {:?}", j.entries());
                    println!("precheck");
                    return Ok(());
                }
            }
            let g = BitString::parse(generic)?;
            let ex = extract_subfamily(&g, &a, &c)?;
            println!("J = {:?}", ex.index_map.entries());
            println!("maximal={}", ex.verdict.maximal);
            Ok(())
        }
    }
}

fn run_scenarios(cli: &Cli, args: &ScenarioArgs) -> Outcome {
    if args.list {
        for s in golden_scenarios() {
            println!("{:<22} {:?}", s.name, s.operation);
        }
        return Ok(());
    }
    let mut scenarios = Vec::new();
    if args.all_golden {
        scenarios.extend(golden_scenarios());
    }
    if let Some(name) = &args.golden {
        scenarios.push(harness::golden(name).ok_or_else(|| anyhow!("no golden scenario named `{name}`"))?);
    }
    for f in &args.files {
        scenarios.push(Scenario::load(f)?);
    }
    if scenarios.is_empty() {
        return Err(anyhow!("no scenarios given (files, --golden NAME or --all-golden)").into());
    }
    let mut worst = Status::Pass;
    for s in &scenarios {
        let report = run_scenario(s);
        print!("{}", report.render());
        if args.verbose {
            print!("{}", report.output);
        }
        if scenarios.len() == 1 {
            if let Some(t) = &report.trace {
                write_trace(cli, t)?;
            }
        }
        if args.determinism {
            let bad = determinism_check(s)?;
            if bad.is_empty() {
                println!("  deterministic: two runs and the trace replay agree");
            } else {
                for b in &bad {
                    println!("  {b}");
                }
                worst = worse(worst, Status::OracleFailure);
            }
        }
        worst = worse(worst, report.status);
    }
    match worst {
        Status::Pass => Ok(()),
        status => Err(Failure {
            status,
            message: "some scenarios did not pass".into(),
        }),
    }
}

/// Input errors dominate, then undecided, then oracle failures.
fn worse(a: Status, b: Status) -> Status {
    let rank = |s: Status| match s {
        Status::Pass => 0,
        Status::OracleFailure => 1,
        Status::Undecided => 2,
        Status::InputError => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}
