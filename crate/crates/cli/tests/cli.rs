use std::path::PathBuf;
use std::process::{Command, Output};

fn fip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fip"))
        .args(args)
        .env_remove("FIP_STAGE_BOUND")
        .env_remove("FIP_INDEX_BOUND")
        .env_remove("FIP_UNIVERSE_BOUND")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fip-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CHAIN: &str = "family v1 I=3 U=5\nset 0: 0 1\nset 1: 1 2\nset 2: 3 4\n";

#[test]
fn hat_transform_and_replay_agree() {
    let fam = scratch("chain.fam", CHAIN);
    let trace = fam.with_file_name("hat.trace");
    let o = fip(&["hat-transform", "--family", fam.to_str().unwrap(), "--check", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = fip(&["replay", trace.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(stdout(&r), stdout(&o));
}

#[test]
fn malformed_family_exits_with_input_error() {
    let fam = scratch("bad.fam", "family v1 I=2 U=3\nset 0: 3 1\n");
    let o = fip(&["check", "--family", fam.to_str().unwrap(), "--prop", "F"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn truncated_trace_is_flagged_as_partial() {
    let fam = scratch("chain2.fam", CHAIN);
    let trace = fam.with_file_name("cut.trace");
    fip(&["hat-transform", "--family", fam.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    let text = std::fs::read_to_string(&trace).unwrap();
    let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
    std::fs::write(&trace, cut).unwrap();
    let o = fip(&["replay", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn range_round_trip_through_the_cli() {
    let o = fip(&["encode-range", "--table", "1,3,1,0", "--index-bound", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let fam = scratch("range.fam", &stdout(&o));
    let d = fip(&["decode-range", "--family", fam.to_str().unwrap(), "--chosen", "0,1,3", "--prop", "Dbar2"]);
    assert_eq!(d.status.code(), Some(0));
    assert_eq!(stdout(&d).trim(), "range {0,1,3}");
    let bad = fip(&["decode-range", "--family", fam.to_str().unwrap(), "--chosen", "0,1", "--prop", "Dbar2"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn maximality_verdicts() {
    let fam = scratch("chain3.fam", CHAIN);
    let f = fam.to_str().unwrap();
    let o = fip(&["maximal", "--family", f, "--prop", "F", "--chosen", "0", "--oracle"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("maximal=false extending=1"));
    let all = fip(&["maximal", "--family", f, "--prop", "F", "--all"]);
    assert_eq!(stdout(&all), "{0,1}\n{2}\n");
}

#[test]
fn solvers_run() {
    let fam = scratch("chain4.fam", CHAIN);
    let f = fam.to_str().unwrap();
    let g = fip(&["solve", "greedy", "--family", f, "--requirements", "1,2"]);
    assert_eq!(g.status.code(), Some(0));
    assert!(stdout(&g).starts_with("J = [0, 1]"));
    let h = fip(&["solve", "hyperimmune", "--family", f, "--steps", "6"]);
    assert!(stdout(&h).contains("maximal=true"));
    let p = fip(&["solve", "permitting", "--family", f, "--stages", "10", "--audit"]);
    assert_eq!(p.status.code(), Some(0), "{}", String::from_utf8_lossy(&p.stderr));
}

#[test]
fn adversary_runs_audit_clean_and_honor_the_stage_variable() {
    let strategies = scratch("strategies.txt", "# opponents\ngreedy delay=1\nsilent\n");
    let trace = strategies.with_file_name("adv.trace");
    let o = Command::new(env!("CARGO_BIN_EXE_fip"))
        .args(["adversary", "full", "--strategies", strategies.to_str().unwrap(), "--audit", "--trace"])
        .arg(&trace)
        .env("FIP_STAGE_BOUND", "40")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("stages=40 "));
    let r = fip(&["replay", trace.to_str().unwrap(), "--audit", "full"]);
    assert_eq!(r.status.code(), Some(0));
    let w = fip(&["adversary", "warmup", "--strategies", strategies.to_str().unwrap(), "--stages", "50", "--audit"]);
    assert_eq!(w.status.code(), Some(0));
}

#[test]
fn json_lines_traces() {
    let fam = scratch("chain5.fam", CHAIN);
    let trace = fam.with_file_name("hat.jsonl");
    fip(&["--format", "json-lines", "hat-transform", "--family", fam.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with('{')));
    assert_eq!(fip(&["replay", trace.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn golden_scenarios_pass_deterministically() {
    let o = fip(&["scenario", "--all-golden", "--determinism"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn scenario_files() {
    let fam = scratch("sc.fam", CHAIN);
    let sc = scratch(
        "zero.toml",
        "name = \"zero-guide\"\noperation = \"solve-hyperimmune\"\nexpected = \"maximality\"\n[inputs]\nfamily = \"sc.fam\"\nconstant = 0\nstages = 4\n",
    );
    let _ = fam;
    assert_eq!(fip(&["scenario", sc.to_str().unwrap()]).status.code(), Some(1));
    let bad = scratch("bad.toml", "name = \"x\"\noperation = \"hat-transform\"\n[inputs]\nfamily = \"missing.fam\"\n");
    assert_eq!(fip(&["scenario", bad.to_str().unwrap()]).status.code(), Some(2));
}
