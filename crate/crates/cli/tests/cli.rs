use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(name)
}

fn dtalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtalloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_prints_type() {
    let o = dtalloc(&["check", path(&corpus("pair_unit.src"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("(Sigma"));
}

#[test]
fn compile_emits_allocation_chain() {
    let o = dtalloc(&["compile", path(&corpus("pair_unit.src"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for op in ["malloc", "assign1", "assign2"] {
        assert!(out.contains(op), "{out}");
    }
    assert!(!out.contains("(pair "));
}

#[test]
fn compile_output_checks_as_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pair.tgt");
    let o = dtalloc(&["compile", path(&corpus("pair_unit.src")), "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let o = dtalloc(&["check", path(&out), "--lang", "target"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn trace_shows_flags_advancing() {
    let o = dtalloc(&["run", path(&corpus("pair.tgt")), "--lang", "target", "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let steps: Vec<&str> = out.lines().filter(|l| l.starts_with("STEP")).collect();
    assert!(!steps.is_empty());
    assert!(steps.iter().any(|l| l.contains("flags=(1,0)")));
    assert!(steps.last().unwrap().contains("flags=(1,1)"));
    assert!(out.contains("observation:"));
}

#[test]
fn run_source_and_target_agree() {
    let src = dtalloc(&["run", path(&corpus("pair_unit.src"))]);
    let tgt = dtalloc(&["run", path(&corpus("pair.tgt")), "--lang", "target"]);
    let obs = |o: &Output| {
        stdout(o)
            .lines()
            .find(|l| l.starts_with("observation:"))
            .map(str::to_string)
    };
    assert!(obs(&src).is_some());
    assert_eq!(obs(&src), obs(&tgt));
}

#[test]
fn flag_error_exits_one() {
    let o = dtalloc(&["check", path(&corpus("negative/fst_uninit.tgt")), "--lang", "target"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FlagError"));
}

#[test]
fn target_syntax_in_source_is_parse_error() {
    let o = dtalloc(&["check", path(&corpus("negative/target_only.src"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fuel_exhaustion_exits_three() {
    let o = dtalloc(&["run", path(&corpus("let_chain.src")), "--fuel", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_four() {
    assert_eq!(dtalloc(&["frobnicate", "x"]).status.code(), Some(4));
    assert_eq!(dtalloc(&["check"]).status.code(), Some(4));
    assert_eq!(dtalloc(&["check", "/nonexistent/file.src"]).status.code(), Some(4));
    let o = dtalloc(&["compile", path(&corpus("pair.tgt")), "--lang", "target"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn preserve_reports_every_property() {
    let o = dtalloc(&["preserve", path(&corpus("let_chain.src"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for prop in [
        "Theorem1",
        "Lemma1",
        "Lemma2",
        "Lemma3",
        "Lemma4",
        "Differential",
        "StepPreservation",
    ] {
        assert!(out.contains(prop), "missing {prop} in {out}");
    }
    assert!(out.contains("failed=0 fuel=0"));
}

#[test]
fn preserve_json_lines_parse() {
    let o = dtalloc(&["preserve", path(&corpus("pair_unit.src")), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let reports: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let (footer, cases) = reports.split_last().unwrap();
    assert!(!cases.is_empty());
    assert!(cases.iter().all(|r| r["verdict"] == "pass"));
    assert_eq!(footer["failed"], 0);
    assert_eq!(footer["passed"], cases.len());
}

#[test]
fn model_of_pair() {
    let o = dtalloc(&["model", path(&corpus("pair_unit.src"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("-- schemas:"));
    assert!(out.contains("Just"));
}

#[test]
fn gen_is_deterministic_and_well_typed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = dtalloc(&["gen", "--seed", "7", "--count", "5", "--depth", "3", "-o", path(d.path())]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5);
    assert_eq!(names[0], "gen_000007.src");
    for n in &names {
        let x = fs::read(a.path().join(n)).unwrap();
        assert_eq!(x, fs::read(b.path().join(n)).unwrap());
        let o = dtalloc(&["check", path(&a.path().join(n))]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tgt = corpus("pair.tgt");
    let args = ["run", path(&tgt), "--lang", "target", "--trace"];
    let first = dtalloc(&args);
    let second = dtalloc(&args);
    assert_eq!(first.stdout, second.stdout);
    let src = corpus("let_chain.src");
    let args = ["preserve", path(&src), "--json"];
    assert_eq!(dtalloc(&args).stdout, dtalloc(&args).stdout);
}
