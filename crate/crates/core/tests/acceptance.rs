//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the model golden files.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use dtalloc::alloc::translate;
use dtalloc::harness::corpus::{self, CorpusEntry};
use dtalloc::harness::{self, render, GenSpec, Report, Totals};
use dtalloc::model::{emit_file, model_type, schemas_used};
use dtalloc::target::{self, Config, Heap};
use dtalloc::{parse, print, Context, ErrorKind, Expr, Lang, Name};

const FUEL: u64 = dtalloc::conv::DEFAULT_FUEL;
const GENERATED: u64 = 500;
const DIFFERENTIAL_GENERATED: u64 = 200;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn load_corpus() -> Vec<CorpusEntry> {
    corpus::load_dir(&manifest().join("corpus")).expect("corpus loads")
}

struct Outcome {
    ok: bool,
    summary: String,
}

fn outcome(ok: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        summary: summary.into(),
    }
}

fn failures(reports: &[Report]) -> String {
    reports
        .iter()
        .filter(|r| !r.passed())
        .take(3)
        .map(|r| format!("\n    {r}"))
        .collect()
}

fn constructors(e: &Expr, out: &mut BTreeSet<&'static str>) {
    out.insert(match e {
        Expr::Var(_) => "var",
        Expr::Univ(_) => "universe",
        Expr::UnitTm => "unit",
        Expr::UnitTy => "Unit",
        Expr::Let { .. } => "let",
        Expr::Code { .. } => "code",
        Expr::CodeTy { .. } => "Code",
        Expr::Clo { .. } => "clo",
        Expr::Pi { .. } => "Pi",
        Expr::App(..) => "app",
        Expr::Pair { .. } => "pair",
        Expr::Sigma { .. } => "Sigma",
        Expr::Fst(_) => "fst",
        Expr::Snd(_) => "snd",
        _ => "target-only",
    });
    for c in e.children() {
        constructors(c, out);
    }
}

fn has_nested_dependent_sigma(e: &Expr) -> bool {
    let here = match e {
        Expr::Sigma { name, dom, cod, .. } => {
            cod.has_free(name)
                && (matches!(**cod, Expr::Sigma { .. }) || matches!(**dom, Expr::Sigma { .. }))
        }
        _ => false,
    };
    here || e.children().into_iter().any(has_nested_dependent_sigma)
}

fn has_rich_closure(e: &Expr) -> bool {
    let here = matches!(e, Expr::Clo { env, .. } if !matches!(**env, Expr::UnitTm));
    here || e.children().into_iter().any(has_rich_closure)
}

fn theorem1(corpus: &[CorpusEntry]) -> Outcome {
    let start = Instant::now();
    let mut reports: Vec<Report> = corpus
        .iter()
        .map(|c| harness::check_preservation(&c.name, &Context::new(), &c.expr))
        .collect();
    for seed in 0..GENERATED {
        let g = harness::gen_typed(&GenSpec::new(4, seed));
        reports.push(harness::check_preservation(&format!("gen{seed:04}"), &g.ctx, &g.expr));
    }
    let elapsed = start.elapsed();

    let mut seen = BTreeSet::new();
    for c in corpus {
        constructors(&c.expr, &mut seen);
    }
    let wanted = [
        "var", "universe", "unit", "Unit", "let", "code", "Code", "clo", "Pi", "app", "pair",
        "Sigma", "fst", "snd",
    ];
    let missing: Vec<&str> = wanted.iter().copied().filter(|k| !seen.contains(k)).collect();
    let nested = corpus.iter().any(|c| has_nested_dependent_sigma(&c.expr));
    let rich = corpus.iter().any(|c| has_rich_closure(&c.expr));
    let t = Totals::of(&reports);
    let ok = corpus.len() >= 30
        && t.all_passed()
        && t.total() as u64 >= 30 + GENERATED
        && missing.is_empty()
        && nested
        && rich
        && elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "{} corpus + {GENERATED} generated, {t}, missing constructors {missing:?}, nested dependent Sigma {nested}, closures with environments {rich}, {:.1}s{}",
            corpus.len(),
            elapsed.as_secs_f64(),
            failures(&reports)
        ),
    )
}

fn lemma4() -> Outcome {
    let mut reports = Vec::new();
    let src = |s: &str| parse(s, Lang::Source).unwrap();
    let x = Name::new("x");
    let ctx = Context::new().with("x", Expr::UnitTy);
    reports.push(harness::check_subst_commute("var", &ctx, &src("x"), &Expr::UnitTm, &x));
    reports.push(harness::check_subst_commute(
        "pair",
        &ctx,
        &src("(pair x x (Sigma (y Unit) Unit))"),
        &Expr::UnitTm,
        &x,
    ));
    for seed in 0..GENERATED {
        let c = harness::gen_subst_case(&GenSpec::new(4, seed));
        reports.push(harness::check_subst_commute(
            &format!("gen{seed:04}"),
            &c.ctx,
            &c.expr,
            &c.value,
            &c.var,
        ));
    }
    let t = Totals::of(&reports);
    outcome(
        t.all_passed() && t.total() as u64 >= GENERATED,
        format!("{} substitution instances, {t}{}", t.total(), failures(&reports)),
    )
}

fn lemma3(corpus: &[CorpusEntry]) -> Outcome {
    let mut reports = Vec::new();
    for c in corpus {
        for (i, (e, _)) in harness::source_step_pairs(&c.expr, FUEL).iter().enumerate() {
            reports.push(harness::check_reduction_preserved(&format!("{}.{i}", c.name), e, FUEL));
        }
    }
    let t = Totals::of(&reports);
    outcome(
        t.all_passed() && t.total() >= 50,
        format!("{} step pairs, {t}{}", t.total(), failures(&reports)),
    )
}

fn differential(corpus: &[CorpusEntry]) -> Outcome {
    let mut reports: Vec<Report> = corpus
        .iter()
        .map(|c| harness::check_differential(&c.name, &c.expr, FUEL))
        .collect();
    for seed in 0..DIFFERENTIAL_GENERATED {
        let (e, _) = harness::gen_closed(&GenSpec::new(4, seed));
        reports.push(harness::check_differential(&format!("gen{seed:04}"), &e, FUEL));
    }
    let t = Totals::of(&reports);
    outcome(
        t.all_passed() && t.total() >= 200,
        format!("{} programs, {t}{}", t.total(), failures(&reports)),
    )
}

fn type_safety(corpus: &[CorpusEntry]) -> Outcome {
    let mut reports = Vec::new();
    let mut cells = 0;
    for c in corpus {
        let t = translate(&Context::new(), &c.expr).expect("corpus compiles").expr;
        let r = harness::check_step_preservation(&c.name, &t, FUEL);
        cells += r.detail.matches("loc=").count();
        reports.push(r);
    }
    let monotone_full = reports
        .iter()
        .flat_map(|r| r.detail.split(", "))
        .filter(|s| s.contains("loc="))
        .all(|s| s.ends_with("(0,0)->(1,0)->(1,1)"));
    let t = Totals::of(&reports);
    outcome(
        t.all_passed() && monotone_full,
        format!(
            "{} compiled programs, {cells} cells, every cell (0,0)->(1,0)->(1,1) {monotone_full}, {t}{}",
            t.total(),
            failures(&reports)
        ),
    )
}

fn negative() -> Outcome {
    let dir = manifest().join("corpus").join("negative");
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).unwrap();
    let tgt_kind = |f: &str| {
        let e = parse(&read(f), Lang::Target).unwrap();
        target::infer(&Heap::new(), &Context::new(), &e).err().map(|err| err.kind)
    };
    let mut lines = Vec::new();
    let mut ok = true;
    let mut expect = |name: &str, got: Option<ErrorKind>, want: Option<ErrorKind>| {
        let good = match want {
            Some(k) => got == Some(k),
            None => got.is_some(),
        };
        ok &= good;
        lines.push(format!("{name}={}", got.map_or("accepted".to_string(), |k| k.to_string())));
    };
    expect("fst_uninit", tgt_kind("fst_uninit.tgt"), Some(ErrorKind::FlagError));
    expect("assign2_uninit", tgt_kind("assign2_uninit.tgt"), Some(ErrorKind::FlagError));
    expect("snd_half", tgt_kind("snd_half.tgt"), Some(ErrorKind::FlagError));
    expect("ctag_not_code", tgt_kind("ctag_not_code.tgt"), None);
    expect("ctag_unit", tgt_kind("ctag_unit.tgt"), None);
    let mut parse_errors = 0;
    for f in ["target_only.src", "target_only_nested.src"] {
        let rejected = parse(&read(f), Lang::Source).is_err();
        ok &= rejected;
        parse_errors += usize::from(rejected);
    }
    outcome(
        ok,
        format!("{}, source parse errors {parse_errors}/2", lines.join(" ")),
    )
}

const SCHEMAS: [(&str, &str); 3] = [
    ("00", "(Sigma (x A 0) (B 0))"),
    ("10", "(Sigma (x A 1) (B 0))"),
    ("11", "(Sigma (x A 1) (B 1))"),
];

fn model_text(input: &str) -> String {
    let ty = parse(input, Lang::Target).unwrap();
    let m = model_type(&ty).expect("schemas are modelled");
    emit_file(input, &schemas_used(&ty), &m)
}

fn goldens() -> Outcome {
    let dir = manifest().join("tests").join("golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut ok = true;
    let mut notes = Vec::new();
    for (tag, input) in SCHEMAS {
        let path = dir.join(format!("model_sigma_{tag}.txt"));
        let first = model_text(input);
        let stable = first == model_text(input);
        if update {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &first).unwrap();
        }
        let matches = std::fs::read_to_string(&path).is_ok_and(|g| g == first);
        ok &= matches && stable;
        notes.push(format!("{tag}: golden {matches}, stable {stable}"));
    }
    outcome(ok, notes.join(", "))
}

fn snapshot(corpus: &[CorpusEntry]) -> String {
    let mut out = String::new();
    let mut reports = Vec::new();
    for seed in 0..50 {
        let g = harness::gen_typed(&GenSpec::new(4, seed));
        reports.push(harness::check_preservation(&format!("gen{seed:04}"), &g.ctx, &g.expr));
        let c = harness::gen_subst_case(&GenSpec::new(4, seed));
        reports.push(harness::check_subst_commute(
            &format!("gen{seed:04}"),
            &c.ctx,
            &c.expr,
            &c.value,
            &c.var,
        ));
    }
    out.push_str(&render(&reports, false));
    out.push_str(&render(&reports, true));
    for c in corpus {
        let t = translate(&Context::new(), &c.expr).unwrap().expr;
        out.push_str(&print(&t, Lang::Target));
        out.push('\n');
        let _ = target::eval_traced(Config::new(t), FUEL, |line| {
            out.push_str(&line.to_string());
            out.push('\n');
        });
    }
    out
}

fn determinism(corpus: &[CorpusEntry]) -> Outcome {
    let a = snapshot(corpus);
    let b = snapshot(corpus);
    outcome(
        a == b,
        format!("reports, compiled output and traces, {} bytes per run", a.len()),
    )
}

fn main() {
    let corpus = load_corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("Theorem-1 suite", Box::new(|| theorem1(&corpus))),
        ("Lemma-4 suite", Box::new(lemma4)),
        ("Lemma-3 suite", Box::new(|| lemma3(&corpus))),
        ("Differential suite", Box::new(|| differential(&corpus))),
        ("Target type-safety smoke", Box::new(|| type_safety(&corpus))),
        ("Negative suite", Box::new(negative)),
        ("Model golden tests", Box::new(goldens)),
        ("Determinism", Box::new(|| determinism(&corpus))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        failed += usize::from(!o.ok);
        println!("{} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.summary);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

