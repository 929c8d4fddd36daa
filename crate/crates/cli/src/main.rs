use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use dtalloc::alloc::{translate, TransError};
use dtalloc::conv::DEFAULT_FUEL;
use dtalloc::harness::{self, GenSpec, Report};
use dtalloc::model::{emit_file, model_term, schemas_used};
use dtalloc::parse::Spans;
use dtalloc::target::{self, Config};
use dtalloc::{parse_with_spans, print, source, Context, Expr, Lang, TypeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Type check a program and print its type
    Check,
    /// Translate a source program to the target language
    Compile,
    /// Evaluate a program
    Run,
    /// Check the preservation properties on a source program
    Preserve,
    /// Emit the Maybe-pair model of a program
    Model,
    /// Write randomly generated well-typed source programs
    Gen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LangArg {
    Source,
    Target,
}

#[derive(Debug, Parser)]
#[command(name = "dtalloc", version, about = "Allocation pass from CC-CC to CC-CC-A")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Input program (not used by gen)
    file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "source")]
    lang: LangArg,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// Print one line per reduction step
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    depth: u32,
    #[arg(long, default_value_t = 100)]
    count: u64,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
    /// Output file (a directory for gen)
    #[arg(short = 'o')]
    output: Option<PathBuf>,
}

const OK: u8 = 0;
const TYPE_ERROR: u8 = 1;
const PARSE_ERROR: u8 = 2;
const FUEL_OR_STUCK: u8 = 3;
const USAGE: u8 = 4;

/// A diagnostic and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CliResult = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { USAGE } else { OK };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let mut stdout = io::stdout().lock();
    let result = run(&cli, &mut stdout).and_then(|out| deliver(&cli, &out, &mut stdout));
    match result {
        Ok(()) => ExitCode::from(OK),
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("{}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

/// Writes the main result to `-o` or stdout.
fn deliver(cli: &Cli, out: &str, stdout: &mut impl Write) -> Result<(), Failure> {
    match &cli.output {
        Some(path) if cli.command != Command::Gen => fs::write(path, out)
            .map_err(|e| fail(USAGE, format!("error: cannot write {}: {e}", path.display()))),
        _ => stdout
            .write_all(out.as_bytes())
            .map_err(|e| fail(USAGE, format!("error: {e}"))),
    }
}

fn lang(cli: &Cli) -> Lang {
    match cli.lang {
        LangArg::Source => Lang::Source,
        LangArg::Target => Lang::Target,
    }
}

fn input(cli: &Cli) -> Result<(PathBuf, String), Failure> {
    let path = cli
        .file
        .clone()
        .ok_or_else(|| fail(USAGE, format!("error: {:?} needs an input file", cli.command)))?;
    let text = fs::read_to_string(&path)
        .map_err(|e| fail(USAGE, format!("error: cannot read {}: {e}", path.display())))?;
    Ok((path, text))
}

fn parsed(cli: &Cli) -> Result<(PathBuf, String, Expr, Spans), Failure> {
    let (path, text) = input(cli)?;
    let (e, spans) = parse_with_spans(&text, lang(cli))
        .map_err(|e| fail(PARSE_ERROR, format!("{}: {e}", path.display())))?;
    Ok((path, text, e, spans))
}

fn type_failure(path: &Path, err: &TypeError, spans: &Spans) -> Failure {
    let code = if err.is_fuel_exhausted() { FUEL_OR_STUCK } else { TYPE_ERROR };
    fail(code, format!("{}: {}", path.display(), err.render(spans)))
}

fn infer(cli: &Cli, e: &Expr) -> Result<Expr, TypeError> {
    match lang(cli) {
        Lang::Source => source::infer_with_fuel(&Context::new(), e, cli.fuel),
        Lang::Target => target::infer_with_fuel(&target::Heap::new(), &Context::new(), e, cli.fuel),
    }
}

fn run(cli: &Cli, stdout: &mut impl Write) -> CliResult {
    match cli.command {
        Command::Check => check(cli),
        Command::Compile => compile(cli),
        Command::Run => run_program(cli, stdout),
        Command::Preserve => preserve(cli),
        Command::Model => model(cli),
        Command::Gen => gen(cli),
    }
}

fn check(cli: &Cli) -> CliResult {
    let (path, _, e, spans) = parsed(cli)?;
    let ty = infer(cli, &e).map_err(|err| type_failure(&path, &err, &spans))?;
    let printed = print(&ty, lang(cli));
    Ok(if cli.json {
        format!("{}\n", json!({ "type": printed }))
    } else {
        format!("{printed}\n")
    })
}

fn require_source(cli: &Cli) -> Result<(), Failure> {
    if lang(cli) == Lang::Source {
        Ok(())
    } else {
        Err(fail(
            USAGE,
            format!("error: {:?} takes a source program", cli.command),
        ))
    }
}

fn compile_expr(path: &Path, e: &Expr, spans: &Spans) -> Result<Expr, Failure> {
    match translate(&Context::new(), e) {
        Ok(out) => Ok(out.expr),
        Err(TransError::Type(err)) => Err(type_failure(path, &err, spans)),
        Err(err) => Err(fail(TYPE_ERROR, format!("{}: {err}", path.display()))),
    }
}

fn compile(cli: &Cli) -> CliResult {
    require_source(cli)?;
    let (path, _, e, spans) = parsed(cli)?;
    let t = compile_expr(&path, &e, &spans)?;
    let printed = print(&t, Lang::Target);
    Ok(if cli.json {
        format!("{}\n", json!({ "term": printed }))
    } else {
        format!("{printed}\n")
    })
}

fn run_program(cli: &Cli, stdout: &mut impl Write) -> CliResult {
    let (path, _, e, spans) = parsed(cli)?;
    infer(cli, &e).map_err(|err| type_failure(&path, &err, &spans))?;
    let mut emit = |line: String| {
        let _ = writeln!(stdout, "{line}");
    };
    match lang(cli) {
        Lang::Source => {
            let v = source::eval_traced(&e, cli.fuel, |k, next| {
                if cli.trace {
                    emit(format!("STEP {k} | {}", print(next, Lang::Source)));
                }
            })
            .map_err(|err| fail(FUEL_OR_STUCK, format!("{}: {err}", path.display())))?;
            let obs = harness::readback_source(&v)
                .map(|o| o.to_string())
                .unwrap_or_else(|err| err);
            let value = print(&v, Lang::Source);
            Ok(if cli.json {
                format!("{}\n", json!({ "value": value, "observation": obs }))
            } else {
                format!("value: {value}\nobservation: {obs}\n")
            })
        }
        Lang::Target => {
            let cfg = target::eval_traced(Config::new(e), cli.fuel, |line| {
                if cli.trace {
                    emit(line.to_string());
                }
            })
            .map_err(|err| fail(FUEL_OR_STUCK, format!("{}: {err}", path.display())))?;
            let obs = harness::readback(&cfg)
                .map(|o| o.to_string())
                .unwrap_or_else(|err| err);
            let value = print(&cfg.expr, Lang::Target);
            let heap = cfg.heap.summary();
            Ok(if cli.json {
                format!(
                    "{}\n",
                    json!({ "value": value, "heap": heap, "observation": obs })
                )
            } else {
                format!("value: {value}\nheap: {heap}\nobservation: {obs}\n")
            })
        }
    }
}

fn preserve(cli: &Cli) -> CliResult {
    require_source(cli)?;
    let (path, _, e, spans) = parsed(cli)?;
    let ctx = Context::new();
    let ty = source::infer_with_fuel(&ctx, &e, cli.fuel)
        .map_err(|err| type_failure(&path, &err, &spans))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string());

    let mut reports: Vec<Report> = vec![harness::check_preservation(&id, &ctx, &e)];
    if let Ok(nf) = source::normalize(&ctx, &ty, cli.fuel) {
        reports.push(harness::check_subtype_preserved(&id, &ctx, &ty, &nf));
    }
    if let Ok(nf) = source::normalize(&ctx, &e, cli.fuel) {
        reports.push(harness::check_equiv_preserved(&id, &ctx, &e, &nf));
    }
    // An outermost let is a substitution instance.
    if let Expr::Let {
        name,
        bound,
        annot,
        body,
    } = &e
    {
        let inner = Context::new().with(name.clone(), (**annot).clone());
        reports.push(harness::check_subst_commute(&format!("{id}.let"), &inner, body, bound, name));
    }
    for (i, (from, _)) in harness::source_step_pairs(&e, cli.fuel).iter().enumerate() {
        reports.push(harness::check_reduction_preserved(
            &format!("{id}.step{i:03}"),
            from,
            cli.fuel,
        ));
    }
    reports.push(harness::check_differential(&id, &e, cli.fuel));
    if let Ok(out) = translate(&ctx, &e) {
        reports.push(harness::check_step_preservation(&id, &out.expr, cli.fuel));
    }

    let text = harness::render(&reports, cli.json);
    let totals = harness::Totals::of(&reports);
    if totals.failed > 0 {
        Err(Failure {
            code: TYPE_ERROR,
            message: text,
        })
    } else if totals.fuel > 0 {
        Err(Failure {
            code: FUEL_OR_STUCK,
            message: text,
        })
    } else {
        Ok(text)
    }
}

fn model(cli: &Cli) -> CliResult {
    let (path, text, e, spans) = parsed(cli)?;
    infer(cli, &e).map_err(|err| type_failure(&path, &err, &spans))?;
    let t = match lang(cli) {
        Lang::Source => compile_expr(&path, &e, &spans)?,
        Lang::Target => e,
    };
    let m = model_term(&t).map_err(|err| fail(TYPE_ERROR, format!("{}: {err}", path.display())))?;
    Ok(emit_file(&text, &schemas_used(&t), &m))
}

fn gen(cli: &Cli) -> CliResult {
    if let Some(dir) = &cli.output {
        fs::create_dir_all(dir)
            .map_err(|e| fail(USAGE, format!("error: cannot create {}: {e}", dir.display())))?;
    }
    let mut listing = String::new();
    for seed in cli.seed..cli.seed.saturating_add(cli.count) {
        let (e, ty) = harness::gen_closed(&GenSpec::new(cli.depth, seed));
        let body = format!(
            "; seed {seed} depth {}\n; type {}\n{}\n",
            cli.depth,
            print(&ty, Lang::Source),
            print(&e, Lang::Source)
        );
        match &cli.output {
            Some(dir) => {
                let path = dir.join(format!("gen_{seed:06}.src"));
                fs::write(&path, &body)
                    .map_err(|e| fail(USAGE, format!("error: cannot write {}: {e}", path.display())))?;
                listing.push_str(&format!("{}\n", path.display()));
            }
            None => {
                listing.push_str(&body);
                listing.push('\n');
            }
        }
    }
    Ok(listing)
}
