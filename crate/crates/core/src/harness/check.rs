use std::collections::BTreeMap;
use std::fmt;

use crate::alloc::{translate, translate_ctx, translate_unchecked, TransError};
use crate::error::TypeError;
use crate::source;
use crate::syntax::{subst, Context, Expr, Flag, Location, Name};
use crate::target::{self, Config, Heap, Slot};

use super::report::{Property, Report};

/// Ground result of a run. Closures and types are opaque.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observation {
    OUnit,
    OPair(Box<Observation>, Box<Observation>),
    OClo,
    OType,
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::OUnit => f.write_str("unit"),
            Observation::OPair(a, b) => write!(f, "(pair {a} {b})"),
            Observation::OClo => f.write_str("<closure>"),
            Observation::OType => f.write_str("<type>"),
        }
    }
}

fn is_type_value(e: &Expr) -> bool {
    matches!(
        e,
        Expr::UnitTy | Expr::Univ(_) | Expr::Pi { .. } | Expr::Sigma { .. } | Expr::CodeTy { .. }
    )
}

/// Observation of a source value.
pub fn readback_source(e: &Expr) -> Result<Observation, String> {
    match e {
        Expr::UnitTm => Ok(Observation::OUnit),
        Expr::Pair { fst, snd, .. } => Ok(Observation::OPair(
            Box::new(readback_source(fst)?),
            Box::new(readback_source(snd)?),
        )),
        Expr::Clo { .. } | Expr::Code { .. } => Ok(Observation::OClo),
        e if is_type_value(e) => Ok(Observation::OType),
        other => Err(format!("not a source value: {other}")),
    }
}

/// Observation of a terminal configuration, following locations through
/// the heap.
pub fn readback(cfg: &Config) -> Result<Observation, String> {
    readback_in(&cfg.heap, &cfg.expr)
}

fn readback_in(heap: &Heap, e: &Expr) -> Result<Observation, String> {
    match e {
        Expr::UnitTm => Ok(Observation::OUnit),
        Expr::Loc(l) => {
            let cell = heap.cell(*l).ok_or_else(|| format!("dangling location {l}"))?;
            match (&cell.slot1, &cell.slot2) {
                (Slot::Init(a), Slot::Init(b)) => Ok(Observation::OPair(
                    Box::new(readback_in(heap, a)?),
                    Box::new(readback_in(heap, b)?),
                )),
                _ => Err(format!("location {l} is not fully initialized")),
            }
        }
        Expr::CTag(t) if matches!(**t, Expr::Loc(_)) => Ok(Observation::OClo),
        Expr::Clo { .. } | Expr::Code { .. } => Ok(Observation::OClo),
        e if is_type_value(e) => Ok(Observation::OType),
        other => Err(format!("not a target value: {other}")),
    }
}

fn trans_failure(id: &str, p: Property, what: &str, err: TransError) -> Report {
    match err {
        TransError::Type(e) if e.is_fuel_exhausted() => Report::fuel(id, p, format!("{what}: {e}")),
        err => Report::fail(id, p, format!("{what}: {err}")),
    }
}

fn type_failure(id: &str, p: Property, what: &str, err: TypeError) -> Report {
    if err.is_fuel_exhausted() {
        Report::fuel(id, p, format!("{what}: {err}"))
    } else {
        Report::fail(id, p, format!("{what}: {err}"))
    }
}

/// Type preservation: the translation of `e` checks in the translated
/// context at a subtype of the translated type.
pub fn check_preservation(id: &str, ctx: &Context, e: &Expr) -> Report {
    let p = Property::Theorem1;
    let ty = match source::infer(ctx, e) {
        Ok(ty) => ty,
        Err(err) => return type_failure(id, p, &format!("source term {e} is ill-typed"), err),
    };
    let out = match translate(ctx, e) {
        Ok(out) => out.expr,
        Err(err) => return trans_failure(id, p, &format!("translating {e}"), err),
    };
    let tctx = match translate_ctx(ctx) {
        Ok(c) => c,
        Err(err) => return trans_failure(id, p, "translating context", err),
    };
    let want = match translate_unchecked(ctx, &ty) {
        Ok(t) => t,
        Err(err) => return trans_failure(id, p, &format!("translating type {ty}"), err),
    };
    let heap = Heap::new();
    let got = match target::infer(&heap, &tctx, &out) {
        Ok(t) => t,
        Err(err) => return type_failure(id, p, &format!("translation {out} of {e}"), err),
    };
    match target::subtype(&heap, &tctx, &got, &want) {
        Ok(true) => Report::pass(id, p, format!("{e} : {ty}")),
        Ok(false) => Report::fail(
            id,
            p,
            format!("translation of {e} has type {got}, expected a subtype of {want}"),
        ),
        Err(err) => Report::fuel(id, p, format!("comparing {got} with {want}: {err}")),
    }
}

/// Subtyping is preserved: `a ≼ b` in the source gives `⟦a⟧ ≼ ⟦b⟧`.
pub fn check_subtype_preserved(id: &str, ctx: &Context, a: &Expr, b: &Expr) -> Report {
    let p = Property::Lemma1;
    match source::subtype(ctx, a, b) {
        Ok(true) => {}
        Ok(false) => return Report::fail(id, p, format!("premise {a} <= {b} does not hold")),
        Err(err) => return Report::fuel(id, p, err.to_string()),
    }
    related(id, p, ctx, a, b, target::subtype)
}

/// Equivalence is preserved: `a ≡ b` in the source gives `⟦a⟧ ≡ ⟦b⟧`.
pub fn check_equiv_preserved(id: &str, ctx: &Context, a: &Expr, b: &Expr) -> Report {
    let p = Property::Lemma2;
    match source::equiv(ctx, a, b) {
        Ok(true) => {}
        Ok(false) => return Report::fail(id, p, format!("premise {a} == {b} does not hold")),
        Err(err) => return Report::fuel(id, p, err.to_string()),
    }
    related(id, p, ctx, a, b, target::equiv)
}

type Relation = fn(&Heap, &Context, &Expr, &Expr) -> Result<bool, crate::FuelExhausted>;

fn related(id: &str, p: Property, ctx: &Context, a: &Expr, b: &Expr, rel: Relation) -> Report {
    let (ta, tb, tctx) = match (
        translate_unchecked(ctx, a),
        translate_unchecked(ctx, b),
        translate_ctx(ctx),
    ) {
        (Ok(x), Ok(y), Ok(c)) => (x, y, c),
        (Err(err), _, _) | (_, Err(err), _) | (_, _, Err(err)) => {
            return trans_failure(id, p, "translation", err)
        }
    };
    match rel(&Heap::new(), &tctx, &ta, &tb) {
        Ok(true) => Report::pass(id, p, format!("{a} ~ {b}")),
        Ok(false) => Report::fail(id, p, format!("{ta} and {tb} are not related")),
        Err(err) => Report::fuel(id, p, err.to_string()),
    }
}

/// Substitution commutes with the translation:
/// `⟦e[v/x]⟧ ≡ ⟦e⟧[⟦v⟧/x]`. `ctx` must bind `x`; `v` is typed in the part of
/// `ctx` before `x`.
pub fn check_subst_commute(id: &str, ctx: &Context, e: &Expr, v: &Expr, x: &Name) -> Report {
    let p = Property::Lemma4;
    let outer = ctx.without(x);
    let lhs = match translate(&outer, &subst(e, v, x)) {
        Ok(out) => out.expr,
        Err(err) => return trans_failure(id, p, "translating substituted term", err),
    };
    let (te, tv) = match (translate(ctx, e), translate(&outer, v)) {
        (Ok(a), Ok(b)) => (a.expr, b.expr),
        (Err(err), _) | (_, Err(err)) => return trans_failure(id, p, "translating parts", err),
    };
    let rhs = subst(&te, &tv, x);
    let tctx = match translate_ctx(&outer) {
        Ok(c) => c,
        Err(err) => return trans_failure(id, p, "translating context", err),
    };
    match target::equiv(&Heap::new(), &tctx, &lhs, &rhs) {
        Ok(true) => Report::pass(id, p, format!("{e} [{v}/{x}]")),
        Ok(false) => Report::fail(
            id,
            p,
            format!("e = {e}, v = {v}, x = {x}: {lhs} is not equivalent to {rhs}"),
        ),
        Err(err) => Report::fuel(id, p, format!("e = {e}, v = {v}, x = {x}: {err}")),
    }
}

/// Every `(e, e')` with `e ▷ e'` on the way from `e` to its value.
pub fn source_step_pairs(e: &Expr, fuel: u64) -> Vec<(Expr, Expr)> {
    let mut pairs = Vec::new();
    let mut prev = e.clone();
    let _ = source::eval_traced(e, fuel, |_, next| {
        pairs.push((prev.clone(), next.clone()));
        prev = next.clone();
    });
    pairs
}

/// Reduction is preserved: for `e ▷ e'`, running `⟦e⟧` from the empty heap
/// stays convertible with `⟦e'⟧` at every configuration up to its value.
pub fn check_reduction_preserved(id: &str, e: &Expr, fuel: u64) -> Report {
    let p = Property::Lemma3;
    let next = match source::step(e) {
        Ok(source::Step::Stepped(n)) => n,
        Ok(source::Step::Value) => return Report::fail(id, p, format!("{e} is a value")),
        Err(err) => return Report::fail(id, p, format!("source {err}")),
    };
    let (te, tn) = match (translate(&Context::new(), e), translate(&Context::new(), &next)) {
        (Ok(a), Ok(b)) => (a.expr, b.expr),
        (Err(err), _) | (_, Err(err)) => return trans_failure(id, p, "translation", err),
    };
    let ctx = Context::new();
    let mut cfg = Config::new(te);
    let mut k = 0;
    loop {
        match target::equiv(&cfg.heap, &ctx, &cfg.expr, &tn) {
            Ok(true) => {}
            Ok(false) => {
                return Report::fail(
                    id,
                    p,
                    format!(
                        "{e} steps to {next}, but target configuration {k} ({} with heap {}) is not equivalent to {tn}",
                        cfg.expr,
                        cfg.heap.summary()
                    ),
                )
            }
            Err(err) => return Report::fuel(id, p, format!("at target step {k}: {err}")),
        }
        if k >= fuel {
            return Report::fuel(id, p, format!("target did not finish in {fuel} steps"));
        }
        match target::step(&cfg) {
            Ok(target::Step::Value) => break,
            Ok(target::Step::Stepped(c, _)) => {
                cfg = c;
                k += 1;
            }
            Err(err) => return Report::fail(id, p, format!("target {err}")),
        }
    }
    Report::pass(id, p, format!("{e} ▷ {next}; {k} target steps"))
}

/// Running `e` and running its translation give the same observation.
pub fn check_differential(id: &str, e: &Expr, fuel: u64) -> Report {
    let p = Property::Differential;
    let sv = match source::eval(e, fuel) {
        Ok(v) => v,
        Err(source::EvalError::FuelExhausted { .. }) => {
            return Report::fuel(id, p, format!("source run of {e}"))
        }
        Err(err) => return Report::fail(id, p, format!("source run of {e}: {err}")),
    };
    let te = match translate(&Context::new(), e) {
        Ok(out) => out.expr,
        Err(err) => return trans_failure(id, p, "translation", err),
    };
    let cfg = match target::eval(Config::new(te), fuel) {
        Ok(c) => c,
        Err(target::EvalError::FuelExhausted { .. }) => {
            return Report::fuel(id, p, format!("target run of {e}"))
        }
        Err(err) => return Report::fail(id, p, format!("target run of {e}: {err}")),
    };
    match (readback_source(&sv), readback(&cfg)) {
        (Ok(a), Ok(b)) if a.to_string() == b.to_string() => Report::pass(id, p, a.to_string()),
        (Ok(a), Ok(b)) => Report::fail(id, p, format!("{e}: source gives {a}, target gives {b}")),
        (Err(err), _) | (_, Err(err)) => Report::fail(id, p, format!("{e}: {err}")),
    }
}

fn flag_bits(f: (Flag, Flag)) -> (u8, u8) {
    (f.0.bit(), f.1.bit())
}

/// Runs a closed target program, re-checking the configuration after each
/// step: it must stay well typed at a subtype of the previous type, the
/// heap must stay well formed, and flags may only move
/// `(0,0) → (1,0) → (1,1)`.
pub fn check_step_preservation(id: &str, t: &Expr, fuel: u64) -> Report {
    let p = Property::StepPreservation;
    let ctx = Context::new();
    let mut cfg = Config::new(t.clone());
    let mut ty = match target::infer(&cfg.heap, &ctx, t) {
        Ok(ty) => ty,
        Err(err) => return type_failure(id, p, &format!("initial program {t}"), err),
    };
    let mut flags: BTreeMap<Location, Vec<(u8, u8)>> = BTreeMap::new();
    let mut k = 0;
    loop {
        if k >= fuel {
            return Report::fuel(id, p, format!("{t} did not finish in {fuel} steps"));
        }
        let next = match target::step(&cfg) {
            Ok(target::Step::Value) => break,
            Ok(target::Step::Stepped(c, _)) => c,
            Err(err) => return Report::fail(id, p, format!("step {}: {err}", k + 1)),
        };
        k += 1;
        let here = format!("step {k} of {t}: {}", next.expr);
        let new_ty = match target::infer(&next.heap, &ctx, &next.expr) {
            Ok(ty) => ty,
            Err(err) => return type_failure(id, p, &here, err),
        };
        match target::subtype(&next.heap, &ctx, &new_ty, &ty) {
            Ok(true) => {}
            Ok(false) => {
                return Report::fail(id, p, format!("{here}: type {new_ty} is not a subtype of {ty}"))
            }
            Err(err) => return Report::fuel(id, p, format!("{here}: {err}")),
        }
        let wf = target::heap_wf(&next.heap);
        if !wf.ok() {
            return Report::fail(id, p, format!("{here}: {}", wf.problems.join("; ")));
        }
        for (l, cell) in next.heap.cells() {
            let now = flag_bits(cell.flags());
            let hist = flags.entry(l).or_default();
            let ok = match hist.last() {
                None => now == (0, 0),
                Some(&prev) => prev == now || matches!((prev, now), ((0, 0), (1, 0)) | ((1, 0), (1, 1))),
            };
            if !ok {
                return Report::fail(id, p, format!("{here}: loc={l} flags moved {hist:?} -> {now:?}"));
            }
            if hist.last() != Some(&now) {
                hist.push(now);
            }
        }
        cfg = next;
        ty = new_ty;
    }
    let trace: Vec<String> = flags
        .iter()
        .map(|(l, h)| {
            let hs: Vec<String> = h.iter().map(|(a, b)| format!("({a},{b})")).collect();
            format!("loc={l} {}", hs.join("->"))
        })
        .collect();
    Report::pass(id, p, format!("{k} steps; {}", trace.join(", ")))
}
