//! The target calculus: heap, configurations, type checking and the
//! call-by-value machine over `⟨heap, expr⟩`.

use std::fmt;

use thiserror::Error;

use crate::conv::{self, DEFAULT_FUEL};
use crate::error::{ErrorKind, FuelExhausted, TypeError};
use crate::syntax::{subst, subst_many, Context, Expr, Flag, Lang, Location};
use crate::typing::{check_lang, Checker};

/// One half of a two-word cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Slot {
    Uninit,
    Init(Expr),
}

impl Slot {
    pub fn value(&self) -> Option<&Expr> {
        match self {
            Slot::Uninit => None,
            Slot::Init(v) => Some(v),
        }
    }

    fn flag(&self) -> Flag {
        match self {
            Slot::Uninit => Flag::Uninit,
            Slot::Init(_) => Flag::Init,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeapCell {
    /// A flagged Σ-type whose flags track the slots.
    pub cell_type: Expr,
    pub slot1: Slot,
    pub slot2: Slot,
}

impl HeapCell {
    pub fn flags(&self) -> (Flag, Flag) {
        match &self.cell_type {
            Expr::Sigma { flag1, flag2, .. } => (*flag1, *flag2),
            _ => (self.slot1.flag(), self.slot2.flag()),
        }
    }

    /// The allocation chain that rebuilds this cell:
    /// `malloc`, then `assign1`/`assign2` for each initialized slot.
    pub fn construction(&self) -> Expr {
        let Expr::Sigma { name, dom, cod, .. } = &self.cell_type else {
            return Expr::UnitTm;
        };
        let mut e = Expr::malloc(name.clone(), (**dom).clone(), (**cod).clone());
        if let Slot::Init(v) = &self.slot1 {
            e = Expr::assign1(e, v.clone());
        }
        if let Slot::Init(v) = &self.slot2 {
            e = Expr::assign2(e, v.clone());
        }
        e
    }

    fn set_flags(&mut self, f1: Flag, f2: Flag) {
        if let Expr::Sigma { flag1, flag2, .. } = &mut self.cell_type {
            *flag1 = f1;
            *flag2 = f2;
        }
    }
}

/// Cells are never freed, so the domain is always `0..len`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Heap {
    cells: Vec<HeapCell>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn cell(&self, l: Location) -> Option<&HeapCell> {
        self.cells.get(l.0)
    }

    pub fn cells(&self) -> impl Iterator<Item = (Location, &HeapCell)> {
        self.cells.iter().enumerate().map(|(i, c)| (Location(i), c))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn next_loc(&self) -> Location {
        Location(self.cells.len())
    }

    /// Allocates a cell for `Σ x:A⁰.B⁰` with both slots uninitialized.
    pub fn alloc(&mut self, cell_type: Expr) -> Location {
        let l = self.next_loc();
        let mut cell = HeapCell {
            cell_type,
            slot1: Slot::Uninit,
            slot2: Slot::Uninit,
        };
        cell.set_flags(Flag::Uninit, Flag::Uninit);
        self.cells.push(cell);
        l
    }

    /// Inserts a cell verbatim. Intended for building test configurations;
    /// [`heap_wf`] reports any inconsistency.
    pub fn push_cell(&mut self, cell: HeapCell) -> Location {
        let l = self.next_loc();
        self.cells.push(cell);
        l
    }

    /// `loc=N flags=(f1,f2)` per cell.
    pub fn summary(&self) -> String {
        if self.cells.is_empty() {
            return "empty".to_string();
        }
        self.cells()
            .map(|(l, c)| {
                let (f1, f2) = c.flags();
                format!("loc={l} flags=({f1},{f2})")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Machine state `⟨heap, expr⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub heap: Heap,
    pub expr: Expr,
}

impl Config {
    pub fn new(expr: Expr) -> Self {
        Config {
            heap: Heap::new(),
            expr,
        }
    }
}

/// Name of the reduction rule that fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Malloc,
    Assign1,
    Assign2,
    Fst,
    Snd,
    AppCtag,
    AppClo,
    Let,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Malloc => "malloc",
            Rule::Assign1 => "assign1",
            Rule::Assign2 => "assign2",
            Rule::Fst => "fst",
            Rule::Snd => "snd",
            Rule::AppCtag => "app-ctag",
            Rule::AppClo => "app-clo",
            Rule::Let => "let",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("stuck: {reason} in {expr}")]
pub struct Stuck {
    pub reason: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Stepped(Config, Rule),
    Value,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Stuck(#[from] Stuck),
    #[error("fuel exhausted after {steps} steps")]
    FuelExhausted { steps: u64, last: Box<Config> },
}

fn checker(heap: &Heap, fuel: u64) -> Checker<'_> {
    Checker {
        lang: Lang::Target,
        heap,
        fuel,
    }
}

/// `heap; ctx ⊢ e : A` for target terms.
pub fn infer(heap: &Heap, ctx: &Context, e: &Expr) -> Result<Expr, TypeError> {
    infer_with_fuel(heap, ctx, e, DEFAULT_FUEL)
}

pub fn infer_with_fuel(heap: &Heap, ctx: &Context, e: &Expr, fuel: u64) -> Result<Expr, TypeError> {
    check_lang(e, Lang::Target)?;
    checker(heap, fuel).infer(ctx, e)
}

pub fn equiv(heap: &Heap, ctx: &Context, a: &Expr, b: &Expr) -> Result<bool, FuelExhausted> {
    conv::equiv(heap, ctx, a, b, DEFAULT_FUEL)
}

pub fn subtype(heap: &Heap, ctx: &Context, a: &Expr, b: &Expr) -> Result<bool, FuelExhausted> {
    conv::subtype(heap, ctx, a, b, DEFAULT_FUEL)
}

pub fn normalize(heap: &Heap, ctx: &Context, e: &Expr, fuel: u64) -> Result<Expr, FuelExhausted> {
    conv::normalize(heap, ctx, e, fuel)
}

/// Values: unit, universes, type formers, code, locations, tagged
/// locations, and closures over values.
pub fn is_value(e: &Expr) -> bool {
    match e {
        Expr::UnitTm
        | Expr::UnitTy
        | Expr::Univ(_)
        | Expr::Pi { .. }
        | Expr::Sigma { .. }
        | Expr::CodeTy { .. }
        | Expr::Code { .. }
        | Expr::Loc(_) => true,
        Expr::CTag(t) => matches!(**t, Expr::Loc(_)),
        Expr::Clo { code, env, .. } => is_value(code) && is_value(env),
        _ => false,
    }
}

fn stuck(reason: impl Into<String>, e: &Expr) -> Stuck {
    Stuck {
        reason: reason.into(),
        expr: e.clone(),
    }
}

/// One call-by-value, left-to-right step.
pub fn step(cfg: &Config) -> Result<Step, Stuck> {
    let mut heap = cfg.heap.clone();
    match step_expr(&mut heap, &cfg.expr)? {
        Some((expr, rule)) => Ok(Step::Stepped(Config { heap, expr }, rule)),
        None => Ok(Step::Value),
    }
}

type Redex = Option<(Expr, Rule)>;

/// Steps the first non-value among `parts`, rebuilding with `rebuild`.
fn congruence(
    heap: &mut Heap,
    parts: &[&Expr],
    rebuild: impl Fn(Vec<Expr>) -> Expr,
) -> Result<Option<Redex>, Stuck> {
    for (i, p) in parts.iter().enumerate() {
        if !is_value(p) {
            let Some((next, rule)) = step_expr(heap, p)? else {
                return Err(stuck("non-value reported as value", p));
            };
            let mut items: Vec<Expr> = parts.iter().map(|p| (*p).clone()).collect();
            items[i] = next;
            return Ok(Some(Some((rebuild(items), rule))));
        }
    }
    Ok(None)
}

fn code_parts(code: &Expr) -> Option<(&crate::syntax::Name, &crate::syntax::Name, &Expr)> {
    match code {
        Expr::Code {
            env_name,
            arg_name,
            body,
            ..
        } => Some((env_name, arg_name, body)),
        _ => None,
    }
}

fn step_expr(heap: &mut Heap, e: &Expr) -> Result<Redex, Stuck> {
    if is_value(e) {
        return Ok(None);
    }
    match e {
        Expr::Var(x) => Err(stuck(format!("free variable {x}"), e)),
        Expr::Malloc {
            name,
            fst_ty,
            snd_ty,
        } => {
            let ty = Expr::sigma_flagged(
                name.clone(),
                (**fst_ty).clone(),
                Flag::Uninit,
                (**snd_ty).clone(),
                Flag::Uninit,
            );
            let l = heap.alloc(ty);
            Ok(Some((Expr::Loc(l), Rule::Malloc)))
        }
        Expr::Let {
            name, bound, body, ..
        } => {
            if let Some(r) = congruence(heap, &[bound], |mut v| {
                let Expr::Let { name, annot, body, .. } = e else { unreachable!() };
                Expr::let_(name.clone(), v.remove(0), (**annot).clone(), (**body).clone())
            })? {
                return Ok(r);
            }
            Ok(Some((subst(body, bound, name), Rule::Let)))
        }
        Expr::App(f, a) => {
            if let Some(r) = congruence(heap, &[f, a], |mut v| {
                let a = v.remove(1);
                Expr::app(v.remove(0), a)
            })? {
                return Ok(r);
            }
            match &**f {
                Expr::CTag(t) => {
                    let Expr::Loc(l) = **t else {
                        return Err(stuck("ctag of a non-location", e));
                    };
                    let cell = heap
                        .cell(l)
                        .ok_or_else(|| stuck(format!("dangling location {l}"), e))?;
                    let (Some(code), Some(env)) = (cell.slot1.value(), cell.slot2.value()) else {
                        return Err(stuck(format!("closure cell {l} is not initialized"), e));
                    };
                    let (n, x, body) =
                        code_parts(code).ok_or_else(|| stuck("closure cell holds no code", e))?;
                    let next = subst_many(body, &[(n.clone(), env.clone()), (x.clone(), (**a).clone())]);
                    Ok(Some((next, Rule::AppCtag)))
                }
                Expr::Clo { code, env, .. } => {
                    let (n, x, body) =
                        code_parts(code).ok_or_else(|| stuck("closure holds no code", e))?;
                    let next =
                        subst_many(body, &[(n.clone(), (**env).clone()), (x.clone(), (**a).clone())]);
                    Ok(Some((next, Rule::AppClo)))
                }
                _ => Err(stuck("application of a non-closure", e)),
            }
        }
        Expr::Fst(t) | Expr::Snd(t) => {
            let first = matches!(e, Expr::Fst(_));
            if let Some(r) = congruence(heap, &[t], |mut v| {
                if first {
                    Expr::fst(v.remove(0))
                } else {
                    Expr::snd(v.remove(0))
                }
            })? {
                return Ok(r);
            }
            let Expr::Loc(l) = **t else {
                return Err(stuck("projection from a non-location", e));
            };
            let cell = heap
                .cell(l)
                .ok_or_else(|| stuck(format!("dangling location {l}"), e))?;
            let slot = if first { &cell.slot1 } else { &cell.slot2 };
            match slot {
                Slot::Init(v) => Ok(Some((
                    v.clone(),
                    if first { Rule::Fst } else { Rule::Snd },
                ))),
                Slot::Uninit => Err(stuck(format!("read of uninitialized slot at {l}"), e)),
            }
        }
        Expr::Assign1(t, v) | Expr::Assign2(t, v) => {
            let first = matches!(e, Expr::Assign1(..));
            if let Some(r) = congruence(heap, &[t, v], |mut parts| {
                let v = parts.remove(1);
                let t = parts.remove(0);
                if first {
                    Expr::assign1(t, v)
                } else {
                    Expr::assign2(t, v)
                }
            })? {
                return Ok(r);
            }
            let Expr::Loc(l) = **t else {
                return Err(stuck("assignment to a non-location", e));
            };
            let cell = heap
                .cells
                .get_mut(l.0)
                .ok_or_else(|| stuck(format!("dangling location {l}"), e))?;
            let (f1, f2) = cell.flags();
            if first {
                if f1 != Flag::Uninit {
                    return Err(stuck(format!("slot 1 of {l} already written"), e));
                }
                cell.slot1 = Slot::Init((**v).clone());
                cell.set_flags(Flag::Init, f2);
                Ok(Some((Expr::Loc(l), Rule::Assign1)))
            } else {
                if (f1, f2) != (Flag::Init, Flag::Uninit) {
                    return Err(stuck(format!("assign2 on {l} at flags ({f1},{f2})"), e));
                }
                cell.slot2 = Slot::Init((**v).clone());
                cell.set_flags(Flag::Init, Flag::Init);
                Ok(Some((Expr::Loc(l), Rule::Assign2)))
            }
        }
        Expr::CTag(t) => match congruence(heap, &[t], |mut v| Expr::ctag(v.remove(0)))? {
            Some(r) => Ok(r),
            None => Err(stuck("ctag of a non-location value", e)),
        },
        Expr::Clo { code, env, annot } => {
            match congruence(heap, &[code, env], |mut v| {
                let env = v.remove(1);
                Expr::clo(v.remove(0), env, (**annot).clone())
            })? {
                Some(r) => Ok(r),
                None => Err(stuck("closure over values reported as non-value", e)),
            }
        }
        Expr::Pair { .. } => Err(stuck("source pair in target program", e)),
        _ => Err(stuck("no rule applies", e)),
    }
}

/// One line of a machine trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceLine {
    pub step: u64,
    pub rule: Rule,
    pub config: Config,
}

impl fmt::Display for TraceLine {
    /// `STEP k | rule-name | expr-printed | heap-summary`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "STEP {} | {} | {} | {}",
            self.step,
            self.rule,
            self.config.expr,
            self.config.heap.summary()
        )
    }
}

/// Iterates [`step`] until a value, at most `fuel` steps.
pub fn eval(cfg: Config, fuel: u64) -> Result<Config, EvalError> {
    eval_traced(cfg, fuel, |_| {})
}

/// Like [`eval`], calling `observe` after every step.
pub fn eval_traced(
    mut cfg: Config,
    fuel: u64,
    mut observe: impl FnMut(&TraceLine),
) -> Result<Config, EvalError> {
    let mut k = 0;
    loop {
        if is_value(&cfg.expr) {
            return Ok(cfg);
        }
        if k >= fuel {
            return Err(EvalError::FuelExhausted {
                steps: k,
                last: Box::new(cfg),
            });
        }
        match step(&cfg)? {
            Step::Value => return Ok(cfg),
            Step::Stepped(next, rule) => {
                k += 1;
                let line = TraceLine {
                    step: k,
                    rule,
                    config: next,
                };
                observe(&line);
                cfg = line.config;
            }
        }
    }
}

/// Verdict of [`heap_wf`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeapReport {
    pub problems: Vec<String>,
}

impl HeapReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Checks flag/slot agreement, that `slot2` implies `slot1`, and that each
/// initialized slot has the type recorded for it.
pub fn heap_wf(heap: &Heap) -> HeapReport {
    let mut problems = Vec::new();
    let ctx = Context::new();
    let chk = checker(heap, DEFAULT_FUEL);
    for (l, cell) in heap.cells() {
        let Expr::Sigma { name, dom, cod, .. } = &cell.cell_type else {
            problems.push(format!("loc={l}: cell type {} is not a Sigma", cell.cell_type));
            continue;
        };
        let (f1, f2) = cell.flags();
        if f1 != cell.slot1.flag() || f2 != cell.slot2.flag() {
            problems.push(format!(
                "loc={l}: flags ({f1},{f2}) disagree with slots ({},{})",
                cell.slot1.flag(),
                cell.slot2.flag()
            ));
        }
        if cell.slot2.value().is_some() && cell.slot1.value().is_none() {
            problems.push(format!("loc={l}: slot 2 initialized before slot 1"));
        }
        if let Some(v) = cell.slot1.value() {
            if !is_value(v) {
                problems.push(format!("loc={l}: slot 1 holds non-value {v}"));
            }
            if let Err(err) = chk.check(&ctx, v, dom) {
                problems.push(format!("loc={l}: slot 1: {err}"));
            }
            if let Some(w) = cell.slot2.value() {
                if !is_value(w) {
                    problems.push(format!("loc={l}: slot 2 holds non-value {w}"));
                }
                if let Err(err) = chk.check(&ctx, w, &subst(cod, v, name)) {
                    problems.push(format!("loc={l}: slot 2: {err}"));
                }
            }
        }
    }
    HeapReport { problems }
}

/// Rejects a target term that is not closed or not well-formed for the
/// machine, reporting the same kinds as [`infer`].
pub fn check_closed(e: &Expr) -> Result<(), TypeError> {
    let fv = e.free_vars();
    if fv.is_empty() {
        Ok(())
    } else {
        Err(TypeError::new(
            ErrorKind::UnboundVar,
            format!("program is not closed: {:?}", fv),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::syntax::alpha_eq;

    fn tgt(text: &str) -> Expr {
        parse(text, Lang::Target).unwrap()
    }

    fn full_cell() -> HeapCell {
        HeapCell {
            cell_type: Expr::sigma("x", Expr::UnitTy, Expr::UnitTy),
            slot1: Slot::Init(Expr::UnitTm),
            slot2: Slot::Init(Expr::UnitTm),
        }
    }

    #[test]
    fn malloc_types_with_zero_flags() {
        let ty = infer(&Heap::new(), &Context::new(), &tgt("(malloc (x Unit) Unit)")).unwrap();
        assert_eq!(ty, tgt("(Sigma (x Unit 0) (Unit 0))"));
    }

    #[test]
    fn flag_errors() {
        let h = Heap::new();
        let c = Context::new();
        for text in [
            "(fst (malloc (x Unit) Unit))",
            "(assign2 (malloc (x Unit) Unit) unit)",
            "(snd (assign1 (malloc (x Unit) Unit) unit))",
            "(assign1 (assign1 (malloc (x Unit) Unit) unit) unit)",
        ] {
            let err = infer(&h, &c, &tgt(text)).unwrap_err();
            assert_eq!(err.kind, ErrorKind::FlagError, "{text}: {err}");
        }
    }

    #[test]
    fn assign1_sets_first_flag() {
        let ty = infer(
            &Heap::new(),
            &Context::new(),
            &tgt("(assign1 (malloc (x Unit) Unit) unit)"),
        )
        .unwrap();
        assert_eq!(ty, tgt("(Sigma (x Unit 1) (Unit 0))"));
    }

    #[test]
    fn assign2_checks_dependent_component() {
        let ok = tgt("(assign2 (assign1 (malloc (x Star) x) Unit) unit)");
        let ty = infer(&Heap::new(), &Context::new(), &ok).unwrap();
        assert_eq!(ty, tgt("(Sigma (x Star 1) (x 1))"));
        let bad = tgt("(assign2 (assign1 (malloc (x Star) x) Unit) Unit)");
        let err = infer(&Heap::new(), &Context::new(), &bad).unwrap_err();
        assert_eq!(err.kind, ErrorKind::SubtypeFail);
    }

    #[test]
    fn ctag_types_as_pi() {
        let code = "(code ((n Unit) (x Unit)) n)";
        let text = format!(
            "(ctag (assign2 (assign1 (malloc (c (Code ((n Unit) (x Unit)) Unit)) Unit) {code}) unit))"
        );
        let ty = infer(&Heap::new(), &Context::new(), &tgt(&text)).unwrap();
        assert!(alpha_eq(&ty, &tgt("(Pi (x Unit) Unit)")), "{ty}");
        let err = infer(
            &Heap::new(),
            &Context::new(),
            &tgt("(ctag (assign2 (assign1 (malloc (x Unit) Unit) unit) unit))"),
        )
        .unwrap_err();
        assert_eq!(err.kind, ErrorKind::AnnotMismatch);
    }

    #[test]
    fn loc_types_from_heap() {
        let mut h = Heap::new();
        h.push_cell(full_cell());
        let ty = infer(&h, &Context::new(), &Expr::loc(0)).unwrap();
        assert_eq!(ty, Expr::sigma("x", Expr::UnitTy, Expr::UnitTy));
        let err = infer(&h, &Context::new(), &Expr::loc(3)).unwrap_err();
        assert_eq!(err.kind, ErrorKind::UnknownLoc);
    }

    #[test]
    fn projection_steps_read_heap() {
        let mut h = Heap::new();
        h.push_cell(full_cell());
        let cfg = Config {
            heap: h.clone(),
            expr: Expr::fst(Expr::loc(0)),
        };
        assert_eq!(
            step(&cfg).unwrap(),
            Step::Stepped(
                Config {
                    heap: h,
                    expr: Expr::UnitTm
                },
                Rule::Fst
            )
        );
    }

    #[test]
    fn malloc_step_allocates_uninit_cell() {
        let cfg = Config::new(tgt("(malloc (x Unit) Unit)"));
        let Step::Stepped(next, Rule::Malloc) = step(&cfg).unwrap() else {
            panic!()
        };
        assert_eq!(next.expr, Expr::loc(0));
        let cell = next.heap.cell(Location(0)).unwrap();
        assert_eq!(cell.slot1, Slot::Uninit);
        assert_eq!(cell.slot2, Slot::Uninit);
        assert_eq!(cell.flags(), (Flag::Uninit, Flag::Uninit));
    }

    #[test]
    fn ctag_application_substitutes_env_and_arg() {
        let mut h = Heap::new();
        h.push_cell(HeapCell {
            cell_type: tgt("(Sigma (c (Code ((n Unit) (x Unit)) Unit) 1) (Unit 1))"),
            slot1: Slot::Init(tgt(
                "(code ((n Unit) (x Unit)) (assign2 (assign1 (malloc (z Unit) Unit) n) x))",
            )),
            slot2: Slot::Init(Expr::UnitTy),
        });
        let cfg = Config {
            heap: h,
            expr: Expr::app(Expr::ctag(Expr::loc(0)), Expr::UnitTm),
        };
        let Step::Stepped(next, Rule::AppCtag) = step(&cfg).unwrap() else {
            panic!()
        };
        assert_eq!(
            next.expr,
            tgt("(assign2 (assign1 (malloc (z Unit) Unit) Unit) unit)")
        );
    }

    #[test]
    fn reading_uninit_is_stuck() {
        let cfg = Config::new(tgt("(fst (malloc (x Unit) Unit))"));
        let err = eval(cfg, 10).unwrap_err();
        assert!(matches!(err, EvalError::Stuck(_)), "{err}");
    }

    #[test]
    fn eval_of_value_and_zero_fuel() {
        let cfg = Config::new(Expr::UnitTm);
        assert_eq!(eval(cfg.clone(), 0).unwrap(), cfg);
        let cfg = Config::new(tgt("(malloc (x Unit) Unit)"));
        assert!(matches!(
            eval(cfg, 0),
            Err(EvalError::FuelExhausted { steps: 0, .. })
        ));
    }

    #[test]
    fn projection_equiv_through_heap() {
        let mut h = Heap::new();
        h.push_cell(full_cell());
        assert!(equiv(&h, &Context::new(), &Expr::fst(Expr::loc(0)), &Expr::UnitTm).unwrap());
        let star_box = subtype(&h, &Context::new(), &Expr::star(), &Expr::boxu()).unwrap();
        assert!(star_box);
    }

    #[test]
    fn heap_wf_detects_bad_cells() {
        assert!(heap_wf(&Heap::new()).ok());
        let mut h = Heap::new();
        h.push_cell(HeapCell {
            cell_type: Expr::sigma_flagged("x", Expr::UnitTy, Flag::Init, Expr::UnitTy, Flag::Uninit),
            slot1: Slot::Uninit,
            slot2: Slot::Uninit,
        });
        assert!(!heap_wf(&h).ok());
        let mut h = Heap::new();
        h.push_cell(HeapCell {
            cell_type: Expr::sigma("x", Expr::UnitTy, Expr::UnitTy),
            slot1: Slot::Init(Expr::UnitTy),
            slot2: Slot::Init(Expr::UnitTm),
        });
        let report = heap_wf(&h);
        assert_eq!(report.problems.len(), 1, "{:?}", report.problems);
    }

    #[test]
    fn trace_lines_render() {
        let cfg = Config::new(tgt("(assign1 (malloc (x Unit) Unit) unit)"));
        let mut lines = Vec::new();
        let out = eval_traced(cfg, 10, |l| lines.push(l.to_string())).unwrap();
        assert_eq!(out.expr, Expr::loc(0));
        assert_eq!(
            lines,
            vec![
                "STEP 1 | malloc | (assign1 (loc 0) unit) | loc=0 flags=(0,0)",
                "STEP 2 | assign1 | (loc 0) | loc=0 flags=(1,0)",
            ]
        );
    }
}
