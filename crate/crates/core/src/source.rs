//! The source calculus: typing, conversion and a call-by-value evaluator.

use thiserror::Error;

use crate::conv::{self, DEFAULT_FUEL};
use crate::error::{FuelExhausted, TypeError};
use crate::syntax::{subst, subst_many, Context, Expr, Lang};
use crate::target::Heap;
use crate::typing::{check_lang, Checker};

fn checker(heap: &Heap, fuel: u64) -> Checker<'_> {
    Checker {
        lang: Lang::Source,
        heap,
        fuel,
    }
}

/// `ctx ⊢ e : A`. The returned type is not normalized.
pub fn infer(ctx: &Context, e: &Expr) -> Result<Expr, TypeError> {
    infer_with_fuel(ctx, e, DEFAULT_FUEL)
}

pub fn infer_with_fuel(ctx: &Context, e: &Expr, fuel: u64) -> Result<Expr, TypeError> {
    check_lang(e, Lang::Source)?;
    checker(&Heap::new(), fuel).infer(ctx, e)
}

/// `ctx ⊢ e : A` through the conversion rule.
pub fn check(ctx: &Context, e: &Expr, ty: &Expr) -> Result<(), TypeError> {
    check_lang(e, Lang::Source)?;
    checker(&Heap::new(), DEFAULT_FUEL).check(ctx, e, ty)
}

pub fn subtype(ctx: &Context, a: &Expr, b: &Expr) -> Result<bool, FuelExhausted> {
    conv::subtype(&Heap::new(), ctx, a, b, DEFAULT_FUEL)
}

pub fn equiv(ctx: &Context, a: &Expr, b: &Expr) -> Result<bool, FuelExhausted> {
    conv::equiv(&Heap::new(), ctx, a, b, DEFAULT_FUEL)
}

pub fn normalize(ctx: &Context, e: &Expr, fuel: u64) -> Result<Expr, FuelExhausted> {
    conv::normalize(&Heap::new(), ctx, e, fuel)
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("stuck: {reason} in {expr}")]
pub struct Stuck {
    pub reason: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Stepped(Expr),
    Value,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Stuck(#[from] Stuck),
    #[error("fuel exhausted after {steps} steps")]
    FuelExhausted { steps: u64, last: Box<Expr> },
}

pub fn is_value(e: &Expr) -> bool {
    match e {
        Expr::UnitTm
        | Expr::UnitTy
        | Expr::Univ(_)
        | Expr::Pi { .. }
        | Expr::Sigma { .. }
        | Expr::CodeTy { .. }
        | Expr::Code { .. } => true,
        Expr::Clo { code, env, .. } => is_value(code) && is_value(env),
        Expr::Pair { fst, snd, .. } => is_value(fst) && is_value(snd),
        _ => false,
    }
}

fn stuck(reason: &str, e: &Expr) -> Stuck {
    Stuck {
        reason: reason.to_string(),
        expr: e.clone(),
    }
}

/// One call-by-value, left-to-right step.
pub fn step(e: &Expr) -> Result<Step, Stuck> {
    Ok(match step_expr(e)? {
        Some(next) => Step::Stepped(next),
        None => Step::Value,
    })
}

fn step_expr(e: &Expr) -> Result<Option<Expr>, Stuck> {
    if is_value(e) {
        return Ok(None);
    }
    // Steps the first non-value child among `idx`.
    let congruence = |idx: &[usize]| -> Result<Option<Expr>, Stuck> {
        let kids = e.children();
        for &i in idx {
            if !is_value(kids[i]) {
                let next = step_expr(kids[i])?.ok_or_else(|| stuck("no rule applies", kids[i]))?;
                return Ok(Some(replace_child(e, i, next)));
            }
        }
        Ok(None)
    };
    match e {
        Expr::Let {
            name, bound, body, ..
        } => match congruence(&[0])? {
            Some(next) => Ok(Some(next)),
            None => Ok(Some(subst(body, bound, name))),
        },
        Expr::App(f, a) => {
            if let Some(next) = congruence(&[0, 1])? {
                return Ok(Some(next));
            }
            match &**f {
                Expr::Clo { code, env, .. } => match &**code {
                    Expr::Code {
                        env_name,
                        arg_name,
                        body,
                        ..
                    } => Ok(Some(subst_many(
                        body,
                        &[
                            (env_name.clone(), (**env).clone()),
                            (arg_name.clone(), (**a).clone()),
                        ],
                    ))),
                    _ => Err(stuck("closure holds no code", e)),
                },
                _ => Err(stuck("application of a non-closure", e)),
            }
        }
        Expr::Fst(t) | Expr::Snd(t) => {
            if let Some(next) = congruence(&[0])? {
                return Ok(Some(next));
            }
            match &**t {
                Expr::Pair { fst, snd, .. } => Ok(Some(if matches!(e, Expr::Fst(_)) {
                    (**fst).clone()
                } else {
                    (**snd).clone()
                })),
                _ => Err(stuck("projection from a non-pair", e)),
            }
        }
        Expr::Clo { .. } => congruence(&[0, 1])?
            .map(Some)
            .ok_or_else(|| stuck("no rule applies", e)),
        Expr::Pair { .. } => congruence(&[0, 1])?
            .map(Some)
            .ok_or_else(|| stuck("no rule applies", e)),
        Expr::Var(_) => Err(stuck("free variable", e)),
        _ => Err(stuck("target construct in source program", e)),
    }
}

/// Rebuilds `e` with child `i` replaced (for the evaluated positions only).
fn replace_child(e: &Expr, i: usize, new: Expr) -> Expr {
    let mut e = e.clone();
    let slot: &mut Expr = match (&mut e, i) {
        (Expr::Let { bound, .. }, 0) => bound,
        (Expr::App(f, _), 0) => f,
        (Expr::App(_, a), 1) => a,
        (Expr::Fst(t), 0) | (Expr::Snd(t), 0) => t,
        (Expr::Clo { code, .. }, 0) => code,
        (Expr::Clo { env, .. }, 1) => env,
        (Expr::Pair { fst, .. }, 0) => fst,
        (Expr::Pair { snd, .. }, 1) => snd,
        _ => unreachable!("not an evaluation position"),
    };
    *slot = new;
    e
}

/// Iterates [`step`] to a value within `fuel` steps.
pub fn eval(e: &Expr, fuel: u64) -> Result<Expr, EvalError> {
    eval_traced(e, fuel, |_, _| {})
}

/// Like [`eval`], calling `observe(k, next)` after every step.
pub fn eval_traced(
    e: &Expr,
    fuel: u64,
    mut observe: impl FnMut(u64, &Expr),
) -> Result<Expr, EvalError> {
    let mut cur = e.clone();
    let mut k = 0;
    loop {
        if is_value(&cur) {
            return Ok(cur);
        }
        if k >= fuel {
            return Err(EvalError::FuelExhausted {
                steps: k,
                last: Box::new(cur),
            });
        }
        match step(&cur)? {
            Step::Value => return Ok(cur),
            Step::Stepped(next) => {
                k += 1;
                observe(k, &next);
                cur = next;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorKind;
    use crate::parse::parse;
    use crate::syntax::alpha_eq;

    fn src(text: &str) -> Expr {
        parse(text, Lang::Source).unwrap()
    }

    fn ty_of(text: &str) -> Result<Expr, TypeError> {
        infer(&Context::new(), &src(text))
    }

    #[test]
    fn pair_infers_its_annotation() {
        assert_eq!(
            ty_of("(pair unit unit (Sigma (x Unit) Unit))").unwrap(),
            src("(Sigma (x Unit) Unit)")
        );
    }

    #[test]
    fn closure_infers_pi() {
        // Hand application of the closure rule: code : Code(n:Unit, x:Unit) → Unit,
        // env unit : Unit, so clo : Π x:Unit[unit/n]. Unit[unit/n] = Π x:Unit. Unit.
        let ty = ty_of("(clo (code ((n Unit) (x Unit)) n) unit (Pi (x Unit) Unit))").unwrap();
        assert_eq!(ty, src("(Pi (x Unit) Unit)"));
    }

    #[test]
    fn error_kinds() {
        assert_eq!(ty_of("(fst unit)").unwrap_err().kind, ErrorKind::NotAPair);
        assert_eq!(
            ty_of("(code ((n Unit) (x Unit)) y)").unwrap_err().kind,
            ErrorKind::OpenCode
        );
        assert_eq!(ty_of("y").unwrap_err().kind, ErrorKind::UnboundVar);
        assert_eq!(ty_of("(app unit unit)").unwrap_err().kind, ErrorKind::NotAFunction);
        assert_eq!(ty_of("Box").unwrap_err().kind, ErrorKind::UniverseError);
        assert_eq!(
            ty_of("(pair unit unit Unit)").unwrap_err().kind,
            ErrorKind::AnnotMismatch
        );
        assert_eq!(
            ty_of("(pair unit Unit (Sigma (x Unit) Unit))").unwrap_err().kind,
            ErrorKind::SubtypeFail
        );
        assert_eq!(
            ty_of("(clo (code ((n Unit) (x Unit)) n) unit (Pi (x Unit) Star))")
                .unwrap_err()
                .kind,
            ErrorKind::AnnotMismatch
        );
    }

    #[test]
    fn source_rejects_target_forms_in_ast() {
        let e = Expr::fst(Expr::malloc("x", Expr::UnitTy, Expr::UnitTy));
        assert_eq!(
            infer(&Context::new(), &e).unwrap_err().kind,
            ErrorKind::LangViolation
        );
    }

    #[test]
    fn error_paths_point_at_subterm() {
        let err = ty_of("(pair unit (fst unit) (Sigma (x Unit) Unit))").unwrap_err();
        assert_eq!(err.path(), vec![1, 0]);
    }

    #[test]
    fn subtype_examples() {
        let c = Context::new();
        assert!(subtype(&c, &Expr::star(), &Expr::boxu()).unwrap());
        assert!(subtype(&c, &src("(Pi (x Unit) Star)"), &src("(Pi (x Unit) Box)")).unwrap());
        assert!(!subtype(&c, &Expr::boxu(), &Expr::star()).unwrap());
    }

    #[test]
    fn equiv_examples() {
        let c = Context::new();
        assert!(equiv(&c, &src("(fst (pair unit unit (Sigma (x Unit) Unit)))"), &Expr::UnitTm).unwrap());
        assert!(equiv(&c, &src("(let (y unit Unit) y)"), &Expr::UnitTm).unwrap());
        assert!(!equiv(&c, &Expr::star(), &Expr::boxu()).unwrap());
    }

    #[test]
    fn dependent_let_unfolds_definition() {
        let ty = ty_of("(let (T Unit Star) (pair unit unit (Sigma (x T) T)))").unwrap();
        assert!(equiv(&Context::new(), &ty, &src("(Sigma (x Unit) Unit)")).unwrap());
    }

    #[test]
    fn dependent_snd_type() {
        let e = "(snd (pair Unit unit (Sigma (x Star) x)))";
        let ty = ty_of(e).unwrap();
        assert!(equiv(&Context::new(), &ty, &Expr::UnitTy).unwrap());
    }

    #[test]
    fn step_examples() {
        let e = src("(app (clo (code ((n Unit) (x Unit)) n) unit (Pi (x Unit) Unit)) unit)");
        assert_eq!(step(&e).unwrap(), Step::Stepped(Expr::UnitTm));
        let e = src("(snd (pair unit unit (Sigma (x Unit) Unit)))");
        assert_eq!(step(&e).unwrap(), Step::Stepped(Expr::UnitTm));
        assert_eq!(step(&Expr::UnitTm).unwrap(), Step::Value);
    }

    #[test]
    fn step_applies_env_and_arg_simultaneously() {
        // Hand substitution: body (pair n x ..)[Unit/n, unit/x].
        let e = src(
            "(app (clo (code ((n Star) (x n)) (pair n x (Sigma (T Star) T))) Unit (Pi (x Unit) (Sigma (T Star) T))) unit)",
        );
        let Step::Stepped(next) = step(&e).unwrap() else { panic!() };
        assert!(alpha_eq(&next, &src("(pair Unit unit (Sigma (T Star) T))")));
    }

    #[test]
    fn cbv_order_is_left_to_right() {
        let e = src("(pair (fst (pair unit unit (Sigma (x Unit) Unit))) (snd (pair unit unit (Sigma (x Unit) Unit))) (Sigma (x Unit) Unit))");
        let Step::Stepped(next) = step(&e).unwrap() else { panic!() };
        assert_eq!(
            next,
            src("(pair unit (snd (pair unit unit (Sigma (x Unit) Unit))) (Sigma (x Unit) Unit))")
        );
    }

    #[test]
    fn eval_examples() {
        let e = src("(fst (pair unit unit (Sigma (x Unit) Unit)))");
        assert_eq!(eval(&e, 10).unwrap(), Expr::UnitTm);
        assert_eq!(eval(&Expr::UnitTm, 0).unwrap(), Expr::UnitTm);
        assert!(matches!(eval(&e, 0), Err(EvalError::FuelExhausted { .. })));
        assert!(matches!(eval(&src("(app unit unit)"), 5), Err(EvalError::Stuck(_))));
    }
}
