//! The allocation translation from source to target.
//!
//! Σ-types get flags `(1, 1)`. Every pair becomes a `malloc` followed by
//! `assign1` and `assign2`, each bound by an annotated `let`; every closure
//! becomes the same chain over its code and environment, wrapped in `ctag`.
//! Everything else is translated structurally.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::conv::DEFAULT_FUEL;
use crate::error::TypeError;
use crate::source;
use crate::syntax::{Context, Expr, Flag, Name};

#[derive(Clone, Debug, PartialEq)]
pub struct TransResult {
    pub expr: Expr,
    /// Chain binders introduced by the pass.
    pub used_names: BTreeSet<Name>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TransError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("internal error: {0}")]
    Internal(String),
}

type TrResult<T> = Result<T, TransError>;

/// Translates a well-typed source term. Fails with the source type error
/// if `e` does not check in `ctx`.
pub fn translate(ctx: &Context, e: &Expr) -> TrResult<TransResult> {
    source::infer(ctx, e)?;
    let mut tr = Translator::default();
    let expr = tr.term(ctx, e)?;
    Ok(TransResult {
        expr,
        used_names: tr.used,
    })
}

/// Translates `e` without first checking it. Used for types such as `Box`
/// that are well-formed but have no type of their own.
pub fn translate_unchecked(ctx: &Context, e: &Expr) -> TrResult<Expr> {
    Translator::default().term(ctx, e)
}

/// Translates every entry of a source context, keeping names and order.
pub fn translate_ctx(ctx: &Context) -> TrResult<Context> {
    let mut src = Context::new();
    let mut out = Context::new();
    let mut tr = Translator::default();
    for entry in ctx.entries() {
        let ty = tr.term(&src, &entry.ty)?;
        let def = match &entry.def {
            Some(d) => Some(tr.term(&src, d)?),
            None => None,
        };
        out.push(entry.name.clone(), ty, def);
        src.push(entry.name.clone(), entry.ty.clone(), entry.def.clone());
    }
    Ok(out)
}

#[derive(Default)]
struct Translator {
    used: BTreeSet<Name>,
}

impl Translator {
    fn term(&mut self, ctx: &Context, e: &Expr) -> TrResult<Expr> {
        Ok(match e {
            Expr::Var(_) | Expr::Univ(_) | Expr::UnitTm | Expr::UnitTy => e.clone(),
            Expr::Let {
                name,
                bound,
                annot,
                body,
            } => {
                let b = self.term(ctx, bound)?;
                let a = self.term(ctx, annot)?;
                let (inner, x, r) = ctx.bind(name, (**annot).clone(), Some((**bound).clone()), &[body]);
                let body = self.term(&inner, &r[0])?;
                Expr::let_(x, b, a, body)
            }
            Expr::Pi { name, dom, cod } => {
                let d = self.term(ctx, dom)?;
                let (inner, x, r) = ctx.bind(name, (**dom).clone(), None, &[cod]);
                Expr::pi(x, d, self.term(&inner, &r[0])?)
            }
            Expr::Sigma { name, dom, cod, .. } => {
                let d = self.term(ctx, dom)?;
                let (inner, x, r) = ctx.bind(name, (**dom).clone(), None, &[cod]);
                Expr::sigma(x, d, self.term(&inner, &r[0])?)
            }
            Expr::CodeTy {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                result,
            } => {
                let (n, a1, x, a, b) =
                    self.telescope(ctx, env_name, env_ty, arg_name, arg_ty, result)?;
                Expr::code_ty(n, a1, x, a, b)
            }
            Expr::Code {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                body,
            } => {
                let (n, a1, x, a, b) =
                    self.telescope(&Context::new(), env_name, env_ty, arg_name, arg_ty, body)?;
                Expr::code(n, a1, x, a, b)
            }
            Expr::App(f, a) => Expr::app(self.term(ctx, f)?, self.term(ctx, a)?),
            Expr::Fst(t) => Expr::fst(self.term(ctx, t)?),
            Expr::Snd(t) => Expr::snd(self.term(ctx, t)?),
            Expr::Pair { fst, snd, annot } => self.pair(ctx, fst, snd, annot)?,
            Expr::Clo { code, env, .. } => self.closure(ctx, code, env)?,
            Expr::Malloc { .. }
            | Expr::Assign1(..)
            | Expr::Assign2(..)
            | Expr::CTag(_)
            | Expr::Loc(_) => {
                return Err(TransError::Internal(format!(
                    "target construct in source term: {e}"
                )))
            }
        })
    }

    /// Translates the three parts of a code or code type. `ctx` is the
    /// context the outer binder is added to.
    fn telescope(
        &mut self,
        ctx: &Context,
        n: &Name,
        a1: &Expr,
        x: &Name,
        a: &Expr,
        b: &Expr,
    ) -> TrResult<(Name, Expr, Name, Expr, Expr)> {
        let a1t = self.term(ctx, a1)?;
        let (c1, n, r1) = ctx.bind(n, a1.clone(), None, &[a, b]);
        let at = self.term(&c1, &r1[0])?;
        let (c2, x, r2) = c1.bind(x, r1[0].clone(), None, &[&r1[1]]);
        let bt = self.term(&c2, &r2[0])?;
        Ok((n, a1t, x, at, bt))
    }

    fn pair(&mut self, ctx: &Context, e1: &Expr, e2: &Expr, annot: &Expr) -> TrResult<Expr> {
        let sigma = if matches!(annot, Expr::Sigma { .. }) {
            annot.clone()
        } else {
            source::normalize(ctx, annot, DEFAULT_FUEL).map_err(TypeError::from)?
        };
        let Expr::Sigma { name, dom, cod, .. } = sigma else {
            return Err(TransError::Internal(format!(
                "pair annotation {annot} does not normalize to a Sigma type"
            )));
        };
        let a = self.term(ctx, &dom)?;
        let (inner, x, r) = ctx.bind(&name, (*dom).clone(), None, &[&cod]);
        let b = self.term(&inner, &r[0])?;
        let v1 = self.term(ctx, e1)?;
        let v2 = self.term(ctx, e2)?;
        Ok(self.chain(x, a, b, v1, v2, false))
    }

    fn closure(&mut self, ctx: &Context, code: &Expr, env: &Expr) -> TrResult<Expr> {
        let code_ty = source::infer(ctx, code)?;
        let code_ty = source::normalize(ctx, &code_ty, DEFAULT_FUEL).map_err(TypeError::from)?;
        let Expr::CodeTy { env_ty, .. } = &code_ty else {
            return Err(TransError::Internal(format!(
                "closure code {code} has type {code_ty}, not a code type"
            )));
        };
        let ct = self.term(ctx, &code_ty)?;
        let a1 = self.term(ctx, env_ty)?;
        let x = crate::syntax::fresh_name(&Name::new("c"), |s| a1.has_free(&Name::new(s)));
        let v1 = self.term(ctx, code)?;
        let v2 = self.term(ctx, env)?;
        Ok(self.chain(x, ct, a1, v1, v2, true))
    }

    /// `let y = malloc x a b in let y1 = assign1 y v1 in let y2 = assign2 y1 v2
    /// in y2`, or `ctag y2` for closures.
    fn chain(&mut self, x: Name, a: Expr, b: Expr, v1: Expr, v2: Expr, tag: bool) -> Expr {
        let mut taken: BTreeSet<Name> = a.free_vars();
        taken.extend(b.free_vars().into_iter().filter(|n| n != &x));
        taken.extend(v1.free_vars());
        taken.extend(v2.free_vars());
        let (y, y1, y2) = chain_names(&taken);
        self.used.extend([y.clone(), y1.clone(), y2.clone()]);

        let sig = |f1, f2| Expr::sigma_flagged(x.clone(), a.clone(), f1, b.clone(), f2);
        let result = if tag {
            Expr::ctag(Expr::Var(y2.clone()))
        } else {
            Expr::Var(y2.clone())
        };
        Expr::let_(
            y.clone(),
            Expr::malloc(x.clone(), a.clone(), b.clone()),
            sig(Flag::Uninit, Flag::Uninit),
            Expr::let_(
                y1.clone(),
                Expr::assign1(Expr::Var(y), v1),
                sig(Flag::Init, Flag::Uninit),
                Expr::let_(
                    y2,
                    Expr::assign2(Expr::Var(y1), v2),
                    sig(Flag::Init, Flag::Init),
                    result,
                ),
            ),
        )
    }
}

/// `y`, `y1`, `y2`, primed until none of them is taken.
fn chain_names(taken: &BTreeSet<Name>) -> (Name, Name, Name) {
    let mut primes = String::new();
    loop {
        let names = (
            Name::from(format!("y{primes}")),
            Name::from(format!("y1{primes}")),
            Name::from(format!("y2{primes}")),
        );
        if ![&names.0, &names.1, &names.2].iter().any(|n| taken.contains(*n)) {
            return names;
        }
        primes.push('\'');
    }
}
