//! Type inference shared by both calculi.
//!
//! The source rules are a standard Calculus of Constructions with closed
//! code and closures; the target adds allocation, two-step initialization
//! with flags, closure tagging and heap locations.

use crate::conv;
use crate::error::{ErrorKind, TypeError};
use crate::syntax::{subst, Context, Expr, Flag, Lang, Universe};
use crate::target::Heap;

pub(crate) struct Checker<'h> {
    pub lang: Lang,
    pub heap: &'h Heap,
    pub fuel: u64,
}

type TcResult<T> = Result<T, TypeError>;

/// Rejects constructs that do not belong to `lang`.
pub fn check_lang(e: &Expr, lang: Lang) -> Result<(), TypeError> {
    let bad = match (lang, e) {
        (Lang::Source, e) if e.is_target_only() => true,
        (Lang::Target, Expr::Pair { .. }) => true,
        _ => false,
    };
    if bad {
        return Err(TypeError::new(
            ErrorKind::LangViolation,
            format!("construct not allowed in {lang} programs: {e}"),
        ));
    }
    for (i, c) in e.children().into_iter().enumerate() {
        check_lang(c, lang).map_err(|err| err.at(i))?;
    }
    Ok(())
}

fn kind_name(e: &Expr) -> String {
    let s = e.to_string();
    if s.len() > 120 {
        format!("{}...", &s[..117])
    } else {
        s
    }
}

impl Checker<'_> {
    fn nf(&self, ctx: &Context, e: &Expr) -> TcResult<Expr> {
        Ok(conv::normalize(self.heap, ctx, e, self.fuel)?)
    }

    pub fn subtype(&self, ctx: &Context, a: &Expr, b: &Expr) -> TcResult<bool> {
        Ok(conv::subtype(self.heap, ctx, a, b, self.fuel)?)
    }

    pub fn equiv(&self, ctx: &Context, a: &Expr, b: &Expr) -> TcResult<bool> {
        Ok(conv::equiv(self.heap, ctx, a, b, self.fuel)?)
    }

    fn sort_of(&self, ctx: &Context, ty: &Expr) -> TcResult<Universe> {
        let t = self.infer(ctx, ty)?;
        match self.nf(ctx, &t)? {
            Expr::Univ(u) => Ok(u),
            other => Err(TypeError::new(
                ErrorKind::UniverseError,
                format!("expected a type, but {} has type {}", kind_name(ty), kind_name(&other)),
            )),
        }
    }

    /// `ctx ⊢ e : expected` via the conversion rule.
    pub fn check(&self, ctx: &Context, e: &Expr, expected: &Expr) -> TcResult<()> {
        let found = self.infer(ctx, e)?;
        if self.subtype(ctx, &found, expected)? {
            Ok(())
        } else {
            Err(TypeError::new(
                ErrorKind::SubtypeFail,
                format!(
                    "{} has type {} but {} was expected",
                    kind_name(e),
                    kind_name(&found),
                    kind_name(expected)
                ),
            ))
        }
    }

    pub fn infer(&self, ctx: &Context, e: &Expr) -> TcResult<Expr> {
        match e {
            Expr::Var(x) => ctx.lookup(x).map(|entry| entry.ty.clone()).ok_or_else(|| {
                TypeError::new(ErrorKind::UnboundVar, format!("unbound variable {x}"))
            }),
            Expr::Univ(Universe::Star) => Ok(Expr::boxu()),
            Expr::Univ(Universe::Box) => Err(TypeError::new(
                ErrorKind::UniverseError,
                "Box is the top universe and has no type",
            )),
            Expr::UnitTy => Ok(Expr::star()),
            Expr::UnitTm => Ok(Expr::UnitTy),
            Expr::Loc(l) => match self.heap.cell(*l) {
                Some(cell) if self.lang == Lang::Target => Ok(cell.cell_type.clone()),
                _ => Err(TypeError::new(
                    ErrorKind::UnknownLoc,
                    format!("location {l} is not allocated"),
                )),
            },
            Expr::Let {
                name,
                bound,
                annot,
                body,
            } => {
                self.sort_of(ctx, annot).map_err(|err| err.at(1))?;
                self.check(ctx, bound, annot).map_err(|err| err.at(0))?;
                let (inner, x, renamed) =
                    ctx.bind(name, (**annot).clone(), Some((**bound).clone()), &[body]);
                let ty = self.infer(&inner, &renamed[0]).map_err(|err| err.at(2))?;
                Ok(subst(&ty, bound, &x))
            }
            Expr::Pi { name, dom, cod } => {
                self.sort_of(ctx, dom).map_err(|err| err.at(0))?;
                let (inner, _, renamed) = ctx.bind(name, (**dom).clone(), None, &[cod]);
                let s = self.sort_of(&inner, &renamed[0]).map_err(|err| err.at(1))?;
                Ok(Expr::Univ(s))
            }
            Expr::Sigma { name, dom, cod, .. } => {
                let s1 = self.sort_of(ctx, dom).map_err(|err| err.at(0))?;
                let (inner, _, renamed) = ctx.bind(name, (**dom).clone(), None, &[cod]);
                let s2 = self.sort_of(&inner, &renamed[0]).map_err(|err| err.at(1))?;
                // Σ lives in {(⋆,⋆,⋆), (□,□,□)}; a ⋆ component lifts to □.
                Ok(Expr::Univ(s1.max(s2)))
            }
            Expr::CodeTy {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                result,
            } => {
                self.sort_of(ctx, env_ty).map_err(|err| err.at(0))?;
                let (c1, _, r1) = ctx.bind(env_name, (**env_ty).clone(), None, &[arg_ty, result]);
                self.sort_of(&c1, &r1[0]).map_err(|err| err.at(1))?;
                let (c2, _, r2) = c1.bind(arg_name, r1[0].clone(), None, &[&r1[1]]);
                let s = self.sort_of(&c2, &r2[0]).map_err(|err| err.at(2))?;
                Ok(Expr::Univ(s))
            }
            Expr::Code {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                body,
            } => {
                let fv = e.free_vars();
                if !fv.is_empty() {
                    let names: Vec<String> = fv.iter().map(|n| n.to_string()).collect();
                    return Err(TypeError::new(
                        ErrorKind::OpenCode,
                        format!("code mentions free variables {}", names.join(", ")),
                    ));
                }
                // Code is checked in the empty context.
                let empty = Context::new();
                self.sort_of(&empty, env_ty).map_err(|err| err.at(0))?;
                let (c1, _, r1) = empty.bind(env_name, (**env_ty).clone(), None, &[arg_ty, body]);
                self.sort_of(&c1, &r1[0]).map_err(|err| err.at(1))?;
                let (c2, x, r2) = c1.bind(arg_name, r1[0].clone(), None, &[&r1[1]]);
                let result = self.infer(&c2, &r2[0]).map_err(|err| err.at(2))?;
                self.sort_of(&c2, &result).map_err(|err| err.at(2))?;
                Ok(Expr::code_ty(env_name.clone(), (**env_ty).clone(), x, r1[0].clone(), result))
            }
            Expr::Clo { code, env, annot } => {
                let code_ty = self.infer(ctx, code).map_err(|err| err.at(0))?;
                let Expr::CodeTy {
                    env_name,
                    env_ty,
                    arg_name,
                    arg_ty,
                    result,
                } = self.nf(ctx, &code_ty).map_err(|err| err.at(0))?
                else {
                    return Err(TypeError::new(
                        ErrorKind::NotAFunction,
                        format!("closure code has type {}, not a code type", kind_name(&code_ty)),
                    )
                    .at(0));
                };
                self.check(ctx, env, &env_ty).map_err(|err| err.at(1))?;
                self.sort_of(ctx, annot).map_err(|err| err.at(2))?;
                if !matches!(self.nf(ctx, annot)?, Expr::Pi { .. }) {
                    return Err(TypeError::new(
                        ErrorKind::AnnotMismatch,
                        format!("closure annotation {} is not a Pi type", kind_name(annot)),
                    )
                    .at(2));
                }
                let computed = subst(&Expr::pi(arg_name, *arg_ty, *result), env, &env_name);
                if !self.subtype(ctx, &computed, annot)? {
                    return Err(TypeError::new(
                        ErrorKind::AnnotMismatch,
                        format!(
                            "closure has type {} but is annotated {}",
                            kind_name(&computed),
                            kind_name(annot)
                        ),
                    )
                    .at(2));
                }
                Ok((**annot).clone())
            }
            Expr::App(f, a) => {
                let fty = self.infer(ctx, f).map_err(|err| err.at(0))?;
                match self.nf(ctx, &fty).map_err(|err| err.at(0))? {
                    Expr::Pi { name, dom, cod } => {
                        self.check(ctx, a, &dom).map_err(|err| err.at(1))?;
                        Ok(subst(&cod, a, &name))
                    }
                    other => Err(TypeError::new(
                        ErrorKind::NotAFunction,
                        format!("{} has type {}, not a Pi type", kind_name(f), kind_name(&other)),
                    )
                    .at(0)),
                }
            }
            Expr::Pair { fst, snd, annot } => {
                self.sort_of(ctx, annot).map_err(|err| err.at(2))?;
                let Expr::Sigma { name, dom, cod, .. } = self.nf(ctx, annot)? else {
                    return Err(TypeError::new(
                        ErrorKind::AnnotMismatch,
                        format!("pair annotation {} is not a Sigma type", kind_name(annot)),
                    )
                    .at(2));
                };
                self.check(ctx, fst, &dom).map_err(|err| err.at(0))?;
                self.check(ctx, snd, &subst(&cod, fst, &name))
                    .map_err(|err| err.at(1))?;
                Ok((**annot).clone())
            }
            Expr::Fst(t) => {
                let (_, dom, f1, _, f2) = self.sigma_of(ctx, t)?;
                if f1 != Flag::Init {
                    return Err(flag_error("fst", (f1, f2), "(1,_)"));
                }
                Ok(dom)
            }
            Expr::Snd(t) => {
                let (name, _, f1, cod, f2) = self.sigma_of(ctx, t)?;
                if (f1, f2) != (Flag::Init, Flag::Init) {
                    return Err(flag_error("snd", (f1, f2), "(1,1)"));
                }
                Ok(subst(&cod, &Expr::fst((**t).clone()), &name))
            }
            Expr::Malloc {
                name,
                fst_ty,
                snd_ty,
            } => {
                self.sort_of(ctx, fst_ty).map_err(|err| err.at(0))?;
                let (inner, _, renamed) = ctx.bind(name, (**fst_ty).clone(), None, &[snd_ty]);
                self.sort_of(&inner, &renamed[0]).map_err(|err| err.at(1))?;
                Ok(Expr::sigma_flagged(
                    name.clone(),
                    (**fst_ty).clone(),
                    Flag::Uninit,
                    (**snd_ty).clone(),
                    Flag::Uninit,
                ))
            }
            Expr::Assign1(t, v) => {
                let (name, dom, f1, cod, f2) = self.sigma_of(ctx, t)?;
                if f1 != Flag::Uninit {
                    return Err(flag_error("assign1", (f1, f2), "(0,_)"));
                }
                self.check(ctx, v, &dom).map_err(|err| err.at(1))?;
                Ok(Expr::sigma_flagged(name, dom, Flag::Init, cod, f2))
            }
            Expr::Assign2(t, v) => {
                let (name, dom, f1, cod, f2) = self.sigma_of(ctx, t)?;
                if (f1, f2) != (Flag::Init, Flag::Uninit) {
                    return Err(flag_error("assign2", (f1, f2), "(1,0)"));
                }
                let expected = subst(&cod, &Expr::fst((**t).clone()), &name);
                self.check(ctx, v, &expected).map_err(|err| err.at(1))?;
                Ok(Expr::sigma_flagged(name, dom, Flag::Init, cod, Flag::Init))
            }
            Expr::CTag(t) => {
                let (name, code_ty, f1, env_ty, f2) = self.sigma_of(ctx, t)?;
                if (f1, f2) != (Flag::Init, Flag::Init) {
                    return Err(flag_error("ctag", (f1, f2), "(1,1)"));
                }
                let Expr::CodeTy {
                    env_name,
                    env_ty: code_env,
                    arg_name,
                    arg_ty,
                    result,
                } = code_ty
                else {
                    return Err(TypeError::new(
                        ErrorKind::AnnotMismatch,
                        format!(
                            "ctag expects a pair of code and environment, first component has type {}",
                            kind_name(&code_ty)
                        ),
                    )
                    .at(0));
                };
                let env_ty = subst(&env_ty, &Expr::fst((**t).clone()), &name);
                if !self.equiv(ctx, &env_ty, &code_env)? {
                    return Err(TypeError::new(
                        ErrorKind::AnnotMismatch,
                        format!(
                            "ctag environment has type {} but the code expects {}",
                            kind_name(&env_ty),
                            kind_name(&code_env)
                        ),
                    )
                    .at(0));
                }
                let env = Expr::snd((**t).clone());
                Ok(subst(&Expr::pi(arg_name, *arg_ty, *result), &env, &env_name))
            }
        }
    }

    /// Infers the type of `t` and exposes it as a Σ-type.
    fn sigma_of(
        &self,
        ctx: &Context,
        t: &Expr,
    ) -> TcResult<(crate::syntax::Name, Expr, Flag, Expr, Flag)> {
        let ty = self.infer(ctx, t).map_err(|err| err.at(0))?;
        match self.nf(ctx, &ty).map_err(|err| err.at(0))? {
            Expr::Sigma {
                name,
                dom,
                flag1,
                cod,
                flag2,
            } => Ok((name, *dom, flag1, *cod, flag2)),
            other => Err(TypeError::new(
                ErrorKind::NotAPair,
                format!("{} has type {}, not a Sigma type", kind_name(t), kind_name(&other)),
            )
            .at(0)),
        }
    }
}

fn flag_error(op: &str, found: (Flag, Flag), needed: &str) -> TypeError {
    TypeError::new(
        ErrorKind::FlagError,
        format!(
            "{op} needs initialization flags {needed}, found ({},{})",
            found.0, found.1
        ),
    )
    .at(0)
}
