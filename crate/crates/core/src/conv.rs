//! Full normalization, definitional equivalence and cumulative subtyping.
//!
//! One normalizer serves both languages. It contracts closure application
//! (source closures and tagged target closures), let, projections out of
//! source pairs and out of initialization chains `assign2 (assign1 (malloc
//! ..) v1) v2`, and unfolds let-definitions from the context. Heap
//! locations read back as the initialization chain that would rebuild their
//! cell, so normal forms never mention locations and two cells with equal
//! contents are convertible.

use crate::error::FuelExhausted;
use crate::syntax::{alpha_eq, fresh_name, rename, subst, subst_many, Context, Expr, Name, Universe};
use crate::target::Heap;

/// Default number of contractions allowed per judgment.
pub const DEFAULT_FUEL: u64 = 100_000;

struct Normalizer<'a> {
    heap: &'a Heap,
    scope: Vec<(Name, Option<Expr>)>,
    budget: u64,
    used: u64,
}

impl<'a> Normalizer<'a> {
    fn new(heap: &'a Heap, ctx: &Context, budget: u64) -> Self {
        Normalizer {
            heap,
            scope: ctx
                .entries()
                .iter()
                .map(|e| (e.name.clone(), e.def.clone()))
                .collect(),
            budget,
            used: 0,
        }
    }

    fn tick(&mut self) -> Result<(), FuelExhausted> {
        if self.used >= self.budget {
            return Err(FuelExhausted(self.used));
        }
        self.used += 1;
        Ok(())
    }

    fn in_scope(&self, x: &str) -> bool {
        self.scope.iter().any(|(n, _)| n.as_str() == x)
    }

    /// Pushes binder `b`, renaming it when it would shadow a scope entry so
    /// that unfolded definitions can never be captured.
    fn enter(&mut self, b: &Name, bodies: &[&Expr]) -> (Name, Vec<Expr>) {
        if !self.in_scope(b.as_str()) {
            self.scope.push((b.clone(), None));
            return (b.clone(), bodies.iter().map(|e| (*e).clone()).collect());
        }
        let fv: Vec<Name> = bodies.iter().flat_map(|e| e.free_vars()).collect();
        let fresh = fresh_name(b, |c| self.in_scope(c) || fv.iter().any(|n| n.as_str() == c));
        self.scope.push((fresh.clone(), None));
        let renamed = bodies.iter().map(|e| rename(e, b, &fresh)).collect();
        (fresh, renamed)
    }

    fn leave(&mut self, n: usize) {
        for _ in 0..n {
            self.scope.pop();
        }
    }

    fn nf(&mut self, e: &Expr) -> Result<Expr, FuelExhausted> {
        match e {
            Expr::Var(x) => {
                let def = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(n, _)| n == x)
                    .and_then(|(_, d)| d.clone());
                match def {
                    Some(d) => {
                        self.tick()?;
                        self.nf(&d)
                    }
                    None => Ok(e.clone()),
                }
            }
            Expr::Univ(_) | Expr::UnitTm | Expr::UnitTy => Ok(e.clone()),
            Expr::Loc(l) => match self.heap.cell(*l) {
                Some(cell) => {
                    self.tick()?;
                    self.nf(&cell.construction())
                }
                None => Ok(e.clone()),
            },
            Expr::Let {
                name, bound, body, ..
            } => {
                self.tick()?;
                self.nf(&subst(body, bound, name))
            }
            Expr::App(f, a) => {
                let f = self.nf(f)?;
                let a = self.nf(a)?;
                match closure_parts(&f) {
                    Some((n, x, body, env)) => {
                        self.tick()?;
                        self.nf(&subst_many(&body, &[(n, env), (x, a)]))
                    }
                    None => Ok(Expr::app(f, a)),
                }
            }
            Expr::Fst(t) => {
                let t = self.nf(t)?;
                match project(&t, 1) {
                    Some(v) => {
                        self.tick()?;
                        Ok(v)
                    }
                    None => Ok(Expr::fst(t)),
                }
            }
            Expr::Snd(t) => {
                let t = self.nf(t)?;
                match project(&t, 2) {
                    Some(v) => {
                        self.tick()?;
                        Ok(v)
                    }
                    None => Ok(Expr::snd(t)),
                }
            }
            Expr::Pi { name, dom, cod } => {
                let dom = self.nf(dom)?;
                let (x, b) = self.enter(name, &[cod]);
                let cod = self.nf(&b[0]);
                self.leave(1);
                Ok(Expr::pi(x, dom, cod?))
            }
            Expr::Sigma {
                name,
                dom,
                flag1,
                cod,
                flag2,
            } => {
                let dom = self.nf(dom)?;
                let (x, b) = self.enter(name, &[cod]);
                let cod = self.nf(&b[0]);
                self.leave(1);
                Ok(Expr::sigma_flagged(x, dom, *flag1, cod?, *flag2))
            }
            Expr::Malloc {
                name,
                fst_ty,
                snd_ty,
            } => {
                let a = self.nf(fst_ty)?;
                let (x, b) = self.enter(name, &[snd_ty]);
                let bty = self.nf(&b[0]);
                self.leave(1);
                Ok(Expr::malloc(x, a, bty?))
            }
            Expr::Code {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                body: inner,
            }
            | Expr::CodeTy {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                result: inner,
            } => {
                let env_ty = self.nf(env_ty)?;
                let (n, rest) = self.enter(env_name, &[arg_ty, inner]);
                let parts = (|| {
                    let arg_ty = self.nf(&rest[0])?;
                    let (x, b) = self.enter(arg_name, &[&rest[1]]);
                    let inner = self.nf(&b[0]);
                    self.leave(1);
                    Ok((arg_ty, x, inner?))
                })();
                self.leave(1);
                let (arg_ty, x, inner) = parts?;
                Ok(if matches!(e, Expr::Code { .. }) {
                    Expr::code(n, env_ty, x, arg_ty, inner)
                } else {
                    Expr::code_ty(n, env_ty, x, arg_ty, inner)
                })
            }
            Expr::Clo { code, env, annot } => {
                Ok(Expr::clo(self.nf(code)?, self.nf(env)?, self.nf(annot)?))
            }
            Expr::Pair { fst, snd, annot } => {
                Ok(Expr::pair(self.nf(fst)?, self.nf(snd)?, self.nf(annot)?))
            }
            Expr::Assign1(t, v) => Ok(Expr::assign1(self.nf(t)?, self.nf(v)?)),
            Expr::Assign2(t, v) => Ok(Expr::assign2(self.nf(t)?, self.nf(v)?)),
            Expr::CTag(t) => Ok(Expr::ctag(self.nf(t)?)),
        }
    }
}

/// Component `i` (1 or 2) of a source pair or of an initialization chain.
pub(crate) fn project(t: &Expr, i: u8) -> Option<Expr> {
    match (t, i) {
        (Expr::Pair { fst, .. }, 1) => Some((**fst).clone()),
        (Expr::Pair { snd, .. }, 2) => Some((**snd).clone()),
        (Expr::Assign1(_, v), 1) | (Expr::Assign2(_, v), 2) => Some((**v).clone()),
        (Expr::Assign1(inner, _), 2) | (Expr::Assign2(inner, _), 1) => project(inner, i),
        _ => None,
    }
}

/// `(env binder, arg binder, body, environment)` of a closure value.
fn closure_parts(f: &Expr) -> Option<(Name, Name, Expr, Expr)> {
    let (code, env) = match f {
        Expr::Clo { code, env, .. } => ((**code).clone(), (**env).clone()),
        Expr::CTag(t) => (project(t, 1)?, project(t, 2)?),
        _ => return None,
    };
    match code {
        Expr::Code {
            env_name,
            arg_name,
            body,
            ..
        } => Some((env_name, arg_name, *body, env)),
        _ => None,
    }
}

/// Full normal form of `e` under the definitions in `ctx` and the cells of
/// `heap`.
pub fn normalize(heap: &Heap, ctx: &Context, e: &Expr, fuel: u64) -> Result<Expr, FuelExhausted> {
    Normalizer::new(heap, ctx, fuel).nf(e)
}

/// Definitional equivalence: equal normal forms up to α.
pub fn equiv(heap: &Heap, ctx: &Context, a: &Expr, b: &Expr, fuel: u64) -> Result<bool, FuelExhausted> {
    let mut n = Normalizer::new(heap, ctx, fuel);
    let a = n.nf(a)?;
    let b = n.nf(b)?;
    Ok(alpha_eq(&a, &b))
}

/// Cumulative subtyping `a ≼ b`.
pub fn subtype(heap: &Heap, ctx: &Context, a: &Expr, b: &Expr, fuel: u64) -> Result<bool, FuelExhausted> {
    let mut n = Normalizer::new(heap, ctx, fuel);
    let a = n.nf(a)?;
    let b = n.nf(b)?;
    Ok(subtype_nf(&a, &b))
}

/// Subtyping on normal forms.
pub(crate) fn subtype_nf(a: &Expr, b: &Expr) -> bool {
    if alpha_eq(a, b) {
        return true;
    }
    match (a, b) {
        (Expr::Univ(Universe::Star), Expr::Univ(Universe::Box)) => true,
        (
            Expr::Pi {
                name: x1,
                dom: d1,
                cod: c1,
            },
            Expr::Pi {
                name: x2,
                dom: d2,
                cod: c2,
            },
        ) => {
            if !alpha_eq(d1, d2) {
                return false;
            }
            let (c1, c2) = open_common(x1, c1, x2, c2);
            subtype_nf(&c1, &c2)
        }
        (
            Expr::CodeTy {
                env_name: n1,
                env_ty: e1,
                arg_name: x1,
                arg_ty: a1,
                result: r1,
            },
            Expr::CodeTy {
                env_name: n2,
                env_ty: e2,
                arg_name: x2,
                arg_ty: a2,
                result: r2,
            },
        ) => {
            if !alpha_eq(e1, e2) {
                return false;
            }
            let (a1, a2) = open_common(n1, a1, n2, a2);
            if !alpha_eq(&a1, &a2) {
                return false;
            }
            // Open both binders at once by wrapping in a Pi.
            let p1 = Expr::pi(x1.clone(), Expr::UnitTy, (**r1).clone());
            let p2 = Expr::pi(x2.clone(), Expr::UnitTy, (**r2).clone());
            let (p1, p2) = open_common(n1, &p1, n2, &p2);
            match (p1, p2) {
                (
                    Expr::Pi {
                        name: y1, cod: s1, ..
                    },
                    Expr::Pi {
                        name: y2, cod: s2, ..
                    },
                ) => {
                    let (s1, s2) = open_common(&y1, &s1, &y2, &s2);
                    subtype_nf(&s1, &s2)
                }
                _ => unreachable!("wrapped in Pi above"),
            }
        }
        _ => false,
    }
}

/// Renames the binders `x1` in `e1` and `x2` in `e2` to one common fresh name.
fn open_common(x1: &Name, e1: &Expr, x2: &Name, e2: &Expr) -> (Expr, Expr) {
    if x1 == x2 {
        return (e1.clone(), e2.clone());
    }
    let z = if !e2.has_free(x1) {
        x1.clone()
    } else {
        let fv1 = e1.free_vars();
        let fv2 = e2.free_vars();
        fresh_name(x1, |c| {
            let n = Name::new(c);
            fv1.contains(&n) || fv2.contains(&n)
        })
    };
    (rename(e1, x1, &z), rename(e2, x2, &z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Flag;

    fn empty() -> (Heap, Context) {
        (Heap::new(), Context::new())
    }

    #[test]
    fn projections_of_chains_reduce() {
        let (h, c) = empty();
        let chain = Expr::assign2(
            Expr::assign1(Expr::malloc("x", Expr::UnitTy, Expr::UnitTy), Expr::UnitTm),
            Expr::UnitTy,
        );
        assert_eq!(normalize(&h, &c, &Expr::fst(chain.clone()), 10).unwrap(), Expr::UnitTm);
        assert_eq!(normalize(&h, &c, &Expr::snd(chain), 10).unwrap(), Expr::UnitTy);
        let half = Expr::assign1(Expr::malloc("x", Expr::UnitTy, Expr::UnitTy), Expr::UnitTm);
        let stuck = Expr::snd(half);
        assert_eq!(normalize(&h, &c, &stuck, 10).unwrap(), stuck);
    }

    #[test]
    fn definitions_unfold() {
        let h = Heap::new();
        let c = Context::new().with_def("t", Expr::UnitTy, Expr::star());
        assert!(equiv(&h, &c, &Expr::var("t"), &Expr::UnitTy, 10).unwrap());
    }

    #[test]
    fn unfolding_is_capture_free() {
        // t = z, and the Pi binder z must not capture the unfolded z.
        let h = Heap::new();
        let c = Context::new()
            .with("z", Expr::star())
            .with_def("t", Expr::var("z"), Expr::star());
        let e = Expr::pi("z", Expr::UnitTy, Expr::var("t"));
        let out = normalize(&h, &c, &e, 10).unwrap();
        match out {
            Expr::Pi { name, cod, .. } => {
                assert_ne!(name.as_str(), "z");
                assert_eq!(*cod, Expr::var("z"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fuel_runs_out() {
        let (h, c) = empty();
        let e = Expr::let_("a", Expr::UnitTm, Expr::UnitTy, Expr::let_("b", Expr::var("a"), Expr::UnitTy, Expr::var("b")));
        assert!(normalize(&h, &c, &e, 1).is_err());
        assert_eq!(normalize(&h, &c, &e, 2).unwrap(), Expr::UnitTm);
    }

    #[test]
    fn subtyping_rules() {
        let (h, c) = empty();
        assert!(subtype(&h, &c, &Expr::star(), &Expr::boxu(), 10).unwrap());
        assert!(!subtype(&h, &c, &Expr::boxu(), &Expr::star(), 10).unwrap());
        let a = Expr::pi("x", Expr::UnitTy, Expr::star());
        let b = Expr::pi("y", Expr::UnitTy, Expr::boxu());
        assert!(subtype(&h, &c, &a, &b, 10).unwrap());
        assert!(!subtype(&h, &c, &b, &a, 10).unwrap());
        let s10 = Expr::sigma_flagged("x", Expr::UnitTy, Flag::Init, Expr::UnitTy, Flag::Uninit);
        let s11 = Expr::sigma("x", Expr::UnitTy, Expr::UnitTy);
        assert!(!subtype(&h, &c, &s10, &s11, 10).unwrap());
    }

    #[test]
    fn code_types_are_covariant_in_result() {
        let (h, c) = empty();
        let a = Expr::code_ty("n", Expr::UnitTy, "x", Expr::UnitTy, Expr::star());
        let b = Expr::code_ty("m", Expr::UnitTy, "y", Expr::UnitTy, Expr::boxu());
        assert!(subtype(&h, &c, &a, &b, 10).unwrap());
        let dep1 = Expr::code_ty("n", Expr::star(), "x", Expr::var("n"), Expr::var("n"));
        let dep2 = Expr::code_ty("m", Expr::star(), "y", Expr::var("m"), Expr::var("m"));
        assert!(subtype(&h, &c, &dep1, &dep2, 10).unwrap());
    }
}
