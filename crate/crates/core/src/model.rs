//! Emits target types and terms into an extensional CIC model where a
//! flagged Σ-type is a pair of `Maybe`s together with a proof of which
//! slots are filled. The output is text for an external checker; nothing
//! here checks it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::syntax::{fresh_name, subst, Expr, Flag, Name, Universe};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelExpr {
    Var(Name),
    Univ(Universe),
    UnitTy,
    UnitTm,
    Pi(Name, Box<ModelExpr>, Box<ModelExpr>),
    Sigma(Name, Box<ModelExpr>, Box<ModelExpr>),
    Exists(Name, Box<ModelExpr>, Box<ModelExpr>),
    Eq(Box<ModelExpr>, Box<ModelExpr>),
    Pair(Box<ModelExpr>, Box<ModelExpr>),
    Maybe(Box<ModelExpr>),
    Just(Box<ModelExpr>),
    Nothing,
    App(Box<ModelExpr>, Box<ModelExpr>),
    Fun(Name, Box<ModelExpr>, Box<ModelExpr>),
    Let(Name, Box<ModelExpr>, Box<ModelExpr>, Box<ModelExpr>),
    Refl,
    /// Witness and proof of an existential.
    ExIntro(Box<ModelExpr>, Box<ModelExpr>),
    MaybeFst,
    MaybeSnd,
    /// `maybe-dep A F m` is `F a` when `m = Just a`.
    MaybeDep,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("unsupported in the model: {0}")]
pub struct Unsupported(pub String);

type MResult = Result<ModelExpr, Unsupported>;

fn bx(m: ModelExpr) -> Box<ModelExpr> {
    Box::new(m)
}

fn app(f: ModelExpr, a: ModelExpr) -> ModelExpr {
    ModelExpr::App(bx(f), bx(a))
}

fn pair(a: ModelExpr, b: ModelExpr) -> ModelExpr {
    ModelExpr::Pair(bx(a), bx(b))
}

fn just(a: ModelExpr) -> ModelExpr {
    ModelExpr::Just(bx(a))
}

impl ModelExpr {
    fn free_in(&self, x: &Name) -> bool {
        use ModelExpr::*;
        match self {
            Var(y) => y == x,
            Pi(y, a, b) | Sigma(y, a, b) | Exists(y, a, b) | Fun(y, a, b) => {
                a.free_in(x) || (y != x && b.free_in(x))
            }
            Let(y, e, t, b) => e.free_in(x) || t.free_in(x) || (y != x && b.free_in(x)),
            Eq(a, b) | Pair(a, b) | App(a, b) | ExIntro(a, b) => a.free_in(x) || b.free_in(x),
            Maybe(a) | Just(a) => a.free_in(x),
            _ => false,
        }
    }

    fn uses_maybe_dep(&self) -> bool {
        use ModelExpr::*;
        match self {
            MaybeDep => true,
            Pi(_, a, b) | Sigma(_, a, b) | Exists(_, a, b) | Fun(_, a, b) => {
                a.uses_maybe_dep() || b.uses_maybe_dep()
            }
            Let(_, e, t, b) => e.uses_maybe_dep() || t.uses_maybe_dep() || b.uses_maybe_dep(),
            Eq(a, b) | Pair(a, b) | App(a, b) | ExIntro(a, b) => {
                a.uses_maybe_dep() || b.uses_maybe_dep()
            }
            Maybe(a) | Just(a) => a.uses_maybe_dep(),
            _ => false,
        }
    }
}

/// The model of a target type. Flagged Σ-types become proof-carrying
/// `Maybe` pairs; everything else maps structurally.
pub fn model_type(ty: &Expr) -> MResult {
    Emitter::default().term(ty)
}

/// The model of a target term. Projections become `maybe-fst` and
/// `maybe-snd`; allocation chains whose stages are known statically become
/// pairs carrying their fill proofs.
pub fn model_term(e: &Expr) -> MResult {
    Emitter::default().term(e)
}

/// The flag pattern `(f1, f2)` of every Σ-type in `e`, in order of first
/// appearance.
pub fn schemas_used(e: &Expr) -> Vec<(u8, u8)> {
    fn walk(e: &Expr, out: &mut Vec<(u8, u8)>) {
        if let Expr::Sigma { flag1, flag2, .. } = e {
            let f = (flag1.bit(), flag2.bit());
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if let Expr::Malloc { .. } = e {
            if !out.contains(&(0, 0)) {
                out.push((0, 0));
            }
        }
        for c in e.children() {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    walk(e, &mut out);
    out
}

/// What is statically known about a let-bound allocation.
#[derive(Clone)]
struct Chain {
    fst: Option<Expr>,
    snd: Option<Expr>,
}

#[derive(Default)]
struct Emitter {
    chains: BTreeMap<Name, Chain>,
}

impl Emitter {
    fn term(&mut self, e: &Expr) -> MResult {
        use ModelExpr as M;
        Ok(match e {
            Expr::Var(x) => match self.chains.get(x).cloned() {
                Some(c) => self.chain_model(&c)?,
                None => M::Var(x.clone()),
            },
            Expr::Univ(u) => M::Univ(*u),
            Expr::UnitTy => M::UnitTy,
            Expr::UnitTm => M::UnitTm,
            Expr::Pi { name, dom, cod } => self.binder(name, dom, cod, M::Pi)?,
            Expr::CodeTy {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                result,
            } => {
                let inner = Expr::pi(arg_name.clone(), (**arg_ty).clone(), (**result).clone());
                self.binder(env_name, env_ty, &inner, M::Pi)?
            }
            Expr::Code {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                body,
            } => {
                let a1 = self.term(env_ty)?;
                let a = self.scoped(&[env_name], |m| m.term(arg_ty))?;
                let b = self.scoped(&[env_name, arg_name], |m| m.term(body))?;
                M::Fun(env_name.clone(), bx(a1), bx(M::Fun(arg_name.clone(), bx(a), bx(b))))
            }
            Expr::Sigma {
                name,
                dom,
                flag1,
                cod,
                flag2,
            } => self.sigma(name, dom, *flag1, cod, *flag2)?,
            Expr::Let {
                name,
                bound,
                annot,
                body,
            } => {
                if let Some(chain) = self.static_chain(bound)? {
                    let saved = self.chains.insert(name.clone(), chain);
                    let out = self.term(body);
                    match saved {
                        Some(c) => self.chains.insert(name.clone(), c),
                        None => self.chains.remove(name),
                    };
                    return out;
                }
                let b = self.term(bound)?;
                let t = self.term(annot)?;
                let body = self.scoped(&[name], |m| m.term(body))?;
                M::Let(name.clone(), bx(b), bx(t), bx(body))
            }
            Expr::Clo { code, env, .. } => app(self.term(code)?, self.term(env)?),
            Expr::App(f, a) => app(self.term(f)?, self.term(a)?),
            Expr::Fst(t) => app(M::MaybeFst, self.term(t)?),
            Expr::Snd(t) => app(M::MaybeSnd, self.term(t)?),
            Expr::CTag(t) => {
                let m = self.term(t)?;
                app(app(M::MaybeFst, m.clone()), app(M::MaybeSnd, m))
            }
            Expr::Malloc { .. } | Expr::Assign1(..) | Expr::Assign2(..) => {
                match self.static_chain(e)? {
                    Some(c) => self.chain_model(&c)?,
                    None => {
                        return Err(Unsupported(format!(
                            "assignment to a pair whose contents are not known statically: {e}"
                        )))
                    }
                }
            }
            Expr::Loc(l) => return Err(Unsupported(format!("heap location {l}"))),
            Expr::Pair { .. } => return Err(Unsupported(format!("source pair {e}"))),
        })
    }

    /// Runs `f` with the chain bindings of `names` hidden.
    fn scoped(&mut self, names: &[&Name], f: impl FnOnce(&mut Self) -> MResult) -> MResult {
        let saved: Vec<(Name, Chain)> = names
            .iter()
            .filter_map(|n| self.chains.remove(*n).map(|c| ((*n).clone(), c)))
            .collect();
        let out = f(self);
        self.chains.extend(saved);
        out
    }

    fn binder(
        &mut self,
        x: &Name,
        dom: &Expr,
        cod: &Expr,
        mk: fn(Name, Box<ModelExpr>, Box<ModelExpr>) -> ModelExpr,
    ) -> MResult {
        let d = self.term(dom)?;
        let c = self.scoped(&[x], |m| m.term(cod))?;
        Ok(mk(x.clone(), bx(d), bx(c)))
    }

    /// Reads an allocation chain `malloc`, `assign1`, `assign2`, possibly
    /// through let-bound names.
    fn static_chain(&self, e: &Expr) -> Result<Option<Chain>, Unsupported> {
        Ok(match e {
            Expr::Malloc { .. } => Some(Chain {
                fst: None,
                snd: None,
            }),
            Expr::Var(x) => self.chains.get(x).cloned(),
            Expr::Assign1(t, v) => self.static_chain(t)?.map(|c| Chain {
                fst: Some((**v).clone()),
                ..c
            }),
            Expr::Assign2(t, v) => self.static_chain(t)?.map(|c| Chain {
                snd: Some((**v).clone()),
                ..c
            }),
            _ => None,
        })
    }

    /// `pair (pair m1 m2) proof` with the proof shape fixed by which
    /// slots are filled.
    fn chain_model(&mut self, c: &Chain) -> MResult {
        use ModelExpr as M;
        let v1 = c.fst.as_ref().map(|v| self.term(v)).transpose()?;
        let v2 = c.snd.as_ref().map(|v| self.term(v)).transpose()?;
        let slot = |v: &Option<ModelExpr>| v.clone().map(just).unwrap_or(M::Nothing);
        let data = pair(slot(&v1), slot(&v2));
        let mut proof = M::Refl;
        for v in [v2, v1].into_iter().flatten() {
            proof = M::ExIntro(bx(v), bx(proof));
        }
        Ok(pair(data, proof))
    }

    fn sigma(&mut self, x: &Name, a: &Expr, f1: Flag, b: &Expr, f2: Flag) -> MResult {
        use ModelExpr as M;
        let dependent = b.has_free(x);
        let ma = self.term(a)?;
        let mb = self.scoped(&[x], |m| m.term(b))?;
        let mut taken: BTreeSet<Name> = a.free_vars();
        taken.extend(b.free_vars());
        taken.insert(x.clone());
        let p = avoid("p", &taken);
        let (e1, e2) = match (f1, f2) {
            (Flag::Init, Flag::Init) => {
                let e1 = avoid("e1", &taken);
                taken.insert(e1.clone());
                (e1, avoid("e2", &taken))
            }
            _ => {
                let e = avoid("e", &taken);
                (e.clone(), e)
            }
        };

        let second = if dependent {
            let family = M::Fun(x.clone(), bx(ma.clone()), bx(mb.clone()));
            app(app(app(M::MaybeDep, ma.clone()), family), M::Var(x.clone()))
        } else {
            mb.clone()
        };
        let carrier = M::Sigma(x.clone(), bx(M::Maybe(bx(ma.clone()))), bx(M::Maybe(bx(second))));
        let eq = |l: ModelExpr, r: ModelExpr| M::Eq(bx(M::Var(p.clone())), bx(pair(l, r)));
        let proof = match (f1, f2) {
            (Flag::Uninit, Flag::Uninit) => eq(M::Nothing, M::Nothing),
            (Flag::Init, Flag::Uninit) => M::Exists(
                e1.clone(),
                bx(ma),
                bx(eq(just(M::Var(e1)), M::Nothing)),
            ),
            (Flag::Init, Flag::Init) => {
                let b_at = self.scoped(&[&e1], |m| m.term(&subst(b, &Expr::Var(e1.clone()), x)))?;
                M::Exists(
                    e1.clone(),
                    bx(ma),
                    bx(M::Exists(
                        e2.clone(),
                        bx(b_at),
                        bx(eq(just(M::Var(e1)), just(M::Var(e2)))),
                    )),
                )
            }
            (Flag::Uninit, Flag::Init) if !dependent => M::Exists(
                e2.clone(),
                bx(mb),
                bx(eq(M::Nothing, just(M::Var(e2)))),
            ),
            (Flag::Uninit, Flag::Init) => {
                return Err(Unsupported(format!(
                    "second slot filled before the first in a dependent pair type over {x}"
                )))
            }
        };
        Ok(M::Sigma(p, bx(carrier), bx(proof)))
    }
}

/// `base` itself unless taken, else the next fresh variant.
fn avoid(base: &str, taken: &BTreeSet<Name>) -> Name {
    let n = Name::new(base);
    if taken.contains(&n) {
        fresh_name(&n, |s| taken.contains(&Name::new(s)))
    } else {
        n
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Low,
    Arrow,
    App,
    Atom,
}

fn prec(m: &ModelExpr) -> Prec {
    use ModelExpr::*;
    match m {
        Pi(x, _, b) if !b.free_in(x) => Prec::Arrow,
        Pi(..) | Sigma(..) | Exists(..) | Fun(..) | Let(..) => Prec::Low,
        App(..) | Eq(..) | Pair(..) | Maybe(_) | Just(_) | ExIntro(..) => Prec::App,
        _ => Prec::Atom,
    }
}

struct Printer<'a>(&'a ModelExpr, Prec);

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Printer(m, min) = *self;
        if prec(m) < min {
            return write!(f, "({})", Printer(m, Prec::Low));
        }
        use ModelExpr::*;
        let arg = |e| Printer(e, Prec::Atom);
        match m {
            Var(x) => write!(f, "{x}"),
            Univ(Universe::Star) => f.write_str("Prop"),
            Univ(Universe::Box) => f.write_str("Type"),
            UnitTy => f.write_str("Unit"),
            UnitTm => f.write_str("unit"),
            Nothing => f.write_str("None"),
            Refl => f.write_str("refl"),
            MaybeFst => f.write_str("maybe-fst"),
            MaybeSnd => f.write_str("maybe-snd"),
            MaybeDep => f.write_str("maybe-dep"),
            Pi(x, a, b) if !b.free_in(x) => {
                write!(f, "{} -> {}", Printer(a, Prec::App), Printer(b, Prec::Arrow))
            }
            Pi(x, a, b) => write!(f, "forall ({x} : {}), {}", Printer(a, Prec::Low), Printer(b, Prec::Low)),
            Sigma(x, a, b) => write!(f, "sigma ({x} : {}), {}", Printer(a, Prec::Low), Printer(b, Prec::Low)),
            Exists(x, a, b) => write!(f, "exists ({x} : {}), {}", Printer(a, Prec::Low), Printer(b, Prec::Low)),
            Fun(x, a, b) => write!(f, "fun ({x} : {}) => {}", Printer(a, Prec::Low), Printer(b, Prec::Low)),
            Let(x, e, t, b) => write!(
                f,
                "let {x} : {} := {} in {}",
                Printer(t, Prec::Low),
                Printer(e, Prec::Low),
                Printer(b, Prec::Low)
            ),
            Eq(a, b) => write!(f, "eq {} {}", arg(a), arg(b)),
            Pair(a, b) => write!(f, "pair {} {}", arg(a), arg(b)),
            ExIntro(a, b) => write!(f, "ex-intro {} {}", arg(a), arg(b)),
            Maybe(a) => write!(f, "Maybe {}", arg(a)),
            Just(a) => write!(f, "Just {}", arg(a)),
            App(a, b) => write!(f, "{} {}", Printer(a, Prec::App), arg(b)),
        }
    }
}

impl fmt::Display for ModelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Printer(self, Prec::Low))
    }
}

/// Prints a model expression.
pub fn emit(m: &ModelExpr) -> String {
    m.to_string()
}

const MAYBE_FST: &str = "maybe-fst : (sigma (p : sigma (x : Maybe A), Maybe B), exists (e : A), eq p (pair (Just e) _)) -> A";
const MAYBE_SND: &str = "maybe-snd : forall (q : sigma (p : sigma (x : Maybe A), Maybe B), exists (e1 : A), exists (e2 : B), eq p (pair (Just e1) (Just e2))), B[maybe-fst q/x]";
const MAYBE_DEP: &str = "maybe-dep : forall (A : Type) (F : A -> Type), Maybe A -> Type";

/// A complete model file: a header recording the input term and the flag
/// schemas it uses, the projection signatures, then the model itself.
pub fn emit_file(input: &str, schemas: &[(u8, u8)], m: &ModelExpr) -> String {
    let mut out = String::new();
    for line in input.trim_end().lines() {
        let _ = writeln!(out, "-- input: {line}");
    }
    let shown: Vec<String> = schemas.iter().map(|(a, b)| format!("({a},{b})")).collect();
    let _ = writeln!(
        out,
        "-- schemas: {}",
        if shown.is_empty() { "none".to_string() } else { shown.join(" ") }
    );
    let _ = writeln!(out, "-- Just payloads are bound by explicit existentials");
    let _ = writeln!(out, "{MAYBE_FST}");
    let _ = writeln!(out, "{MAYBE_SND}");
    if m.uses_maybe_dep() {
        let _ = writeln!(out, "{MAYBE_DEP}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{}", emit(m));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::syntax::Lang;

    fn tgt(s: &str) -> Expr {
        parse(s, Lang::Target).unwrap()
    }

    fn ty(s: &str) -> String {
        emit(&model_type(&tgt(s)).unwrap())
    }

    #[test]
    fn uninitialized_schema() {
        assert_eq!(
            ty("(Sigma (x Unit 0) (Unit 0))"),
            "sigma (p : sigma (x : Maybe Unit), Maybe Unit), eq p (pair None None)"
        );
    }

    #[test]
    fn half_initialized_schema() {
        assert_eq!(
            ty("(Sigma (x A 1) (B 0))"),
            "sigma (p : sigma (x : Maybe A), Maybe B), exists (e : A), eq p (pair (Just e) None)"
        );
    }

    #[test]
    fn initialized_schema() {
        assert_eq!(
            ty("(Sigma (x Unit 1) (Unit 1))"),
            "sigma (p : sigma (x : Maybe Unit), Maybe Unit), exists (e1 : Unit), exists (e2 : Unit), eq p (pair (Just e1) (Just e2))"
        );
    }

    #[test]
    fn dependent_second_component() {
        let s = ty("(Sigma (x Star 1) (x 1))");
        assert!(s.contains("Maybe (maybe-dep Prop (fun (x : Prop) => x) x)"), "{s}");
        assert!(s.contains("exists (e2 : e1)"), "{s}");
    }

    #[test]
    fn structural_cases() {
        assert_eq!(ty("Unit"), "Unit");
        assert_eq!(ty("(Pi (x Unit) Unit)"), "Unit -> Unit");
        assert_eq!(ty("(Pi (A Star) (Pi (x A) A))"), "forall (A : Prop), A -> A");
    }

    #[test]
    fn projections() {
        assert_eq!(emit(&model_term(&tgt("(fst p)")).unwrap()), "maybe-fst p");
        assert_eq!(emit(&model_term(&tgt("(snd p)")).unwrap()), "maybe-snd p");
        assert_eq!(emit(&model_term(&tgt("unit")).unwrap()), "unit");
    }

    #[test]
    fn allocation_chain_becomes_proof_carrying_pair() {
        let e = tgt(
            "(let (y (malloc (x Unit) Unit) (Sigma (x Unit 0) (Unit 0)))
               (let (y1 (assign1 y unit) (Sigma (x Unit 1) (Unit 0)))
                 (let (y2 (assign2 y1 unit) (Sigma (x Unit 1) (Unit 1))) y2)))",
        );
        assert_eq!(
            emit(&model_term(&e).unwrap()),
            "pair (pair (Just unit) (Just unit)) (ex-intro unit (ex-intro unit refl))"
        );
        assert_eq!(
            emit(&model_term(&tgt("(malloc (x Unit) Unit)")).unwrap()),
            "pair (pair None None) refl"
        );
    }

    #[test]
    fn ctag_applies_code_to_environment() {
        assert_eq!(
            emit(&model_term(&tgt("(ctag c)")).unwrap()),
            "maybe-fst c (maybe-snd c)"
        );
    }

    #[test]
    fn locations_are_unsupported() {
        assert!(model_term(&Expr::loc(0)).is_err());
        assert!(model_term(&tgt("(assign1 q unit)")).is_err());
    }

    #[test]
    fn schema_list() {
        let e = tgt("(let (y (malloc (x Unit) Unit) (Sigma (x Unit 0) (Unit 0))) (assign1 y unit))");
        assert_eq!(schemas_used(&e), vec![(0, 0)]);
    }
}
