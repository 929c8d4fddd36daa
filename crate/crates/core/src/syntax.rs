//! Expression syntax shared by the source and target calculi.
//!
//! Terms use named binders. Every operation that goes under a binder is
//! capture-avoiding and every judgment is invariant under [`alpha_eq`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// A variable name. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `Star` is impredicative, `Box` is predicative and has no type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Universe {
    Star,
    Box,
}

/// Initialization flag on a component of a target Σ-type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flag {
    Uninit,
    Init,
}

impl Flag {
    pub fn from_bit(bit: u8) -> Option<Flag> {
        match bit {
            0 => Some(Flag::Uninit),
            1 => Some(Flag::Init),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Flag::Uninit => 0,
            Flag::Init => 1,
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

/// A heap location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location(pub usize);

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which calculus a term is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lang {
    Source,
    Target,
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lang::Source => f.write_str("source"),
            Lang::Target => f.write_str("target"),
        }
    }
}

/// Unified expression tree for both languages.
///
/// `Pair` is source-only; `Malloc`, `Assign1`, `Assign2`, `CTag` are
/// target-only and `Loc` only appears in running target configurations.
/// Source Σ-types are stored with flags `(1, 1)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(Name),
    Univ(Universe),
    UnitTm,
    UnitTy,
    Let {
        name: Name,
        bound: Box<Expr>,
        annot: Box<Expr>,
        body: Box<Expr>,
    },
    Code {
        env_name: Name,
        env_ty: Box<Expr>,
        arg_name: Name,
        arg_ty: Box<Expr>,
        body: Box<Expr>,
    },
    CodeTy {
        env_name: Name,
        env_ty: Box<Expr>,
        arg_name: Name,
        arg_ty: Box<Expr>,
        result: Box<Expr>,
    },
    Clo {
        code: Box<Expr>,
        env: Box<Expr>,
        annot: Box<Expr>,
    },
    Pi {
        name: Name,
        dom: Box<Expr>,
        cod: Box<Expr>,
    },
    App(Box<Expr>, Box<Expr>),
    Pair {
        fst: Box<Expr>,
        snd: Box<Expr>,
        annot: Box<Expr>,
    },
    Sigma {
        name: Name,
        dom: Box<Expr>,
        flag1: Flag,
        cod: Box<Expr>,
        flag2: Flag,
    },
    Fst(Box<Expr>),
    Snd(Box<Expr>),
    Malloc {
        name: Name,
        fst_ty: Box<Expr>,
        snd_ty: Box<Expr>,
    },
    Assign1(Box<Expr>, Box<Expr>),
    Assign2(Box<Expr>, Box<Expr>),
    CTag(Box<Expr>),
    Loc(Location),
}

// Constructors. Keeps test and pass code readable.
impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Name::new(name))
    }

    pub fn star() -> Expr {
        Expr::Univ(Universe::Star)
    }

    pub fn boxu() -> Expr {
        Expr::Univ(Universe::Box)
    }

    pub fn let_(name: impl Into<Name>, bound: Expr, annot: Expr, body: Expr) -> Expr {
        Expr::Let {
            name: name.into(),
            bound: Box::new(bound),
            annot: Box::new(annot),
            body: Box::new(body),
        }
    }

    pub fn code(
        env_name: impl Into<Name>,
        env_ty: Expr,
        arg_name: impl Into<Name>,
        arg_ty: Expr,
        body: Expr,
    ) -> Expr {
        Expr::Code {
            env_name: env_name.into(),
            env_ty: Box::new(env_ty),
            arg_name: arg_name.into(),
            arg_ty: Box::new(arg_ty),
            body: Box::new(body),
        }
    }

    pub fn code_ty(
        env_name: impl Into<Name>,
        env_ty: Expr,
        arg_name: impl Into<Name>,
        arg_ty: Expr,
        result: Expr,
    ) -> Expr {
        Expr::CodeTy {
            env_name: env_name.into(),
            env_ty: Box::new(env_ty),
            arg_name: arg_name.into(),
            arg_ty: Box::new(arg_ty),
            result: Box::new(result),
        }
    }

    pub fn clo(code: Expr, env: Expr, annot: Expr) -> Expr {
        Expr::Clo {
            code: Box::new(code),
            env: Box::new(env),
            annot: Box::new(annot),
        }
    }

    pub fn pi(name: impl Into<Name>, dom: Expr, cod: Expr) -> Expr {
        Expr::Pi {
            name: name.into(),
            dom: Box::new(dom),
            cod: Box::new(cod),
        }
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    pub fn pair(fst: Expr, snd: Expr, annot: Expr) -> Expr {
        Expr::Pair {
            fst: Box::new(fst),
            snd: Box::new(snd),
            annot: Box::new(annot),
        }
    }

    /// Source Σ-type (flags `(1, 1)`).
    pub fn sigma(name: impl Into<Name>, dom: Expr, cod: Expr) -> Expr {
        Expr::sigma_flagged(name, dom, Flag::Init, cod, Flag::Init)
    }

    pub fn sigma_flagged(
        name: impl Into<Name>,
        dom: Expr,
        flag1: Flag,
        cod: Expr,
        flag2: Flag,
    ) -> Expr {
        Expr::Sigma {
            name: name.into(),
            dom: Box::new(dom),
            flag1,
            cod: Box::new(cod),
            flag2,
        }
    }

    pub fn fst(e: Expr) -> Expr {
        Expr::Fst(Box::new(e))
    }

    pub fn snd(e: Expr) -> Expr {
        Expr::Snd(Box::new(e))
    }

    pub fn malloc(name: impl Into<Name>, fst_ty: Expr, snd_ty: Expr) -> Expr {
        Expr::Malloc {
            name: name.into(),
            fst_ty: Box::new(fst_ty),
            snd_ty: Box::new(snd_ty),
        }
    }

    pub fn assign1(tuple: Expr, val: Expr) -> Expr {
        Expr::Assign1(Box::new(tuple), Box::new(val))
    }

    pub fn assign2(tuple: Expr, val: Expr) -> Expr {
        Expr::Assign2(Box::new(tuple), Box::new(val))
    }

    pub fn ctag(e: Expr) -> Expr {
        Expr::CTag(Box::new(e))
    }

    pub fn loc(id: usize) -> Expr {
        Expr::Loc(Location(id))
    }
}

impl Expr {
    /// Direct subexpressions in canonical order. Diagnostic paths index into
    /// this order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Var(_) | Expr::Univ(_) | Expr::UnitTm | Expr::UnitTy | Expr::Loc(_) => vec![],
            Expr::Let {
                bound, annot, body, ..
            } => vec![bound, annot, body],
            Expr::Code {
                env_ty,
                arg_ty,
                body,
                ..
            } => vec![env_ty, arg_ty, body],
            Expr::CodeTy {
                env_ty,
                arg_ty,
                result,
                ..
            } => vec![env_ty, arg_ty, result],
            Expr::Clo { code, env, annot } => vec![code, env, annot],
            Expr::Pi { dom, cod, .. } => vec![dom, cod],
            Expr::App(f, a) => vec![f, a],
            Expr::Pair { fst, snd, annot } => vec![fst, snd, annot],
            Expr::Sigma { dom, cod, .. } => vec![dom, cod],
            Expr::Fst(e) | Expr::Snd(e) | Expr::CTag(e) => vec![e],
            Expr::Malloc { fst_ty, snd_ty, .. } => vec![fst_ty, snd_ty],
            Expr::Assign1(t, v) | Expr::Assign2(t, v) => vec![t, v],
        }
    }

    /// Whether the node itself is a target-only construct.
    pub fn is_target_only(&self) -> bool {
        matches!(
            self,
            Expr::Malloc { .. }
                | Expr::Assign1(..)
                | Expr::Assign2(..)
                | Expr::CTag(_)
                | Expr::Loc(_)
        ) || matches!(
            self,
            Expr::Sigma { flag1, flag2, .. } if (*flag1, *flag2) != (Flag::Init, Flag::Init)
        )
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn contains_loc(&self) -> bool {
        matches!(self, Expr::Loc(_)) || self.children().iter().any(|c| c.contains_loc())
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn has_free(&self, x: &Name) -> bool {
        has_free(self, x)
    }
}

pub fn free_vars(e: &Expr) -> BTreeSet<Name> {
    e.free_vars()
}

fn collect_free<'a>(e: &'a Expr, bound: &mut Vec<&'a Name>, out: &mut BTreeSet<Name>) {
    let mut scoped = |bound: &mut Vec<&'a Name>, names: &[&'a Name], body: &'a Expr| {
        let depth = bound.len();
        bound.extend_from_slice(names);
        collect_free(body, bound, out);
        bound.truncate(depth);
    };
    match e {
        Expr::Var(x) => {
            if !bound.contains(&x) {
                out.insert(x.clone());
            }
        }
        Expr::Univ(_) | Expr::UnitTm | Expr::UnitTy | Expr::Loc(_) => {}
        Expr::Let {
            name,
            bound: b,
            annot,
            body,
        } => {
            scoped(bound, &[], b);
            scoped(bound, &[], annot);
            scoped(bound, &[name], body);
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
            scoped(bound, &[], env_ty);
            scoped(bound, &[env_name], arg_ty);
            scoped(bound, &[env_name, arg_name], inner);
        }
        Expr::Pi { name, dom, cod }
        | Expr::Sigma {
            name, dom, cod, ..
        } => {
            scoped(bound, &[], dom);
            scoped(bound, &[name], cod);
        }
        Expr::Malloc {
            name,
            fst_ty,
            snd_ty,
        } => {
            scoped(bound, &[], fst_ty);
            scoped(bound, &[name], snd_ty);
        }
        Expr::Clo { .. }
        | Expr::App(..)
        | Expr::Pair { .. }
        | Expr::Fst(_)
        | Expr::Snd(_)
        | Expr::Assign1(..)
        | Expr::Assign2(..)
        | Expr::CTag(_) => {
            for c in e.children() {
                scoped(bound, &[], c);
            }
        }
    }
}

fn has_free(e: &Expr, x: &Name) -> bool {
    match e {
        Expr::Var(y) => y == x,
        Expr::Let {
            name,
            bound,
            annot,
            body,
        } => has_free(bound, x) || has_free(annot, x) || (name != x && has_free(body, x)),
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
            has_free(env_ty, x)
                || (env_name != x
                    && (has_free(arg_ty, x) || (arg_name != x && has_free(inner, x))))
        }
        Expr::Pi { name, dom, cod }
        | Expr::Sigma {
            name, dom, cod, ..
        }
        | Expr::Malloc {
            name,
            fst_ty: dom,
            snd_ty: cod,
        } => has_free(dom, x) || (name != x && has_free(cod, x)),
        _ => e.children().into_iter().any(|c| has_free(c, x)),
    }
}

/// Picks a name derived from `base` for which `taken` is false.
///
/// Deterministic: candidates are tried in a fixed order (`x1`, `x2`, ...).
pub fn fresh_name(base: &Name, taken: impl Fn(&str) -> bool) -> Name {
    let stem = base
        .as_str()
        .trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'');
    let stem = if stem.is_empty() { "v" } else { stem };
    (1..)
        .map(|k| format!("{stem}{k}"))
        .find(|cand| !taken(cand))
        .map(Name::from)
        .expect("unbounded candidate supply")
}

/// Capture-avoiding substitution `e[v/x]`.
pub fn subst(e: &Expr, v: &Expr, x: &Name) -> Expr {
    subst_many(e, &[(x.clone(), v.clone())])
}

/// Simultaneous capture-avoiding substitution.
pub fn subst_many(e: &Expr, pairs: &[(Name, Expr)]) -> Expr {
    let map = Subst::new(pairs.to_vec());
    if map.is_empty() {
        return e.clone();
    }
    map.apply(e)
}

/// Renames free occurrences of `from` to `to`. `to` must not be free in `e`.
pub fn rename(e: &Expr, from: &Name, to: &Name) -> Expr {
    if from == to {
        return e.clone();
    }
    subst(e, &Expr::Var(to.clone()), from)
}

struct Subst {
    pairs: Vec<(Name, Expr)>,
    // Free names of every substituted value.
    range_fv: BTreeSet<Name>,
}

impl Subst {
    fn new(pairs: Vec<(Name, Expr)>) -> Self {
        let range_fv = pairs.iter().flat_map(|(_, v)| v.free_vars()).collect();
        Subst { pairs, range_fv }
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The substitution to apply under a binder `b` scoping over `scope`,
    /// and the (possibly renamed) binder.
    fn under(&self, b: &Name, scope: &[&Expr]) -> (Name, Subst) {
        let pairs: Vec<(Name, Expr)> = self
            .pairs
            .iter()
            .filter(|(k, _)| k != b)
            .cloned()
            .collect();
        let inner = Subst::new(pairs);
        if inner.is_empty() || !inner.range_fv.contains(b) {
            return (b.clone(), inner);
        }
        // Only rename when a substituted name actually reaches the scope.
        if !inner
            .pairs
            .iter()
            .any(|(k, _)| scope.iter().any(|s| s.has_free(k)))
        {
            return (b.clone(), inner);
        }
        let scope_fv: BTreeSet<Name> = scope.iter().flat_map(|s| s.free_vars()).collect();
        let fresh = fresh_name(b, |c| {
            let n = Name::new(c);
            inner.range_fv.contains(&n)
                || scope_fv.contains(&n)
                || inner.pairs.iter().any(|(k, _)| *k == n)
        });
        let mut pairs = inner.pairs;
        pairs.push((b.clone(), Expr::Var(fresh.clone())));
        (fresh, Subst::new(pairs))
    }

    fn apply(&self, e: &Expr) -> Expr {
        if self.is_empty() {
            return e.clone();
        }
        match e {
            Expr::Var(y) => match self.pairs.iter().find(|(k, _)| k == y) {
                Some((_, v)) => v.clone(),
                None => e.clone(),
            },
            Expr::Univ(_) | Expr::UnitTm | Expr::UnitTy | Expr::Loc(_) => e.clone(),
            Expr::Let {
                name,
                bound,
                annot,
                body,
            } => {
                let (n, inner) = self.under(name, &[body]);
                Expr::let_(n, self.apply(bound), self.apply(annot), inner.apply(body))
            }
            Expr::Code {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                body,
            } => {
                let (n, s1) = self.under(env_name, &[arg_ty, body]);
                let (x, s2) = s1.under(arg_name, &[body]);
                Expr::code(n, self.apply(env_ty), x, s1.apply(arg_ty), s2.apply(body))
            }
            Expr::CodeTy {
                env_name,
                env_ty,
                arg_name,
                arg_ty,
                result,
            } => {
                let (n, s1) = self.under(env_name, &[arg_ty, result]);
                let (x, s2) = s1.under(arg_name, &[result]);
                Expr::code_ty(n, self.apply(env_ty), x, s1.apply(arg_ty), s2.apply(result))
            }
            Expr::Clo { code, env, annot } => {
                Expr::clo(self.apply(code), self.apply(env), self.apply(annot))
            }
            Expr::Pi { name, dom, cod } => {
                let (n, inner) = self.under(name, &[cod]);
                Expr::pi(n, self.apply(dom), inner.apply(cod))
            }
            Expr::App(f, a) => Expr::app(self.apply(f), self.apply(a)),
            Expr::Pair { fst, snd, annot } => {
                Expr::pair(self.apply(fst), self.apply(snd), self.apply(annot))
            }
            Expr::Sigma {
                name,
                dom,
                flag1,
                cod,
                flag2,
            } => {
                let (n, inner) = self.under(name, &[cod]);
                Expr::sigma_flagged(n, self.apply(dom), *flag1, inner.apply(cod), *flag2)
            }
            Expr::Fst(t) => Expr::fst(self.apply(t)),
            Expr::Snd(t) => Expr::snd(self.apply(t)),
            Expr::Malloc {
                name,
                fst_ty,
                snd_ty,
            } => {
                let (n, inner) = self.under(name, &[snd_ty]);
                Expr::malloc(n, self.apply(fst_ty), inner.apply(snd_ty))
            }
            Expr::Assign1(t, v) => Expr::assign1(self.apply(t), self.apply(v)),
            Expr::Assign2(t, v) => Expr::assign2(self.apply(t), self.apply(v)),
            Expr::CTag(t) => Expr::ctag(self.apply(t)),
        }
    }
}

/// Equality up to consistent renaming of bound names.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    Alpha::default().eq(a, b)
}

#[derive(Default)]
struct Alpha<'a> {
    left: Vec<&'a Name>,
    right: Vec<&'a Name>,
}

impl<'a> Alpha<'a> {
    fn scoped(&mut self, l: &[&'a Name], r: &[&'a Name], a: &'a Expr, b: &'a Expr) -> bool {
        let depth = self.left.len();
        self.left.extend_from_slice(l);
        self.right.extend_from_slice(r);
        let ok = self.eq(a, b);
        self.left.truncate(depth);
        self.right.truncate(depth);
        ok
    }

    fn eq(&mut self, a: &'a Expr, b: &'a Expr) -> bool {
        match (a, b) {
            (Expr::Var(x), Expr::Var(y)) => {
                let i = self.left.iter().rposition(|n| *n == x);
                let j = self.right.iter().rposition(|n| *n == y);
                match (i, j) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (Expr::Univ(u), Expr::Univ(v)) => u == v,
            (Expr::UnitTm, Expr::UnitTm) | (Expr::UnitTy, Expr::UnitTy) => true,
            (Expr::Loc(l), Expr::Loc(m)) => l == m,
            (
                Expr::Let {
                    name: x,
                    bound: b1,
                    annot: a1,
                    body: e1,
                },
                Expr::Let {
                    name: y,
                    bound: b2,
                    annot: a2,
                    body: e2,
                },
            ) => self.eq(b1, b2) && self.eq(a1, a2) && self.scoped(&[x], &[y], e1, e2),
            (
                Expr::Code {
                    env_name: n1,
                    env_ty: t1,
                    arg_name: x1,
                    arg_ty: s1,
                    body: e1,
                },
                Expr::Code {
                    env_name: n2,
                    env_ty: t2,
                    arg_name: x2,
                    arg_ty: s2,
                    body: e2,
                },
            )
            | (
                Expr::CodeTy {
                    env_name: n1,
                    env_ty: t1,
                    arg_name: x1,
                    arg_ty: s1,
                    result: e1,
                },
                Expr::CodeTy {
                    env_name: n2,
                    env_ty: t2,
                    arg_name: x2,
                    arg_ty: s2,
                    result: e2,
                },
            ) => {
                self.eq(t1, t2)
                    && self.scoped(&[n1], &[n2], s1, s2)
                    && self.scoped(&[n1, x1], &[n2, x2], e1, e2)
            }
            (
                Expr::Pi {
                    name: x,
                    dom: d1,
                    cod: c1,
                },
                Expr::Pi {
                    name: y,
                    dom: d2,
                    cod: c2,
                },
            )
            | (
                Expr::Malloc {
                    name: x,
                    fst_ty: d1,
                    snd_ty: c1,
                },
                Expr::Malloc {
                    name: y,
                    fst_ty: d2,
                    snd_ty: c2,
                },
            ) => self.eq(d1, d2) && self.scoped(&[x], &[y], c1, c2),
            (
                Expr::Sigma {
                    name: x,
                    dom: d1,
                    flag1: f1,
                    cod: c1,
                    flag2: g1,
                },
                Expr::Sigma {
                    name: y,
                    dom: d2,
                    flag1: f2,
                    cod: c2,
                    flag2: g2,
                },
            ) => f1 == f2 && g1 == g2 && self.eq(d1, d2) && self.scoped(&[x], &[y], c1, c2),
            (Expr::Clo { .. }, Expr::Clo { .. })
            | (Expr::App(..), Expr::App(..))
            | (Expr::Pair { .. }, Expr::Pair { .. })
            | (Expr::Fst(_), Expr::Fst(_))
            | (Expr::Snd(_), Expr::Snd(_))
            | (Expr::Assign1(..), Expr::Assign1(..))
            | (Expr::Assign2(..), Expr::Assign2(..))
            | (Expr::CTag(_), Expr::CTag(_)) => a
                .children()
                .into_iter()
                .zip(b.children())
                .all(|(x, y)| self.eq(x, y)),
            _ => false,
        }
    }
}

/// One typing-context entry. Let-bound entries carry their definition.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub name: Name,
    pub ty: Expr,
    pub def: Option<Expr>,
}

/// A telescope of typed (and optionally defined) variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Context {
    entries: Vec<Entry>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn lookup(&self, x: &Name) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| &e.name == x)
    }

    pub fn contains(&self, x: &Name) -> bool {
        self.lookup(x).is_some()
    }

    /// Appends an assumption `x : ty`.
    pub fn with(mut self, x: impl Into<Name>, ty: Expr) -> Self {
        self.push(x.into(), ty, None);
        self
    }

    /// Appends a definition `x = def : ty`.
    pub fn with_def(mut self, x: impl Into<Name>, def: Expr, ty: Expr) -> Self {
        self.push(x.into(), ty, Some(def));
        self
    }

    pub fn push(&mut self, name: Name, ty: Expr, def: Option<Expr>) {
        self.entries.push(Entry { name, ty, def });
    }

    pub fn pop(&mut self) -> Option<Entry> {
        self.entries.pop()
    }

    /// Extends the context with binder `x`, freshening it if the name is
    /// already bound. Returns the binder actually used together with
    /// `scoped` renamed accordingly.
    pub fn bind(
        &self,
        x: &Name,
        ty: Expr,
        def: Option<Expr>,
        scoped: &[&Expr],
    ) -> (Context, Name, Vec<Expr>) {
        let mut ctx = self.clone();
        if !self.contains(x) {
            ctx.push(x.clone(), ty, def);
            return (ctx, x.clone(), scoped.iter().map(|e| (*e).clone()).collect());
        }
        let fv: BTreeSet<Name> = scoped.iter().flat_map(|e| e.free_vars()).collect();
        let fresh = fresh_name(x, |c| {
            let n = Name::new(c);
            self.contains(&n) || fv.contains(&n)
        });
        ctx.push(fresh.clone(), ty, def);
        let renamed = scoped.iter().map(|e| rename(e, x, &fresh)).collect();
        (ctx, fresh, renamed)
    }

    /// Removes the most recent entry for `x`.
    pub fn without(&self, x: &Name) -> Context {
        let mut ctx = self.clone();
        if let Some(i) = ctx.entries.iter().rposition(|e| &e.name == x) {
            ctx.entries.remove(i);
        }
        ctx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn subst_hits_variable() {
        assert_eq!(subst(&Expr::var("x"), &Expr::UnitTm, &n("x")), Expr::UnitTm);
    }

    #[test]
    fn subst_renames_capturing_binder() {
        let e = Expr::pi("y", Expr::UnitTy, Expr::var("x"));
        let out = subst(&e, &Expr::var("y"), &n("x"));
        match &out {
            Expr::Pi { name, cod, .. } => {
                assert_ne!(name.as_str(), "y");
                assert_eq!(**cod, Expr::var("y"));
            }
            other => panic!("expected Pi, got {other:?}"),
        }
        assert!(out.free_vars().contains(&n("y")));
    }

    #[test]
    fn subst_congruence() {
        let e = Expr::snd(Expr::var("p"));
        let out = subst(&e, &Expr::fst(Expr::var("q")), &n("p"));
        assert_eq!(out, Expr::snd(Expr::fst(Expr::var("q"))));
    }

    #[test]
    fn subst_stops_at_shadowing_binder() {
        let e = Expr::pi("x", Expr::var("x"), Expr::var("x"));
        let out = subst(&e, &Expr::UnitTy, &n("x"));
        assert_eq!(out, Expr::pi("x", Expr::UnitTy, Expr::var("x")));
    }

    #[test]
    fn subst_many_is_simultaneous() {
        let e = Expr::pair(Expr::var("n"), Expr::var("x"), Expr::UnitTy);
        let out = subst_many(
            &e,
            &[(n("n"), Expr::var("x")), (n("x"), Expr::UnitTm)],
        );
        assert_eq!(out, Expr::pair(Expr::var("x"), Expr::UnitTm, Expr::UnitTy));
    }

    #[test]
    fn code_env_binder_scopes_arg_type() {
        let e = Expr::code("n", Expr::star(), "x", Expr::var("n"), Expr::var("x"));
        assert!(e.free_vars().is_empty());
        let open = Expr::code("n", Expr::UnitTy, "x", Expr::UnitTy, Expr::var("y"));
        assert_eq!(open.free_vars(), BTreeSet::from([n("y")]));
    }

    #[test]
    fn alpha_examples() {
        let a = Expr::pi("x", Expr::UnitTy, Expr::var("x"));
        let b = Expr::pi("y", Expr::UnitTy, Expr::var("y"));
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&Expr::var("x"), &Expr::var("y")));
        let s10 = Expr::sigma_flagged("x", Expr::UnitTy, Flag::Init, Expr::UnitTy, Flag::Uninit);
        let s11 = Expr::sigma("x", Expr::UnitTy, Expr::UnitTy);
        assert!(!alpha_eq(&s10, &s11));
    }

    #[test]
    fn alpha_distinguishes_bound_from_free() {
        let a = Expr::pi("x", Expr::UnitTy, Expr::var("x"));
        let b = Expr::pi("y", Expr::UnitTy, Expr::var("x"));
        assert!(!alpha_eq(&a, &b));
    }

    #[test]
    fn free_vars_examples() {
        assert_eq!(Expr::var("x").free_vars(), BTreeSet::from([n("x")]));
        let pi = Expr::pi("x", Expr::var("a"), Expr::var("x"));
        assert_eq!(pi.free_vars(), BTreeSet::from([n("a")]));
        let code = Expr::code("n", Expr::UnitTy, "x", Expr::UnitTy, Expr::var("x"));
        assert!(code.free_vars().is_empty());
    }

    #[test]
    fn bind_freshens_duplicates() {
        let ctx = Context::new().with("x", Expr::UnitTy);
        let body = Expr::var("x");
        let (ctx2, x2, renamed) = ctx.bind(&n("x"), Expr::star(), None, &[&body]);
        assert_ne!(x2, n("x"));
        assert_eq!(renamed[0], Expr::Var(x2.clone()));
        assert_eq!(ctx2.len(), 2);
    }

    #[test]
    fn fresh_name_is_deterministic() {
        let taken = |c: &str| c == "y1";
        assert_eq!(fresh_name(&n("y"), taken), n("y2"));
        assert_eq!(fresh_name(&n("y"), taken), n("y2"));
        assert_eq!(fresh_name(&n("y'"), |_| false), n("y1"));
    }
}
