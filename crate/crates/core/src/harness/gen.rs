use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::parse::parse;
use crate::source;
use crate::syntax::{alpha_eq, subst, Context, Expr, Lang, Name};

/// Parameters of one generated case. Generation is a pure function of
/// `depth`, `seed` and `type_menu`.
#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub depth: u32,
    pub seed: u64,
    /// Source types the generator picks goals from. Must be closed.
    pub type_menu: Vec<Expr>,
}

impl GenSpec {
    pub fn new(depth: u32, seed: u64) -> Self {
        GenSpec {
            depth: depth.max(1),
            seed,
            type_menu: default_menu(),
        }
    }
}

const MENU: &[&str] = &[
    "Unit",
    "Star",
    "(Sigma (x Unit) Unit)",
    "(Sigma (x Star) x)",
    "(Pi (x Unit) Unit)",
    "(Sigma (p (Sigma (a Unit) Unit)) Unit)",
    "(Sigma (x Star) (Sigma (a x) x))",
    "(Sigma (p (Sigma (a Star) Star)) (fst p))",
    "(Pi (p (Sigma (a Unit) Unit)) Unit)",
    "(Pi (A Star) (Pi (x A) A))",
    "(Sigma (f (Pi (x Unit) Unit)) Unit)",
];

/// Unit, Σ-chains over Unit, dependent Σ over Star, and Π at Unit.
pub fn default_menu() -> Vec<Expr> {
    MENU.iter()
        .map(|s| parse(s, Lang::Source).expect("menu types parse"))
        .collect()
}

/// A generated well-typed triple `ctx ⊢ e : ty`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub ctx: Context,
    pub expr: Expr,
    pub ty: Expr,
}

/// A generated substitution instance: `ctx ⊢ e`, with `x` the last entry of
/// `ctx` and `value` a closed term of `x`'s type.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstCase {
    pub ctx: Context,
    pub expr: Expr,
    pub value: Expr,
    pub var: Name,
}

const RETRIES: usize = 32;

/// Generates a well-typed source triple. Depth 1 always gives
/// `(·, unit, Unit)`.
pub fn gen_typed(spec: &GenSpec) -> Generated {
    let mut g = Gen::new(spec);
    let mut depth = spec.depth;
    loop {
        if depth <= 1 {
            return Generated {
                ctx: Context::new(),
                expr: Expr::UnitTm,
                ty: Expr::UnitTy,
            };
        }
        for _ in 0..RETRIES {
            let ty = g.pick(&spec.type_menu.clone());
            let scope = if g.rng.gen_bool(0.3) { g.open_scope() } else { Vec::new() };
            if let Some(e) = g.term(&ty, depth, &scope) {
                let ctx = context_of(&scope);
                if validates(&ctx, &e, &ty) {
                    return Generated { ctx, expr: e, ty };
                }
            }
        }
        depth -= 1;
    }
}

/// Generates a closed, well-typed program and its type. Context entries
/// of [`gen_typed`] are bound by `let`s around the term.
pub fn gen_closed(spec: &GenSpec) -> (Expr, Expr) {
    let Generated { ctx, expr, ty } = gen_typed(spec);
    let mut g = Gen::new(spec);
    let mut e = expr;
    for entry in ctx.entries().iter().rev() {
        let v = g.term(&entry.ty, 2, &[]).expect("menu types are inhabited");
        e = Expr::let_(entry.name.clone(), v, entry.ty.clone(), e);
    }
    (e, ty)
}

/// Generates a term mentioning a variable together with a closed value to
/// substitute for it.
pub fn gen_subst_case(spec: &GenSpec) -> SubstCase {
    let mut g = Gen::new(spec);
    g.var_bias = 0.6;
    let depth = spec.depth.max(2);
    let var_types: Vec<Expr> = MENU
        .iter()
        .filter(|s| !s.contains("(A Star)"))
        .map(|s| parse(s, Lang::Source).expect("menu types parse"))
        .collect();
    for attempt in 0.. {
        let d = if attempt < RETRIES { depth } else { 2 };
        let a = g.pick(&var_types);
        let x = g.fresh("s");
        let scope = vec![(x.clone(), a.clone())];
        let ty = g.pick(&spec.type_menu.clone());
        let (Some(e), Some(v)) = (g.term(&ty, d, &scope), g.term(&a, d - 1, &[])) else {
            continue;
        };
        if attempt < RETRIES && !e.has_free(&x) {
            continue;
        }
        let ctx = context_of(&scope);
        if validates(&ctx, &e, &ty) && validates(&Context::new(), &v, &a) {
            return SubstCase {
                ctx,
                expr: e,
                value: v,
                var: x,
            };
        }
    }
    unreachable!("the attempt loop only exits by returning")
}

fn context_of(scope: &[(Name, Expr)]) -> Context {
    let mut ctx = Context::new();
    for (x, t) in scope {
        ctx.push(x.clone(), t.clone(), None);
    }
    ctx
}

fn validates(ctx: &Context, e: &Expr, ty: &Expr) -> bool {
    match source::infer(ctx, e) {
        Ok(found) => source::equiv(ctx, &found, ty).unwrap_or(false),
        Err(_) => false,
    }
}

type Scope = [(Name, Expr)];

struct Gen {
    rng: ChaCha8Rng,
    counter: usize,
    var_bias: f64,
    small: Vec<Expr>,
    types_of_star: Vec<Expr>,
    poly_id: Expr,
}

fn src(s: &str) -> Expr {
    parse(s, Lang::Source).expect("generator templates parse")
}

impl Gen {
    fn new(spec: &GenSpec) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            counter: 0,
            var_bias: 0.3,
            small: vec![src("Unit"), src("(Sigma (x Unit) Unit)")],
            types_of_star: vec![
                src("Unit"),
                src("(Pi (x Unit) Unit)"),
                src("(Sigma (x Unit) Unit)"),
            ],
            poly_id: src("(Pi (A Star) (Pi (x A) A))"),
        }
    }

    fn pick(&mut self, from: &[Expr]) -> Expr {
        from.choose(&mut self.rng).expect("non-empty menu").clone()
    }

    fn fresh(&mut self, stem: &str) -> Name {
        let n = Name::from(format!("{stem}{}", self.counter));
        self.counter += 1;
        n
    }

    /// One or two free variables at data types.
    fn open_scope(&mut self) -> Vec<(Name, Expr)> {
        let n = self.rng.gen_range(1..=2);
        let menu = [
            src("Unit"),
            src("(Sigma (x Unit) Unit)"),
            src("(Pi (x Unit) Unit)"),
        ];
        (0..n)
            .map(|_| {
                let t = self.pick(&menu);
                (self.fresh("v"), t)
            })
            .collect()
    }

    /// A term of type `ty` of the given depth using only variables from
    /// `scope`, or `None` on a dead end.
    fn term(&mut self, ty: &Expr, depth: u32, scope: &Scope) -> Option<Expr> {
        let ty = source::normalize(&Context::new(), ty, crate::conv::DEFAULT_FUEL).ok()?;
        let vars: Vec<Name> = scope
            .iter()
            .filter(|(_, t)| alpha_eq(t, &ty))
            .map(|(x, _)| x.clone())
            .collect();
        if !vars.is_empty() && self.rng.gen_bool(self.var_bias) {
            return vars.choose(&mut self.rng).cloned().map(Expr::Var);
        }
        if depth <= 1 {
            return self.intro(&ty, 1, scope);
        }
        match self.rng.gen_range(0..8) {
            0 => self.let_(&ty, depth, scope),
            1 => self.fst(&ty, depth, scope),
            2 => self.snd(&ty, depth, scope),
            3 => self.app(&ty, depth, scope),
            4 => self.type_env_app(&ty, depth, scope),
            _ => None,
        }
        .or_else(|| self.intro(&ty, depth, scope))
    }

    fn sub(&self, depth: u32) -> u32 {
        depth.saturating_sub(1).max(1)
    }

    fn intro(&mut self, ty: &Expr, depth: u32, scope: &Scope) -> Option<Expr> {
        let d = self.sub(depth);
        match ty {
            Expr::UnitTy => Some(Expr::UnitTm),
            Expr::Univ(crate::Universe::Star) => {
                let vars: Vec<Name> = scope
                    .iter()
                    .filter(|(_, t)| matches!(t, Expr::Univ(crate::Universe::Star)))
                    .map(|(x, _)| x.clone())
                    .collect();
                if !vars.is_empty() && self.rng.gen_bool(0.5) {
                    return vars.choose(&mut self.rng).cloned().map(Expr::Var);
                }
                let types = self.types_of_star.clone();
                Some(self.pick(&types))
            }
            Expr::Sigma { name, dom, cod, .. } => {
                let dependent = cod.has_free(name);
                let fst = self.term(dom, d, if dependent { &[] } else { scope })?;
                let snd = self.term(&subst(cod, &fst, name), d, scope)?;
                Some(Expr::pair(fst, snd, ty.clone()))
            }
            Expr::Pi { .. } if alpha_eq(ty, &self.poly_id) => Some(src(
                "(clo (code ((n Unit) (A Star)) (clo (code ((m Star) (x m)) x) A (Pi (x A) A))) unit (Pi (A Star) (Pi (x A) A)))",
            )),
            Expr::Pi { name, dom, cod } if !cod.has_free(name) => {
                let env_ty = self.pick(&self.small.clone());
                let env = self.term(&env_ty, d, scope)?;
                let n = self.fresh("n");
                let x = self.fresh("a");
                let inner = vec![(n.clone(), env_ty.clone()), (x.clone(), (**dom).clone())];
                let body = self.term(cod, d, &inner)?;
                Some(Expr::clo(
                    Expr::code(n, env_ty, x, (**dom).clone(), body),
                    env,
                    ty.clone(),
                ))
            }
            _ => None,
        }
    }

    fn let_(&mut self, ty: &Expr, depth: u32, scope: &Scope) -> Option<Expr> {
        let d = self.sub(depth);
        let aux = self.pick(&self.small.clone());
        let bound = self.term(&aux, d, scope)?;
        let v = self.fresh("v");
        let mut inner = scope.to_vec();
        inner.push((v.clone(), aux.clone()));
        let body = self.term(ty, d, &inner)?;
        Some(Expr::let_(v, bound, aux, body))
    }

    fn fst(&mut self, ty: &Expr, depth: u32, scope: &Scope) -> Option<Expr> {
        let other = self.pick(&self.small.clone());
        let sigma = Expr::sigma("z", ty.clone(), other);
        Some(Expr::fst(self.term(&sigma, self.sub(depth), scope)?))
    }

    fn snd(&mut self, ty: &Expr, depth: u32, scope: &Scope) -> Option<Expr> {
        let d = self.sub(depth);
        if self.of_sort_star(ty) && self.rng.gen_bool(0.5) {
            // The second component's type is the first component.
            let sigma = Expr::sigma("z", Expr::star(), Expr::var("z"));
            let snd = self.term(ty, d, scope)?;
            return Some(Expr::snd(Expr::pair(ty.clone(), snd, sigma)));
        }
        let other = self.pick(&self.small.clone());
        let sigma = Expr::sigma("z", other, ty.clone());
        Some(Expr::snd(self.term(&sigma, d, scope)?))
    }

    fn app(&mut self, ty: &Expr, depth: u32, scope: &Scope) -> Option<Expr> {
        let d = self.sub(depth);
        let dom = self.pick(&self.small.clone());
        let f = self.term(&Expr::pi("z", dom.clone(), ty.clone()), d, scope)?;
        let a = self.term(&dom, d, scope)?;
        Some(Expr::app(f, a))
    }

    /// Applies a closure whose environment is the type of its argument.
    fn type_env_app(&mut self, ty: &Expr, depth: u32, scope: &Scope) -> Option<Expr> {
        if !self.of_sort_star(ty) {
            return None;
        }
        let code = src("(code ((n Star) (x n)) x)");
        let f = Expr::clo(code, ty.clone(), Expr::pi("x", ty.clone(), ty.clone()));
        let a = self.term(ty, self.sub(depth), scope)?;
        Some(Expr::app(f, a))
    }

    fn of_sort_star(&self, ty: &Expr) -> bool {
        ty.free_vars().is_empty()
            && matches!(
                source::infer(&Context::new(), ty),
                Ok(Expr::Univ(crate::Universe::Star))
            )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_is_unit() {
        let g = gen_typed(&GenSpec::new(1, 7));
        assert_eq!(g.expr, Expr::UnitTm);
        assert_eq!(g.ty, Expr::UnitTy);
        assert!(g.ctx.is_empty());
    }

    #[test]
    fn same_seed_same_triple() {
        for seed in 0..20 {
            assert_eq!(gen_typed(&GenSpec::new(4, seed)), gen_typed(&GenSpec::new(4, seed)));
        }
    }

    #[test]
    fn generated_triples_check() {
        for seed in 0..200 {
            let g = gen_typed(&GenSpec::new(4, seed));
            let found = source::infer(&g.ctx, &g.expr).unwrap();
            assert!(source::equiv(&g.ctx, &found, &g.ty).unwrap(), "seed {seed}: {}", g.expr);
        }
    }

    #[test]
    fn closed_programs_are_closed() {
        for seed in 0..50 {
            let (e, ty) = gen_closed(&GenSpec::new(3, seed));
            assert!(e.free_vars().is_empty());
            let found = source::infer(&Context::new(), &e).unwrap();
            assert!(source::equiv(&Context::new(), &found, &ty).unwrap());
        }
    }

    #[test]
    fn subst_cases_mention_their_variable() {
        let mut mentioned = 0;
        for seed in 0..50 {
            let c = gen_subst_case(&GenSpec::new(3, seed));
            assert!(c.value.free_vars().is_empty());
            source::infer(&c.ctx, &c.expr).unwrap();
            mentioned += usize::from(c.expr.has_free(&c.var));
        }
        assert!(mentioned > 40);
    }
}
