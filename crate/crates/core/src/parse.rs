//! S-expression surface syntax: reader, parser and printer.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Expr, Flag, Lang, Name, Universe};

/// 1-based line and column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("error[ParseError] {pos} {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

impl ParseError {
    fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    fn expecting(mut self, expected: &[&str]) -> Self {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// Source positions of every node, keyed by the child-index path from the
/// root (see [`Expr::children`]).
#[derive(Clone, Debug, Default)]
pub struct Spans {
    map: HashMap<Vec<usize>, Pos>,
}

impl Spans {
    pub fn get(&self, path: &[usize]) -> Option<Pos> {
        self.map.get(path).copied()
    }

    /// Position of the deepest recorded ancestor of `path`.
    pub fn nearest(&self, path: &[usize]) -> Option<Pos> {
        (0..=path.len()).rev().find_map(|k| self.get(&path[..k]))
    }
}

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn read(text: &str) -> Result<Sexp, ParseError> {
    let mut chars = text.chars().peekable();
    let mut line = 1;
    let mut col = 1;
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top: Option<Sexp> = None;

    let push = |item: Sexp, stack: &mut Vec<(Vec<Sexp>, Pos)>, top: &mut Option<Sexp>| {
        if let Some((items, _)) = stack.last_mut() {
            items.push(item);
            Ok(())
        } else if top.is_some() {
            Err(ParseError::new(item.pos(), "trailing input after expression")
                .expecting(&["end of input"]))
        } else {
            *top = Some(item);
            Ok(())
        }
    };

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                stack.push((Vec::new(), pos));
            }
            ')' => {
                chars.next();
                col += 1;
                let (items, start) = stack
                    .pop()
                    .ok_or_else(|| ParseError::new(pos, "unbalanced ')'"))?;
                push(Sexp::List(items, start), &mut stack, &mut top)?;
            }
            _ => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                    col += 1;
                }
                push(Sexp::Atom(atom, pos), &mut stack, &mut top)?;
            }
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(ParseError::new(
            Pos { line, col },
            format!("unclosed '(' opened at {start}"),
        )
        .expecting(&[")"]));
    }
    top.ok_or_else(|| {
        ParseError::new(Pos { line, col }, "empty input").expecting(&["expression"])
    })
}

const KEYWORDS: &[&str] = &[
    "unit", "Unit", "Star", "Box", "let", "code", "Code", "clo", "Pi", "app", "pair", "Sigma",
    "fst", "snd", "malloc", "assign1", "assign2", "ctag", "loc",
];

const FORM_HEADS: &[&str] = &[
    "let", "code", "Code", "clo", "Pi", "app", "pair", "Sigma", "fst", "snd", "malloc",
    "assign1", "assign2", "ctag",
];

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '-')
        && !KEYWORDS.contains(&s)
}

struct Parser {
    lang: Lang,
    spans: Spans,
}

/// Parses one term. Target-only forms are rejected for [`Lang::Source`] and
/// `loc` literals are rejected in both languages.
pub fn parse(text: &str, lang: Lang) -> Result<Expr, ParseError> {
    parse_with_spans(text, lang).map(|(e, _)| e)
}

pub fn parse_with_spans(text: &str, lang: Lang) -> Result<(Expr, Spans), ParseError> {
    let sexp = read(text)?;
    let mut p = Parser {
        lang,
        spans: Spans::default(),
    };
    let e = p.expr(&sexp, &mut Vec::new())?;
    Ok((e, p.spans))
}

impl Parser {
    fn expr(&mut self, s: &Sexp, path: &mut Vec<usize>) -> Result<Expr, ParseError> {
        self.spans.map.insert(path.clone(), s.pos());
        match s {
            Sexp::Atom(a, pos) => self.atom(a, *pos),
            Sexp::List(items, pos) => self.form(items, *pos, path),
        }
    }

    fn atom(&self, a: &str, pos: Pos) -> Result<Expr, ParseError> {
        match a {
            "unit" => Ok(Expr::UnitTm),
            "Unit" => Ok(Expr::UnitTy),
            "Star" => Ok(Expr::Univ(Universe::Star)),
            "Box" => Ok(Expr::Univ(Universe::Box)),
            _ if is_identifier(a) => Ok(Expr::Var(Name::new(a))),
            _ => Err(ParseError::new(pos, format!("unexpected token '{a}'"))
                .expecting(&["unit", "Unit", "Star", "Box", "identifier", "("])),
        }
    }

    fn child(&mut self, s: &Sexp, path: &mut Vec<usize>, i: usize) -> Result<Expr, ParseError> {
        path.push(i);
        let r = self.expr(s, path);
        path.pop();
        r
    }

    fn target_only(&self, head: &str, pos: Pos) -> Result<(), ParseError> {
        match self.lang {
            Lang::Target => Ok(()),
            Lang::Source => Err(ParseError::new(
                pos,
                format!("target-only form '{head}' in source program"),
            )),
        }
    }

    fn form(&mut self, items: &[Sexp], pos: Pos, path: &mut Vec<usize>) -> Result<Expr, ParseError> {
        let (head, args) = match items.split_first() {
            Some((Sexp::Atom(h, _), rest)) => (h.as_str(), rest),
            Some((other, _)) => {
                return Err(ParseError::new(other.pos(), "expected a form name")
                    .expecting(FORM_HEADS))
            }
            None => {
                return Err(ParseError::new(pos, "empty list").expecting(FORM_HEADS));
            }
        };
        let arity = |n: usize| -> Result<(), ParseError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(ParseError::new(
                    pos,
                    format!("'{head}' takes {n} arguments, found {}", args.len()),
                ))
            }
        };
        match head {
            "let" => {
                arity(2)?;
                let parts = list_of(&args[0], 3, "(x e A)")?;
                let name = binder(&parts[0])?;
                let bound = self.child(&parts[1], path, 0)?;
                let annot = self.child(&parts[2], path, 1)?;
                let body = self.child(&args[1], path, 2)?;
                Ok(Expr::let_(name, bound, annot, body))
            }
            "code" | "Code" => {
                arity(2)?;
                let binders = list_of(&args[0], 2, "((n A1) (x A))")?;
                let env = list_of(&binders[0], 2, "(n A1)")?;
                let arg = list_of(&binders[1], 2, "(x A)")?;
                let env_name = binder(&env[0])?;
                let env_ty = self.child(&env[1], path, 0)?;
                let arg_name = binder(&arg[0])?;
                let arg_ty = self.child(&arg[1], path, 1)?;
                let body = self.child(&args[1], path, 2)?;
                Ok(if head == "code" {
                    Expr::code(env_name, env_ty, arg_name, arg_ty, body)
                } else {
                    Expr::code_ty(env_name, env_ty, arg_name, arg_ty, body)
                })
            }
            "clo" => {
                arity(3)?;
                let code = self.child(&args[0], path, 0)?;
                let env = self.child(&args[1], path, 1)?;
                let annot = self.child(&args[2], path, 2)?;
                Ok(Expr::clo(code, env, annot))
            }
            "Pi" => {
                arity(2)?;
                let b = list_of(&args[0], 2, "(x A)")?;
                let name = binder(&b[0])?;
                let dom = self.child(&b[1], path, 0)?;
                let cod = self.child(&args[1], path, 1)?;
                Ok(Expr::pi(name, dom, cod))
            }
            "app" => {
                arity(2)?;
                let f = self.child(&args[0], path, 0)?;
                let a = self.child(&args[1], path, 1)?;
                Ok(Expr::app(f, a))
            }
            "pair" => {
                if self.lang == Lang::Target {
                    return Err(ParseError::new(
                        pos,
                        "source-only form 'pair' in target program (use malloc/assign)",
                    ));
                }
                arity(3)?;
                let a = self.child(&args[0], path, 0)?;
                let b = self.child(&args[1], path, 1)?;
                let annot = self.child(&args[2], path, 2)?;
                Ok(Expr::pair(a, b, annot))
            }
            "Sigma" => {
                arity(2)?;
                self.sigma(args, path)
            }
            "fst" | "snd" | "ctag" => {
                arity(1)?;
                if head == "ctag" {
                    self.target_only(head, pos)?;
                }
                let e = self.child(&args[0], path, 0)?;
                Ok(match head {
                    "fst" => Expr::fst(e),
                    "snd" => Expr::snd(e),
                    _ => Expr::ctag(e),
                })
            }
            "malloc" => {
                self.target_only(head, pos)?;
                arity(2)?;
                let b = list_of(&args[0], 2, "(x A)")?;
                let name = binder(&b[0])?;
                let a = self.child(&b[1], path, 0)?;
                let bty = self.child(&args[1], path, 1)?;
                Ok(Expr::malloc(name, a, bty))
            }
            "assign1" | "assign2" => {
                self.target_only(head, pos)?;
                arity(2)?;
                let t = self.child(&args[0], path, 0)?;
                let v = self.child(&args[1], path, 1)?;
                Ok(if head == "assign1" {
                    Expr::assign1(t, v)
                } else {
                    Expr::assign2(t, v)
                })
            }
            "loc" => Err(ParseError::new(
                pos,
                "'loc' literals are runtime-only and cannot appear in programs",
            )),
            _ => Err(ParseError::new(pos, format!("unknown form '{head}'")).expecting(FORM_HEADS)),
        }
    }

    fn sigma(&mut self, args: &[Sexp], path: &mut Vec<usize>) -> Result<Expr, ParseError> {
        let first = match &args[0] {
            Sexp::List(items, _) if items.len() == 2 || items.len() == 3 => items,
            other => {
                return Err(ParseError::new(other.pos(), "malformed Sigma binder")
                    .expecting(&["(x A)", "(x A f)"]))
            }
        };
        let name = binder(&first[0])?;
        // `(B f)` with a flag literal in the last position is the flagged form;
        // no expression list has exactly that shape.
        let flagged_second = match &args[1] {
            Sexp::List(items, _) if items.len() == 2 => {
                matches!(&items[1], Sexp::Atom(a, _) if a == "0" || a == "1")
                    && !matches!(&items[0], Sexp::Atom(h, _) if FORM_HEADS.contains(&h.as_str()))
            }
            _ => false,
        };
        let flagged = first.len() == 3;
        if flagged != flagged_second {
            return Err(ParseError::new(
                args[0].pos(),
                "Sigma must flag both components or neither",
            ));
        }
        if !flagged {
            let dom = self.child(&first[1], path, 0)?;
            let cod = self.child(&args[1], path, 1)?;
            return Ok(Expr::sigma(name, dom, cod));
        }
        if self.lang == Lang::Source {
            return Err(ParseError::new(
                args[0].pos(),
                "target-only form: initialization flags in source program",
            ));
        }
        let Sexp::List(second, _) = &args[1] else {
            unreachable!("checked above")
        };
        let flag1 = flag(&first[2])?;
        let flag2 = flag(&second[1])?;
        let dom = self.child(&first[1], path, 0)?;
        let cod = self.child(&second[0], path, 1)?;
        Ok(Expr::sigma_flagged(name, dom, flag1, cod, flag2))
    }
}

fn list_of<'a>(s: &'a Sexp, n: usize, shape: &str) -> Result<&'a [Sexp], ParseError> {
    match s {
        Sexp::List(items, _) if items.len() == n => Ok(items),
        other => Err(ParseError::new(other.pos(), "malformed binder").expecting(&[shape])),
    }
}

fn binder(s: &Sexp) -> Result<Name, ParseError> {
    match s {
        Sexp::Atom(a, _) if is_identifier(a) => Ok(Name::new(a)),
        other => Err(ParseError::new(other.pos(), "expected a binder name").expecting(&["identifier"])),
    }
}

fn flag(s: &Sexp) -> Result<Flag, ParseError> {
    match s {
        Sexp::Atom(a, _) if a == "0" => Ok(Flag::Uninit),
        Sexp::Atom(a, _) if a == "1" => Ok(Flag::Init),
        other => Err(ParseError::new(other.pos(), "expected a flag").expecting(&["0", "1"])),
    }
}

/// Prints a term on one line. Source style omits Σ flags.
pub fn print(e: &Expr, lang: Lang) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, lang);
    out
}

impl fmt::Display for Expr {
    /// Target style: Σ flags always explicit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self, Lang::Target))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self, Lang::Target))
    }
}

fn write_expr(out: &mut String, e: &Expr, lang: Lang) {
    use std::fmt::Write;
    let w = |out: &mut String, e: &Expr| write_expr(out, e, lang);
    match e {
        Expr::Var(x) => out.push_str(x.as_str()),
        Expr::Univ(Universe::Star) => out.push_str("Star"),
        Expr::Univ(Universe::Box) => out.push_str("Box"),
        Expr::UnitTm => out.push_str("unit"),
        Expr::UnitTy => out.push_str("Unit"),
        Expr::Loc(l) => {
            let _ = write!(out, "(loc {l})");
        }
        Expr::Let {
            name,
            bound,
            annot,
            body,
        } => {
            let _ = write!(out, "(let ({name} ");
            w(out, bound);
            out.push(' ');
            w(out, annot);
            out.push_str(") ");
            w(out, body);
            out.push(')');
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
            let head = if matches!(e, Expr::Code { .. }) { "code" } else { "Code" };
            let _ = write!(out, "({head} (({env_name} ");
            w(out, env_ty);
            let _ = write!(out, ") ({arg_name} ");
            w(out, arg_ty);
            out.push_str(")) ");
            w(out, inner);
            out.push(')');
        }
        Expr::Pi { name, dom, cod } => {
            let _ = write!(out, "(Pi ({name} ");
            w(out, dom);
            out.push_str(") ");
            w(out, cod);
            out.push(')');
        }
        Expr::Malloc {
            name,
            fst_ty,
            snd_ty,
        } => {
            let _ = write!(out, "(malloc ({name} ");
            w(out, fst_ty);
            out.push_str(") ");
            w(out, snd_ty);
            out.push(')');
        }
        Expr::Sigma {
            name,
            dom,
            flag1,
            cod,
            flag2,
        } => {
            let _ = write!(out, "(Sigma ({name} ");
            w(out, dom);
            let plain = lang == Lang::Source && (*flag1, *flag2) == (Flag::Init, Flag::Init);
            if plain {
                out.push_str(") ");
                w(out, cod);
                out.push(')');
            } else {
                let _ = write!(out, " {flag1}) (");
                w(out, cod);
                let _ = write!(out, " {flag2}))");
            }
        }
        Expr::Clo { .. }
        | Expr::App(..)
        | Expr::Pair { .. }
        | Expr::Fst(_)
        | Expr::Snd(_)
        | Expr::Assign1(..)
        | Expr::Assign2(..)
        | Expr::CTag(_) => {
            let head = match e {
                Expr::Clo { .. } => "clo",
                Expr::App(..) => "app",
                Expr::Pair { .. } => "pair",
                Expr::Fst(_) => "fst",
                Expr::Snd(_) => "snd",
                Expr::Assign1(..) => "assign1",
                Expr::Assign2(..) => "assign2",
                _ => "ctag",
            };
            out.push('(');
            out.push_str(head);
            for c in e.children() {
                out.push(' ');
                w(out, c);
            }
            out.push(')');
        }
    }
}
