//! A dependent-type-preserving memory allocation pass.
//!
//! The source language is the Calculus of Constructions with closed code and
//! closures. The target adds explicit allocation `malloc`, two-step
//! initialization `assign1`/`assign2` tracked by flags on Σ-types, and
//! `ctag` for closures that live on the heap. [`alloc::translate`] maps one
//! to the other and [`harness`] checks that typing, conversion, reduction
//! and substitution survive the translation.

pub mod alloc;
pub mod conv;
pub mod error;
pub mod harness;
pub mod model;
pub mod parse;
pub mod source;
pub mod syntax;
pub mod target;
mod typing;

pub use error::{ErrorKind, FuelExhausted, TypeError};
pub use parse::{parse, parse_with_spans, print, ParseError};
pub use syntax::{alpha_eq, free_vars, subst, Context, Expr, Flag, Lang, Location, Name, Universe};
pub use typing::check_lang;

// Guide chapters run as doctests so the book stays in sync with the code.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/syntax.md")]
    mod syntax {}
    #[doc = include_str!("../../../book/src/checking.md")]
    mod checking {}
    #[doc = include_str!("../../../book/src/translation.md")]
    mod translation {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
