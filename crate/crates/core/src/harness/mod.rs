//! Executable checks that the translation preserves typing, subtyping,
//! equivalence, reduction and substitution, plus differential runs and
//! stepwise re-checking of the target machine.

mod check;
pub mod corpus;
pub mod gen;
pub mod report;

pub use check::{
    check_differential, check_equiv_preserved, check_preservation, check_reduction_preserved,
    check_step_preservation, check_subst_commute, check_subtype_preserved, readback,
    readback_source, source_step_pairs, Observation,
};
pub use gen::{gen_closed, gen_subst_case, gen_typed, GenSpec, Generated, SubstCase};
pub use report::{render, Property, Report, Totals, Verdict};
