//! Algebra of power operations on mod-`p` commutative ring spectra.
//!
//! Adem rewriting to admissible normal form on both the generalized
//! (Dyer-Lashof) and classical (Steenrod) sides, free algebras with
//! Dyer-Lashof operations, the excess-filtration completion, the quotient map
//! to the Steenrod algebra, and brute-force symmetric-group arithmetic.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod adem;
pub mod completion;
pub mod equivariant;
pub mod free;
pub mod modp;
pub mod parse;
pub mod terms;

pub use adem::{adem_step, reduce, AdemError, Reducer, RewriteCache, Strategy};
pub use completion::{
    completion_basis, milnor_dim, steenrod_basis, steenrodize, steenrodize_with, structure_map, StructureMap, WindowSpec,
};
pub use equivariant::{
    double_coset_check, gamma_fixed_dim, gcd_binomials, in_family_t, op_pattern, orbits, tate_chart, weyl_group,
    DoubleCosetReport, EquivariantError, Permutation, Subgroup, TateChart, TateRow, WeylGroup,
};
pub use free::{
    apply_op, free_basis, parse_element, parse_element_with, suspension_image, Action, AlgebraElement, AlgebraMonomial, Factor, FreeError,
    GeneratorSet,
};
pub use modp::{binom_mod_p, lucas_check, ArithError, FpScalar, Prime};
pub use parse::{parse, ParseError};
pub use terms::{Excess, LinComb, OpLetter, OpWord, Side, TermError};
