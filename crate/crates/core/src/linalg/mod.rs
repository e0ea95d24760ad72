//! Exact linear algebra over prime fields.

mod dense;
pub mod field;
mod matrix;
mod rank;
mod relations;
mod rowspace;

pub use dense::Rref;
pub use field::{is_prime, FieldSpec, Fp};
pub use matrix::SparseMatrix;
pub use rank::{exact_rational_rank, nullity, peel_singletons, rank, rank_of_rows, rref, PeelOutcome, EXACT_RATIONAL_MAX_DIM};
pub use relations::{
    count_proper_relations, frozen_set, is_proper_relation, is_relation, kernel_basis,
    nullity_delta_lemma_check, pin, pin_within, RelationReport, RelationStructure,
};
pub use rowspace::RowSpace;
