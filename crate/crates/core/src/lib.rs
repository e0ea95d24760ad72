//! Rank of sparse random matrices with prescribed degree distributions.
//!
//! [`formula`] evaluates the limiting rank fraction and 2-core sizes of an
//! ensemble, [`sampler`] draws matrices from it, and [`linalg`] and
//! [`peeling`] measure them exactly. [`harness`] ties these together into
//! reproducible Monte Carlo campaigns.

pub mod bethe;
pub mod dist;
pub mod error;
pub mod formula;
pub mod harness;
pub mod linalg;
pub mod peeling;
pub mod pinning;
pub mod sampler;

pub use bethe::bethe_two_point;
pub use dist::{DegreeDistribution, Family, FamilySpec, PoissonRate, SizeBiasedDistribution};
pub use error::{Error, Result};
pub use formula::{rank_prediction, EnsembleSpec, RankPrediction, Tightness};
pub use linalg::{FieldSpec, SparseMatrix};
pub use peeling::{two_core, CoreResult};
pub use sampler::{EntryMap, TannerGraph};
