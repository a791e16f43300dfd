//! Slow-quench dynamics of Clifford band models and the dynamical
//! topological invariants read off from time-averaged spin polarization.

// Guards written as `!(x > 0.0)` reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clifford;
pub mod evolve;
pub mod exec;
pub mod invariants;
pub mod lz;
pub mod models;
pub mod surfaces;
