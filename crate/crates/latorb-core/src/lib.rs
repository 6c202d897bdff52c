//! Exact computations with lattices over F_q((t)): affine Springer fibers,
//! orbital integrals, local invariants of plane curve singularities, and the
//! combinatorial models that shadow them.

pub mod asf;
pub mod countpoly;
pub mod error;
pub mod fq;
pub mod fqlin;
pub mod fqpoly;
pub mod hilb;
pub mod lattice;
pub mod matrix;
pub mod orbital;
pub mod poly;
pub mod semigroup;
pub mod series;
pub mod spectral;
pub mod springer;
pub mod subspace;

pub use error::{Error, Result};
