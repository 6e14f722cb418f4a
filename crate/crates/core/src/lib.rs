//! Finite-dimensional quantum de Finetti toolkit.
//!
//! * [`cstar`]: finite C*-algebras (direct sums of matrix blocks), elements and states.
//! * [`cpmaps`]: Choi-matrix channels with positivity, unitality and duality.
//! * [`exchange`]: tensor powers, the embeddings between them, and truncated
//!   exchangeable sequences.
//! * [`definetti`]: reconstruction of the mixing measure of an exchangeable
//!   sequence, and factorization of parameterized cones through it.
//! * [`classical`]: the finite distribution monad and the classical
//!   (Hewitt–Savage) counterpart.

pub mod classical;
pub mod cpmaps;
pub mod cstar;
pub mod definetti;
pub mod error;
pub mod exchange;
pub mod fixtures;
pub mod json;
pub mod linalg;
pub mod nnls;
pub mod perm;

pub use error::{Error, Result};
