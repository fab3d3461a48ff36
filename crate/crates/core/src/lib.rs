//! Sharp Morrey constants on planar domains.
//!
//! The constant `lambda_p = inf int |Du|^p / ||u||_inf^p` over `W^{1,p}_0`
//! (p > 2) is computed through pole potentials: for every interior point `y`
//! the p-harmonic potential with `w(y) = 1` has energy `lambda(y)`, and
//! `lambda_p` is the minimum of that landscape. Around this sit the closed
//! forms for balls, the verification battery and a small calculus of
//! quasiconcave grid functions (Minkowski combinations, Steiner
//! rearrangement).

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod extremal;
pub mod geometry;
pub mod io;
pub mod plaplace;
pub mod shape;

pub use error::{Error, Result};
