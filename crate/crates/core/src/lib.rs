//! Online saddle-point optimization with non-additive long-term penalties.
//!
//! The player observes round `t`'s reward `u_t`, constraint matrix `A_t` and
//! target `b_t`, picks an allocation `x_t` from a product of simplices, and is
//! scored on
//!
//! ```text
//! P(x_1..x_T) = (1/T) Σ u_tᵀx_t − E((1/T) Σ (A_t x_t − b_t))
//! ```
//!
//! where the penalty `E` acts on the *average* residual and therefore does not
//! split across rounds. Linearizing `E` through its Fenchel conjugate gives the
//! per-round Lagrangian
//!
//! ```text
//! L_t(x, λ) = u_tᵀx − λᵀ(A_t x − b_t) + E*(λ),   λ ∈ Λ = dom E*
//! ```
//!
//! which the online algorithms maximize exactly in `x` and descend in `λ`.
//!
//! Crate layout:
//!
//! - [`penalty`]: the penalty catalog, conjugates and dual-domain projections.
//! - [`oracle`]: round data and the exact primal maximization over simplex blocks.
//! - [`online`]: the primal-dual algorithms (known and estimated `A_t`) and
//!   the additive baseline.
//! - [`offline`]: primal and dual objectives and the certified offline optimum.
//! - [`diagnostics`]: every term of the dynamic regret bound.
//! - [`data`]: seeded synthetic instance generation.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod diagnostics;
mod error;
pub mod linalg;
pub mod offline;
pub mod online;
pub mod oracle;
pub mod penalty;

pub use error::{Error, Result};
