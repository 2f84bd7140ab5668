//! Decentralized minimization of a sum of convex costs under an affine
//! coupling constraint.
//!
//! A network of `n` nodes cooperates to solve
//!
//! ```text
//!   minimize    f_1(x_1) + ... + f_n(x_n)
//!   subject to  sum_i (A_i x_i - b_i) = 0
//! ```
//!
//! where node `i` privately owns its cost `f_i`, its constraint block
//! `A_i`, and its offset `b_i`, and may exchange data only with its
//! neighbors in a communication graph. The solver lifts the coupling
//! constraint through a gossip matrix, compresses the spectra of both the
//! gossip and constraint operators with Chebyshev polynomials, and runs an
//! accelerated primal-dual iteration on the lifted problem. Communication,
//! local matrix multiplications, and gradient evaluations are all routed
//! through a simulated network that enforces locality and meters cost.
//!
//! Module map:
//!
//! * [`graphs`] - topologies and the Laplacian gossip matrix.
//! * [`spectral`] - constraint spectrum and every derived constant.
//! * [`problems`] - problem instances, generators, and file formats.
//! * [`simnet`] - the simulated network: storage, rounds, counters.
//! * [`chebyshev`] - polynomial spectrum compression and its operators.
//! * [`solver`] - the accelerated primal-dual loop and its trace.
//! * [`oracle`] - dense reference computations used for verification.
//! * [`verify`] - the self-check suite run by `coupled-decent verify`.

// Validation guards are written `!(x > 0.0)` so NaN fails them; the
// lint's suggested rewrite would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
mod error;
pub mod graphs;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod simnet;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{BlockVec, LiftedVec};
