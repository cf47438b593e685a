//! Mass- and energy-conserving discretizations of the 1D nonlinear
//! Schrödinger equation `i u_t + u_xx + beta |u|^2 u = 0` and of its
//! hyperbolic approximation.
//!
//! Space is discretized with summation-by-parts operators ([`operators`]),
//! time with explicit or IMEX Runge-Kutta methods ([`integrators`]), and both
//! invariants are enforced by quadratic-preserving relaxation ([`relaxation`]).

pub mod error;
pub mod experiments;
pub mod hyperbolic;
pub mod integrators;
pub mod linalg;
pub mod nls;
pub mod operators;
pub mod problems;
pub mod relaxation;

pub use error::{Error, Result};
