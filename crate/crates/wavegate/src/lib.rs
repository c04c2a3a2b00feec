//! Transmitted wavefunctions of initially confined wavepackets crossing 1-D
//! potential barriers, for t > 0 and observation points beyond the barrier.
//!
//! The initial state is a sum of exponentials cut off sharply at the origin;
//! the barrier enters only through its transmission amplitude T(k). The crate
//! provides the closed-form kernels, a pole-subtracted oscillatory quadrature
//! fallback for arbitrary barriers, boundary-derivative (short-time) and
//! large-distance expansions, and an independent Crank-Nicolson reference
//! integrator for validation.

pub mod error;
pub mod initial_state;
pub mod kernel;
pub mod oracle_tdse;
pub mod propagator;
pub mod special_fn;
pub mod transmission;

mod quadrature;

pub use error::{Result, SolverError};
