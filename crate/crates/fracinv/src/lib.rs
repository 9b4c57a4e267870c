//! Forward and inverse solvers for 1-D time-fractional diffusion equations.
//!
//! The crate evaluates Mittag-Leffler functions to near machine precision,
//! provides discrete fractional calculus on uniform time grids, discretizes
//! the elliptic operator -(a(x)u')' + 1 with mixed Dirichlet/Robin/Neumann
//! boundaries, solves the forward subdiffusion problems by two independent
//! methods (spectral Duhamel and implicit L1 time stepping), and reconstructs
//! the time-dependent factor f(t) of a source term or a zeroth-order
//! coefficient from the trace of the solution at a single spatial point.

// `!(x > 0.0)` deliberately catches NaN; quadrature/series constants are
// carried at full printed precision; indexed loops walk several arrays in
// lockstep.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod fracops;
pub mod forward;
pub mod harness;
pub mod inverse;
pub mod mlf;
pub mod spectral;

pub(crate) mod dd;
pub(crate) mod quad;
