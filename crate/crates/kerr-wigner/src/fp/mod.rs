//! Finite-difference Fokker-Planck solver for the Wigner function of a
//! damped Kerr oscillator, on the polar grid of [`crate::grid`].
//!
//! The evolution equation couples a free-Kerr part (rotation at rate r^2 - 1
//! plus the third-order azimuthal corrections that generate interference
//! fringes) with damping drift and thermal diffusion proportional to the
//! damping ratio xi.  Space is discretized with the 4th-order stencils of
//! [`crate::stencil`]; time with backward Euler (Crank-Nicolson available as
//! an experimental option).  Each step solves one banded linear system of
//! half-bandwidth 3 n_phi, factorized once per run.
//!
//! Boundary closure: the outer two rings are held at zero (the function
//! decays to zero long before r_max on a well-chosen grid); stencil taps
//! that would reach r <= 0 are fed the prescribed center value
//! (2/pi) exp(-2 |alpha|^2 e^{-tau xi}), which is exact for the damped
//! coherent-state family and phi-independent.

mod assemble;
mod evolve;

pub use assemble::{
    apply_boundary_conditions, assemble_operator, assemble_system_matrix, center_boundary_value,
    half_bandwidth, IndexMap, StencilCoefficients,
};
pub use evolve::{evolve, evolve_field, EvolutionResult, StepAudit};
