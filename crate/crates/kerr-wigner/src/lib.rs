//! Phase-space simulation of a Kerr-nonlinear oscillator with damping.
//!
//! The crate has three legs that check each other:
//!
//! * [`fp`] — an implicit finite-difference solver for the Fokker-Planck
//!   equation of the Wigner function in polar coordinates, backed by the
//!   banded LU kernel in [`band`];
//! * [`oracle`] — closed-form series for the lossless case, evaluated in
//!   extended precision where the oscillatory terms demand it;
//! * [`analysis`] — negativity, periodicity, vacuum-convergence and
//!   interference-structure diagnostics over either representation.
//!
//! With the default `parallel` feature, rasters and matrix assembly fan out
//! over threads via rayon; results are identical either way.

// negated comparisons like !(x > 0.0) are deliberate: they reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod band;
pub mod error;
pub mod fp;
pub mod grid;
pub mod oracle;
pub mod stencil;

pub use analysis::{
    dominant_lobe_count, negativity_intervals, negativity_scan, periodicity_check,
    subplanck_metrics, vacuum_distance, LobeReport, NegativityReport, NegativityScan,
    StructureKind, SubPlanckReport, NEGATIVITY_THRESHOLD,
};
pub use error::{KerrError, Result};
pub use fp::{center_boundary_value, evolve, evolve_field, EvolutionResult, StepAudit};
pub use grid::{
    coherent_wigner_init, phase_space_integral, sample_window, suggested_r_max, CartesianRaster,
    CenterClosure, PhasePoint, PolarGrid, SimulationConfig, TimeScheme, WignerField,
};
pub use oracle::{
    fock_static_part, q_function, wigner_series_deriv, wigner_series_q, SeriesPolicy,
};

/// Map an index range through `f`, in parallel when the feature is enabled.
/// Output ordering is by index either way, keeping results deterministic.
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
