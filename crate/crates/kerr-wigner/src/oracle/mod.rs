//! Closed-form evaluators for the lossless Kerr evolution: two algebraically
//! equal Wigner series computed by different routes, the static Fock mixture
//! they share, and the Husimi Q function. These are the ground truth the PDE
//! solver is checked against, and the fast path for undamped figures.

mod deriv;
mod prec;
mod qfunc;
mod qform;

pub use deriv::{derivative_product, fock_static_part, DerivSeries};
pub use qform::{QFormSeries, PRECISION_FLOOR, RESIDUE_LIMIT};
pub use qfunc::QFunction;

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{CartesianRaster, PolarGrid, WignerField};

/// Truncation and precision budget for the series evaluators.
///
/// `max_terms_*` are capacities, not fixed counts: every sum truncates
/// adaptively once the last included term falls below `tail_tolerance`
/// times the running sum's magnitude, and errors out if the budget is
/// exhausted first. `precision_digits` sets the working precision of the
/// q-indexed form (the only one that needs extended arithmetic); it is a
/// lower bound, raised further when the amplitude demands it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPolicy {
    pub max_terms_q_form: usize,
    pub max_terms_deriv_form: usize,
    pub precision_digits: u32,
    pub tail_tolerance: f64,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            max_terms_q_form: 500,
            max_terms_deriv_form: 100,
            precision_digits: 30,
            tail_tolerance: 1e-20,
        }
    }
}

/// Wigner function via the q-indexed extended-precision series.
///
/// Convenience wrapper for isolated points: it rebuilds the (alpha, tau)
/// phase and damping tables on every call, and those tables carry all the
/// arbitrary-precision trigonometry. Evaluating many gammas at one
/// (alpha, tau) is what [`QFormSeries`] and the raster collectors are for.
pub fn wigner_series_q(
    alpha: Complex64,
    tau: f64,
    gamma: Complex64,
    policy: &SeriesPolicy,
) -> Result<f64> {
    QFormSeries::new(alpha, tau, policy)?.value(gamma)
}

/// Wigner function via the derivative-product series.
///
/// Per-call wrapper like [`wigner_series_q`]; reuse a [`DerivSeries`] when
/// evaluating more than a handful of points.
pub fn wigner_series_deriv(
    alpha: Complex64,
    tau: f64,
    gamma: Complex64,
    policy: &SeriesPolicy,
) -> Result<f64> {
    DerivSeries::new(alpha, tau, policy).value(gamma)
}

/// Husimi Q function.
///
/// Per-call wrapper like [`wigner_series_q`]; reuse a [`QFunction`] when
/// evaluating more than a handful of points.
pub fn q_function(
    alpha: Complex64,
    tau: f64,
    gamma: Complex64,
    policy: &SeriesPolicy,
) -> Result<f64> {
    QFunction::new(alpha, tau, policy).value(gamma)
}

fn collect_raster(
    mut raster: CartesianRaster,
    eval: impl Fn(Complex64) -> Result<f64> + Sync + Send,
) -> Result<CartesianRaster> {
    let res = raster.resolution;
    let points: Vec<Complex64> = (0..res * res)
        .map(|k| Complex64::new(raster.re_at(k % res), raster.im_at(k / res)))
        .collect();
    let values = crate::map_indexed(points.len(), |k| eval(points[k]));
    for (slot, v) in raster.values.iter_mut().zip(values) {
        *slot = v?;
    }
    Ok(raster)
}

fn collect_field(
    grid: &PolarGrid,
    tau: f64,
    eval: impl Fn(Complex64) -> Result<f64> + Sync + Send,
) -> Result<WignerField> {
    let points: Vec<Complex64> = (0..grid.len())
        .map(|k| grid.node_point(k / grid.n_phi, k % grid.n_phi).to_complex())
        .collect();
    let values = crate::map_indexed(points.len(), |k| eval(points[k]));
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        out.push(v?);
    }
    WignerField::from_values(*grid, tau, out)
}

/// q-form series on a cartesian raster; tables are built once and shared
/// across all points.
pub fn wigner_q_raster(
    alpha: Complex64,
    tau: f64,
    policy: &SeriesPolicy,
    resolution: usize,
    re_range: (f64, f64),
    im_range: (f64, f64),
) -> Result<CartesianRaster> {
    let engine = QFormSeries::new(alpha, tau, policy)?;
    collect_raster(
        CartesianRaster::zeros(resolution, re_range, im_range, tau),
        |g| engine.value(g),
    )
}

/// Derivative-form series on a cartesian raster.
pub fn wigner_deriv_raster(
    alpha: Complex64,
    tau: f64,
    policy: &SeriesPolicy,
    resolution: usize,
    re_range: (f64, f64),
    im_range: (f64, f64),
) -> Result<CartesianRaster> {
    let engine = DerivSeries::new(alpha, tau, policy);
    collect_raster(
        CartesianRaster::zeros(resolution, re_range, im_range, tau),
        |g| engine.value(g),
    )
}

/// Q function on a cartesian raster.
pub fn q_function_raster(
    alpha: Complex64,
    tau: f64,
    policy: &SeriesPolicy,
    resolution: usize,
    re_range: (f64, f64),
    im_range: (f64, f64),
) -> Result<CartesianRaster> {
    let engine = QFunction::new(alpha, tau, policy);
    collect_raster(
        CartesianRaster::zeros(resolution, re_range, im_range, tau),
        |g| engine.value(g),
    )
}

/// Derivative-form series sampled on a polar grid (the solver's layout).
pub fn wigner_deriv_field(
    alpha: Complex64,
    tau: f64,
    policy: &SeriesPolicy,
    grid: &PolarGrid,
) -> Result<WignerField> {
    let engine = DerivSeries::new(alpha, tau, policy);
    collect_field(grid, tau, |g| engine.value(g))
}

/// q-form series sampled on a polar grid.
pub fn wigner_q_field(
    alpha: Complex64,
    tau: f64,
    policy: &SeriesPolicy,
    grid: &PolarGrid,
) -> Result<WignerField> {
    let engine = QFormSeries::new(alpha, tau, policy)?;
    collect_field(grid, tau, |g| engine.value(g))
}
