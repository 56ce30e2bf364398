//! Phase-space geometry: the polar grid, field containers, coherent-state
//! initialization, quadrature and cartesian resampling.
//!
//! The phase-space variable is gamma = r e^{i phi}. The grid deliberately
//! excludes the singular point r = 0: node radii are r_i = (i+1)*dr so the
//! 1/r and 1/r^2 operator coefficients stay finite everywhere on the mesh.

use num_complex::Complex64;

use crate::error::{KerrError, Result};

pub const TWO_OVER_PI: f64 = 2.0 / std::f64::consts::PI;

/// A point of phase space in polar form, r >= 0 and phi in [0, 2*pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub r: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub fn new(r: f64, phi: f64) -> Self {
        debug_assert!(r >= 0.0);
        let tau = 2.0 * std::f64::consts::PI;
        let mut phi = phi % tau;
        if phi < 0.0 {
            phi += tau;
        }
        PhasePoint { r, phi }
    }

    pub fn from_cartesian(re: f64, im: f64) -> Self {
        PhasePoint::new(re.hypot(im), im.atan2(re))
    }

    pub fn re(&self) -> f64 {
        self.r * self.phi.cos()
    }

    pub fn im(&self) -> f64 {
        self.r * self.phi.sin()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.phi)
    }
}

/// Uniform polar mesh. Radii r_i = (i+1)*dr for i in 0..n_r, so the last
/// ring sits exactly at r_max; angles phi_j = j*dphi, periodic in j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_phi: usize,
    pub r_max: f64,
}

impl PolarGrid {
    pub fn new(n_r: usize, n_phi: usize, r_max: f64) -> Result<Self> {
        // 4th-order stencils reach +-2 neighbors in each direction
        if n_r < 5 || n_phi < 5 {
            return Err(KerrError::InvalidConfig(format!(
                "grid {}x{} too small, need at least 5 points per direction",
                n_r, n_phi
            )));
        }
        if !(r_max > 0.0) {
            return Err(KerrError::InvalidConfig(format!("r_max {} must be positive", r_max)));
        }
        Ok(PolarGrid { n_r, n_phi, r_max })
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n_r as f64
    }

    pub fn dphi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_phi as f64
    }

    /// Radius of ring i; the grid starts one spacing away from the origin.
    pub fn radius(&self, i_r: usize) -> f64 {
        (i_r as f64 + 1.0) * self.dr()
    }

    pub fn angle(&self, j_phi: usize) -> f64 {
        j_phi as f64 * self.dphi()
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear index with phi running fastest, matching the solver's row order.
    pub fn node_index(&self, i_r: usize, j_phi: usize) -> usize {
        i_r * self.n_phi + j_phi
    }

    pub fn node_point(&self, i_r: usize, j_phi: usize) -> PhasePoint {
        PhasePoint::new(self.radius(i_r), self.angle(j_phi))
    }
}

/// Scalar field W(tau, r, phi) sampled on a `PolarGrid`, phi fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub grid: PolarGrid,
    pub values: Vec<f64>,
    pub tau: f64,
}

impl WignerField {
    pub fn zeros(grid: PolarGrid, tau: f64) -> Self {
        WignerField { grid, values: vec![0.0; grid.len()], tau }
    }

    pub fn from_values(grid: PolarGrid, tau: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(KerrError::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(WignerField { grid, values, tau })
    }

    pub fn value(&self, i_r: usize, j_phi: usize) -> f64 {
        self.values[self.grid.node_index(i_r, j_phi)]
    }

    pub fn value_mut(&mut self, i_r: usize, j_phi: usize) -> &mut f64 {
        let k = self.grid.node_index(i_r, j_phi);
        &mut self.values[k]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fill from a pointwise function of the node position.
    pub fn fill_with(&mut self, f: impl Fn(PhasePoint) -> f64) {
        for i in 0..self.grid.n_r {
            for j in 0..self.grid.n_phi {
                let p = self.grid.node_point(i, j);
                self.values[self.grid.node_index(i, j)] = f(p);
            }
        }
    }
}

/// Square cartesian raster over [re_min, re_max] x [im_min, im_max],
/// row-major with the real axis fastest; axis samples include both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianRaster {
    pub resolution: usize,
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub values: Vec<f64>,
    pub tau: f64,
}

impl CartesianRaster {
    pub fn zeros(resolution: usize, re_range: (f64, f64), im_range: (f64, f64), tau: f64) -> Self {
        CartesianRaster {
            resolution,
            re_min: re_range.0,
            re_max: re_range.1,
            im_min: im_range.0,
            im_max: im_range.1,
            values: vec![0.0; resolution * resolution],
            tau,
        }
    }

    pub fn re_at(&self, ix: usize) -> f64 {
        step_at(self.re_min, self.re_max, self.resolution, ix)
    }

    pub fn im_at(&self, iy: usize) -> f64 {
        step_at(self.im_min, self.im_max, self.resolution, iy)
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.resolution + ix]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn window_area(&self) -> f64 {
        (self.re_max - self.re_min) * (self.im_max - self.im_min)
    }

    pub fn same_geometry(&self, other: &CartesianRaster) -> bool {
        self.resolution == other.resolution
            && self.re_min == other.re_min
            && self.re_max == other.re_max
            && self.im_min == other.im_min
            && self.im_max == other.im_max
    }
}

fn step_at(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if n == 1 {
        return 0.5 * (lo + hi);
    }
    lo + (hi - lo) * k as f64 / (n - 1) as f64
}

/// Time-stepping scheme for the implicit solver. Backward Euler is the
/// default; Crank-Nicolson is kept as an experimental option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    #[default]
    BackwardEuler,
    CrankNicolson,
}

/// How stencil taps that would reach r <= 0 are closed.
///
/// `GhostSubstitute` (default) replaces them with the prescribed
/// phi-independent center value; `PinnedRings` instead pins the two inner
/// rings to that value outright (experimental, for sensitivity checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenterClosure {
    #[default]
    GhostSubstitute,
    PinnedRings,
}

/// Full description of one evolution problem.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub alpha: Complex64,
    /// damping-to-nonlinearity ratio xi = Gamma/kappa
    pub xi: f64,
    /// mean thermal occupation N of the reservoir
    pub n_thermal: f64,
    pub dtau: f64,
    pub grid: PolarGrid,
    pub scheme: TimeScheme,
    pub center_closure: CenterClosure,
    /// abort threshold on |integral(W) - 1| per step
    pub drift_tolerance: f64,
}

impl SimulationConfig {
    pub fn new(alpha: Complex64, xi: f64, n_thermal: f64, dtau: f64, grid: PolarGrid) -> Self {
        SimulationConfig {
            alpha,
            xi,
            n_thermal,
            dtau,
            grid,
            scheme: TimeScheme::default(),
            center_closure: CenterClosure::default(),
            drift_tolerance: 1e-2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0) {
            return Err(KerrError::InvalidConfig(format!("xi {} must be >= 0", self.xi)));
        }
        if !(self.n_thermal >= 0.0) {
            return Err(KerrError::InvalidConfig(format!(
                "n_thermal {} must be >= 0",
                self.n_thermal
            )));
        }
        if !(self.dtau > 0.0) {
            return Err(KerrError::InvalidConfig(format!("dtau {} must be > 0", self.dtau)));
        }
        // the initial Gaussian must fit well inside the truncated domain
        if self.grid.r_max < 2.0 * self.alpha.norm() {
            return Err(KerrError::InvalidConfig(format!(
                "r_max {} < 2|alpha| = {}",
                self.grid.r_max,
                2.0 * self.alpha.norm()
            )));
        }
        Ok(())
    }
}

/// Domain radius used by the presets: generous enough for the damping-driven
/// inward drift and the interference tails at every amplitude we plot.
pub fn suggested_r_max(alpha: Complex64) -> f64 {
    (2.5 * alpha.norm()).max(5.0)
}

/// W(0, gamma) = (2/pi) exp(-2|alpha - gamma|^2), the coherent-state Wigner
/// function, sampled at every node.
pub fn coherent_wigner_init(alpha: Complex64, grid: PolarGrid) -> WignerField {
    let mut field = WignerField::zeros(grid, 0.0);
    field.fill_with(|p| coherent_wigner_value(alpha, p.to_complex()));
    field
}

pub fn coherent_wigner_value(alpha: Complex64, gamma: Complex64) -> f64 {
    TWO_OVER_PI * (-2.0 * (alpha - gamma).norm_sqr()).exp()
}

/// Composite quadrature of the full phase-space integral of W r dr dphi:
/// trapezoid radially (the integrand r*W vanishes exactly at r = 0, which
/// closes the first panel), plain rectangle rule around the periodic angle.
pub fn phase_space_integral(field: &WignerField) -> f64 {
    let g = field.grid;
    let dr = g.dr();
    let dphi = g.dphi();
    let mut total = 0.0;
    for i in 0..g.n_r {
        let mut ring = 0.0;
        for j in 0..g.n_phi {
            ring += field.value(i, j);
        }
        // half weight on the outer boundary ring
        let w = if i + 1 == g.n_r { 0.5 } else { 1.0 };
        total += w * ring * g.radius(i);
    }
    total * dr * dphi
}

/// Bilinear interpolation of the polar field onto a square cartesian window.
///
/// Points that fall inside the innermost ring are blended radially against
/// the azimuthal mean of ring 0, the field's best available estimate of the
/// (continuous, hence phi-independent) value at the origin.
pub fn sample_window(
    field: &WignerField,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: usize,
) -> Result<CartesianRaster> {
    if resolution == 0 {
        return Err(KerrError::InvalidConfig("raster resolution must be positive".into()));
    }
    let g = field.grid;
    // the window's farthest point from the origin is always one of its corners
    let mut corner_radius: f64 = 0.0;
    for re in [re_range.0, re_range.1] {
        for im in [im_range.0, im_range.1] {
            corner_radius = corner_radius.max(re.hypot(im));
        }
    }
    if corner_radius > g.r_max * (1.0 + 1e-12) {
        return Err(KerrError::WindowExceedsGrid { corner_radius, r_max: g.r_max });
    }

    let center = azimuthal_mean(field, 0);
    let mut raster = CartesianRaster::zeros(resolution, re_range, im_range, field.tau);
    for iy in 0..resolution {
        let im = raster.im_at(iy);
        for ix in 0..resolution {
            let re = raster.re_at(ix);
            let p = PhasePoint::from_cartesian(re, im);
            raster.values[iy * resolution + ix] = interpolate_polar(field, p, center);
        }
    }
    Ok(raster)
}

fn azimuthal_mean(field: &WignerField, i_r: usize) -> f64 {
    let n = field.grid.n_phi;
    (0..n).map(|j| field.value(i_r, j)).sum::<f64>() / n as f64
}

fn interpolate_polar(field: &WignerField, p: PhasePoint, center_value: f64) -> f64 {
    let g = field.grid;
    let dr = g.dr();
    let dphi = g.dphi();

    let fphi = p.phi / dphi;
    let j0 = (fphi.floor() as usize).min(g.n_phi - 1);
    let tphi = fphi - j0 as f64;
    let j1 = (j0 + 1) % g.n_phi;

    // fractional ring index; ring i sits at radius (i+1)*dr
    let fr = p.r / dr - 1.0;
    if fr < 0.0 {
        // inside the first ring: radial blend center <-> ring 0
        let t = p.r / dr;
        let ring0 = (1.0 - tphi) * field.value(0, j0) + tphi * field.value(0, j1);
        return (1.0 - t) * center_value + t * ring0;
    }
    let i0 = (fr.floor() as usize).min(g.n_r - 2);
    let tr = (fr - i0 as f64).min(1.0);
    let v00 = field.value(i0, j0);
    let v01 = field.value(i0, j1);
    let v10 = field.value(i0 + 1, j0);
    let v11 = field.value(i0 + 1, j1);
    let lo = (1.0 - tphi) * v00 + tphi * v01;
    let hi = (1.0 - tphi) * v10 + tphi * v11;
    (1.0 - tr) * lo + tr * hi
}
