//! Assembly of the discretized evolution operator and the implicit system.
//!
//! The spatial operator L in dW/dtau = L W acts on the evolving rings
//! 0..=n_r-3.  Its weights depend only on the ring radius, so one 5x5 offset
//! block per ring covers every azimuthal position.  Taps that would land at
//! r <= 0 never become matrix entries; the evolution loop feeds them the
//! prescribed center value through the right-hand side instead.  The outer
//! two rings hold homogeneous Dirichlet constraint rows, which truncates the
//! decaying tail of W at r_max.

use num_complex::Complex64;

use crate::band::{band_from_entries, CompressedBandMatrix};
use crate::error::Result;
use crate::grid::{CenterClosure, PolarGrid, SimulationConfig, TimeScheme, WignerField, TWO_OVER_PI};
use crate::stencil::{
    stencil_first_derivative, stencil_second_derivative, stencil_third_derivative,
};

/// Bijection between grid coordinates (i_r, j_phi) and the linear unknown
/// index k = n_phi * i_r + j_phi; the azimuthal coordinate wraps.
#[derive(Debug, Clone, Copy)]
pub struct IndexMap {
    n_r: usize,
    n_phi: usize,
}

impl IndexMap {
    pub fn new(grid: PolarGrid) -> Self {
        IndexMap { n_r: grid.n_r, n_phi: grid.n_phi }
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of (i_r, j); j may be any integer and is wrapped mod n_phi.
    pub fn index(&self, i_r: usize, j_phi: i64) -> usize {
        debug_assert!(i_r < self.n_r);
        self.n_phi * i_r + j_phi.rem_euclid(self.n_phi as i64) as usize
    }

    /// Inverse of `index` on its canonical range.
    pub fn point(&self, k: usize) -> (usize, usize) {
        debug_assert!(k < self.len());
        (k / self.n_phi, k % self.n_phi)
    }
}

/// Per-point weights of the spatial operator, stored as one block per ring:
/// `coefficient(i_r, di, dj)` is the weight of the tap at ring i_r + di,
/// azimuthal offset dj, for a row on ring i_r.  Offsets never exceed +-2.
///
/// Blocks exist for rings 0..=n_r-3.  On rings 0 and 1 the blocks keep their
/// below-axis taps (i_r + di < 0); [`StencilCoefficients::center_tap_weight`]
/// lumps those into the single weight the center-value closure needs, the
/// center value being independent of phi.
#[derive(Debug, Clone)]
pub struct StencilCoefficients {
    grid: PolarGrid,
    /// blocks[i_r][di+2][dj+2]
    blocks: Vec<[[f64; 5]; 5]>,
}

impl StencilCoefficients {
    pub fn grid(&self) -> PolarGrid {
        self.grid
    }

    /// Rings whose unknowns evolve (everything below the Dirichlet collar).
    pub fn evolving_rings(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.grid.n_r - 3
    }

    /// Rings where every tap stays on the grid.
    pub fn interior_rings(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.grid.n_r - 3
    }

    pub fn coefficient(&self, i_r: usize, di: i32, dj: i32) -> f64 {
        self.blocks[i_r][(di + 2) as usize][(dj + 2) as usize]
    }

    /// Summed weight of the taps a row on ring `i_r` sends to r <= 0.
    /// Zero for interior rings; also numerically ~0 at xi = 0, where the only
    /// radial couplings are mixed with d_phi and their azimuthal sums cancel.
    pub fn center_tap_weight(&self, i_r: usize) -> f64 {
        let mut s = 0.0;
        for di in -2..=2i32 {
            if i_r as i32 + di < 0 {
                for dj in -2..=2i32 {
                    s += self.coefficient(i_r, di, dj);
                }
            }
        }
        s
    }

    /// Apply L to a field on the interior rings; all other nodes get 0.
    pub fn apply_interior(&self, field: &WignerField) -> Vec<f64> {
        let grid = self.grid;
        let mut out = vec![0.0; grid.len()];
        for i in self.interior_rings() {
            for j in 0..grid.n_phi {
                let mut acc = 0.0;
                for di in -2..=2i32 {
                    let ring = (i as i32 + di) as usize;
                    for dj in -2..=2i32 {
                        let jj = (j as i64 + dj as i64).rem_euclid(grid.n_phi as i64) as usize;
                        acc += self.coefficient(i, di, dj) * field.value(ring, jj);
                    }
                }
                out[grid.node_index(i, j)] = acc;
            }
        }
        out
    }
}

/// Build the operator weights for every evolving ring.
///
/// Term prefactors at ring radius r, with damping ratio xi and thermal
/// occupation N:
///
/// ```text
/// d_phi            1 - r^2                  (free Kerr rotation)
/// d_r d_phi        1 / (16 r)
/// d_r^2 d_phi      1 / 16
/// d_phi^3          1 / (16 r^2)
/// 1                xi
/// d_r              (xi/2) (r + (1/2 + N) / (2r))
/// d_r^2            (xi/4) (1/2 + N)
/// d_phi^2          (xi/4) (1/2 + N) / r^2
/// ```
///
/// The Kerr line's sign is pinned by the exact solution: a ring at radius
/// r > 1 advances counterclockwise at d_phi/d_tau = r^2 - 1 (the closed-form
/// series says so, and L W_exact = dW_exact/dtau is tested against it), which
/// as an advection term is -(r^2 - 1) d_phi. The damping lines are pinned the
/// other way: as written they conserve the integral and contract amplitudes
/// like the center value e^{-2|alpha|^2 e^{-tau xi}} demands.
///
/// Each derivative is replaced by its 4th-order weight vector; the mixed
/// terms are tensor products of the radial and azimuthal vectors.
pub fn assemble_operator(config: &SimulationConfig) -> StencilCoefficients {
    let grid = config.grid;
    let w1r = stencil_first_derivative(grid.dr());
    let w2r = stencil_second_derivative(grid.dr());
    let w1p = stencil_first_derivative(grid.dphi());
    let w2p = stencil_second_derivative(grid.dphi());
    let w3p = stencil_third_derivative(grid.dphi());
    let xi = config.xi;
    let half_plus_n = 0.5 + config.n_thermal;

    let blocks = (0..=grid.n_r - 3)
        .map(|i| {
            let r = grid.radius(i);
            let c_phi = 1.0 - r * r;
            let c_r_phi = 1.0 / (16.0 * r);
            let c_rr_phi = 1.0 / 16.0;
            let c_phi3 = 1.0 / (16.0 * r * r);
            let c_r = 0.5 * xi * (r + 0.5 * half_plus_n / r);
            let c_rr = 0.25 * xi * half_plus_n;
            let c_phi2 = 0.25 * xi * half_plus_n / (r * r);

            let mut b = [[0.0f64; 5]; 5];
            for p in 0..5 {
                // pure azimuthal terms sit on the di = 0 row of the block
                b[2][p] += c_phi * w1p[p] + c_phi3 * w3p[p] + c_phi2 * w2p[p];
            }
            b[2][2] += xi;
            for a in 0..5 {
                // pure radial terms on the dj = 0 column
                b[a][2] += c_r * w1r[a] + c_rr * w2r[a];
                for p in 0..5 {
                    b[a][p] += (c_r_phi * w1r[a] + c_rr_phi * w2r[a]) * w1p[p];
                }
            }
            b
        })
        .collect();

    StencilCoefficients { grid, blocks }
}

/// Half-bandwidth of the assembled system: radial reach 2 n_phi plus the
/// worst azimuthal wrap of n_phi - 2, rounded up to a clean 3 n_phi.
pub fn half_bandwidth(n_phi: usize) -> usize {
    3 * n_phi
}

/// Assemble I - dtau L in band storage: evolution rows for rings 0..=n_r-3
/// (taps below the axis omitted; the boundary refresh routes them through
/// the rhs) and bare 1-on-diagonal rows for the outer two rings, which
/// `apply_boundary_conditions` turns into Dirichlet constraints.
///
/// A negative dtau yields I + |dtau| L, the explicit half of the
/// trapezoidal (Crank-Nicolson) splitting.
pub fn assemble_system_matrix(
    op: &StencilCoefficients,
    dtau: f64,
    map: &IndexMap,
) -> Result<CompressedBandMatrix> {
    let grid = op.grid();
    let n = map.len();
    let m = half_bandwidth(grid.n_phi);
    // rows are independent, so build their coordinate lists in parallel
    let per_row = crate::map_indexed(n, |k| {
        let (i, j) = map.point(k);
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(26);
        entries.push((k, k, 1.0));
        if op.evolving_rings().contains(&i) {
            for di in -2..=2i32 {
                let ring = i as i32 + di;
                if ring < 0 {
                    continue; // closed by the center rule
                }
                for dj in -2..=2i32 {
                    let c = op.coefficient(i, di, dj);
                    if c != 0.0 {
                        entries.push((k, map.index(ring as usize, j as i64 + dj as i64), -dtau * c));
                    }
                }
            }
        }
        entries
    });
    let flat: Vec<(usize, usize, f64)> = per_row.into_iter().flatten().collect();
    band_from_entries(n, m, m, &flat)
}

/// Prescribed value of W at the origin, (2/pi) exp(-2 |alpha|^2 e^{-tau xi}).
/// Constant in tau for xi = 0; relaxes to the vacuum peak 2/pi otherwise.
pub fn center_boundary_value(alpha: Complex64, xi: f64, tau: f64) -> f64 {
    TWO_OVER_PI * (-2.0 * alpha.norm_sqr() * (-tau * xi).exp()).exp()
}

/// Install the boundary closure into the system and write the step's
/// boundary data into the rhs.  `tau` is the time level the upcoming solve
/// produces.
///
/// Outer two rings: rows become 1-on-diagonal constraints with rhs 0.
/// Inner two rings, per `config.center_closure`:
///   * `GhostSubstitute` -- the rows stay evolution rows; the omitted
///     below-axis taps contribute dtau-weighted center values, added to rhs;
///   * `PinnedRings` -- the rows become constraints holding the center value
///     itself (experimental sensitivity variant).
///
/// The matrix edits are idempotent; the rhs ghost contribution is a `+=` and
/// belongs on a freshly built rhs.  The evolution loop calls this once before
/// factorizing and then refreshes only the rhs part each step.
pub fn apply_boundary_conditions(
    matrix: &mut CompressedBandMatrix,
    rhs: &mut [f64],
    config: &SimulationConfig,
    tau: f64,
) {
    let grid = config.grid;
    let map = IndexMap::new(grid);
    assert_eq!(matrix.n, map.len());
    assert_eq!(rhs.len(), map.len());

    for i in [grid.n_r - 2, grid.n_r - 1] {
        for j in 0..grid.n_phi {
            let k = map.index(i, j as i64);
            matrix.clear_row(k);
            matrix.add_entry(k, k, 1.0).expect("diagonal lies inside the band");
        }
    }
    if config.center_closure == CenterClosure::PinnedRings {
        for i in [0, 1] {
            for j in 0..grid.n_phi {
                let k = map.index(i, j as i64);
                matrix.clear_row(k);
                matrix.add_entry(k, k, 1.0).expect("diagonal lies inside the band");
            }
        }
    }

    let op = assemble_operator(config);
    let taps = [op.center_tap_weight(0), op.center_tap_weight(1)];
    boundary_rhs(rhs, config, &taps, tau);
}

/// The per-step rhs part of the boundary closure; `tau` is the level being
/// solved for.  Kept separate so the evolution loop can reuse precomputed
/// center-tap weights after the matrix has been factorized.
pub(super) fn boundary_rhs(rhs: &mut [f64], config: &SimulationConfig, taps: &[f64; 2], tau: f64) {
    let grid = config.grid;
    let map = IndexMap::new(grid);
    for i in [grid.n_r - 2, grid.n_r - 1] {
        for j in 0..grid.n_phi {
            rhs[map.index(i, j as i64)] = 0.0;
        }
    }
    match config.center_closure {
        CenterClosure::GhostSubstitute => {
            // ghost value g enters the step as dtau * (tap weight) * g, split
            // across both time levels under the trapezoidal scheme
            let add = match config.scheme {
                TimeScheme::BackwardEuler => {
                    config.dtau * center_boundary_value(config.alpha, config.xi, tau)
                }
                TimeScheme::CrankNicolson => {
                    0.5 * config.dtau
                        * (center_boundary_value(config.alpha, config.xi, tau)
                            + center_boundary_value(config.alpha, config.xi, tau - config.dtau))
                }
            };
            for (i, &w) in taps.iter().enumerate() {
                for j in 0..grid.n_phi {
                    rhs[map.index(i, j as i64)] += w * add;
                }
            }
        }
        CenterClosure::PinnedRings => {
            let c = center_boundary_value(config.alpha, config.xi, tau);
            for i in [0, 1] {
                for j in 0..grid.n_phi {
                    rhs[map.index(i, j as i64)] = c;
                }
            }
        }
    }
}
