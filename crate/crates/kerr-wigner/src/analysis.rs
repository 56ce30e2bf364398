//! Diagnostics over fields and field sequences: negativity tracking,
//! periodicity and vacuum-convergence distances, and the interference
//! structure metrics (dominant lobes, sub-Planck dots vs ribbons).

use crate::error::{KerrError, Result};
use crate::grid::{CartesianRaster, WignerField, TWO_OVER_PI};

/// Default cutoff separating genuine negativity from quadrature noise.
pub const NEGATIVITY_THRESHOLD: f64 = 1e-4;

/// A raster cell carries a sign only if |W| exceeds this.
const SIGN_THRESHOLD: f64 = 1e-4;

/// Sign components smaller than this are pixel noise, not structure.
const MIN_COMPONENT_CELLS: usize = 5;

/// Aspect ratios are averaged only over components at least this large;
/// below that the second moments say little about shape.
const ASPECT_MIN_CELLS: usize = 20;

/// Mean aspect ratio separating compact "dots" from elongated "ribbons".
const RIBBON_ASPECT: f64 = 2.0;

/// Negativity summary of one field or raster.
#[derive(Debug, Clone, Copy)]
pub struct NegativityReport {
    pub tau: f64,
    pub min_value: f64,
    /// fraction of grid cells with W < -threshold
    pub negative_fraction: f64,
    pub threshold: f64,
}

impl NegativityReport {
    fn from_values(tau: f64, values: &[f64], threshold: f64) -> Self {
        assert!(threshold > 0.0);
        let negatives = values.iter().filter(|&&v| v < -threshold).count();
        NegativityReport {
            tau,
            min_value: values.iter().cloned().fold(f64::INFINITY, f64::min),
            negative_fraction: negatives as f64 / values.len() as f64,
            threshold,
        }
    }

    pub fn of_field(field: &WignerField, threshold: f64) -> Self {
        Self::from_values(field.tau, &field.values, threshold)
    }

    pub fn of_raster(raster: &CartesianRaster, threshold: f64) -> Self {
        Self::from_values(raster.tau, &raster.values, threshold)
    }

    /// Does the field dip below the noise floor anywhere?
    pub fn is_negative(&self) -> bool {
        self.min_value < -self.threshold
    }
}

/// Output of [`negativity_scan`]: one report per field plus the maximal
/// tau-intervals over which the minimum stays below -threshold.
#[derive(Debug, Clone)]
pub struct NegativityScan {
    pub reports: Vec<NegativityReport>,
    pub intervals: Vec<(f64, f64)>,
}

/// Scan a tau-ordered sequence of fields for negativity.
pub fn negativity_scan(fields: &[WignerField], threshold: f64) -> NegativityScan {
    let reports = crate::map_indexed(fields.len(), |i| {
        NegativityReport::of_field(&fields[i], threshold)
    });
    let points: Vec<(f64, f64)> = reports.iter().map(|r| (r.tau, r.min_value)).collect();
    let intervals = negativity_intervals(&points, threshold);
    NegativityScan { reports, intervals }
}

/// Maximal runs of consecutive (tau, min_value) scan points with
/// min_value < -threshold, reported as (first tau, last tau) per run.
/// Endpoint resolution is therefore the scan cadence.
pub fn negativity_intervals(points: &[(f64, f64)], threshold: f64) -> Vec<(f64, f64)> {
    let mut intervals = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for &(tau, min) in points {
        match (&mut open, min < -threshold) {
            (None, true) => open = Some((tau, tau)),
            (Some((_, end)), true) => *end = tau,
            (Some(_), false) => intervals.extend(open.take()),
            (None, false) => {}
        }
    }
    intervals.extend(open);
    intervals
}

/// Largest pointwise distance between two fields on the same grid.
pub fn periodicity_check(field_a: &WignerField, field_b: &WignerField) -> Result<f64> {
    if field_a.grid != field_b.grid {
        return Err(KerrError::GridMismatch);
    }
    Ok(field_a
        .values
        .iter()
        .zip(&field_b.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Largest pointwise distance to the vacuum Wigner function (2/pi) e^{-2r^2},
/// sampled on the field's own grid.
pub fn vacuum_distance(field: &WignerField) -> f64 {
    let grid = field.grid;
    let mut sup: f64 = 0.0;
    for i in 0..grid.n_r {
        let r = grid.radius(i);
        let vac = TWO_OVER_PI * (-2.0 * r * r).exp();
        for j in 0..grid.n_phi {
            sup = sup.max((field.value(i, j) - vac).abs());
        }
    }
    sup
}

/// One same-sign connected region of a raster.
#[derive(Debug, Clone)]
struct SignComponent {
    cells: Vec<(usize, usize)>,
}

impl SignComponent {
    /// Elongation from the cell-index second moments: sqrt of the covariance
    /// eigenvalue ratio, with the 1/12 self-variance of a unit cell added so
    /// a single cell reads 1 instead of 0/0.
    fn aspect(&self) -> f64 {
        let n = self.cells.len() as f64;
        let (mx, my) = self
            .cells
            .iter()
            .fold((0.0, 0.0), |(x, y), &(ix, iy)| (x + ix as f64, y + iy as f64));
        let (mx, my) = (mx / n, my / n);
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for &(ix, iy) in &self.cells {
            let dx = ix as f64 - mx;
            let dy = iy as f64 - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        let (sxx, syy, sxy) = (sxx / n + 1.0 / 12.0, syy / n + 1.0 / 12.0, sxy / n);
        let half_tr = 0.5 * (sxx + syy);
        let disc = (half_tr * half_tr - (sxx * syy - sxy * sxy)).max(0.0).sqrt();
        let hi = half_tr + disc;
        let lo = (half_tr - disc).max(1e-12);
        (hi / lo).sqrt()
    }
}

/// 4-connected components of equal nonzero label; `label` returns 0 for
/// cells that belong to nothing.
fn labeled_components(resolution: usize, label: impl Fn(usize, usize) -> i8) -> Vec<SignComponent> {
    let idx = |ix: usize, iy: usize| iy * resolution + ix;
    let labels: Vec<i8> =
        (0..resolution * resolution).map(|k| label(k % resolution, k / resolution)).collect();
    let mut seen = vec![false; labels.len()];
    let mut components = Vec::new();
    let mut stack = Vec::new();

    for start in 0..labels.len() {
        if seen[start] || labels[start] == 0 {
            continue;
        }
        let sign = labels[start];
        let mut cells = Vec::new();
        seen[start] = true;
        stack.push((start % resolution, start / resolution));
        while let Some((ix, iy)) = stack.pop() {
            cells.push((ix, iy));
            let mut visit = |jx: usize, jy: usize| {
                let k = idx(jx, jy);
                if !seen[k] && labels[k] == sign {
                    seen[k] = true;
                    stack.push((jx, jy));
                }
            };
            if ix > 0 {
                visit(ix - 1, iy);
            }
            if ix + 1 < resolution {
                visit(ix + 1, iy);
            }
            if iy > 0 {
                visit(ix, iy - 1);
            }
            if iy + 1 < resolution {
                visit(ix, iy + 1);
            }
        }
        components.push(SignComponent { cells });
    }
    components
}

/// Classification of the interference texture inside a sub-Planck window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Dots,
    Ribbons,
    None,
}

/// What [`subplanck_metrics`] measured inside its window.
#[derive(Debug, Clone)]
pub struct SubPlanckReport {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub window_area: f64,
    /// connected same-sign regions above the noise floor and size cutoff
    pub sign_cell_count: usize,
    /// mean second-moment aspect ratio of the large components
    pub mean_aspect: f64,
    pub structure_kind: StructureKind,
}

/// Count and classify the alternating-sign regions of a raster whose window
/// respects the Heisenberg bound (area <= 1): many compact regions are
/// "dots", elongated ones "ribbons".  The raster is the window; evaluate it
/// over the region of interest.  The aspect-ratio split is a heuristic
/// quantification of those two qualitative textures.
pub fn subplanck_metrics(raster: &CartesianRaster) -> Result<SubPlanckReport> {
    let area = raster.window_area();
    if area > 1.0 {
        return Err(KerrError::WindowTooLarge { area });
    }
    let comps: Vec<SignComponent> = labeled_components(raster.resolution, |ix, iy| {
        let v = raster.value(ix, iy);
        if v > SIGN_THRESHOLD {
            1
        } else if v < -SIGN_THRESHOLD {
            -1
        } else {
            0
        }
    })
    .into_iter()
    .filter(|c| c.cells.len() >= MIN_COMPONENT_CELLS)
    .collect();

    let big: Vec<f64> =
        comps.iter().filter(|c| c.cells.len() >= ASPECT_MIN_CELLS).map(|c| c.aspect()).collect();
    let mean_aspect = if !big.is_empty() {
        big.iter().sum::<f64>() / big.len() as f64
    } else if !comps.is_empty() {
        comps.iter().map(|c| c.aspect()).sum::<f64>() / comps.len() as f64
    } else {
        1.0
    };
    // interference needs at least two regions; one blob is just a state
    let structure_kind = if comps.len() < 2 {
        StructureKind::None
    } else if mean_aspect <= RIBBON_ASPECT {
        StructureKind::Dots
    } else {
        StructureKind::Ribbons
    };

    Ok(SubPlanckReport {
        re_range: (raster.re_at(0), raster.re_at(raster.resolution - 1)),
        im_range: (raster.im_at(0), raster.im_at(raster.resolution - 1)),
        window_area: area,
        sign_cell_count: comps.len(),
        mean_aspect,
        structure_kind,
    })
}

/// Dominant coherent lobes of a fractional-revival raster.
#[derive(Debug, Clone)]
pub struct LobeReport {
    pub count: usize,
    /// phase-space centroid of each kept lobe
    pub centroids: Vec<(f64, f64)>,
}

/// Count the dominant Gaussian lobes on the circle |gamma| ~ lobe_radius.
///
/// Cells within the annulus ||gamma| - lobe_radius| <= 0.5 and above 30% of
/// the annulus maximum are grouped 4-connectedly; components below half the
/// largest one's cell count are fringe spill-over, not lobes, and are
/// dropped.  The annulus restriction keeps the central interference star of
/// a revival out of the count; the relative threshold makes the count
/// independent of the overall lobe height (which shrinks with lobe number).
pub fn dominant_lobe_count(raster: &CartesianRaster, lobe_radius: f64) -> LobeReport {
    let res = raster.resolution;
    let in_annulus = |ix: usize, iy: usize| {
        (raster.re_at(ix).hypot(raster.im_at(iy)) - lobe_radius).abs() <= 0.5
    };
    let mut peak = f64::NEG_INFINITY;
    for iy in 0..res {
        for ix in 0..res {
            if in_annulus(ix, iy) {
                peak = peak.max(raster.value(ix, iy));
            }
        }
    }
    if !(peak > 0.0) {
        return LobeReport { count: 0, centroids: Vec::new() };
    }

    let comps = labeled_components(res, |ix, iy| {
        (in_annulus(ix, iy) && raster.value(ix, iy) > 0.3 * peak) as i8
    });
    let largest = comps.iter().map(|c| c.cells.len()).max().unwrap_or(0);
    let mut kept: Vec<&SignComponent> =
        comps.iter().filter(|c| 2 * c.cells.len() >= largest).collect();
    // deterministic report order: by centroid angle
    let centroid = |c: &SignComponent| {
        let n = c.cells.len() as f64;
        let (re, im) = c.cells.iter().fold((0.0, 0.0), |(re, im), &(ix, iy)| {
            (re + raster.re_at(ix), im + raster.im_at(iy))
        });
        (re / n, im / n)
    };
    kept.sort_by(|a, b| {
        let (ar, ai) = centroid(a);
        let (br, bi) = centroid(b);
        ai.atan2(ar).total_cmp(&bi.atan2(br))
    });
    let centroids = kept.iter().map(|c| centroid(c)).collect::<Vec<_>>();
    LobeReport { count: kept.len(), centroids }
}
