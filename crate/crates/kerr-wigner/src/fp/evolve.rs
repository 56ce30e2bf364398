//! The implicit evolution loop: factor the system once, back-solve each
//! step against a refreshed right-hand side, audit normalization, record
//! snapshots.

use crate::band::{band_lu_decompose, band_matvec, band_solve_in_place};
use crate::error::{KerrError, Result};
use crate::grid::{coherent_wigner_init, phase_space_integral, SimulationConfig, TimeScheme, WignerField};

use super::assemble::{
    apply_boundary_conditions, assemble_operator, assemble_system_matrix, boundary_rhs, IndexMap,
};

/// Snapshot times must land on a step, up to this absolute slack.
const STEP_ALIGN_TOL: f64 = 1e-9;

/// Per-step sanity record.
#[derive(Debug, Clone, Copy)]
pub struct StepAudit {
    pub tau: f64,
    /// phase-space integral of W; should stay at 1
    pub integral: f64,
    pub min_value: f64,
    /// fraction of grid nodes with W < 0
    pub negative_fraction: f64,
}

/// Everything one run produces: the requested snapshots, in request order,
/// and the audit trail (entry 0 describes the initial state).
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub snapshots: Vec<WignerField>,
    pub audits: Vec<StepAudit>,
}

/// Evolve the coherent-state Wigner function of `config.alpha` to `tau_end`.
pub fn evolve(
    config: &SimulationConfig,
    tau_end: f64,
    snapshot_taus: &[f64],
) -> Result<EvolutionResult> {
    evolve_field(config, coherent_wigner_init(config.alpha, config.grid), tau_end, snapshot_taus)
}

/// Evolve an arbitrary initial field.  The solver is linear in the field, so
/// superpositions evolve to the superposition of the individual evolutions
/// (up to the affine center-value feed, which is negligible whenever
/// exp(-2|alpha|^2) is).
pub fn evolve_field(
    config: &SimulationConfig,
    initial: WignerField,
    tau_end: f64,
    snapshot_taus: &[f64],
) -> Result<EvolutionResult> {
    config.validate()?;
    if initial.grid != config.grid {
        return Err(KerrError::GridMismatch);
    }
    let n_steps = step_index(tau_end, config.dtau, "tau_end")?;
    if n_steps == 0 {
        return Err(KerrError::InvalidConfig(format!("tau_end {tau_end} must be > 0")));
    }
    let snap_steps: Vec<usize> = snapshot_taus
        .iter()
        .map(|&t| {
            let s = step_index(t, config.dtau, "snapshot tau")?;
            if s > n_steps {
                return Err(KerrError::InvalidConfig(format!(
                    "snapshot tau {t} lies beyond tau_end {tau_end}"
                )));
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;

    let op = assemble_operator(config);
    let map = IndexMap::new(config.grid);
    let taps = [op.center_tap_weight(0), op.center_tap_weight(1)];

    // one factorization serves every step; under Crank-Nicolson the explicit
    // half is kept unfactored for per-step matvecs
    let implicit_dtau = match config.scheme {
        TimeScheme::BackwardEuler => config.dtau,
        TimeScheme::CrankNicolson => 0.5 * config.dtau,
    };
    let mut system = assemble_system_matrix(&op, implicit_dtau, &map)?;
    let explicit = match config.scheme {
        TimeScheme::BackwardEuler => None,
        TimeScheme::CrankNicolson => Some(assemble_system_matrix(&op, -0.5 * config.dtau, &map)?),
    };
    {
        let mut scratch = vec![0.0; map.len()];
        apply_boundary_conditions(&mut system, &mut scratch, config, config.dtau);
    }
    let factors = band_lu_decompose(system)?;

    let mut field = initial;
    field.tau = 0.0;
    let mut snapshots: Vec<Option<WignerField>> = vec![None; snapshot_taus.len()];
    let mut audits = Vec::with_capacity(n_steps + 1);
    record_snapshots(&mut snapshots, &snap_steps, snapshot_taus, 0, &field);
    audit_step(&mut audits, &field, config)?;

    for step in 1..=n_steps {
        let tau_next = step as f64 * config.dtau;
        let mut rhs = match &explicit {
            None => field.values.clone(),
            Some(e) => band_matvec(e, &field.values)?,
        };
        boundary_rhs(&mut rhs, config, &taps, tau_next);
        band_solve_in_place(&factors, &mut rhs)?;
        field.values = rhs;
        field.tau = tau_next;
        record_snapshots(&mut snapshots, &snap_steps, snapshot_taus, step, &field);
        audit_step(&mut audits, &field, config)?;
    }

    let snapshots = snapshots
        .into_iter()
        .map(|s| s.expect("validated snapshot steps are always reached"))
        .collect();
    Ok(EvolutionResult { snapshots, audits })
}

/// Map a time onto its step index, rejecting off-grid values.
fn step_index(tau: f64, dtau: f64, what: &str) -> Result<usize> {
    let n = (tau / dtau).round();
    if !(n >= 0.0) || (tau - n * dtau).abs() > STEP_ALIGN_TOL {
        return Err(KerrError::InvalidConfig(format!(
            "{what} {tau} is not a non-negative multiple of dtau {dtau}"
        )));
    }
    Ok(n as usize)
}

fn record_snapshots(
    snapshots: &mut [Option<WignerField>],
    snap_steps: &[usize],
    snapshot_taus: &[f64],
    step: usize,
    field: &WignerField,
) {
    for (idx, &s) in snap_steps.iter().enumerate() {
        if s == step {
            let mut snap = field.clone();
            // report the requested time, not its step-quantized neighbor
            snap.tau = snapshot_taus[idx];
            snapshots[idx] = Some(snap);
        }
    }
}

fn audit_step(audits: &mut Vec<StepAudit>, field: &WignerField, config: &SimulationConfig) -> Result<()> {
    let negatives = field.values.iter().filter(|&&v| v < 0.0).count();
    let audit = StepAudit {
        tau: field.tau,
        integral: phase_space_integral(field),
        min_value: field.min_value(),
        negative_fraction: negatives as f64 / field.values.len() as f64,
    };
    audits.push(audit);
    if (audit.integral - 1.0).abs() > config.drift_tolerance {
        return Err(KerrError::NormalizationDrift {
            tau: audit.tau,
            integral: audit.integral,
            tolerance: config.drift_tolerance,
        });
    }
    Ok(())
}
