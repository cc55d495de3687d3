//! Three-axis rotation tracking: repeated z/x estimation with axis-angle
//! reconstruction between consecutive snapshots.

use serde::Serialize;

use super::estimate::{estimate_x, estimate_z, EstimateBudget};
use super::{NoiseModel, OrientationEstimate, ProtocolError};
use crate::analytic_spectra::Readout;
use crate::geometry::{reconstruct_rotation, GeometryError, NVOrientation, RotationStep};
use crate::spin_model::SpinParams;

/// Per-step budget and field settings of the tracking loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBudget {
    /// Total time per three-axis estimate (s).
    pub t_per_estimate_s: f64,
    /// Fraction of the budget spent on the z estimate; the x estimate is
    /// far less sensitive, so most of the time goes there.
    pub z_time_fraction: f64,
    /// Magnetic field magnitude for the z cones (Gauss).
    pub b_gauss: f64,
    /// Parallel transverse field magnitudes for the x estimate.
    pub b_perp_gauss: f64,
    pub e_perp_v_per_um: f64,
    pub tau_us: f64,
    pub mode: Readout,
}

impl Default for TrackBudget {
    fn default() -> Self {
        Self {
            t_per_estimate_s: 1.0,
            z_time_fraction: 0.05,
            b_gauss: 100.0,
            b_perp_gauss: 100.0,
            e_perp_v_per_um: 1.0,
            tau_us: 70.0,
            mode: Readout::Dq,
        }
    }
}

/// Outcome of one tracking interval.
#[derive(Debug, Clone, Serialize)]
pub struct TrackStep {
    pub index: usize,
    pub timestamp_s: f64,
    /// The three-axis estimate, absent when a sub-measurement failed.
    pub estimate: Option<OrientationEstimate>,
    /// Failure description for gap steps.
    pub failure: Option<String>,
    /// Rotation reconstructed from the previous estimate, when defined.
    pub rotation: Option<RotationStep>,
    /// The reconstruction degenerated (no appreciable rotation).
    pub rotation_degenerate: bool,
    /// Frame misalignment of the estimate against the true orientation (rad).
    pub frame_error_rad: Option<f64>,
}

/// Track a trajectory of true orientations.
///
/// Each snapshot runs a z estimate followed by an x estimate, seeded by
/// the previous estimate (the first snapshot's expectation is the first
/// true orientation, assumed known at start-up). Rotations are
/// reconstructed between consecutive estimates; failed estimates produce
/// gap steps instead of aborting the run. Inter-snapshot rotations must
/// stay small enough (≲ 20°) for the working points to remain valid.
pub fn track_sequence(
    params: &SpinParams,
    true_trajectory: &[NVOrientation],
    budget: &TrackBudget,
    noise: Option<&NoiseModel>,
) -> Result<Vec<TrackStep>, ProtocolError> {
    if true_trajectory.is_empty() {
        return Err(ProtocolError::InvalidConfig {
            detail: "empty trajectory".to_string(),
        });
    }
    if !(budget.z_time_fraction > 0.0 && budget.z_time_fraction < 1.0) {
        return Err(ProtocolError::InvalidConfig {
            detail: format!("z_time_fraction {} outside (0, 1)", budget.z_time_fraction),
        });
    }
    let z_budget = EstimateBudget {
        total_time_s: budget.t_per_estimate_s * budget.z_time_fraction,
        tau_us: budget.tau_us,
        mode: budget.mode,
    };
    let x_budget = EstimateBudget {
        total_time_s: budget.t_per_estimate_s * (1.0 - budget.z_time_fraction),
        tau_us: budget.tau_us,
        mode: budget.mode,
    };

    let mut steps = Vec::with_capacity(true_trajectory.len());
    let mut previous = true_trajectory[0];
    let mut prev_estimate: Option<NVOrientation> = None;

    for (i, truth) in true_trajectory.iter().enumerate() {
        let timestamp = i as f64 * budget.t_per_estimate_s;
        // streams: 8 ids reserved per snapshot (2 for z, up to 7 for x)
        let task = 16 * i as u64;
        let attempt = (|| -> Result<OrientationEstimate, ProtocolError> {
            let z_est = estimate_z(
                params,
                truth,
                &previous,
                budget.b_gauss,
                &z_budget,
                noise,
                timestamp,
                task,
            )?;
            let mut full = estimate_x(
                params,
                truth,
                &z_est.orientation.z_axis(),
                &previous.x_axis(),
                budget.b_perp_gauss,
                budget.e_perp_v_per_um,
                &x_budget,
                noise,
                timestamp,
                task + 2,
            )?;
            full.sigma_theta_rad = z_est.sigma_theta_rad;
            full.n_sequences += z_est.n_sequences;
            Ok(full)
        })();

        let step = match attempt {
            Ok(estimate) => {
                let (rotation, degenerate) = match prev_estimate {
                    None => (None, false),
                    Some(ref prev_est) => {
                        match reconstruct_rotation(prev_est, &estimate.orientation) {
                            Ok(step) => (Some(step), false),
                            // cross-product estimator degenerate; the triad
                            // fallback still resolves genuine rotations, only a
                            // missing fallback means "no appreciable rotation"
                            Err(GeometryError::DegenerateStep {
                                fallback: Some(step),
                            }) => (Some(step), false),
                            Err(GeometryError::DegenerateStep { fallback: None }) => (None, true),
                            Err(e) => return Err(ProtocolError::Geometry(e)),
                        }
                    }
                };
                previous = estimate.orientation;
                prev_estimate = Some(estimate.orientation);
                TrackStep {
                    index: i,
                    timestamp_s: timestamp,
                    frame_error_rad: Some(estimate.orientation.frame_angle_to(truth)),
                    estimate: Some(estimate),
                    failure: None,
                    rotation,
                    rotation_degenerate: degenerate,
                }
            }
            Err(e) => TrackStep {
                index: i,
                timestamp_s: timestamp,
                estimate: None,
                failure: Some(e.to_string()),
                rotation: None,
                rotation_degenerate: false,
                frame_error_rad: None,
            },
        };
        steps.push(step);
    }
    Ok(steps)
}
