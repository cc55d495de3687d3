//! Simulated measurement protocols and their noise model.
//!
//! The protocols close the loop between the exact spin model and the
//! orientation geometry:
//!
//! - axial technique: [`axial_scan`] locates the major symmetry axis up to
//!   sign, [`electric_sign_probe`] resolves the sign from the common-mode
//!   Stark shift;
//! - transverse technique: [`transverse_scan`] sweeps parallel transverse
//!   fields and samples the sign-sensitive shift through the spin-echo
//!   model in [`echo`], [`fit_trigonal`] extracts the minor-axis azimuth
//!   from the threefold pattern;
//! - tracking: [`estimate_z`]/[`estimate_x`] implement the two-point
//!   update of each axis and [`track_sequence`] chains them with
//!   axis-angle reconstruction between snapshots.
//!
//! Randomness is reproducible: every sampling operation derives an
//! independent ChaCha stream from `(rng_seed, task index)`, so scan points
//! and Monte-Carlo repeats can run in parallel and merge by index without
//! affecting the output.

mod echo;
mod estimate;
mod scan;
mod sensitivity;
mod track;

pub use echo::{echo_phase, echo_signal, SignalSample};
pub use estimate::{estimate_x, estimate_z, intersect_cones, EstimateBudget};
pub use scan::{
    axial_scan, electric_sign_probe, fit_trigonal, required_sign_time_s, transverse_scan, ScanMode,
    ScanPoint, TrigonalFit,
};
pub use sensitivity::{angle_sensitivity, freq_sensitivity};
pub use track::{track_sequence, TrackBudget, TrackStep};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic_spectra::SpectraError;
use crate::geometry::{GeometryError, NVOrientation};
use crate::spin_model::SpinModelError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid protocol configuration: {detail}")]
    InvalidConfig { detail: String },
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    SpinModel(#[from] SpinModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("common-mode shift below the noise floor; need ≥ {required_time_s:.3} s of averaging")]
    IndeterminateSign { required_time_s: f64 },
    #[error("measurement cones do not intersect (deficit {deficit:e})")]
    ConesDoNotIntersect { deficit: f64 },
    #[error("no trigonal signal: amplitude {amplitude:e} below 3x residual {residual:e}")]
    NoSignal { amplitude: f64, residual: f64 },
    #[error("scan too sparse for a trigonal fit: {points} points spanning {span_deg:.1} deg")]
    ScanTooSparse { points: usize, span_deg: f64 },
}

/// Spin-echo sequence parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoConfig {
    /// Inter-pulse delay τ (µs); the electric field is modulated over 2τ.
    pub tau_us: f64,
    /// Electric field amplitude E₀ (V/µm).
    pub e0_v_per_um: f64,
    /// Combined rotation angle γ = (φ_B + φ_E)/2 (rad).
    pub gamma_comb: f64,
    /// Combined rotation angle δ = (φ_B − φ_E)/2 (rad).
    pub delta_comb: f64,
}

impl EchoConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.tau_us.is_nan() || self.tau_us <= 0.0 {
            return Err(ProtocolError::InvalidConfig {
                detail: format!("tau must be positive, got {} us", self.tau_us),
            });
        }
        if self.e0_v_per_um.is_nan() || self.e0_v_per_um < 0.0 {
            return Err(ProtocolError::InvalidConfig {
                detail: format!("E0 must be non-negative, got {}", self.e0_v_per_um),
            });
        }
        Ok(())
    }
}

/// Photon-shot-noise model for ODMR readout.
///
/// `c_factor` is the empirical sensitivity constant in
/// δν = C·T_c^(−1/2); `count_rate_kcps` and `contrast` drive the per-shot
/// photon statistics of [`echo_signal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Average fluorescence photon count rate (kcounts/s).
    pub count_rate_kcps: f64,
    /// ODMR contrast (fraction of the bright rate).
    pub contrast: f64,
    /// Dimensionless sensitivity constant C.
    pub c_factor: f64,
    /// Coherence time T_c (ms).
    pub t_c_ms: f64,
    pub rng_seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            count_rate_kcps: 200.0,
            contrast: 0.3,
            c_factor: 12.0,
            t_c_ms: 1.0,
            rng_seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let ok = self.count_rate_kcps > 0.0
            && self.contrast > 0.0
            && self.contrast <= 1.0
            && self.c_factor > 0.0
            && self.t_c_ms > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ProtocolError::InvalidConfig {
                detail: format!("noise model out of range: {self:?}"),
            })
        }
    }
}

/// Orientation estimate with its statistical uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientationEstimate {
    pub orientation: NVOrientation,
    /// Polar uncertainty of the ẑ estimate (rad).
    pub sigma_theta_rad: f64,
    /// Azimuthal uncertainty of the x̂ estimate (rad).
    pub sigma_gamma_rad: f64,
    pub timestamp_s: f64,
    /// ODMR pulse sequences spent on this estimate.
    pub n_sequences: u64,
}

/// Independent deterministic random stream for task `task` under `seed`.
pub fn stream_rng(seed: u64, task: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}
