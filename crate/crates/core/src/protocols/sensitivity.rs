//! Frequency and angle sensitivities of the ODMR readout.

use super::{NoiseModel, ProtocolError};
use crate::analytic_spectra::{shift_slope, Readout, SlopeTarget};
use crate::spin_model::SpinParams;

/// Shot-noise-limited frequency sensitivity δν = C·T_c^(−1/2) (Hz/√Hz).
pub fn freq_sensitivity(noise: &NoiseModel) -> f64 {
    noise.c_factor / (noise.t_c_ms * 1e-3).sqrt()
}

/// Angle sensitivity δν/|slope| at a working point (deg/√Hz).
///
/// The slope is the analytic derivative of the readout observable (Δf_−
/// for sq, f_+ − f_− for dq) with respect to the working-point angle; a
/// vanishing slope propagates as a useless-working-point error.
pub fn angle_sensitivity(
    params: &SpinParams,
    noise: &NoiseModel,
    mode: Readout,
    target: SlopeTarget,
) -> Result<f64, ProtocolError> {
    let slope_hz_per_rad = shift_slope(params, target, mode)? * 1e9;
    let rad_per_sqrt_hz = freq_sensitivity(noise) / slope_hz_per_rad.abs();
    Ok(rad_per_sqrt_hz.to_degrees())
}
