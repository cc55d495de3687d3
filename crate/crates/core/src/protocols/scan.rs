//! Field-rotation scans: the axial technique, the electric sign probe and
//! the transverse trigonal scan.

use nalgebra::{Unit, Vector3};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::echo::echo_signal;
use super::sensitivity::freq_sensitivity;
use super::{stream_rng, NoiseModel, ProtocolError};
use crate::geometry::{field_to_nv, NVOrientation};
use crate::spin_model::{
    build_hamiltonian, eigen_frequencies, FieldConfig, Frame, SpinParams, SpinSpectrum,
};

/// Swept angle of a transverse scan; the other angle of the pair is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    /// Sweep φ_B with φ_E fixed.
    PhiB,
    /// Sweep φ_E with φ_B fixed.
    PhiE,
    /// Sweep γ with δ fixed (co-rotation).
    Gamma,
    /// Sweep δ with γ fixed (counter-rotation).
    Delta,
}

/// One sampled point of a transverse scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    /// Swept angle (rad) in the scan plane.
    pub angle_rad: f64,
    /// Estimated signed shift Δf_− (GHz) recovered from the echo signal.
    pub delta_f_minus_ghz: f64,
    /// Raw echo signal sample (population difference).
    pub signal: f64,
    /// Standard error of the signal sample; 0 for noiseless scans.
    pub sigma: f64,
}

/// Deterministic in-plane basis orthogonal to `z`: ê₁ from the projection
/// of x̂_lab (ŷ_lab when degenerate), ê₂ = ẑ × ê₁.
fn plane_basis(z: &Unit<Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if z.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = (seed - z.as_ref() * seed.dot(z)).normalize();
    let e2 = z.cross(&e1);
    (e1, e2)
}

/// Simulate noisy exact spectra for magnetic fields applied along a list
/// of lab directions; the direction maximizing |f_+ − f_−| identifies ±ẑ.
///
/// Each spectrum comes from exact diagonalization in the true defect frame
/// with Gaussian frequency noise δν/√(dwell/2) per transition when a noise
/// model is supplied. Point `i` uses random stream `task_base + i`.
pub fn axial_scan(
    params: &SpinParams,
    orient_true: &NVOrientation,
    b_gauss: f64,
    directions: &[Vector3<f64>],
    noise: Option<&NoiseModel>,
    dwell_s: f64,
    task_base: u64,
) -> Result<Vec<SpinSpectrum>, ProtocolError> {
    for d in directions {
        if (d.norm() - 1.0).abs() > 1e-9 {
            return Err(ProtocolError::InvalidConfig {
                detail: format!("scan direction {d:?} is not unit length"),
            });
        }
    }
    let sigma_ghz = noise
        .map(|n| freq_sensitivity(n) / (dwell_s / 2.0).sqrt() * 1e-9)
        .unwrap_or(0.0);
    directions
        .par_iter()
        .enumerate()
        .map(|(i, dir)| {
            let lab = FieldConfig::new(b_gauss * dir, Vector3::zeros(), Frame::Lab);
            let nv = field_to_nv(&lab, orient_true)?;
            let spectrum = eigen_frequencies(&build_hamiltonian(params, &nv)?)?;
            if sigma_ghz == 0.0 {
                return Ok(spectrum);
            }
            let mut rng = stream_rng(noise.unwrap().rng_seed, task_base + i as u64);
            let gauss = Normal::new(0.0, sigma_ghz).expect("positive sigma");
            Ok(SpinSpectrum::new(
                spectrum.f_minus + gauss.sample(&mut rng),
                spectrum.f_plus + gauss.sample(&mut rng),
            ))
        })
        .collect()
}

/// Averaging time needed for an `n_sigma` sign discrimination of the
/// axial Stark shift k_z·E at the model's frequency sensitivity.
pub fn required_sign_time_s(noise: &NoiseModel, params: &SpinParams, e_v_per_um: f64) -> f64 {
    let shift_hz = params.k_z_khz_um_per_v * 1e3 * e_v_per_um;
    (3.0 * freq_sensitivity(noise) / shift_hz).powi(2)
}

/// Probe the sign of the major symmetry axis with an axial electric field.
///
/// Estimates the common-mode shift (f_+ + f_−)/2 − D from a noisy exact
/// spectrum and returns +1 when the probe points along +ẑ (the
/// nitrogen→vacancy direction), −1 when anti-parallel. The probe is meant
/// to be within ~30° of ±ẑ. If the true shift is below 3σ for the
/// requested averaging time the sign is indeterminate.
pub fn electric_sign_probe(
    params: &SpinParams,
    orient_true: &NVOrientation,
    e_v_per_um: f64,
    probe_direction: Vector3<f64>,
    noise: Option<&NoiseModel>,
    avg_time_s: f64,
    task: u64,
) -> Result<i8, ProtocolError> {
    let dir = Unit::try_new(probe_direction, 1e-12).ok_or(ProtocolError::InvalidConfig {
        detail: "probe direction must be non-zero".to_string(),
    })?;
    let lab = FieldConfig::new(Vector3::zeros(), e_v_per_um * dir.into_inner(), Frame::Lab);
    let nv = field_to_nv(&lab, orient_true)?;
    let spectrum = eigen_frequencies(&build_hamiltonian(params, &nv)?)?;
    let true_shift = spectrum.center() - params.d_ghz;

    let measured = match noise {
        None => true_shift,
        Some(n) => {
            let sigma_ghz = freq_sensitivity(n) / avg_time_s.sqrt() * 1e-9;
            // relative guard so the exact 3-sigma averaging time is accepted
            if true_shift.abs() < 3.0 * sigma_ghz * (1.0 - 1e-6) {
                let required = (3.0 * freq_sensitivity(n) / (true_shift.abs() * 1e9)).powi(2);
                return Err(ProtocolError::IndeterminateSign {
                    required_time_s: required,
                });
            }
            let mut rng = stream_rng(n.rng_seed, task);
            true_shift
                + Normal::new(0.0, sigma_ghz)
                    .expect("positive sigma")
                    .sample(&mut rng)
        }
    };
    Ok(if measured >= 0.0 { 1 } else { -1 })
}

/// Cap the echo phase excursion so that sin Φ stays invertible; the scan
/// shortens τ when 8τk_⊥E₀ would exceed this.
const MAX_SCAN_PHASE_RAD: f64 = 1.2;

fn effective_tau_s(params: &SpinParams, tau_us: f64, e_perp: f64) -> f64 {
    let tau_s = tau_us * 1e-6;
    let k_e_hz = params.k_perp_khz_um_per_v * 1e3 * e_perp;
    if k_e_hz <= 0.0 {
        return tau_s;
    }
    tau_s.min(MAX_SCAN_PHASE_RAD / (8.0 * k_e_hz))
}

/// Sweep parallel transverse fields and sample the sign-sensitive shift.
///
/// Fields of fixed magnitudes are rotated in the plane orthogonal to the
/// true ẑ (the protocol assumes ẑ has been estimated first); the swept
/// angle is measured in a deterministic in-plane basis. Each point
/// accumulates an echo phase, reads it out through [`echo_signal`] (or
/// exactly, when no noise model is given) and inverts sin Φ back into a
/// Δf_− estimate. Point `i` draws from random stream `task_base + i`.
#[allow(clippy::too_many_arguments)]
pub fn transverse_scan(
    params: &SpinParams,
    orient_true: &NVOrientation,
    b_perp_gauss: f64,
    e_perp_v_per_um: f64,
    mode: ScanMode,
    fixed_angle_rad: f64,
    n_points: usize,
    tau_us: f64,
    noise: Option<&NoiseModel>,
    shots_per_point: u64,
    task_base: u64,
) -> Result<Vec<ScanPoint>, ProtocolError> {
    if n_points == 0 {
        return Err(ProtocolError::InvalidConfig {
            detail: "n_points must be positive".into(),
        });
    }
    let z_true = Unit::new_normalize(orient_true.z_axis());
    let (e1, e2) = plane_basis(&z_true);
    let tau_eff_s = effective_tau_s(params, tau_us, e_perp_v_per_um);

    (0..n_points)
        .into_par_iter()
        .map(|i| {
            let angle = i as f64 * std::f64::consts::TAU / n_points as f64;
            let (a_b, a_e) = match mode {
                ScanMode::PhiB => (angle, fixed_angle_rad),
                ScanMode::PhiE => (fixed_angle_rad, angle),
                ScanMode::Gamma => (angle + fixed_angle_rad, angle - fixed_angle_rad),
                ScanMode::Delta => (fixed_angle_rad + angle, fixed_angle_rad - angle),
            };
            let b_dir = a_b.cos() * e1 + a_b.sin() * e2;
            let e_dir = a_e.cos() * e1 + a_e.sin() * e2;
            let lab = FieldConfig::new(b_perp_gauss * b_dir, e_perp_v_per_um * e_dir, Frame::Lab);
            let nv = field_to_nv(&lab, orient_true)?;
            // sign-sensitive shift from the defect-frame azimuths
            let kp = params.stark_perp_ghz_per_v_um();
            let delta_f_true = kp * nv.e_perp() * (2.0 * nv.phi_b() + nv.phi_e()).cos();
            let phase = 8.0 * tau_eff_s * delta_f_true * 1e9;

            let (signal, sigma) = match noise {
                None => (phase.sin(), 0.0),
                Some(n) => {
                    let mut rng = stream_rng(n.rng_seed, task_base + i as u64);
                    let s = echo_signal(phase, tau_eff_s * 1e6, n, shots_per_point, &mut rng);
                    (s.value, s.std_error)
                }
            };
            let delta_f_est = signal.clamp(-1.0, 1.0).asin() / (8.0 * tau_eff_s) * 1e-9;
            Ok(ScanPoint {
                angle_rad: angle,
                delta_f_minus_ghz: delta_f_est,
                signal,
                sigma,
            })
        })
        .collect()
}

/// Result of a least-squares fit of A·cos(3γ − 3γ₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrigonalFit {
    /// Pattern phase reduced to [0, 2π/3): the minor-axis azimuth.
    pub gamma0_rad: f64,
    /// Amplitude, kept positive by shifting γ₀.
    pub amplitude: f64,
    /// Root-mean-square fit residual.
    pub residual_rms: f64,
}

/// Fit A·cos(3γ − 3γ₀) to (γ, signal) samples.
///
/// Needs at least 9 points spanning at least 240°. The fit is linear in
/// (A cos 3γ₀, A sin 3γ₀); γ₀ is returned as the C₃ representative in
/// [0°, 120°). Amplitudes below 3× the rms residual are reported as no
/// signal.
pub fn fit_trigonal(points: &[(f64, f64)]) -> Result<TrigonalFit, ProtocolError> {
    let span = points
        .iter()
        .map(|p| p.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(a), hi.max(a))
        });
    let span_rad = span.1 - span.0;
    if points.len() < 9 || span_rad < 240f64.to_radians() {
        return Err(ProtocolError::ScanTooSparse {
            points: points.len(),
            span_deg: span_rad.to_degrees(),
        });
    }
    // normal equations for y = a cos(3g) + b sin(3g)
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(g, y) in points {
        let (s, c) = (3.0 * g).sin_cos();
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += y * c;
        sys += y * s;
    }
    let det = scc * sss - scs * scs;
    if det.abs() < 1e-12 {
        return Err(ProtocolError::ScanTooSparse {
            points: points.len(),
            span_deg: span_rad.to_degrees(),
        });
    }
    let a = (syc * sss - sys * scs) / det;
    let b = (sys * scc - syc * scs) / det;
    let amplitude = a.hypot(b);
    let gamma0 = (b.atan2(a) / 3.0).rem_euclid(2.0 * std::f64::consts::FRAC_PI_3);

    let residual_rms = (points
        .iter()
        .map(|&(g, y)| (y - a * (3.0 * g).cos() - b * (3.0 * g).sin()).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    if amplitude < 3.0 * residual_rms {
        return Err(ProtocolError::NoSignal {
            amplitude,
            residual: residual_rms,
        });
    }
    Ok(TrigonalFit {
        gamma0_rad: gamma0,
        amplitude,
        residual_rms,
    })
}
