//! Two-point estimation of the ẑ and x̂ axes.
//!
//! ẑ: two magnetic fields at ~60° from the expected axis with azimuths 90°
//! apart; each measured spectrum is inverted into a field-to-axis angle on
//! the exact spin model (bisection, seeded by the closed form), and the
//! axis is the cone-cone intersection closest to the expectation.
//!
//! x̂: parallel transverse fields at γ = ±30° about the expected minor
//! axis; the two signed echo shifts sit on the steepest slopes of the
//! cos 3γ pattern and invert to the azimuth through an arcsine. When the
//! expectation is off by close to 30° the working points degenerate and a
//! five-point mini-scan takes over.

use nalgebra::{Rotation3, Unit, Vector3};
use rand_distr::{Distribution, Normal};

use super::sensitivity::{angle_sensitivity, freq_sensitivity};
use super::{stream_rng, NoiseModel, OrientationEstimate, ProtocolError};
use crate::analytic_spectra::{Readout, SlopeTarget};
use crate::geometry::{field_to_nv, NVOrientation};
use crate::spin_model::{build_hamiltonian, eigen_frequencies, FieldConfig, Frame, SpinParams};

/// Time budget and working-point parameters for one axis estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateBudget {
    /// Total averaging time for the estimate (s), split over the two
    /// measurements.
    pub total_time_s: f64,
    /// Echo delay used for x estimates and sequence bookkeeping (µs).
    pub tau_us: f64,
    pub mode: Readout,
}

impl EstimateBudget {
    fn validate(&self) -> Result<(), ProtocolError> {
        if self.total_time_s > 0.0 && self.tau_us > 0.0 {
            Ok(())
        } else {
            Err(ProtocolError::InvalidConfig {
                detail: format!("non-positive estimate budget: {self:?}"),
            })
        }
    }
}

/// Intersect two cones {v : v·a = cos θ} on the unit sphere.
///
/// Returns the two intersection directions; they coincide for tangent
/// cones. Inconsistent half-angles (no intersection beyond `1e-9` in the
/// squared out-of-plane coefficient) and near-parallel axes are errors.
pub fn intersect_cones(
    axis1: &Unit<Vector3<f64>>,
    cos_theta1: f64,
    axis2: &Unit<Vector3<f64>>,
    cos_theta2: f64,
) -> Result<(Vector3<f64>, Vector3<f64>), ProtocolError> {
    let c = axis1.dot(axis2);
    let denom = 1.0 - c * c;
    if denom < 1e-12 {
        return Err(ProtocolError::InvalidConfig {
            detail: "cone axes are (anti-)parallel".to_string(),
        });
    }
    let alpha = (cos_theta1 - c * cos_theta2) / denom;
    let beta = (cos_theta2 - c * cos_theta1) / denom;
    let in_plane = alpha * axis1.as_ref() + beta * axis2.as_ref();
    let lambda2 = 1.0 - (alpha * alpha + beta * beta + 2.0 * alpha * beta * c);
    if lambda2 < -1e-9 {
        return Err(ProtocolError::ConesDoNotIntersect { deficit: -lambda2 });
    }
    let lambda = (lambda2.max(0.0) / denom).sqrt();
    let out_of_plane = axis1.cross(axis2) * lambda;
    Ok((in_plane + out_of_plane, in_plane - out_of_plane))
}

/// Exact-model observable for a magnetic field at angle θ from ẑ.
fn magnetic_observable(
    params: &SpinParams,
    b_gauss: f64,
    theta: f64,
    mode: Readout,
) -> Result<f64, ProtocolError> {
    let fields = FieldConfig::new(
        Vector3::new(b_gauss * theta.sin(), 0.0, b_gauss * theta.cos()),
        Vector3::zeros(),
        Frame::Nv,
    );
    let s = eigen_frequencies(&build_hamiltonian(params, &fields)?)?;
    Ok(match mode {
        Readout::Dq => s.splitting(),
        Readout::Sq => s.f_minus - params.d_ghz,
    })
}

/// Invert the observable back into θ by bisection on the exact model.
fn invert_theta(
    params: &SpinParams,
    b_gauss: f64,
    observed: f64,
    mode: Readout,
) -> Result<f64, ProtocolError> {
    let lo = 0.2f64.to_radians();
    let hi = 89.8f64.to_radians();
    let f_lo = magnetic_observable(params, b_gauss, lo, mode)?;
    let f_hi = magnetic_observable(params, b_gauss, hi, mode)?;
    // dq splitting decreases with theta, sq shift increases; clamp the
    // noisy observation into the representable range
    let (mut a, mut b, target) = if f_lo > f_hi {
        (lo, hi, observed.clamp(f_hi, f_lo))
    } else {
        (lo, hi, observed.clamp(f_lo, f_hi))
    };
    let increasing = f_hi > f_lo;
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let val = magnetic_observable(params, b_gauss, mid, mode)?;
        let go_right = if increasing {
            val < target
        } else {
            val > target
        };
        if go_right {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Angle of the probe fields from the expected ẑ.
const Z_PROBE_THETA: f64 = std::f64::consts::FRAC_PI_3;

/// Estimate the major symmetry axis from two magnetic-cone measurements.
///
/// Noiseless estimates are exact to solver tolerance; with a noise model
/// each observable is blurred by δν/√(t/2) and the returned σ_θ combines
/// the per-cone angle sensitivities. Random streams `task` and `task+1`
/// are consumed.
#[allow(clippy::too_many_arguments)]
pub fn estimate_z(
    params: &SpinParams,
    orient_true: &NVOrientation,
    prev: &NVOrientation,
    b_gauss: f64,
    budget: &EstimateBudget,
    noise: Option<&NoiseModel>,
    timestamp_s: f64,
    task: u64,
) -> Result<OrientationEstimate, ProtocolError> {
    budget.validate()?;
    let time_each = budget.total_time_s / 2.0;
    let sigma_ghz = noise
        .map(|n| freq_sensitivity(n) / time_each.sqrt() * 1e-9)
        .unwrap_or(0.0);

    let z_prev = prev.z_axis();
    let x_prev = prev.x_axis();
    let y_prev = prev.y_axis();

    let mut cones = Vec::with_capacity(2);
    for (i, phi) in [0.0, std::f64::consts::FRAC_PI_2].iter().enumerate() {
        let dir = Z_PROBE_THETA.cos() * z_prev
            + Z_PROBE_THETA.sin() * (phi.cos() * x_prev + phi.sin() * y_prev);
        let axis = Unit::new_normalize(dir);
        let lab = FieldConfig::new(b_gauss * axis.into_inner(), Vector3::zeros(), Frame::Lab);
        let nv = field_to_nv(&lab, orient_true)?;
        let spectrum = eigen_frequencies(&build_hamiltonian(params, &nv)?)?;
        let mut observed = match budget.mode {
            Readout::Dq => spectrum.splitting(),
            Readout::Sq => spectrum.f_minus - params.d_ghz,
        };
        if sigma_ghz > 0.0 {
            let n = noise.unwrap();
            let mut rng = stream_rng(n.rng_seed, task + i as u64);
            observed += Normal::new(0.0, sigma_ghz)
                .expect("positive sigma")
                .sample(&mut rng);
        }
        let theta = invert_theta(params, b_gauss, observed, budget.mode)?;
        cones.push((axis, theta));
    }

    let (v1, v2) = intersect_cones(&cones[0].0, cones[0].1.cos(), &cones[1].0, cones[1].1.cos())?;
    let pick = if v1.dot(&z_prev) >= v2.dot(&z_prev) {
        v1
    } else {
        v2
    };
    let z_new = Unit::new_normalize(pick);

    let orientation = NVOrientation::orthonormalized(x_prev, z_new.into_inner())?;
    let sigma_theta = match noise {
        None => 0.0,
        Some(n) => {
            let per_cone = angle_sensitivity(
                params,
                n,
                budget.mode,
                SlopeTarget::ThetaB {
                    b_gauss,
                    theta_b: Z_PROBE_THETA,
                },
            )?
            .to_radians()
                / time_each.sqrt();
            (2.0 * per_cone * per_cone).sqrt()
        }
    };
    let n_sequences = noise
        .map(|n| (budget.total_time_s / (n.t_c_ms * 1e-3)).floor() as u64)
        .unwrap_or(0);
    Ok(OrientationEstimate {
        orientation,
        sigma_theta_rad: sigma_theta,
        sigma_gamma_rad: 0.0,
        timestamp_s,
        n_sequences,
    })
}

/// γ offsets of the two x-probe measurements from the expected minor axis.
const X_PROBE_GAMMA: f64 = std::f64::consts::FRAC_PI_6;
/// |sin 3ψ| beyond which the two-point inversion is considered degenerate
/// and the mini-scan fallback runs.
const TWO_POINT_SATURATION: f64 = 0.95;

/// Signed pattern value measured with parallel transverse fields along
/// `dir` (lab frame), for the readout mode's observable.
fn pattern_value(
    params: &SpinParams,
    orient_true: &NVOrientation,
    dir: &Vector3<f64>,
    b_perp: f64,
    e_perp: f64,
    mode: Readout,
) -> Result<f64, ProtocolError> {
    let lab = FieldConfig::new(b_perp * dir, e_perp * dir, Frame::Lab);
    let nv = field_to_nv(&lab, orient_true)?;
    let kp = params.stark_perp_ghz_per_v_um();
    let minus = kp * nv.e_perp() * (2.0 * nv.phi_b() + nv.phi_e()).cos();
    Ok(match mode {
        Readout::Sq => minus,
        Readout::Dq => -2.0 * minus,
    })
}

/// Estimate the minor axis from signed echo measurements at γ = ±30°.
///
/// `prev_x` is re-orthogonalized against `z_est` internally. The result is
/// the C₃ representative nearest the expectation. Consumes random streams
/// `task .. task+5` (two-point inversion uses two, the mini-scan five).
#[allow(clippy::too_many_arguments)]
pub fn estimate_x(
    params: &SpinParams,
    orient_true: &NVOrientation,
    z_est: &Vector3<f64>,
    prev_x: &Vector3<f64>,
    b_perp_gauss: f64,
    e_perp_v_per_um: f64,
    budget: &EstimateBudget,
    noise: Option<&NoiseModel>,
    timestamp_s: f64,
    task: u64,
) -> Result<OrientationEstimate, ProtocolError> {
    budget.validate()?;
    if e_perp_v_per_um.is_nan() || e_perp_v_per_um <= 0.0 {
        return Err(ProtocolError::InvalidConfig {
            detail: "x estimation requires a transverse electric field".to_string(),
        });
    }
    let frame = NVOrientation::orthonormalized(*prev_x, *z_est)?;
    let (x_ref, y_ref, z_unit) = (frame.x_axis(), frame.y_axis(), frame.z_axis());
    let kp = params.stark_perp_ghz_per_v_um();
    let amplitude = match budget.mode {
        Readout::Sq => kp * e_perp_v_per_um,
        Readout::Dq => -2.0 * kp * e_perp_v_per_um,
    };

    let probe = |gamma_lab: f64| gamma_lab.cos() * x_ref + gamma_lab.sin() * y_ref;
    let measure = |gamma_lab: f64, time_s: f64, stream: u64| -> Result<f64, ProtocolError> {
        let mut y = pattern_value(
            params,
            orient_true,
            &probe(gamma_lab),
            b_perp_gauss,
            e_perp_v_per_um,
            budget.mode,
        )?;
        if let Some(n) = noise {
            let sigma_ghz = freq_sensitivity(n) / time_s.sqrt() * 1e-9;
            let mut rng = stream_rng(n.rng_seed, stream);
            y += Normal::new(0.0, sigma_ghz)
                .expect("positive sigma")
                .sample(&mut rng);
        }
        Ok(y)
    };

    let half = budget.total_time_s / 2.0;
    let y_plus = measure(X_PROBE_GAMMA, half, task)?;
    let y_minus = measure(-X_PROBE_GAMMA, half, task + 1)?;
    // y(±30°) = ∓ A sin(3ψ) for the f_- pattern; solve for ψ
    let m = ((y_plus - y_minus) / (2.0 * amplitude)).clamp(-1.0, 1.0);

    let psi = if m.abs() < TWO_POINT_SATURATION {
        m.asin() / 3.0
    } else {
        // expectation off by ≈30°: both slopes degenerate, run a mini-scan
        let fifth = budget.total_time_s / 5.0;
        let angles = [-48.0, -24.0, 0.0, 24.0, 48.0].map(|d: f64| d.to_radians());
        let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (j, g) in angles.iter().enumerate() {
            let y = measure(*g, fifth, task + 2 + j as u64)? / amplitude;
            let (s, c) = (3.0 * g).sin_cos();
            scc += c * c;
            sss += s * s;
            scs += c * s;
            syc += y * c;
            sys += y * s;
        }
        let det = scc * sss - scs * scs;
        let a = (syc * sss - sys * scs) / det;
        let b = (sys * scc - syc * scs) / det;
        b.atan2(a) / 3.0
    };

    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(z_unit), psi);
    let orientation = NVOrientation::orthonormalized(rot * x_ref, z_unit)?;
    let sigma_gamma = match noise {
        None => 0.0,
        Some(n) => {
            angle_sensitivity(
                params,
                n,
                budget.mode,
                SlopeTarget::GammaComb {
                    e_perp: e_perp_v_per_um,
                    gamma_comb: X_PROBE_GAMMA,
                    delta_comb: 0.0,
                },
            )?
            .to_radians()
                / budget.total_time_s.sqrt()
        }
    };
    let n_sequences = (budget.total_time_s / (2.0 * budget.tau_us * 1e-6)).floor() as u64;
    Ok(OrientationEstimate {
        orientation,
        sigma_theta_rad: 0.0,
        sigma_gamma_rad: sigma_gamma,
        timestamp_s,
        n_sequences,
    })
}
