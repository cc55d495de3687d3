//! Closed-form transition frequencies and angular dependences.
//!
//! All expressions here are second order in the reduced field parameters
//!
//! ```text
//! Λ = γₑ² B_⊥² / 2D          (transverse Zeeman)
//! 𝓡 = √(γₑ² B_z² + k_⊥² E_⊥²) (mixed axial-Zeeman / transverse-Stark)
//! ```
//!
//! and are validated against the exact eigensolver in
//! [`crate::spin_model`]. The general expression used in this crate is
//!
//! ```text
//! f_± = D + k_z E_z + 3Λ ± √(𝓡² − 2Λ𝓡 sin α cos β + Λ²)
//! ```
//!
//! with tan α = k_⊥E_⊥/γₑB_z and β = 2φ_B + φ_E. The cross-term
//! coefficient 2 is required for the residual against exact
//! diagonalization to be third order in the field amplitude; the variant
//! with coefficient 1 that circulates in parts of the literature is kept
//! as [`frequencies_general_printed`] for comparison and fails the cubic
//! scaling test (see `docs/derivations.md` and the oracle tests below).
//!
//! Validity is constrained by Λ, 𝓡 ≪ D; regime violations are reported as
//! warnings on the result, never as failures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spin_model::{FieldConfig, Frame, SpinParams, SpinSpectrum};
use crate::wrap_angle;

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("fields must be given in the defect frame")]
    FrameMismatch,
    #[error("slope at the working point is zero (useless working point)")]
    UselessWorkingPoint,
}

/// Reduced field parameters entering the second-order expressions.
///
/// Azimuths of a vanishing transverse component are reported as 0 with the
/// corresponding degeneracy flag set; α is defined as 0 when both B_z and
/// E_⊥ vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedFieldParams {
    /// Λ (GHz).
    pub lambda: f64,
    /// 𝓡 (GHz).
    pub r_mix: f64,
    /// Mixing angle α, tan α = k_⊥E_⊥/γₑB_z, in [0, π].
    pub alpha: f64,
    /// β = 2φ_B + φ_E, wrapped to (−π, π].
    pub beta: f64,
    pub phi_b: f64,
    pub phi_e: f64,
    pub theta_b: f64,
    pub theta_e: f64,
    /// γ = (φ_B + φ_E)/2.
    pub gamma_comb: f64,
    /// δ = (φ_B − φ_E)/2.
    pub delta_comb: f64,
    /// φ_B undefined because B_⊥ = 0.
    pub phi_b_degenerate: bool,
    /// φ_E undefined because E_⊥ = 0.
    pub phi_e_degenerate: bool,
}

/// Compute the reduced field parameters from defect-frame fields.
pub fn reduce_fields(
    params: &SpinParams,
    fields: &FieldConfig,
) -> Result<ReducedFieldParams, SpectraError> {
    if fields.frame != Frame::Nv {
        return Err(SpectraError::FrameMismatch);
    }
    let g = params.zeeman_ghz_per_g();
    let kp = params.stark_perp_ghz_per_v_um();
    let b_perp = fields.b_perp();
    let e_perp = fields.e_perp();
    let bz = fields.b_gauss.z;

    let lambda = g * g * b_perp * b_perp / (2.0 * params.d_ghz);
    let r_mix = (g * bz).hypot(kp * e_perp);
    let alpha = if bz == 0.0 && e_perp == 0.0 {
        0.0
    } else {
        (kp * e_perp).atan2(g * bz)
    };
    let phi_b = fields.phi_b();
    let phi_e = fields.phi_e();
    Ok(ReducedFieldParams {
        lambda,
        r_mix,
        alpha,
        beta: wrap_angle(2.0 * phi_b + phi_e),
        phi_b,
        phi_e,
        theta_b: fields.theta_b(),
        theta_e: fields.theta_e(),
        gamma_comb: wrap_angle(0.5 * (phi_b + phi_e)),
        delta_comb: wrap_angle(0.5 * (phi_b - phi_e)),
        phi_b_degenerate: b_perp == 0.0,
        phi_e_degenerate: e_perp == 0.0,
    })
}

/// A spectrum plus a soft validity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumResult {
    pub spectrum: SpinSpectrum,
    /// max(Λ, 𝓡) exceeded D/20: the second-order expressions (and the |0⟩
    /// labelling of the eigensolver) start to degrade.
    pub regime_warning: bool,
}

/// True when max(Λ, 𝓡) > D/20.
pub fn perturbative_regime_warning(params: &SpinParams, fields: &FieldConfig) -> bool {
    match reduce_fields(params, fields) {
        Ok(r) => r.lambda.max(r.r_mix) > params.d_ghz / 20.0,
        Err(_) => false,
    }
}

fn general_frequencies(
    params: &SpinParams,
    fields: &FieldConfig,
    cross_coeff: f64,
) -> SpectrumResult {
    let r = reduce_fields(params, fields).expect("defect-frame fields");
    let kz = params.stark_z_ghz_per_v_um();
    let common = params.d_ghz + kz * fields.e_v_per_um.z + 3.0 * r.lambda;
    let w2 = r.r_mix * r.r_mix - cross_coeff * r.lambda * r.r_mix * r.alpha.sin() * r.beta.cos()
        + r.lambda * r.lambda;
    let w = w2.max(0.0).sqrt();
    SpectrumResult {
        spectrum: SpinSpectrum::new(common - w, common + w),
        regime_warning: r.lambda.max(r.r_mix) > params.d_ghz / 20.0,
    }
}

/// General second-order transition frequencies for defect-frame fields.
pub fn frequencies_general(params: &SpinParams, fields: &FieldConfig) -> SpectrumResult {
    general_frequencies(params, fields, 2.0)
}

/// The same expression with the cross-term coefficient 1 instead of 2.
///
/// Kept only to document the discrepancy against the exact eigensolver:
/// its residual is second order in the field amplitude and does not pass
/// the cubic-scaling oracle test that [`frequencies_general`] passes.
pub fn frequencies_general_printed(params: &SpinParams, fields: &FieldConfig) -> SpectrumResult {
    general_frequencies(params, fields, 1.0)
}

/// Magnetic-field-only frequencies as a function of (B, θ_B).
///
/// ```text
/// f_± = D + 3Λ ± γₑB cos θ_B √(1 + (γₑ²B²/4D²) tan²θ_B sin²θ_B)
/// ```
///
/// Evaluated through the algebraically equivalent tan-free form
/// sign(cos θ_B) · γₑB √(cos²θ_B + (γₑB/2D)² sin⁴θ_B), which is defined at
/// the removable singularity θ_B = π/2. The returned pair keeps the
/// analytic labels, so Δf_±(θ_B + π) = Δf_∓(θ_B): past θ_B = π/2 the
/// labelled f_+ drops below f_−.
pub fn frequencies_magnetic(params: &SpinParams, b_gauss: f64, theta_b: f64) -> SpinSpectrum {
    let g = params.zeeman_ghz_per_g();
    let gb = g * b_gauss;
    let (sin_t, cos_t) = theta_b.sin_cos();
    let lambda = gb * gb * sin_t * sin_t / (2.0 * params.d_ghz);
    let half = gb / (2.0 * params.d_ghz);
    let w = gb * (cos_t * cos_t + half * half * sin_t.powi(4)).sqrt();
    let signed_w = if cos_t >= 0.0 { w } else { -w };
    let common = params.d_ghz + 3.0 * lambda;
    SpinSpectrum::new(common - signed_w, common + signed_w)
}

/// Electric-field-only frequencies, f_± = D + k_z E cos θ_E ± k_⊥ E sin θ_E.
///
/// This expression is exact for the electric-only Hamiltonian: the common
/// shift carries the sign of cos θ_E, distinguishing parallel from
/// anti-parallel fields.
pub fn frequencies_electric(params: &SpinParams, e_v_per_um: f64, theta_e: f64) -> SpinSpectrum {
    let kz = params.stark_z_ghz_per_v_um();
    let kp = params.stark_perp_ghz_per_v_um();
    let common = params.d_ghz + kz * e_v_per_um * theta_e.cos();
    let split = kp * e_v_per_um * theta_e.sin();
    SpinSpectrum::new(common - split, common + split)
}

/// Which field drives a near-axis shift measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NearAxisField {
    Magnetic,
    Electric,
}

/// First-order shift pair (Δf_−, Δf_+) near axial alignment.
///
/// Magnetic: (∓)γₑB cos θ — a differential splitting insensitive to the
/// θ → θ + π flip up to a label swap. Electric: the common pair
/// (k_zE cos θ, k_zE cos θ) whose sign resolves parallel vs anti-parallel.
/// Intended for |θ| ≤ 30° or |θ − π| ≤ 30°.
pub fn near_axis_shifts(
    params: &SpinParams,
    magnitude: f64,
    theta: f64,
    which: NearAxisField,
) -> (f64, f64) {
    match which {
        NearAxisField::Magnetic => {
            let s = params.zeeman_ghz_per_g() * magnitude * theta.cos();
            (-s, s)
        }
        NearAxisField::Electric => {
            let s = params.stark_z_ghz_per_v_um() * magnitude * theta.cos();
            (s, s)
        }
    }
}

/// Exact-line and approximate transverse-field spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseSpectra {
    /// Second-order line: D + 3Λ ± √(k_⊥²E_⊥² − 2 k_⊥E_⊥Λ cos(2φ_B+φ_E) + Λ²).
    pub exact: SpinSpectrum,
    /// Λ ≫ k_⊥E_⊥ limit: D + (3±1)Λ ∓ k_⊥E_⊥ cos(2φ_B+φ_E).
    pub approx: SpinSpectrum,
    /// Λ < 5 k_⊥E_⊥: the approximate line is outside its regime.
    pub approx_regime_warning: bool,
}

/// Purely transverse fields (B_z = E_z = 0): both printed lines.
pub fn frequencies_transverse(
    params: &SpinParams,
    e_perp: f64,
    b_perp: f64,
    phi_b: f64,
    phi_e: f64,
) -> TransverseSpectra {
    let g = params.zeeman_ghz_per_g();
    let kp = params.stark_perp_ghz_per_v_um();
    let lambda = g * g * b_perp * b_perp / (2.0 * params.d_ghz);
    let x = kp * e_perp;
    let phi = 2.0 * phi_b + phi_e;
    let w = (x * x - 2.0 * x * lambda * phi.cos() + lambda * lambda)
        .max(0.0)
        .sqrt();
    let d = params.d_ghz;
    let exact = SpinSpectrum::new(d + 3.0 * lambda - w, d + 3.0 * lambda + w);
    let approx = SpinSpectrum::new(
        d + 2.0 * lambda + x * phi.cos(),
        d + 4.0 * lambda - x * phi.cos(),
    );
    TransverseSpectra {
        exact,
        approx,
        approx_regime_warning: lambda < 5.0 * x,
    }
}

/// Signed transverse shift pair Δf_± = ∓ k_⊥E_⊥ cos(2φ_B + φ_E),
/// returned as (Δf_−, Δf_+).
pub fn transverse_shift_pattern(
    params: &SpinParams,
    e_perp: f64,
    phi_b: f64,
    phi_e: f64,
) -> (f64, f64) {
    let x = params.stark_perp_ghz_per_v_um() * e_perp * (2.0 * phi_b + phi_e).cos();
    (x, -x)
}

/// Same pattern in the combined angles γ = (φ_B+φ_E)/2, δ = (φ_B−φ_E)/2:
/// Δf_± = ∓ k_⊥E_⊥ cos(3γ + δ).
pub fn combined_shift_pattern(
    params: &SpinParams,
    e_perp: f64,
    gamma_comb: f64,
    delta_comb: f64,
) -> (f64, f64) {
    let x = params.stark_perp_ghz_per_v_um() * e_perp * (3.0 * gamma_comb + delta_comb).cos();
    (x, -x)
}

/// Readout mode: single-quantum (|0⟩↔|−⟩) or double-quantum (|−⟩↔|+⟩).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Sq,
    Dq,
}

/// Working point for an angular slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeTarget {
    /// d/dθ_B at (B, θ_B), magnetic field only.
    ThetaB { b_gauss: f64, theta_b: f64 },
    /// d/dγ at (E_⊥, γ, δ), transverse parallel-field configuration.
    GammaComb {
        e_perp: f64,
        gamma_comb: f64,
        delta_comb: f64,
    },
}

const ZERO_SLOPE_TOL: f64 = 1e-15;

/// Analytic slope (GHz/rad) of the readout observable at a working point.
///
/// Sq differentiates Δf_−, dq differentiates f_+ − f_−. For θ_B the
/// derivative is taken on the full magnetic expression including the
/// 3Λ sin²θ term (sq) — dropping it misses ~13% of the slope at the 60°
/// working point. A vanishing slope is flagged as a useless working point.
pub fn shift_slope(
    params: &SpinParams,
    target: SlopeTarget,
    mode: Readout,
) -> Result<f64, SpectraError> {
    let slope = match target {
        SlopeTarget::ThetaB { b_gauss, theta_b } => {
            let g = params.zeeman_ghz_per_g();
            let gb = g * b_gauss;
            let d = params.d_ghz;
            let (sin_t, cos_t) = theta_b.sin_cos();
            // W(theta) = sign(cos) * gb * sqrt(cos^2 + (gb/2D)^2 sin^4)
            // dW/dtheta = gb * (-sin cos + 2 (gb/2D)^2 sin^3 cos) / sqrt(...)
            let half = gb / (2.0 * d);
            let root = (cos_t * cos_t + half * half * sin_t.powi(4)).sqrt();
            let dw = if root == 0.0 {
                0.0
            } else {
                let signed =
                    gb * (-sin_t * cos_t + 2.0 * half * half * sin_t.powi(3) * cos_t) / root;
                if cos_t >= 0.0 {
                    signed
                } else {
                    -signed
                }
            };
            let dlambda3 = 3.0 * gb * gb / (2.0 * d) * (2.0 * theta_b).sin();
            match mode {
                // d(f_- - D)/dtheta = 3 dLambda/dtheta - dW/dtheta
                Readout::Sq => dlambda3 - dw,
                // d(f_+ - f_-)/dtheta = 2 dW/dtheta
                Readout::Dq => 2.0 * dw,
            }
        }
        SlopeTarget::GammaComb {
            e_perp,
            gamma_comb,
            delta_comb,
        } => {
            let x = params.stark_perp_ghz_per_v_um() * e_perp;
            let base = -3.0 * x * (3.0 * gamma_comb + delta_comb).sin();
            match mode {
                Readout::Sq => base,
                Readout::Dq => -2.0 * base,
            }
        }
    };
    if slope.abs() < ZERO_SLOPE_TOL {
        Err(SpectraError::UselessWorkingPoint)
    } else {
        Ok(slope)
    }
}
