//! Deterministic CSV and JSON serialization of command results.
//!
//! CSV contract: comma separators, `.` decimal point, one header row, LF
//! line endings, fixed decimal formatting. The header constants are the
//! schema version — golden-file tests pin them byte for byte.

use serde::Serialize;

use nv_orient_core::geometry::RotationStep;
use nv_orient_core::protocols::{OrientationEstimate, ScanPoint, TrackStep};

/// Scan table schema, version 1.
pub const SCAN_CSV_HEADER_V1: &str = "angle_deg,delta_f_minus_khz,signal,sigma";
/// Tracking log schema, version 1.
pub const TRACK_CSV_HEADER_V1: &str =
    "step,timestamp_s,axis_x,axis_y,axis_z,angle_deg,error_deg,status";

pub fn scan_csv(points: &[ScanPoint]) -> String {
    let mut out = String::with_capacity(32 * (points.len() + 1));
    out.push_str(SCAN_CSV_HEADER_V1);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{:.4},{:.6},{:.9},{:.9}\n",
            p.angle_rad.to_degrees(),
            p.delta_f_minus_ghz * 1e6,
            p.signal,
            p.sigma
        ));
    }
    out
}

/// Nine-decimal format with negative zeros flushed to 0.
fn fmt9(x: f64) -> String {
    let v = if x.abs() < 0.5e-9 { 0.0 } else { x };
    format!("{v:.9}")
}

pub fn track_csv(steps: &[TrackStep]) -> String {
    let mut out = String::with_capacity(64 * (steps.len() + 1));
    out.push_str(TRACK_CSV_HEADER_V1);
    out.push('\n');
    for s in steps {
        let status = if s.failure.is_some() {
            "failed"
        } else if s.rotation_degenerate {
            "degenerate"
        } else if s.rotation.is_some() {
            "ok"
        } else {
            "start"
        };
        let (ax, ay, az, angle) = match &s.rotation {
            Some(RotationStep { axis, angle, .. }) => (
                fmt9(axis.x),
                fmt9(axis.y),
                fmt9(axis.z),
                fmt9(angle.to_degrees()),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let error = s
            .frame_error_rad
            .map(|e| fmt9(e.to_degrees()))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:.4},{},{},{},{},{},{}\n",
            s.index, s.timestamp_s, ax, ay, az, angle, error, status
        ));
    }
    out
}

/// Spectrum comparison between the exact eigensolver and the closed form.
#[derive(Debug, Serialize)]
pub struct SpectrumOutput {
    pub f_minus_exact_ghz: f64,
    pub f_plus_exact_ghz: f64,
    pub f_minus_analytic_ghz: f64,
    pub f_plus_analytic_ghz: f64,
    pub diff_minus_ghz: f64,
    pub diff_plus_ghz: f64,
    pub regime_warning: bool,
}

#[derive(Debug, Serialize)]
pub struct EstimateOutput {
    pub estimate: OrientationEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_error_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_error_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_error_deg: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SensitivityOutput {
    pub delta_nu_hz_per_sqrt_hz: f64,
    pub delta_theta_sq_deg_per_sqrt_hz: f64,
    pub delta_gamma_sq_deg_per_sqrt_hz: f64,
    pub delta_theta_dq_deg_per_sqrt_hz: f64,
    pub delta_gamma_dq_deg_per_sqrt_hz: f64,
}

pub fn sensitivity_csv(s: &SensitivityOutput) -> String {
    format!(
        "delta_nu_hz_per_sqrt_hz,delta_theta_sq_deg_per_sqrt_hz,delta_gamma_sq_deg_per_sqrt_hz,delta_theta_dq_deg_per_sqrt_hz,delta_gamma_dq_deg_per_sqrt_hz\n{:.6},{:.9e},{:.9e},{:.9e},{:.9e}\n",
        s.delta_nu_hz_per_sqrt_hz,
        s.delta_theta_sq_deg_per_sqrt_hz,
        s.delta_gamma_sq_deg_per_sqrt_hz,
        s.delta_theta_dq_deg_per_sqrt_hz,
        s.delta_gamma_dq_deg_per_sqrt_hz
    )
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}
