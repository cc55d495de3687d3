//! JSON run configuration.
//!
//! One document configures every subcommand; unknown keys are rejected so
//! typos fail loudly. Angles are degrees in the file (and in all outputs),
//! radians inside the library.

use nalgebra::Vector3;
use serde::Deserialize;

use nv_orient_core::analytic_spectra::Readout;
use nv_orient_core::geometry::{crystallographic_orientations, CrystalAlignment, NVOrientation};
use nv_orient_core::microscopics::DefectGeometry;
use nv_orient_core::protocols::{NoiseModel, ScanMode};
use nv_orient_core::spin_model::{Frame, SpinParams};

use crate::CliError;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub orientation_truth: Option<OrientationSpec>,
    pub spectrum: Option<SpectrumConfig>,
    pub scan: Option<ScanConfig>,
    pub estimate: Option<EstimateConfig>,
    pub track: Option<TrackConfig>,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub microscopics: MicroscopicsConfig,
}

impl RunConfig {
    pub fn spin_params(&self) -> Result<SpinParams, CliError> {
        let p = SpinParams::new(
            self.params.d_ghz,
            self.params.g_e,
            self.params.k_z_khz_um_per_v,
            self.params.k_perp_khz_um_per_v,
        );
        p.validate()
            .map_err(|e| CliError::Config(format!("params: {e}")))?;
        Ok(p)
    }

    pub fn noise_model(&self, seed_override: Option<u64>) -> Result<NoiseModel, CliError> {
        let n = NoiseModel {
            count_rate_kcps: self.noise.count_rate_kcps,
            contrast: self.noise.contrast,
            c_factor: self.noise.c_factor,
            t_c_ms: self.noise.t_c_ms,
            rng_seed: seed_override.unwrap_or(self.noise.rng_seed),
        };
        n.validate()
            .map_err(|e| CliError::Config(format!("noise: {e}")))?;
        Ok(n)
    }

    pub fn truth(&self) -> Result<Option<NVOrientation>, CliError> {
        self.orientation_truth
            .as_ref()
            .map(|s| s.to_orientation())
            .transpose()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_d")]
    pub d_ghz: f64,
    #[serde(default = "default_ge")]
    pub g_e: f64,
    #[serde(default = "default_kz")]
    pub k_z_khz_um_per_v: f64,
    #[serde(default = "default_kperp")]
    pub k_perp_khz_um_per_v: f64,
}

fn default_d() -> f64 {
    nv_orient_core::consts::ZERO_FIELD_SPLITTING_GHZ
}
fn default_ge() -> f64 {
    nv_orient_core::consts::ELECTRON_G_FACTOR
}
fn default_kz() -> f64 {
    nv_orient_core::consts::K_Z_KHZ_UM_PER_V
}
fn default_kperp() -> f64 {
    nv_orient_core::consts::K_PERP_KHZ_UM_PER_V
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            d_ghz: default_d(),
            g_e: default_ge(),
            k_z_khz_um_per_v: default_kz(),
            k_perp_khz_um_per_v: default_kperp(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_count_rate")]
    pub count_rate_kcps: f64,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
    #[serde(default = "default_c_factor")]
    pub c_factor: f64,
    #[serde(default = "default_t_c")]
    pub t_c_ms: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_count_rate() -> f64 {
    200.0
}
fn default_contrast() -> f64 {
    0.3
}
fn default_c_factor() -> f64 {
    12.0
}
fn default_t_c() -> f64 {
    1.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            count_rate_kcps: default_count_rate(),
            contrast: default_contrast(),
            c_factor: default_c_factor(),
            t_c_ms: default_t_c(),
            rng_seed: 0,
        }
    }
}

/// Orientation given either as explicit axes or as a crystallographic
/// alignment relative to a surface normal.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrientationSpec {
    Axes {
        x_axis: [f64; 3],
        z_axis: [f64; 3],
    },
    Crystal {
        family: u8,
        minor_index: u8,
        #[serde(default = "default_normal")]
        surface_normal: [f64; 3],
    },
}

fn default_normal() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

fn vec3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

impl OrientationSpec {
    pub fn to_orientation(&self) -> Result<NVOrientation, CliError> {
        match self {
            OrientationSpec::Axes { x_axis, z_axis } => {
                NVOrientation::orthonormalized(vec3(x_axis), vec3(z_axis))
                    .map_err(|e| CliError::Config(format!("orientation axes: {e}")))
            }
            OrientationSpec::Crystal {
                family,
                minor_index,
                surface_normal,
            } => {
                let alignment = CrystalAlignment::new(*family, *minor_index)
                    .map_err(|e| CliError::Config(format!("orientation crystal: {e}")))?;
                let all = crystallographic_orientations(vec3(surface_normal))
                    .map_err(|e| CliError::Config(format!("surface normal: {e}")))?;
                Ok(all[alignment.index()])
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub b_gauss: [f64; 3],
    pub e_v_per_um: [f64; 3],
    #[serde(default = "default_frame")]
    pub frame: Frame,
}

fn default_frame() -> Frame {
    Frame::Nv
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub mode: ScanMode,
    #[serde(default)]
    pub fixed_angle_deg: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default = "default_b_perp")]
    pub b_perp_gauss: f64,
    #[serde(default = "default_e_perp_scan")]
    pub e_perp_v_per_um: f64,
    #[serde(default = "default_tau")]
    pub tau_us: f64,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default = "default_shots")]
    pub shots_per_point: u64,
}

fn default_n_points() -> usize {
    72
}
fn default_b_perp() -> f64 {
    55.0
}
fn default_e_perp_scan() -> f64 {
    0.64
}
fn default_tau() -> f64 {
    70.0
}
fn default_shots() -> u64 {
    1000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(default = "default_b")]
    pub b_gauss: f64,
    #[serde(default = "default_b")]
    pub b_perp_gauss: f64,
    #[serde(default = "default_e_perp")]
    pub e_perp_v_per_um: f64,
    #[serde(default = "default_time")]
    pub t_total_s: f64,
    #[serde(default = "default_tau")]
    pub tau_us: f64,
    #[serde(default = "default_mode")]
    pub mode: Readout,
    #[serde(default)]
    pub noiseless: bool,
    /// Expected orientation before the estimate; defaults to the truth
    /// when given, the lab identity otherwise.
    pub prev: Option<OrientationSpec>,
}

fn default_b() -> f64 {
    100.0
}
fn default_e_perp() -> f64 {
    1.0
}
fn default_time() -> f64 {
    1.0
}
fn default_mode() -> Readout {
    Readout::Dq
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    /// Lab-frame rotation axis of the scripted trajectory.
    pub axis: [f64; 3],
    pub step_deg: f64,
    pub n_steps: usize,
    #[serde(default = "default_time")]
    pub t_per_estimate_s: f64,
    #[serde(default = "default_z_fraction")]
    pub z_time_fraction: f64,
    #[serde(default = "default_b")]
    pub b_gauss: f64,
    #[serde(default = "default_b")]
    pub b_perp_gauss: f64,
    #[serde(default = "default_e_perp")]
    pub e_perp_v_per_um: f64,
    #[serde(default = "default_tau")]
    pub tau_us: f64,
    #[serde(default = "default_mode")]
    pub mode: Readout,
    #[serde(default)]
    pub noiseless: bool,
}

fn default_z_fraction() -> f64 {
    0.05
}

impl TrackConfig {
    pub fn axis_vec(&self) -> Result<Vector3<f64>, CliError> {
        let v = vec3(&self.axis);
        if v.norm() < 1e-12 || !v.iter().all(|c| c.is_finite()) {
            return Err(CliError::Config(
                "track.axis must be a finite non-zero vector".into(),
            ));
        }
        Ok(v)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    #[serde(default = "default_b")]
    pub b_gauss: f64,
    #[serde(default = "default_e_perp")]
    pub e_perp_v_per_um: f64,
    #[serde(default = "default_theta")]
    pub theta_deg: f64,
    #[serde(default = "default_gamma")]
    pub gamma_deg: f64,
}

fn default_theta() -> f64 {
    60.0
}
fn default_gamma() -> f64 {
    30.0
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            b_gauss: default_b(),
            e_perp_v_per_um: default_e_perp(),
            theta_deg: default_theta(),
            gamma_deg: default_gamma(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroscopicsConfig {
    #[serde(default = "default_l_c")]
    pub l_c_angstrom: f64,
    #[serde(default = "default_l_n")]
    pub l_n_angstrom: f64,
    #[serde(default = "default_big_l_c")]
    pub big_l_c_angstrom: f64,
    #[serde(default = "default_big_l_n")]
    pub big_l_n_angstrom: f64,
    #[serde(default = "default_lambda")]
    pub lambda_mix: f64,
    #[serde(default = "default_e_o")]
    pub e_o_ev: f64,
}

fn default_l_c() -> f64 {
    0.31
}
fn default_l_n() -> f64 {
    0.27
}
fn default_big_l_c() -> f64 {
    1.65
}
fn default_big_l_n() -> f64 {
    1.68
}
fn default_lambda() -> f64 {
    1.0
}
fn default_e_o() -> f64 {
    1.945
}

impl Default for MicroscopicsConfig {
    fn default() -> Self {
        Self {
            l_c_angstrom: default_l_c(),
            l_n_angstrom: default_l_n(),
            big_l_c_angstrom: default_big_l_c(),
            big_l_n_angstrom: default_big_l_n(),
            lambda_mix: default_lambda(),
            e_o_ev: default_e_o(),
        }
    }
}

impl MicroscopicsConfig {
    pub fn geometry(&self) -> Result<DefectGeometry, CliError> {
        let geom = DefectGeometry {
            l_c_angstrom: self.l_c_angstrom,
            l_n_angstrom: self.l_n_angstrom,
            big_l_c_angstrom: self.big_l_c_angstrom,
            big_l_n_angstrom: self.big_l_n_angstrom,
            lambda_mix: self.lambda_mix,
            e_o_ev: self.e_o_ev,
        };
        geom.validate()
            .map_err(|e| CliError::Config(format!("microscopics: {e}")))?;
        Ok(geom)
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
    // reject out-of-range physical values before any computation
    cfg.spin_params()?;
    cfg.noise_model(None)?;
    for block in [
        cfg.scan.as_ref().map(|s| ("scan.tau_us", s.tau_us)),
        cfg.estimate
            .as_ref()
            .map(|e| ("estimate.t_total_s", e.t_total_s)),
        cfg.track
            .as_ref()
            .map(|t| ("track.t_per_estimate_s", t.t_per_estimate_s)),
    ]
    .into_iter()
    .flatten()
    {
        if !block.1.is_finite() || block.1 <= 0.0 {
            return Err(CliError::Config(format!(
                "{} must be positive, got {}",
                block.0, block.1
            )));
        }
    }
    if let Some(scan) = &cfg.scan {
        if scan.n_points == 0 {
            return Err(CliError::Config("scan.n_points must be positive".into()));
        }
        if scan.e_perp_v_per_um < 0.0 || scan.b_perp_gauss < 0.0 {
            return Err(CliError::Config(
                "scan field magnitudes must be non-negative".into(),
            ));
        }
    }
    if let Some(track) = &cfg.track {
        track.axis_vec()?;
        if !(track.z_time_fraction > 0.0 && track.z_time_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "track.z_time_fraction must lie in (0, 1), got {}",
                track.z_time_fraction
            )));
        }
    }
    Ok(cfg)
}
