//! nv-orient: spectra, field-rotation scans, orientation estimation and
//! tracking for single NV centres, driven by one JSON configuration.
//!
//! Exit codes: 0 success, 1 runtime/estimation failure, 2 configuration
//! error. `NV_ORIENT_THREADS` caps the worker pool used for scan points.

mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{Rotation3, Unit, Vector3};

use nv_orient_core::analytic_spectra::{
    frequencies_general, perturbative_regime_warning, Readout, SlopeTarget,
};
use nv_orient_core::geometry::{field_to_nv, NVOrientation};
use nv_orient_core::microscopics::susceptibility_report;
use nv_orient_core::protocols::{
    angle_sensitivity, estimate_x, estimate_z, freq_sensitivity, track_sequence, transverse_scan,
    EstimateBudget, TrackBudget,
};
use nv_orient_core::spin_model::{build_hamiltonian, eigen_frequencies, FieldConfig, Frame};

use config::{parse_config, RunConfig};
use output::{
    scan_csv, sensitivity_csv, to_json, track_csv, EstimateOutput, SensitivityOutput,
    SpectrumOutput,
};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "nv-orient",
    version,
    about = "NV centre spin spectra, orientation scans and rotation tracking"
)]
struct Cli {
    /// JSON run configuration (optional for sensitivity/microscopics).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the noise model's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (default: csv for scan/track, json otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Exact and closed-form transition frequencies for one field setting.
    Spectrum,
    /// Transverse field-rotation scan table.
    Scan,
    /// One three-axis orientation estimate.
    Estimate,
    /// Scripted-trajectory tracking log.
    Track,
    /// Frequency and angle sensitivity figures.
    Sensitivity,
    /// Susceptibility sign report from the defect geometry.
    Microscopics,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Runtime(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    init_thread_pool()?;

    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => match cli.command {
            Command::Sensitivity | Command::Microscopics => RunConfig::default(),
            _ => {
                return Err(CliError::Config(
                    "--config is required for this command".to_string(),
                ))
            }
        },
    };

    let default_format = match cli.command {
        Command::Scan | Command::Track => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.unwrap_or(default_format);

    let rendered = match cli.command {
        Command::Spectrum => cmd_spectrum(&cfg, format)?,
        Command::Scan => cmd_scan(&cfg, cli.seed, format)?,
        Command::Estimate => cmd_estimate(&cfg, cli.seed, format)?,
        Command::Track => cmd_track(&cfg, cli.seed, format)?,
        Command::Sensitivity => cmd_sensitivity(&cfg, format)?,
        Command::Microscopics => cmd_microscopics(&cfg, format)?,
    };

    match &cli.out {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn init_thread_pool() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("NV_ORIENT_THREADS") {
        let n: usize = raw.parse().map_err(|_| {
            CliError::Config(format!("NV_ORIENT_THREADS must be an integer, got {raw:?}"))
        })?;
        if n == 0 {
            return Err(CliError::Config(
                "NV_ORIENT_THREADS must be at least 1".into(),
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn cmd_spectrum(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let params = cfg.spin_params()?;
    let block = cfg
        .spectrum
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `spectrum` block".to_string()))?;
    let fields = FieldConfig::new(
        Vector3::from(block.b_gauss),
        Vector3::from(block.e_v_per_um),
        block.frame,
    );
    let nv_fields = match block.frame {
        Frame::Nv => fields,
        Frame::Lab => {
            let orient = cfg.truth()?.ok_or_else(|| {
                CliError::Config("lab-frame fields need orientation_truth".into())
            })?;
            field_to_nv(&fields, &orient).map_err(runtime)?
        }
    };
    let exact = eigen_frequencies(&build_hamiltonian(&params, &nv_fields).map_err(runtime)?)
        .map_err(runtime)?;
    let analytic = frequencies_general(&params, &nv_fields);
    let out = SpectrumOutput {
        f_minus_exact_ghz: exact.f_minus,
        f_plus_exact_ghz: exact.f_plus,
        f_minus_analytic_ghz: analytic.spectrum.f_minus,
        f_plus_analytic_ghz: analytic.spectrum.f_plus,
        diff_minus_ghz: analytic.spectrum.f_minus - exact.f_minus,
        diff_plus_ghz: analytic.spectrum.f_plus - exact.f_plus,
        regime_warning: perturbative_regime_warning(&params, &nv_fields),
    };
    Ok(match format {
        Format::Json => to_json(&out),
        Format::Csv => format!(
            "f_minus_exact_ghz,f_plus_exact_ghz,f_minus_analytic_ghz,f_plus_analytic_ghz,diff_minus_ghz,diff_plus_ghz,regime_warning\n{:.12},{:.12},{:.12},{:.12},{:.3e},{:.3e},{}\n",
            out.f_minus_exact_ghz,
            out.f_plus_exact_ghz,
            out.f_minus_analytic_ghz,
            out.f_plus_analytic_ghz,
            out.diff_minus_ghz,
            out.diff_plus_ghz,
            out.regime_warning
        ),
    })
}

fn cmd_scan(cfg: &RunConfig, seed: Option<u64>, format: Format) -> Result<String, CliError> {
    let params = cfg.spin_params()?;
    let block = cfg
        .scan
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `scan` block".to_string()))?;
    let orient = cfg.truth()?.unwrap_or_else(NVOrientation::identity);
    let noise = if block.noiseless {
        None
    } else {
        Some(cfg.noise_model(seed)?)
    };
    let points = transverse_scan(
        &params,
        &orient,
        block.b_perp_gauss,
        block.e_perp_v_per_um,
        block.mode,
        block.fixed_angle_deg.to_radians(),
        block.n_points,
        block.tau_us,
        noise.as_ref(),
        block.shots_per_point,
        0,
    )
    .map_err(runtime)?;
    Ok(match format {
        Format::Csv => scan_csv(&points),
        Format::Json => to_json(&points),
    })
}

fn cmd_estimate(cfg: &RunConfig, seed: Option<u64>, format: Format) -> Result<String, CliError> {
    let params = cfg.spin_params()?;
    let block = cfg
        .estimate
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `estimate` block".to_string()))?;
    let truth_given = cfg.truth()?;
    let prev = match &block.prev {
        Some(spec) => spec.to_orientation()?,
        None => truth_given.unwrap_or_else(NVOrientation::identity),
    };
    // with the truth withheld we simulate a system sitting at the expectation
    let truth = truth_given.unwrap_or(prev);
    let noise = if block.noiseless {
        None
    } else {
        Some(cfg.noise_model(seed)?)
    };
    let budget = EstimateBudget {
        total_time_s: block.t_total_s / 2.0,
        tau_us: block.tau_us,
        mode: block.mode,
    };
    let z_est = estimate_z(
        &params,
        &truth,
        &prev,
        block.b_gauss,
        &budget,
        noise.as_ref(),
        0.0,
        0,
    )
    .map_err(runtime)?;
    let mut full = estimate_x(
        &params,
        &truth,
        &z_est.orientation.z_axis(),
        &prev.x_axis(),
        block.b_perp_gauss,
        block.e_perp_v_per_um,
        &budget,
        noise.as_ref(),
        0.0,
        2,
    )
    .map_err(runtime)?;
    full.sigma_theta_rad = z_est.sigma_theta_rad;
    full.n_sequences += z_est.n_sequences;

    let out = EstimateOutput {
        estimate: full,
        frame_error_deg: truth_given.map(|t| full.orientation.frame_angle_to(&t).to_degrees()),
        z_error_deg: truth_given.map(|t| full.orientation.z_axis().angle(&t.z_axis()).to_degrees()),
        x_error_deg: truth_given.map(|t| full.orientation.x_axis().angle(&t.x_axis()).to_degrees()),
    };
    Ok(match format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let o = &out.estimate.orientation;
            format!(
                "x_x,x_y,x_z,z_x,z_y,z_z,sigma_theta_rad,sigma_gamma_rad,n_sequences,frame_error_deg\n{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.6e},{:.6e},{},{}\n",
                o.x_axis().x,
                o.x_axis().y,
                o.x_axis().z,
                o.z_axis().x,
                o.z_axis().y,
                o.z_axis().z,
                out.estimate.sigma_theta_rad,
                out.estimate.sigma_gamma_rad,
                out.estimate.n_sequences,
                out.frame_error_deg.map(|e| format!("{e:.9}")).unwrap_or_default()
            )
        }
    })
}

fn cmd_track(cfg: &RunConfig, seed: Option<u64>, format: Format) -> Result<String, CliError> {
    let params = cfg.spin_params()?;
    let block = cfg
        .track
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `track` block".to_string()))?;
    let start = cfg.truth()?.unwrap_or_else(NVOrientation::identity);
    let axis = Unit::new_normalize(block.axis_vec()?);
    let rot = Rotation3::from_axis_angle(&axis, block.step_deg.to_radians());
    let mut trajectory = vec![start];
    for _ in 1..block.n_steps.max(1) {
        let last = *trajectory.last().unwrap();
        trajectory
            .push(NVOrientation::new(rot * last.x_axis(), rot * last.z_axis()).map_err(runtime)?);
    }
    let budget = TrackBudget {
        t_per_estimate_s: block.t_per_estimate_s,
        z_time_fraction: block.z_time_fraction,
        b_gauss: block.b_gauss,
        b_perp_gauss: block.b_perp_gauss,
        e_perp_v_per_um: block.e_perp_v_per_um,
        tau_us: block.tau_us,
        mode: block.mode,
    };
    let noise = if block.noiseless {
        None
    } else {
        Some(cfg.noise_model(seed)?)
    };
    let steps = track_sequence(&params, &trajectory, &budget, noise.as_ref()).map_err(runtime)?;
    Ok(match format {
        Format::Csv => track_csv(&steps),
        Format::Json => to_json(&steps),
    })
}

fn cmd_sensitivity(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let params = cfg.spin_params()?;
    let noise = cfg.noise_model(None)?;
    let block = &cfg.sensitivity;
    let theta = SlopeTarget::ThetaB {
        b_gauss: block.b_gauss,
        theta_b: block.theta_deg.to_radians(),
    };
    let gamma = SlopeTarget::GammaComb {
        e_perp: block.e_perp_v_per_um,
        gamma_comb: block.gamma_deg.to_radians(),
        delta_comb: 0.0,
    };
    let out = SensitivityOutput {
        delta_nu_hz_per_sqrt_hz: freq_sensitivity(&noise),
        delta_theta_sq_deg_per_sqrt_hz: angle_sensitivity(&params, &noise, Readout::Sq, theta)
            .map_err(runtime)?,
        delta_gamma_sq_deg_per_sqrt_hz: angle_sensitivity(&params, &noise, Readout::Sq, gamma)
            .map_err(runtime)?,
        delta_theta_dq_deg_per_sqrt_hz: angle_sensitivity(&params, &noise, Readout::Dq, theta)
            .map_err(runtime)?,
        delta_gamma_dq_deg_per_sqrt_hz: angle_sensitivity(&params, &noise, Readout::Dq, gamma)
            .map_err(runtime)?,
    };
    Ok(match format {
        Format::Json => to_json(&out),
        Format::Csv => sensitivity_csv(&out),
    })
}

fn cmd_microscopics(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let geom = cfg.microscopics.geometry()?;
    let report = susceptibility_report(&geom).map_err(runtime)?;
    Ok(match format {
        Format::Json => to_json(&report),
        Format::Csv => format!(
            "d_perp,d_z,d_e,k_perp_proxy,k_perp_sign,k_z_sign\n{:.9e},{:.9e},{:.9e},{:.9e},{},{}\n",
            report.d_perp,
            report.d_z,
            report.d_e,
            report.k_perp_proxy,
            report.k_perp_sign,
            report.k_z_sign
        ),
    })
}
