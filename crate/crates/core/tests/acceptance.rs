//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Tolerances are pinned
//! in the assertions.

use std::time::Instant;

use nalgebra::{Rotation3, Unit, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use nv_orient_core::analytic_spectra::{frequencies_general, Readout, SlopeTarget};
use nv_orient_core::geometry::{
    crystallographic_orientations, reconstruct_rotation, NVOrientation,
};
use nv_orient_core::microscopics::{
    dipole_proxies_from_positions, expected_positions, spin_spin_closed_form, spin_spin_pair_form,
    susceptibility_report, DefectGeometry,
};
use nv_orient_core::protocols::{
    angle_sensitivity, echo_phase, electric_sign_probe, fit_trigonal, freq_sensitivity,
    required_sign_time_s, track_sequence, transverse_scan, EchoConfig, NoiseModel, ScanMode,
    TrackBudget,
};
use nv_orient_core::spin_model::{
    build_hamiltonian, eigen_frequencies, FieldConfig, Frame, SpinParams,
};

fn params() -> SpinParams {
    SpinParams::default()
}

fn nv_fields(b: Vector3<f64>, e: Vector3<f64>) -> FieldConfig {
    FieldConfig::new(b, e, Frame::Nv)
}

fn exact_pair(p: &SpinParams, f: &FieldConfig) -> (f64, f64) {
    let s = eigen_frequencies(&build_hamiltonian(p, f).unwrap()).unwrap();
    (s.f_minus, s.f_plus)
}

/// First-order perturbation scale of a field configuration (GHz).
fn field_scale(p: &SpinParams, f: &FieldConfig) -> f64 {
    p.zeeman_ghz_per_g() * f.b_gauss.norm() + p.stark_perp_ghz_per_v_um() * f.e_perp()
}

fn max_residual(p: &SpinParams, f: &FieldConfig) -> f64 {
    let (xm, xp) = exact_pair(p, f);
    let a = frequencies_general(p, f).spectrum;
    (a.f_minus - xm).abs().max((a.f_plus - xp).abs())
}

/// Criterion 1: the closed-form frequencies agree with exact 3x3
/// diagonalization over 10^4 random in-regime fields, with a residual
/// bounded by 20x the cubic power of the first-order field scale, and the
/// residual scales at least cubically under uniform field scaling.
///
/// The bound uses (γ|B| + k_perp E_perp)³/D² rather than (Λ+𝓡)³/D²: Λ is
/// itself second order in the field, and the error carries a Λ²/D piece,
/// so a bound cubic in the reduced parameters would be unsatisfiable for
/// transverse-dominated fields (see docs/derivations.md).
#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let p = params();
    let d2 = p.d_ghz * p.d_ghz;
    // gamma |B| <= D/20 and k_perp |E| <= D/100
    let b_cap = p.d_ghz / 20.0 / p.zeeman_ghz_per_g() / 3f64.sqrt();
    let e_cap = p.d_ghz / 100.0 / p.stark_perp_ghz_per_v_um() / 3f64.sqrt();
    let mut rng = ChaCha12Rng::seed_from_u64(1001);
    for _ in 0..10_000 {
        let f = nv_fields(
            Vector3::new(
                rng.random_range(-b_cap..b_cap),
                rng.random_range(-b_cap..b_cap),
                rng.random_range(-b_cap..b_cap),
            ),
            Vector3::new(
                rng.random_range(-e_cap..e_cap),
                rng.random_range(-e_cap..e_cap),
                rng.random_range(-e_cap..e_cap),
            ),
        );
        let res = max_residual(&p, &f);
        let bound = 20.0 * field_scale(&p, &f).powi(3) / d2;
        assert!(
            res <= bound,
            "residual {res:e} above bound {bound:e} for {f:?}"
        );
    }

    // scaling exponent of the batch-max residual under field scaling
    let base: Vec<FieldConfig> = (0..100)
        .map(|_| {
            nv_fields(
                Vector3::new(
                    rng.random_range(-b_cap..b_cap),
                    rng.random_range(-b_cap..b_cap),
                    rng.random_range(-b_cap..b_cap),
                ),
                Vector3::new(
                    rng.random_range(-e_cap..e_cap),
                    rng.random_range(-e_cap..e_cap),
                    rng.random_range(-e_cap..e_cap),
                ),
            )
        })
        .collect();
    let scales = [1.0, 0.5, 0.25];
    let log_pairs: Vec<(f64, f64)> = scales
        .iter()
        .map(|&s| {
            let worst = base
                .iter()
                .map(|f| {
                    max_residual(
                        &p,
                        &FieldConfig::new(f.b_gauss * s, f.e_v_per_um * s, Frame::Nv),
                    )
                })
                .fold(0.0, f64::max);
            (s.ln(), worst.ln())
        })
        .collect();
    let n = log_pairs.len() as f64;
    let mx = log_pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = log_pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = log_pairs
        .iter()
        .map(|p| (p.0 - mx) * (p.1 - my))
        .sum::<f64>()
        / log_pairs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope >= 2.7, "residual scaling exponent {slope}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 1 took {elapsed:?}");
    println!(
        "acceptance criterion 1 (oracle equivalence): PASS (exponent {slope:.2}, {elapsed:?})"
    );
}

/// Criterion 2: noiseless gamma scan shows exactly three maxima 120.0 deg
/// apart (±0.5 deg) and the fitted pattern phase matches the true minor
/// axis azimuth within 0.1 deg.
#[test]
fn criterion_2_trigonal_pattern() {
    let start = Instant::now();
    let p = params();
    let truth_azimuth_deg: f64 = 40.0;
    let a = truth_azimuth_deg.to_radians();
    let orient = NVOrientation::new(Vector3::new(a.cos(), a.sin(), 0.0), Vector3::z()).unwrap();

    let n = 720;
    let scan = transverse_scan(
        &p,
        &orient,
        55.0,
        0.64,
        ScanMode::Gamma,
        0.0,
        n,
        70.0,
        None,
        1,
        0,
    )
    .unwrap();
    let value = |i: usize| scan[i % n].delta_f_minus_ghz;
    let step_deg = 360.0 / n as f64;
    let mut maxima_deg = Vec::new();
    for i in 0..n {
        let (prev, here, next) = (value(i + n - 1), value(i), value(i + 1));
        if here > prev && here > next {
            // parabolic refinement on the three surrounding samples
            let denom = prev - 2.0 * here + next;
            let offset = if denom.abs() > 1e-30 {
                0.5 * (prev - next) / denom
            } else {
                0.0
            };
            maxima_deg.push((i as f64 + offset) * step_deg);
        }
    }
    assert_eq!(
        maxima_deg.len(),
        3,
        "expected exactly three maxima, got {maxima_deg:?}"
    );
    for w in maxima_deg.windows(2) {
        assert!(
            (w[1] - w[0] - 120.0).abs() <= 0.5,
            "maxima spacing {} deg",
            w[1] - w[0]
        );
    }

    let points: Vec<(f64, f64)> = scan
        .iter()
        .map(|pt| (pt.angle_rad, pt.delta_f_minus_ghz))
        .collect();
    let fit = fit_trigonal(&points).unwrap();
    let gamma0_deg = fit.gamma0_rad.to_degrees();
    assert!(
        (gamma0_deg - truth_azimuth_deg).abs() < 0.1,
        "fitted gamma0 {gamma0_deg} deg vs truth {truth_azimuth_deg} deg"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "criterion 2 took {elapsed:?}");
    println!("acceptance criterion 2 (trigonal pattern): PASS (gamma0 {gamma0_deg:.4} deg)");
}

/// Criterion 3: the electric probe discriminates the axis sign with
/// >= 99.7% success at the 3-sigma averaging time, while magnetic probes
/// provably cannot (±B spectra identical).
#[test]
fn criterion_3_axial_sign_discrimination() {
    let p = params();
    let orient = crystallographic_orientations(Vector3::new(1.0, 1.0, 1.0)).unwrap()[0];
    let noise = NoiseModel {
        rng_seed: 42,
        ..NoiseModel::default()
    };
    let t3 = required_sign_time_s(&noise, &p, 1.0);
    assert!((t3 - (3.0 * freq_sensitivity(&noise) / 3.5e3).powi(2)).abs() < 1e-12);

    let trials = 3000;
    let mut correct = 0usize;
    for i in 0..trials {
        let z = orient.z_axis();
        let (dir, want) = if i % 2 == 0 { (z, 1) } else { (-z, -1) };
        let got = electric_sign_probe(&p, &orient, 1.0, dir, Some(&noise), t3, i as u64).unwrap();
        if got == want {
            correct += 1;
        }
    }
    let success = correct as f64 / trials as f64;
    assert!(success >= 0.997, "sign success rate {success}");

    // magnetic-only probes: eigenvalue sets of H(B) and H(-B) coincide
    let mut rng = ChaCha12Rng::seed_from_u64(1003);
    for _ in 0..200 {
        let b = Vector3::new(
            rng.random_range(-80.0..80.0),
            rng.random_range(-80.0..80.0),
            rng.random_range(-80.0..80.0),
        );
        let ev = |b: Vector3<f64>| {
            let h = build_hamiltonian(&p, &nv_fields(b, Vector3::zeros())).unwrap();
            let mut e = h.matrix.symmetric_eigen().eigenvalues;
            e.as_mut_slice().sort_by(|a, b| a.partial_cmp(b).unwrap());
            e
        };
        let plus = ev(b);
        let minus = ev(-b);
        for (a, bb) in plus.iter().zip(minus.iter()) {
            assert!(
                (a - bb).abs() < 1e-10,
                "±B spectra differ by {:e}",
                (a - bb).abs()
            );
        }
    }
    println!("acceptance criterion 3 (axial sign discrimination): PASS ({success:.4} success)");
}

/// Criterion 4: frequency and angle sensitivity figures reproduced within
/// 5%, and the theta figure demonstrably needs the full slope including
/// the transverse-curvature term.
#[test]
fn criterion_4_sensitivity_regression() {
    let start = Instant::now();
    let p = params();
    let noise = NoiseModel::default();

    let dv = freq_sensitivity(&noise);
    assert!((dv / 380.0 - 1.0).abs() < 0.05, "delta nu {dv}");

    let theta = SlopeTarget::ThetaB {
        b_gauss: 100.0,
        theta_b: 60f64.to_radians(),
    };
    let gamma = SlopeTarget::GammaComb {
        e_perp: 1.0,
        gamma_comb: 30f64.to_radians(),
        delta_comb: 0.0,
    };
    let cases = [
        (Readout::Sq, theta, 8.0e-5),
        (Readout::Sq, gamma, 0.043),
        (Readout::Dq, theta, 4.5e-5),
        (Readout::Dq, gamma, 0.021),
    ];
    for (mode, target, want) in cases {
        let got = angle_sensitivity(&p, &noise, mode, target).unwrap();
        assert!(
            (got / want - 1.0).abs() < 0.05,
            "{mode:?}/{target:?}: {got:e} vs {want:e}"
        );
    }

    // dropping the quadratic transverse term from the sq theta slope (the
    // dq slope halved is exactly the remaining part) misses the 5% gate
    let dq_slope = nv_orient_core::analytic_spectra::shift_slope(&p, theta, Readout::Dq).unwrap();
    let naive = (dv / (dq_slope.abs() / 2.0 * 1e9)).to_degrees();
    assert!(
        (naive / 8.0e-5 - 1.0).abs() > 0.05,
        "slope without the quadratic term should fail the gate: {naive:e}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "criterion 4 took {elapsed:?}");
    println!("acceptance criterion 4 (sensitivity regression): PASS");
}

/// Criterion 5: the closed-form echo phase matches numeric quadrature of
/// the sign-flipped sinusoidal drive over 2τ to 1e-6 relative, for 100
/// random configurations away from the cosine zeros.
#[test]
fn criterion_5_echo_phase() {
    let start = Instant::now();
    let p = params();
    let mut rng = ChaCha12Rng::seed_from_u64(1005);

    // independent quadrature: Simpson over each τ interval with the π
    // pulse flipping the accumulation sign
    let quadrature = |cfg: &EchoConfig| {
        let tau_s = cfg.tau_us * 1e-6;
        let k_hz = p.k_perp_khz_um_per_v * 1e3;
        let shift = |t: f64| {
            k_hz * cfg.e0_v_per_um
                * (std::f64::consts::PI * t / tau_s).sin()
                * (3.0 * cfg.gamma_comb + cfg.delta_comb).cos()
        };
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut acc = shift(a) + shift(b);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * shift(a + i as f64 * h);
            }
            acc * h / 3.0
        };
        2.0 * std::f64::consts::PI * (simpson(0.0, tau_s, 4000) - simpson(tau_s, 2.0 * tau_s, 4000))
    };

    let mut checked = 0;
    while checked < 100 {
        let cfg = EchoConfig {
            tau_us: rng.random_range(1.0..300.0),
            e0_v_per_um: rng.random_range(0.01..3.0),
            gamma_comb: rng.random_range(-3.2..3.2),
            delta_comb: rng.random_range(-3.2..3.2),
        };
        if (3.0 * cfg.gamma_comb + cfg.delta_comb).cos().abs() < 0.05 {
            continue;
        }
        let closed = echo_phase(&p, &cfg);
        let numeric = quadrature(&cfg);
        assert!(
            ((closed - numeric) / closed).abs() <= 1e-6,
            "echo phase mismatch: closed {closed}, numeric {numeric}, cfg {cfg:?}"
        );
        checked += 1;
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "criterion 5 took {elapsed:?}");
    println!("acceptance criterion 5 (echo phase vs quadrature): PASS");
}

/// Criterion 6: 10^4 random rotations round-trip through reconstruction
/// with <= 1e-9 axis/angle residual, and the cross-product/trace formulas
/// are validated against the exact triad solver (axis exact up to the
/// sign of n̂·ŷ₀ with magnitude 2(1−cosβ)|n̂·ŷ₀|; scalar equals 1+2cosβ).
#[test]
fn criterion_6_rotation_reconstruction() {
    let p_rng = &mut ChaCha12Rng::seed_from_u64(1006);
    let random_unit = |rng: &mut ChaCha12Rng| loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 1e-3 {
            return Unit::new_normalize(v);
        }
    };
    for _ in 0..10_000 {
        let z = random_unit(p_rng);
        let prior = NVOrientation::orthonormalized(random_unit(p_rng).into_inner(), z.into_inner())
            .unwrap();
        let axis = random_unit(p_rng);
        let angle = p_rng.random_range(1f64.to_radians()..179f64.to_radians());
        let rot = Rotation3::from_axis_angle(&axis, angle);
        let posterior = NVOrientation::new(rot * prior.x_axis(), rot * prior.z_axis()).unwrap();

        let step = reconstruct_rotation(&prior, &posterior).unwrap();
        assert!((step.angle - angle).abs() <= 1e-9, "angle residual");
        assert!(
            (step.axis - axis.into_inner()).norm() <= 1e-9,
            "axis residual"
        );

        // printed-formula validation against the exact solution
        let n_raw =
            (posterior.z_axis() - prior.z_axis()).cross(&(posterior.x_axis() - prior.x_axis()));
        let predicted = axis.into_inner() * (2.0 * (1.0 - angle.cos()) * axis.dot(&prior.y_axis()));
        assert!((n_raw - predicted).norm() <= 1e-9);
        let dots = posterior.x_axis().dot(&prior.x_axis())
            + posterior.z_axis().dot(&prior.z_axis())
            + posterior.x_axis().dot(&prior.x_axis()) * posterior.z_axis().dot(&prior.z_axis())
            - prior.x_axis().dot(&posterior.z_axis()) * prior.z_axis().dot(&posterior.x_axis());
        assert!((dots - (1.0 + 2.0 * angle.cos())).abs() <= 1e-9);
    }
    println!("acceptance criterion 6 (rotation reconstruction): PASS");
}

/// Criterion 7: noisy tracking with dq readout at 1 s per estimate,
/// B = 100 G, E_perp = 1 V/µm reproduces a per-step angular error RMS of
/// 0.02 deg within a factor of two over > 100 Monte-Carlo steps, and the
/// accuracy/rate trade between T_c = 1 ms and 1 µs is the expected ~33x
/// sensitivity ratio within 10%.
#[test]
fn criterion_7_end_to_end_tracking() {
    let start = Instant::now();
    let p = params();
    let noise = NoiseModel {
        rng_seed: 2024,
        ..NoiseModel::default()
    };

    let axis = Unit::new_normalize(Vector3::new(0.3, -0.2, 1.0));
    let rot = Rotation3::from_axis_angle(&axis, 2f64.to_radians());
    let mut trajectory = vec![NVOrientation::identity()];
    for _ in 1..101 {
        let last = *trajectory.last().unwrap();
        trajectory.push(NVOrientation::new(rot * last.x_axis(), rot * last.z_axis()).unwrap());
    }
    let budget = TrackBudget {
        t_per_estimate_s: 1.0,
        z_time_fraction: 0.05,
        b_gauss: 100.0,
        b_perp_gauss: 100.0,
        e_perp_v_per_um: 1.0,
        tau_us: 70.0,
        mode: Readout::Dq,
    };
    let steps = track_sequence(&p, &trajectory, &budget, Some(&noise)).unwrap();
    let errors: Vec<f64> = steps
        .iter()
        .filter_map(|s| s.frame_error_rad)
        .map(|e| e.to_degrees())
        .collect();
    assert!(errors.len() >= 100, "only {} usable steps", errors.len());
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
    assert!(
        rms >= 0.01 && rms <= 0.04,
        "per-step angular error RMS {rms} deg outside [0.01, 0.04]"
    );

    // accuracy/rate trade: three decades of T_c cost sqrt(1000) ≈ 33x
    let gamma = SlopeTarget::GammaComb {
        e_perp: 1.0,
        gamma_comb: 30f64.to_radians(),
        delta_comb: 0.0,
    };
    let slow = angle_sensitivity(&p, &noise, Readout::Dq, gamma).unwrap();
    let fast_noise = NoiseModel {
        t_c_ms: 1e-3,
        ..noise
    };
    let fast = angle_sensitivity(&p, &fast_noise, Readout::Dq, gamma).unwrap();
    let ratio = fast / slow;
    assert!(
        (ratio / 33.0 - 1.0).abs() <= 0.10,
        "accuracy/rate ratio {ratio}"
    );

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "criterion 7 took {elapsed:?}"
    );
    println!(
        "acceptance criterion 7 (end-to-end tracking): PASS (RMS {rms:.4} deg, ratio {ratio:.1}, {elapsed:?})"
    );
}

/// Criterion 8: with the nominal defect geometry all three integrals are
/// positive, both susceptibility signs are +1 and the two spin-spin forms
/// agree to 1e-12 relative.
#[test]
fn criterion_8_microscopics() {
    let start = Instant::now();
    let geom = DefectGeometry::default();
    assert_eq!(
        (
            geom.l_c_angstrom,
            geom.l_n_angstrom,
            geom.big_l_c_angstrom,
            geom.big_l_n_angstrom
        ),
        (0.31, 0.27, 1.65, 1.68)
    );
    let lobes = expected_positions(&geom).unwrap();
    let (d_perp, d_z) = dipole_proxies_from_positions(&lobes, geom.lambda_mix);
    assert!(d_perp > 0.0, "d_perp {d_perp}");
    assert!(d_z > 0.0, "d_z {d_z}");
    let pair = spin_spin_pair_form(&lobes);
    let closed = spin_spin_closed_form(&lobes);
    assert!(pair > 0.0);
    assert!(
        ((pair - closed) / closed).abs() <= 1e-12,
        "forms differ: {pair} vs {closed}"
    );
    let report = susceptibility_report(&geom).unwrap();
    assert_eq!((report.k_perp_sign, report.k_z_sign), (1, 1));

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 0.1, "criterion 8 took {elapsed:?}");
    println!("acceptance criterion 8 (microscopics signs): PASS");
}
