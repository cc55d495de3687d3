//! Ground-state spin physics and orientation-measurement protocols for
//! single negatively-charged nitrogen-vacancy (NV⁻) centres in diamond.
//!
//! The crate is organised around one exact reference and a family of
//! closed-form models validated against it:
//!
//! - [`spin_model`] — the S = 1 ground-state Hamiltonian in the defect frame
//!   and its exact transition frequencies by Hermitian diagonalization.
//!   Everything else in the crate is checked against this oracle.
//! - [`analytic_spectra`] — closed-form transition frequencies and their
//!   angular dependences (second order in the reduced field parameters),
//!   plus the analytic slopes used by the sensitivity analysis.
//! - [`geometry`] — defect frames in the lab frame, the four ⟨111⟩
//!   crystallographic alignments with their threefold minor-axis
//!   equivalence, and axis-angle reconstruction of rotations from
//!   (x̂, ẑ) snapshot pairs.
//! - [`protocols`] — simulated measurement protocols: axial scans and the
//!   electric sign probe, spin-echo ac electrometry, transverse trigonal
//!   scans, two-point z/x estimation and the tracking loop, with a
//!   photon-shot-noise model and sensitivity figures.
//! - [`microscopics`] — molecular-orbital sign determination of the
//!   electric susceptibility parameters from the defect geometry.
//!
//! # Units
//!
//! GHz for frequencies, Gauss for magnetic fields, V/µm for electric
//! fields, µs for pulse timings. Angles are radians everywhere inside the
//! library; degree conversion happens only at I/O boundaries.

pub mod analytic_spectra;
pub mod geometry;
pub mod microscopics;
pub mod protocols;
pub mod spin_model;

pub use analytic_spectra::ReducedFieldParams;
pub use geometry::{CrystalAlignment, NVOrientation, RotationStep};
pub use protocols::{EchoConfig, NoiseModel, OrientationEstimate};
pub use spin_model::{FieldConfig, Frame, Hamiltonian3, SpinParams, SpinSpectrum};

/// Physical constants and default parameter values.
pub mod consts {
    /// Zero-field splitting D of the ground-state triplet (GHz).
    pub const ZERO_FIELD_SPLITTING_GHZ: f64 = 2.87;
    /// Electron g-factor of the ground-state spin.
    pub const ELECTRON_G_FACTOR: f64 = 2.003;
    /// Bohr magneton over Planck constant, µ_B/h (MHz per Gauss).
    pub const MU_B_OVER_H_MHZ_PER_GAUSS: f64 = 1.399624;
    /// Axial electric susceptibility k_z (kHz µm/V).
    pub const K_Z_KHZ_UM_PER_V: f64 = 3.5;
    /// Transverse electric susceptibility k_⊥ (kHz µm/V).
    pub const K_PERP_KHZ_UM_PER_V: f64 = 170.0;
}

/// Wrap an angle to the interval (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::wrap_angle;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_range() {
        for k in -20..=20 {
            let a = 0.37 + 1.1 * k as f64;
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI, "wrapped {a} -> {w}");
            assert!(
                ((w - a) / std::f64::consts::TAU).rem_euclid(1.0) < 1e-9
                    || ((w - a) / std::f64::consts::TAU).rem_euclid(1.0) > 1.0 - 1e-9
            );
        }
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
    }
}
