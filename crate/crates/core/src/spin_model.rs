//! Exact ground-state spin model.
//!
//! The S = 1 ground state of the NV⁻ centre in combined electric and
//! magnetic fields is described, in the defect frame, by
//!
//! ```text
//! H = (D + k_z E_z)(S_z² − 2/3) + γₑ S·B − k_⊥ E_x (S_x² − S_y²)
//!     + k_⊥ E_y (S_x S_y + S_y S_x)
//! ```
//!
//! with the basis ordered (m_s = +1, 0, −1). Every operator term is
//! traceless, so trace(H) = 0 for all inputs. The defect frame has ẑ along
//! the major (trigonal) symmetry axis, directed from the nitrogen towards
//! the vacancy, and x̂ towards one of the vacancy's three nearest-neighbour
//! carbons; with that choice both electric susceptibilities are positive
//! (see [`crate::microscopics`]). A global sign flip of the E_y term is
//! equivalent to choosing the mirror-image ŷ axis; the sign above goes
//! with the right-handed (x̂, ŷ, ẑ) convention used throughout.
//!
//! [`eigen_frequencies`] diagonalizes H exactly and is the oracle used to
//! validate all closed-form expressions in [`crate::analytic_spectra`].

use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts;

type C64 = Complex<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum SpinModelError {
    #[error("field configuration is in the {found:?} frame, expected {expected:?}")]
    FrameMismatch { expected: Frame, found: Frame },
    #[error("field configuration contains a non-finite component")]
    NonFiniteField,
    #[error("spin parameter {name} must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },
    #[error("gamma_e = {gamma_e} MHz/G is inconsistent with g_e = {g_e} (expected {expected})")]
    InconsistentGyromagneticRatio {
        gamma_e: f64,
        g_e: f64,
        expected: f64,
    },
    #[error("matrix deviates from Hermitian by {max_dev:e} GHz")]
    NotHermitian { max_dev: f64 },
    #[error("cannot label |0>: two eigenstates overlap the bare m_s = 0 state equally (gap {overlap_gap:e})")]
    DegenerateLabeling { overlap_gap: f64 },
}

/// Physical constants of the ground-state spin.
///
/// `gamma_e` is stored in MHz/G and must equal `g_e · µ_B/h`; use
/// [`SpinParams::new`] to derive it from the g-factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    /// Zero-field splitting D (GHz).
    pub d_ghz: f64,
    /// Gyromagnetic ratio γₑ (MHz/G).
    pub gamma_e_mhz_per_g: f64,
    /// Axial electric susceptibility k_z (kHz µm/V).
    pub k_z_khz_um_per_v: f64,
    /// Transverse electric susceptibility k_⊥ (kHz µm/V).
    pub k_perp_khz_um_per_v: f64,
    /// Dimensionless electron g-factor.
    pub g_e: f64,
}

impl SpinParams {
    /// Build parameters with γₑ derived from the g-factor.
    pub fn new(d_ghz: f64, g_e: f64, k_z_khz_um_per_v: f64, k_perp_khz_um_per_v: f64) -> Self {
        Self {
            d_ghz,
            gamma_e_mhz_per_g: g_e * consts::MU_B_OVER_H_MHZ_PER_GAUSS,
            k_z_khz_um_per_v,
            k_perp_khz_um_per_v,
            g_e,
        }
    }

    pub fn validate(&self) -> Result<(), SpinModelError> {
        for (name, value) in [
            ("D", self.d_ghz),
            ("k_z", self.k_z_khz_um_per_v),
            ("k_perp", self.k_perp_khz_um_per_v),
            ("g_e", self.g_e),
        ] {
            if value.is_nan() || value <= 0.0 {
                return Err(SpinModelError::NonPositiveParam { name, value });
            }
        }
        let expected = self.g_e * consts::MU_B_OVER_H_MHZ_PER_GAUSS;
        if (self.gamma_e_mhz_per_g - expected).abs() > 1e-9 * expected {
            return Err(SpinModelError::InconsistentGyromagneticRatio {
                gamma_e: self.gamma_e_mhz_per_g,
                g_e: self.g_e,
                expected,
            });
        }
        Ok(())
    }

    /// Zeeman coefficient γₑ in GHz per Gauss.
    pub fn zeeman_ghz_per_g(&self) -> f64 {
        self.gamma_e_mhz_per_g * 1e-3
    }

    /// Axial Stark coefficient k_z in GHz per (V/µm).
    pub fn stark_z_ghz_per_v_um(&self) -> f64 {
        self.k_z_khz_um_per_v * 1e-6
    }

    /// Transverse Stark coefficient k_⊥ in GHz per (V/µm).
    pub fn stark_perp_ghz_per_v_um(&self) -> f64 {
        self.k_perp_khz_um_per_v * 1e-6
    }
}

impl Default for SpinParams {
    fn default() -> Self {
        Self::new(
            consts::ZERO_FIELD_SPLITTING_GHZ,
            consts::ELECTRON_G_FACTOR,
            consts::K_Z_KHZ_UM_PER_V,
            consts::K_PERP_KHZ_UM_PER_V,
        )
    }
}

/// Reference frame of a field configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Nv,
}

/// Electric and magnetic field 3-vectors with an explicit frame tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Magnetic field (Gauss).
    pub b_gauss: Vector3<f64>,
    /// Electric field (V/µm).
    pub e_v_per_um: Vector3<f64>,
    pub frame: Frame,
}

impl FieldConfig {
    pub fn new(b_gauss: Vector3<f64>, e_v_per_um: Vector3<f64>, frame: Frame) -> Self {
        Self {
            b_gauss,
            e_v_per_um,
            frame,
        }
    }

    /// Zero fields in the defect frame.
    pub fn zero_nv() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros(), Frame::Nv)
    }

    pub fn validate(&self) -> Result<(), SpinModelError> {
        let finite = self
            .b_gauss
            .iter()
            .chain(self.e_v_per_um.iter())
            .all(|c| c.is_finite());
        if finite {
            Ok(())
        } else {
            Err(SpinModelError::NonFiniteField)
        }
    }

    fn require_frame(&self, expected: Frame) -> Result<(), SpinModelError> {
        if self.frame == expected {
            Ok(())
        } else {
            Err(SpinModelError::FrameMismatch {
                expected,
                found: self.frame,
            })
        }
    }

    /// Transverse magnetic field magnitude B_⊥ = √(B_x² + B_y²).
    pub fn b_perp(&self) -> f64 {
        self.b_gauss.x.hypot(self.b_gauss.y)
    }

    /// Transverse electric field magnitude E_⊥ = √(E_x² + E_y²).
    pub fn e_perp(&self) -> f64 {
        self.e_v_per_um.x.hypot(self.e_v_per_um.y)
    }

    /// Transverse azimuth of B; 0 when B_⊥ vanishes.
    pub fn phi_b(&self) -> f64 {
        if self.b_perp() == 0.0 {
            0.0
        } else {
            self.b_gauss.y.atan2(self.b_gauss.x)
        }
    }

    /// Transverse azimuth of E; 0 when E_⊥ vanishes.
    pub fn phi_e(&self) -> f64 {
        if self.e_perp() == 0.0 {
            0.0
        } else {
            self.e_v_per_um.y.atan2(self.e_v_per_um.x)
        }
    }

    /// Polar angle of B from the major symmetry axis, in [0, π].
    pub fn theta_b(&self) -> f64 {
        self.b_perp().atan2(self.b_gauss.z)
    }

    /// Polar angle of E from the major symmetry axis, in [0, π].
    pub fn theta_e(&self) -> f64 {
        self.e_perp().atan2(self.e_v_per_um.z)
    }
}

/// 3×3 Hermitian Hamiltonian in GHz, basis (m_s = +1, 0, −1).
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian3 {
    pub matrix: Matrix3<C64>,
}

impl Hamiltonian3 {
    /// Largest absolute deviation |H − H†| over all elements.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.matrix.adjoint();
        (self.matrix - adj)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Pair of |0⟩ ↔ |±⟩ transition frequencies (GHz).
///
/// Eigensolver-derived spectra are always sorted, `f_minus ≤ f_plus`.
/// Closed-form spectra that track the analytic ± labels can invert past
/// θ = π/2; use [`SpinSpectrum::sorted`] when only the frequency set matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSpectrum {
    pub f_minus: f64,
    pub f_plus: f64,
}

impl SpinSpectrum {
    pub fn new(f_minus: f64, f_plus: f64) -> Self {
        Self { f_minus, f_plus }
    }

    /// Normalize so that `f_minus ≤ f_plus`.
    pub fn sorted(self) -> Self {
        if self.f_minus <= self.f_plus {
            self
        } else {
            Self {
                f_minus: self.f_plus,
                f_plus: self.f_minus,
            }
        }
    }

    /// f_+ − f_− (signed).
    pub fn splitting(&self) -> f64 {
        self.f_plus - self.f_minus
    }

    /// (f_+ + f_−)/2.
    pub fn center(&self) -> f64 {
        0.5 * (self.f_plus + self.f_minus)
    }
}

/// Dimensionless S = 1 spin operators (S_x, S_y, S_z) in the (+1, 0, −1) basis.
pub fn spin_operators() -> [Matrix3<C64>; 3] {
    let r = 1.0 / 2.0_f64.sqrt();
    let c = |re: f64, im: f64| C64::new(re, im);
    let sx = Matrix3::new(
        c(0.0, 0.0),
        c(r, 0.0),
        c(0.0, 0.0),
        c(r, 0.0),
        c(0.0, 0.0),
        c(r, 0.0),
        c(0.0, 0.0),
        c(r, 0.0),
        c(0.0, 0.0),
    );
    let sy = Matrix3::new(
        c(0.0, 0.0),
        c(0.0, -r),
        c(0.0, 0.0),
        c(0.0, r),
        c(0.0, 0.0),
        c(0.0, -r),
        c(0.0, 0.0),
        c(0.0, r),
        c(0.0, 0.0),
    );
    let sz = Matrix3::new(
        c(1.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(-1.0, 0.0),
    );
    [sx, sy, sz]
}

/// Assemble the ground-state Hamiltonian from fields given in the defect frame.
///
/// Unit bookkeeping: γₑ·B and k·E terms both land in GHz.
pub fn build_hamiltonian(
    params: &SpinParams,
    fields: &FieldConfig,
) -> Result<Hamiltonian3, SpinModelError> {
    params.validate()?;
    fields.validate()?;
    fields.require_frame(Frame::Nv)?;

    let g = params.zeeman_ghz_per_g();
    let kz = params.stark_z_ghz_per_v_um();
    let kp = params.stark_perp_ghz_per_v_um();
    let b = fields.b_gauss;
    let e = fields.e_v_per_um;

    let dz = params.d_ghz + kz * e.z;
    let r = 1.0 / 2.0_f64.sqrt();
    let c = |re: f64, im: f64| C64::new(re, im);

    // Off-diagonal structure in the (+1, 0, -1) basis:
    //   <+1|H|0>  = gamma (B_x - i B_y)/sqrt(2)      (same for <0|H|-1>)
    //   <+1|H|-1> = -k_perp (E_x + i E_y)
    let zee = c(g * b.x * r, -g * b.y * r);
    let stark = c(-kp * e.x, -kp * e.y);
    let matrix = Matrix3::new(
        c(dz / 3.0 + g * b.z, 0.0),
        zee,
        stark,
        zee.conj(),
        c(-2.0 * dz / 3.0, 0.0),
        zee,
        stark.conj(),
        zee.conj(),
        c(dz / 3.0 - g * b.z, 0.0),
    );
    Ok(Hamiltonian3 { matrix })
}

/// Tolerance below which two |0⟩ overlaps are considered indistinguishable.
const LABEL_DEGENERACY_TOL: f64 = 1e-9;

/// Exact transition frequencies by Hermitian diagonalization.
///
/// The eigenstate with the largest |⟨m_s = 0|ψ⟩|² is labelled |0⟩ and the
/// two transition frequencies to the remaining eigenstates are returned
/// sorted ascending. Valid in the perturbative regime where the |0⟩ label
/// is unambiguous; two equal overlaps raise
/// [`SpinModelError::DegenerateLabeling`].
pub fn eigen_frequencies(h: &Hamiltonian3) -> Result<SpinSpectrum, SpinModelError> {
    let defect = h.hermiticity_defect();
    if defect > 1e-12 {
        return Err(SpinModelError::NotHermitian { max_dev: defect });
    }
    let eig = h.matrix.symmetric_eigen();
    // overlap of each eigenvector with the bare m_s = 0 basis vector (row 1)
    let overlaps: Vec<f64> = (0..3)
        .map(|i| eig.eigenvectors[(1, i)].norm_sqr())
        .collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| overlaps[b].partial_cmp(&overlaps[a]).unwrap());
    let gap = overlaps[order[0]] - overlaps[order[1]];
    if gap < LABEL_DEGENERACY_TOL {
        return Err(SpinModelError::DegenerateLabeling { overlap_gap: gap });
    }
    let e0 = eig.eigenvalues[order[0]];
    let f_a = eig.eigenvalues[order[1]] - e0;
    let f_b = eig.eigenvalues[order[2]] - e0;
    Ok(SpinSpectrum::new(f_a, f_b).sorted())
}

/// Eigenvalues within this gap are treated as degenerate when labelling.
pub const EIGENVALUE_DEGENERACY_TOL_GHZ: f64 = 1e-9;
