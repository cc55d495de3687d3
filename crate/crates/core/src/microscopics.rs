//! Molecular-orbital sign determination of the electric susceptibilities.
//!
//! The defect orbitals are approximated as linear combinations of the
//! dangling sp³ orbitals of the vacancy's neighbours, and the electric
//! dipole and spin-spin integrals are evaluated semi-classically by
//! replacing orbital densities with point charges at the orbitals'
//! expected positions (the "lobes"). The module's contract is sign
//! determination plus internal consistency of the two spin-spin forms —
//! magnitudes are reported as proxy values (e·Å and assembled units), not
//! quantitative susceptibility predictions.
//!
//! Geometry convention: vacancy at the origin, ẑ from the nitrogen towards
//! the vacancy (nitrogen at −L_N ẑ), carbon 1 in the xz-plane on the +x
//! side. With this convention all reported signs come out positive.
//! Normalization constants of the orbital combinations cancel in every
//! sign conclusion and are not represented.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MicroscopicsError {
    #[error("geometry length {name} must be positive, got {value}")]
    NonPositiveLength { name: &'static str, value: f64 },
    #[error("lobe offset {name} = {offset} must be smaller than the vacancy distance {distance}")]
    LobeBeyondNucleus {
        name: &'static str,
        offset: f64,
        distance: f64,
    },
}

/// Nuclear geometry and orbital parameters of the defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectGeometry {
    /// Carbon lobe offset towards the vacancy (Å).
    pub l_c_angstrom: f64,
    /// Nitrogen lobe offset towards the vacancy (Å).
    pub l_n_angstrom: f64,
    /// Vacancy–carbon distance (Å).
    pub big_l_c_angstrom: f64,
    /// Vacancy–nitrogen distance (Å).
    pub big_l_n_angstrom: f64,
    /// Dimensionless nitrogen-orbital admixture coefficient λ.
    pub lambda_mix: f64,
    /// Triplet energy separation E_o (eV).
    pub e_o_ev: f64,
}

impl Default for DefectGeometry {
    fn default() -> Self {
        Self {
            l_c_angstrom: 0.31,
            l_n_angstrom: 0.27,
            big_l_c_angstrom: 1.65,
            big_l_n_angstrom: 1.68,
            lambda_mix: 1.0,
            e_o_ev: 1.945,
        }
    }
}

impl DefectGeometry {
    pub fn validate(&self) -> Result<(), MicroscopicsError> {
        for (name, value) in [
            ("l_C", self.l_c_angstrom),
            ("l_N", self.l_n_angstrom),
            ("L_C", self.big_l_c_angstrom),
            ("L_N", self.big_l_n_angstrom),
            ("E_o", self.e_o_ev),
        ] {
            if value.is_nan() || value <= 0.0 {
                return Err(MicroscopicsError::NonPositiveLength { name, value });
            }
        }
        if self.l_c_angstrom >= self.big_l_c_angstrom {
            return Err(MicroscopicsError::LobeBeyondNucleus {
                name: "l_C",
                offset: self.l_c_angstrom,
                distance: self.big_l_c_angstrom,
            });
        }
        if self.l_n_angstrom >= self.big_l_n_angstrom {
            return Err(MicroscopicsError::LobeBeyondNucleus {
                name: "l_N",
                offset: self.l_n_angstrom,
                distance: self.big_l_n_angstrom,
            });
        }
        Ok(())
    }
}

/// Expected positions of the four lobe charges (Å, defect frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobePositions {
    /// Carbon lobes ⟨r⟩₁,₂,₃; carbon 1 in the xz-plane at +x.
    pub carbons: [Vector3<f64>; 3],
    /// Nitrogen lobe ⟨r⟩_n on the −z axis.
    pub nitrogen: Vector3<f64>,
}

/// Lobe positions for a valid geometry.
///
/// Carbons sit tetrahedrally at polar angle arccos(1/3) from +ẑ and are
/// displaced by l_C towards the vacancy (the origin); the nitrogen lobe is
/// displaced by l_N along +ẑ from the nitrogen at −L_N ẑ.
pub fn expected_positions(geom: &DefectGeometry) -> Result<LobePositions, MicroscopicsError> {
    geom.validate()?;
    let radial = geom.big_l_c_angstrom - geom.l_c_angstrom;
    let cos_polar = 1.0 / 3.0;
    let sin_polar = (8.0_f64).sqrt() / 3.0;
    let carbon = |azimuth: f64| {
        Vector3::new(
            radial * sin_polar * azimuth.cos(),
            radial * sin_polar * azimuth.sin(),
            radial * cos_polar,
        )
    };
    let third = 2.0 * std::f64::consts::FRAC_PI_3;
    Ok(LobePositions {
        carbons: [carbon(0.0), carbon(third), carbon(2.0 * third)],
        nitrogen: Vector3::new(0.0, 0.0, -(geom.big_l_n_angstrom - geom.l_n_angstrom)),
    })
}

/// Transverse and axial dipole proxies (e·Å) from lobe positions.
///
/// d_⊥ ∝ ⟨x⟩₁ and d_z ∝ λ²(⟨z⟩₁ − ⟨z⟩_n); the prefactors keep the e/3√2
/// and λ²/(3+λ²) structure of the orbital expansion so signs and λ-scaling
/// are faithful.
pub fn dipole_proxies_from_positions(lobes: &LobePositions, lambda_mix: f64) -> (f64, f64) {
    let d_perp = lobes.carbons[0].x / (3.0 * 2.0_f64.sqrt());
    let lam2 = lambda_mix * lambda_mix;
    let d_z = lam2 / (3.0 + lam2) * (lobes.carbons[0].z - lobes.nitrogen.z);
    (d_perp, d_z)
}

/// Electric dipole proxies for a geometry; both positive under the adopted
/// convention.
pub fn dipole_signs(geom: &DefectGeometry) -> Result<(f64, f64), MicroscopicsError> {
    let lobes = expected_positions(geom)?;
    Ok(dipole_proxies_from_positions(&lobes, geom.lambda_mix))
}

fn pair_integral(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let d = b - a;
    (d.x * d.x - d.y * d.y) / d.norm().powi(5)
}

/// Spin-spin proxy via the lobe-pair difference: the carbon-1/2 direct
/// integral minus the carbon-2/3 one, with the 16√2/3 expansion weight.
pub fn spin_spin_pair_form(lobes: &LobePositions) -> f64 {
    16.0 * 2.0_f64.sqrt() / 3.0
        * (pair_integral(&lobes.carbons[0], &lobes.carbons[1])
            - pair_integral(&lobes.carbons[1], &lobes.carbons[2]))
}

/// Spin-spin proxy via the closed form (8/3)√(2/3)·⟨x⟩₁⁻³.
///
/// Identical to [`spin_spin_pair_form`] for the tetrahedral geometry; the
/// shared 3/32π prefactor of both forms is dropped from the proxy.
pub fn spin_spin_closed_form(lobes: &LobePositions) -> f64 {
    let x1 = lobes.carbons[0].x.abs();
    8.0 / 3.0 * (2.0_f64 / 3.0).sqrt() / x1.powi(3)
}

/// Semi-classical spin-spin proxy D_E (assembled units, Å⁻³ scale).
///
/// Evaluates both printed forms and asserts their agreement before
/// returning the pair-form value.
pub fn spin_spin_semiclassical(geom: &DefectGeometry) -> Result<f64, MicroscopicsError> {
    let lobes = expected_positions(geom)?;
    let pair = spin_spin_pair_form(&lobes);
    let closed = spin_spin_closed_form(&lobes);
    debug_assert!(
        ((pair - closed) / closed).abs() < 1e-12,
        "pair {pair} vs closed {closed}"
    );
    Ok(pair)
}

/// Signs (and proxy magnitudes) of the electric susceptibility parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityReport {
    /// Transverse dipole proxy (e·Å).
    pub d_perp: f64,
    /// Axial dipole proxy (e·Å).
    pub d_z: f64,
    /// Spin-spin proxy (assembled units).
    pub d_e: f64,
    /// k_⊥ magnitude proxy 8√2 d_⊥ D_E / E_o (assembled units).
    pub k_perp_proxy: f64,
    /// sign(d_⊥ · D_E): the spin-coupling weight of k_z is positive, so
    /// only the dipole and spin-spin signs matter.
    pub k_perp_sign: i8,
    pub k_z_sign: i8,
    /// Coordinate convention the signs refer to.
    pub convention: String,
}

/// Assemble the susceptibility sign report from the three integrals.
pub fn assemble_susceptibility(
    geom: &DefectGeometry,
    d_perp: f64,
    d_z: f64,
    d_e: f64,
) -> SusceptibilityReport {
    SusceptibilityReport {
        d_perp,
        d_z,
        d_e,
        k_perp_proxy: 8.0 * 2.0_f64.sqrt() * d_perp * d_e / geom.e_o_ev,
        k_perp_sign: if d_perp * d_e >= 0.0 { 1 } else { -1 },
        k_z_sign: if d_z >= 0.0 { 1 } else { -1 },
        convention: "z from nitrogen towards vacancy; x towards carbon 1".to_string(),
    }
}

/// Full report for a geometry.
pub fn susceptibility_report(
    geom: &DefectGeometry,
) -> Result<SusceptibilityReport, MicroscopicsError> {
    let (d_perp, d_z) = dipole_signs(geom)?;
    let d_e = spin_spin_semiclassical(geom)?;
    Ok(assemble_susceptibility(geom, d_perp, d_z, d_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn lobe_geometry() {
        let lobes = expected_positions(&DefectGeometry::default()).unwrap();
        // carbon lobes share a z height above the vacancy
        assert!((lobes.carbons[0].z - lobes.carbons[1].z).abs() < 1e-15);
        assert!((lobes.carbons[1].z - lobes.carbons[2].z).abs() < 1e-15);
        assert!(lobes.carbons[0].z > 0.0);
        // carbon 1 on the +x side of the xz-plane
        assert!(lobes.carbons[0].x > 0.0);
        assert!(lobes.carbons[0].y.abs() < 1e-15);
        // mutual azimuths 120 deg
        for i in 0..3 {
            let a = lobes.carbons[i];
            let b = lobes.carbons[(i + 1) % 3];
            let da = b.y.atan2(b.x) - a.y.atan2(a.x);
            let da = crate::wrap_angle(da);
            assert!((da.abs() - 2.0 * FRAC_PI_3).abs() < 1e-12);
        }
        // nitrogen lobe below the vacancy
        assert!(lobes.nitrogen.z < 0.0);
    }

    #[test]
    fn dipoles_positive_and_lambda_scaling() {
        let geom = DefectGeometry::default();
        let (d_perp, d_z) = dipole_signs(&geom).unwrap();
        assert!(d_perp > 0.0);
        assert!(d_z > 0.0);

        // nitrogen admixture gone: axial dipole vanishes
        let no_mix = DefectGeometry {
            lambda_mix: 0.0,
            ..geom
        };
        let (_, d_z0) = dipole_signs(&no_mix).unwrap();
        assert_eq!(d_z0, 0.0);

        // full inversion flips both linear dipoles
        let lobes = expected_positions(&geom).unwrap();
        let inverted = LobePositions {
            carbons: [-lobes.carbons[0], -lobes.carbons[1], -lobes.carbons[2]],
            nitrogen: -lobes.nitrogen,
        };
        let (ip, iz) = dipole_proxies_from_positions(&inverted, geom.lambda_mix);
        assert!((ip + d_perp).abs() < 1e-15);
        assert!((iz + d_z).abs() < 1e-15);
    }

    #[test]
    fn spin_spin_forms_agree_and_scale() {
        let geom = DefectGeometry::default();
        let lobes = expected_positions(&geom).unwrap();
        let pair = spin_spin_pair_form(&lobes);
        let closed = spin_spin_closed_form(&lobes);
        assert!(pair > 0.0);
        assert!(((pair - closed) / closed).abs() < 1e-12);

        // halving the lobe radius multiplies D_E by 8 (inverse-cube law)
        let radial = geom.big_l_c_angstrom - geom.l_c_angstrom;
        let halved = DefectGeometry {
            l_c_angstrom: geom.big_l_c_angstrom - radial / 2.0,
            ..geom
        };
        let d8 = spin_spin_semiclassical(&halved).unwrap();
        assert!((d8 / pair - 8.0).abs() < 1e-9);
    }

    #[test]
    fn spin_spin_invariances() {
        let geom = DefectGeometry::default();
        let lobes = expected_positions(&geom).unwrap();
        let base = spin_spin_pair_form(&lobes);

        // z-mirror: d_z flips, D_E untouched (quadratic in x, y only)
        let mirror = |v: Vector3<f64>| Vector3::new(v.x, v.y, -v.z);
        let mirrored = LobePositions {
            carbons: [
                mirror(lobes.carbons[0]),
                mirror(lobes.carbons[1]),
                mirror(lobes.carbons[2]),
            ],
            nitrogen: mirror(lobes.nitrogen),
        };
        assert!((spin_spin_pair_form(&mirrored) - base).abs() < 1e-15 * base.abs());
        let (_, dz_m) = dipole_proxies_from_positions(&mirrored, geom.lambda_mix);
        let (_, dz) = dipole_proxies_from_positions(&lobes, geom.lambda_mix);
        assert!((dz_m + dz).abs() < 1e-15);

        // C3 relabelling c1 -> c2 with the frame co-rotated: identical signs
        let rot = |v: Vector3<f64>| {
            let (s, c) = (2.0 * FRAC_PI_3).sin_cos();
            Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
        };
        let relabelled = LobePositions {
            carbons: [
                rot(lobes.carbons[1]),
                rot(lobes.carbons[2]),
                rot(lobes.carbons[0]),
            ],
            nitrogen: rot(lobes.nitrogen),
        };
        assert!((relabelled.carbons[0] - lobes.carbons[0]).norm() < 1e-12);
        assert!((spin_spin_pair_form(&relabelled) - base).abs() < 1e-12 * base.abs());
        let (dp_r, dz_r) = dipole_proxies_from_positions(&relabelled, geom.lambda_mix);
        let (dp, _) = dipole_proxies_from_positions(&lobes, geom.lambda_mix);
        assert!((dp_r - dp).abs() < 1e-12);
        assert!((dz_r - dz).abs() < 1e-12);
    }

    #[test]
    fn susceptibility_signs() {
        let geom = DefectGeometry::default();
        let report = susceptibility_report(&geom).unwrap();
        assert!(report.d_perp > 0.0 && report.d_z > 0.0 && report.d_e > 0.0);
        assert_eq!(report.k_perp_sign, 1);
        assert_eq!(report.k_z_sign, 1);
        assert!(report.k_perp_proxy > 0.0);

        // sign flips propagate through the assembly as the formulas dictate
        let flipped_dz = assemble_susceptibility(&geom, report.d_perp, -report.d_z, report.d_e);
        assert_eq!(flipped_dz.k_z_sign, -1);
        assert_eq!(flipped_dz.k_perp_sign, 1);
        let flipped_de = assemble_susceptibility(&geom, report.d_perp, report.d_z, -report.d_e);
        assert_eq!(flipped_de.k_perp_sign, -1);
        assert_eq!(flipped_de.k_z_sign, 1);
    }

    #[test]
    fn geometry_validation() {
        let mut geom = DefectGeometry::default();
        geom.l_c_angstrom = 2.0;
        assert!(matches!(
            expected_positions(&geom),
            Err(MicroscopicsError::LobeBeyondNucleus { .. })
        ));
        let mut neg = DefectGeometry::default();
        neg.big_l_n_angstrom = -1.0;
        assert!(matches!(
            neg.validate(),
            Err(MicroscopicsError::NonPositiveLength { .. })
        ));
    }
}
