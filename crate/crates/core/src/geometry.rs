//! Defect frames, crystallographic alignments and rotation reconstruction.
//!
//! An [`NVOrientation`] is the orthonormal pair (x̂, ẑ) of the defect's
//! minor and major symmetry axes expressed in the lab frame; ŷ = ẑ × x̂
//! completes a right-handed triad. Orientations are physically equivalent
//! under 120° rotations of x̂ about ẑ (trigonal symmetry), which
//! [`c3_equivalent`] tests.
//!
//! [`reconstruct_rotation`] recovers the axis-angle rotation linking two
//! orientation snapshots. The difference-cross-product axis estimator
//!
//! ```text
//! n = (ẑ₁ − ẑ₀) × (x̂₁ − x̂₀) = 2(1 − cos β)(n̂·ŷ₀) n̂
//! ```
//!
//! is exact up to a data-dependent sign and degenerates when β → 0 or when
//! the rotation axis is orthogonal to the prior ŷ. The companion scalar
//!
//! ```text
//! x̂₁·x̂₀ + ẑ₁·ẑ₀ + (x̂₁·x̂₀)(ẑ₁·ẑ₀) − (x̂₀·ẑ₁)(ẑ₀·x̂₁) = tr R = 1 + 2cos β
//! ```
//!
//! equals the rotation-matrix trace identically (Lagrange identity on
//! ŷ₀·ŷ₁), so the angle is recovered as acos((expr − 1)/2). Every result
//! is verified against the snapshot pair; when the estimator's sign is
//! wrong or degenerate the exact triad solver R = T₁T₀ᵀ is used instead
//! and the step records which path produced it. See `docs/derivations.md`.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spin_model::{FieldConfig, Frame};

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("axes are not an orthonormal pair: {detail}")]
    NotOrthonormal { detail: String },
    #[error("zero vector where a direction is required")]
    ZeroVector,
    #[error("fields are in the {found:?} frame, expected {expected:?}")]
    FrameMismatch { expected: Frame, found: Frame },
    #[error("degenerate rotation step: unnormalized axis below threshold")]
    DegenerateStep { fallback: Option<RotationStep> },
    #[error("invalid crystal alignment: family {family}, minor index {minor_index}")]
    InvalidAlignment { family: u8, minor_index: u8 },
}

const ORTHONORMAL_TOL: f64 = 1e-12;
const C3_TOL: f64 = 1e-9;
/// Threshold on |(ẑ₁−ẑ₀)×(x̂₁−x̂₀)| below which a step is degenerate.
const AXIS_DEGENERACY_TOL: f64 = 1e-8;
/// Residual allowed when checking that a reconstructed rotation maps the
/// prior snapshot onto the posterior one.
const RECONSTRUCTION_RESIDUAL_TOL: f64 = 1e-9;

/// Orthonormal defect frame (x̂, ẑ) in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NVOrientation {
    x_axis: Vector3<f64>,
    z_axis: Vector3<f64>,
}

impl NVOrientation {
    pub fn new(x_axis: Vector3<f64>, z_axis: Vector3<f64>) -> Result<Self, GeometryError> {
        let nx = (x_axis.norm() - 1.0).abs();
        let nz = (z_axis.norm() - 1.0).abs();
        let dot = x_axis.dot(&z_axis).abs();
        if nx > ORTHONORMAL_TOL || nz > ORTHONORMAL_TOL || dot > ORTHONORMAL_TOL {
            return Err(GeometryError::NotOrthonormal {
                detail: format!("|x|-1 = {nx:e}, |z|-1 = {nz:e}, x.z = {dot:e}"),
            });
        }
        Ok(Self { x_axis, z_axis })
    }

    /// Build from possibly imperfect axes: ẑ is normalized, x̂ is projected
    /// into the plane orthogonal to ẑ and normalized.
    pub fn orthonormalized(
        x_axis: Vector3<f64>,
        z_axis: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        let z = Unit::try_new(z_axis, 1e-12).ok_or(GeometryError::ZeroVector)?;
        let x_raw = x_axis - z.as_ref() * x_axis.dot(&z);
        let x = Unit::try_new(x_raw, 1e-12).ok_or(GeometryError::ZeroVector)?;
        Ok(Self {
            x_axis: x.into_inner(),
            z_axis: z.into_inner(),
        })
    }

    /// Lab frame identity: x̂ = x̂_lab, ẑ = ẑ_lab.
    pub fn identity() -> Self {
        Self {
            x_axis: Vector3::x(),
            z_axis: Vector3::z(),
        }
    }

    pub fn x_axis(&self) -> Vector3<f64> {
        self.x_axis
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.z_axis
    }

    /// ŷ = ẑ × x̂, completing the right-handed triad.
    pub fn y_axis(&self) -> Vector3<f64> {
        self.z_axis.cross(&self.x_axis)
    }

    /// Rotation matrix whose columns are (x̂, ŷ, ẑ).
    pub fn triad(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.x_axis, self.y_axis(), self.z_axis])
    }

    /// Misalignment angle (rad) between two frames: the angle of the
    /// rotation mapping one triad onto the other.
    pub fn frame_angle_to(&self, other: &NVOrientation) -> f64 {
        let rel = other.triad() * self.triad().transpose();
        let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        cos.acos()
    }
}

/// One of the four ⟨111⟩ major-axis families with one of its three
/// equivalent minor axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrystalAlignment {
    pub family: u8,
    pub minor_index: u8,
}

impl CrystalAlignment {
    pub fn new(family: u8, minor_index: u8) -> Result<Self, GeometryError> {
        if family < 4 && minor_index < 3 {
            Ok(Self {
                family,
                minor_index,
            })
        } else {
            Err(GeometryError::InvalidAlignment {
                family,
                minor_index,
            })
        }
    }

    /// Index into the list returned by [`crystallographic_orientations`].
    pub fn index(&self) -> usize {
        self.family as usize * 3 + self.minor_index as usize
    }
}

/// Axis-angle rotation step between orientation snapshots, angle in [0, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationStep {
    pub axis: Vector3<f64>,
    pub angle: f64,
    pub method: ReconstructionPath,
}

/// Which solver produced a reconstructed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionPath {
    /// Difference-cross-product axis with trace-derived angle.
    CrossProduct,
    /// Exact triad alignment R = T₁ T₀ᵀ.
    TriadFallback,
}

/// Project lab-frame fields onto the defect frame.
pub fn field_to_nv(
    fields: &FieldConfig,
    orient: &NVOrientation,
) -> Result<FieldConfig, GeometryError> {
    if fields.frame != Frame::Lab {
        return Err(GeometryError::FrameMismatch {
            expected: Frame::Lab,
            found: fields.frame,
        });
    }
    let project = |v: &Vector3<f64>| {
        Vector3::new(
            v.dot(&orient.x_axis),
            v.dot(&orient.y_axis()),
            v.dot(&orient.z_axis),
        )
    };
    Ok(FieldConfig::new(
        project(&fields.b_gauss),
        project(&fields.e_v_per_um),
        Frame::Nv,
    ))
}

/// Inverse of [`field_to_nv`]: express defect-frame fields in the lab frame.
pub fn nv_to_lab(
    fields: &FieldConfig,
    orient: &NVOrientation,
) -> Result<FieldConfig, GeometryError> {
    if fields.frame != Frame::Nv {
        return Err(GeometryError::FrameMismatch {
            expected: Frame::Nv,
            found: fields.frame,
        });
    }
    let lift = |v: &Vector3<f64>| orient.x_axis * v.x + orient.y_axis() * v.y + orient.z_axis * v.z;
    Ok(FieldConfig::new(
        lift(&fields.b_gauss),
        lift(&fields.e_v_per_um),
        Frame::Lab,
    ))
}

/// True iff the two orientations share ẑ and their x̂ axes differ by a
/// 0°, 120° or 240° rotation about it.
pub fn c3_equivalent(a: &NVOrientation, b: &NVOrientation) -> bool {
    if (a.z_axis - b.z_axis).norm() > C3_TOL {
        return false;
    }
    let axis = Unit::new_normalize(a.z_axis);
    (0..3).any(|k| {
        let rot = Rotation3::from_axis_angle(&axis, k as f64 * 2.0 * std::f64::consts::FRAC_PI_3);
        (rot * a.x_axis - b.x_axis).norm() <= C3_TOL
    })
}

fn axis_angle(rot: &Rotation3<f64>) -> Option<(Unit<Vector3<f64>>, f64)> {
    let m = rot.matrix();
    let asym = Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    );
    let sin_b = 0.5 * asym.norm();
    let cos_b = 0.5 * (m.trace() - 1.0);
    let angle = sin_b.atan2(cos_b);
    if angle < 1e-12 {
        return None;
    }
    if sin_b > 1e-6 {
        return Some((Unit::new_normalize(asym), angle));
    }
    // near beta = pi: R + I = 2(1-cos)^-1-ish rank-one part 2 n n^T
    let sym = m + Matrix3::identity();
    let col = (0..3)
        .max_by(|&i, &j| sym[(i, i)].partial_cmp(&sym[(j, j)]).unwrap())
        .unwrap();
    let mut n = sym.column(col).into_owned();
    if n.norm() < 1e-12 {
        return None;
    }
    n.normalize_mut();
    if n.dot(&asym) < 0.0 {
        n = -n;
    }
    Some((Unit::new_normalize(n), angle))
}

fn triad_solve(prior: &NVOrientation, posterior: &NVOrientation) -> Option<RotationStep> {
    let r = posterior.triad() * prior.triad().transpose();
    let rot = Rotation3::from_matrix_unchecked(r);
    axis_angle(&rot).map(|(axis, angle)| RotationStep {
        axis: axis.into_inner(),
        angle,
        method: ReconstructionPath::TriadFallback,
    })
}

fn maps_snapshots(step: &RotationStep, prior: &NVOrientation, posterior: &NVOrientation) -> bool {
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(step.axis), step.angle);
    (rot * prior.x_axis - posterior.x_axis).norm() <= RECONSTRUCTION_RESIDUAL_TOL
        && (rot * prior.z_axis - posterior.z_axis).norm() <= RECONSTRUCTION_RESIDUAL_TOL
}

/// Reconstruct the axis-angle rotation carrying `prior` onto `posterior`.
///
/// The cross-product estimate is tried first; its axis sign is data
/// dependent, so the result is accepted only if it actually maps the prior
/// snapshot onto the posterior one to 1e−9. Otherwise the exact triad
/// solver is used and the step is marked [`ReconstructionPath::TriadFallback`].
/// Steps whose unnormalized axis is shorter than 1e−8 (identity rotations,
/// or axes orthogonal to the prior ŷ) are reported as degenerate, carrying
/// the triad solution when one exists.
pub fn reconstruct_rotation(
    prior: &NVOrientation,
    posterior: &NVOrientation,
) -> Result<RotationStep, GeometryError> {
    let dz = posterior.z_axis - prior.z_axis;
    let dx = posterior.x_axis - prior.x_axis;
    let n_raw = dz.cross(&dx);

    let dots = posterior.x_axis.dot(&prior.x_axis)
        + posterior.z_axis.dot(&prior.z_axis)
        + posterior.x_axis.dot(&prior.x_axis) * posterior.z_axis.dot(&prior.z_axis)
        - prior.x_axis.dot(&posterior.z_axis) * prior.z_axis.dot(&posterior.x_axis);
    // the dot-product combination equals tr R = 1 + 2 cos(beta)
    let cos_beta = ((dots - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = cos_beta.acos();

    if n_raw.norm() < AXIS_DEGENERACY_TOL {
        return Err(GeometryError::DegenerateStep {
            fallback: triad_solve(prior, posterior),
        });
    }

    let step = RotationStep {
        axis: n_raw.normalize(),
        angle,
        method: ReconstructionPath::CrossProduct,
    };
    if maps_snapshots(&step, prior, posterior) {
        return Ok(step);
    }
    // wrong axis sign (axis . y_prior < 0) or accumulated error: exact solve
    match triad_solve(prior, posterior) {
        Some(exact) if maps_snapshots(&exact, prior, posterior) => Ok(exact),
        fallback => Err(GeometryError::DegenerateStep { fallback }),
    }
}

/// Apply an axis-angle step (right-hand rule) to both frame axes.
pub fn rotate_orientation(orient: &NVOrientation, step: &RotationStep) -> NVOrientation {
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(step.axis), step.angle);
    NVOrientation {
        x_axis: rot * orient.x_axis,
        z_axis: rot * orient.z_axis,
    }
}

/// The four ⟨111⟩ major-axis directions (cubic crystal coordinates).
fn tetrahedral_axes() -> [Vector3<f64>; 4] {
    let s = 1.0 / 3.0_f64.sqrt();
    [
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ]
}

/// All 12 defect orientations (4 ⟨111⟩ families × 3 minor axes) expressed
/// in a lab frame whose z axis equals the given surface normal.
///
/// The normal is given in the same cubic crystal coordinates as the ⟨111⟩
/// set; for a (111)-type surface exactly one family is parallel to it.
/// Minor axes point from the major axis towards the vacancy's three
/// nearest-neighbour carbons.
pub fn crystallographic_orientations(
    surface_normal: Vector3<f64>,
) -> Result<Vec<NVOrientation>, GeometryError> {
    let normal = Unit::try_new(surface_normal, 1e-12).ok_or(GeometryError::ZeroVector)?;
    // deterministic lab basis with z along the surface normal
    let seed = if normal.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let lab_x = Unit::new_normalize(seed - normal.as_ref() * seed.dot(&normal));
    let lab_y = normal.cross(&lab_x);
    let to_lab = |v: &Vector3<f64>| Vector3::new(v.dot(&lab_x), v.dot(&lab_y), v.dot(&normal));

    let axes = tetrahedral_axes();
    let mut out = Vec::with_capacity(12);
    for (k, z_dir) in axes.iter().enumerate() {
        // carbons sit along the inverted directions of the other families
        for j in (0..4).filter(|&j| j != k) {
            let carbon = -axes[j];
            let x_raw = carbon - z_dir * carbon.dot(z_dir);
            let x_dir = x_raw.normalize();
            out.push(
                NVOrientation::new(to_lab(&x_dir), to_lab(z_dir)).expect("constructed orthonormal"),
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn random_unit(rng: &mut ChaCha12Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 1e-3 {
                return v.normalize();
            }
        }
    }

    fn random_orientation(rng: &mut ChaCha12Rng) -> NVOrientation {
        let z = random_unit(rng);
        let x = NVOrientation::orthonormalized(random_unit(rng), z).unwrap();
        x
    }

    #[test]
    fn orientation_validation() {
        assert!(NVOrientation::new(Vector3::x(), Vector3::z()).is_ok());
        assert!(matches!(
            NVOrientation::new(Vector3::x() * 1.1, Vector3::z()),
            Err(GeometryError::NotOrthonormal { .. })
        ));
        assert!(matches!(
            NVOrientation::new(Vector3::x(), Vector3::new(0.6, 0.0, 0.8)),
            Err(GeometryError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn field_transform_round_trip_and_isometry() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let lab = |b, e| FieldConfig::new(b, e, Frame::Lab);

        // identity orientation leaves components unchanged
        let f = lab(Vector3::new(1.0, 2.0, 3.0), Vector3::new(-0.5, 0.25, 0.0));
        let g = field_to_nv(&f, &NVOrientation::identity()).unwrap();
        assert!((g.b_gauss - f.b_gauss).norm() < 1e-15);
        assert!((g.e_v_per_um - f.e_v_per_um).norm() < 1e-15);

        // aligned z maps B onto (0, 0, |B|)
        let aligned = field_to_nv(
            &lab(Vector3::z() * 7.0, Vector3::zeros()),
            &NVOrientation::identity(),
        )
        .unwrap();
        assert!((aligned.b_gauss - Vector3::new(0.0, 0.0, 7.0)).norm() < 1e-15);

        for _ in 0..1000 {
            let orient = random_orientation(&mut rng);
            let f = lab(
                Vector3::new(
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-50.0..50.0),
                ),
                Vector3::new(
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ),
            );
            let nv = field_to_nv(&f, &orient).unwrap();
            assert!((nv.b_gauss.norm() - f.b_gauss.norm()).abs() < 1e-12);
            assert!((nv.e_v_per_um.norm() - f.e_v_per_um.norm()).abs() < 1e-12);
            let back = nv_to_lab(&nv, &orient).unwrap();
            assert!((back.b_gauss - f.b_gauss).norm() < 1e-12);
            assert!((back.e_v_per_um - f.e_v_per_um).norm() < 1e-12);
        }

        let wrong = FieldConfig::zero_nv();
        assert!(matches!(
            field_to_nv(&wrong, &NVOrientation::identity()),
            Err(GeometryError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn c3_equivalence_classes() {
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        let a = random_orientation(&mut rng);
        assert!(c3_equivalent(&a, &a));

        let axis = Unit::new_normalize(a.z_axis());
        let spin = |deg: f64| {
            let rot = Rotation3::from_axis_angle(&axis, deg.to_radians());
            NVOrientation::new(rot * a.x_axis(), a.z_axis()).unwrap()
        };
        assert!(c3_equivalent(&a, &spin(120.0)));
        assert!(c3_equivalent(&a, &spin(240.0)));
        assert!(!c3_equivalent(&a, &spin(60.0)));

        // reflexive, symmetric, transitive over a fuzzed sample
        for _ in 0..100 {
            let o = random_orientation(&mut rng);
            let k1 = rng.random_range(0..3) as f64;
            let k2 = rng.random_range(0..3) as f64;
            let ax = Unit::new_normalize(o.z_axis());
            let r1 = Rotation3::from_axis_angle(&ax, k1 * 2.0 * FRAC_PI_3);
            let r2 = Rotation3::from_axis_angle(&ax, k2 * 2.0 * FRAC_PI_3);
            let b = NVOrientation::new(r1 * o.x_axis(), o.z_axis()).unwrap();
            let c = NVOrientation::new(r2 * o.x_axis(), o.z_axis()).unwrap();
            assert!(c3_equivalent(&o, &b) && c3_equivalent(&b, &o));
            assert!(c3_equivalent(&b, &c));
            assert!(c3_equivalent(&o, &c));
        }
    }

    #[test]
    fn reconstruct_known_rotation() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let prior = random_orientation(&mut rng);
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::z()), 2.0 * FRAC_PI_3);
        let posterior = NVOrientation::new(rot * prior.x_axis(), rot * prior.z_axis()).unwrap();
        let step = reconstruct_rotation(&prior, &posterior).unwrap();
        assert!((step.angle - 2.0 * FRAC_PI_3).abs() < 1e-12);
        assert!(
            (step.axis - Vector3::z()).norm() < 1e-9 || (step.axis + Vector3::z()).norm() < 1e-9
        );
        // the right-handed description about +z must be the one returned
        let mapped = rotate_orientation(&prior, &step);
        assert!((mapped.x_axis() - posterior.x_axis()).norm() < 1e-12);
    }

    #[test]
    fn reconstruct_round_trip_random() {
        let mut rng = ChaCha12Rng::seed_from_u64(34);
        let mut cross = 0usize;
        let mut fallback = 0usize;
        for _ in 0..2000 {
            let prior = random_orientation(&mut rng);
            let axis = Unit::new_normalize(random_unit(&mut rng));
            let angle = rng.random_range(1f64.to_radians()..179f64.to_radians());
            let rot = Rotation3::from_axis_angle(&axis, angle);
            let posterior = NVOrientation::new(rot * prior.x_axis(), rot * prior.z_axis()).unwrap();
            let step = reconstruct_rotation(&prior, &posterior).unwrap();
            assert!(
                (step.angle - angle).abs() < 1e-9,
                "angle {} vs {}",
                step.angle,
                angle
            );
            assert!(
                (step.axis - axis.into_inner()).norm() < 1e-9,
                "axis error {:e}",
                (step.axis - axis.into_inner()).norm()
            );
            match step.method {
                ReconstructionPath::CrossProduct => cross += 1,
                ReconstructionPath::TriadFallback => fallback += 1,
            }
        }
        // the cross-product sign is wrong whenever axis . y_prior < 0,
        // so both paths must be exercised
        assert!(
            cross > 200 && fallback > 200,
            "cross {cross}, fallback {fallback}"
        );
    }

    #[test]
    fn cross_product_formula_validated_against_triads() {
        // documents the estimator's exact behaviour:
        //   n_raw = 2(1 - cos b)(axis . y0) * axis, scalar = 1 + 2 cos b
        let mut rng = ChaCha12Rng::seed_from_u64(35);
        for _ in 0..2000 {
            let prior = random_orientation(&mut rng);
            let axis = Unit::new_normalize(random_unit(&mut rng));
            let angle = rng.random_range(1f64.to_radians()..179f64.to_radians());
            let rot = Rotation3::from_axis_angle(&axis, angle);
            let posterior = NVOrientation::new(rot * prior.x_axis(), rot * prior.z_axis()).unwrap();

            let n_raw =
                (posterior.z_axis() - prior.z_axis()).cross(&(posterior.x_axis() - prior.x_axis()));
            let predicted =
                axis.into_inner() * (2.0 * (1.0 - angle.cos()) * axis.dot(&prior.y_axis()));
            assert!((n_raw - predicted).norm() < 1e-12);

            let dots = posterior.x_axis().dot(&prior.x_axis())
                + posterior.z_axis().dot(&prior.z_axis())
                + posterior.x_axis().dot(&prior.x_axis()) * posterior.z_axis().dot(&prior.z_axis())
                - prior.x_axis().dot(&posterior.z_axis()) * prior.z_axis().dot(&posterior.x_axis());
            assert!((dots - (1.0 + 2.0 * angle.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_steps() {
        let mut rng = ChaCha12Rng::seed_from_u64(36);
        let o = random_orientation(&mut rng);
        // identity: degenerate with no usable fallback
        match reconstruct_rotation(&o, &o) {
            Err(GeometryError::DegenerateStep { fallback }) => assert!(fallback.is_none()),
            other => panic!("expected degenerate step, got {other:?}"),
        }
        // axis orthogonal to prior y: cross product vanishes but the triad
        // fallback still solves the step
        let axis = Unit::new_normalize(o.x_axis());
        let angle = 0.7;
        let rot = Rotation3::from_axis_angle(&axis, angle);
        let posterior = NVOrientation::new(rot * o.x_axis(), rot * o.z_axis()).unwrap();
        match reconstruct_rotation(&o, &posterior) {
            Err(GeometryError::DegenerateStep {
                fallback: Some(step),
            }) => {
                assert!((step.angle - angle).abs() < 1e-9);
                assert!((step.axis - axis.into_inner()).norm() < 1e-9);
                assert_eq!(step.method, ReconstructionPath::TriadFallback);
            }
            other => panic!("expected degenerate step with fallback, got {other:?}"),
        }
    }

    #[test]
    fn rotate_orientation_identities() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let o = random_orientation(&mut rng);
        let axis = random_unit(&mut rng);

        let zero = RotationStep {
            axis,
            angle: 0.0,
            method: ReconstructionPath::CrossProduct,
        };
        let same = rotate_orientation(&o, &zero);
        assert!((same.x_axis() - o.x_axis()).norm() < 1e-15);

        let full = RotationStep {
            axis,
            angle: 2.0 * PI,
            method: ReconstructionPath::CrossProduct,
        };
        let back = rotate_orientation(&o, &full);
        assert!((back.x_axis() - o.x_axis()).norm() < 1e-12);
        assert!((back.z_axis() - o.z_axis()).norm() < 1e-12);
    }

    #[test]
    fn composition_is_not_axis_angle_addition() {
        let mut rng = ChaCha12Rng::seed_from_u64(38);
        let o = random_orientation(&mut rng);

        // same axis: angles add and the end-to-end reconstruction agrees
        let axis = Unit::new_normalize(random_unit(&mut rng));
        let s1 = RotationStep {
            axis: axis.into_inner(),
            angle: 0.4,
            method: ReconstructionPath::CrossProduct,
        };
        let s2 = RotationStep {
            axis: axis.into_inner(),
            angle: 0.5,
            method: ReconstructionPath::CrossProduct,
        };
        let end = rotate_orientation(&rotate_orientation(&o, &s1), &s2);
        let total = reconstruct_rotation(&o, &end).unwrap();
        assert!((total.angle - 0.9).abs() < 1e-9);
        assert!((total.axis - axis.into_inner()).norm() < 1e-9);

        // different axes: the matrix product is the oracle
        let a1 = Unit::new_normalize(Vector3::x());
        let a2 = Unit::new_normalize(Vector3::y());
        let t1 = RotationStep {
            axis: a1.into_inner(),
            angle: 0.6,
            method: ReconstructionPath::CrossProduct,
        };
        let t2 = RotationStep {
            axis: a2.into_inner(),
            angle: 0.8,
            method: ReconstructionPath::CrossProduct,
        };
        let end = rotate_orientation(&rotate_orientation(&o, &t1), &t2);
        let total = reconstruct_rotation(&o, &end).unwrap();
        let product = Rotation3::from_axis_angle(&a2, 0.8) * Rotation3::from_axis_angle(&a1, 0.6);
        let (want_axis, want_angle) = axis_angle(&product).unwrap();
        assert!((total.angle - want_angle).abs() < 1e-9);
        assert!((total.axis - want_axis.into_inner()).norm() < 1e-9);
        // and it differs from naive composition on either axis
        assert!((total.angle - 1.4).abs() > 1e-3);
    }

    #[test]
    fn crystallographic_families() {
        let normal = Vector3::new(1.0, 1.0, 1.0);
        let all = crystallographic_orientations(normal).unwrap();
        assert_eq!(all.len(), 12);

        // exactly one family points along the normal (lab z)
        let aligned: Vec<_> = all
            .iter()
            .filter(|o| (o.z_axis() - Vector3::z()).norm() < 1e-12)
            .collect();
        assert_eq!(aligned.len(), 3);

        // pairwise family angles arccos(-1/3)
        let mut families: Vec<Vector3<f64>> = Vec::new();
        for o in &all {
            if !families.iter().any(|f| (f - o.z_axis()).norm() < 1e-9) {
                families.push(o.z_axis());
            }
        }
        assert_eq!(families.len(), 4);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert!((families[i].dot(&families[j]) + 1.0 / 3.0).abs() < 1e-12);
            }
        }

        // minor axes of one family: orthogonal to it, mutually 120 deg
        for chunk in all.chunks(3) {
            for o in chunk {
                assert!(o.x_axis().dot(&o.z_axis()).abs() < 1e-12);
            }
            for i in 0..3 {
                for j in (i + 1)..3 {
                    assert!((chunk[i].x_axis().dot(&chunk[j].x_axis()) + 0.5).abs() < 1e-12);
                }
            }
        }

        assert!(matches!(
            crystallographic_orientations(Vector3::zeros()),
            Err(GeometryError::ZeroVector)
        ));
        assert!(CrystalAlignment::new(4, 0).is_err());
        assert_eq!(CrystalAlignment::new(2, 1).unwrap().index(), 7);
    }
}
