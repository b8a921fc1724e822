//! Orientation transforms and nacelle-frame input construction.
//!
//! Orientations are stored as `R_NG`, the matrix that maps a vector
//! expressed in global axes onto nacelle axes. Its transpose maps back.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Above this orthonormality defect a user-supplied matrix is re-orthonormalized.
pub const REPAIR_THRESHOLD: f64 = 1e-6;
/// Above this defect a user-supplied matrix is rejected.
pub const REJECT_THRESHOLD: f64 = 1e-3;

/// Proper rotation mapping global axes onto nacelle axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates a user-supplied matrix, repairing small round-off defects.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("rotation matrix has non-finite entries".into()));
        }
        let defect = orthonormality_defect(&m);
        if defect > REJECT_THRESHOLD {
            return Err(Error::Invalid(format!(
                "rotation matrix is not orthonormal (defect {defect:.3e} > {REJECT_THRESHOLD:e})"
            )));
        }
        if m.determinant() <= 0.0 {
            return Err(Error::Invalid(
                "rotation matrix has negative determinant (reflection)".into(),
            ));
        }
        if defect > REPAIR_THRESHOLD {
            Ok(Self(gram_schmidt(&m)))
        } else {
            Ok(Self(m))
        }
    }

    /// Row-major construction, validated like [`RotationMatrix::from_matrix`].
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &RotationMatrix) -> Self {
        Self(self.0 * other.0)
    }

    pub fn defect(&self) -> f64 {
        orthonormality_defect(&self.0)
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Linear blend of two rotations followed by re-orthonormalization.
    pub fn blend(&self, other: &RotationMatrix, s: f64) -> Self {
        if s == 0.0 {
            return *self;
        }
        if s == 1.0 {
            return *other;
        }
        Self(gram_schmidt(&(self.0 * (1.0 - s) + other.0 * s)))
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

/// Largest entry of `|MᵀM − I|`.
pub fn orthonormality_defect(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

/// One Gram-Schmidt pass over the columns; the third column is rebuilt as
/// the cross product so the result is right-handed.
pub fn gram_schmidt(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = m.column(0).normalize();
    let c1 = m.column(1) - c0 * c0.dot(&m.column(1));
    let c1 = c1.normalize();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

/// `v_N = R_NG · v_G`
pub fn rotate_to_nacelle(r: &RotationMatrix, v: &Vec3) -> Vec3 {
    r.0 * v
}

/// `v_G = R_NGᵀ · v_N`
pub fn rotate_to_global(r: &RotationMatrix, v: &Vec3) -> Vec3 {
    r.0.tr_mul(v)
}

/// Gravity `(0, 0, −g)` expressed in nacelle axes.
pub fn gravity_in_nacelle(r: &RotationMatrix, g: f64) -> Vec3 {
    rotate_to_nacelle(r, &Vec3::new(0.0, 0.0, -g))
}

/// Builds `R_NG = Rot_x(θ)·Rot_y(φ)·Rot_z(ψ)`.
///
/// This is an input convenience only. The angular velocity is always given
/// separately and is not `(θ̇, φ̇, ψ̇)` once the angles are large.
pub fn euler_to_rotation(theta: f64, phi: f64, psi: f64) -> RotationMatrix {
    RotationMatrix::rot_x(theta)
        .compose(&RotationMatrix::rot_y(phi))
        .compose(&RotationMatrix::rot_z(psi))
}

/// One sample of prescribed nacelle kinematics, in global axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NacelleMotionSample {
    pub t: f64,
    /// Translational acceleration of the nacelle origin P.
    pub accel_global: Vec3,
    pub r_ng: RotationMatrix,
    pub omega_global: Vec3,
    pub alpha_global: Vec3,
}

impl NacelleMotionSample {
    /// A nacelle at rest, level, at time `t`.
    pub fn quiescent(t: f64) -> Self {
        Self {
            t,
            accel_global: Vec3::zeros(),
            r_ng: RotationMatrix::identity(),
            omega_global: Vec3::zeros(),
            alpha_global: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.accel_global.iter().all(|v| v.is_finite())
            && self.omega_global.iter().all(|v| v.is_finite())
            && self.alpha_global.iter().all(|v| v.is_finite())
            && self.r_ng.0.iter().all(|v| v.is_finite())
    }

    pub fn to_nacelle_frame(&self, gravity: f64) -> NacelleMotionNacelleFrame {
        NacelleMotionNacelleFrame {
            accel: rotate_to_nacelle(&self.r_ng, &self.accel_global),
            omega: rotate_to_nacelle(&self.r_ng, &self.omega_global),
            alpha: rotate_to_nacelle(&self.r_ng, &self.alpha_global),
            gravity: gravity_in_nacelle(&self.r_ng, gravity),
        }
    }
}

/// Inputs as seen by the dampers: everything expressed in nacelle axes.
///
/// `omega` components are the body rates `[θ̇, φ̇, ψ̇]` about nacelle x, y, z.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NacelleMotionNacelleFrame {
    pub accel: Vec3,
    pub omega: Vec3,
    pub alpha: Vec3,
    pub gravity: Vec3,
}

impl NacelleMotionNacelleFrame {
    /// Stationary nacelle with gravity `(0, 0, −g)` in nacelle axes.
    pub fn level(g: f64) -> Self {
        Self {
            gravity: Vec3::new(0.0, 0.0, -g),
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn rot_y90() -> RotationMatrix {
        RotationMatrix::rot_y(FRAC_PI_2)
    }

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).amax() < tol
    }

    #[test]
    fn identity_maps_are_trivial() {
        let r = RotationMatrix::identity();
        assert_eq!(rotate_to_nacelle(&r, &Vec3::new(1.0, 2.0, 3.0)), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(rotate_to_global(&r, &Vec3::new(4.0, 5.0, 6.0)), Vec3::new(4.0, 5.0, 6.0));
    }

    #[test]
    fn pitched_nacelle_sees_gravity_on_x() {
        let r = rot_y90();
        let v = rotate_to_nacelle(&r, &Vec3::new(0.0, 0.0, -9.81));
        assert!(close(&v, &Vec3::new(-9.81, 0.0, 0.0), 1e-12));
        let back = rotate_to_global(&r, &Vec3::new(-9.81, 0.0, 0.0));
        assert!(close(&back, &Vec3::new(0.0, 0.0, -9.81), 1e-12));
        assert!(close(&gravity_in_nacelle(&r, 9.81), &Vec3::new(-9.81, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn gravity_level_and_off() {
        let g = gravity_in_nacelle(&RotationMatrix::identity(), 9.81);
        assert_eq!(g, Vec3::new(0.0, 0.0, -9.81));
        let off = gravity_in_nacelle(&euler_to_rotation(0.3, -1.1, 2.0), 0.0);
        assert_eq!(off.amax(), 0.0);
    }

    #[test]
    fn euler_examples() {
        assert_eq!(euler_to_rotation(0.0, 0.0, 0.0), RotationMatrix::identity());
        let r = euler_to_rotation(0.0, FRAC_PI_2, 0.0);
        assert!((r.matrix() - rot_y90().matrix()).amax() < 1e-15);
        assert!(close(&gravity_in_nacelle(&r, 9.81), &Vec3::new(-9.81, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn small_defect_is_repaired_large_is_rejected() {
        let mut m = *euler_to_rotation(0.2, 0.4, -0.7).matrix();
        m[(0, 1)] += 1e-5;
        let r = RotationMatrix::from_matrix(m).unwrap();
        assert!(r.defect() < 1e-12);

        let mut bad = *euler_to_rotation(0.2, 0.4, -0.7).matrix();
        bad[(2, 2)] += 0.01;
        assert!(RotationMatrix::from_matrix(bad).is_err());

        let reflect = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(RotationMatrix::from_matrix(reflect).is_err());
    }

    #[test]
    fn nacelle_frame_inputs_round_trip() {
        let sample = NacelleMotionSample {
            t: 0.0,
            accel_global: Vec3::new(1.0, -2.0, 0.5),
            r_ng: euler_to_rotation(0.1, 0.2, 0.3),
            omega_global: Vec3::new(0.3, 0.0, -1.0),
            alpha_global: Vec3::new(0.0, 2.0, 0.1),
        };
        let n = sample.to_nacelle_frame(9.81);
        assert!(close(&rotate_to_global(&sample.r_ng, &n.accel), &sample.accel_global, 1e-14));
        assert!(close(&rotate_to_global(&sample.r_ng, &n.omega), &sample.omega_global, 1e-14));
        assert!(close(&rotate_to_global(&sample.r_ng, &n.alpha), &sample.alpha_global, 1e-14));
        assert_relative_eq!(n.gravity.norm(), 9.81, epsilon = 1e-14);
    }

    fn angles() -> impl Strategy<Value = (f64, f64, f64)> {
        (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64)
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-100.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rotation_is_an_isometry((a, b, c) in angles(), v in vec3()) {
            let r = euler_to_rotation(a, b, c);
            let rv = rotate_to_nacelle(&r, &v);
            prop_assert!((rv.norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
            let back = rotate_to_global(&r, &rv);
            prop_assert!((back - v).amax() < 1e-12);
        }

        #[test]
        fn euler_output_is_proper_rotation((a, b, c) in angles()) {
            let r = euler_to_rotation(a, b, c);
            prop_assert!(r.defect() < 1e-12);
            prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rotation_commutes_with_cross_product((a, b, c) in angles(), u in vec3(), v in vec3()) {
            let (u, v) = (u / 10.0, v / 10.0);
            let r = euler_to_rotation(a, b, c);
            let lhs = rotate_to_nacelle(&r, &u).cross(&rotate_to_nacelle(&r, &v));
            let rhs = rotate_to_nacelle(&r, &u.cross(&v));
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }
    }
}
