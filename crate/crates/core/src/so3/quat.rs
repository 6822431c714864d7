use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit quaternion `(w, x, y, z)` representing a rotation.
///
/// Constructors normalize; [`UnitQuaternion::canonical`] additionally fixes the
/// sign so that `q` and `-q` (the same rotation) have one representative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for UnitQuaternion {
    /// Keeps components that are already unit length bit-exact, so that
    /// serialization roundtrips.
    fn from(a: [f64; 4]) -> Self {
        UnitQuaternion::try_from_array(a)
            .ok()
            .filter(|q| (q.norm() - 1.0).abs() <= 4.0 * f64::EPSILON)
            .unwrap_or_else(|| UnitQuaternion::from_array_normalized(a))
    }
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        q.to_array()
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes the given components. A zero vector maps to the identity.
    pub fn from_array_normalized(a: [f64; 4]) -> Self {
        let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Self::IDENTITY;
        }
        UnitQuaternion {
            w: a[0] / n,
            x: a[1] / n,
            y: a[2] / n,
            z: a[3] / n,
        }
    }

    /// Wraps components that must already be normalized to within `1e-6`.
    pub fn try_from_array(a: [f64; 4]) -> Result<Self> {
        let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]).sqrt();
        if (norm - 1.0).abs() > 1e-6 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(UnitQuaternion {
            w: a[0],
            x: a[1],
            y: a[2],
            z: a[3],
        })
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let a = axis / n;
        let (s, c) = (0.5 * angle).sin_cos();
        UnitQuaternion {
            w: c,
            x: s * a.x,
            y: s * a.y,
            z: s * a.z,
        }
    }

    /// Rotation by `‖v‖` radians about `v`.
    pub fn from_rotation_vector(v: Vector3<f64>) -> Self {
        Self::from_axis_angle(v, v.norm())
    }

    /// Uniformly distributed rotation (normalized 4D Gaussian), canonically signed.
    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let a: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n2 = a.iter().map(|v| v * v).sum::<f64>();
            if n2 > 1e-12 {
                return Self::from_array_normalized(a).canonical();
            }
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, o: Self) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn neg(self) -> Self {
        UnitQuaternion {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Sign-canonical form: the first nonzero of `(w, x, y, z)` is positive.
    pub fn canonical(self) -> Self {
        for c in self.to_array() {
            if c > 0.0 {
                return self;
            }
            if c < 0.0 {
                return self.neg();
            }
        }
        self
    }

    pub fn conjugate(self) -> Self {
        UnitQuaternion {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self ⊗ o`.
    pub fn mul(self, o: Self) -> Self {
        UnitQuaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    /// Matrix `L(a)` with `a ⊗ b = L(a) b` on the 4-vector `b`.
    pub fn left_matrix(self) -> Matrix4<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, -z, y, //
            y, z, w, -x, //
            z, -y, x, w,
        )
    }

    pub fn rotation_matrix(self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Partial derivatives of [`Self::rotation_matrix`] with respect to
    /// `(w, x, y, z)`, treating the components as free (ambient) variables.
    pub fn rotation_matrix_partials(self) -> [Matrix3<f64>; 4] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let dw = Matrix3::new(
            0.0,
            -2.0 * z,
            2.0 * y, //
            2.0 * z,
            0.0,
            -2.0 * x, //
            -2.0 * y,
            2.0 * x,
            0.0,
        );
        let dx = Matrix3::new(
            0.0,
            2.0 * y,
            2.0 * z, //
            2.0 * y,
            -4.0 * x,
            -2.0 * w, //
            2.0 * z,
            2.0 * w,
            -4.0 * x,
        );
        let dy = Matrix3::new(
            -4.0 * y,
            2.0 * x,
            2.0 * w, //
            2.0 * x,
            0.0,
            2.0 * z, //
            -2.0 * w,
            2.0 * z,
            -4.0 * y,
        );
        let dz = Matrix3::new(
            -4.0 * z,
            -2.0 * w,
            2.0 * x, //
            2.0 * w,
            -4.0 * z,
            2.0 * y, //
            2.0 * x,
            2.0 * y,
            0.0,
        );
        [dw, dx, dy, dz]
    }

    pub fn rotate(self, v: Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * v
    }

    pub fn inverse_rotate(self, v: Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix().transpose() * v
    }

    /// Vector-Jacobian product of `q ↦ R(q)ᵀ v`: returns `∂(gᵀ R(q)ᵀ v)/∂q`.
    pub fn inverse_rotate_vjp(self, v: Vector3<f64>, g: Vector3<f64>) -> [f64; 4] {
        let parts = self.rotation_matrix_partials();
        // gᵀ Rₖᵀ v = vᵀ Rₖ g
        std::array::from_fn(|k| v.dot(&(parts[k] * g)))
    }

    /// Vector-Jacobian product of `q ↦ R(q) v`.
    pub fn rotate_vjp(self, v: Vector3<f64>, g: Vector3<f64>) -> [f64; 4] {
        let parts = self.rotation_matrix_partials();
        std::array::from_fn(|k| g.dot(&(parts[k] * v)))
    }

    /// Orthonormal basis of the tangent space at `self`: `q ⊗ (0, eₖ)`.
    pub fn tangent_basis(self) -> [[f64; 4]; 3] {
        let e = |x: f64, y: f64, z: f64| UnitQuaternion { w: 0.0, x, y, z };
        [
            self.mul(e(1.0, 0.0, 0.0)).to_array(),
            self.mul(e(0.0, 1.0, 0.0)).to_array(),
            self.mul(e(0.0, 0.0, 1.0)).to_array(),
        ]
    }

    /// Removes the radial component of an ambient gradient.
    pub fn project_to_tangent(self, g: [f64; 4]) -> [f64; 4] {
        let q = self.to_array();
        let d: f64 = (0..4).map(|i| q[i] * g[i]).sum();
        std::array::from_fn(|i| g[i] - d * q[i])
    }
}

/// Geodesic distance between two rotations, in radians within `[0, π]`.
pub fn geodesic_angle(a: UnitQuaternion, b: UnitQuaternion) -> f64 {
    // 2·acos(|a·b|), evaluated via atan2 for accuracy near zero
    let b = if a.dot(b) < 0.0 { b.neg() } else { b };
    let diff = [a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z];
    let sum = [a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z];
    let n = |v: [f64; 4]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    (2.0 * 2.0 * n(diff).atan2(n(sum))).min(std::f64::consts::PI)
}
