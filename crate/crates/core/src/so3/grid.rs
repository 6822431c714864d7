use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::healpix;
use super::quat::UnitQuaternion;
use crate::error::{Error, Result};

/// Equal-volume partition of SO(3) built from a HEALPix sphere grid
/// (`N_side = 2^level`) crossed with `6 · 2^level` arcs of the Hopf fiber.
///
/// The fiber angle `psi` is singular at the south pole, where the rotation
/// depends on `phi + psi/2` only, which would make polar cells long slivers.
/// Pixels centered in the southern hemisphere therefore bucket the shifted
/// angle `psi + 2 phi`, which is regular there. The shift preserves volume
/// for fixed `(theta, phi)`, so cells stay equal-volume.
///
/// Cell count is `72 · 8^level`: 72, 576, 4608 for levels 0, 1, 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientationGrid {
    level: u32,
}

/// Hopf coordinates of a rotation: sphere point `(theta, phi)` and fiber angle `psi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfCoords {
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl HopfCoords {
    /// `q = (cos θ/2 cos ψ/2, cos θ/2 sin ψ/2, sin θ/2 cos(φ+ψ/2), sin θ/2 sin(φ+ψ/2))`,
    /// with `phi` and `psi` reduced to `[0, 2π)`. Both are invariant under `q → -q`.
    pub fn from_quaternion(q: UnitQuaternion) -> Self {
        let a = q.w.hypot(q.x);
        let b = q.y.hypot(q.z);
        let theta = 2.0 * b.atan2(a);
        let half_psi = q.x.atan2(q.w);
        let psi = (2.0 * half_psi).rem_euclid(TAU);
        let phi = (q.z.atan2(q.y) - half_psi).rem_euclid(TAU);
        HopfCoords { theta, phi, psi }
    }

    pub fn to_quaternion(self) -> UnitQuaternion {
        let (st, ct) = (0.5 * self.theta).sin_cos();
        let (sp, cp) = (0.5 * self.psi).sin_cos();
        let (sa, ca) = (self.phi + 0.5 * self.psi).sin_cos();
        UnitQuaternion::from_array_normalized([ct * cp, ct * sp, st * ca, st * sa])
    }
}

impl OrientationGrid {
    pub fn new(level: u32) -> Self {
        assert!(level <= 10, "orientation grid level {level} is unreasonably fine");
        OrientationGrid { level }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn nside(&self) -> u64 {
        1 << self.level
    }

    pub fn fiber_buckets(&self) -> usize {
        6 << self.level
    }

    pub fn cell_count(&self) -> usize {
        healpix::pixel_count(self.nside()) as usize * self.fiber_buckets()
    }

    /// Cell containing `q` (the `g` map). Constant time.
    pub fn cell_index(&self, q: UnitQuaternion) -> Result<usize> {
        let norm = q.norm();
        if (norm - 1.0).abs() > 1e-6 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(self.cell_index_unchecked(q.canonical()))
    }

    pub(crate) fn cell_index_unchecked(&self, q: UnitQuaternion) -> usize {
        let h = HopfCoords::from_quaternion(q);
        let pix = healpix::ang2pix_nest(self.nside(), h.theta, h.phi);
        let fiber = if self.southern(pix) {
            (h.psi + 2.0 * h.phi).rem_euclid(TAU)
        } else {
            h.psi
        };
        let buckets = self.fiber_buckets();
        let bucket = ((fiber / TAU * buckets as f64).floor() as usize).min(buckets - 1);
        pix as usize * buckets + bucket
    }

    fn southern(&self, pix: u64) -> bool {
        healpix::pix2ang_nest(self.nside(), pix).0 > std::f64::consts::FRAC_PI_2
    }

    /// Center rotation of cell `i` (the `h` map), canonically signed.
    pub fn cell_center(&self, index: usize) -> Result<UnitQuaternion> {
        let cells = self.cell_count();
        if index >= cells {
            return Err(Error::IndexOutOfRange { index, cells });
        }
        let buckets = self.fiber_buckets();
        let (pix, bucket) = (index / buckets, index % buckets);
        let (theta, phi) = healpix::pix2ang_nest(self.nside(), pix as u64);
        let fiber = (bucket as f64 + 0.5) * TAU / buckets as f64;
        let psi = if self.southern(pix as u64) {
            (fiber - 2.0 * phi).rem_euclid(TAU)
        } else {
            fiber
        };
        Ok(HopfCoords { theta, phi, psi }.to_quaternion().canonical())
    }

    pub fn centers(&self) -> Vec<UnitQuaternion> {
        (0..self.cell_count())
            .map(|i| self.cell_center(i).expect("index in range"))
            .collect()
    }
}
