use std::ops::Mul;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An SU(2) element stored as a unit quaternion `(w, x, y, z)`.
///
/// The quaternion `(cos(t/2), sin(t/2) n)` is the rotation by angle `t` about
/// the unit axis `n`. Its spin-1/2 matrix is `w - i(x σx + y σy + z σz)` and
/// its action on 3-vectors is the usual right-handed rotation, so
/// `(a * b).matrix() == a.matrix() * b.matrix()`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation { w: 1.0, x: 0.0, y: 0.0, z: 0.0 }
    }

    /// Normalizes the given 4-vector.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument("quaternion must be finite and nonzero".into()));
        }
        Ok(Rotation { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    pub fn quaternion(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn about_axis(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument("rotation axis must be nonzero".into()));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Ok(Rotation { w: c, x: s * axis[0] / n, y: s * axis[1] / n, z: s * axis[2] / n })
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Rotation { w: c, x: 0.0, y: s, z: 0.0 }
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Rotation { w: c, x: 0.0, y: 0.0, z: s }
    }

    /// `Rz(alpha) Ry(beta) Rz(gamma)`.
    pub fn from_euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Self {
        Rotation::about_z(alpha) * Rotation::about_y(beta) * Rotation::about_z(gamma)
    }

    /// zyz Euler angles with `beta` in `[0, π]`.
    ///
    /// The angles recompose to this exact quaternion (not its negative);
    /// `alpha` and `gamma` may fall outside `[0, 2π)`.
    pub fn to_euler_zyz(&self) -> (f64, f64, f64) {
        let cb = self.w.hypot(self.z);
        let sb = self.x.hypot(self.y);
        let beta = 2.0 * sb.atan2(cb);
        let sum_half = if cb > 0.0 { self.z.atan2(self.w) } else { 0.0 };
        let diff_half = if sb > 0.0 { (-self.x).atan2(self.y) } else { 0.0 };
        (sum_half + diff_half, beta, sum_half - diff_half)
    }

    pub fn inverse(&self) -> Self {
        Rotation { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Spin-1/2 matrix, rows and columns ordered (up, down).
    pub fn su2(&self) -> [[C64; 2]; 2] {
        [
            [C64::new(self.w, -self.z), C64::new(-self.y, -self.x)],
            [C64::new(self.y, -self.x), C64::new(self.w, self.z)],
        ]
    }

    /// The SO(3) matrix.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = self.matrix();
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Rotation from a proper orthogonal matrix (Shepperd's method).
    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Self {
        let tr = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z);
        if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[2][1] - m[1][2]) / s;
            y = (m[0][2] - m[2][0]) / s;
            z = (m[1][0] - m[0][1]) / s;
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            w = (m[2][1] - m[1][2]) / s;
            x = 0.25 * s;
            y = (m[0][1] + m[1][0]) / s;
            z = (m[0][2] + m[2][0]) / s;
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            w = (m[0][2] - m[2][0]) / s;
            x = (m[0][1] + m[1][0]) / s;
            y = 0.25 * s;
            z = (m[1][2] + m[2][1]) / s;
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            w = (m[1][0] - m[0][1]) / s;
            x = (m[0][2] + m[2][0]) / s;
            y = (m[1][2] + m[2][1]) / s;
            z = 0.25 * s;
        }
        Rotation::from_quaternion(w, x, y, z).expect("orthogonal matrix gives nonzero quaternion")
    }

    /// Rotation angle in `[0, π]` of the SO(3) image.
    pub fn angle(&self) -> f64 {
        2.0 * self.x.hypot(self.y).hypot(self.z).atan2(self.w.abs())
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, r: Rotation) -> Rotation {
        let (a, b) = (self, r);
        Rotation {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }
}

/// Haar-distributed SU(2) element: a normalized 4-vector of independent
/// standard Gaussians is uniform on the 3-sphere.
pub fn random_haar_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if let Ok(r) = Rotation::from_quaternion(q[0], q[1], q[2], q[3]) {
            return r;
        }
    }
}
