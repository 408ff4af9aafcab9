//! Pure spin-S states, SU(2) rotations, and the state file format.
//!
//! Amplitudes are stored in ascending `m`: index `k` holds `ψ_m` with
//! `m = k - S`. In the two-mode picture index `k` is the state with `k`
//! excitations in mode a and `2S - k` in mode b.
//!
//! Coherent states are labelled by `(θ, φ)` through
//! `α = tan(θ/2) e^{-iφ}` and `|θ, φ> ∝ exp(α S₊)|S, -S>`, so `θ = 0` is
//! `|S, -S>`. The mean spin of `|θ, φ>` points along
//! [`direction`]`(θ, φ) = (sin θ cos φ, sin θ sin φ, -cos θ)`; this is the
//! embedding used for every point on the sphere in this crate (stars, Q
//! function grids), which makes rotations of states and rotations of their
//! constellations the same SO(3) matrix.

mod io;
mod rotation;

pub use io::{read_state_file, state_from_json, state_to_json, write_state_file, StateFile};
pub use rotation::{random_haar_rotation, Rotation};

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::angular::wigner_d_matrix;
use crate::error::{Error, Result};
use crate::numeric::binomial;

/// Amplitudes whose norm is within this of 1 are kept bit-for-bit.
const NORM_KEEP: f64 = 1e-13;

/// Serializes as a [`StateFile`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "StateFile", try_from = "StateFile")]
pub struct SpinState {
    twice_spin: u32,
    amplitudes: Vec<C64>,
}

impl SpinState {
    /// Validates and normalizes.
    pub fn new(twice_spin: u32, amplitudes: Vec<C64>) -> Result<Self> {
        if twice_spin == 0 {
            return Err(Error::InvalidSpin(twice_spin));
        }
        let expected = twice_spin as usize + 1;
        if amplitudes.len() != expected {
            return Err(Error::LengthMismatch { twice_spin, expected, got: amplitudes.len() });
        }
        if let Some(i) = amplitudes.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        let norm = norm_of(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        let amplitudes = if (norm - 1.0).abs() <= NORM_KEEP {
            amplitudes
        } else {
            amplitudes.into_iter().map(|a| a / norm).collect()
        };
        Ok(SpinState { twice_spin, amplitudes })
    }

    /// `|S, m>` with `m = index - S`.
    pub fn basis(twice_spin: u32, index: usize) -> Result<Self> {
        if index > twice_spin as usize {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for twice_spin {twice_spin}"
            )));
        }
        let mut v = vec![C64::new(0.0, 0.0); twice_spin as usize + 1];
        v[index] = C64::new(1.0, 0.0);
        SpinState::new(twice_spin, v)
    }

    /// Spin coherent state `|θ, φ>`.
    ///
    /// Evaluated as `ψ_k = sqrt(C(2S,k)) cos(θ/2)^{2S-k} sin(θ/2)^k e^{-ikφ}`,
    /// which equals `(1 + |α|²)^{-S} sqrt(C(2S,k)) α^k` and stays finite at
    /// `θ = π`, where the state is `|S, S>`.
    pub fn coherent(twice_spin: u32, theta: f64, phi: f64) -> Result<Self> {
        if twice_spin == 0 {
            return Err(Error::InvalidSpin(twice_spin));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta = {theta} outside [0, π]")));
        }
        let n = twice_spin as usize;
        if theta == std::f64::consts::PI {
            return SpinState::basis(twice_spin, n);
        }
        let (s, c) = (theta / 2.0).sin_cos();
        let amps = (0..=n)
            .map(|k| {
                let mag = binomial(n as u64, k as u64).sqrt() * c.powi((n - k) as i32) * s.powi(k as i32);
                C64::from_polar(mag, -(k as f64) * phi)
            })
            .collect();
        SpinState::new(twice_spin, amps)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(twice_spin: u32, rng: &mut R) -> Result<Self> {
        if twice_spin == 0 {
            return Err(Error::InvalidSpin(twice_spin));
        }
        loop {
            let v: Vec<C64> = (0..=twice_spin)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if norm_of(&v) > 1e-8 {
                return SpinState::new(twice_spin, v);
            }
        }
    }

    pub fn twice_spin(&self) -> u32 {
        self.twice_spin
    }

    pub fn spin(&self) -> f64 {
        self.twice_spin as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    /// `ψ̃_{m'} = Σ_m D^S_{m'm}(rot) ψ_m`.
    pub fn rotate(&self, rot: &Rotation) -> SpinState {
        let d = wigner_d_matrix(self.twice_spin, rot);
        SpinState { twice_spin: self.twice_spin, amplitudes: d.apply(&self.amplitudes) }
    }

    /// `<self|other> = Σ_m self_m^* other_m`.
    pub fn overlap(&self, other: &SpinState) -> Result<C64> {
        if self.twice_spin != other.twice_spin {
            return Err(Error::DimensionMismatch(self.twice_spin, other.twice_spin));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Copy with the global phase chosen so the first nonzero amplitude is
    /// real and positive.
    pub fn canonical_phase(&self) -> SpinState {
        let lead = self
            .amplitudes
            .iter()
            .find(|a| a.norm() > 0.0)
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = C64::from_polar(1.0, -lead.arg());
        let mut amplitudes: Vec<C64> = self.amplitudes.iter().map(|a| a * phase).collect();
        if let Some(first) = amplitudes.iter_mut().find(|a| a.norm() > 0.0) {
            first.im = 0.0;
        }
        SpinState { twice_spin: self.twice_spin, amplitudes }
    }
}

fn norm_of(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Unit vector of the coherent-state label `(θ, φ)`.
pub fn direction(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, -ct]
}

/// Inverse of [`direction`]: `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
pub fn angles(v: [f64; 3]) -> (f64, f64) {
    let rho = v[0].hypot(v[1]);
    let theta = rho.atan2(-v[2]);
    let mut phi = v[1].atan2(v[0]);
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    if rho == 0.0 {
        phi = 0.0;
    }
    (theta, phi)
}

/// Thin wrapper over [`SpinState::new`].
pub fn make_state(twice_spin: u32, amplitudes: Vec<C64>) -> Result<SpinState> {
    SpinState::new(twice_spin, amplitudes)
}

/// Thin wrapper over [`SpinState::coherent`].
pub fn make_coherent(twice_spin: u32, theta: f64, phi: f64) -> Result<SpinState> {
    SpinState::coherent(twice_spin, theta, phi)
}

pub fn rotate(state: &SpinState, rot: &Rotation) -> SpinState {
    state.rotate(rot)
}

pub fn state_overlap(a: &SpinState, b: &SpinState) -> Result<C64> {
    a.overlap(b)
}
