//! Q function `Q(θ, φ) = |<θ, φ|ψ>|²` on a regular grid, with CSV/PPM export.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{binomial, fmt15};
use crate::states::SpinState;

/// Overlap weights `sqrt(C(n,k)) cos^{n-k}(θ/2) sin^k(θ/2)`.
fn row_weights(n: usize, theta: f64) -> Vec<f64> {
    let (s, c) = (theta / 2.0).sin_cos();
    (0..=n)
        .map(|k| binomial(n as u64, k as u64).sqrt() * c.powi((n - k) as i32) * s.powi(k as i32))
        .collect()
}

fn q_from_weights(w: &[f64], amps: &[C64], phi: f64) -> f64 {
    let step = C64::from_polar(1.0, phi);
    let mut ph = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for (k, (&wk, &a)) in w.iter().zip(amps).enumerate() {
        // re-anchor the phase now and then so it doesn't drift
        if k % 16 == 0 {
            ph = C64::from_polar(1.0, k as f64 * phi);
        }
        acc += a * (wk * ph);
        ph *= step;
    }
    acc.norm_sqr()
}

/// `|<θ, φ|ψ>|²` at one point.
pub fn q_value(state: &SpinState, theta: f64, phi: f64) -> f64 {
    let n = state.twice_spin() as usize;
    q_from_weights(&row_weights(n, theta), state.amplitudes(), phi)
}

/// Q sampled at `θ_i = π i/(n_theta-1)`, `φ_j = 2π j/(n_phi-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Row-major, `values[i][j] = Q(θ_i, φ_j)`.
    pub values: Vec<Vec<f64>>,
}

pub fn q_function(state: &SpinState, n_theta: usize, n_phi: usize) -> Result<QGrid> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidArgument(format!("grid {n_theta}x{n_phi}: both sizes must be at least 2")));
    }
    let n = state.twice_spin() as usize;
    let amps = state.amplitudes();
    let values = (0..n_theta)
        .into_par_iter()
        .map(|i| {
            let w = row_weights(n, QGrid::theta_at(n_theta, i));
            (0..n_phi).map(|j| q_from_weights(&w, amps, QGrid::phi_at(n_phi, j))).collect()
        })
        .collect();
    Ok(QGrid { n_theta, n_phi, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorMap {
    Gray,
    /// blue → cyan → green → yellow → red
    Heat,
}

impl ColorMap {
    /// Maps `t` in [0, 1] to RGB.
    pub fn rgb(self, t: f64) -> [u8; 3] {
        let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
        let byte = |x: f64| (x * 255.0).round() as u8;
        match self {
            ColorMap::Gray => [byte(t); 3],
            ColorMap::Heat => {
                let s = 4.0 * t;
                let (r, g, b) = match s {
                    s if s < 1.0 => (0.0, s, 1.0),
                    s if s < 2.0 => (0.0, 1.0, 2.0 - s),
                    s if s < 3.0 => (s - 2.0, 1.0, 0.0),
                    s => (1.0, 4.0 - s, 0.0),
                };
                [byte(r), byte(g), byte(b)]
            }
        }
    }
}

impl QGrid {
    pub fn theta_at(n_theta: usize, i: usize) -> f64 {
        PI * i as f64 / (n_theta - 1) as f64
    }

    pub fn phi_at(n_phi: usize, j: usize) -> f64 {
        2.0 * PI * j as f64 / (n_phi - 1) as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        Self::theta_at(self.n_theta, i)
    }

    pub fn phi(&self, j: usize) -> f64 {
        Self::phi_at(self.n_phi, j)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, &v| m.max(v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Grid point holding the largest value, as `(θ, φ, Q)`.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        (self.theta(best.0), self.phi(best.1), best.2)
    }

    /// `∫ Q dΩ`: Simpson in θ (trapezoid if `n_theta` is even), periodic
    /// trapezoid in φ (the duplicated φ = 2π column is skipped).
    pub fn sphere_integral(&self) -> f64 {
        let h_theta = PI / (self.n_theta - 1) as f64;
        let cols = (self.n_phi - 1).max(1);
        let h_phi = 2.0 * PI / cols as f64;
        let simpson = self.n_theta % 2 == 1 && self.n_theta >= 3;
        let mut total = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            let ring: f64 = row[..cols].iter().sum::<f64>() * h_phi;
            let w = if i == 0 || i == self.n_theta - 1 {
                if simpson { 1.0 / 3.0 } else { 0.5 }
            } else if simpson {
                if i % 2 == 1 { 4.0 / 3.0 } else { 2.0 / 3.0 }
            } else {
                1.0
            };
            total += w * h_theta * self.theta(i).sin() * ring;
        }
        total
    }

    /// CSV with header `theta,phi,value`, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n_theta * self.n_phi * 48 + 16);
        out.push_str("theta,phi,value\n");
        for (i, row) in self.values.iter().enumerate() {
            let t = fmt15(self.theta(i));
            for (j, &v) in row.iter().enumerate() {
                out.push_str(&t);
                out.push(',');
                out.push_str(&fmt15(self.phi(j)));
                out.push(',');
                out.push_str(&fmt15(v));
                out.push('\n');
            }
        }
        out
    }

    /// Binary PPM (P6), `n_phi` wide and `n_theta` tall, row 0 at θ = 0.
    /// Values are scaled by the grid maximum.
    pub fn to_ppm(&self, map: ColorMap) -> Vec<u8> {
        let max = self.max();
        let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
        let mut out = format!("P6\n{} {}\n255\n", self.n_phi, self.n_theta).into_bytes();
        out.reserve(3 * self.n_theta * self.n_phi);
        for row in &self.values {
            for &v in row {
                out.extend_from_slice(&map.rgb(v * scale));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorana::{constellation, majorana_roots, ExtRoot};
    use crate::numeric::task_rng;
    use crate::states::angles;

    #[test]
    fn coherent_state_peaks_at_its_label() {
        let s = SpinState::coherent(6, PI / 4.0, PI / 2.0).unwrap();
        let g = q_function(&s, 9, 9).unwrap();
        let (t, p, v) = g.argmax();
        assert!((t - PI / 4.0).abs() < 1e-12 && (p - PI / 2.0).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vanishes_opposite_the_stars() {
        let mut rng = task_rng(51, 0);
        for n in [2u32, 5, 10, 20] {
            let s = SpinState::random(n, &mut rng).unwrap();
            let max = q_function(&s, 61, 61).unwrap().max();
            for star in constellation(&s).stars() {
                let (t, p) = angles([-star[0], -star[1], -star[2]]);
                assert!(q_value(&s, t, p) <= 1e-12 * max.max(1.0), "n = {n}");
            }
        }
    }

    #[test]
    fn zeros_at_reported_roots() {
        let mut rng = task_rng(52, 0);
        let s = SpinState::random(9, &mut rng).unwrap();
        for r in majorana_roots(&s) {
            if let ExtRoot::Finite(z) = r {
                let t = 2.0 * z.norm().atan();
                assert!(q_value(&s, t, z.arg()) < 1e-20);
            }
        }
    }

    #[test]
    fn resolution_of_identity() {
        let mut rng = task_rng(53, 0);
        for n in [1u32, 4, 11] {
            let s = SpinState::random(n, &mut rng).unwrap();
            let g = q_function(&s, 201, 64).unwrap();
            let total = g.sphere_integral() * (n as f64 + 1.0) / (4.0 * PI);
            assert!((total - 1.0).abs() < 1e-6, "n = {n}: {total}");
        }
    }

    #[test]
    fn rejects_tiny_grids() {
        let s = SpinState::basis(2, 0).unwrap();
        assert!(q_function(&s, 1, 5).is_err());
        assert!(q_function(&s, 5, 1).is_err());
    }

    #[test]
    fn ppm_layout() {
        let s = SpinState::basis(2, 2).unwrap();
        let g = q_function(&s, 3, 4).unwrap();
        let ppm = g.to_ppm(ColorMap::Heat);
        let header = b"P6\n4 3\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        assert_eq!(ppm.len(), header.len() + 3 * 12);
        // |S,S> peaks at θ = π (last row): red; θ = 0 is a zero: blue
        assert_eq!(&ppm[header.len()..header.len() + 3], &[0, 0, 255]);
        assert_eq!(&ppm[ppm.len() - 3..], &[255, 0, 0]);
    }

    #[test]
    fn colormaps_are_monotone_at_the_ends() {
        assert_eq!(ColorMap::Gray.rgb(0.0), [0, 0, 0]);
        assert_eq!(ColorMap::Gray.rgb(1.0), [255, 255, 255]);
        assert_eq!(ColorMap::Heat.rgb(0.5), [0, 255, 0]);
        assert_eq!(ColorMap::Heat.rgb(f64::NAN), [0, 0, 255]);
    }

    #[test]
    fn csv_rows() {
        let g = q_function(&SpinState::basis(1, 0).unwrap(), 2, 3).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("theta,phi,value\n"));
        assert_eq!(csv.lines().count(), 7);
    }
}
