//! Majorana stellar representation and the SU(2) Q function.
//!
//! A spin-S state maps to the Majorana polynomial
//! `p(α) = Σ_k sqrt(C(2S, k)) ψ_k α^k` (index `k = S + m`), whose `2S` roots
//! on the extended plane fix the state up to a global phase. The overlap with
//! the coherent state of label `(θ, φ)` is proportional to `p(conj α)`, so a
//! root `r` is a zero of the Q function at the label with
//! `tan(θ/2) = |r|`, `φ = arg r`. Stars are the antipodes of those zeros:
//! a coherent state `|θ0, φ0>` then has all of its stars at
//! [`direction`](crate::states::direction)`(θ0, φ0)`.

mod qfunc;
mod roots;

pub use qfunc::{q_function, q_value, ColorMap, QGrid};
pub use roots::{extended_roots, polish_multiple_root, ExtRoot, DEFLATION_THRESHOLD};

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::states::{angles, Rotation, SpinState};

/// Star vectors closer than this (chordally) are treated as the pole `-z`
/// when converting back to polynomial roots.
const POLE_EPS: f64 = 1e-14;

/// Coefficients of the Majorana polynomial in ascending powers of `α`.
pub fn majorana_coefficients(state: &SpinState) -> Vec<C64> {
    let n = state.twice_spin() as u64;
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a * binomial(n, k as u64).sqrt())
        .collect()
}

/// The `2S` roots of the Majorana polynomial, roots at infinity included.
///
/// Coefficients that are exactly zero at either end become roots at zero or
/// infinity directly. When an end coefficient is merely tiny, relative
/// deflation would collapse a multiple root near a pole onto the pole, so the
/// roots are found in a rotated frame whose poles avoid the Q zeros and
/// mapped back.
pub fn majorana_roots(state: &SpinState) -> Vec<ExtRoot> {
    let coeffs = majorana_coefficients(state);
    if !needs_reframe(&coeffs) {
        return extended_roots(&coeffs);
    }
    constellation(state).stars().iter().map(|&s| root_of_star(s)).collect()
}

/// True when an end coefficient would be deflated without being zero.
fn needs_reframe(coeffs: &[C64]) -> bool {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let thr = DEFLATION_THRESHOLD * scale;
    let tiny = |c: &C64| c.norm() <= thr;
    let nonzero_tiny = |c: &C64| c.norm() > 0.0 && c.norm() <= thr;
    coeffs.iter().take_while(|c| tiny(c)).any(nonzero_tiny)
        || coeffs.iter().rev().take_while(|c| tiny(c)).any(nonzero_tiny)
}

/// Rotation taking the best-conditioned axis to the poles: of a fixed
/// Fibonacci set of directions `u`, the one maximizing `min(Q(u), Q(-u))`.
fn reframing_rotation(state: &SpinState) -> Rotation {
    const CANDIDATES: usize = 256;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut best = ([0.0, 0.0, 1.0], f64::NEG_INFINITY);
    for i in 0..CANDIDATES {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / CANDIDATES as f64;
        let r = (1.0 - z * z).sqrt();
        let a = golden * i as f64;
        let u = [r * a.cos(), r * a.sin(), z];
        let (t1, p1) = angles(u);
        let (t2, p2) = angles([-u[0], -u[1], -u[2]]);
        let score = q_value(state, t1, p1).min(q_value(state, t2, p2));
        if score > best.1 {
            best = (u, score);
        }
    }
    // rotate u onto -z
    let u = best.0;
    let axis = [-u[1], u[0], 0.0];
    let angle = (-u[2]).clamp(-1.0, 1.0).acos();
    Rotation::about_axis(axis, angle).unwrap_or_else(|_| Rotation::identity())
}

/// Star direction of a Majorana root.
pub fn star_of_root(root: &ExtRoot) -> [f64; 3] {
    match *root {
        ExtRoot::Infinity => [0.0, 0.0, -1.0],
        ExtRoot::Finite(r) => {
            let n = r.norm_sqr();
            if n <= 1.0 {
                [-2.0 * r.re / (1.0 + n), -2.0 * r.im / (1.0 + n), (1.0 - n) / (1.0 + n)]
            } else {
                // through w = 1/r: -2r/(1+|r|²) = -2 conj(w)/(1+|w|²)
                let w = r.inv();
                let m = w.norm_sqr();
                [-2.0 * w.re / (1.0 + m), 2.0 * w.im / (1.0 + m), (m - 1.0) / (m + 1.0)]
            }
        }
    }
}

/// Majorana root of a star direction (inverse of [`star_of_root`]).
pub fn root_of_star(v: [f64; 3]) -> ExtRoot {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (x, y, z) = (v[0] / n, v[1] / n, v[2] / n);
    if 1.0 + z <= POLE_EPS {
        return ExtRoot::Infinity;
    }
    if z >= 0.0 {
        ExtRoot::Finite(-C64::new(x, y) / (1.0 + z))
    } else {
        // 1/r = -(1+z)/(x+iy) = -(x-iy)/(1-z)
        ExtRoot::Finite((-C64::new(x, -y) / (1.0 - z)).inv())
    }
}

/// `2S` points on the unit sphere, repeated according to multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    twice_spin: u32,
    stars: Vec<[f64; 3]>,
}

impl Constellation {
    /// Normalizes each star; the count must equal `twice_spin`.
    pub fn new(twice_spin: u32, stars: Vec<[f64; 3]>) -> Result<Self> {
        if stars.len() != twice_spin as usize {
            return Err(Error::StarCount { expected: twice_spin as usize, got: stars.len() });
        }
        let stars = stars
            .into_iter()
            .map(|s| {
                let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                if n.is_finite() && n > 0.0 {
                    Ok([s[0] / n, s[1] / n, s[2] / n])
                } else {
                    Err(Error::InvalidArgument("star must be a finite nonzero vector".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Constellation { twice_spin, stars })
    }

    pub fn twice_spin(&self) -> u32 {
        self.twice_spin
    }

    pub fn stars(&self) -> &[[f64; 3]] {
        &self.stars
    }

    pub fn len(&self) -> usize {
        self.stars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stars.is_empty()
    }

    /// Coherent-state labels `(θ, φ)` of the stars.
    pub fn angles(&self) -> Vec<(f64, f64)> {
        self.stars.iter().map(|&s| angles(s)).collect()
    }

    pub fn rotated(&self, rot: &Rotation) -> Constellation {
        Constellation { twice_spin: self.twice_spin, stars: self.stars.iter().map(|&s| rot.apply(s)).collect() }
    }

    /// Applies a general 3x3 matrix (used for improper operations).
    pub fn transformed(&self, m: &[[f64; 3]; 3]) -> Constellation {
        let stars = self
            .stars
            .iter()
            .map(|s| {
                [
                    m[0][0] * s[0] + m[0][1] * s[1] + m[0][2] * s[2],
                    m[1][0] * s[0] + m[1][1] * s[1] + m[1][2] * s[2],
                    m[2][0] * s[0] + m[2][1] * s[1] + m[2][2] * s[2],
                ]
            })
            .collect();
        Constellation { twice_spin: self.twice_spin, stars }
    }

    /// Largest chordal distance between any two stars.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0_f64;
        for (i, a) in self.stars.iter().enumerate() {
            for b in &self.stars[i + 1..] {
                d = d.max(chordal(*a, *b));
            }
        }
        d
    }

    /// CSV with header `x,y,z,theta,phi`, 15 significant digits.
    pub fn to_csv(&self) -> String {
        use crate::numeric::fmt15;
        let mut out = String::from("x,y,z,theta,phi\n");
        for &s in &self.stars {
            let (t, p) = angles(s);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt15(s[0]),
                fmt15(s[1]),
                fmt15(s[2]),
                fmt15(t),
                fmt15(p)
            ));
        }
        out
    }
}

pub fn chordal(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn constellation(state: &SpinState) -> Constellation {
    let coeffs = majorana_coefficients(state);
    if !needs_reframe(&coeffs) {
        let stars = extended_roots(&coeffs).iter().map(star_of_root).collect();
        return Constellation { twice_spin: state.twice_spin(), stars };
    }
    let rot = reframing_rotation(state);
    let turned = state.rotate(&rot);
    let stars = extended_roots(&majorana_coefficients(&turned)).iter().map(star_of_root).collect();
    let mut c = Constellation { twice_spin: state.twice_spin(), stars }.rotated(&rot.inverse());
    // snapped clusters come back as exact duplicates; relocate each against
    // the unrotated coefficients
    let mut done = vec![false; c.stars.len()];
    for i in 0..c.stars.len() {
        if done[i] {
            continue;
        }
        let s = c.stars[i];
        let members: Vec<usize> = (i..c.stars.len()).filter(|&j| c.stars[j] == s).collect();
        if members.len() > 1 {
            let r = polish_multiple_root(&coeffs, root_of_star(s), members.len());
            let v = star_of_root(&r);
            for &j in &members {
                c.stars[j] = v;
                done[j] = true;
            }
        }
    }
    c
}

/// The state (up to global phase) whose constellation is `c`.
pub fn state_from_constellation(c: &Constellation) -> Result<SpinState> {
    let n = c.twice_spin() as usize;
    let mut poly = vec![C64::new(1.0, 0.0)];
    for &s in c.stars() {
        if let ExtRoot::Finite(r) = root_of_star(s) {
            let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
            for (i, &a) in poly.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            poly = next;
        }
    }
    let mut amps = vec![C64::new(0.0, 0.0); n + 1];
    for (k, a) in poly.into_iter().enumerate() {
        amps[k] = a / binomial(n as u64, k as u64).sqrt();
    }
    SpinState::new(c.twice_spin(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::task_rng;
    use crate::states::{direction, random_haar_rotation};
    use rand::Rng;

    #[test]
    fn lowest_weight_state_has_all_roots_at_infinity() {
        let s = SpinState::basis(5, 0).unwrap();
        assert!(majorana_roots(&s).iter().all(ExtRoot::is_infinite));
        let c = constellation(&s);
        assert!(c.stars().iter().all(|v| v == &[0.0, 0.0, -1.0]));
    }

    #[test]
    fn spin_one_m_zero_gives_zero_and_infinity() {
        let s = SpinState::basis(2, 1).unwrap();
        let r = majorana_roots(&s);
        assert!(r.contains(&ExtRoot::Infinity));
        assert!(r.contains(&ExtRoot::Finite(C64::new(0.0, 0.0))));
        let c = constellation(&s);
        assert!((chordal(c.stars()[0], c.stars()[1]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cat_state_roots_are_plus_minus_i() {
        let s = SpinState::new(2, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let r = majorana_roots(&s);
        for target in [C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
            assert!(r.iter().any(|x| x.chordal_distance(&ExtRoot::Finite(target)) < 1e-14));
        }
    }

    #[test]
    fn coherent_stars_sit_at_the_label() {
        let mut rng = task_rng(41, 0);
        for n in [1u32, 2, 3, 6, 12, 24] {
            for _ in 0..5 {
                let (t, p) = (rng.random::<f64>() * PI, rng.random::<f64>() * 2.0 * PI);
                let c = constellation(&SpinState::coherent(n, t, p).unwrap());
                let target = direction(t, p);
                for s in c.stars() {
                    assert!(chordal(*s, target) < 1e-9, "n = {n}");
                }
            }
        }
    }

    #[test]
    fn coherent_stars_near_the_poles() {
        for n in [8u32, 23, 40] {
            for (t, p) in [(1e-3, 2.0), (0.01, 0.3), (0.5, 2.47), (PI - 1e-3, 4.0), (PI - 0.06, 1.0)] {
                let c = constellation(&SpinState::coherent(n, t, p).unwrap());
                let target = direction(t, p);
                for s in c.stars() {
                    assert!(chordal(*s, target) < 1e-9, "n = {n}, θ = {t}");
                }
                let roots = majorana_roots(&SpinState::coherent(n, t, p).unwrap());
                assert_eq!(roots.len(), n as usize);
            }
        }
    }

    #[test]
    fn star_root_maps_are_inverse() {
        let mut rng = task_rng(42, 0);
        for _ in 0..100 {
            let r = ExtRoot::Finite(C64::new(rng.random::<f64>() * 6.0 - 3.0, rng.random::<f64>() * 6.0 - 3.0));
            let back = root_of_star(star_of_root(&r));
            assert!(back.chordal_distance(&r) < 1e-14);
        }
        assert_eq!(root_of_star(star_of_root(&ExtRoot::Infinity)), ExtRoot::Infinity);
    }

    #[test]
    fn state_round_trips_through_its_constellation() {
        let mut rng = task_rng(43, 0);
        for n in [1u32, 3, 8, 15] {
            let s = SpinState::random(n, &mut rng).unwrap();
            let back = state_from_constellation(&constellation(&s)).unwrap();
            assert!((s.overlap(&back).unwrap().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_moves_stars_rigidly() {
        let mut rng = task_rng(44, 0);
        let s = SpinState::random(7, &mut rng).unwrap();
        let r = random_haar_rotation(&mut rng);
        let a = constellation(&s.rotate(&r));
        let b = constellation(&s).rotated(&r);
        for x in a.stars() {
            assert!(b.stars().iter().any(|y| chordal(*x, *y) < 1e-8));
        }
    }

    #[test]
    fn constellation_rejects_wrong_star_count() {
        assert!(matches!(Constellation::new(3, vec![[0.0, 0.0, 1.0]]), Err(Error::StarCount { .. })));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = constellation(&SpinState::basis(2, 1).unwrap());
        let csv = c.to_csv();
        assert!(csv.starts_with("x,y,z,theta,phi\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
