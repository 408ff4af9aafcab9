//! Roots of complex polynomials on the extended plane.
//!
//! Aberth-Ehrlich simultaneous iteration on the deflated polynomial, followed
//! by Newton polishing. Clusters that are numerically one multiple root are
//! refined as such: a k-fold root is a simple root of the (k-1)-th
//! derivative, which pins it to full precision where the individual cluster
//! members would only be accurate to about `eps^(1/k)`.

use num_complex::Complex64 as C64;

use crate::numeric::binomial;

/// Coefficients below this fraction of the largest one count as zero when
/// deflating roots at zero or infinity.
pub const DEFLATION_THRESHOLD: f64 = 1e-13;

const MAX_SWEEPS: usize = 600;
const EPS: f64 = f64::EPSILON;

/// A root on the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtRoot {
    Finite(C64),
    Infinity,
}

impl ExtRoot {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRoot::Infinity)
    }

    /// Chordal distance between the stereographic images on the unit sphere.
    pub fn chordal_distance(&self, other: &ExtRoot) -> f64 {
        let p = riemann_point(self);
        let q = riemann_point(other);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }
}

/// Inverse stereographic image on the unit sphere, `z -> (2z, |z|²-1)/(1+|z|²)`.
fn riemann_point(r: &ExtRoot) -> [f64; 3] {
    match *r {
        ExtRoot::Infinity => [0.0, 0.0, 1.0],
        ExtRoot::Finite(z) => {
            let n = z.norm_sqr();
            if n <= 1.0 {
                [2.0 * z.re / (1.0 + n), 2.0 * z.im / (1.0 + n), (n - 1.0) / (n + 1.0)]
            } else {
                let w = z.inv();
                let m = w.norm_sqr();
                [2.0 * w.re / (1.0 + m), -2.0 * w.im / (1.0 + m), (1.0 - m) / (1.0 + m)]
            }
        }
    }
}

/// Polynomial with coefficients in ascending powers.
#[derive(Clone, Debug)]
struct Poly {
    c: Vec<C64>,
    /// Absolute uncertainty of each coefficient.
    noise: Vec<f64>,
}

impl Poly {
    fn degree(&self) -> usize {
        self.c.len() - 1
    }

    fn reversed(&self) -> Poly {
        Poly { c: self.c.iter().rev().copied().collect(), noise: self.noise.iter().rev().copied().collect() }
    }

    /// Value of the `order`-th derivative, its running error scale
    /// `Σ |c_i| i!/(i-order)! |z|^(i-order)` and the same sum over the
    /// coefficient noise.
    fn derivative_at(&self, order: usize, z: C64) -> (C64, f64, f64) {
        let n = self.degree();
        if order > n {
            return (C64::new(0.0, 0.0), 0.0, 0.0);
        }
        let az = z.norm();
        let mut v = C64::new(0.0, 0.0);
        let mut b = 0.0;
        let mut e = 0.0;
        for i in (order..=n).rev() {
            let f = falling(i, order);
            v = v * z + self.c[i] * f;
            b = b * az + self.c[i].norm() * f;
            e = e * az + self.noise[i] * f;
        }
        (v, b, e)
    }

    /// `p(z)` and `p'(z)`.
    fn eval2(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        for &a in self.c.iter().rev() {
            d = d * z + p;
            p = p * z + a;
        }
        (p, d)
    }

    /// Newton quotient `p(z)/p'(z)`, evaluated through the reversed
    /// polynomial when `|z| > 1`.
    fn newton_quotient(&self, rev: &Poly, z: C64) -> C64 {
        if z.norm() <= 1.0 {
            let (p, d) = self.eval2(z);
            p / d
        } else {
            let w = z.inv();
            let (q, dq) = rev.eval2(w);
            let n = self.degree() as f64;
            // p/p' = 1 / (w (n - w q'/q))
            C64::new(1.0, 0.0) / (w * (n - w * dq / q))
        }
    }

    /// True when `|p(z)|` is at the rounding level.
    fn is_residual_small(&self, rev: &Poly, z: C64) -> bool {
        let (v, b, _) = if z.norm() <= 1.0 {
            self.derivative_at(0, z)
        } else {
            rev.derivative_at(0, z.inv())
        };
        v.norm() <= 8.0 * (self.degree() as f64 + 1.0) * EPS * b
    }
}

fn falling(i: usize, order: usize) -> f64 {
    ((i - order + 1)..=i).fold(1.0, |acc, v| acc * v as f64)
}

/// Roots of `Σ_k c_k z^k` with `c.len() - 1` roots counted on the extended
/// plane: vanishing leading coefficients become roots at infinity and
/// vanishing trailing ones roots at zero.
pub fn extended_roots(coeffs: &[C64]) -> Vec<ExtRoot> {
    assert!(!coeffs.is_empty(), "empty coefficient list");
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(scale > 0.0, "zero polynomial");
    let thr = DEFLATION_THRESHOLD * scale;

    let mut hi = coeffs.len() - 1;
    let mut out = Vec::with_capacity(hi);
    while hi > 0 && coeffs[hi].norm() <= thr {
        out.push(ExtRoot::Infinity);
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo].norm() <= thr {
        out.push(ExtRoot::Finite(C64::new(0.0, 0.0)));
        lo += 1;
    }
    if hi > lo {
        let noise = coefficient_noise(coeffs);
        let poly = Poly { c: coeffs[lo..=hi].to_vec(), noise: noise[lo..=hi].to_vec() };
        out.extend(finite_roots(&poly).into_iter().map(ExtRoot::Finite));
    }
    out
}

/// Coefficient uncertainty of a few ulps in the Bombieri norm
/// `‖c‖² = Σ |c_k|² / C(n, k)`, the norm that is invariant under rotations of
/// the Riemann sphere. For Majorana polynomials it is the state norm, so this
/// is an absolute rounding level on the amplitudes, which is what survives a
/// rotation of the state.
fn coefficient_noise(coeffs: &[C64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    let norm = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm_sqr() / binomial(n as u64, k as u64))
        .sum::<f64>()
        .sqrt();
    let unit = 4.0 * (n as f64 + 1.0) * EPS * norm;
    (0..=n).map(|k| unit * binomial(n as u64, k as u64).sqrt()).collect()
}

/// All roots of a polynomial with nonzero leading and constant coefficients.
fn finite_roots(poly: &Poly) -> Vec<C64> {
    let n = poly.degree();
    if n == 1 {
        return vec![-poly.c[0] / poly.c[1]];
    }
    let rev = poly.reversed();
    let mut z = initial_guesses(poly);
    let mut done = vec![false; n];
    for _ in 0..MAX_SWEEPS {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let nq = poly.newton_quotient(&rev, z[i]);
            let repulsion: C64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = nq / (C64::new(1.0, 0.0) - nq * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
            }
            if step.norm() <= 2.0 * EPS * z[i].norm() || poly.is_residual_small(&rev, z[i]) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    refine_multiplicities(poly, &rev, &mut z);
    z
}

/// Starting points on circles read off the upper convex hull of
/// `(k, ln|c_k|)` (Bini's rule), with a fixed angular offset.
fn initial_guesses(poly: &Poly) -> Vec<C64> {
    let n = poly.degree();
    let pts: Vec<(usize, f64)> = poly
        .c
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    let offset = 0.4;
    for w in hull.windows(2) {
        let (i, li) = w[0];
        let (j, lj) = w[1];
        let count = j - i;
        let radius = ((li - lj) / count as f64).exp();
        for k in 0..count {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64 + offset + i as f64;
            out.push(C64::from_polar(radius, ang));
        }
    }
    out
}

/// Re-solves a `k`-fold root against `coeffs` by Newton on the `(k-1)`-th
/// derivative, starting from `root`. Used after a change of frame, when the
/// cluster's multiplicity is known but its location came from rotated (hence
/// noisier) coefficients. Returns `root` unchanged if the iteration wanders.
pub fn polish_multiple_root(coeffs: &[C64], root: ExtRoot, k: usize) -> ExtRoot {
    let ExtRoot::Finite(z) = root else { return root };
    if k < 2 || k >= coeffs.len() {
        return root;
    }
    let poly = Poly { c: coeffs.to_vec(), noise: coefficient_noise(coeffs) };
    let rev = poly.reversed();
    let outer = z.norm() > 1.0;
    let (chart, mut c) = if outer { (&rev, z.inv()) } else { (&poly, z) };
    for _ in 0..30 {
        let (v, _, _) = chart.derivative_at(k - 1, c);
        let (d, _, _) = chart.derivative_at(k, c);
        let step = v / d;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return root;
        }
        c -= step;
        if step.norm() <= EPS * c.norm().max(EPS) {
            break;
        }
    }
    let out = ExtRoot::Finite(if outer { c.inv() } else { c });
    if out.chordal_distance(&root) < 1e-6 { out } else { root }
}

/// Snaps clusters that are one multiple root to that root and Newton-polishes
/// the rest.
fn refine_multiplicities(poly: &Poly, rev: &Poly, z: &mut [C64]) {
    let n = z.len();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        // neighbours of z[i] among unassigned roots by chordal distance
        let mut nbrs: Vec<(f64, usize)> = (0..n)
            .filter(|&j| !assigned[j])
            .map(|j| (ExtRoot::Finite(z[i]).chordal_distance(&ExtRoot::Finite(z[j])), j))
            .collect();
        nbrs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Option<(usize, C64)> = None;
        for k in (2..=nbrs.len()).rev() {
            let gap_ok = k == nbrs.len() || nbrs[k - 1].0 < 0.5 * nbrs[k].0;
            if !gap_ok {
                continue;
            }
            let members: Vec<C64> = nbrs[..k].iter().map(|&(_, j)| z[j]).collect();
            if let Some(c) = multiple_root(poly, rev, &members) {
                best = Some((k, c));
                break;
            }
        }
        match best {
            Some((k, c)) => {
                for &(_, j) in &nbrs[..k] {
                    z[j] = c;
                    assigned[j] = true;
                }
            }
            None => {
                z[i] = newton_polish(poly, rev, z[i]);
                assigned[i] = true;
            }
        }
    }
}

fn newton_polish(poly: &Poly, rev: &Poly, mut z: C64) -> C64 {
    for _ in 0..8 {
        let step = poly.newton_quotient(rev, z);
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        let next = z - step;
        if step.norm() <= EPS * z.norm() {
            return next;
        }
        z = next;
    }
    z
}

/// Tests whether the cluster `members` is one root of multiplicity
/// `members.len()` and returns it.
fn multiple_root(poly: &Poly, rev: &Poly, members: &[C64]) -> Option<C64> {
    let k = members.len();
    // work in the chart where the cluster is bounded
    let outer = members.iter().map(|m| m.norm()).sum::<f64>() / k as f64 > 1.0;
    let (chart, pts): (&Poly, Vec<C64>) = if outer {
        (rev, members.iter().map(|m| m.inv()).collect())
    } else {
        (poly, members.to_vec())
    };
    let mut c: C64 = pts.iter().sum::<C64>() / k as f64;
    let order = k - 1;
    for _ in 0..60 {
        let (v, _, _) = chart.derivative_at(order, c);
        let (d, _, _) = chart.derivative_at(order + 1, c);
        let step = v / d;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        c -= step;
        if step.norm() <= EPS * c.norm().max(EPS) {
            break;
        }
    }
    // rounding in the evaluation plus the coefficients' own uncertainty
    let tau = 64.0 * (chart.degree() as f64 + 1.0) * EPS;
    for j in 0..k {
        let (v, b, e) = chart.derivative_at(j, c);
        if v.norm() > tau * b + e {
            return None;
        }
    }
    Some(if outer { c.inv() } else { c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(roots: &[C64], lead: C64) -> Vec<C64> {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (i, &a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            c = next;
        }
        c
    }

    fn matches(found: &[ExtRoot], expected: &[ExtRoot], tol: f64) -> bool {
        let mut used = vec![false; found.len()];
        expected.iter().all(|e| {
            if let Some(i) = (0..found.len()).find(|&i| !used[i] && found[i].chordal_distance(e) <= tol) {
                used[i] = true;
                true
            } else {
                false
            }
        })
    }

    #[test]
    fn simple_roots() {
        let roots: Vec<C64> = vec![
            C64::new(1.0, 0.0),
            C64::new(-2.0, 0.5),
            C64::new(0.1, -3.0),
            C64::new(10.0, 10.0),
            C64::new(-0.01, 0.02),
        ];
        let c = expand(&roots, C64::new(0.7, -0.2));
        let found = extended_roots(&c);
        let exp: Vec<ExtRoot> = roots.iter().map(|&r| ExtRoot::Finite(r)).collect();
        assert!(matches(&found, &exp, 1e-12));
    }

    #[test]
    fn deflates_zero_and_infinity() {
        // √2 z with degree-2 layout: roots {0, ∞}
        let c = [C64::new(0.0, 0.0), C64::new(2f64.sqrt(), 0.0), C64::new(0.0, 0.0)];
        let found = extended_roots(&c);
        assert!(matches(&found, &[ExtRoot::Finite(C64::new(0.0, 0.0)), ExtRoot::Infinity], 0.0));
        let c = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        assert_eq!(extended_roots(&c), vec![ExtRoot::Infinity, ExtRoot::Infinity]);
    }

    #[test]
    fn multiple_root_is_resolved_to_full_precision() {
        // |r| > 1 with n = 30 would push the leading coefficient below the
        // deflation threshold, so the large case sits inside the unit disk
        for (n, r) in [(2usize, C64::new(-0.7, 1.9)), (5, C64::new(-0.7, 1.9)), (12, C64::new(-0.7, 1.9)), (30, C64::new(-0.7, 0.5))] {
            let c = expand(&vec![r; n], C64::new(1.0, 0.0));
            let found = extended_roots(&c);
            assert_eq!(found.len(), n);
            for f in &found {
                assert!(f.chordal_distance(&ExtRoot::Finite(r)) < 1e-12, "n = {n}: {f:?}");
            }
        }
    }

    #[test]
    fn mixed_multiplicities() {
        let a = C64::new(0.3, 0.4);
        let b = C64::new(-5.0, 1.0);
        let roots = vec![a, a, a, b, b, C64::new(0.0, -1.0)];
        let found = extended_roots(&expand(&roots, C64::new(2.0, 0.0)));
        let exp: Vec<ExtRoot> = roots.iter().map(|&r| ExtRoot::Finite(r)).collect();
        assert!(matches(&found, &exp, 1e-11));
    }

    #[test]
    fn close_but_distinct_roots_stay_separate() {
        let roots = vec![C64::new(1.0, 0.0), C64::new(1.0 + 1e-3, 0.0), C64::new(-1.0, 0.5)];
        let found = extended_roots(&expand(&roots, C64::new(1.0, 0.0)));
        let exp: Vec<ExtRoot> = roots.iter().map(|&r| ExtRoot::Finite(r)).collect();
        assert!(matches(&found, &exp, 1e-10));
    }
}
