//! Point-group symmetry of constellations, in O(3).
//!
//! Any orthogonal map that permutes a point set is pinned down by where it
//! sends two non-collinear reference points, and their images must be points
//! of the set at the same mutual angle. So candidates are generated from
//! pairs of target stars, each candidate is refitted to its induced matching
//! (Kabsch), and accepted when a perfect matching within the chordal
//! tolerance exists. This enumerates the whole group; no axis or angle search
//! is needed.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorana::{chordal, Constellation};
use crate::states::Rotation;

pub const DEFAULT_TOL: f64 = 1e-5;

/// Two operations closer than this (Frobenius) are the same element. Distinct
/// elements of the finite groups that occur here are much further apart.
const SAME_OP: f64 = 0.05;

pub type Mat3 = [[f64; 3]; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointGroupReport {
    /// Number of orthogonal operations permuting the stars. For collinear
    /// constellations, the discrete part only (see `continuous`).
    pub order: usize,
    /// Number of those that are rotations.
    pub proper_order: usize,
    /// All stars lie on one axis, so every rotation about it is a symmetry.
    pub continuous: bool,
    pub generators: Vec<Mat3>,
}

impl PointGroupReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 0.1 {
        Ok(())
    } else {
        Err(Error::ToleranceOutOfRange(tol))
    }
}

fn to_na(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn to_mat3(m: &Matrix3<f64>) -> Mat3 {
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

fn apply(m: &Matrix3<f64>, v: [f64; 3]) -> [f64; 3] {
    let w = m * to_na(v);
    [w.x, w.y, w.z]
}

/// Orthonormal frame with first axis `p` and `q` in the first two.
fn frame(p: [f64; 3], q: [f64; 3]) -> Option<Matrix3<f64>> {
    let e1 = to_na(p).normalize();
    let q = to_na(q);
    let q_perp = q - e1 * e1.dot(&q);
    if q_perp.norm() < 1e-9 {
        return None;
    }
    let e2 = q_perp.normalize();
    let e3 = e1.cross(&e2);
    Some(Matrix3::from_columns(&[e1, e2, e3]))
}

/// Perfect matching of `from[i] -> to[j]` with chordal distance at most `tol`
/// (Kuhn's augmenting paths). Returns `assign[i] = j`.
fn bottleneck_match(from: &[[f64; 3]], to: &[[f64; 3]], tol: f64) -> Option<Vec<usize>> {
    let n = from.len();
    if n != to.len() {
        return None;
    }
    let adj: Vec<Vec<usize>> =
        from.iter().map(|a| (0..n).filter(|&j| chordal(*a, to[j]) <= tol).collect()).collect();
    if adj.iter().any(Vec::is_empty) {
        return None;
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adj, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut assign = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        assign[o.expect("perfect matching")] = j;
    }
    Some(assign)
}

/// Least-squares orthogonal map taking `from[i]` to `to[assign[i]]`, with
/// determinant `+1` or `-1` as requested.
fn kabsch(from: &[[f64; 3]], to: &[[f64; 3]], assign: &[usize], proper: bool) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for (i, &j) in assign.iter().enumerate() {
        h += to_na(to[j]) * to_na(from[i]).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let s = (u * vt).determinant().signum();
    let d = if proper { s } else { -s };
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * vt
}

/// Candidate maps sending the reference pair `(p, q)` of `a` onto pairs of
/// `b` at the same angle.
fn candidates(a: &Constellation, b: &Constellation, tol: f64, improper: bool) -> Vec<Matrix3<f64>> {
    let stars = a.stars();
    let p = stars[0];
    // the reference partner: the star most nearly orthogonal to p, for a
    // well-conditioned frame
    let q = *stars
        .iter()
        .min_by(|x, y| dot(p, **x).abs().total_cmp(&dot(p, **y).abs()))
        .expect("nonempty");
    let Some(f) = frame(p, q) else { return Vec::new() };
    let pq = dot(p, q);
    let mut out = Vec::new();
    let targets = distinct(b.stars(), tol);
    for &p2 in &targets {
        for &q2 in &targets {
            if (dot(p2, q2) - pq).abs() > 4.0 * tol {
                continue;
            }
            let Some(f2) = frame(p2, q2) else { continue };
            out.push(f2 * f.transpose());
            if improper {
                out.push(f2 * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0)) * f.transpose());
            }
        }
    }
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// One representative per cluster of stars closer than `tol`.
fn distinct(stars: &[[f64; 3]], tol: f64) -> Vec<[f64; 3]> {
    let mut out: Vec<[f64; 3]> = Vec::new();
    for &s in stars {
        if out.iter().all(|&t| chordal(s, t) > tol) {
            out.push(s);
        }
    }
    out
}

/// Validates a candidate: match loosely, refit, and require the refitted map
/// to match within `tol`.
fn verify(a: &Constellation, b: &Constellation, cand: &Matrix3<f64>, tol: f64) -> Option<Matrix3<f64>> {
    let proper = cand.determinant() > 0.0;
    let mapped: Vec<[f64; 3]> = a.stars().iter().map(|&s| apply(cand, s)).collect();
    // the frame inherits the reference stars' error, amplified by the
    // frame's conditioning; a loose first pass absorbs that
    let assign = bottleneck_match(&mapped, b.stars(), (50.0 * tol).min(0.5))?;
    let fit = kabsch(a.stars(), b.stars(), &assign, proper);
    let mapped: Vec<[f64; 3]> = a.stars().iter().map(|&s| apply(&fit, s)).collect();
    bottleneck_match(&mapped, b.stars(), tol)?;
    Some(fit)
}

fn is_collinear(c: &Constellation, tol: f64) -> bool {
    let p = c.stars()[0];
    c.stars().iter().all(|&s| chordal(s, p) <= tol || chordal(s, [-p[0], -p[1], -p[2]]) <= tol)
}

fn push_unique(set: &mut Vec<Matrix3<f64>>, m: Matrix3<f64>) -> bool {
    if set.iter().any(|x| (x - m).norm() < SAME_OP) {
        false
    } else {
        set.push(m);
        true
    }
}

/// Closes a set of orthogonal matrices under multiplication.
fn close(mut set: Vec<Matrix3<f64>>, cap: usize) -> Vec<Matrix3<f64>> {
    push_unique(&mut set, Matrix3::identity());
    let mut i = 0;
    while i < set.len() && set.len() <= cap {
        for j in 0..set.len() {
            let m = set[i] * set[j];
            push_unique(&mut set, m);
            let m = set[j] * set[i];
            push_unique(&mut set, m);
        }
        i += 1;
    }
    set
}

/// Greedy generating set: keep an element if the group so far misses it.
fn generators(group: &[Matrix3<f64>]) -> Vec<Matrix3<f64>> {
    let mut gens: Vec<Matrix3<f64>> = Vec::new();
    let mut span = vec![Matrix3::identity()];
    // rotations first, so generators of the proper subgroup come first
    let mut order: Vec<&Matrix3<f64>> = group.iter().collect();
    order.sort_by_key(|m| m.determinant() < 0.0);
    for m in order {
        if span.iter().all(|x| (x - m).norm() >= SAME_OP) {
            gens.push(*m);
            let mut with = span.clone();
            with.extend(gens.iter().copied());
            span = close(with, group.len());
        }
    }
    gens
}

/// Full O(3) symmetry group of the star multiset.
pub fn detect_point_group(c: &Constellation, tol: f64) -> Result<PointGroupReport> {
    check_tol(tol)?;
    if c.is_empty() {
        return Err(Error::InvalidArgument("empty constellation".into()));
    }
    if is_collinear(c, tol) {
        return Ok(axial_report(c, tol));
    }
    let mut group: Vec<Matrix3<f64>> = Vec::new();
    for cand in candidates(c, c, tol, true) {
        if group.iter().any(|x| (x - cand).norm() < SAME_OP) {
            continue;
        }
        if let Some(fit) = verify(c, c, &cand, tol) {
            push_unique(&mut group, fit);
        }
    }
    let n = group.len();
    let group = close(group, 4 * n + 8);
    if group.len() != n {
        return Err(Error::Invariant(format!("symmetry set of size {n} is not closed")));
    }
    let proper_order = group.iter().filter(|m| m.determinant() > 0.0).count();
    Ok(PointGroupReport {
        order: group.len(),
        proper_order,
        continuous: false,
        generators: generators(&group).iter().map(to_mat3).collect(),
    })
}

/// Stars on one axis: rotations about it are symmetries, so only whether the
/// two ends can be exchanged is reported (order 2 with a half-turn, else 1).
fn axial_report(c: &Constellation, tol: f64) -> PointGroupReport {
    let p = c.stars()[0];
    let up = c.stars().iter().filter(|&&s| chordal(s, p) <= tol).count();
    let down = c.len() - up;
    if up != down {
        return PointGroupReport { order: 1, proper_order: 1, continuous: true, generators: Vec::new() };
    }
    // half-turn about an axis perpendicular to p
    let helper = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let axis = to_na(p).cross(&to_na(helper)).normalize();
    let half_turn = axis * axis.transpose() * 2.0 - Matrix3::identity();
    PointGroupReport { order: 2, proper_order: 2, continuous: true, generators: vec![to_mat3(&half_turn)] }
}

/// A rotation taking `a` onto `b` within `tol`, preferring the smallest
/// rotation angle when `a` has symmetries.
pub fn match_constellations(a: &Constellation, b: &Constellation, tol: f64) -> Option<Rotation> {
    if a.twice_spin() != b.twice_spin() || a.is_empty() || !(tol > 0.0) {
        return None;
    }
    let mut best: Option<Matrix3<f64>> = None;
    let cands = if is_collinear(a, tol) {
        // only the first reference star matters; map it by the minimal turn
        distinct(b.stars(), tol)
            .into_iter()
            .map(|t| to_mat3_rotation_between(a.stars()[0], t))
            .collect()
    } else {
        candidates(a, b, tol, false)
    };
    for cand in cands {
        let Some(fit) = verify(a, b, &cand, tol) else { continue };
        let angle = |m: &Matrix3<f64>| ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        if best.as_ref().is_none_or(|b| angle(&fit) < angle(b) - 1e-12) {
            best = Some(fit);
        }
    }
    best.map(|m| Rotation::from_matrix(&to_mat3(&m)))
}

/// Minimal rotation taking unit `u` to unit `v`.
fn to_mat3_rotation_between(u: [f64; 3], v: [f64; 3]) -> Matrix3<f64> {
    let (u, v) = (to_na(u).normalize(), to_na(v).normalize());
    let axis = u.cross(&v);
    let c = u.dot(&v);
    if axis.norm() < 1e-12 {
        if c > 0.0 {
            return Matrix3::identity();
        }
        let helper = if u.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let k = u.cross(&helper).normalize();
        return k * k.transpose() * 2.0 - Matrix3::identity();
    }
    let k = axis.normalize();
    let s = axis.norm();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * s + kx * kx * (1.0 - c)
}

/// Vertices of the Platonic solids, as constellations.
pub mod solids {
    use super::Constellation;

    fn build(points: Vec<[f64; 3]>) -> Constellation {
        Constellation::new(points.len() as u32, points).expect("nonzero vertices")
    }

    pub fn tetrahedron() -> Constellation {
        build(vec![[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]])
    }

    pub fn octahedron() -> Constellation {
        build(vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ])
    }

    pub fn cube() -> Constellation {
        let mut v = Vec::new();
        for x in [-1.0, 1.0] {
            for y in [-1.0, 1.0] {
                for z in [-1.0, 1.0] {
                    v.push([x, y, z]);
                }
            }
        }
        build(v)
    }

    pub fn icosahedron() -> Constellation {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let mut v = Vec::new();
        for a in [-1.0, 1.0] {
            for b in [-g, g] {
                v.push([0.0, a, b]);
                v.push([a, b, 0.0]);
                v.push([b, 0.0, a]);
            }
        }
        build(v)
    }

    pub fn dodecahedron() -> Constellation {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let mut v = cube().stars().iter().map(|s| [s[0] * 3f64.sqrt(), s[1] * 3f64.sqrt(), s[2] * 3f64.sqrt()]).collect::<Vec<_>>();
        for a in [-1.0, 1.0] {
            for b in [-1.0, 1.0] {
                v.push([0.0, a / g, b * g]);
                v.push([a / g, b * g, 0.0]);
                v.push([b * g, 0.0, a / g]);
            }
        }
        build(v)
    }
}
