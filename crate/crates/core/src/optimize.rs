//! Extremal states of `Ē`: multistart projected-gradient search on the unit
//! sphere of `C^(2S+1) = R^(2(2S+1))`.
//!
//! `Ē(ψ) = 1 - f(ψ)/|ψ|⁴` with `f = 1/(2S+1) Σ_{K,q} |A_Kq|²` quartic in the
//! amplitudes, so value and gradient come from one pass over the multipole
//! kernel. Global phase and rotations leave `Ē` unchanged; those flat
//! directions are not gauge-fixed, and equivalent optima are grouped after
//! the fact by matching constellations.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorana::constellation;
use crate::multipole::{averaged_entanglement, kernel, MultipoleKernel};
use crate::numeric::task_rng;
use crate::states::SpinState;
use crate::symmetry::match_constellations;

/// Restarts whose final values are this close to the best count as reaching it.
pub const SAME_VALUE: f64 = 1e-7;
/// Below this gradient norm, changes in value are too close to rounding to
/// steer a line search; the ascent hands over to [`settle`].
const SETTLE_BELOW: f64 = 1e-6;
/// Chordal tolerance for deciding that two optima are the same up to rotation.
pub const SAME_CONSTELLATION: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop when the Riemannian gradient norm drops below this.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Step shrink factor during backtracking, in (0, 1).
    pub backtrack: f64,
    /// Armijo constant, in (0, 1).
    pub sufficient_decrease: f64,
    pub seed: u64,
    /// Probe converged points with small coordinate perturbations and resume
    /// the ascent if one of them improves.
    pub polish: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 50,
            max_iterations: 20_000,
            gradient_tolerance: 1e-9,
            initial_step: 0.1,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            seed: 0,
            polish: true,
        }
    }
}

impl OptimizerConfig {
    /// Defaults with `max(50, 20 S)` restarts.
    pub fn for_spin(twice_spin: u32) -> Self {
        OptimizerConfig { restarts: 50.max(10 * twice_spin as usize), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("optimizer config: {what}")));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.gradient_tolerance > 0.0) || !(self.initial_step > 0.0) {
            return bad("tolerances and steps must be positive");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return bad("sufficient_decrease must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub index: usize,
    /// `Ē` of the final state.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// No probe of the polishing pass improved on the final point.
    pub locally_confirmed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub twice_spin: u32,
    /// `"maximize"` or `"minimize"`.
    pub objective: String,
    pub best_state: SpinState,
    pub best_value: f64,
    pub best_restart: usize,
    /// Restarts reaching the best value, and how many distinct constellations
    /// (up to rotation) they represent.
    pub restarts_at_best: usize,
    pub distinct_optima: usize,
    pub restarts: Vec<RestartOutcome>,
    pub seed: u64,
    pub config: OptimizerConfig,
    pub wall_time_seconds: f64,
}

impl OptimizationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `f = 1/(2S+1) Σ |A_Kq|²` and `∂f/∂ψ*`.
fn quartic_and_gradient(ker: &MultipoleKernel, amps: &[C64]) -> (f64, Vec<C64>) {
    let w = 1.0 / amps.len() as f64;
    let mut f = 0.0;
    let mut g = vec![C64::new(0.0, 0.0); amps.len()];
    for block in ker.blocks() {
        let a = MultipoleKernel::contract(block, amps);
        f += a.norm_sqr();
        let (wa, wac) = (w * a, w * a.conj());
        for &(k, c) in &block.terms {
            let kp = (k as i64 + block.q as i64) as usize;
            g[k] += wac * (c * amps[kp]);
            g[kp] += wa * (c * amps[k]);
        }
    }
    (w * f, g)
}

fn quartic(ker: &MultipoleKernel, amps: &[C64]) -> f64 {
    let s: f64 = ker.blocks().iter().map(|b| MultipoleKernel::contract(b, amps).norm_sqr()).sum();
    s / amps.len() as f64
}

/// `Ē` of the state obtained by normalizing `ψ = a + i b` from the point
/// `(a_0, …, a_2S, b_0, …, b_2S)`, and its gradient with respect to that
/// point. The gradient is orthogonal to the point (the objective is
/// scale-invariant).
pub fn objective_and_gradient(point: &[f64]) -> Result<(f64, Vec<f64>)> {
    if point.len() < 4 || !point.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("point of length {} is not 2(2S+1)", point.len())));
    }
    let d = point.len() / 2;
    let amps: Vec<C64> = (0..d).map(|k| C64::new(point[k], point[d + k])).collect();
    let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !(n2 > 0.0 && n2.is_finite()) {
        return Err(Error::ZeroVector);
    }
    let ker = kernel(d as u32 - 1);
    let (f, g) = quartic_and_gradient(&ker, &amps);
    let value = 1.0 - f / (n2 * n2);
    // ∂Ē/∂ψ* = -g/N² + 2fψ/N³, real gradient is twice that
    let mut grad = vec![0.0; 2 * d];
    for k in 0..d {
        let z = 2.0 * (-g[k] / (n2 * n2) + amps[k] * (2.0 * f / (n2 * n2 * n2)));
        grad[k] = z.re;
        grad[d + k] = z.im;
    }
    Ok((value, grad))
}

/// Signed objective on unit vectors: `sign · Ē`.
struct Ascent {
    ker: Arc<MultipoleKernel>,
    sign: f64,
}

impl Ascent {
    fn value(&self, amps: &[C64]) -> f64 {
        self.sign * (1.0 - quartic(&self.ker, amps))
    }

    /// Value and Riemannian gradient at a unit vector.
    fn value_and_gradient(&self, amps: &[C64]) -> (f64, Vec<C64>) {
        let (f, g) = quartic_and_gradient(&self.ker, amps);
        let mut grad: Vec<C64> = g.iter().zip(amps).map(|(gk, a)| self.sign * 2.0 * (2.0 * f * a - gk)).collect();
        let radial: f64 = grad.iter().zip(amps).map(|(x, a)| (a.conj() * x).re).sum();
        for (x, a) in grad.iter_mut().zip(amps) {
            *x -= radial * a;
        }
        (self.sign * (1.0 - f), grad)
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn retract(x: &[C64], dir: &[C64], t: f64) -> Vec<C64> {
    let y: Vec<C64> = x.iter().zip(dir).map(|(a, d)| a + t * d).collect();
    let n = norm(&y);
    y.into_iter().map(|a| a / n).collect()
}

fn real_dot(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

struct Run {
    x: Vec<C64>,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
}

/// Monotone projected-gradient ascent with Barzilai-Borwein trial steps and
/// Armijo backtracking, down to a gradient norm of [`SETTLE_BELOW`].
fn ascend(obj: &Ascent, mut x: Vec<C64>, cfg: &OptimizerConfig, budget: usize) -> Run {
    let (mut h, mut g) = obj.value_and_gradient(&x);
    let mut step = cfg.initial_step;
    let mut prev: Option<(Vec<C64>, Vec<C64>)> = None;
    for it in 0..budget {
        let gn = norm(&g);
        if gn < cfg.gradient_tolerance.max(SETTLE_BELOW) {
            return Run { x, iterations: it, converged: gn < cfg.gradient_tolerance, gradient_norm: gn };
        }
        if let Some((px, pg)) = &prev {
            let s: Vec<C64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<C64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = real_dot(&s, &y).abs();
            if sy > 0.0 {
                step = (real_dot(&s, &s) / sy).clamp(1e-6, 1e2);
            }
        }
        let mut t = step;
        let accepted = loop {
            let y = retract(&x, &g, t);
            let hy = obj.value(&y);
            if hy >= h + cfg.sufficient_decrease * t * gn * gn {
                break Some((y, hy));
            }
            t *= cfg.backtrack;
            if t < 1e-18 {
                break None;
            }
        };
        let Some((y, hy)) = accepted else {
            // no step improves: the gradient is at rounding level
            return Run { x, iterations: it, converged: gn < cfg.gradient_tolerance, gradient_norm: gn };
        };
        let (_, gy) = obj.value_and_gradient(&y);
        prev = Some((std::mem::replace(&mut x, y), std::mem::replace(&mut g, gy)));
        h = hy;
    }
    let gn = norm(&g);
    Run { x, iterations: budget, converged: gn < cfg.gradient_tolerance, gradient_norm: gn }
}

/// Continues from a converged point while the gradient norm keeps falling.
///
/// Near an optimum the change in value drops below rounding long before the
/// point itself is accurate, so these steps are accepted on a smaller
/// gradient (the value may not move by more than rounding). This takes the
/// point from `sqrt(eps)`-level to rounding-level accuracy, which matters
/// for constellations: a k-fold star splits by `δ^(1/k)` under a
/// perturbation `δ` of the amplitudes.
fn settle(obj: &Ascent, mut x: Vec<C64>, max_steps: usize) -> Run {
    let (mut h, mut g) = obj.value_and_gradient(&x);
    let mut gn = norm(&g);
    let mut step = 0.1;
    let mut taken = 0;
    let mut fails = 0;
    while taken < max_steps && fails < 40 && gn > 0.0 {
        let y = retract(&x, &g, step);
        let (hy, gy) = obj.value_and_gradient(&y);
        let gny = norm(&gy);
        if gny < gn && hy >= h - 4.0 * f64::EPSILON * h.abs().max(1.0) {
            let s: Vec<C64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let d: Vec<C64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sd = real_dot(&s, &d).abs();
            if sd > 0.0 {
                step = (real_dot(&s, &s) / sd).clamp(1e-6, 1e2);
            }
            x = y;
            g = gy;
            gn = gny;
            h = hy.max(h);
            taken += 1;
            fails = 0;
        } else {
            step *= 0.5;
            fails += 1;
        }
    }
    Run { x, iterations: taken, converged: true, gradient_norm: gn }
}

/// Coordinate probes at decreasing scales. Returns an improving point if one
/// exists.
fn probe(obj: &Ascent, x: &[C64]) -> Option<Vec<C64>> {
    let h = obj.value(x);
    let d = x.len();
    for scale in [1e-2, 1e-3, 1e-4] {
        for k in 0..2 * d {
            for sign in [1.0, -1.0] {
                let mut e = vec![C64::new(0.0, 0.0); d];
                e[k % d] = if k < d { C64::new(sign, 0.0) } else { C64::new(0.0, sign) };
                let y = retract(x, &e, scale);
                if obj.value(&y) > h + 1e-13 {
                    return Some(y);
                }
            }
        }
    }
    None
}

fn run_restart(twice_spin: u32, obj: &Ascent, cfg: &OptimizerConfig, index: usize) -> (RestartOutcome, SpinState) {
    let mut rng = task_rng(cfg.seed, index as u64);
    let mut x = SpinState::random(twice_spin, &mut rng).expect("valid spin").into_amplitudes();
    let mut iterations = 0;
    let mut confirmed = !cfg.polish;
    let mut gradient_norm = f64::INFINITY;
    for _ in 0..5 {
        let budget = cfg.max_iterations.saturating_sub(iterations).max(1);
        let run = ascend(obj, x, cfg, budget);
        iterations += run.iterations;
        let budget = cfg.max_iterations.saturating_sub(iterations).clamp(1, 5000);
        let settled = settle(obj, run.x, budget);
        iterations += settled.iterations;
        x = settled.x;
        gradient_norm = settled.gradient_norm;
        if !cfg.polish {
            break;
        }
        match probe(obj, &x) {
            None => {
                confirmed = true;
                break;
            }
            Some(y) => x = y,
        }
    }
    let run = Run { x, iterations, converged: gradient_norm < cfg.gradient_tolerance, gradient_norm };
    let state = SpinState::new(twice_spin, run.x).expect("unit vector").canonical_phase();
    let outcome = RestartOutcome {
        index,
        value: averaged_entanglement(&state),
        iterations: run.iterations,
        converged: run.converged,
        gradient_norm: run.gradient_norm,
        locally_confirmed: confirmed,
    };
    (outcome, state)
}

fn optimize(twice_spin: u32, cfg: &OptimizerConfig, maximize: bool) -> Result<OptimizationReport> {
    if twice_spin == 0 {
        return Err(Error::InvalidSpin(twice_spin));
    }
    cfg.validate()?;
    let clock = Instant::now();
    let obj = Ascent { ker: kernel(twice_spin), sign: if maximize { 1.0 } else { -1.0 } };
    let runs: Vec<(RestartOutcome, SpinState)> =
        (0..cfg.restarts).into_par_iter().map(|i| run_restart(twice_spin, &obj, cfg, i)).collect();

    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let mut best = 0;
    for (i, (o, _)) in runs.iter().enumerate() {
        if better(o.value, runs[best].0.value) {
            best = i;
        }
    }
    let best_value = runs[best].0.value;
    let (restarts, states): (Vec<RestartOutcome>, Vec<SpinState>) = runs.into_iter().unzip();
    let at_best: Vec<&SpinState> = restarts
        .iter()
        .zip(&states)
        .filter(|(o, _)| (o.value - best_value).abs() <= SAME_VALUE)
        .map(|(_, s)| s)
        .collect();
    let restarts_at_best = at_best.len();
    let mut classes: Vec<crate::majorana::Constellation> = Vec::new();
    for s in at_best {
        let c = constellation(s);
        if !classes.iter().any(|k| match_constellations(k, &c, SAME_CONSTELLATION).is_some()) {
            classes.push(c);
        }
    }
    Ok(OptimizationReport {
        twice_spin,
        objective: if maximize { "maximize" } else { "minimize" }.to_string(),
        best_state: states[best].clone(),
        best_value,
        best_restart: best,
        restarts_at_best,
        distinct_optima: classes.len(),
        restarts,
        seed: cfg.seed,
        config: cfg.clone(),
        wall_time_seconds: clock.elapsed().as_secs_f64(),
    })
}

pub fn maximize_average_entanglement(twice_spin: u32, cfg: &OptimizerConfig) -> Result<OptimizationReport> {
    optimize(twice_spin, cfg, true)
}

pub fn minimize_average_entanglement(twice_spin: u32, cfg: &OptimizerConfig) -> Result<OptimizationReport> {
    optimize(twice_spin, cfg, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipole::{coherent_average_value, entropy_upper_bound};
    use crate::states::random_haar_rotation;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn to_point(s: &SpinState) -> Vec<f64> {
        let a = s.amplitudes();
        a.iter().map(|z| z.re).chain(a.iter().map(|z| z.im)).collect()
    }

    fn small(restarts: usize, seed: u64) -> OptimizerConfig {
        OptimizerConfig { restarts, seed, ..Default::default() }
    }

    #[test]
    fn value_matches_averaged_entanglement() {
        let mut rng = task_rng(71, 0);
        for n in [1u32, 4, 9] {
            let s = SpinState::random(n, &mut rng).unwrap();
            let (v, _) = objective_and_gradient(&to_point(&s)).unwrap();
            assert!((v - averaged_entanglement(&s)).abs() < 1e-12);
            // scale invariance
            let p: Vec<f64> = to_point(&s).iter().map(|x| 3.0 * x).collect();
            assert!((objective_and_gradient(&p).unwrap().0 - v).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = task_rng(72, 0);
        for n in [2u32, 5] {
            for _ in 0..5 {
                let p: Vec<f64> = (0..2 * (n as usize + 1)).map(|_| rng.sample(StandardNormal)).collect();
                let (_, g) = objective_and_gradient(&p).unwrap();
                let h = 1e-5;
                let fd: Vec<f64> = (0..p.len())
                    .map(|i| {
                        let mut a = p.clone();
                        let mut b = p.clone();
                        a[i] += h;
                        b[i] -= h;
                        (objective_and_gradient(&a).unwrap().0 - objective_and_gradient(&b).unwrap().0) / (2.0 * h)
                    })
                    .collect();
                let err = g.iter().zip(&fd).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let scale = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(err <= 1e-6 * scale, "n = {n}: {err} vs {scale}");
                // tangent to the sphere through p
                let radial: f64 = g.iter().zip(&p).map(|(x, y)| x * y).sum();
                assert!(radial.abs() < 1e-12 * scale * p.iter().map(|x| x * x).sum::<f64>().sqrt());
            }
        }
    }

    #[test]
    fn coherent_states_are_stationary() {
        let s = SpinState::coherent(6, 0.7, 1.1).unwrap();
        let obj = Ascent { ker: kernel(6), sign: 1.0 };
        let (_, g) = obj.value_and_gradient(s.amplitudes());
        assert!(norm(&g) < 1e-12);
        let mut amps = s.into_amplitudes();
        amps[3] += C64::new(0.05, -0.02);
        let p = SpinState::new(6, amps).unwrap();
        let (_, g) = obj.value_and_gradient(p.amplitudes());
        assert!(norm(&g) > 1e-3);
    }

    #[test]
    fn rejects_bad_points_and_configs() {
        assert!(matches!(objective_and_gradient(&[0.0; 6]), Err(Error::ZeroVector)));
        assert!(objective_and_gradient(&[1.0; 5]).is_err());
        assert!(maximize_average_entanglement(0, &small(1, 0)).is_err());
        let bad = OptimizerConfig { restarts: 0, ..Default::default() };
        assert!(maximize_average_entanglement(2, &bad).is_err());
        let bad = OptimizerConfig { backtrack: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spin_half_is_flat() {
        let r = maximize_average_entanglement(1, &small(3, 1)).unwrap();
        assert!((r.best_value - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn spin_one_maximum() {
        let r = maximize_average_entanglement(2, &small(8, 2)).unwrap();
        assert!((r.best_value - 8.0 / 15.0).abs() < 1e-9);
        assert!((averaged_entanglement(&r.best_state) - r.best_value).abs() < 1e-12);
        let c = constellation(&r.best_state);
        let s = c.stars();
        assert!((crate::majorana::chordal(s[0], s[1]) - 2.0).abs() < 1e-5);
        assert!(r.restarts.iter().all(|o| o.converged));
    }

    #[test]
    fn minimum_is_coherent() {
        for n in [3u32, 6] {
            let r = minimize_average_entanglement(n, &small(4, 3)).unwrap();
            assert!((r.best_value - coherent_average_value(n)).abs() < 1e-8);
            assert!(constellation(&r.best_state).diameter() < 1e-3);
        }
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = small(4, 9);
        let mut a = maximize_average_entanglement(3, &cfg).unwrap();
        let mut b = maximize_average_entanglement(3, &cfg).unwrap();
        a.wall_time_seconds = 0.0;
        b.wall_time_seconds = 0.0;
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn best_is_extreme_and_bounded() {
        let r = maximize_average_entanglement(5, &small(6, 4)).unwrap();
        let max = r.restarts.iter().map(|o| o.value).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.best_value, max);
        assert!(coherent_average_value(5) <= r.best_value && r.best_value < entropy_upper_bound(5));
    }

    #[test]
    fn ascent_is_monotone() {
        let obj = Ascent { ker: kernel(4), sign: 1.0 };
        let mut rng = task_rng(73, 0);
        let mut x = SpinState::random(4, &mut rng).unwrap().into_amplitudes();
        let cfg = OptimizerConfig::default();
        let mut last = obj.value(&x);
        for _ in 0..30 {
            x = ascend(&obj, x, &cfg, 1).x;
            let v = obj.value(&x);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn value_is_rotation_invariant_for_optima() {
        let r = maximize_average_entanglement(4, &small(4, 5)).unwrap();
        let mut rng = task_rng(74, 0);
        let rot = random_haar_rotation(&mut rng);
        assert!((averaged_entanglement(&r.best_state.rotate(&rot)) - r.best_value).abs() < 1e-9);
    }

    #[test]
    fn json_embeds_state_file() {
        let r = maximize_average_entanglement(1, &small(1, 0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["best_state"]["twice_spin"], 1);
        assert_eq!(v["best_state"]["amplitudes"].as_array().unwrap().len(), 2);
        assert_eq!(v["config"]["restarts"], 1);
        let back: OptimizationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.best_state, r.best_state);
    }
}
