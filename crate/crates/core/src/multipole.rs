//! State multipoles and the SU(2)-averaged linear entropy.
//!
//! For a spin-S pure state the multipoles are
//! `ρ_Kq = sqrt((2K+1)/(2S+1)) Σ_m C_{Sm,Kq}^{S,m+q} ψ_{m+q} ψ_m^*`, computed
//! straight from the amplitudes without forming the density matrix. The
//! linear entropy across the two modes only sees the `q = 0` multipoles, and
//! its Haar average over SU(2) is
//!
//! ```text
//! Ē = 1 - Σ_K 1/(2K+1) Σ_q |ρ_Kq|².
//! ```

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64 as C64;

use crate::angular::{clebsch_gordan, CGKey, HalfInt};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::states::SpinState;

/// Hard tolerance for the table invariants.
pub const INVARIANT_TOL: f64 = 1e-8;

/// One `(K, q)` block of Clebsch-Gordan coefficients:
/// `C_{S m, K q}^{S, m+q}` for every `m` with both projections valid.
#[derive(Clone, Debug)]
pub struct KqBlock {
    pub rank: usize,
    pub q: i32,
    /// `(k, c)` with `k = S + m` the amplitude index of `ψ_m`; `ψ_{m+q}` sits at `k + q`.
    pub terms: Vec<(usize, f64)>,
}

/// All coefficients needed for the multipoles of one spin.
///
/// Built once per spin and shared read-only afterwards.
#[derive(Debug)]
pub struct MultipoleKernel {
    twice_spin: u32,
    blocks: Vec<KqBlock>,
}

impl MultipoleKernel {
    fn build(twice_spin: u32) -> Self {
        let n = twice_spin as i32;
        let s = HalfInt::from_twice(n);
        let mut blocks = Vec::new();
        for rank in 0..=n {
            for q in -rank..=rank {
                let terms = (0..=n)
                    .filter_map(|k| {
                        let kp = k + q;
                        if !(0..=n).contains(&kp) {
                            return None;
                        }
                        let key = CGKey::new(
                            s,
                            HalfInt::from_twice(2 * k - n),
                            HalfInt::integer(rank),
                            HalfInt::integer(q),
                            s,
                            HalfInt::from_twice(2 * kp - n),
                        );
                        let c = clebsch_gordan(&key);
                        (c != 0.0).then_some((k as usize, c))
                    })
                    .collect();
                blocks.push(KqBlock { rank: rank as usize, q, terms });
            }
        }
        MultipoleKernel { twice_spin, blocks }
    }

    pub fn twice_spin(&self) -> u32 {
        self.twice_spin
    }

    /// Blocks ordered by `K`, then `q` ascending.
    pub fn blocks(&self) -> &[KqBlock] {
        &self.blocks
    }

    /// `A_Kq = Σ_m C ψ_{m+q} ψ_m^*` for one block (no rank prefactor).
    pub fn contract(block: &KqBlock, amps: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(k, c) in &block.terms {
            let kp = (k as i64 + block.q as i64) as usize;
            acc += c * amps[kp] * amps[k].conj();
        }
        acc
    }
}

/// Shared kernel for `twice_spin`; built on first use.
pub fn kernel(twice_spin: u32) -> Arc<MultipoleKernel> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<MultipoleKernel>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(k) = cache.read().expect("kernel cache poisoned").get(&twice_spin) {
        return Arc::clone(k);
    }
    let built = Arc::new(MultipoleKernel::build(twice_spin));
    let mut w = cache.write().expect("kernel cache poisoned");
    Arc::clone(w.entry(twice_spin).or_insert(built))
}

/// Multipoles `ρ_Kq` for `0 <= K <= 2S`, `-K <= q <= K`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipoleTable {
    twice_spin: u32,
    // rho[K][q + K]
    rho: Vec<Vec<C64>>,
}

impl MultipoleTable {
    pub fn from_fn(twice_spin: u32, mut f: impl FnMut(usize, i32) -> C64) -> Self {
        let rho = (0..=twice_spin as usize)
            .map(|rank| (-(rank as i32)..=rank as i32).map(|q| f(rank, q)).collect())
            .collect();
        MultipoleTable { twice_spin, rho }
    }

    pub fn twice_spin(&self) -> u32 {
        self.twice_spin
    }

    pub fn max_rank(&self) -> usize {
        self.twice_spin as usize
    }

    /// `ρ_Kq`; zero outside the index range.
    pub fn get(&self, rank: usize, q: i32) -> C64 {
        if rank > self.max_rank() || q.unsigned_abs() as usize > rank {
            return C64::new(0.0, 0.0);
        }
        self.rho[rank][(q + rank as i32) as usize]
    }

    pub fn rank(&self, rank: usize) -> &[C64] {
        &self.rho[rank]
    }

    /// `Σ_q |ρ_Kq|²`.
    pub fn rank_weight(&self, rank: usize) -> f64 {
        self.rho[rank].iter().map(|v| v.norm_sqr()).sum()
    }

    /// `Σ_{K,q} |ρ_Kq|² = Tr ρ²`.
    pub fn purity(&self) -> f64 {
        compensated_sum((0..=self.max_rank()).map(|k| self.rank_weight(k)))
    }

    /// Largest `|ρ_Kq^* - (-1)^q ρ_{K,-q}|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for rank in 0..=self.max_rank() {
            for q in -(rank as i32)..=rank as i32 {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let d = (self.get(rank, q).conj() - sign * self.get(rank, -q)).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entrywise difference to another table of the same spin.
    pub fn max_difference(&self, other: &MultipoleTable) -> f64 {
        assert_eq!(self.twice_spin, other.twice_spin);
        self.rho
            .iter()
            .flatten()
            .zip(other.rho.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Checks normalization, Hermiticity and purity at [`INVARIANT_TOL`].
    pub fn check_pure(&self) -> Result<()> {
        let expected = 1.0 / (self.twice_spin as f64 + 1.0).sqrt();
        let r00 = self.get(0, 0);
        if (r00 - expected).norm() > INVARIANT_TOL {
            return Err(Error::Invariant(format!("rho_00 = {r00}, expected {expected}")));
        }
        let h = self.hermiticity_defect();
        if h > INVARIANT_TOL {
            return Err(Error::Invariant(format!("hermiticity defect {h:e}")));
        }
        let p = self.purity();
        if (p - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::Invariant(format!("purity {p}")));
        }
        Ok(())
    }
}

pub fn multipoles(state: &SpinState) -> MultipoleTable {
    let n = state.twice_spin();
    let kern = kernel(n);
    let amps = state.amplitudes();
    let dim = n as f64 + 1.0;
    let mut rho: Vec<Vec<C64>> = (0..=n as usize).map(|k| Vec::with_capacity(2 * k + 1)).collect();
    for block in kern.blocks() {
        let pref = ((2 * block.rank + 1) as f64 / dim).sqrt();
        rho[block.rank].push(pref * MultipoleKernel::contract(block, amps));
    }
    MultipoleTable { twice_spin: n, rho }
}

/// [`multipoles`] followed by [`MultipoleTable::check_pure`].
pub fn multipoles_checked(state: &SpinState) -> Result<MultipoleTable> {
    let t = multipoles(state);
    t.check_pure()?;
    Ok(t)
}

/// Populations `|ψ_m|²` of the mode-a reduced state (ascending m).
pub fn reduced_density(state: &SpinState) -> Vec<f64> {
    state.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

/// Linear entropy across the fixed two-mode partition, `1 - Σ_m |ψ_m|⁴`.
pub fn linear_entropy(state: &SpinState) -> f64 {
    1.0 - compensated_sum(reduced_density(state).into_iter().map(|p| p * p))
}

/// The same partition entropy from the `q = 0` multipoles: `1 - Σ_K |ρ_K0|²`.
pub fn linear_entropy_multipole(table: &MultipoleTable) -> f64 {
    1.0 - compensated_sum((0..=table.max_rank()).map(|k| table.get(k, 0).norm_sqr()))
}

/// `Ē` from a multipole table.
pub fn averaged_entanglement_from_table(table: &MultipoleTable) -> f64 {
    let mut terms: Vec<f64> = (0..=table.max_rank())
        .map(|k| table.rank_weight(k) / (2 * k + 1) as f64)
        .collect();
    terms.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    1.0 - compensated_sum(terms)
}

/// SU(2)-averaged linear entropy `Ē` of a pure state.
pub fn averaged_entanglement(state: &SpinState) -> f64 {
    averaged_entanglement_from_table(&multipoles(state))
}

/// `Ē` through the direct Clebsch-Gordan form
/// `1 - 1/(2S+1) Σ_{K,q} |Σ_{m,m'} C_{Sm,Kq}^{Sm'} ψ_{m'} ψ_m^*|²`.
///
/// Independent of the cached kernel: every coefficient is evaluated afresh
/// and the `m, m'` double sum is taken literally.
pub fn averaged_entanglement_cg(state: &SpinState) -> f64 {
    let n = state.twice_spin() as i32;
    let s = HalfInt::from_twice(n);
    let amps = state.amplitudes();
    let mut per_rank = Vec::with_capacity(n as usize + 1);
    for rank in 0..=n {
        let mut w = 0.0;
        for q in -rank..=rank {
            let mut inner = C64::new(0.0, 0.0);
            for k in 0..=n {
                for kp in 0..=n {
                    let key = CGKey::new(
                        s,
                        HalfInt::from_twice(2 * k - n),
                        HalfInt::integer(rank),
                        HalfInt::integer(q),
                        s,
                        HalfInt::from_twice(2 * kp - n),
                    );
                    let c = clebsch_gordan(&key);
                    if c != 0.0 {
                        inner += c * amps[kp as usize] * amps[k as usize].conj();
                    }
                }
            }
            w += inner.norm_sqr();
        }
        per_rank.push(w);
    }
    per_rank.sort_by(|a, b| b.total_cmp(a));
    1.0 - compensated_sum(per_rank) / (n as f64 + 1.0)
}

/// `1 - Ē_coh` as `1/(4S+1) Σ_m C(2S,m)² / C(4S,2m)`.
///
/// The ratio of binomials is advanced by
/// `r_{m+1}/r_m = (2S-m)(2m+1) / ((m+1)(4S-2m-1))`, so nothing overflows.
pub fn coherent_purity_binomial(twice_spin: u32) -> f64 {
    let n = twice_spin as f64;
    let mut r = 1.0_f64;
    let mut terms = Vec::with_capacity(twice_spin as usize + 1);
    for m in 0..=twice_spin {
        terms.push(r);
        let mf = m as f64;
        r *= (n - mf) * (2.0 * mf + 1.0) / ((mf + 1.0) * (2.0 * n - 2.0 * mf - 1.0));
    }
    compensated_sum(terms) / (2.0 * n + 1.0)
}

/// `1 - Ē_coh` as `sqrt(π) Γ(2S+1) / (2 Γ(2S+3/2))`.
///
/// With `N = 2S`, `Γ(N+1) = N!` and `Γ(N+3/2) = (sqrt(π)/2) Π_{k=1}^{N} (k + 1/2)`,
/// so the ratio is `Π_{k=1}^{N} k / (k + 1/2)`.
pub fn coherent_purity_gamma(twice_spin: u32) -> f64 {
    (1..=twice_spin).fold(1.0_f64, |acc, k| acc * k as f64 / (k as f64 + 0.5))
}

/// `Ē` of any spin coherent state.
pub fn coherent_average_value(twice_spin: u32) -> f64 {
    let g = coherent_purity_gamma(twice_spin);
    let b = coherent_purity_binomial(twice_spin);
    assert!(
        (g - b).abs() <= 1e-12,
        "coherent closed forms disagree at twice_spin = {twice_spin}: {g} vs {b}"
    );
    1.0 - g
}

/// Largest fixed-partition linear entropy, `2S/(2S+1)`.
pub fn entropy_upper_bound(twice_spin: u32) -> f64 {
    twice_spin as f64 / (twice_spin as f64 + 1.0)
}
