//! Independent checks of the fast paths: Monte Carlo averaging over Haar
//! rotations, and multipoles from dense operator matrices.
//!
//! Sampling is split into fixed batches, each with its own random stream, so
//! results depend only on the seed and not on how batches are scheduled.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::angular::{clebsch_gordan_exact, wigner_d_matrix, CGKey, HalfInt};
use crate::error::{Error, Result};
use crate::multipole::{linear_entropy, MultipoleTable};
use crate::numeric::task_rng;
use crate::states::{random_haar_rotation, SpinState};

/// Samples per random stream.
pub const BATCH: usize = 4096;
/// Largest spin handled by the dense path.
pub const DENSE_MAX_TWICE_SPIN: u32 = 20;

/// Mean and standard error of `n` samples split into fixed batches.
/// `sample(rng)` returns one complex value; the standard error is that of
/// the complex mean, `sqrt((var re + var im) / n)`.
fn batched_mean<F>(n: usize, seed: u64, sample: F) -> (C64, f64)
where
    F: Fn(&mut rand_chacha::ChaCha20Rng) -> C64 + Sync,
{
    let batches = n.div_ceil(BATCH);
    let sums: Vec<(C64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = task_rng(seed, b as u64);
            let count = BATCH.min(n - b * BATCH);
            let mut s = C64::new(0.0, 0.0);
            let mut s2 = 0.0;
            for _ in 0..count {
                let x = sample(&mut rng);
                s += x;
                s2 += x.norm_sqr();
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((C64::new(0.0, 0.0), 0.0), |(a, b), (x, y)| (a + x, b + y));
    let nf = n as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean.norm_sqr()) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Monte Carlo estimate of `Ē` from the linear entropy of randomly rotated
/// copies of `state`; returns `(mean, standard error)`.
pub fn mc_average_entanglement(state: &SpinState, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {n_samples}")));
    }
    let (mean, err) = batched_mean(n_samples, seed, |rng| {
        let r = random_haar_rotation(rng);
        C64::new(linear_entropy(&state.rotate(&r)), 0.0)
    });
    Ok((mean.re, err))
}

/// Monte Carlo estimate of `∫ dR D^K_{q0}(R)^* D^{K'}_{q'0}(R)` over the
/// Haar measure, which should be `δ_{KK'} δ_{qq'} / (2K+1)`; returns
/// `(mean, standard error)`.
pub fn haar_moment_check(k: u32, q: i32, kp: u32, qp: i32, n_samples: usize, seed: u64) -> Result<(C64, f64)> {
    if n_samples < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {n_samples}")));
    }
    for (rank, proj) in [(k, q), (kp, qp)] {
        if proj.unsigned_abs() > rank {
            return Err(Error::InvalidProjection { twice_j: 2 * rank as i32, twice_m: 2 * proj });
        }
    }
    let zero = HalfInt::integer(0);
    Ok(batched_mean(n_samples, seed, |rng| {
        let r = random_haar_rotation(rng);
        let a = wigner_d_matrix(2 * k, &r).get(HalfInt::integer(q), zero);
        let b = wigner_d_matrix(2 * kp, &r).get(HalfInt::integer(qp), zero);
        a.conj() * b
    }))
}

/// The expected value of [`haar_moment_check`].
pub fn haar_moment_expected(k: u32, q: i32, kp: u32, qp: i32) -> f64 {
    if k == kp && q == qp {
        1.0 / (2 * k + 1) as f64
    } else {
        0.0
    }
}

/// Dense `(2S+1)²` matrix, row-major, indices in ascending m.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    fn zeros(dim: usize) -> Self {
        DenseMatrix { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    /// `Tr(A B†)`.
    pub fn hs_inner(&self, other: &DenseMatrix) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum()
    }
}

fn check_dense(twice_spin: u32) -> Result<()> {
    if twice_spin == 0 {
        return Err(Error::InvalidSpin(0));
    }
    if twice_spin > DENSE_MAX_TWICE_SPIN {
        return Err(Error::DenseCapExceeded { max: DENSE_MAX_TWICE_SPIN, got: twice_spin });
    }
    Ok(())
}

/// Tensor operator `T_Kq` with elements
/// `<S m'|T_Kq|S m> = sqrt((2K+1)/(2S+1)) C_{Sm,Kq}^{Sm'}`, from exact
/// Clebsch-Gordan coefficients.
pub fn tensor_operator(twice_spin: u32, rank: u32, q: i32) -> Result<DenseMatrix> {
    check_dense(twice_spin)?;
    if rank > twice_spin || q.unsigned_abs() > rank {
        return Err(Error::InvalidProjection { twice_j: 2 * rank as i32, twice_m: 2 * q });
    }
    let n = twice_spin as i32;
    let d = n as usize + 1;
    let pre = ((2 * rank + 1) as f64 / d as f64).sqrt();
    let mut t = DenseMatrix::zeros(d);
    for k in 0..=n {
        let kp = k + q;
        if !(0..=n).contains(&kp) {
            continue;
        }
        let key = CGKey::from_twice([n, 2 * k - n, 2 * rank as i32, 2 * q, n, 2 * kp - n]);
        t.data[kp as usize * d + k as usize] = C64::new(pre * clebsch_gordan_exact(&key).to_f64(), 0.0);
    }
    Ok(t)
}

/// `ρ_Kq = Tr(|ψ><ψ| T_Kq†)` with every matrix materialized.
pub fn dense_multipoles(state: &SpinState) -> Result<MultipoleTable> {
    let n = state.twice_spin();
    check_dense(n)?;
    let d = state.dim();
    let a = state.amplitudes();
    let mut rho = DenseMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            rho.data[i * d + j] = a[i] * a[j].conj();
        }
    }
    let mut out = Vec::new();
    for rank in 0..=n {
        let mut row = Vec::new();
        for q in -(rank as i32)..=rank as i32 {
            row.push(rho.hs_inner(&tensor_operator(n, rank, q)?));
        }
        out.push(row);
    }
    Ok(MultipoleTable::from_fn(n, |rank, q| out[rank][(q + rank as i32) as usize]))
}

/// Largest `|Tr(T_Kq T_K'q'†) - δ_KK' δ_qq'|` over all pairs.
pub fn tensor_orthonormality_defect(twice_spin: u32) -> Result<f64> {
    check_dense(twice_spin)?;
    let mut ops = Vec::new();
    for rank in 0..=twice_spin {
        for q in -(rank as i32)..=rank as i32 {
            ops.push(tensor_operator(twice_spin, rank, q)?);
        }
    }
    let mut worst = 0.0_f64;
    for (i, a) in ops.iter().enumerate() {
        for (j, b) in ops.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.hs_inner(b) - expected).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipole::{averaged_entanglement, multipoles};

    #[test]
    fn dense_and_sparse_tables_agree() {
        let mut rng = task_rng(81, 0);
        for n in [1u32, 4, 7] {
            let s = SpinState::random(n, &mut rng).unwrap();
            let d = dense_multipoles(&s).unwrap();
            assert!(d.max_difference(&multipoles(&s)) < 1e-10);
            assert!((d.get(0, 0).re - 1.0 / ((n + 1) as f64).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn tensor_operators_are_orthonormal() {
        for n in [1u32, 2, 5, 10] {
            assert!(tensor_orthonormality_defect(n).unwrap() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn dense_cap() {
        let s = SpinState::basis(21, 0).unwrap();
        assert!(matches!(dense_multipoles(&s), Err(Error::DenseCapExceeded { max: 20, got: 21 })));
    }

    #[test]
    fn mc_matches_closed_form_for_spin_one_basis_state() {
        let s = SpinState::basis(2, 1).unwrap();
        let (m, e) = mc_average_entanglement(&s, 40_000, 5).unwrap();
        assert!((m - averaged_entanglement(&s)).abs() < 4.0 * e, "{m} ± {e}");
    }

    #[test]
    fn mc_is_seed_deterministic() {
        let s = SpinState::coherent(3, 0.2, 0.4).unwrap();
        assert_eq!(mc_average_entanglement(&s, 5000, 1).unwrap(), mc_average_entanglement(&s, 5000, 1).unwrap());
        assert_ne!(mc_average_entanglement(&s, 5000, 1).unwrap(), mc_average_entanglement(&s, 5000, 2).unwrap());
    }

    #[test]
    fn moments() {
        for (k, q, kp, qp) in [(1, 0, 1, 0), (1, 0, 2, 0), (2, 1, 2, -1), (2, 2, 2, 2)] {
            let (m, e) = haar_moment_check(k, q, kp, qp, 20_000, 11).unwrap();
            let want = haar_moment_expected(k, q, kp, qp);
            assert!((m - C64::new(want, 0.0)).norm() < 4.0 * e, "({k},{q},{kp},{qp}): {m} ± {e}");
        }
    }

    #[test]
    fn argument_checks() {
        let s = SpinState::basis(1, 0).unwrap();
        assert!(mc_average_entanglement(&s, 99, 0).is_err());
        assert!(haar_moment_check(1, 0, 1, 0, 999, 0).is_err());
        assert!(haar_moment_check(1, 2, 1, 0, 1000, 0).is_err());
    }
}
