//! Built-in filter banks and seeded random generators.
//!
//! Random loops are products of constant matrices and monomial diagonals
//! `diag(1, …, 1, z)`, so determinants are monomial units and dual loops stay
//! exact Laurent matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::filterbank::FilterBank;
use crate::laurent::LaurentPoly;
use crate::linalg::{c, CMat};
use crate::polyphase::{bank_from_loops, filters_from_loop, LoopMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar filters `m_0 = (1+z)/√2`, `m_1 = (1-z)/√2`, recovered from the loop
/// `(1/√2) [[1, 1], [1, -1]]`.
pub fn haar() -> FilterBank {
    filters_from_loop(&haar_loop()).expect("2x2 loop")
}

pub fn haar_loop() -> LoopMatrix {
    let s = FRAC_1_SQRT_2;
    LoopMatrix::constant(&CMat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]))
}

/// The constant 4×4 loop with `m_0 = 1 + z²`.
pub fn stretched_haar_loop() -> LoopMatrix {
    let rows: [[f64; 4]; 4] = [
        [1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, -1.0],
    ];
    LoopMatrix::constant(&CMat::from_fn(4, 4, |i, j| c(rows[i][j], 0.0)))
}

/// Stretched Haar with duals from `Ã = A^{*-1} = A/2`.
pub fn stretched_haar() -> FilterBank {
    let a = stretched_haar_loop();
    bank_from_loops(&a, &a.scale(c(0.5, 0.0))).expect("4x4 loops")
}

/// Stretched Haar treated as self-dual (no dual filters).
pub fn stretched_haar_self_dual() -> FilterBank {
    filters_from_loop(&stretched_haar_loop()).expect("4x4 loop")
}

/// Filters `m_i = z^i` from the identity loop.
pub fn identity_loop_bank(n: usize) -> FilterBank {
    filters_from_loop(&LoopMatrix::identity(n)).expect("identity loop")
}

pub fn by_name(name: &str) -> Option<FilterBank> {
    match name {
        "haar" => Some(haar()),
        "stretched-haar" => Some(stretched_haar()),
        "stretched-haar-self-dual" => Some(stretched_haar_self_dual()),
        "identity-loop" => Some(identity_loop_bank(2)),
        _ => None,
    }
}

pub const BANK_NAMES: &[&str] = &["haar", "stretched-haar", "stretched-haar-self-dual", "identity-loop"];

fn gaussian_matrix<R: Rng>(n: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let qr = gaussian_matrix(n, rng).qr();
    let q = qr.q();
    let r = qr.r();
    let phases = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        }),
    );
    q * DMatrix::from_diagonal(&phases)
}

/// Invertible matrix `U diag(s) V*` with singular values in `[0.5, 2]`.
pub fn random_well_conditioned<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let u = random_unitary(n, rng);
    let v = random_unitary(n, rng);
    let s = DVector::from_iterator(n, (0..n).map(|_| c(rng.gen_range(0.5..2.0), 0.0)));
    u * DMatrix::from_diagonal(&s) * v.adjoint()
}

fn shift_diagonal<R: Rng>(n: usize, rng: &mut R) -> LoopMatrix {
    let slot = rng.gen_range(0..n);
    let exps: Vec<i64> = (0..n).map(|i| i64::from(i == slot)).collect();
    LoopMatrix::monomial_diagonal(&exps)
}

/// `U_0 D_1 U_1 ⋯ D_k U_k`: a unitary loop with entries of degree ≤ `degree`.
pub fn random_unitary_loop<R: Rng>(n: usize, degree: usize, rng: &mut R) -> LoopMatrix {
    let mut a = LoopMatrix::constant(&random_unitary(n, rng));
    for _ in 0..degree {
        let d = shift_diagonal(n, rng);
        a = a.mul(&d).mul(&LoopMatrix::constant(&random_unitary(n, rng)));
    }
    a
}

/// `A = V_0 D_1 V_1 ⋯` with invertible constants, together with the exact
/// dual `Ã = V_0^{-*} D_1 V_1^{-*} ⋯` (valid since `D^{-*} = D` on the torus).
pub fn random_invertible_loop<R: Rng>(n: usize, degree: usize, rng: &mut R) -> (LoopMatrix, LoopMatrix) {
    let inv_adj = |v: &CMat| v.clone().try_inverse().expect("well conditioned").adjoint();
    let v0 = random_well_conditioned(n, rng);
    let mut a = LoopMatrix::constant(&v0);
    let mut dual = LoopMatrix::constant(&inv_adj(&v0));
    for _ in 0..degree {
        let d = shift_diagonal(n, rng);
        let v = random_well_conditioned(n, rng);
        a = a.mul(&d).mul(&LoopMatrix::constant(&v));
        dual = dual.mul(&d).mul(&LoopMatrix::constant(&inv_adj(&v)));
    }
    (a, dual)
}

/// A biorthogonal bank of genus `degree + 1` with exact duals.
pub fn random_biorthogonal_bank<R: Rng>(n: usize, degree: usize, rng: &mut R) -> FilterBank {
    let (a, dual) = random_invertible_loop(n, degree, rng);
    bank_from_loops(&a, &dual).expect("square loops")
}

/// An orthogonal (Cuntz) bank of genus `degree + 1`.
pub fn random_orthogonal_bank<R: Rng>(n: usize, degree: usize, rng: &mut R) -> FilterBank {
    filters_from_loop(&random_unitary_loop(n, degree, rng)).expect("square loop")
}

/// Random Laurent polynomial with `terms` coefficients on `lo..lo+terms`.
pub fn random_poly<R: Rng>(lo: i64, terms: usize, rng: &mut R) -> LaurentPoly {
    LaurentPoly::from_slice(
        lo,
        &(0..terms)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect::<Vec<_>>(),
    )
}

/// Random positive semidefinite `m × m` matrix of the given rank.
pub fn random_psd<R: Rng>(m: usize, rank: usize, rng: &mut R) -> CMat {
    let b = CMat::from_fn(m, rank, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    &b * b.adjoint()
}

/// `U diag(spectrum, 0, …) U*` with Haar-random `U`.
pub fn random_psd_with_spectrum<R: Rng>(m: usize, spectrum: &[f64], rng: &mut R) -> CMat {
    let u = random_unitary(m, rng);
    let d = DVector::from_iterator(m, (0..m).map(|i| c(spectrum.get(i).copied().unwrap_or(0.0), 0.0)));
    &u * DMatrix::from_diagonal(&d) * u.adjoint()
}

/// Rank-`rank` PSD matrix with nonzero eigenvalues drawn from `[0.5, 2]`.
pub fn random_psd_conditioned<R: Rng>(m: usize, rank: usize, rng: &mut R) -> CMat {
    let spectrum: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.5..2.0)).collect();
    random_psd_with_spectrum(m, &spectrum, rng)
}

/// Random real-valued PSD matrix of the given rank.
pub fn random_real_psd<R: Rng>(m: usize, rank: usize, rng: &mut R) -> CMat {
    let b = CMat::from_fn(m, rank, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        c(re, 0.0)
    });
    &b * b.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::polyphase::{loop_pair_residual, loop_unitarity_residual};

    #[test]
    fn random_unitary_is_unitary() {
        let mut r = rng(7);
        for n in 2..5 {
            let u = random_unitary(n, &mut r);
            assert!(max_abs(&(u.adjoint() * &u - CMat::identity(n, n))) < 1e-13);
        }
    }

    #[test]
    fn random_loops_have_expected_structure() {
        let mut r = rng(11);
        let a = random_unitary_loop(3, 2, &mut r);
        assert!(loop_unitarity_residual(&a, 64) < 1e-12);
        let (a, d) = random_invertible_loop(2, 1, &mut r);
        assert!(loop_pair_residual(&a, &d, 64) < 1e-12);
        assert!(a.det().as_monomial().is_some());
    }

    #[test]
    fn generators_are_seeded() {
        let a = random_biorthogonal_bank(2, 1, &mut rng(3));
        let b = random_biorthogonal_bank(2, 1, &mut rng(3));
        assert_eq!(a, b);
    }
}
