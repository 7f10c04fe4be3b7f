//! Fock construction over the `2N × 2N` positive matrix of a biorthogonal
//! bank, sampled on a grid of the torus.
//!
//! Multiplication operators become diagonal `d × d` blocks with `d` the grid
//! size, so the blocks commute exactly.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::filterbank::{ensure_reconstructive, FilterBank, RelationOptions};
use crate::fock::{creation_matrices, tstar_t_check, ChoiMatrix, CreationOps, TStarTReport, TruncatedFock};
use crate::laurent::TorusPoint;
use crate::linalg::{self, CMat};
use crate::polyphase::{gram_function, GramMatrixFunction};

pub const DEFAULT_GRID: usize = 8;

#[derive(Debug, Clone)]
pub struct SampledWaveletChoi {
    pub scale: usize,
    pub grid: Vec<TorusPoint>,
    /// `P(z_m)` for each grid point.
    pub points: Vec<CMat>,
    pub gram: GramMatrixFunction,
    /// Block matrix with `d = grid.len()` and diagonal blocks.
    pub choi: ChoiMatrix,
    pub min_eig: f64,
    pub ranks: Vec<usize>,
    /// `max_m` distance between the sorted spectrum of `P(z_m)` and
    /// `{λ + 1/λ} ∪ {0, …, 0}` for `λ` in the spectrum of `AA*(z_m)`.
    pub spectrum_residual: f64,
}

pub fn sampled_choi(bank: &FilterBank, grid_size: usize) -> Result<SampledWaveletChoi> {
    ensure_reconstructive(bank, &RelationOptions::default())?;
    let gram = gram_function(bank, grid_size)?;
    let n = bank.scale();
    let mut spectrum_residual: f64 = 0.0;
    for (z, p) in gram.grid.iter().zip(&gram.blocks) {
        let x = gram.aa_star.eval(*z);
        let lam = linalg::hermitian_eigen(&x).values;
        let mut expected: Vec<f64> = lam.iter().map(|l| l + 1.0 / l).collect();
        expected.extend(std::iter::repeat(0.0).take(n));
        expected.sort_by(f64::total_cmp);
        let got = linalg::hermitian_eigen(p).values;
        for (a, b) in got.iter().zip(&expected) {
            spectrum_residual = spectrum_residual.max((a - b).abs());
        }
    }
    let choi = ChoiMatrix::from_diagonal_samples(&gram.blocks)?
        .with_provenance(format!("wavelet bank N={n}, grid {grid_size}"));
    Ok(SampledWaveletChoi {
        scale: n,
        grid: gram.grid.clone(),
        points: gram.blocks.clone(),
        min_eig: gram.min_eig(),
        ranks: gram.ranks(),
        spectrum_residual,
        gram,
        choi,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WaveletCreationReport {
    pub scale: usize,
    pub grid_size: usize,
    pub max_level: usize,
    pub quotient_dims: Vec<usize>,
    /// `max_ij ‖T_i*T_j|_H - (AA*)_ij‖`.
    pub primary_residual: f64,
    /// `max_ij ‖T̃_i*T̃_j|_H - (AA*)^{-1}_ij‖`.
    pub dual_residual: f64,
    /// `max_ij ‖T̃_i*T_j|_H - δ_ij I‖`.
    pub cross_residual: f64,
    /// `max_a |max_k ‖T_a^{(k)*}T_a^{(k)}‖ - sup_z P(z)_aa|`.
    pub norm_law_residual: f64,
    pub kernel_residual: f64,
    pub min_eig: f64,
    pub ranks: Vec<usize>,
    pub spectrum_residual: f64,
    pub tstar_t: TStarTReport,
}

impl WaveletCreationReport {
    pub fn max_item_residual(&self) -> f64 {
        self.primary_residual.max(self.dual_residual).max(self.cross_residual)
    }
}

/// `diag_m(f(m))` as a `d × d` matrix.
fn diag_samples(values: impl Iterator<Item = num_complex::Complex64>) -> CMat {
    let v: Vec<_> = values.collect();
    CMat::from_diagonal(&nalgebra::DVector::from_vec(v))
}

/// The truncated Fock space and creation operators of the sampled matrix.
pub fn wavelet_fock(sampled: &SampledWaveletChoi, max_level: usize) -> Result<(TruncatedFock, CreationOps)> {
    let fock = TruncatedFock::build(&sampled.choi, max_level)?;
    let ops = creation_matrices(&fock);
    Ok((fock, ops))
}

pub fn wavelet_creation_check(bank: &FilterBank, grid_size: usize, max_level: usize) -> Result<WaveletCreationReport> {
    let sampled = sampled_choi(bank, grid_size)?;
    let (fock, ops) = wavelet_fock(&sampled, max_level.max(1))?;
    let n = bank.scale();
    let g = &sampled.gram;
    let vac = |a: usize, b: usize| ops.get(a, 0).adjoint() * ops.get(b, 0);

    let (mut primary, mut dual, mut cross): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let x = diag_samples(g.grid.iter().map(|z| g.aa_star.entry(i, j).eval(*z)));
            primary = primary.max(linalg::op_norm(&(vac(i, j) - x)));
            let xi = diag_samples(g.inverse.iter().map(|m| m[(i, j)]));
            dual = dual.max(linalg::op_norm(&(vac(n + i, n + j) - xi)));
            let delta = if i == j { CMat::identity(grid_size, grid_size) } else { CMat::zeros(grid_size, grid_size) };
            cross = cross.max(linalg::op_norm(&(vac(n + i, j) - delta)));
        }
    }

    let mut norm_law_residual: f64 = 0.0;
    for a in 0..2 * n {
        let sup = g.blocks.iter().map(|p| p[(a, a)].re).fold(f64::NEG_INFINITY, f64::max);
        let best = (0..ops.levels())
            .map(|k| linalg::op_norm(&(ops.get(a, k).adjoint() * ops.get(a, k))))
            .fold(0.0, f64::max);
        norm_law_residual = norm_law_residual.max((best - sup).abs());
    }

    Ok(WaveletCreationReport {
        scale: n,
        grid_size,
        max_level: fock.max_level(),
        quotient_dims: fock.quotient_dims(),
        primary_residual: primary,
        dual_residual: dual,
        cross_residual: cross,
        norm_law_residual,
        kernel_residual: ops.kernel_residual,
        min_eig: sampled.min_eig,
        ranks: sampled.ranks.clone(),
        spectrum_residual: sampled.spectrum_residual,
        tstar_t: tstar_t_check(&fock, &ops),
    })
}
