//! Loop (polyphase) matrices.
//!
//! Row `k` of the loop `A(z)` holds the polyphase components of filter `m_k`:
//! `A_{k,l}(z) = (1/N) Σ_{w^N=z} w^{-l} m_k(w)`, so the coefficient of `A_{k,l}`
//! at exponent `j` is `c^{(k)}_{Nj+l}`. Conversely `m_k(z) = Σ_l A_{k,l}(z^N) z^l`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{gram_multiplier, FilterBank};
use crate::laurent::{torus_grid, LaurentPoly, TorusPoint, DEFAULT_PRUNE_EPS};
use crate::linalg::{self, CMat};

/// `|det A(z)|` below this on the grid means the loop is not invertible.
pub const SINGULAR_DET: f64 = 1e-10;

/// An `N × N` matrix of Laurent polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLoop", into = "RawLoop")]
pub struct LoopMatrix {
    size: usize,
    entries: Vec<Vec<LaurentPoly>>,
}

#[derive(Serialize, Deserialize)]
struct RawLoop {
    #[serde(rename = "N")]
    n: usize,
    entries: Vec<Vec<LaurentPoly>>,
}

impl TryFrom<RawLoop> for LoopMatrix {
    type Error = Error;
    fn try_from(raw: RawLoop) -> Result<Self> {
        LoopMatrix::new(raw.n, raw.entries)
    }
}

impl From<LoopMatrix> for RawLoop {
    fn from(a: LoopMatrix) -> Self {
        RawLoop {
            n: a.size,
            entries: a.entries,
        }
    }
}

impl LoopMatrix {
    pub fn new(size: usize, entries: Vec<Vec<LaurentPoly>>) -> Result<Self> {
        if entries.len() != size || entries.iter().any(|r| r.len() != size) {
            return Err(Error::Dimension(format!("loop matrix must be {size}x{size}")));
        }
        Ok(LoopMatrix { size, entries })
    }

    pub fn identity(size: usize) -> Self {
        let entries = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| if i == j { LaurentPoly::one() } else { LaurentPoly::zero() })
                    .collect()
            })
            .collect();
        LoopMatrix { size, entries }
    }

    /// Constant loop from a complex matrix.
    pub fn constant(m: &CMat) -> Self {
        let size = m.nrows();
        let entries = (0..size)
            .map(|i| (0..size).map(|j| LaurentPoly::constant(m[(i, j)])).collect())
            .collect();
        LoopMatrix { size, entries }
    }

    /// `diag(z^{e_0}, …, z^{e_{N-1}})`.
    pub fn monomial_diagonal(exps: &[i64]) -> Self {
        let size = exps.len();
        let entries = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| if i == j { LaurentPoly::mode(exps[i]) } else { LaurentPoly::zero() })
                    .collect()
            })
            .collect();
        LoopMatrix { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<LaurentPoly>] {
        &self.entries
    }

    /// The matrix `A(z)`.
    pub fn eval(&self, z: TorusPoint) -> CMat {
        CMat::from_fn(self.size, self.size, |i, j| self.entries[i][j].eval(z))
    }

    /// Pointwise adjoint `A*(z)`: transpose with `adjoint_poly` entries.
    pub fn adjoint(&self) -> LoopMatrix {
        let entries = (0..self.size)
            .map(|i| (0..self.size).map(|j| self.entries[j][i].adjoint()).collect())
            .collect();
        LoopMatrix { size: self.size, entries }
    }

    pub fn mul(&self, other: &LoopMatrix) -> LoopMatrix {
        let n = self.size;
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &self.entries[i][k] * &other.entries[k][j]).sum())
                    .collect()
            })
            .collect();
        LoopMatrix { size: n, entries }
    }

    pub fn scale(&self, a: Complex64) -> LoopMatrix {
        LoopMatrix {
            size: self.size,
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(|p| p.scale(a)).collect())
                .collect(),
        }
    }

    /// Largest `|exponent|` across entries.
    pub fn max_abs_exp(&self) -> i64 {
        self.entries
            .iter()
            .flatten()
            .map(|p| p.max_abs_exp())
            .max()
            .unwrap_or(0)
    }

    pub fn max_coeff_diff(&self, other: &LoopMatrix) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| a.max_coeff_diff(b))
            .fold(0.0, f64::max)
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> LoopMatrix {
        let entries = (0..self.size)
            .filter(|&i| i != skip_row)
            .map(|i| {
                (0..self.size)
                    .filter(|&j| j != skip_col)
                    .map(|j| self.entries[i][j].clone())
                    .collect()
            })
            .collect();
        LoopMatrix {
            size: self.size - 1,
            entries,
        }
    }

    /// Laurent determinant by cofactor expansion along the first row.
    pub fn det(&self) -> LaurentPoly {
        match self.size {
            0 => LaurentPoly::one(),
            1 => self.entries[0][0].clone(),
            2 => {
                &(&self.entries[0][0] * &self.entries[1][1]) - &(&self.entries[0][1] * &self.entries[1][0])
            }
            _ => (0..self.size)
                .map(|j| {
                    let term = &self.entries[0][j] * &self.minor(0, j).det();
                    if j % 2 == 0 {
                        term
                    } else {
                        -&term
                    }
                })
                .sum(),
        }
    }

    /// Classical adjugate, so that `A · adj(A) = det(A) · I`.
    pub fn adjugate(&self) -> LoopMatrix {
        let n = self.size;
        if n == 1 {
            return LoopMatrix::identity(1);
        }
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let cof = self.minor(j, i).det();
                        if (i + j) % 2 == 0 {
                            cof
                        } else {
                            -&cof
                        }
                    })
                    .collect()
            })
            .collect();
        LoopMatrix { size: n, entries }
    }
}

/// Polyphase loop of a filter list.
pub fn loop_from_polys(filters: &[LaurentPoly], n: usize) -> LoopMatrix {
    let ni = n as i64;
    let mut entries: Vec<Vec<Vec<(i64, Complex64)>>> = vec![vec![Vec::new(); n]; filters.len()];
    for (k, m) in filters.iter().enumerate() {
        for (e, c) in m.terms() {
            let l = e.rem_euclid(ni);
            entries[k][l as usize].push(((e - l) / ni, c));
        }
    }
    LoopMatrix {
        size: n,
        entries: entries
            .into_iter()
            .map(|row| row.into_iter().map(LaurentPoly::from_terms).collect())
            .collect(),
    }
}

/// `(A, Ã)`; the dual loop is present only when the bank carries explicit duals.
pub fn loop_from_filters(bank: &FilterBank) -> (LoopMatrix, Option<LoopMatrix>) {
    let n = bank.scale();
    let a = loop_from_polys(bank.filters(), n);
    let dual = bank.has_duals().then(|| loop_from_polys(bank.duals(), n));
    (a, dual)
}

/// Filters `m_i(z) = Σ_j A_{i,j}(z^N) z^j`.
pub fn polys_from_loop(a: &LoopMatrix) -> Vec<LaurentPoly> {
    let n = a.size();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let p = a.entry(i, j);
                    if n >= 2 {
                        p.upsample(n).shift(j as i64)
                    } else {
                        p.clone()
                    }
                })
                .sum()
        })
        .collect()
}

pub fn filters_from_loop(a: &LoopMatrix) -> Result<FilterBank> {
    FilterBank::new(a.size(), polys_from_loop(a))
}

/// Bank with primaries from `a` and duals from `dual`.
pub fn bank_from_loops(a: &LoopMatrix, dual: &LoopMatrix) -> Result<FilterBank> {
    FilterBank::new(a.size(), polys_from_loop(a))?.with_duals(polys_from_loop(dual))
}

/// Grid samples of a loop that has no Laurent-polynomial inverse.
#[derive(Debug, Clone)]
pub struct SampledLoop {
    pub grid: Vec<TorusPoint>,
    pub values: Vec<CMat>,
}

#[derive(Debug, Clone)]
pub enum DualLoop {
    /// `det A` is a monomial unit, so `A^{*-1}` is a Laurent matrix.
    Exact(LoopMatrix),
    /// Only pointwise inverses on the grid are available.
    Sampled(SampledLoop),
}

impl DualLoop {
    pub fn is_exact(&self) -> bool {
        matches!(self, DualLoop::Exact(_))
    }

    pub fn exact(&self) -> Option<&LoopMatrix> {
        match self {
            DualLoop::Exact(m) => Some(m),
            DualLoop::Sampled(_) => None,
        }
    }

    pub fn eval(&self, z: TorusPoint, index: usize) -> CMat {
        match self {
            DualLoop::Exact(m) => m.eval(z),
            DualLoop::Sampled(s) => s.values[index].clone(),
        }
    }
}

/// Checks `|det A(z)| ≥ SINGULAR_DET` on the grid.
pub fn check_invertible(a: &LoopMatrix, grid: &[TorusPoint]) -> Result<()> {
    let det = a.det();
    for &z in grid {
        let v = det.eval(z).norm();
        if v < SINGULAR_DET {
            return Err(Error::SingularLoop {
                min_abs_det: v,
                theta: z.theta(),
            });
        }
    }
    Ok(())
}

/// `Ã = A^{*-1}`, exact when `det A` is a monomial unit.
pub fn dual_loop(a: &LoopMatrix, grid_size: usize) -> Result<DualLoop> {
    let grid = torus_grid(grid_size);
    check_invertible(a, &grid)?;
    let a_star = a.adjoint();
    let det = a_star.det().pruned(DEFAULT_PRUNE_EPS * 100.0);
    if let Some((k, c)) = det.as_monomial() {
        let inv_det = LaurentPoly::monomial(-k, Complex64::new(1.0, 0.0) / c);
        let adj = a_star.adjugate();
        let entries = adj
            .entries()
            .iter()
            .map(|row| row.iter().map(|p| p * &inv_det).collect())
            .collect();
        return Ok(DualLoop::Exact(LoopMatrix::new(a.size(), entries)?));
    }
    let values = grid
        .iter()
        .map(|&z| {
            a.eval(z)
                .adjoint()
                .try_inverse()
                .expect("determinant checked nonzero")
        })
        .collect();
    Ok(DualLoop::Sampled(SampledLoop { grid, values }))
}

/// `sup_z ‖A*(z) Ã(z) - I‖` over the dual's grid (or a fresh grid if exact).
pub fn dual_residual(a: &LoopMatrix, dual: &DualLoop, grid_size: usize) -> f64 {
    let grid = match dual {
        DualLoop::Sampled(s) => s.grid.clone(),
        DualLoop::Exact(_) => torus_grid(grid_size),
    };
    let id = CMat::identity(a.size(), a.size());
    grid.iter()
        .enumerate()
        .map(|(idx, &z)| linalg::op_norm(&(a.eval(z).adjoint() * dual.eval(z, idx) - &id)))
        .fold(0.0, f64::max)
}

/// `sup_z ‖A*(z) A(z) - I‖`.
pub fn loop_unitarity_residual(a: &LoopMatrix, grid_size: usize) -> f64 {
    let id = CMat::identity(a.size(), a.size());
    torus_grid(grid_size)
        .into_iter()
        .map(|z| {
            let m = a.eval(z);
            linalg::op_norm(&(m.adjoint() * m - &id))
        })
        .fold(0.0, f64::max)
}

/// `sup_z ‖A*(z) Ã(z) - I‖` for two explicit loops.
pub fn loop_pair_residual(a: &LoopMatrix, dual: &LoopMatrix, grid_size: usize) -> f64 {
    let id = CMat::identity(a.size(), a.size());
    torus_grid(grid_size)
        .into_iter()
        .map(|z| linalg::op_norm(&(a.eval(z).adjoint() * dual.eval(z) - &id)))
        .fold(0.0, f64::max)
}

/// `(1/√N) m_k(e^{2πil/N} z^{1/N})`, principal root.
pub fn modulation_matrix(filters: &[LaurentPoly], n: usize, z: TorusPoint) -> CMat {
    let root = z.principal_root(n).theta();
    let s = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |k, l| {
        let w = TorusPoint::new(root + TAU * l as f64 / n as f64);
        filters[k].eval(w) * s
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ModulationResiduals {
    /// `‖M*M - I‖` for the primary filters.
    pub unitary: f64,
    /// `‖M*M̃ - I‖` for the (primary, dual) pair.
    pub pair: f64,
}

pub fn modulation_residuals_at(bank: &FilterBank, z: TorusPoint) -> ModulationResiduals {
    let n = bank.scale();
    let m = modulation_matrix(bank.filters(), n, z);
    let md = modulation_matrix(bank.duals(), n, z);
    let id = CMat::identity(n, n);
    ModulationResiduals {
        unitary: linalg::op_norm(&(m.adjoint() * &m - &id)),
        pair: linalg::op_norm(&(m.adjoint() * md - &id)),
    }
}

/// Sup over the grid of the modulation-matrix residuals.
pub fn modulation_matrix_check(bank: &FilterBank, grid_size: usize) -> ModulationResiduals {
    torus_grid(grid_size)
        .into_iter()
        .map(|z| modulation_residuals_at(bank, z))
        .fold(ModulationResiduals { unitary: 0.0, pair: 0.0 }, |acc, r| ModulationResiduals {
            unitary: acc.unitary.max(r.unitary),
            pair: acc.pair.max(r.pair),
        })
}

/// Per-point data of `P(z) = [[AA*, I], [I, (AA*)^{-1}]]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GramPoint {
    pub theta: f64,
    pub min_eig: f64,
    pub rank: usize,
}

/// `AA*(z)` as a Laurent matrix plus grid samples of its inverse and of the
/// `2N × 2N` block matrix `P(z)`.
#[derive(Debug, Clone)]
pub struct GramMatrixFunction {
    pub aa_star: LoopMatrix,
    pub grid: Vec<TorusPoint>,
    pub inverse: Vec<CMat>,
    pub blocks: Vec<CMat>,
    pub points: Vec<GramPoint>,
    /// `max |R(m̄_i m_j) - (AA*)_{j,i}|` over coefficients.
    pub multiplier_residual: f64,
    /// `sup_z ‖Ã Ã*(z) - (AA*)^{-1}(z)‖` when explicit duals exist.
    pub dual_gram_residual: Option<f64>,
}

impl GramMatrixFunction {
    pub fn min_eig(&self) -> f64 {
        self.points.iter().map(|p| p.min_eig).fold(f64::INFINITY, f64::min)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.rank).collect()
    }
}

/// Relative eigenvalue cutoff used for ranks of `P(z)`.
pub const RANK_CUTOFF: f64 = 1e-10;

pub fn block_matrix(x: &CMat, x_inv: &CMat) -> CMat {
    let n = x.nrows();
    let mut p = CMat::zeros(2 * n, 2 * n);
    let id = CMat::identity(n, n);
    p.view_mut((0, 0), (n, n)).copy_from(x);
    p.view_mut((0, n), (n, n)).copy_from(&id);
    p.view_mut((n, 0), (n, n)).copy_from(&id);
    p.view_mut((n, n), (n, n)).copy_from(x_inv);
    p
}

pub fn gram_function(bank: &FilterBank, grid_size: usize) -> Result<GramMatrixFunction> {
    let n = bank.scale();
    let (a, dual) = loop_from_filters(bank);
    let grid = torus_grid(grid_size);
    check_invertible(&a, &grid)?;
    let aa_star = a.mul(&a.adjoint());

    let mut multiplier_residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r = gram_multiplier(&bank.filters()[i], &bank.filters()[j], n);
            multiplier_residual = multiplier_residual.max(r.max_coeff_diff(aa_star.entry(j, i)));
        }
    }

    let mut inverse = Vec::with_capacity(grid.len());
    let mut blocks = Vec::with_capacity(grid.len());
    let mut points = Vec::with_capacity(grid.len());
    let mut dual_gram_residual: f64 = 0.0;
    for &z in &grid {
        let x = aa_star.eval(z);
        let x_inv = x.clone().try_inverse().ok_or(Error::SingularLoop {
            min_abs_det: 0.0,
            theta: z.theta(),
        })?;
        if let Some(d) = &dual {
            let dz = d.eval(z);
            dual_gram_residual = dual_gram_residual.max(linalg::op_norm(&(&dz * dz.adjoint() - &x_inv)));
        }
        let p = block_matrix(&x, &x_inv);
        let eig = linalg::hermitian_eigen(&p);
        let top = eig.values.last().copied().unwrap_or(0.0).abs();
        let rank = eig.values.iter().filter(|&&v| v > RANK_CUTOFF * top.max(1e-300)).count();
        points.push(GramPoint {
            theta: z.theta(),
            min_eig: eig.values[0],
            rank,
        });
        inverse.push(x_inv);
        blocks.push(p);
    }
    Ok(GramMatrixFunction {
        aa_star,
        grid,
        inverse,
        blocks,
        points,
        multiplier_residual,
        dual_gram_residual: dual.map(|_| dual_gram_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::linalg::{c, max_abs};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn haar_matrix() -> CMat {
        CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]).scale(FRAC_1_SQRT_2)
    }

    #[test]
    fn haar_loop_is_constant() {
        let (a, dual) = loop_from_filters(&builtin::haar());
        assert!(dual.is_none());
        assert_eq!(a.max_abs_exp(), 0);
        assert!(max_abs(&(a.eval(TorusPoint::new(0.3)) - haar_matrix())) < 1e-15);
    }

    #[test]
    fn stretched_haar_loop_row() {
        let m0 = LaurentPoly::from_real(0, &[1.0, 0.0, 1.0]);
        let a = loop_from_polys(&[m0.clone(), m0.clone(), m0.clone(), m0], 4);
        let row: Vec<_> = (0..4).map(|l| a.entry(0, l).clone()).collect();
        assert_eq!(row[0], LaurentPoly::one());
        assert!(row[1].is_zero());
        assert_eq!(row[2], LaurentPoly::one());
        assert!(row[3].is_zero());
    }

    #[test]
    fn filters_from_loop_examples() {
        let bank = filters_from_loop(&LoopMatrix::constant(&haar_matrix())).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!(bank.filters()[0].max_coeff_diff(&LaurentPoly::from_real(0, &[s, s])) < 1e-15);
        assert!(bank.filters()[1].max_coeff_diff(&LaurentPoly::from_real(0, &[s, -s])) < 1e-15);

        let id = filters_from_loop(&LoopMatrix::identity(3)).unwrap();
        for (i, m) in id.filters().iter().enumerate() {
            assert_eq!(*m, LaurentPoly::mode(i as i64));
        }

        let stretched = filters_from_loop(&builtin::stretched_haar_loop()).unwrap();
        assert_eq!(stretched.filters()[0], LaurentPoly::from_real(0, &[1.0, 0.0, 1.0]));
    }

    #[test]
    fn haar_dual_is_self() {
        let a = LoopMatrix::constant(&haar_matrix());
        let d = dual_loop(&a, 64).unwrap();
        assert!(d.exact().unwrap().max_coeff_diff(&a) < 1e-15);
    }

    #[test]
    fn stretched_haar_dual_is_half() {
        let a = builtin::stretched_haar_loop();
        let aa = a.mul(&a.adjoint());
        assert!(aa.max_coeff_diff(&LoopMatrix::identity(4).scale(c(2.0, 0.0))) < 1e-15);
        let d = dual_loop(&a, 64).unwrap();
        assert!(d.exact().unwrap().max_coeff_diff(&a.scale(c(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn singular_loop_detected() {
        let z = LaurentPoly::zero();
        let one = LaurentPoly::one();
        let a = LoopMatrix::new(2, vec![vec![one.clone(), one.clone()], vec![one, z]]).unwrap();
        assert!(dual_loop(&a, 16).is_ok());
        // 1 + z vanishes at z = -1, which is on every even grid.
        let p = LaurentPoly::from_real(0, &[1.0, 1.0]);
        let b = LoopMatrix::new(2, vec![vec![p, LaurentPoly::zero()], vec![LaurentPoly::zero(), LaurentPoly::one()]]).unwrap();
        assert!(matches!(dual_loop(&b, 16), Err(Error::SingularLoop { .. })));
    }

    #[test]
    fn non_monomial_det_gives_sampled_dual() {
        // det = 2 + z never vanishes on T but is not a unit.
        let p = LaurentPoly::from_real(0, &[2.0, 1.0]);
        let b = LoopMatrix::new(2, vec![vec![p, LaurentPoly::zero()], vec![LaurentPoly::zero(), LaurentPoly::one()]]).unwrap();
        let d = dual_loop(&b, 32).unwrap();
        assert!(!d.is_exact());
        assert!(dual_residual(&b, &d, 32) < 1e-12);
    }

    #[test]
    fn modulation_haar_unitary() {
        let r = modulation_matrix_check(&builtin::haar(), 256);
        assert!(r.unitary < 1e-12 && r.pair < 1e-12);
    }

    #[test]
    fn modulation_stretched_haar() {
        let r = modulation_matrix_check(&builtin::stretched_haar_self_dual(), 256);
        assert!((r.unitary - 1.0).abs() < 1e-12);
        let r = modulation_matrix_check(&builtin::stretched_haar(), 256);
        assert!(r.pair < 1e-12);
    }

    #[test]
    fn gram_haar_and_stretched() {
        let g = gram_function(&builtin::haar(), 32).unwrap();
        assert!(g.aa_star.max_coeff_diff(&LoopMatrix::identity(2)) < 1e-15);
        assert!(g.ranks().iter().all(|&r| r == 2));
        assert!(g.min_eig() > -1e-10);
        assert!(g.multiplier_residual < 1e-15);

        let g = gram_function(&builtin::stretched_haar(), 32).unwrap();
        assert!(g.aa_star.max_coeff_diff(&LoopMatrix::identity(4).scale(c(2.0, 0.0))) < 1e-15);
        assert!(g.ranks().iter().all(|&r| r == 4));
        let expected = block_matrix(&CMat::identity(4, 4).scale(2.0), &CMat::identity(4, 4).scale(0.5));
        assert!(max_abs(&(&g.blocks[3] - expected)) < 1e-15);
        assert!(g.dual_gram_residual.unwrap() < 1e-12);
    }

    #[test]
    fn det_and_adjugate() {
        let a = builtin::stretched_haar_loop();
        let adj = a.adjugate();
        let prod = a.mul(&adj);
        let det = a.det();
        let expected = LoopMatrix::identity(4);
        let scaled: Vec<Vec<LaurentPoly>> = expected
            .entries()
            .iter()
            .map(|r| r.iter().map(|p| p * &det).collect())
            .collect();
        assert!(prod.max_coeff_diff(&LoopMatrix::new(4, scaled).unwrap()) < 1e-12);
    }
}
