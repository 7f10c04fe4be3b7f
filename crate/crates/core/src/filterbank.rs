//! The operator system `S_i f(z) = m_i(z) f(z^N)` on `L²(T)`.
//!
//! Operators act on finitely supported Fourier series, so every relation
//! (`S_i* S̃_j = δ_ij I`, `Σ S_i S̃_i* = I`) can be tested exactly on modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{torus_grid, LaurentPoly, DEFAULT_GRID_SIZE};

/// Default sup-residual below which a relation counts as satisfied.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// `N` primary filters `m_0..m_{N-1}` and optionally `N` dual filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBank", into = "RawBank")]
pub struct FilterBank {
    scale: usize,
    filters: Vec<LaurentPoly>,
    dual_filters: Option<Vec<LaurentPoly>>,
}

#[derive(Serialize, Deserialize)]
struct RawBank {
    #[serde(rename = "N")]
    n: usize,
    filters: Vec<LaurentPoly>,
    #[serde(default)]
    dual_filters: Option<Vec<LaurentPoly>>,
}

impl TryFrom<RawBank> for FilterBank {
    type Error = Error;
    fn try_from(raw: RawBank) -> Result<Self> {
        let bank = FilterBank::new(raw.n, raw.filters)?;
        match raw.dual_filters {
            Some(d) => bank.with_duals(d),
            None => Ok(bank),
        }
    }
}

impl From<FilterBank> for RawBank {
    fn from(b: FilterBank) -> Self {
        RawBank {
            n: b.scale,
            filters: b.filters,
            dual_filters: b.dual_filters,
        }
    }
}

impl FilterBank {
    pub fn new(scale: usize, filters: Vec<LaurentPoly>) -> Result<Self> {
        if scale < 2 {
            return Err(Error::BadScale(scale));
        }
        if filters.len() != scale {
            return Err(Error::FilterCount {
                expected: scale,
                got: filters.len(),
            });
        }
        Ok(FilterBank {
            scale,
            filters,
            dual_filters: None,
        })
    }

    pub fn with_duals(mut self, duals: Vec<LaurentPoly>) -> Result<Self> {
        if duals.len() != self.scale {
            return Err(Error::DualLengthMismatch {
                expected: self.scale,
                got: duals.len(),
            });
        }
        self.dual_filters = Some(duals);
        Ok(self)
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn filters(&self) -> &[LaurentPoly] {
        &self.filters
    }

    pub fn has_duals(&self) -> bool {
        self.dual_filters.is_some()
    }

    /// Dual filters; a bank without explicit duals is treated as self-dual.
    pub fn duals(&self) -> &[LaurentPoly] {
        self.dual_filters.as_deref().unwrap_or(&self.filters)
    }

    /// Smallest `g` with every exponent (primary and dual) in `[-Ng+1, Ng-1]`.
    pub fn genus(&self) -> usize {
        let max_abs = self
            .filters
            .iter()
            .chain(self.duals())
            .map(|p| p.max_abs_exp())
            .max()
            .unwrap_or(0) as usize;
        (max_abs + 1).div_ceil(self.scale)
    }

    /// The bank with primaries and duals swapped.
    pub fn swapped(&self) -> FilterBank {
        FilterBank {
            scale: self.scale,
            filters: self.duals().to_vec(),
            dual_filters: Some(self.filters.clone()),
        }
    }
}

/// `S f = m(z) f(z^N)`. In coefficients, `(Sx)_i = Σ_j c_{i-Nj} x_j`.
pub fn apply_s(m: &LaurentPoly, f: &LaurentPoly, n: usize) -> LaurentPoly {
    m * &f.upsample(n)
}

/// `S* f(z) = (1/N) Σ_{w^N=z} conj(m(w)) f(w)`, i.e. `decimate(m̄ f)`.
pub fn apply_s_adjoint(m: &LaurentPoly, f: &LaurentPoly, n: usize) -> LaurentPoly {
    (&m.adjoint() * f).decimate(n)
}

/// The multiplier `R(m̄_i m_j)` of `S_i* S_j`.
pub fn gram_multiplier(mi: &LaurentPoly, mj: &LaurentPoly, n: usize) -> LaurentPoly {
    (&mi.adjoint() * mj).decimate(n)
}

#[derive(Debug, Clone, Copy)]
pub struct RelationOptions {
    pub tolerance: f64,
    pub grid_size: usize,
}

impl Default for RelationOptions {
    fn default() -> Self {
        RelationOptions {
            tolerance: DEFAULT_TOLERANCE,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Verdicts {
    /// `S_i* S_i = I` for every primary filter.
    pub isometry: bool,
    /// `S_i* S_j = 0` for `i ≠ j`.
    pub orthogonal_ranges: bool,
    /// Both Cuntz relations for the primary family.
    pub cuntz: bool,
    /// Both biorthogonal relations for the (primary, dual) pair.
    pub biorthogonal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RelationReport {
    pub scale: usize,
    pub genus: usize,
    /// `sup_z |R(m̄_i m_j) - δ_ij|`.
    pub primary_residuals: Vec<Vec<f64>>,
    /// `sup_z |R(m̄_i m̃_j) - δ_ij|`.
    pub pair_residuals: Vec<Vec<f64>>,
    /// `max_n ‖Σ_i S_i S_i* e_n - e_n‖`.
    pub cuntz_completeness: f64,
    /// `max_n ‖Σ_i S_i S̃_i* e_n - e_n‖`.
    pub completeness: f64,
    pub mode_range: i64,
    pub tolerance: f64,
    pub grid_size: usize,
    pub verdicts: Verdicts,
}

impl RelationReport {
    pub fn isometry_residual(&self) -> f64 {
        (0..self.scale)
            .map(|i| self.primary_residuals[i][i])
            .fold(0.0, f64::max)
    }

    pub fn orthogonality_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.scale {
            for j in 0..self.scale {
                if i != j {
                    r = r.max(self.primary_residuals[i][j]);
                }
            }
        }
        r
    }

    pub fn pair_residual(&self) -> f64 {
        self.pair_residuals
            .iter()
            .flatten()
            .cloned()
            .fold(0.0, f64::max)
    }
}

fn residual_matrix(a: &[LaurentPoly], b: &[LaurentPoly], n: usize, grid_size: usize) -> Vec<Vec<f64>> {
    let grid = torus_grid(grid_size);
    let one = LaurentPoly::one();
    a.iter()
        .enumerate()
        .map(|(i, mi)| {
            b.iter()
                .enumerate()
                .map(|(j, mj)| {
                    let mut r = gram_multiplier(mi, mj, n);
                    if i == j {
                        r = &r - &one;
                    }
                    r.sup_on_grid(&grid)
                })
                .collect()
        })
        .collect()
}

/// `max_{|k| ≤ range} ‖Σ_i S_i T_i* e_k - e_k‖₂` where `T_i` uses `dual`.
pub fn completeness_residual(primary: &[LaurentPoly], dual: &[LaurentPoly], n: usize, range: i64) -> f64 {
    (-range..=range)
        .map(|k| {
            let e = LaurentPoly::mode(k);
            let sum: LaurentPoly = primary
                .iter()
                .zip(dual)
                .map(|(m, md)| apply_s(m, &apply_s_adjoint(md, &e, n), n))
                .sum();
            (&sum - &e).norm()
        })
        .fold(0.0, f64::max)
}

pub fn relation_report(bank: &FilterBank, mode_range: i64) -> RelationReport {
    relation_report_with(bank, mode_range, &RelationOptions::default())
}

/// Residuals of the Cuntz and biorthogonal relations.
///
/// `mode_range` is raised to `N·g` when smaller, so completeness is never
/// tested on a range the filters can clip.
pub fn relation_report_with(bank: &FilterBank, mode_range: i64, opts: &RelationOptions) -> RelationReport {
    let n = bank.scale();
    let g = bank.genus();
    let range = mode_range.max((n * g) as i64);
    let primary_residuals = residual_matrix(bank.filters(), bank.filters(), n, opts.grid_size);
    let pair_residuals = residual_matrix(bank.filters(), bank.duals(), n, opts.grid_size);
    let cuntz_completeness = completeness_residual(bank.filters(), bank.filters(), n, range);
    let completeness = completeness_residual(bank.filters(), bank.duals(), n, range);

    let tol = opts.tolerance;
    let mut report = RelationReport {
        scale: n,
        genus: g,
        primary_residuals,
        pair_residuals,
        cuntz_completeness,
        completeness,
        mode_range: range,
        tolerance: tol,
        grid_size: opts.grid_size,
        verdicts: Verdicts {
            isometry: false,
            orthogonal_ranges: false,
            cuntz: false,
            biorthogonal: false,
        },
    };
    let isometry = report.isometry_residual() < tol;
    let orthogonal_ranges = report.orthogonality_residual() < tol;
    report.verdicts = Verdicts {
        isometry,
        orthogonal_ranges,
        cuntz: isometry && orthogonal_ranges && cuntz_completeness < tol,
        biorthogonal: report.pair_residual() < tol && completeness < tol,
    };
    report
}

/// Fails with `NotReconstructive` unless the bank passes the biorthogonal
/// verdict (which covers the self-dual Cuntz case).
pub fn ensure_reconstructive(bank: &FilterBank, opts: &RelationOptions) -> Result<RelationReport> {
    let report = relation_report_with(bank, 0, opts);
    if report.verdicts.biorthogonal {
        Ok(report)
    } else {
        Err(Error::NotReconstructive(format!(
            "pair residual {:.3e}, completeness residual {:.3e}",
            report.pair_residual(),
            report.completeness
        )))
    }
}

/// Components of `f` over the module basis `b_w` for words of length `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleExpansion {
    pub scale: usize,
    pub depth: usize,
    /// Words `i_1 … i_k`, lexicographic with `i_1` most significant.
    pub words: Vec<Vec<usize>>,
    /// `f_w = S̃_{i_k}* ⋯ S̃_{i_1}* f`.
    pub components: Vec<LaurentPoly>,
    /// `b_w(z) = m_{i_1}(z) m_{i_2}(z^N) ⋯ m_{i_k}(z^{N^{k-1}})`.
    pub basis: Vec<LaurentPoly>,
}

impl ModuleExpansion {
    /// `Σ_w b_w(z) f_w(z^{N^k})`.
    pub fn reconstruct(&self) -> LaurentPoly {
        let stride = self.scale.pow(self.depth as u32);
        self.basis
            .iter()
            .zip(&self.components)
            .map(|(b, f)| {
                if stride >= 2 {
                    b * &f.upsample(stride)
                } else {
                    b * f
                }
            })
            .sum()
    }
}

/// Words of length `k` over `0..n`, lexicographic, first letter most significant.
pub fn words(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..n).map(move |i| {
                    let mut w2 = w.clone();
                    w2.push(i);
                    w2
                })
            })
            .collect();
    }
    out
}

pub fn module_expand(bank: &FilterBank, f: &LaurentPoly, k: usize) -> Result<ModuleExpansion> {
    module_expand_with(bank, f, k, &RelationOptions::default())
}

pub fn module_expand_with(
    bank: &FilterBank,
    f: &LaurentPoly,
    k: usize,
    opts: &RelationOptions,
) -> Result<ModuleExpansion> {
    if k == 0 {
        return Err(Error::Dimension("expansion depth must be at least 1".into()));
    }
    ensure_reconstructive(bank, opts)?;
    let n = bank.scale();
    let words = words(n, k);
    let mut components = Vec::with_capacity(words.len());
    let mut basis = Vec::with_capacity(words.len());
    for w in &words {
        let mut comp = f.clone();
        let mut b = LaurentPoly::one();
        let mut stride = 1usize;
        for &i in w {
            comp = apply_s_adjoint(&bank.duals()[i], &comp, n);
            let factor = if stride == 1 {
                bank.filters()[i].clone()
            } else {
                bank.filters()[i].upsample(stride)
            };
            b = &b * &factor;
            stride *= n;
        }
        components.push(comp);
        basis.push(b);
    }
    Ok(ModuleExpansion {
        scale: n,
        depth: k,
        words,
        components,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::linalg::c;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn apply_s_examples() {
        let m = builtin::haar().filters()[0].clone();
        assert_eq!(apply_s(&m, &LaurentPoly::one(), 2), m);

        let m = LaurentPoly::from_real(0, &[1.0, 0.0, 1.0]);
        let got = apply_s(&m, &LaurentPoly::mode(1), 4);
        assert_eq!(got, LaurentPoly::from_real(4, &[1.0, 0.0, 1.0]));
    }

    #[test]
    fn apply_s_adjoint_examples() {
        let m = builtin::haar().filters()[0].clone();
        let a = apply_s_adjoint(&m, &LaurentPoly::mode(0), 2);
        assert!(a.max_coeff_diff(&LaurentPoly::constant(c(FRAC_1_SQRT_2, 0.0))) < 1e-15);
        let b = apply_s_adjoint(&m, &LaurentPoly::mode(-1), 2);
        assert!(b.max_coeff_diff(&LaurentPoly::monomial(-1, c(FRAC_1_SQRT_2, 0.0))) < 1e-15);
    }

    #[test]
    fn haar_is_cuntz() {
        let r = relation_report(&builtin::haar(), 8);
        assert!(r.pair_residual() < 1e-12);
        assert!(r.completeness < 1e-12);
        assert!(r.verdicts.cuntz && r.verdicts.biorthogonal);
    }

    #[test]
    fn stretched_haar_is_not_isometric() {
        let r = relation_report(&builtin::stretched_haar_self_dual(), 8);
        assert!((r.isometry_residual() - 1.0).abs() < 1e-12);
        assert!(!r.verdicts.isometry);
        assert!(!r.verdicts.cuntz);
        assert!(!r.verdicts.biorthogonal);
    }

    #[test]
    fn stretched_haar_with_duals_is_biorthogonal() {
        let r = relation_report(&builtin::stretched_haar(), 16);
        assert!(r.verdicts.biorthogonal);
        assert!(!r.verdicts.cuntz);
    }

    #[test]
    fn dual_length_mismatch() {
        let bank = builtin::haar();
        let err = bank.with_duals(vec![LaurentPoly::one()]).unwrap_err();
        assert_eq!(err, Error::DualLengthMismatch { expected: 2, got: 1 });
        let json = r#"{"N":2,"filters":[[[0,1.0,0.0]],[[1,1.0,0.0]]],"dual_filters":[[[0,1.0,0.0]]]}"#;
        assert!(serde_json::from_str::<FilterBank>(json).is_err());
    }

    #[test]
    fn genus_is_computed() {
        assert_eq!(builtin::haar().genus(), 1);
        // 1 + z² with N = 4 fits in [-3, 3].
        assert_eq!(builtin::stretched_haar().genus(), 1);
        let b = FilterBank::new(2, vec![LaurentPoly::from_real(0, &[1.0, 1.0, 1.0, 1.0]), LaurentPoly::mode(0)]).unwrap();
        assert_eq!(b.genus(), 2);
    }

    #[test]
    fn s_star_s_is_multiplication() {
        let bank = builtin::stretched_haar();
        let f = LaurentPoly::from_terms([(-3, c(1.0, 0.5)), (0, c(0.25, 0.0)), (5, c(0.0, -1.0))]);
        for mi in bank.filters() {
            for mj in bank.filters() {
                let lhs = apply_s_adjoint(mi, &apply_s(mj, &f, 4), 4);
                let rhs = &gram_multiplier(mi, mj, 4) * &f;
                assert!(lhs.max_coeff_diff(&rhs) < 1e-14);
            }
        }
    }

    #[test]
    fn module_expand_haar() {
        let bank = builtin::haar();
        let e = module_expand(&bank, &LaurentPoly::mode(0), 1).unwrap();
        assert_eq!(e.components.len(), 2);
        for comp in &e.components {
            assert!(comp.max_coeff_diff(&LaurentPoly::constant(c(FRAC_1_SQRT_2, 0.0))) < 1e-15);
        }
        assert!(e.reconstruct().max_coeff_diff(&LaurentPoly::mode(0)) < 1e-15);

        let z = module_expand(&bank, &LaurentPoly::zero(), 2).unwrap();
        assert!(z.components.iter().all(|p| p.is_zero()));
    }

    #[test]
    fn module_expand_rejects_non_reconstructive() {
        let bank = builtin::stretched_haar_self_dual();
        let err = module_expand(&bank, &LaurentPoly::mode(0), 1).unwrap_err();
        assert!(matches!(err, Error::NotReconstructive(_)));
    }

    #[test]
    fn words_are_lexicographic() {
        assert_eq!(words(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(words(3, 0), vec![Vec::<usize>::new()]);
    }
}
