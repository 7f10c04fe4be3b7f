//! Finite-dimensional co-invariant, doubly-cyclic anchor subspaces.
//!
//! The anchor `K` is the largest subspace of `span{e_0, e_{-1}, …, e_{-Ng+1}}`
//! mapped into itself by all `2N` adjoints `S_i*`, `S̃_i*`. It is found by
//! shrinking the window until it is stable under every adjoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{apply_s, apply_s_adjoint, ensure_reconstructive, FilterBank, RelationOptions};
use crate::laurent::LaurentPoly;
use crate::linalg::{self, CMat, CVec};
use crate::polyphase::loop_from_polys;

/// Membership tolerance for "lies in K".
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Singular-value cutoff for the rank-revealing steps.
pub const SV_CUTOFF: f64 = 1e-12;
/// Default cap on pull-back depth.
pub const DEFAULT_DEPTH_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Primary,
    Dual,
}

impl Family {
    pub fn other(self) -> Family {
        match self {
            Family::Primary => Family::Dual,
            Family::Dual => Family::Primary,
        }
    }

    fn filters(self, bank: &FilterBank) -> &[LaurentPoly] {
        match self {
            Family::Primary => bank.filters(),
            Family::Dual => bank.duals(),
        }
    }
}

/// `S_i* e_n = conj(A_{i,j₀}(z)) z^{(n-j₀)/N}` with `j₀ = n mod N` in `[0, N-1]`.
pub fn adjoint_on_mode(bank: &FilterBank, family: Family, i: usize, n: i64) -> LaurentPoly {
    let scale = bank.scale();
    let a = loop_from_polys(family.filters(bank), scale);
    let ni = scale as i64;
    let j0 = n.rem_euclid(ni);
    a.entry(i, j0 as usize).adjoint().shift((n - j0) / ni)
}

/// All `2N` adjoints applied to `f`: primaries first, then duals.
fn all_adjoints(bank: &FilterBank, f: &LaurentPoly) -> Vec<LaurentPoly> {
    let n = bank.scale();
    bank.filters()
        .iter()
        .chain(bank.duals())
        .map(|m| apply_s_adjoint(m, f, n))
        .collect()
}

/// The anchor subspace in window coordinates: column `c` of `basis` holds
/// the coefficients at exponents `window_lo..=0`.
#[derive(Debug, Clone)]
pub struct AnchorSubspace {
    pub window_lo: i64,
    pub basis: CMat,
}

impl AnchorSubspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn window_len(&self) -> usize {
        (1 - self.window_lo) as usize
    }

    pub fn basis_polys(&self) -> Vec<LaurentPoly> {
        (0..self.dim())
            .map(|c| {
                let col: Vec<_> = self.basis.column(c).iter().cloned().collect();
                LaurentPoly::from_slice(self.window_lo, &col)
            })
            .collect()
    }

    /// Norm of the component of `p` orthogonal to `K`.
    pub fn distance(&self, p: &LaurentPoly) -> f64 {
        let mut outside = 0.0;
        for (k, c) in p.terms() {
            if k < self.window_lo || k > 0 {
                outside += c.norm_sqr();
            }
        }
        let v = CVec::from_vec(p.dense(self.window_lo, 0));
        let proj = &self.basis * (self.basis.adjoint() * &v);
        let inside = (v - proj).norm_squared();
        (outside + inside).sqrt()
    }

    pub fn contains(&self, p: &LaurentPoly) -> bool {
        self.distance(p) < MEMBERSHIP_TOL * p.norm().max(1.0)
    }
}

fn dense_columns(polys: &[LaurentPoly], lo: i64, hi: i64) -> CMat {
    let cols: Vec<CVec> = polys.iter().map(|p| CVec::from_vec(p.dense(lo, hi))).collect();
    if cols.is_empty() {
        CMat::zeros((hi - lo + 1).max(0) as usize, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

fn exponent_hull(polys: &[LaurentPoly], lo: i64, hi: i64) -> (i64, i64) {
    polys.iter().fold((lo, hi), |(a, b), p| {
        (p.min_exp().map_or(a, |m| a.min(m)), p.max_exp().map_or(b, |m| b.max(m)))
    })
}

pub fn compute_anchor(bank: &FilterBank) -> Result<AnchorSubspace> {
    compute_anchor_with(bank, &RelationOptions::default())
}

/// Largest subspace of the window invariant under all adjoints.
pub fn compute_anchor_with(bank: &FilterBank, opts: &RelationOptions) -> Result<AnchorSubspace> {
    ensure_reconstructive(bank, opts)?;
    let width = (bank.scale() * bank.genus()) as i64;
    let window_lo = 1 - width;
    let w = width as usize;

    // Images of each window mode under each adjoint, as dense matrices.
    let images: Vec<Vec<LaurentPoly>> = (window_lo..=0).map(|k| all_adjoints(bank, &LaurentPoly::mode(k))).collect();
    let flat: Vec<LaurentPoly> = images.iter().flatten().cloned().collect();
    let (lo, hi) = exponent_hull(&flat, window_lo, 0);
    let rows = (hi - lo + 1) as usize;
    let count = 2 * bank.scale();
    let op_mats: Vec<CMat> = (0..count)
        .map(|t| {
            let cols: Vec<LaurentPoly> = images.iter().map(|imgs| imgs[t].clone()).collect();
            dense_columns(&cols, lo, hi)
        })
        .collect();
    let embed_at = (window_lo - lo) as usize;

    let mut q = CMat::identity(w, w);
    loop {
        let r = q.ncols();
        if r == 0 {
            return Err(Error::EmptyAnchor);
        }
        let mut embedded = CMat::zeros(rows, r);
        embedded.view_mut((embed_at, 0), (w, r)).copy_from(&q);
        let proj = CMat::identity(rows, rows) - &embedded * embedded.adjoint();
        let mut stacked = CMat::zeros(rows * count, r);
        let mut scale: f64 = 1.0;
        for (t, m) in op_mats.iter().enumerate() {
            let block = &proj * (m * &q);
            scale = scale.max(linalg::max_abs(m));
            stacked.view_mut((t * rows, 0), (rows, r)).copy_from(&block);
        }
        let ns = linalg::null_space(&stacked, SV_CUTOFF * scale);
        if ns.ncols() == r {
            break;
        }
        q = &q * ns;
    }
    // Re-orthonormalize once more for a clean basis.
    let basis = linalg::range_basis(&q, SV_CUTOFF);
    if basis.ncols() == 0 {
        return Err(Error::EmptyAnchor);
    }
    Ok(AnchorSubspace { window_lo, basis })
}

/// `max ‖(I - P_K) T v‖` over basis vectors `v` and all adjoints `T`.
pub fn coinvariance_residual(bank: &FilterBank, anchor: &AnchorSubspace) -> f64 {
    anchor
        .basis_polys()
        .iter()
        .flat_map(|v| all_adjoints(bank, v))
        .map(|img| anchor.distance(&img))
        .fold(0.0, f64::max)
}

/// Smallest `k` such that every length-`k` word in the `2N` adjoints maps
/// `e_n` into the anchor.
pub fn pullback_depth(bank: &FilterBank, anchor: &AnchorSubspace, n: i64, cap: usize) -> Result<usize> {
    let mut span = vec![LaurentPoly::mode(n)];
    for depth in 0..=cap {
        if span.iter().all(|v| anchor.contains(v)) {
            return Ok(depth);
        }
        let images: Vec<LaurentPoly> = span.iter().flat_map(|v| all_adjoints(bank, v)).collect();
        let (lo, hi) = exponent_hull(&images, 0, 0);
        let basis = linalg::range_basis(&dense_columns(&images, lo, hi), SV_CUTOFF);
        span = (0..basis.ncols())
            .map(|c| {
                let col: Vec<_> = basis.column(c).iter().cloned().collect();
                LaurentPoly::from_slice(lo, &col)
            })
            .collect();
    }
    Err(Error::DepthExceeded { mode: n, cap })
}

/// `Σ_{|w|=k} S_w S̃_w* v`, checking that every pulled-back vector is in `K`.
fn reconstruct(
    bank: &FilterBank,
    synth: Family,
    anchor: &AnchorSubspace,
    v: &LaurentPoly,
    depth: usize,
    worst_membership: &mut f64,
) -> LaurentPoly {
    if depth == 0 {
        *worst_membership = worst_membership.max(anchor.distance(v));
        return v.clone();
    }
    let n = bank.scale();
    let primaries = synth.filters(bank);
    let analysis = synth.other().filters(bank);
    primaries
        .iter()
        .zip(analysis)
        .map(|(m, md)| {
            let pulled = apply_s_adjoint(md, v, n);
            let inner = reconstruct(bank, synth, anchor, &pulled, depth - 1, worst_membership);
            apply_s(m, &inner, n)
        })
        .sum()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CyclicityReport {
    /// Max `‖Σ_w S_w S̃_w* e_n - e_n‖` (synthesis with primaries).
    pub primary_residual: f64,
    /// Same with the roles of the two families swapped.
    pub dual_residual: f64,
    /// Largest distance from `K` among all pulled-back vectors.
    pub membership_residual: f64,
    /// `(n, k)` pairs used.
    pub depths: Vec<(i64, usize)>,
}

impl CyclicityReport {
    pub fn max_residual(&self) -> f64 {
        self.primary_residual.max(self.dual_residual)
    }
}

pub fn cyclicity_check(bank: &FilterBank, anchor: &AnchorSubspace, n_range: i64) -> Result<CyclicityReport> {
    let mut report = CyclicityReport {
        primary_residual: 0.0,
        dual_residual: 0.0,
        membership_residual: 0.0,
        depths: Vec::new(),
    };
    for n in -n_range..=n_range {
        let k = pullback_depth(bank, anchor, n, DEFAULT_DEPTH_CAP)?.max(1);
        let e = LaurentPoly::mode(n);
        for family in [Family::Primary, Family::Dual] {
            let mut worst: f64 = 0.0;
            let r = reconstruct(bank, family, anchor, &e, k, &mut worst);
            let err = (&r - &e).norm();
            match family {
                Family::Primary => report.primary_residual = report.primary_residual.max(err),
                Family::Dual => report.dual_residual = report.dual_residual.max(err),
            }
            report.membership_residual = report.membership_residual.max(worst);
        }
        report.depths.push((n, k));
    }
    Ok(report)
}

/// Serializable summary of the anchor computation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnchorReport {
    pub scale: usize,
    pub genus: usize,
    pub window: (i64, i64),
    pub dimension: usize,
    pub basis: Vec<LaurentPoly>,
    pub coinvariance_residual: f64,
    pub pullback_depths: Vec<(i64, usize)>,
    pub cyclicity: CyclicityReport,
}

pub fn anchor_report(bank: &FilterBank, mode_range: i64, cyclicity_range: i64) -> Result<AnchorReport> {
    let anchor = compute_anchor(bank)?;
    let pullback_depths = (-mode_range..=mode_range)
        .map(|n| pullback_depth(bank, &anchor, n, DEFAULT_DEPTH_CAP).map(|d| (n, d)))
        .collect::<Result<Vec<_>>>()?;
    let cyclicity = cyclicity_check(bank, &anchor, cyclicity_range)?;
    Ok(AnchorReport {
        scale: bank.scale(),
        genus: bank.genus(),
        window: (anchor.window_lo, 0),
        dimension: anchor.dim(),
        basis: anchor.basis_polys(),
        coinvariance_residual: coinvariance_residual(bank, &anchor),
        pullback_depths,
        cyclicity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::linalg::c;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn adjoint_on_mode_haar() {
        let bank = builtin::haar();
        let a = adjoint_on_mode(&bank, Family::Primary, 0, 0);
        assert!(a.max_coeff_diff(&LaurentPoly::constant(c(FRAC_1_SQRT_2, 0.0))) < 1e-15);
        let b = adjoint_on_mode(&bank, Family::Primary, 0, -1);
        assert!(b.max_coeff_diff(&LaurentPoly::monomial(-1, c(FRAC_1_SQRT_2, 0.0))) < 1e-15);
    }

    #[test]
    fn adjoint_on_mode_matches_transfer_operator() {
        let bank = builtin::random_biorthogonal_bank(3, 1, &mut builtin::rng(5));
        let span = 4 * (bank.scale() * bank.genus()) as i64;
        for family in [Family::Primary, Family::Dual] {
            for i in 0..bank.scale() {
                for n in -span..=span {
                    let direct = apply_s_adjoint(&family.filters(&bank)[i], &LaurentPoly::mode(n), bank.scale());
                    let formula = adjoint_on_mode(&bank, family, i, n);
                    assert!(direct.max_coeff_diff(&formula) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn window_modes_map_to_conjugated_loop_entries() {
        let bank = builtin::stretched_haar();
        let a = loop_from_polys(bank.filters(), 4);
        for i in 0..4 {
            for n in 0..4 {
                let got = adjoint_on_mode(&bank, Family::Primary, i, n);
                assert_eq!(got, a.entry(i, n as usize).adjoint());
            }
        }
    }

    #[test]
    fn haar_anchor() {
        let bank = builtin::haar();
        let k = compute_anchor(&bank).unwrap();
        assert_eq!(k.dim(), 2);
        assert_eq!(k.window_lo, -1);
        assert!(k.contains(&LaurentPoly::mode(0)));
        assert!(k.contains(&LaurentPoly::mode(-1)));
        assert!(coinvariance_residual(&bank, &k) < 1e-10);
    }

    #[test]
    fn haar_pullback_depths() {
        let bank = builtin::haar();
        let k = compute_anchor(&bank).unwrap();
        assert_eq!(pullback_depth(&bank, &k, 0, 64).unwrap(), 0);
        // 4 → 2 → 1 → 0
        assert_eq!(pullback_depth(&bank, &k, 4, 64).unwrap(), 3);
        assert_eq!(pullback_depth(&bank, &k, -2, 64).unwrap(), 1);
        let mut last = 0;
        for n in 0..=32 {
            let d = pullback_depth(&bank, &k, n, 64).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn depth_cap_is_enforced() {
        let bank = builtin::haar();
        let k = compute_anchor(&bank).unwrap();
        assert_eq!(
            pullback_depth(&bank, &k, 1 << 20, 3).unwrap_err(),
            Error::DepthExceeded { mode: 1 << 20, cap: 3 }
        );
    }

    #[test]
    fn haar_cyclicity() {
        let bank = builtin::haar();
        let k = compute_anchor(&bank).unwrap();
        let r = cyclicity_check(&bank, &k, 8).unwrap();
        assert!(r.max_residual() < 1e-10);
        assert!(r.membership_residual < 1e-10);
        let zero = r.depths.iter().find(|(n, _)| *n == 0).unwrap();
        assert_eq!(zero.1, 1);
    }

    #[test]
    fn random_genus_two_anchor() {
        let bank = builtin::random_biorthogonal_bank(2, 1, &mut builtin::rng(21));
        assert_eq!(bank.genus(), 2);
        let k = compute_anchor(&bank).unwrap();
        assert!(k.dim() <= 4);
        assert!(coinvariance_residual(&bank, &k) < 1e-10);
        let r = cyclicity_check(&bank, &k, 6).unwrap();
        assert!(r.max_residual() < 1e-9, "{r:?}");
    }

    #[test]
    fn non_reconstructive_bank_rejected() {
        assert!(matches!(
            compute_anchor(&builtin::stretched_haar_self_dual()),
            Err(Error::NotReconstructive(_))
        ));
    }
}
