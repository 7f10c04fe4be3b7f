//! The sequence-space picture: slanted Toeplitz subdivision, its adjoint,
//! the pyramid algorithm, and the infinite-product Fourier formula.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{ensure_reconstructive, FilterBank, RelationOptions};
use crate::laurent::{LaurentPoly, TorusPoint};
use crate::linalg::{czero, CMat, CVec};

/// A finitely supported sequence: `samples[j]` sits at index `offset + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow", into = "RawWindow")]
pub struct SignalWindow {
    pub offset: i64,
    pub samples: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawWindow {
    offset: i64,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<RawWindow> for SignalWindow {
    type Error = Error;
    fn try_from(raw: RawWindow) -> Result<Self> {
        if raw.re.len() != raw.im.len() {
            return Err(Error::Parse(format!(
                "signal has {} real parts and {} imaginary parts",
                raw.re.len(),
                raw.im.len()
            )));
        }
        Ok(SignalWindow {
            offset: raw.offset,
            samples: raw.re.iter().zip(&raw.im).map(|(&r, &i)| Complex64::new(r, i)).collect(),
        })
    }
}

impl From<SignalWindow> for RawWindow {
    fn from(w: SignalWindow) -> Self {
        RawWindow {
            offset: w.offset,
            re: w.samples.iter().map(|z| z.re).collect(),
            im: w.samples.iter().map(|z| z.im).collect(),
        }
    }
}

impl SignalWindow {
    pub fn new(offset: i64, samples: Vec<Complex64>) -> Self {
        SignalWindow { offset, samples }
    }

    pub fn from_real(offset: i64, samples: &[f64]) -> Self {
        SignalWindow::new(offset, samples.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn unit(index: i64) -> Self {
        SignalWindow::new(index, vec![Complex64::new(1.0, 0.0)])
    }

    pub fn empty() -> Self {
        SignalWindow::new(0, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Last stored index (`offset - 1` when empty).
    pub fn end(&self) -> i64 {
        self.offset + self.samples.len() as i64 - 1
    }

    pub fn get(&self, i: i64) -> Complex64 {
        if i < self.offset || i > self.end() {
            czero()
        } else {
            self.samples[(i - self.offset) as usize]
        }
    }

    /// Identification `e_k ↔ unit sample at k`.
    pub fn to_poly(&self) -> LaurentPoly {
        LaurentPoly::from_slice(self.offset, &self.samples)
    }

    pub fn from_poly(p: &LaurentPoly) -> Self {
        match (p.min_exp(), p.max_exp()) {
            (Some(lo), Some(hi)) => SignalWindow::new(lo, p.dense(lo, hi)),
            _ => SignalWindow::empty(),
        }
    }

    pub fn inner(&self, other: &SignalWindow) -> Complex64 {
        (self.offset..=self.end()).map(|i| self.get(i) * other.get(i).conj()).sum()
    }

    /// `max_i |x_i - y_i|` over the union of both windows.
    pub fn max_diff(&self, other: &SignalWindow) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.end().max(other.end());
        (lo..=hi).map(|i| (self.get(i) - other.get(i)).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn add_assign(&mut self, other: &SignalWindow) {
        if other.is_empty() {
            return;
        }
        if self.is_empty() {
            *self = other.clone();
            return;
        }
        let lo = self.offset.min(other.offset);
        let hi = self.end().max(other.end());
        let samples = (lo..=hi).map(|i| self.get(i) + other.get(i)).collect();
        *self = SignalWindow::new(lo, samples);
    }
}

fn exp_range(c: &LaurentPoly) -> Option<(i64, i64)> {
    Some((c.min_exp()?, c.max_exp()?))
}

/// `(Sx)_i = Σ_j c_{i-Nj} x_j`. The output window is
/// `[N·lo + min_exp, N·hi + max_exp]`, never clipped.
pub fn subdivide(c: &LaurentPoly, x: &SignalWindow, n: usize) -> SignalWindow {
    let (cmin, cmax) = match exp_range(c) {
        Some(r) if !x.is_empty() => r,
        _ => return SignalWindow::empty(),
    };
    let ni = n as i64;
    let lo = ni * x.offset + cmin;
    let hi = ni * x.end() + cmax;
    let mut out = vec![czero(); (hi - lo + 1) as usize];
    for (j, &xj) in (x.offset..).zip(&x.samples) {
        for (k, ck) in c.terms() {
            out[(ni * j + k - lo) as usize] += ck * xj;
        }
    }
    SignalWindow::new(lo, out)
}

/// `(S*x)_j = Σ_i conj(c_{i-Nj}) x_i`.
pub fn decimate_adjoint(c: &LaurentPoly, x: &SignalWindow, n: usize) -> SignalWindow {
    let (cmin, cmax) = match exp_range(c) {
        Some(r) if !x.is_empty() => r,
        _ => return SignalWindow::empty(),
    };
    let ni = n as i64;
    let lo = (x.offset - cmax).div_euclid(ni) + i64::from((x.offset - cmax).rem_euclid(ni) != 0);
    let hi = (x.end() - cmin).div_euclid(ni);
    if hi < lo {
        return SignalWindow::empty();
    }
    let out = (lo..=hi)
        .map(|j| c.terms().map(|(k, ck)| ck.conj() * x.get(ni * j + k)).sum())
        .collect();
    SignalWindow::new(lo, out)
}

/// Index window for a dense slanted Toeplitz matrix: rows `rows.0..=rows.1`,
/// columns `cols.0..=cols.1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixWindow {
    pub rows: (i64, i64),
    pub cols: (i64, i64),
}

impl MatrixWindow {
    pub fn square(lo: i64, hi: i64) -> Self {
        MatrixWindow { rows: (lo, hi), cols: (lo, hi) }
    }
}

/// Dense `(c_{i-Nj})` on the window.
pub fn dense_slanted_matrix(c: &LaurentPoly, n: usize, window: MatrixWindow) -> Result<CMat> {
    let (r0, r1) = window.rows;
    let (c0, c1) = window.cols;
    if r1 < r0 || c1 < c0 {
        return Err(Error::Dimension("empty matrix window".into()));
    }
    let ni = n as i64;
    Ok(CMat::from_fn((r1 - r0 + 1) as usize, (c1 - c0 + 1) as usize, |i, j| {
        c.coeff((r0 + i as i64) - ni * (c0 + j as i64))
    }))
}

/// Applies a dense slanted matrix to `x` restricted to the column window.
pub fn dense_apply(m: &CMat, window: MatrixWindow, x: &SignalWindow) -> SignalWindow {
    let v = CVec::from_iterator(m.ncols(), (window.cols.0..=window.cols.1).map(|j| x.get(j)));
    let y = m * v;
    SignalWindow::new(window.rows.0, y.iter().cloned().collect())
}

/// Output of the analysis half of the pyramid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pyramid {
    pub scale: usize,
    /// `details[level][i - 1]` is the band-`i` output at that level (`i ≥ 1`).
    pub details: Vec<Vec<SignalWindow>>,
    /// Final low-pass output after `depth` levels.
    pub approximation: SignalWindow,
}

impl Pyramid {
    pub fn depth(&self) -> usize {
        self.details.len()
    }
}

/// Analysis with the dual adjoints `S̃_i*`.
pub fn pyramid_analysis(bank: &FilterBank, x: &SignalWindow, depth: usize) -> Result<Pyramid> {
    pyramid_analysis_with(bank, x, depth, &RelationOptions::default())
}

pub fn pyramid_analysis_with(
    bank: &FilterBank,
    x: &SignalWindow,
    depth: usize,
    opts: &RelationOptions,
) -> Result<Pyramid> {
    if depth == 0 {
        return Err(Error::Dimension("pyramid depth must be at least 1".into()));
    }
    ensure_reconstructive(bank, opts)?;
    let n = bank.scale();
    let mut approx = x.clone();
    let mut details = Vec::with_capacity(depth);
    for _ in 0..depth {
        let level: Vec<SignalWindow> = bank.duals()[1..]
            .iter()
            .map(|md| decimate_adjoint(md, &approx, n))
            .collect();
        approx = decimate_adjoint(&bank.duals()[0], &approx, n);
        details.push(level);
    }
    Ok(Pyramid {
        scale: n,
        details,
        approximation: approx,
    })
}

/// Synthesis with the primaries: `a ← S_0 a + Σ_{i≥1} S_i d_i`, deepest level first.
pub fn pyramid_synthesis(bank: &FilterBank, pyr: &Pyramid) -> SignalWindow {
    let n = bank.scale();
    let mut approx = pyr.approximation.clone();
    for level in pyr.details.iter().rev() {
        let mut next = subdivide(&bank.filters()[0], &approx, n);
        for (m, d) in bank.filters()[1..].iter().zip(level) {
            next.add_assign(&subdivide(m, d, n));
        }
        approx = next;
    }
    approx
}

/// Analysis followed by synthesis, returning the reconstruction and the
/// max error against `x`.
pub fn pyramid_roundtrip(bank: &FilterBank, x: &SignalWindow, depth: usize) -> Result<(Pyramid, SignalWindow, f64)> {
    let pyr = pyramid_analysis(bank, x, depth)?;
    let y = pyramid_synthesis(bank, &pyr);
    let err = y.max_diff(x);
    Ok((pyr, y, err))
}

/// Tolerance on `|m0(1) - √N|`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Partial product `Π_{j=1}^{J} m0(e^{-it/N^j}) / √N`.
pub fn fourier_product(m0: &LaurentPoly, n: usize, t: f64, factors: usize) -> Result<Complex64> {
    let sqrt_n = (n as f64).sqrt();
    let at_one = m0.eval(TorusPoint::one());
    if (at_one - Complex64::new(sqrt_n, 0.0)).norm() > NORMALIZATION_TOL {
        return Err(Error::BadNormalization {
            value: at_one.norm(),
            expected: sqrt_n,
        });
    }
    let mut prod = Complex64::new(1.0, 0.0);
    let mut s = t;
    for _ in 0..factors {
        s /= n as f64;
        prod *= m0.eval(TorusPoint::new(-s)) / sqrt_n;
    }
    Ok(prod)
}

/// Number of factors after which every further factor is within `tol` of 1
/// for `|t| ≤ t_max`, using `|m0(e^{-is}) - √N| ≤ Σ |c_k| |k| |s|`.
pub fn factors_needed(m0: &LaurentPoly, n: usize, t_max: f64, tol: f64) -> usize {
    let lip: f64 = m0.terms().map(|(k, c)| c.norm() * k.abs() as f64).sum::<f64>() / (n as f64).sqrt();
    let mut j = 0;
    let mut s = t_max.abs();
    loop {
        j += 1;
        s /= n as f64;
        if lip * s < tol || j > 4096 {
            return j;
        }
    }
}

/// `(1/N) Σ_k |m0(t + 2πk/N)|²` on a grid; bounded by 1 when the product lies in `L²(ℝ)`.
pub fn energy_premise(m0: &LaurentPoly, n: usize, grid_size: usize) -> f64 {
    let sq = &m0.adjoint() * m0;
    sq.decimate(n).sup_on_grid(&crate::laurent::torus_grid(grid_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::linalg::c;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn subdivide_haar_unit() {
        let m0 = builtin::haar().filters()[0].clone();
        let y = subdivide(&m0, &SignalWindow::unit(0), 2);
        assert_eq!(y.offset, 0);
        assert_eq!(y.len(), 2);
        for s in &y.samples {
            assert!((s - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-16);
        }
        let z = subdivide(&m0, &SignalWindow::from_real(0, &[0.0, 0.0]), 2);
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn window_growth() {
        let c = LaurentPoly::from_real(-1, &[1.0, 2.0, 3.0]);
        let x = SignalWindow::from_real(2, &[1.0, 1.0, 1.0]);
        let y = subdivide(&c, &x, 3);
        assert_eq!(y.offset, 3 * 2 - 1);
        assert_eq!(y.end(), 3 * 4 + 1);
    }

    #[test]
    fn decimate_adjoint_haar_unit() {
        let m0 = builtin::haar().filters()[0].clone();
        let y = decimate_adjoint(&m0, &SignalWindow::unit(0), 2);
        assert!((y.get(0) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-16);
        assert_eq!(y.max_diff(&SignalWindow::new(0, vec![c(FRAC_1_SQRT_2, 0.0)])), 0.0);
    }

    #[test]
    fn haar_isometry_on_sequences() {
        let m0 = builtin::haar().filters()[0].clone();
        let x = SignalWindow::from_real(-3, &[1.0, -2.0, 0.5, 4.0, 3.0]);
        let back = decimate_adjoint(&m0, &subdivide(&m0, &x, 2), 2);
        assert!(back.max_diff(&x) < 1e-15);
    }

    #[test]
    fn dense_matrix_entries() {
        let m0 = builtin::haar().filters()[0].clone();
        let m = dense_slanted_matrix(&m0, 2, MatrixWindow::square(0, 3)).unwrap();
        let s = FRAC_1_SQRT_2;
        let expect = [[s, 0.0, 0.0, 0.0], [s, 0.0, 0.0, 0.0], [0.0, s, 0.0, 0.0], [0.0, s, 0.0, 0.0]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[(i, j)] - c(expect[i][j], 0.0)).norm() < 1e-16);
            }
        }
        let delta = dense_slanted_matrix(&LaurentPoly::one(), 3, MatrixWindow::square(-4, 4)).unwrap();
        for i in 0..9i64 {
            for j in 0..9i64 {
                let expected = if i - 4 == 3 * (j - 4) { 1.0 } else { 0.0 };
                assert_eq!(delta[(i as usize, j as usize)], c(expected, 0.0));
            }
        }
        assert!(dense_slanted_matrix(&m0, 2, MatrixWindow { rows: (1, 0), cols: (0, 0) }).is_err());
    }

    #[test]
    fn pyramid_haar_small() {
        let x = SignalWindow::from_real(0, &[1.0, 2.0, 3.0, 4.0]);
        let (pyr, y, err) = pyramid_roundtrip(&builtin::haar(), &x, 2).unwrap();
        assert_eq!(pyr.depth(), 2);
        assert!(err < 1e-14, "{err}");
        assert!(y.max_diff(&x) < 1e-14);

        let zero = SignalWindow::from_real(0, &[0.0; 6]);
        let (pyr, _, _) = pyramid_roundtrip(&builtin::haar(), &zero, 2).unwrap();
        assert_eq!(pyr.approximation.max_abs(), 0.0);
        assert!(pyr.details.iter().flatten().all(|d| d.max_abs() == 0.0));
    }

    #[test]
    fn pyramid_rejects_non_reconstructive() {
        let x = SignalWindow::from_real(0, &[1.0]);
        assert!(matches!(
            pyramid_analysis(&builtin::stretched_haar_self_dual(), &x, 1),
            Err(Error::NotReconstructive(_))
        ));
    }

    #[test]
    fn fourier_product_haar() {
        let m0 = builtin::haar().filters()[0].clone();
        assert!((fourier_product(&m0, 2, 0.0, 40).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let v = fourier_product(&m0, 2, PI, 40).unwrap();
        assert!((v.norm() - 2.0 / PI).abs() < 1e-8);
        assert!(matches!(
            fourier_product(&LaurentPoly::from_real(0, &[1.0, 1.0]), 2, 1.0, 10),
            Err(Error::BadNormalization { .. })
        ));
    }

    #[test]
    fn fourier_product_stretched_haar_converges() {
        // m0 = 1 + z² with N = 4; the product is e^{-it/3} Π cos(t/4^j).
        let m0 = LaurentPoly::from_real(0, &[1.0, 0.0, 1.0]);
        let t = 2.0 * PI;
        let a = fourier_product(&m0, 4, t, 40).unwrap();
        let b = fourier_product(&m0, 4, t, 200).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert!(a.norm().is_finite() && a.norm() > 0.0);
        assert!(energy_premise(&m0, 4, 64) > 1.0);
    }

    #[test]
    fn factors_needed_is_enough() {
        let m0 = builtin::haar().filters()[0].clone();
        let j = factors_needed(&m0, 2, 6.0, 1e-12);
        let a = fourier_product(&m0, 2, 6.0, j).unwrap();
        let b = fourier_product(&m0, 2, 6.0, j + 30).unwrap();
        assert!((a - b).norm() < 1e-11);
    }

    #[test]
    fn signal_json_form() {
        let w = SignalWindow::new(-1, vec![c(1.0, 2.0), c(0.5, 0.0)]);
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"offset":-1,"re":[1.0,0.5],"im":[2.0,0.0]}"#);
        assert_eq!(serde_json::from_str::<SignalWindow>(&s).unwrap(), w);
        assert!(serde_json::from_str::<SignalWindow>(r#"{"offset":0,"re":[1.0],"im":[]}"#).is_err());
    }
}
