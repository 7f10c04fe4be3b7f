//! Sparse Laurent polynomials on the unit circle.
//!
//! A [`LaurentPoly`] is a finitely supported map from integer exponents to
//! complex coefficients, `p(z) = Σ c_k z^k`. Filters, loop-matrix entries and
//! Fourier modes `e_n(z) = z^n` are all represented this way so that every
//! operator identity can be checked coefficient by coefficient.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// Coefficients with modulus below this are dropped after arithmetic.
pub const DEFAULT_PRUNE_EPS: f64 = 1e-14;

/// Default number of equispaced torus samples for pointwise checks.
pub const DEFAULT_GRID_SIZE: usize = 256;

/// A point `z = exp(iθ)` on the unit circle, stored by its angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    theta: f64,
}

impl TorusPoint {
    /// Builds the point with angle `theta`, reduced into `[0, 2π)`.
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        TorusPoint { theta: t }
    }

    pub fn one() -> Self {
        TorusPoint { theta: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    /// `z^k`, computed from the angle so that `|z^k| = 1` holds to rounding.
    pub fn pow(&self, k: i64) -> Complex64 {
        Complex64::from_polar(1.0, self.theta * k as f64)
    }

    /// The point `z^n`.
    pub fn power_point(&self, n: i64) -> TorusPoint {
        TorusPoint::new(self.theta * n as f64)
    }

    /// Principal `N`-th root `exp(iθ/N)`.
    pub fn principal_root(&self, n: usize) -> TorusPoint {
        TorusPoint::new(self.theta / n as f64)
    }

    /// All `N`-th roots `exp(i(θ + 2πk)/N)`, `k = 0..N`, principal root first.
    pub fn roots(&self, n: usize) -> Vec<TorusPoint> {
        (0..n)
            .map(|k| TorusPoint::new((self.theta + TAU * k as f64) / n as f64))
            .collect()
    }
}

/// `n` equispaced points `exp(2πij/n)`.
pub fn torus_grid(n: usize) -> Vec<TorusPoint> {
    (0..n)
        .map(|j| TorusPoint::new(TAU * j as f64 / n as f64))
        .collect()
}

/// A Laurent polynomial with sparse complex coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn one() -> Self {
        LaurentPoly::monomial(0, Complex64::new(1.0, 0.0))
    }

    /// `c z^k`.
    pub fn monomial(k: i64, c: Complex64) -> Self {
        let mut p = LaurentPoly::zero();
        p.add_term(k, c);
        p.prune(0.0);
        p
    }

    /// Fourier mode `e_n(z) = z^n`.
    pub fn mode(n: i64) -> Self {
        LaurentPoly::monomial(n, Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        LaurentPoly::monomial(0, c)
    }

    /// Builds from `(exponent, coefficient)` pairs; repeated exponents add.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut p = LaurentPoly::zero();
        for (k, c) in terms {
            p.add_term(k, c);
        }
        p.prune(DEFAULT_PRUNE_EPS);
        p
    }

    /// Real coefficients `c_k` for `k = lo, lo+1, ...`.
    pub fn from_real(lo: i64, coeffs: &[f64]) -> Self {
        LaurentPoly::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| (lo + j as i64, Complex64::new(c, 0.0))),
        )
    }

    /// Complex coefficients `c_k` for `k = lo, lo+1, ...`.
    pub fn from_slice(lo: i64, coeffs: &[Complex64]) -> Self {
        LaurentPoly::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| (lo + j as i64, c)),
        )
    }

    fn add_term(&mut self, k: i64, c: Complex64) {
        *self.coeffs.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    /// Drops every coefficient with `|c| <= eps` (and exact zeros when `eps = 0`).
    pub fn prune(&mut self, eps: f64) {
        self.coeffs.retain(|_, c| c.norm() > eps);
    }

    pub fn pruned(mut self, eps: f64) -> Self {
        self.prune(eps);
        self
    }

    /// Coefficient at exponent `k` (zero outside the support).
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs
            .get(&k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Nonzero terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Largest `|k|` in the support, zero for the zero polynomial.
    pub fn max_abs_exp(&self) -> i64 {
        self.coeffs.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// `Σ c_k z^k`.
    pub fn eval(&self, z: TorusPoint) -> Complex64 {
        self.coeffs.iter().map(|(&k, &c)| c * z.pow(k)).sum()
    }

    /// The polynomial `w ↦ conj(p(w))` on the torus: `c_k ↦ conj(c_{-k})`.
    pub fn adjoint(&self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&k, c)| (-k, c.conj())).collect(),
        }
    }

    /// Keeps the coefficients at multiples of `n` and rescales exponents:
    /// `d_k = c_{Nk}`. Pointwise this is the root average `(1/N) Σ_{w^N=z} p(w)`.
    pub fn decimate(&self, n: usize) -> LaurentPoly {
        assert!(n >= 2, "decimation factor must be at least 2");
        let n = n as i64;
        LaurentPoly {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&k, _)| k.rem_euclid(n) == 0)
                .map(|(&k, &c)| (k / n, c))
                .collect(),
        }
    }

    /// `p(z^N)`: coefficient `c_k` moves to exponent `Nk`.
    pub fn upsample(&self, n: usize) -> LaurentPoly {
        assert!(n >= 2, "upsampling factor must be at least 2");
        let n = n as i64;
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&k, &c)| (n * k, c)).collect(),
        }
    }

    /// Multiplies by `z^s`.
    pub fn shift(&self, s: i64) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&k, &c)| (k + s, c)).collect(),
        }
    }

    pub fn scale(&self, a: Complex64) -> LaurentPoly {
        let mut p = LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&k, &c)| (k, a * c)).collect(),
        };
        p.prune(DEFAULT_PRUNE_EPS);
        p
    }

    pub fn conj_coeffs(&self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, c.conj())).collect(),
        }
    }

    /// Product with an explicit pruning threshold.
    pub fn mul_eps(&self, other: &LaurentPoly, eps: f64) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (&a, &ca) in &self.coeffs {
            for (&b, &cb) in &other.coeffs {
                out.add_term(a + b, ca * cb);
            }
        }
        out.prune(eps);
        out
    }

    /// ℓ² pairing of coefficient sequences, `Σ c_k conj(d_k)`.
    pub fn inner(&self, other: &LaurentPoly) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&k, &c)| c * other.coeff(k).conj())
            .sum()
    }

    /// ℓ² norm of the coefficients (= L²(T) norm).
    pub fn norm(&self) -> f64 {
        self.coeffs.values().fold(0.0, |acc, c| acc + c.norm_sqr()).sqrt()
    }

    /// Largest coefficient deviation from `other`.
    pub fn max_coeff_diff(&self, other: &LaurentPoly) -> f64 {
        self.coeffs
            .keys()
            .chain(other.coeffs.keys())
            .map(|&k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }

    /// Sup of `|p(z)|` over an equispaced grid.
    pub fn sup_on_grid(&self, grid: &[TorusPoint]) -> f64 {
        grid.iter().map(|&z| self.eval(z).norm()).fold(0.0, f64::max)
    }

    /// `Some((k, c))` if the polynomial is a single nonzero monomial `c z^k`.
    pub fn as_monomial(&self) -> Option<(i64, Complex64)> {
        if self.coeffs.len() == 1 {
            self.coeffs.iter().next().map(|(&k, &c)| (k, c))
        } else {
            None
        }
    }

    /// Dense coefficient vector over exponents `lo..=hi`.
    pub fn dense(&self, lo: i64, hi: i64) -> Vec<Complex64> {
        (lo..=hi).map(|k| self.coeff(k)).collect()
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)z^{}", c.re, c.im, k)?;
        }
        Ok(())
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (&k, &c) in &rhs.coeffs {
            out.add_term(k, c);
        }
        out.prune(DEFAULT_PRUNE_EPS);
        out
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (&k, &c) in &rhs.coeffs {
            out.add_term(k, -c);
        }
        out.prune(DEFAULT_PRUNE_EPS);
        out
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.mul_eps(rhs, DEFAULT_PRUNE_EPS)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(&k, &c)| (k, -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: &LaurentPoly) -> LaurentPoly {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl std::iter::Sum for LaurentPoly {
    fn sum<I: Iterator<Item = LaurentPoly>>(iter: I) -> Self {
        iter.fold(LaurentPoly::zero(), |acc, p| &acc + &p)
    }
}

// JSON form: [[exponent, re, im], ...] with strictly increasing exponents.
impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.coeffs.len()))?;
        for (&k, c) in &self.coeffs {
            seq.serialize_element(&(k, c.re, c.im))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TermsVisitor;

        impl<'de> Visitor<'de> for TermsVisitor {
            type Value = LaurentPoly;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of [exponent, re, im] triples with increasing exponents")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<LaurentPoly, A::Error> {
                let mut coeffs = BTreeMap::new();
                let mut last: Option<i64> = None;
                while let Some((k, re, im)) = seq.next_element::<(i64, f64, f64)>()? {
                    if let Some(prev) = last {
                        if k <= prev {
                            return Err(de::Error::custom(format!(
                                "exponents must be strictly increasing (got {k} after {prev})"
                            )));
                        }
                    }
                    last = Some(k);
                    let c = Complex64::new(re, im);
                    if c.norm() > 0.0 {
                        coeffs.insert(k, c);
                    }
                }
                Ok(LaurentPoly { coeffs })
            }
        }

        deserializer.deserialize_seq(TermsVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Horner evaluation on z^{-lo} p(z), written independently of `eval`.
    fn horner(p: &LaurentPoly, z: Complex64) -> Complex64 {
        let (lo, hi) = match (p.min_exp(), p.max_exp()) {
            (Some(a), Some(b)) => (a, b),
            _ => return c(0.0, 0.0),
        };
        let mut acc = c(0.0, 0.0);
        for k in (lo..=hi).rev() {
            acc = acc * z + p.coeff(k);
        }
        acc * z.powi(lo as i32)
    }

    #[test]
    fn eval_examples() {
        let p = LaurentPoly::from_real(0, &[1.0, 0.0, 1.0]);
        let v = p.eval(TorusPoint::new(PI / 2.0));
        assert!(v.norm() < 1e-15);

        let haar = LaurentPoly::from_real(0, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        assert!((haar.eval(TorusPoint::one()) - c(SQRT_2, 0.0)).norm() < 1e-15);

        let z = TorusPoint::new(PI / 3.0);
        assert!((p.eval(z) - horner(&p, z.z())).norm() < 1e-14);
    }

    #[test]
    fn eval_matches_horner_on_grid() {
        let p = LaurentPoly::from_terms([
            (-3, c(0.5, -1.0)),
            (0, c(2.0, 0.0)),
            (4, c(-0.25, 0.75)),
        ]);
        for z in torus_grid(128) {
            assert!((p.eval(z) - horner(&p, z.z())).norm() < 1e-13);
        }
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(LaurentPoly::mode(1).adjoint(), LaurentPoly::mode(-1));
        let p = LaurentPoly::monomial(3, c(2.0, 1.0));
        assert_eq!(p.adjoint(), LaurentPoly::monomial(-3, c(2.0, -1.0)));

        let haar = LaurentPoly::from_real(0, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let adj = haar.adjoint();
        assert_eq!(adj, LaurentPoly::from_real(-1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]));
        for z in torus_grid(64) {
            assert!((adj.eval(z) - haar.eval(z).conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn decimate_examples() {
        assert_eq!(LaurentPoly::mode(6).decimate(2), LaurentPoly::mode(3));
        assert!(LaurentPoly::mode(5).decimate(2).is_zero());
        assert_eq!(LaurentPoly::mode(-4).decimate(2), LaurentPoly::mode(-2));
        assert!(LaurentPoly::mode(-3).decimate(2).is_zero());

        // |1 + z²|² = 2 + z² + z^{-2}
        let m0 = LaurentPoly::from_real(0, &[1.0, 0.0, 1.0]);
        let sq = &m0.adjoint() * &m0;
        assert_eq!(sq, LaurentPoly::from_real(-2, &[1.0, 0.0, 2.0, 0.0, 1.0]));
        assert_eq!(sq.decimate(4), LaurentPoly::constant(c(2.0, 0.0)));
    }

    #[test]
    fn upsample_examples() {
        assert_eq!(LaurentPoly::mode(3).upsample(2), LaurentPoly::mode(6));
        let p = LaurentPoly::from_real(0, &[1.0, 1.0]);
        assert_eq!(p.upsample(4), LaurentPoly::from_real(0, &[1.0, 0.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn decimate_is_root_average() {
        let p = LaurentPoly::from_terms([
            (-5, c(0.3, 0.1)),
            (-2, c(1.0, 0.0)),
            (0, c(-0.5, 2.0)),
            (3, c(0.0, 1.0)),
            (6, c(0.7, -0.7)),
        ]);
        for n in 2..=4 {
            let d = p.decimate(n);
            for z in torus_grid(64) {
                let avg: Complex64 =
                    z.roots(n).iter().map(|&w| p.eval(w)).sum::<Complex64>() / n as f64;
                assert!((d.eval(z) - avg).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn roots_start_at_principal_branch() {
        let z = TorusPoint::new(1.2);
        let roots = z.roots(3);
        assert_eq!(roots[0], z.principal_root(3));
        for w in roots {
            assert!((w.pow(3) - z.z()).norm() < 1e-14);
        }
    }

    #[test]
    fn json_form() {
        let p = LaurentPoly::from_terms([(-1, c(1.0, 0.0)), (2, c(0.0, -2.0))]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[-1,1.0,0.0],[2,0.0,-2.0]]");
        let back: LaurentPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<LaurentPoly>("[[2,1.0,0.0],[1,1.0,0.0]]").is_err());
        assert!(serde_json::from_str::<LaurentPoly>("[[1,1.0,0.0],[1,1.0,0.0]]").is_err());
    }
}
