//! Fock spaces over positive block matrices, truncated at a finite level.
//!
//! Level `k` is spanned by `w ⊗ h` for words `w` of length `k` and `h ∈ C^d`.
//! Coordinates are ordered with the first letter most significant and `h`
//! last. The Gram matrix has `(w, w')` block `p_{i₁i₁'} ⋯ p_{i_k i_k'}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Eigenvalues below `-NOT_PSD_TOL` are a hard failure.
pub const NOT_PSD_TOL: f64 = 1e-8;
/// Eigenvalues in `[-NOT_PSD_TOL, -PSD_WARN_TOL)` only produce a warning.
pub const PSD_WARN_TOL: f64 = 1e-10;
/// Relative cutoff for quotient rank decisions.
pub const RANK_CUTOFF: f64 = 1e-10;
pub const DEFAULT_SIZE_CAP: usize = 4096;
/// Threshold for "blocks commute".
pub const COMMUTE_TOL: f64 = 1e-10;

/// `P = [p_ij]`, an `(N·d) × (N·d)` matrix with `d × d` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    letters: usize,
    dim: usize,
    matrix: CMat,
    provenance: Option<String>,
}

impl ChoiMatrix {
    pub fn new(letters: usize, dim: usize, matrix: CMat) -> Result<Self> {
        if letters == 0 || dim == 0 {
            return Err(Error::Dimension("N and d must be positive".into()));
        }
        if matrix.nrows() != letters * dim || matrix.ncols() != letters * dim {
            return Err(Error::Dimension(format!(
                "expected a {0}x{0} matrix, got {1}x{2}",
                letters * dim,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(ChoiMatrix {
            letters,
            dim,
            matrix,
            provenance: None,
        })
    }

    /// Scalar `P = I_N`: the unrestricted Fock space.
    pub fn identity(n: usize) -> Self {
        ChoiMatrix::new(n, 1, CMat::identity(n, n)).expect("square")
    }

    /// `E ⊗ I_N` on `2N` letters, with `E` the all-ones 2×2 matrix: letters
    /// `i` and `i + N` are paired.
    pub fn collapse(n: usize) -> Self {
        let e = CMat::from_element(2, 2, c(1.0, 0.0));
        ChoiMatrix::new(2 * n, 1, linalg::kron(&e, &CMat::identity(n, n))).expect("square")
    }

    /// `d = samples.len()`, and block `p_ij = diag_m(samples[m][(i, j)])`.
    pub fn from_diagonal_samples(samples: &[CMat]) -> Result<Self> {
        let d = samples.len();
        let n = samples.first().map_or(0, |s| s.nrows());
        if samples.iter().any(|s| s.nrows() != n || s.ncols() != n) {
            return Err(Error::Dimension("samples must share one square shape".into()));
        }
        let mut m = CMat::zeros(n * d, n * d);
        for (k, s) in samples.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    m[(i * d + k, j * d + k)] = s[(i, j)];
                }
            }
        }
        ChoiMatrix::new(n, d, m)
    }

    pub fn by_name(name: &str, n: usize) -> Option<Self> {
        match name {
            "cuntz" => Some(ChoiMatrix::identity(n)),
            "collapse" => Some(ChoiMatrix::collapse(n)),
            _ => None,
        }
    }

    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance = Some(note.into());
        self
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn block(&self, i: usize, j: usize) -> CMat {
        linalg::block(&self.matrix, i, j, self.dim)
    }

    /// `(I_N ⊗ w) P (I_N ⊗ w*)`: the same map in another basis of `H`.
    pub fn conjugate_base(&self, w: &CMat) -> Result<Self> {
        if w.nrows() != self.dim || w.ncols() != self.dim {
            return Err(Error::Dimension("base change must be d x d".into()));
        }
        let big = linalg::kron(&CMat::identity(self.letters, self.letters), w);
        ChoiMatrix::new(self.letters, self.dim, &big * &self.matrix * big.adjoint())
    }

    /// `(U ⊗ I_d) P (U* ⊗ I_d)`.
    pub fn transform_letters(&self, u: &CMat) -> Result<Self> {
        if u.nrows() != self.letters || u.ncols() != self.letters {
            return Err(Error::Dimension("letter transform must be N x N".into()));
        }
        let big = linalg::kron(u, &CMat::identity(self.dim, self.dim));
        ChoiMatrix::new(self.letters, self.dim, &big * &self.matrix * big.adjoint())
    }

    /// Largest pairwise commutator among all blocks.
    pub fn max_commutator(&self) -> f64 {
        let n = self.letters;
        let blocks: Vec<CMat> = (0..n * n).map(|t| self.block(t / n, t % n)).collect();
        let mut worst: f64 = 0.0;
        for a in 0..blocks.len() {
            for b in a + 1..blocks.len() {
                worst = worst.max(linalg::commutator_norm(&blocks[a], &blocks[b]));
            }
        }
        worst
    }

    pub fn blocks_commute(&self) -> bool {
        self.max_commutator() < COMMUTE_TOL
    }

    pub fn blocks_diagonal(&self) -> bool {
        let n = self.letters;
        (0..n).all(|i| (0..n).all(|j| linalg::is_diagonal(&self.block(i, j), COMMUTE_TOL)))
    }

    /// The `N × N` matrix `[p_ij(m, m)]`.
    pub fn diagonal_slice(&self, m: usize) -> CMat {
        let (n, d) = (self.letters, self.dim);
        CMat::from_fn(n, n, |i, j| self.matrix[(i * d + m, j * d + m)])
    }
}

#[derive(Serialize, Deserialize)]
struct RawChoi {
    #[serde(rename = "N")]
    letters: usize,
    d: usize,
    blocks: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
}

impl Serialize for ChoiMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .matrix
            .row_iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        RawChoi {
            letters: self.letters,
            d: self.dim,
            blocks,
            provenance: self.provenance.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChoiMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawChoi::deserialize(d)?;
        let size = raw.letters * raw.d;
        if raw.blocks.len() != size || raw.blocks.iter().any(|r| r.len() != size) {
            return Err(D::Error::custom(format!("blocks must be a {size}x{size} array")));
        }
        let m = CMat::from_fn(size, size, |i, j| {
            let [re, im] = raw.blocks[i][j];
            c(re, im)
        });
        let mut p = ChoiMatrix::new(raw.letters, raw.d, m).map_err(D::Error::custom)?;
        p.provenance = raw.provenance;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChoiReport {
    pub hermiticity_residual: f64,
    pub eigenvalues: Vec<f64>,
    pub min_eig: f64,
    /// Largest eigenvalue, which is `‖P‖` for PSD `P`.
    pub norm: f64,
    pub rank: usize,
    pub kernel_dim: usize,
    pub warning: Option<String>,
    #[serde(skip)]
    pub kernel: CMat,
}

pub fn validate_choi(p: &ChoiMatrix) -> Result<ChoiReport> {
    let m = p.matrix();
    let scale = linalg::max_abs(m).max(1.0);
    let herm = linalg::hermiticity_residual(m);
    if herm > NOT_PSD_TOL * scale {
        return Err(Error::NotHermitian { residual: herm });
    }
    let eig = linalg::hermitian_eigen(m);
    let min_eig = eig.values[0];
    if min_eig < -NOT_PSD_TOL {
        return Err(Error::NotPsd { min_eig });
    }
    let warning = (min_eig < -PSD_WARN_TOL).then(|| format!("min eigenvalue {min_eig:.3e} is slightly negative"));
    let norm = *eig.values.last().expect("nonempty");
    let cutoff = RANK_CUTOFF * norm.max(0.0);
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] <= cutoff).collect();
    let kernel = select_columns(&eig.vectors, &kept);
    Ok(ChoiReport {
        hermiticity_residual: herm,
        rank: eig.values.len() - kept.len(),
        kernel_dim: kept.len(),
        eigenvalues: eig.values,
        min_eig,
        norm,
        warning,
        kernel,
    })
}

fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    let mut out = CMat::zeros(m.nrows(), cols.len());
    for (t, &i) in cols.iter().enumerate() {
        out.set_column(t, &m.column(i));
    }
    out
}

fn level_size(p: &ChoiMatrix, k: usize, cap: usize) -> Result<usize> {
    let size = (p.letters() as u128)
        .checked_pow(k as u32)
        .map(|s| s * p.dim() as u128)
        .filter(|&s| s <= cap as u128)
        .ok_or(Error::SizeCap {
            size: usize::try_from((p.letters() as u128).saturating_pow(k as u32) * p.dim() as u128)
                .unwrap_or(usize::MAX),
            cap,
        })?;
    Ok(size as usize)
}

/// `G_k` from `G_{k-1}`: block `(i, j)` is `(I ⊗ p_ij) G_{k-1}`.
fn next_gram(p: &ChoiMatrix, prev: &CMat) -> CMat {
    let (n, d) = (p.letters(), p.dim());
    let s = prev.nrows();
    let mut g = CMat::zeros(n * s, n * s);
    for i in 0..n {
        for j in 0..n {
            let pij = p.block(i, j);
            for w in 0..s / d {
                let rows = prev.rows(w * d, d);
                let prod = &pij * rows;
                g.view_mut((i * s + w * d, j * s), (d, s)).copy_from(&prod);
            }
        }
    }
    g
}

/// The level-`k` Gram matrix.
pub fn level_gram(p: &ChoiMatrix, k: usize, cap: usize) -> Result<CMat> {
    level_size(p, k, cap)?;
    let mut g = CMat::identity(p.dim(), p.dim());
    for _ in 0..k {
        g = next_gram(p, &g);
    }
    Ok(g)
}

/// Level `k` with its kernel and quotient basis.
pub fn quotient_basis(p: &ChoiMatrix, k: usize) -> Result<FockLevel> {
    let mut f = TruncatedFock::build(p, k)?;
    Ok(f.levels.pop().expect("level k"))
}

/// One level of the truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockLevel {
    pub level: usize,
    pub gram: CMat,
    pub eigenvalues: Vec<f64>,
    pub hermiticity_residual: f64,
    pub cutoff: f64,
    /// Orthonormal basis of `ker G_k`.
    pub kernel: CMat,
    /// `V_k` with `V_k* G_k V_k = I`.
    pub quotient: CMat,
}

impl FockLevel {
    pub fn size(&self) -> usize {
        self.gram.nrows()
    }

    pub fn quotient_dim(&self) -> usize {
        self.quotient.ncols()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.ncols()
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Spanning coordinates to quotient coordinates: `x ↦ V_k* G_k x`.
    pub fn to_quotient(&self, x: &CMat) -> CMat {
        self.quotient.adjoint() * (&self.gram * x)
    }

    /// Quotient matrix of an operator given in spanning coordinates.
    pub fn compress(&self, op: &CMat) -> CMat {
        self.to_quotient(&(op * &self.quotient))
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedFock {
    pub choi: ChoiMatrix,
    pub choi_report: ChoiReport,
    pub levels: Vec<FockLevel>,
}

fn analyse_level(level: usize, gram: CMat, scale: f64) -> Result<FockLevel> {
    let herm = linalg::hermiticity_residual(&gram);
    let eig = linalg::hermitian_eigen(&gram);
    let min_eig = eig.values.first().copied().unwrap_or(0.0);
    let floor = NOT_PSD_TOL * scale.max(f64::MIN_POSITIVE);
    if herm > floor || min_eig < -floor {
        return Err(Error::GramNotPositive {
            level,
            min_eig,
            herm_residual: herm,
        });
    }
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = RANK_CUTOFF * top;
    let (mut kernel_cols, mut kept) = (Vec::new(), Vec::new());
    for (i, &v) in eig.values.iter().enumerate() {
        if v > cutoff && v > 0.0 {
            kept.push(i);
        } else {
            kernel_cols.push(i);
        }
    }
    let kernel = select_columns(&eig.vectors, &kernel_cols);
    let quotient = if level == 0 {
        // G_0 = I, so the standard basis is a valid choice.
        CMat::identity(gram.nrows(), gram.nrows())
    } else {
        let mut v = select_columns(&eig.vectors, &kept);
        for (t, &i) in kept.iter().enumerate() {
            v.column_mut(t).scale_mut(1.0 / eig.values[i].sqrt());
        }
        v
    };
    Ok(FockLevel {
        level,
        gram,
        eigenvalues: eig.values,
        hermiticity_residual: herm,
        cutoff,
        kernel,
        quotient,
    })
}

impl TruncatedFock {
    pub fn build(p: &ChoiMatrix, max_level: usize) -> Result<Self> {
        TruncatedFock::build_with_cap(p, max_level, DEFAULT_SIZE_CAP)
    }

    pub fn build_with_cap(p: &ChoiMatrix, max_level: usize, cap: usize) -> Result<Self> {
        let choi_report = validate_choi(p)?;
        level_size(p, max_level, cap)?;
        let norm = choi_report.norm.max(0.0);
        let mut levels = Vec::with_capacity(max_level + 1);
        let mut gram = CMat::identity(p.dim(), p.dim());
        for k in 0..=max_level {
            if k > 0 {
                gram = next_gram(p, &gram);
            }
            levels.push(analyse_level(k, gram.clone(), norm.powi(k as i32).max(1e-300))?);
        }
        Ok(TruncatedFock {
            choi: p.clone(),
            choi_report,
            levels,
        })
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn quotient_dims(&self) -> Vec<usize> {
        self.levels.iter().map(FockLevel::quotient_dim).collect()
    }

    pub fn kernel_dims(&self) -> Vec<usize> {
        self.levels.iter().map(FockLevel::kernel_dim).collect()
    }

    /// Columns of `G_{k+1}` hit by the prepend embedding of letter `i`.
    fn prepend_columns(&self, i: usize, k: usize) -> CMat {
        let s = self.levels[k].size();
        self.levels[k + 1].gram.columns(i * s, s).into_owned()
    }
}

/// Dense truncation of a single level-`k` operator `x ↦ (I ⊗ a) x`.
fn lift_base(a: &CMat, words: usize) -> CMat {
    linalg::kron(&CMat::identity(words, words), a)
}

/// `ops[i][k]` maps quotient level `k` to quotient level `k + 1`.
#[derive(Debug, Clone)]
pub struct CreationOps {
    pub ops: Vec<Vec<CMat>>,
    /// `max ‖G_{k+1} E_i v‖` over kernel vectors `v` of `G_k`.
    pub kernel_residual: f64,
}

impl CreationOps {
    pub fn letters(&self) -> usize {
        self.ops.len()
    }

    pub fn get(&self, i: usize, k: usize) -> &CMat {
        &self.ops[i][k]
    }

    pub fn levels(&self) -> usize {
        self.ops.first().map_or(0, Vec::len)
    }
}

/// `T_i^{(k)} = V_{k+1}* G_{k+1} E_i V_k` for `k < K`.
pub fn creation_matrices(fock: &TruncatedFock) -> CreationOps {
    let n = fock.choi.letters();
    let mut kernel_residual: f64 = 0.0;
    let ops = (0..n)
        .map(|i| {
            (0..fock.max_level())
                .map(|k| {
                    let cols = fock.prepend_columns(i, k);
                    let lower = &fock.levels[k];
                    if lower.kernel_dim() > 0 {
                        let hit = &cols * &lower.kernel;
                        for col in hit.column_iter() {
                            kernel_residual = kernel_residual.max(col.norm());
                        }
                    }
                    fock.levels[k + 1].quotient.adjoint() * (cols * &lower.quotient)
                })
                .collect()
        })
        .collect();
    CreationOps { ops, kernel_residual }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelReport {
    pub level: usize,
    pub dim: usize,
    /// Predicted dimension, when a closed form applies.
    pub expected_dim: Option<usize>,
    /// `max ‖G_k x‖ / ‖x‖` over tensors with one factor in `ker P`.
    pub spanning_residual: Option<f64>,
    /// Rank of those tensors, which should equal `dim`.
    pub spanning_rank: Option<usize>,
}

impl KernelReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.expected_dim.map_or(true, |e| e == self.dim)
            && self.spanning_residual.map_or(true, |r| r < tol)
            && self.spanning_rank.map_or(true, |r| r == self.dim)
    }
}

/// Tensors `e_{a_1} ⊗ … ⊗ v ⊗ … ⊗ e_{a_k}` with `v ∈ ker P` (scalar case).
fn kernel_tensors(n: usize, k: usize, ker: &CMat) -> Vec<CVec> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    for pos in 0..k {
        let left = n.pow(pos as u32);
        let right = n.pow((k - pos - 1) as u32);
        for v in ker.column_iter() {
            for a in 0..left {
                for b in 0..right {
                    let mut x = CVec::zeros(left * n * right);
                    for (t, z) in v.iter().enumerate() {
                        x[(a * n + t) * right + b] = *z;
                    }
                    out.push(x);
                }
            }
        }
    }
    out
}

pub fn kernel_check(fock: &TruncatedFock, k: usize) -> KernelReport {
    let p = &fock.choi;
    let level = &fock.levels[k];
    let (n, d) = (p.letters(), p.dim());
    let words = n.pow(k as u32);
    let mut report = KernelReport {
        level: k,
        dim: level.kernel_dim(),
        expected_dim: None,
        spanning_residual: None,
        spanning_rank: None,
    };
    if d == 1 {
        let r = fock.choi_report.rank;
        report.expected_dim = Some(words - r.pow(k as u32));
        let tensors = kernel_tensors(n, k, &fock.choi_report.kernel);
        if tensors.is_empty() {
            report.spanning_residual = Some(0.0);
            report.spanning_rank = Some(0);
        } else {
            let residual = tensors
                .iter()
                .map(|x| (&level.gram * x).norm() / x.norm())
                .fold(0.0, f64::max);
            let span = CMat::from_columns(&tensors);
            report.spanning_residual = Some(residual);
            report.spanning_rank = Some(linalg::range_basis(&span, 1e-10).ncols());
        }
    } else if p.blocks_diagonal() {
        // Diagonal blocks split the level into d independent scalar problems.
        let rank: usize = (0..d)
            .map(|m| {
                let slice = p.diagonal_slice(m);
                let eig = linalg::hermitian_eigen(&slice);
                let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
                let r = eig.values.iter().filter(|&&v| v > RANK_CUTOFF * top && v > 0.0).count();
                r.pow(k as u32)
            })
            .sum();
        report.expected_dim = Some(words * d - rank);
    }
    report
}

/// Builds the truncation and checks the kernel at level `k`.
pub fn level_kernel(p: &ChoiMatrix, k: usize) -> Result<KernelReport> {
    Ok(kernel_check(&TruncatedFock::build(p, k)?, k))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NormLaw {
    /// `norms[i][k] = ‖T_i^{(k)*} T_i^{(k)}‖`.
    pub norms: Vec<Vec<f64>>,
    /// `‖p_ii‖`.
    pub expected: Vec<f64>,
    /// `max_i |max_k norms[i][k] - ‖p_ii‖|`.
    pub residual: f64,
    /// Largest gap between level 0 and the maximum over levels.
    pub level_zero_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TStarTReport {
    /// `max_{ij} ‖T_i*T_j|_{level 0} - p_ij‖`.
    pub vacuum_residual: f64,
    /// Per level `k < K`: `max_{ij} ‖T_i^{(k)*}T_j^{(k)} - [w ⊗ h ↦ w ⊗ p_ij h]‖`.
    pub level_residuals: Vec<f64>,
    pub blocks_commute: bool,
    pub norm_law: Option<NormLaw>,
    /// `‖G_k‖` for `k ≤ K`.
    pub gram_norms: Vec<f64>,
    /// `max_k (‖G_k‖ - ‖P‖^k) / max(1, ‖P‖^k)`, at most ~0 when the bound holds.
    pub norm_bound_excess: f64,
    /// `max_k |‖P‖^k - ⟨u^{⊗k}, G_k u^{⊗k}⟩|` for the top eigenvector `u` (scalar case).
    pub attainment_gap: Option<f64>,
}

impl TStarTReport {
    pub fn max_level_residual(&self) -> f64 {
        self.level_residuals.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn tstar_t_check(fock: &TruncatedFock, ops: &CreationOps) -> TStarTReport {
    let p = &fock.choi;
    let n = p.letters();
    let top = ops.levels();
    let mut vacuum: f64 = 0.0;
    let mut level_residuals = vec![0.0f64; top];
    for i in 0..n {
        for j in 0..n {
            let pij = p.block(i, j);
            for (k, res) in level_residuals.iter_mut().enumerate() {
                let tt = ops.get(i, k).adjoint() * ops.get(j, k);
                let level = &fock.levels[k];
                let expect = level.compress(&lift_base(&pij, level.size() / p.dim()));
                let r = linalg::op_norm(&(&tt - &expect));
                *res = res.max(r);
                if k == 0 {
                    vacuum = vacuum.max(linalg::op_norm(&(tt - &pij)));
                }
            }
        }
    }

    let blocks_commute = p.blocks_commute();
    let norm_law = (blocks_commute && top > 0).then(|| {
        let norms: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..top)
                    .map(|k| linalg::op_norm(&(ops.get(i, k).adjoint() * ops.get(i, k))))
                    .collect()
            })
            .collect();
        let expected: Vec<f64> = (0..n).map(|i| linalg::op_norm(&p.block(i, i))).collect();
        let mut residual: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for i in 0..n {
            let best = norms[i].iter().cloned().fold(0.0, f64::max);
            residual = residual.max((best - expected[i]).abs());
            gap = gap.max(best - norms[i][0]);
        }
        NormLaw {
            norms,
            expected,
            residual,
            level_zero_gap: gap,
        }
    });

    let pn = fock.choi_report.norm.max(0.0);
    let gram_norms: Vec<f64> = fock.levels.iter().map(FockLevel::norm).collect();
    let norm_bound_excess = gram_norms
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let bound = pn.powi(k as i32);
            (g - bound) / bound.max(1.0)
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let attainment_gap = (p.dim() == 1).then(|| {
        let eig = linalg::hermitian_eigen(p.matrix());
        let u = eig.vectors.column(n - 1).into_owned();
        let mut power = CMat::from_element(1, 1, c(1.0, 0.0));
        let mut gap: f64 = 0.0;
        for (k, level) in fock.levels.iter().enumerate() {
            if k > 0 {
                power = power.kronecker(&u);
            }
            let rq = (power.adjoint() * &level.gram * &power)[(0, 0)].re;
            gap = gap.max((pn.powi(k as i32) - rq).abs());
        }
        gap
    });

    TStarTReport {
        vacuum_residual: vacuum,
        level_residuals,
        blocks_commute,
        norm_law,
        gram_norms,
        norm_bound_excess,
        attainment_gap,
    }
}

/// Offsets of each level in the direct sum of quotient levels.
fn offsets(fock: &TruncatedFock) -> Vec<usize> {
    let mut acc = vec![0];
    for q in fock.quotient_dims() {
        acc.push(acc.last().unwrap() + q);
    }
    acc
}

/// `T_i` on `⊕_{k≤K}` quotient levels; the top level maps to zero.
pub fn assembled_creation(fock: &TruncatedFock, ops: &CreationOps, i: usize) -> CMat {
    let off = offsets(fock);
    let total = *off.last().unwrap();
    let mut t = CMat::zeros(total, total);
    for k in 0..ops.levels() {
        let m = ops.get(i, k);
        t.view_mut((off[k + 1], off[k]), m.shape()).copy_from(m);
    }
    t
}

fn level_projection(off: &[usize], k: usize) -> CMat {
    let total = *off.last().unwrap();
    let mut p = CMat::zeros(total, total);
    for r in off[k]..off[k + 1] {
        p[(r, r)] = c(1.0, 0.0);
    }
    p
}

/// Max residual over: `P_k P_l = δ_kl P_k`, `Σ P_k = I`, `P_0 T_i = 0`,
/// `T_i P_k = P_{k+1} T_i` for `k < K`.
pub fn fourier_projections_check(fock: &TruncatedFock, ops: &CreationOps) -> f64 {
    let off = offsets(fock);
    let total = *off.last().unwrap();
    let levels = fock.levels.len();
    let projections: Vec<CMat> = (0..levels).map(|k| level_projection(&off, k)).collect();
    let mut worst: f64 = 0.0;
    let mut sum = CMat::zeros(total, total);
    for k in 0..levels {
        sum += &projections[k];
        for l in 0..levels {
            let prod = &projections[k] * &projections[l];
            let expect = if k == l { projections[k].clone() } else { CMat::zeros(total, total) };
            worst = worst.max(linalg::max_abs(&(prod - expect)));
        }
    }
    worst = worst.max(linalg::max_abs(&(sum - CMat::identity(total, total))));
    for i in 0..fock.choi.letters() {
        let t = assembled_creation(fock, ops, i);
        worst = worst.max(linalg::max_abs(&(&projections[0] * &t)));
        for k in 0..levels - 1 {
            let lhs = &t * &projections[k];
            let rhs = &projections[k + 1] * &t;
            worst = worst.max(linalg::max_abs(&(lhs - rhs)));
        }
    }
    worst
}

/// `‖Σ_i T_i T_i* - I‖` on quotient level `k`, for `1 ≤ k ≤ K - 1`.
///
/// Only these levels are free of truncation effects on both sides.
pub fn row_coisometry_residuals(fock: &TruncatedFock, ops: &CreationOps) -> Vec<f64> {
    (1..fock.max_level())
        .map(|k| {
            let q = fock.levels[k].quotient_dim();
            let mut sum = CMat::zeros(q, q);
            for i in 0..ops.letters() {
                let t = ops.get(i, k - 1);
                sum += t * t.adjoint();
            }
            linalg::op_norm(&(sum - CMat::identity(q, q)))
        })
        .collect()
}

/// `max_{ij} ‖T_i*T_j - δ_ij I‖` over all levels below the top.
pub fn cuntz_toeplitz_residual(ops: &CreationOps) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..ops.letters() {
        for j in 0..ops.letters() {
            for k in 0..ops.levels() {
                let tt = ops.get(i, k).adjoint() * ops.get(j, k);
                let expect = if i == j {
                    CMat::identity(tt.nrows(), tt.ncols())
                } else {
                    CMat::zeros(tt.nrows(), tt.ncols())
                };
                worst = worst.max(linalg::op_norm(&(tt - expect)));
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BasisChangeReport {
    /// `max_k ‖W_k* W_k - I‖` for the level unitaries between quotients.
    pub unitarity_residual: f64,
    /// `max_{l,k} ‖T'_l W_k - W_{k+1} Σ_j conj(u_lj) T_j‖`.
    pub intertwining_residual: f64,
    pub quotient_dims: Vec<usize>,
}

/// Compares the creation operators of `P` and `(U ⊗ I) P (U* ⊗ I)`.
pub fn basis_change_equivalence(p: &ChoiMatrix, u: &CMat, max_level: usize) -> Result<BasisChangeReport> {
    let n = p.letters();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::Dimension(format!("letter transform must be {n}x{n}")));
    }
    let dev = linalg::op_norm(&(u.adjoint() * u - CMat::identity(n, n)));
    if dev > 1e-10 {
        return Err(Error::NotUnitary(dev));
    }
    let primed = p.transform_letters(u)?;
    let fock = TruncatedFock::build(p, max_level)?;
    let fock_p = TruncatedFock::build(&primed, max_level)?;
    let ops = creation_matrices(&fock);
    let ops_p = creation_matrices(&fock_p);

    let id_d = CMat::identity(p.dim(), p.dim());
    let mut upow = CMat::identity(1, 1);
    let mut w = Vec::with_capacity(max_level + 1);
    for k in 0..=max_level {
        if k > 0 {
            upow = linalg::kron(&upow, u);
        }
        let big = linalg::kron(&upow, &id_d);
        w.push(fock_p.levels[k].to_quotient(&(big * &fock.levels[k].quotient)));
    }
    let unitarity_residual = w
        .iter()
        .map(|m| linalg::op_norm(&(m.adjoint() * m - CMat::identity(m.ncols(), m.ncols()))))
        .fold(0.0, f64::max);
    let mut intertwining: f64 = 0.0;
    for l in 0..n {
        for k in 0..max_level {
            let mut comb = CMat::zeros(fock.levels[k + 1].quotient_dim(), fock.levels[k].quotient_dim());
            for j in 0..n {
                comb += ops.get(j, k) * u[(l, j)].conj();
            }
            let lhs = ops_p.get(l, k) * &w[k];
            let rhs = &w[k + 1] * comb;
            intertwining = intertwining.max(linalg::op_norm(&(lhs - rhs)));
        }
    }
    Ok(BasisChangeReport {
        unitarity_residual,
        intertwining_residual: intertwining,
        quotient_dims: fock.quotient_dims(),
    })
}

/// Serializable summary of a truncated Fock build.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FockReport {
    pub letters: usize,
    pub dim: usize,
    pub max_level: usize,
    pub choi_rank: usize,
    pub choi_norm: f64,
    pub warning: Option<String>,
    pub quotient_dims: Vec<usize>,
    pub kernel_dims: Vec<usize>,
    pub gram_min_eigs: Vec<f64>,
    pub kernel: Vec<KernelReport>,
    pub kernel_residual: f64,
    pub tstar_t: TStarTReport,
    pub projection_residual: f64,
    /// Present only for `P = I_N`.
    pub cuntz_toeplitz_residual: Option<f64>,
    pub row_coisometry_residuals: Option<Vec<f64>>,
    /// Which identities are exact on the truncation and which are cut off at level K.
    pub truncation: Vec<String>,
}

pub fn fock_report(p: &ChoiMatrix, max_level: usize) -> Result<FockReport> {
    let fock = TruncatedFock::build(p, max_level)?;
    let ops = creation_matrices(&fock);
    let is_identity = p.dim() == 1 && linalg::max_abs(&(p.matrix() - CMat::identity(p.letters(), p.letters()))) == 0.0;
    Ok(FockReport {
        letters: p.letters(),
        dim: p.dim(),
        max_level,
        choi_rank: fock.choi_report.rank,
        choi_norm: fock.choi_report.norm,
        warning: fock.choi_report.warning.clone(),
        quotient_dims: fock.quotient_dims(),
        kernel_dims: fock.kernel_dims(),
        gram_min_eigs: fock.levels.iter().map(FockLevel::min_eig).collect(),
        kernel: (0..=max_level).map(|k| kernel_check(&fock, k)).collect(),
        kernel_residual: ops.kernel_residual,
        tstar_t: tstar_t_check(&fock, &ops),
        projection_residual: fourier_projections_check(&fock, &ops),
        cuntz_toeplitz_residual: is_identity.then(|| cuntz_toeplitz_residual(&ops)),
        row_coisometry_residuals: is_identity.then(|| row_coisometry_residuals(&fock, &ops)),
        truncation: vec![
            "exact: T_i*T_j on levels 0..K-1".into(),
            "exact: level projections and T_i P_k = P_{k+1} T_i for k < K".into(),
            "exact: sum_i T_i T_i* = I - P_0 on levels 1..K-1".into(),
            "limited: T_i on level K and T_i* on level K+1 are outside the window".into(),
        ],
    })
}
