//! The acceptance suite: eleven end-to-end checks with fixed seeds and
//! tolerances. Used by the `acceptance` test target and the CLI.

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;

use crate::anchor::{coinvariance_residual, compute_anchor, cyclicity_check, pullback_depth};
use crate::builtin;
use crate::error::Result;
use crate::filterbank::{relation_report, relation_report_with, FilterBank, RelationOptions};
use crate::fock::{
    creation_matrices, cuntz_toeplitz_residual, kernel_check, row_coisometry_residuals, tstar_t_check, ChoiMatrix,
    TruncatedFock,
};
use crate::laurent::LaurentPoly;
use crate::linalg::{self, c, CMat};
use crate::polyphase::{
    dual_loop, loop_from_filters, loop_from_polys, loop_pair_residual, loop_unitarity_residual,
    modulation_matrix_check, LoopMatrix,
};
use crate::subdivision::{fourier_product, pyramid_roundtrip, SignalWindow};
use crate::wavelet_fock::{sampled_choi, wavelet_creation_check, wavelet_fock};

/// `seed` shifts every random stream; `tolerance`, when set, replaces each
/// criterion's residual threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub tolerance: Option<f64>,
}

impl AcceptanceConfig {
    pub fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    pub fn rng(&self, stream: u64) -> rand_chacha::ChaCha8Rng {
        builtin::rng(stream.wrapping_add(self.seed.wrapping_mul(1_000_003)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn finish(id: usize, name: &'static str, outcome: Result<(bool, String)>) -> Criterion {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Criterion {
        id,
        name,
        passed,
        detail,
    }
}

pub fn haar_loop(cfg: &AcceptanceConfig) -> Criterion {
    finish(1, "haar loop", (|| {
        let bank = builtin::haar();
        let start = Instant::now();
        let (a, _) = loop_from_filters(&bank);
        let elapsed = start.elapsed();
        let s = FRAC_1_SQRT_2;
        let expect = CMat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        let err = a.max_coeff_diff(&LoopMatrix::constant(&expect));
        // Filters themselves must be (1 ± z)/√2.
        let m0 = LaurentPoly::from_real(0, &[s, s]);
        let m1 = LaurentPoly::from_real(0, &[s, -s]);
        let ferr = bank.filters()[0].max_coeff_diff(&m0).max(bank.filters()[1].max_coeff_diff(&m1));
        let err = err.max(ferr);
        Ok((
            err < cfg.tol(1e-12) && elapsed < Duration::from_millis(1),
            format!("entry error {err:.2e}, runtime {elapsed:?}"),
        ))
    })())
}

pub fn stretched_haar(cfg: &AcceptanceConfig) -> Criterion {
    finish(2, "stretched haar", (|| {
        let m0 = LaurentPoly::from_real(0, &[1.0, 0.0, 1.0]);
        let energy = (&m0.adjoint() * &m0).decimate(4);
        let exact_two = energy == LaurentPoly::constant(c(2.0, 0.0));

        let bank = builtin::stretched_haar();
        let mut filters = bank.filters().to_vec();
        let same_m0 = filters[0] == m0;
        filters[0] = m0;
        let a = loop_from_polys(&filters, 4);
        let row0: Vec<LaurentPoly> = (0..4).map(|j| a.entry(0, j).clone()).collect();
        let row_ok = row0
            .iter()
            .zip([1.0, 0.0, 1.0, 0.0])
            .all(|(p, v)| *p == LaurentPoly::constant(c(v, 0.0)).pruned(0.0));

        let aa = a.mul(&a.adjoint());
        let gram_err = aa.max_coeff_diff(&LoopMatrix::identity(4).scale(c(2.0, 0.0)));
        let dual = dual_loop(&a, 64)?;
        let dual_err = match dual.exact() {
            Some(d) => d.max_coeff_diff(&a.scale(c(0.5, 0.0))),
            None => f64::INFINITY,
        };
        let passed = exact_two && same_m0 && row_ok && gram_err < cfg.tol(1e-12) && dual_err < cfg.tol(1e-12);
        Ok((
            passed,
            format!(
                "R(|m0|^2) = 2 exactly: {exact_two}, row 0 = [1,0,1,0]: {row_ok}, AA* - 2I: {gram_err:.2e}, dual - A/2: {dual_err:.2e}"
            ),
        ))
    })())
}

/// Orthogonal conditions: (operator, modulation, loop); biorthogonal likewise.
fn equivalent_conditions(bank: &FilterBank, tol: f64) -> ([bool; 3], [bool; 3]) {
    let opts = RelationOptions {
        tolerance: tol,
        ..RelationOptions::default()
    };
    let report = relation_report_with(bank, 0, &opts);
    let modulation = modulation_matrix_check(bank, 64);
    let (a, dual) = loop_from_filters(bank);
    let dual = dual.unwrap_or_else(|| a.clone());
    (
        [
            report.verdicts.cuntz,
            modulation.unitary < tol,
            loop_unitarity_residual(&a, 64) < tol,
        ],
        [
            report.verdicts.biorthogonal,
            modulation.pair < tol,
            loop_pair_residual(&a, &dual, 64) < tol,
        ],
    )
}

pub fn equivalence_suite(cfg: &AcceptanceConfig) -> Criterion {
    finish(3, "equivalence suite", (|| {
        let start = Instant::now();
        let tol = cfg.tol(1e-9);
        let mut rng = cfg.rng(3);
        let mut agree = 0;
        let mut cuntz_true = 0;
        let mut biorth_true = 0;
        let total = 100;
        for t in 0..total {
            let n = 2 + t % 2;
            let degree = 1 + rng.gen_range(0..2);
            let bank = if t < 50 {
                builtin::random_orthogonal_bank(n, degree, &mut rng)
            } else {
                builtin::random_biorthogonal_bank(n, degree, &mut rng)
            };
            let (orth, bio) = equivalent_conditions(&bank, tol);
            let same = |v: [bool; 3]| v.iter().all(|&b| b == v[0]);
            if same(orth) && same(bio) {
                agree += 1;
            }
            cuntz_true += usize::from(orth[0]);
            biorth_true += usize::from(bio[0]);
        }
        let elapsed = start.elapsed();
        Ok((
            agree == total && elapsed < Duration::from_secs(10),
            format!(
                "{agree}/{total} agree ({cuntz_true} orthogonal, {biorth_true} biorthogonal), runtime {:.2}s",
                elapsed.as_secs_f64()
            ),
        ))
    })())
}

/// Built-in and seeded banks; the caller filters by verdict.
pub fn bank_corpus(cfg: &AcceptanceConfig) -> Vec<(String, FilterBank)> {
    let mut out: Vec<(String, FilterBank)> = builtin::BANK_NAMES
        .iter()
        .map(|&name| (name.to_string(), builtin::by_name(name).expect("listed")))
        .collect();
    let mut rng = cfg.rng(4);
    for n in 2..=3 {
        out.push((format!("random-orthogonal-{n}"), builtin::random_orthogonal_bank(n, 2, &mut rng)));
        out.push((format!("random-biorthogonal-{n}"), builtin::random_biorthogonal_bank(n, 2, &mut rng)));
    }
    out
}

pub fn perfect_reconstruction(cfg: &AcceptanceConfig) -> Criterion {
    finish(4, "perfect reconstruction", (|| {
        let mut rng = cfg.rng(5);
        let mut worst: f64 = 0.0;
        let mut banks = 0;
        for (_, bank) in bank_corpus(cfg) {
            if !relation_report(&bank, 0).verdicts.biorthogonal {
                continue;
            }
            banks += 1;
            for len in [1usize, 17, 40, 64] {
                let samples: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x = SignalWindow::from_real(rng.gen_range(-8..8), &samples);
                for depth in 1..=3 {
                    let (_, _, err) = pyramid_roundtrip(&bank, &x, depth)?;
                    worst = worst.max(err);
                }
            }
        }
        Ok((worst < cfg.tol(1e-10) && banks > 0, format!("{banks} banks, max error {worst:.2e}")))
    })())
}

pub fn haar_anchor(cfg: &AcceptanceConfig) -> Criterion {
    finish(5, "haar anchor", (|| {
        let bank = builtin::haar();
        let k = compute_anchor(&bank)?;
        let spans = k.dim() == 2 && k.contains(&LaurentPoly::mode(0)) && k.contains(&LaurentPoly::mode(-1));
        let co = coinvariance_residual(&bank, &k);
        let cyc = cyclicity_check(&bank, &k, 8)?;
        let mut max_depth = 0;
        for n in -32..=32 {
            max_depth = max_depth.max(pullback_depth(&bank, &k, n, 64)?);
        }
        Ok((
            spans && co < cfg.tol(1e-10) && cyc.max_residual() < cfg.tol(1e-9) && max_depth <= 64,
            format!(
                "dim {}, co-invariance {co:.2e}, cyclicity {:.2e}/{:.2e}, max depth {max_depth}",
                k.dim(),
                cyc.primary_residual,
                cyc.dual_residual
            ),
        ))
    })())
}

pub fn unrestricted_fock(cfg: &AcceptanceConfig) -> Criterion {
    finish(6, "unrestricted fock", (|| {
        let f = TruncatedFock::build(&ChoiMatrix::identity(2), 3)?;
        let ops = creation_matrices(&f);
        let dims = f.quotient_dims();
        let tt = cuntz_toeplitz_residual(&ops);
        let rows = row_coisometry_residuals(&f, &ops);
        let row = rows.iter().cloned().fold(0.0, f64::max);
        Ok((
            dims == [1, 2, 4, 8] && tt < cfg.tol(1e-12) && rows.len() == 2 && row < cfg.tol(1e-12),
            format!("q = {dims:?}, T*T residual {tt:.2e}, row residual on levels 1..2 {row:.2e}"),
        ))
    })())
}

pub fn collapse_fock(cfg: &AcceptanceConfig) -> Criterion {
    finish(7, "collapse fock", (|| {
        let f = TruncatedFock::build(&ChoiMatrix::collapse(2), 3)?;
        let ops = creation_matrices(&f);
        let dims = f.quotient_dims();
        let mut pair: f64 = 0.0;
        for i in 0..2 {
            for k in 0..3 {
                pair = pair.max(linalg::op_norm(&(ops.get(i, k) - ops.get(i + 2, k))));
            }
        }
        Ok((
            dims == [1, 2, 4, 8] && pair < cfg.tol(1e-10),
            format!("q = {dims:?}, max ‖T_i - T_(i+2)‖ {pair:.2e}"),
        ))
    })())
}

pub fn kernel_law(cfg: &AcceptanceConfig) -> Criterion {
    finish(8, "scalar kernel law", (|| {
        let mut rng = cfg.rng(8);
        let mut failures = 0;
        let mut worst_span: f64 = 0.0;
        for t in 0..20 {
            let n = 2 + t % 3;
            let r = 1 + rng.gen_range(0..n);
            let p = ChoiMatrix::new(n, 1, builtin::random_psd_conditioned(n, r, &mut rng))?;
            let f = TruncatedFock::build(&p, 3)?;
            for k in 0..=3 {
                let rep = kernel_check(&f, k);
                let expected = n.pow(k as u32) - r.pow(k as u32);
                worst_span = worst_span.max(rep.spanning_residual.unwrap_or(f64::INFINITY));
                if rep.dim != expected || !rep.holds(cfg.tol(1e-10)) {
                    failures += 1;
                }
            }
        }
        Ok((
            failures == 0,
            format!("80 (P, k) cases, {failures} failures, spanning residual {worst_span:.2e}"),
        ))
    })())
}

/// Commuting-block Choi matrix: diagonal samples conjugated by a unitary.
pub fn random_commuting_choi<R: Rng>(n: usize, d: usize, rng: &mut R) -> Result<ChoiMatrix> {
    let samples: Vec<CMat> = (0..d)
        .map(|_| {
            let r = 1 + rng.gen_range(0..n);
            builtin::random_psd_conditioned(n, r, rng)
        })
        .collect();
    let w = builtin::random_unitary(d, rng);
    ChoiMatrix::from_diagonal_samples(&samples)?.conjugate_base(&w)
}

pub fn norm_laws(cfg: &AcceptanceConfig) -> Criterion {
    finish(9, "norm laws", (|| {
        let mut rng = cfg.rng(9);
        let mut excess = f64::NEG_INFINITY;
        let mut gap: f64 = 0.0;
        for t in 0..10 {
            let n = 2 + t % 2;
            let p = ChoiMatrix::new(n, 1, builtin::random_psd(n, 1 + t % n, &mut rng))?;
            let f = TruncatedFock::build(&p, 3)?;
            let rep = tstar_t_check(&f, &creation_matrices(&f));
            excess = excess.max(rep.norm_bound_excess);
            gap = gap.max(rep.attainment_gap.unwrap_or(f64::INFINITY) / rep.gram_norms[0].max(1.0));
        }

        let mut law: f64 = 0.0;
        let mut level0: f64 = 0.0;
        let mut commuting = vec![ChoiMatrix::new(2, 1, CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(4.0, 0.0), c(1.0, 0.0)])))?];
        for t in 0..5 {
            commuting.push(random_commuting_choi(2, 2 + t % 2, &mut rng)?);
        }
        for p in &commuting {
            let f = TruncatedFock::build(p, 3)?;
            let rep = tstar_t_check(&f, &creation_matrices(&f));
            let nl = rep.norm_law.as_ref().ok_or_else(|| crate::Error::Dimension("blocks do not commute".into()))?;
            law = law.max(nl.residual);
            level0 = level0.max(nl.level_zero_gap);
            excess = excess.max(rep.norm_bound_excess);
        }
        Ok((
            excess <= cfg.tol(1e-9) && gap < cfg.tol(1e-9) && law < cfg.tol(1e-9) && level0 < cfg.tol(1e-9),
            format!(
                "‖G_k‖ - ‖P‖^k ≤ {excess:.2e}, attainment gap {gap:.2e}, commuting norm law {law:.2e}, level-0 gap {level0:.2e}"
            ),
        ))
    })())
}

pub fn wavelet_creation(cfg: &AcceptanceConfig) -> Criterion {
    finish(10, "wavelet creation operators", (|| {
        let haar = wavelet_creation_check(&builtin::haar(), 8, 2)?;
        let bank = builtin::stretched_haar();
        let sh = wavelet_creation_check(&bank, 8, 2)?;
        let (_, ops) = wavelet_fock(&sampled_choi(&bank, 8)?, 2)?;
        let id = CMat::identity(8, 8);
        let mut special: f64 = 0.0;
        for i in 0..4 {
            let t = ops.get(i, 0);
            let td = ops.get(4 + i, 0);
            special = special.max(linalg::op_norm(&(t.adjoint() * t - id.scale(2.0))));
            special = special.max(linalg::op_norm(&(td.adjoint() * td - id.scale(0.5))));
        }
        let items = haar.max_item_residual().max(sh.max_item_residual());
        Ok((
            items < cfg.tol(1e-9) && special < cfg.tol(1e-9),
            format!(
                "haar items {:.2e}, stretched items {:.2e}, T*T = 2I and dual T*T = I/2 residual {special:.2e}",
                haar.max_item_residual(),
                sh.max_item_residual()
            ),
        ))
    })())
}

pub fn haar_product_formula(cfg: &AcceptanceConfig) -> Criterion {
    finish(11, "haar product formula", (|| {
        let m0 = builtin::haar().filters()[0].clone();
        let mut worst: f64 = 0.0;
        for k in 1..=60 {
            let t = 0.1 * k as f64;
            let got = fourier_product(&m0, 2, t, 40)?.norm();
            let expect = ((t / 2.0).sin() / (t / 2.0)).abs();
            worst = worst.max((got - expect).abs());
        }
        Ok((worst < cfg.tol(1e-7), format!("max error {worst:.2e} over 60 points")))
    })())
}

pub fn run_all() -> Vec<Criterion> {
    run_with(&AcceptanceConfig::default())
}

pub fn run_with(cfg: &AcceptanceConfig) -> Vec<Criterion> {
    vec![
        haar_loop(cfg),
        stretched_haar(cfg),
        equivalence_suite(cfg),
        perfect_reconstruction(cfg),
        haar_anchor(cfg),
        unrestricted_fock(cfg),
        collapse_fock(cfg),
        kernel_law(cfg),
        norm_laws(cfg),
        wavelet_creation(cfg),
        haar_product_formula(cfg),
    ]
}
