use wavefock::acceptance::random_commuting_choi;
use wavefock::builtin;
use wavefock::fock::{
    basis_change_equivalence, creation_matrices, cuntz_toeplitz_residual, fock_report, fourier_projections_check,
    level_kernel, quotient_basis, row_coisometry_residuals, tstar_t_check, ChoiMatrix, TruncatedFock,
};
use wavefock::linalg::{c, CMat};
use wavefock::wavelet_fock::wavelet_creation_check;

#[test]
fn kernel_preserved_for_seeded_psd() {
    let mut rng = builtin::rng(30);
    for t in 0..20 {
        let n = 2 + t % 2;
        let d = 1 + t % 2;
        let p = if d == 1 {
            ChoiMatrix::new(n, 1, builtin::random_psd(n, 1 + t % n, &mut rng)).unwrap()
        } else {
            random_commuting_choi(n, d, &mut rng).unwrap()
        };
        let f = TruncatedFock::build(&p, 3).unwrap();
        let ops = creation_matrices(&f);
        assert!(ops.kernel_residual < 1e-10, "case {t}: {}", ops.kernel_residual);
        assert!(fourier_projections_check(&f, &ops) < 1e-12);
    }
}

#[test]
fn scalar_rank_gives_quotient_square() {
    let mut rng = builtin::rng(31);
    for r in 1..=3 {
        let p = ChoiMatrix::new(3, 1, builtin::random_psd_conditioned(3, r, &mut rng)).unwrap();
        let level = quotient_basis(&p, 2).unwrap();
        assert_eq!(level.quotient_dim(), r * r);
        let v = &level.quotient;
        let eye = v.adjoint() * &level.gram * v;
        assert!(wavefock::linalg::max_abs(&(eye - CMat::identity(r * r, r * r))) < 1e-10);
        assert_eq!(level_kernel(&p, 2).unwrap().dim, 9 - r * r);
    }
}

#[test]
fn identity_kernel_is_trivial() {
    for k in 0..4 {
        let rep = level_kernel(&ChoiMatrix::identity(3), k).unwrap();
        assert_eq!(rep.dim, 0);
        assert!(rep.holds(1e-10));
    }
}

#[test]
fn commuting_blocks_satisfy_tstar_t() {
    let mut rng = builtin::rng(32);
    for _ in 0..5 {
        let p = random_commuting_choi(2, 3, &mut rng).unwrap();
        assert!(p.blocks_commute());
        let f = TruncatedFock::build(&p, 3).unwrap();
        let rep = tstar_t_check(&f, &creation_matrices(&f));
        assert!(rep.vacuum_residual < 1e-10);
        assert!(rep.max_level_residual() < 1e-9);
        let law = rep.norm_law.unwrap();
        assert!(law.residual < 1e-9 && law.level_zero_gap < 1e-9);
        assert!(rep.norm_bound_excess < 1e-9);
    }
}

#[test]
fn diagonal_blocks_kernel_count() {
    let mut rng = builtin::rng(33);
    let samples: Vec<CMat> = (0..3).map(|m| builtin::random_psd_conditioned(2, 1 + m % 2, &mut rng)).collect();
    let p = ChoiMatrix::from_diagonal_samples(&samples).unwrap();
    for k in 0..=3 {
        let rep = level_kernel(&p, k).unwrap();
        assert_eq!(rep.expected_dim, Some(rep.dim));
    }
}

#[test]
fn letter_change_for_seeded_p() {
    let mut rng = builtin::rng(34);
    for t in 0..20 {
        let n = 2 + t % 2;
        let p = ChoiMatrix::new(n, 1, builtin::random_psd(n, 1 + t % n, &mut rng)).unwrap();
        let u = builtin::random_unitary(n, &mut rng);
        let rep = basis_change_equivalence(&p, &u, 2).unwrap();
        assert!(rep.intertwining_residual < 1e-9, "case {t}: {rep:?}");
        assert!(rep.unitarity_residual < 1e-9);
    }
    let id = CMat::identity(2, 2);
    let rep = basis_change_equivalence(&ChoiMatrix::identity(2), &id, 3).unwrap();
    assert_eq!(rep.intertwining_residual, 0.0);
}

#[test]
fn fourier_recombination_stays_cuntz_toeplitz() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = CMat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
    let p = ChoiMatrix::identity(2).transform_letters(&u).unwrap();
    let f = TruncatedFock::build(&p, 3).unwrap();
    let ops = creation_matrices(&f);
    assert!(cuntz_toeplitz_residual(&ops) < 1e-12);
    assert!(row_coisometry_residuals(&f, &ops).iter().all(|&r| r < 1e-12));
}

#[test]
fn report_for_builtins() {
    let cuntz = fock_report(&ChoiMatrix::by_name("cuntz", 2).unwrap(), 3).unwrap();
    assert_eq!(cuntz.quotient_dims, vec![1, 2, 4, 8]);
    assert!(cuntz.cuntz_toeplitz_residual.unwrap() < 1e-12);
    let collapse = fock_report(&ChoiMatrix::by_name("collapse", 2).unwrap(), 3).unwrap();
    assert_eq!(collapse.letters, 4);
    assert_eq!(collapse.quotient_dims, vec![1, 2, 4, 8]);
    assert!(collapse.cuntz_toeplitz_residual.is_none());
}

#[test]
fn orthogonal_bank_has_grid_multiplicity() {
    let mut rng = builtin::rng(35);
    let bank = builtin::random_orthogonal_bank(2, 1, &mut rng);
    let r = wavelet_creation_check(&bank, 8, 2).unwrap();
    assert_eq!(r.quotient_dims, vec![8, 16, 32]);
    assert!(r.max_item_residual() < 1e-9);
    assert!(r.norm_law_residual < 1e-9);
}

#[test]
fn random_biorthogonal_creation_relations() {
    let mut rng = builtin::rng(36);
    for n in 2..=3 {
        let bank = builtin::random_biorthogonal_bank(n, 1, &mut rng);
        let r = wavelet_creation_check(&bank, 8, 2).unwrap();
        assert!(r.max_item_residual() < 1e-9, "{r:?}");
        assert!(r.kernel_residual < 1e-10);
    }
}
