use homolag::clifford::{
    commutator, leibniz_determinant, mass_shell_determinant_residual, recovered_representation,
    rund_solve, vector_covariance_check, verify_lie_closure, CMat, Form, GammaSet, LieAlgebraSpec,
    C64,
};
use homolag::DVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `¼[γ^μ, γ^ν]`.
fn commutator_generator(gam: &GammaSet, mu: usize, nu: usize) -> CMat {
    commutator(&gam.gammas()[mu], &gam.gammas()[nu]) * C64::new(0.25, 0.0)
}

#[test]
fn lorentz_generators_are_quarter_commutators() {
    let gam = GammaSet::dirac(Form::Minkowski);
    let alg = LieAlgebraSpec::lorentz();
    let sol = rund_solve(&alg, &gam).unwrap();
    assert!(sol.feasible);
    assert!(sol.max_residual() <= 1e-10);
    for (x, (mu, nu)) in sol.generators.iter().zip(LieAlgebraSpec::all_pairs(4)) {
        assert!((x - commutator_generator(&gam, mu, nu)).norm() <= 1e-10);
        assert!(x.trace().norm() <= 1e-12);
    }
    assert!(verify_lie_closure(&sol, &alg) <= 1e-10);
    assert!(vector_covariance_check(&sol, &alg, &gam) <= 1e-10);
    // minimal norm picks the antisymmetric coefficients ±1/4
    let x01 = &sol.coefficients[0];
    assert!((x01[(0, 1)] - 0.25).abs() < 1e-12 && (x01[(1, 0)] + 0.25).abs() < 1e-12);
}

#[test]
fn kernel_is_the_identity_direction() {
    let sol = rund_solve(
        &LieAlgebraSpec::lorentz(),
        &GammaSet::dirac(Form::Minkowski),
    )
    .unwrap();
    assert_eq!(sol.kernel_dims, vec![1; 6]);
}

#[test]
fn rotation_subalgebra() {
    let gam = GammaSet::dirac(Form::Minkowski);
    let alg = LieAlgebraSpec::so3();
    let sol = rund_solve(&alg, &gam).unwrap();
    assert!(sol.max_residual() <= 1e-10);
    assert!(verify_lie_closure(&sol, &alg) <= 1e-10);
    for (x, (mu, nu)) in sol.generators.iter().zip([(1, 2), (1, 3), (2, 3)]) {
        assert!((x - commutator_generator(&gam, mu, nu)).norm() <= 1e-10);
    }
}

#[test]
fn euclidean_rotations_with_euclidean_gammas() {
    let gam = GammaSet::dirac(Form::Euclidean);
    let alg = LieAlgebraSpec::rotations(gam.form(), &LieAlgebraSpec::all_pairs(4)).unwrap();
    let sol = rund_solve(&alg, &gam).unwrap();
    assert!(sol.max_residual() <= 1e-10);
    assert!(verify_lie_closure(&sol, &alg) <= 1e-10);
    assert!(vector_covariance_check(&sol, &alg, &gam) <= 1e-10);
}

#[test]
fn abelian_trivial_solution() {
    let gam = GammaSet::dirac(Form::Minkowski);
    let alg = LieAlgebraSpec::abelian(4);
    let sol = rund_solve(&alg, &gam).unwrap();
    assert_eq!(sol.generators[0], CMat::zeros(4, 4));
    assert_eq!(verify_lie_closure(&sol, &alg), 0.0);
    assert_eq!(vector_covariance_check(&sol, &alg, &gam), 0.0);
}

#[test]
fn recovered_representation_preserves_the_form() {
    let gam = GammaSet::dirac(Form::Minkowski);
    let alg = LieAlgebraSpec::lorentz();
    let sol = rund_solve(&alg, &gam).unwrap();
    let eta = Form::Minkowski.matrix(4);
    for (rho, expected) in recovered_representation(&sol, &gam)
        .iter()
        .zip(alg.representation())
    {
        assert!((rho - expected).amax() <= 1e-10);
        assert!((rho.transpose() * &eta + &eta * rho).amax() <= 1e-10);
    }
}

#[test]
fn solvability_dichotomy() {
    let alg = LieAlgebraSpec::lorentz();
    let exact = GammaSet::dirac(Form::Minkowski);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut weakest = f64::INFINITY;
    for _ in 0..100 {
        assert!(rund_solve(&alg, &exact).unwrap().max_residual() <= 1e-10);
        let probe = exact.perturbed(1, 0.05, &mut rng).unwrap();
        let sol = rund_solve(&alg, &probe).unwrap();
        assert!(!sol.feasible);
        weakest = weakest.min(sol.max_residual());
        assert!(vector_covariance_check(&sol, &alg, &probe) >= 1e-3);
    }
    assert!(weakest >= 1e-4, "smallest perturbed residual {weakest:e}");
    // the larger probe clears 1e-3
    let probe = exact.perturbed(1, 0.1, &mut rng).unwrap();
    assert!(rund_solve(&alg, &probe).unwrap().max_residual() >= 1e-3);
}

#[test]
fn determinant_identity_sweep() {
    let gam = GammaSet::dirac(Form::Minkowski);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = DVec::zeros(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let pi = DVec::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
        let m = rng.gen_range(0.0..2.0);
        let h = gam.contract(&pi) - CMat::identity(4, 4) * C64::new(m, 0.0);
        let pi_sq = pi[0] * pi[0] - pi[1] * pi[1] - pi[2] * pi[2] - pi[3] * pi[3];
        let expected = (pi_sq - m * m).powi(2);
        let oracle = leibniz_determinant(&h);
        let scale = expected.abs().max(1.0);
        worst = worst.max((oracle - C64::new(expected, 0.0)).norm() / scale);
        worst = worst.max(mass_shell_determinant_residual(0.0, m, &z, &pi, &gam).unwrap() / scale);
    }
    assert!(worst <= 1e-9, "relative residual {worst:e}");
}

#[test]
fn on_shell_operator_is_singular() {
    let gam = GammaSet::dirac(Form::Minkowski);
    let m = 1.3;
    let k = DVec::from_vec(vec![0.4, -0.7, 0.2]);
    let e = (m * m + k.norm_squared()).sqrt();
    let pi = DVec::from_vec(vec![e, k[0], k[1], k[2]]);
    let h = gam.contract(&pi) - CMat::identity(4, 4) * C64::new(m, 0.0);
    assert!(leibniz_determinant(&h).norm() <= 1e-12);
    assert_eq!(h.rank(1e-10), 2);
}
