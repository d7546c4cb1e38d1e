use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rial_core::linalg::{gaussian, inner};
use rial_core::{
    build_nonlinear_test, build_sparse_cca, build_sparse_pca, generate_cca_data, generate_pca_data,
    CcaInstance, CompositeProblem, Mat, OracleCounter, PcaInstance,
};

/// Directional central difference of `L` along `v`, compared to `⟨∇L, v⟩`.
fn directional_error(p: &CompositeProblem, sigma: f64, z: &Mat, x: &Mat, v: &Mat) -> f64 {
    let c = OracleCounter::new();
    let t = 1e-6;
    let plus = p.al_value(sigma, z, &(x + v * t), &c).unwrap();
    let minus = p.al_value(sigma, z, &(x - v * t), &c).unwrap();
    let fd = (plus - minus) / (2.0 * t);
    let an = inner(&p.al_euclidean_gradient(sigma, z, x, &c).unwrap(), v);
    (fd - an).abs() / an.abs().max(1.0)
}

fn check_problem(p: &CompositeProblem, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = p.dual_shape();
    let (r, c) = p.manifold().shape();
    for trial in 0..20 {
        let sigma = [1.0, 10.0, 100.0][trial % 3];
        let x = p.manifold().random_point(rng.random());
        let z = gaussian(m, n, &mut rng) * 0.3;
        let v = gaussian(r, c, &mut rng);
        let v = &v / v.norm();
        let err = directional_error(p, sigma, &z, &x, &v);
        assert!(
            err <= 1e-5,
            "trial {trial}, σ={sigma}: relative error {err:e}"
        );
    }
}

#[test]
fn sparse_pca_al_gradient() {
    let inst = PcaInstance::new(generate_pca_data(30, 20, 1), 0.5, 3).unwrap();
    check_problem(&build_sparse_pca(&inst).unwrap(), 11);
}

#[test]
fn sparse_cca_al_gradient() {
    let (a, b) = generate_cca_data(60, 15, 15, 2);
    let inst = CcaInstance::new(a, b, 0.05, 0.05, 2).unwrap();
    check_problem(&build_sparse_cca(&inst).unwrap(), 12);
}

#[test]
fn nonlinear_al_gradient() {
    check_problem(&build_nonlinear_test(12, 3, 3).unwrap(), 13);
}

#[test]
fn smooth_parts_match_differences() {
    let problems = [
        build_sparse_pca(&PcaInstance::new(generate_pca_data(20, 10, 4), 0.0, 2).unwrap()).unwrap(),
        build_sparse_cca(&{
            let (a, b) = generate_cca_data(40, 6, 5, 5);
            CcaInstance::new(a, b, 0.0, 0.0, 2).unwrap()
        })
        .unwrap(),
    ];
    for p in &problems {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (r, c) = p.manifold().shape();
        let x = gaussian(r, c, &mut rng);
        let v = gaussian(r, c, &mut rng);
        let t = 1e-6;
        let f = p.smooth();
        let fd = (f.value(&(&x + &v * t)) - f.value(&(&x - &v * t))) / (2.0 * t);
        let an = inner(&f.gradient(&x), &v);
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
    }
}

#[test]
fn nonlinear_adjoint_matches_differences() {
    let p = build_nonlinear_test(10, 3, 8).unwrap();
    let a = p.mapping();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let x = gaussian(10, 3, &mut rng);
        let v = gaussian(10, 3, &mut rng);
        let z = gaussian(3, 3, &mut rng);
        let t = 1e-6;
        let fd = inner(&(a.apply(&(&x + &v * t)) - a.apply(&(&x - &v * t))), &z) / (2.0 * t);
        let an = inner(&v, &a.adjoint(&x, &z));
        assert!((fd - an).abs() <= 1e-4 * an.abs().max(1.0));
    }
}
