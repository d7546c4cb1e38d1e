use rial_core::{
    canonical_correlations, generate_cca_data_with, generate_pca_data, sparsity, CcaDataSpec,
    CcaInstance, Mat,
};

#[test]
fn pca_data_has_full_rank_spectrum() {
    let a = generate_pca_data(500, 50, 3);
    let eig = (&a * a.transpose()).symmetric_eigen().eigenvalues;
    let nonzero = eig.iter().filter(|&&l| l.abs() > 1e-8).count();
    assert_eq!(nonzero, 50);
}

fn top_correlation(snr: f64, seed: u64) -> f64 {
    let spec = CcaDataSpec {
        snr,
        ..CcaDataSpec::default()
    };
    let (a, b) = generate_cca_data_with(1000, 50, 50, spec, seed);
    let (saa, sbb, sab) = CcaInstance::new(a, b, 0.0, 0.0, 1).unwrap().covariances();
    canonical_correlations(&saa, &sbb, &sab).unwrap()[0]
}

#[test]
fn independent_blocks_have_weak_correlation() {
    let c = top_correlation(0.0, 1);
    assert!(c <= 0.5, "top correlation {c}");
}

#[test]
fn planted_blocks_have_strong_correlation() {
    let c = top_correlation(1.0, 1);
    assert!(c >= 0.5, "top correlation {c}");
}

#[test]
fn sparsity_examples() {
    assert_eq!(sparsity(&Mat::zeros(3, 2), 1e-5), 100.0);
    assert_eq!(sparsity(&Mat::from_element(3, 2, 1.0), 1e-5), 0.0);
    let x = Mat::from_row_slice(3, 2, &[0.0, 1.0, 1e-6, 2.0, 3.0, -1e-7]);
    assert_eq!(sparsity(&x, 1e-5), 50.0);
}
