use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::gaussian;
use crate::Mat;

/// `d × n` standard Gaussian matrix whose columns are centered and scaled to
/// unit norm. A single-row matrix is only normalized, since centering would
/// zero it.
pub fn generate_pca_data(d: usize, n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = gaussian(d, n, &mut rng);
    for mut col in a.column_iter_mut() {
        if d > 1 {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    a
}

/// Planted shared-latent model for CCA data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CcaDataSpec {
    /// Rank of the common latent signal.
    pub latent_rank: usize,
    /// Per-column signal-to-noise variance ratio; 0 gives independent blocks.
    pub snr: f64,
}

impl Default for CcaDataSpec {
    fn default() -> Self {
        CcaDataSpec {
            latent_rank: 5,
            snr: 1.0,
        }
    }
}

/// `(A, B)` with `A = √(snr/L) Z W_a + E_a`, `B = √(snr/L) Z W_b + E_b`, where
/// `Z` is a `d × L` Gaussian latent factor shared by both blocks and
/// everything else is independent standard Gaussian.
pub fn generate_cca_data_with(
    d: usize,
    p: usize,
    q: usize,
    spec: CcaDataSpec,
    seed: u64,
) -> (Mat, Mat) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent = spec.latent_rank.max(1);
    let z = gaussian(d, latent, &mut rng);
    let wa = gaussian(latent, p, &mut rng);
    let wb = gaussian(latent, q, &mut rng);
    let ea = gaussian(d, p, &mut rng);
    let eb = gaussian(d, q, &mut rng);
    let scale = (spec.snr.max(0.0) / latent as f64).sqrt();
    let a = &z * wa * scale + ea;
    let b = &z * wb * scale + eb;
    (a, b)
}

pub fn generate_cca_data(d: usize, p: usize, q: usize, seed: u64) -> (Mat, Mat) {
    generate_cca_data_with(d, p, q, CcaDataSpec::default(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pca_columns_are_unit_and_centered() {
        let a = generate_pca_data(40, 7, 3);
        for col in a.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
            assert!(col.mean().abs() < 1e-12);
        }
        assert_eq!(a, generate_pca_data(40, 7, 3));
        assert_ne!(a, generate_pca_data(40, 7, 4));
    }

    #[test]
    fn single_row_is_still_normalized() {
        let a = generate_pca_data(1, 3, 0);
        assert!(a.iter().all(|v| (v.abs() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn cca_data_is_deterministic() {
        let (a, b) = generate_cca_data(50, 4, 3, 9);
        assert_eq!(a.shape(), (50, 4));
        assert_eq!(b.shape(), (50, 3));
        assert_eq!((a, b), generate_cca_data(50, 4, 3, 9));
    }
}
